//! Closed-form bounds on `g_x`, on the absorption probability, and on the
//! mean squared gradient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("{name} must be a finite nonnegative number, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("need 1 <= |x| <= n, got |x| = {abs_x}, n = {n}")]
    SupportSize { abs_x: usize, n: usize },
    #[error("need 1 <= |x| <= k <= n, got |x| = {abs_x}, k = {k}, n = {n}")]
    Locality { abs_x: usize, k: usize, n: usize },
    #[error("local dimension q must be at least 2, got {0}")]
    LocalDimension(usize),
    #[error("depth must be at least {min}, got {d}")]
    Depth { d: usize, min: usize },
    #[error("regular connectivity r is unknown for this architecture; supply it explicitly")]
    MissingConnectivity,
    #[error("regular connectivity must be at least 1")]
    ZeroConnectivity,
    #[error("n must be at least 1")]
    NoSites,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    SecondMoment,
    GradientUpper,
    GeneralLower,
    GeneralUpper,
    OneDLower,
    OneDUpper,
    Absorption,
}

/// A bound value after capping at 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capped {
    pub value: f64,
    pub vacuous: bool,
}

impl Capped {
    fn from_raw(raw: f64) -> Self {
        if raw >= 1.0 || raw.is_nan() {
            Capped { value: 1.0, vacuous: true }
        } else {
            Capped { value: raw, vacuous: false }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundInputs {
    pub second_moment: f64,
    pub sum_generator_sq: f64,
    pub h_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lower: f64,
    pub upper: f64,
    pub lower_formula: BoundFormula,
    pub upper_formula: BoundFormula,
    pub vacuous_upper: bool,
    pub inputs: BTreeMap<String, f64>,
}

fn nonneg(name: &'static str, value: f64) -> Result<f64, BoundsError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(BoundsError::Negative { name, value })
    }
}

fn check_q(q: usize) -> Result<f64, BoundsError> {
    if q < 2 {
        return Err(BoundsError::LocalDimension(q));
    }
    Ok(q as f64)
}

fn check_abs_x(abs_x: usize, n: usize) -> Result<(), BoundsError> {
    if abs_x == 0 || abs_x > n {
        return Err(BoundsError::SupportSize { abs_x, n });
    }
    Ok(())
}

/// `1/(q^n + 1)`, correctly rounded while `q^n` is exact in an `f64` and
/// computed without overflow beyond.
fn inv_q_pow_plus_one(q: f64, n: usize) -> f64 {
    if let Some(p) = u32::try_from(n).ok().and_then(|n| (q as u64).checked_pow(n)) {
        if p < 1 << 53 {
            return 1.0 / (p + 1) as f64;
        }
    }
    let ln = n as f64 * q.ln();
    // 1/(e^ln + 1) = e^-ln / (1 + e^-ln)
    let t = (-ln).exp();
    t / (1.0 + t)
}

/// The interval `[v, 4 Σ‖A_i‖² ‖H‖ √v]` for `E_V E_θ ‖∇f‖²`.
pub fn gradient_interval(inp: &GradientBoundInputs) -> Result<BoundReport, BoundsError> {
    let v = nonneg("second_moment", inp.second_moment)?;
    let a = nonneg("sum_generator_sq", inp.sum_generator_sq)?;
    let h = nonneg("h_norm", inp.h_norm)?;
    let inputs = BTreeMap::from([
        ("second_moment".to_string(), v),
        ("sum_generator_sq".to_string(), a),
        ("h_norm".to_string(), h),
    ]);
    Ok(BoundReport {
        lower: v,
        upper: 4.0 * a * h * v.sqrt(),
        lower_formula: BoundFormula::SecondMoment,
        upper_formula: BoundFormula::GradientUpper,
        vacuous_upper: false,
        inputs,
    })
}

/// `max{(q+1)^{-|x|} (q²+1)^{-gates(x)}, (q+1)^{-n}}`
pub fn lower_general(q: usize, n: usize, abs_x: usize, gates_x: usize) -> Result<f64, BoundsError> {
    let qf = check_q(q)?;
    check_abs_x(abs_x, n)?;
    let local = -(abs_x as f64) * (qf + 1.0).ln() - gates_x as f64 * (qf * qf + 1.0).ln();
    let floor = -(n as f64) * (qf + 1.0).ln();
    Ok(local.max(floor).exp())
}

/// `(2q/(q+1))^n (2q/(q²+1))^{⌊d/r⌋} q^{-|x|} + (q^n+1)^{-1}`, capped at 1.
pub fn upper_general(q: usize, n: usize, abs_x: usize, d: usize, r: Option<usize>) -> Result<Capped, BoundsError> {
    let qf = check_q(q)?;
    check_abs_x(abs_x, n)?;
    let r = r.ok_or(BoundsError::MissingConnectivity)?;
    if r == 0 {
        return Err(BoundsError::ZeroConnectivity);
    }
    if d == 0 {
        return Err(BoundsError::Depth { d, min: 1 });
    }
    let ln = n as f64 * (2.0 * qf / (qf + 1.0)).ln() + (d / r) as f64 * (2.0 * qf / (qf * qf + 1.0)).ln()
        - abs_x as f64 * qf.ln();
    Ok(Capped::from_raw(ln.exp() + inv_q_pow_plus_one(qf, n)))
}

/// `max{(q+1)^{-k} (q²+1)^{-(d+1)}, (q+1)^{-n}}` for a support inside `k`
/// adjacent sites of the periodic brickwork.
pub fn lower_1d(q: usize, n: usize, k: usize, d: usize) -> Result<f64, BoundsError> {
    let qf = check_q(q)?;
    if k == 0 || k > n {
        return Err(BoundsError::Locality { abs_x: 1, k, n });
    }
    if d == 0 {
        return Err(BoundsError::Depth { d, min: 1 });
    }
    let local = -(k as f64) * (qf + 1.0).ln() - (d + 1) as f64 * (qf * qf + 1.0).ln();
    let floor = -(n as f64) * (qf + 1.0).ln();
    Ok(local.max(floor).exp())
}

/// Lightcone width `n′ = min(n, k + 2d)`.
pub fn lightcone_width(n: usize, k: usize, d: usize) -> usize {
    n.min(k.saturating_add(d.saturating_mul(2)))
}

/// `(q^{n′}+1)^{-1} + q^{-|x|} a^{d-1} n′ (1 + a^{d-1})^{n′}` with
/// `a = 2q/(q²+1)` and `n′ = min(n, k+2d)`, capped at 1. Needs `d ≥ 2`.
pub fn upper_1d(q: usize, n: usize, k: usize, abs_x: usize, d: usize) -> Result<Capped, BoundsError> {
    let qf = check_q(q)?;
    if abs_x == 0 || abs_x > k || k > n {
        return Err(BoundsError::Locality { abs_x, k, n });
    }
    if d < 2 {
        return Err(BoundsError::Depth { d, min: 2 });
    }
    let np = lightcone_width(n, k, d) as f64;
    let ln_decay = (d - 1) as f64 * (2.0 * qf / (qf * qf + 1.0)).ln();
    let ln = -(abs_x as f64) * qf.ln() + ln_decay + np.ln() + np * ln_decay.exp().ln_1p();
    Ok(Capped::from_raw(inv_q_pow_plus_one(qf, np as usize) + ln.exp()))
}

/// `(q^n+1)^{-1}`
pub fn absorption_bound(q: usize, n: usize) -> Result<f64, BoundsError> {
    let qf = check_q(q)?;
    if n == 0 {
        return Err(BoundsError::NoSites);
    }
    Ok(inv_q_pow_plus_one(qf, n))
}

/// Lower and upper bounds on `g_x` for an arbitrary architecture.
pub fn general_report(
    q: usize,
    n: usize,
    abs_x: usize,
    gates_x: usize,
    d: usize,
    r: Option<usize>,
) -> Result<BoundReport, BoundsError> {
    let lower = lower_general(q, n, abs_x, gates_x)?;
    let upper = upper_general(q, n, abs_x, d, r)?;
    let mut inputs = BTreeMap::from([
        ("q".to_string(), q as f64),
        ("n".to_string(), n as f64),
        ("abs_x".to_string(), abs_x as f64),
        ("gates_x".to_string(), gates_x as f64),
        ("d".to_string(), d as f64),
    ]);
    if let Some(r) = r {
        inputs.insert("r".to_string(), r as f64);
    }
    Ok(BoundReport {
        lower,
        upper: upper.value,
        lower_formula: BoundFormula::GeneralLower,
        upper_formula: BoundFormula::GeneralUpper,
        vacuous_upper: upper.vacuous,
        inputs,
    })
}

/// Lower and upper bounds on `g_x` for the 1D brickwork.
pub fn one_d_report(q: usize, n: usize, k: usize, abs_x: usize, d: usize) -> Result<BoundReport, BoundsError> {
    let lower = lower_1d(q, n, k, d)?;
    let upper = upper_1d(q, n, k, abs_x, d)?;
    let inputs = BTreeMap::from([
        ("q".to_string(), q as f64),
        ("n".to_string(), n as f64),
        ("k".to_string(), k as f64),
        ("abs_x".to_string(), abs_x as f64),
        ("d".to_string(), d as f64),
        ("n_prime".to_string(), lightcone_width(n, k, d) as f64),
    ]);
    Ok(BoundReport {
        lower,
        upper: upper.value,
        lower_formula: BoundFormula::OneDLower,
        upper_formula: BoundFormula::OneDUpper,
        vacuous_upper: upper.vacuous,
        inputs,
    })
}
