//! Depth sweeps over the periodic 1D brickwork.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{self, BoundsError};
use crate::circuit::{brickwork_1d, CircuitError};
use crate::hamiltonian::{HamiltonianSpec, SupportPattern};
use crate::oracle::{exact_second_moment, OracleError, OracleLimits};
use crate::walk::{estimate_second_moment, EstimatorConfig, WalkError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("depth range [{d_min}, {d_max}] is invalid; the 1D upper bound needs d >= 2")]
    DepthRange { d_min: usize, d_max: usize },
    #[error("k = {k} is smaller than the width {width} of term {term}")]
    LocalityTooSmall { k: usize, width: usize, term: usize },
    #[error("sweep has (n, q) = ({}, {}) but the Hamiltonian has ({}, {})", .sweep.0, .sweep.1, .spec.0, .spec.1)]
    Mismatch { sweep: (usize, usize), spec: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub q: usize,
    /// Locality used in the 1D bounds. `None` uses each term's own width.
    pub k: Option<usize>,
    pub d_min: usize,
    pub d_max: usize,
    /// Shared by every depth.
    pub estimator: EstimatorConfig,
    /// Fill the `exact` column when `n` is within the transfer cap.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
    pub vacuous_upper: bool,
}

/// Length of the shortest arc of the ring `0..n` containing every site of
/// `x`.
pub fn periodic_width(x: &SupportPattern, n: usize) -> usize {
    let sites: Vec<usize> = x.support().collect();
    if sites.len() <= 1 {
        return sites.len();
    }
    let largest_gap = sites
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(sites[0] + n - sites[sites.len() - 1]))
        .max()
        .unwrap_or(0);
    n - largest_gap + 1
}

fn term_localities(spec: &HamiltonianSpec, k: Option<usize>) -> Result<Vec<usize>, SweepError> {
    spec.terms()
        .iter()
        .enumerate()
        .map(|(term, t)| {
            let width = periodic_width(&t.pattern, spec.n());
            match k {
                Some(k) if k < width => Err(SweepError::LocalityTooSmall { k, width, term }),
                Some(k) => Ok(k),
                None => Ok(width),
            }
        })
        .collect()
}

/// One row per depth in `d_min..=d_max`. Bounds are `Σ|c_x|²` times the
/// per-term 1D bounds.
pub fn run_sweep(config: &SweepConfig, spec: &HamiltonianSpec) -> Result<Vec<SweepRow>, SweepError> {
    if config.d_min < 2 || config.d_min > config.d_max {
        return Err(SweepError::DepthRange { d_min: config.d_min, d_max: config.d_max });
    }
    if (config.n, config.q) != (spec.n(), spec.q()) {
        return Err(SweepError::Mismatch { sweep: (config.n, config.q), spec: (spec.n(), spec.q()) });
    }
    let ks = term_localities(spec, config.k)?;
    let with_exact = config.exact && config.n <= OracleLimits::default().max_transfer_n;
    let mut rows = Vec::with_capacity(config.d_max - config.d_min + 1);
    for d in config.d_min..=config.d_max {
        let arch = brickwork_1d(config.n, config.q, d)?;
        let report = estimate_second_moment(&arch, spec, &config.estimator)?;
        let (mut lower, mut upper, mut vacuous) = (0.0, 0.0, false);
        for (t, &k) in spec.terms().iter().zip(&ks) {
            let c2 = t.coeff.norm_sqr();
            lower += c2 * bounds::lower_1d(config.q, config.n, k, d)?;
            let u = bounds::upper_1d(config.q, config.n, k, t.pattern.weight(), d)?;
            upper += c2 * u.value;
            vacuous |= u.vacuous;
        }
        let exact = if with_exact { Some(exact_second_moment(&arch, spec)?) } else { None };
        log::info!("d = {d}: estimate {:.6e} ± {:.2e}", report.estimate, report.std_error);
        rows.push(SweepRow {
            d,
            estimate: report.estimate,
            std_error: report.std_error,
            lower,
            upper,
            exact,
            vacuous_upper: vacuous,
        });
    }
    warn_if_not_monotone(&rows);
    Ok(rows)
}

fn warn_if_not_monotone(rows: &[SweepRow]) {
    for w in rows.windows(2) {
        if let (Some(a), Some(b)) = (w[0].exact, w[1].exact) {
            if b > a * (1.0 + 1e-12) {
                log::warn!("exact second moment increased from d = {} to d = {}: {a:e} -> {b:e}", w[0].d, w[1].d);
            }
        }
    }
}
