//! Brute-force sum over valid trajectories.
//!
//! `g_x = Σ_γ weight_x(γ)` with
//! `weight_x(γ) = (q/(q+1))^n q^{-|γ^m|} (q/(q²+1))^flips(γ) 1{supp(x) ⊆ supp(γ^m)}`.
//! Every initial configuration is enumerated, and every gate acting on a
//! mixed pair branches into `(S, S)` and `(I, I)`. Nothing here refers to
//! walk probabilities, so agreement with the transfer matrix is a genuine
//! cross-check.

use crate::circuit::{Architecture, Gate};
use crate::hamiltonian::SupportPattern;

use super::{check_support, support_mask, OracleError, OracleLimits};

/// Sums trajectory weights for `x` over a raw gate list. No validation
/// beyond the enumeration caps.
pub fn exact_gx_enumeration_gates(
    n: usize,
    q: usize,
    gates: &[Gate],
    x: &SupportPattern,
    limits: &OracleLimits,
) -> Result<f64, OracleError> {
    if n > limits.max_enum_n || gates.len() > limits.max_enum_m {
        return Err(OracleError::EnumerationTooLarge {
            n,
            m: gates.len(),
            max_n: limits.max_enum_n,
            max_m: limits.max_enum_m,
        });
    }
    check_support(x, n)?;
    let qf = q as f64;
    let flip_factor = qf / (qf * qf + 1.0);
    let mask = support_mask(x);
    let mut total = 0.0;
    for start in 0..(1usize << n) {
        total += branch(start, gates, mask, qf, flip_factor, 1.0);
    }
    Ok((qf / (qf + 1.0)).powi(n as i32) * total)
}

fn branch(config: usize, gates: &[Gate], mask: usize, q: f64, flip_factor: f64, weight: f64) -> f64 {
    let Some((g, rest)) = gates.split_first() else {
        if config & mask != mask {
            return 0.0;
        }
        return weight * q.powi(-(config.count_ones() as i32));
    };
    let (a, b) = (1usize << g.0, 1usize << g.1);
    let la = config & a != 0;
    let lb = config & b != 0;
    if la == lb {
        return branch(config, rest, mask, q, flip_factor, weight);
    }
    let w = weight * flip_factor;
    branch(config | a | b, rest, mask, q, flip_factor, w)
        + branch(config & !(a | b), rest, mask, q, flip_factor, w)
}

/// `g_x` by trajectory enumeration on a validated architecture
/// (default caps `n <= 8`, `m <= 12`).
pub fn exact_gx_enumeration(arch: &Architecture, x: &SupportPattern) -> Result<f64, OracleError> {
    arch.check()?;
    let gates: Vec<Gate> = arch.gates().collect();
    exact_gx_enumeration_gates(arch.n, arch.q, &gates, x, &OracleLimits::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::brickwork_1d;
    use crate::oracle::exact_gx;

    #[test]
    fn single_gate() {
        let arch = Architecture::new(2, 2, vec![vec![Gate(0, 1)]]);
        let g = exact_gx_enumeration(&arch, &SupportPattern::uniform([0], 3)).unwrap();
        assert!((g - 0.2).abs() < 1e-12);
        let g0 = exact_gx_enumeration(&arch, &SupportPattern::empty()).unwrap();
        assert!((g0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn untouched_sites_keep_initial_measure() {
        // Only the gate on (0, 1) survives truncation; x lives on sites 2, 3.
        let gates = [Gate(0, 1)];
        for q in [2usize, 3] {
            let x = SupportPattern::uniform([2, 3], 1);
            let g = exact_gx_enumeration_gates(4, q, &gates, &x, &OracleLimits::default()).unwrap();
            assert!((g - (q as f64 + 1.0).powi(-2)).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_transfer_on_brickwork() {
        let arch = brickwork_1d(4, 2, 2).unwrap();
        for s in 0..4 {
            let x = SupportPattern::uniform([s], 3);
            let a = exact_gx_enumeration(&arch, &x).unwrap();
            let b = exact_gx(&arch, &x).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn caps() {
        let arch = brickwork_1d(4, 2, 7).unwrap();
        assert!(matches!(
            exact_gx_enumeration(&arch, &SupportPattern::uniform([0], 3)),
            Err(OracleError::EnumerationTooLarge { m: 14, .. })
        ));
    }
}
