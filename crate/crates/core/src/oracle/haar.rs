//! Haar-random circuits simulated on a statevector.
//!
//! With parameterized gates dropped, `g_x = E_V |⟨0|V† M_x V|0⟩|²` where `V`
//! is the product of independent Haar-random two-qudit gates in circuit
//! order.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::Architecture;
use crate::hamiltonian::{HamiltonianSpec, SupportPattern};
use crate::par::{self, Execution, MeanAccumulator, Substreams};
use crate::walk::{EstimateReport, Method};

use super::{check_support, OperatorBasis, OracleError, OracleLimits, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaarConfig {
    pub samples: u64,
    pub seed: u64,
    pub execution: Execution,
}

impl HaarConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        HaarConfig { samples, seed, execution: Execution::default() }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Haar-random `dim × dim` unitary, row-major: Gram–Schmidt on the columns
/// of a complex Ginibre matrix. The implied `R` has a positive real
/// diagonal, which is the phase fix that makes the result Haar distributed.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    for j in 0..dim {
        // two passes of modified Gram–Schmidt keep orthogonality at 1e-15
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj: Complex64 = done[k].iter().zip(&rest[0]).map(|(a, b)| a.conj() * b).sum();
                for (v, u) in rest[0].iter_mut().zip(&done[k]) {
                    *v -= proj * u;
                }
            }
        }
        let norm = cols[j].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in cols[j].iter_mut() {
            *v /= norm;
        }
    }
    let mut u = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            u[r * dim + c] = *v;
        }
    }
    u
}

fn check_dimension(arch: &Architecture, limits: &OracleLimits) -> Result<(), OracleError> {
    let cap = limits.max_statevector_dim;
    match u32::try_from(arch.n).ok().and_then(|n| arch.q.checked_pow(n)) {
        Some(d) if d <= cap => Ok(()),
        _ => Err(OracleError::DimensionTooLarge { q: arch.q, n: arch.n, cap }),
    }
}

fn check_basis(arch: &Architecture, basis: &OperatorBasis) -> Result<(), OracleError> {
    if basis.q() != arch.q {
        return Err(OracleError::BasisMismatch { basis: basis.q(), arch: arch.q });
    }
    Ok(())
}

fn random_circuit_state<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> StateVector {
    let mut psi = StateVector::zero(arch.n, arch.q);
    let d = arch.q * arch.q;
    for g in arch.gates() {
        let u = haar_unitary(d, rng);
        psi.apply_two(g.0, g.1, &u);
    }
    psi
}

/// Averages `|⟨ψ|M_x|ψ⟩|²` over `ψ = V|0^n⟩` for Haar-random gates `V`.
/// An empty `x` returns exactly 1.
pub fn haar_gx(
    arch: &Architecture,
    x: &SupportPattern,
    basis: &OperatorBasis,
    config: &HaarConfig,
) -> Result<EstimateReport, OracleError> {
    arch.check()?;
    check_basis(arch, basis)?;
    check_dimension(arch, &OracleLimits::default())?;
    check_support(x, arch.n)?;
    if config.samples == 0 {
        return Err(OracleError::ZeroSamples);
    }
    for (_, op) in x.entries() {
        basis.matrix(op)?;
    }
    if x.is_empty() {
        return Ok(EstimateReport {
            estimate: 1.0,
            std_error: 0.0,
            n_samples: config.samples,
            seed: config.seed,
            sum_c2: 1.0,
            method: Method::Haar,
        });
    }
    let streams = Substreams::new(config.seed);
    let acc = par::accumulate(config.samples, config.execution, |range| {
        let mut acc = MeanAccumulator::default();
        for i in range {
            let psi = random_circuit_state(arch, &mut streams.stream(i));
            let e = psi.expectation(x, basis).expect("operator indices checked");
            acc.push(e.norm_sqr());
        }
        acc
    });
    Ok(EstimateReport::from_accumulator(&acc, 1.0, config.seed, Method::Haar))
}

/// Averages `Re ⟨ψ| Σ c_x M_x |ψ⟩` over Haar-random circuits. Unlike
/// [`haar_first_moment`], identity terms (empty patterns) are allowed.
pub fn haar_mean_expectation(
    arch: &Architecture,
    terms: &[(SupportPattern, Complex64)],
    basis: &OperatorBasis,
    config: &HaarConfig,
) -> Result<EstimateReport, OracleError> {
    arch.check()?;
    check_basis(arch, basis)?;
    check_dimension(arch, &OracleLimits::default())?;
    if config.samples == 0 {
        return Err(OracleError::ZeroSamples);
    }
    for (x, _) in terms {
        check_support(x, arch.n)?;
        for (_, op) in x.entries() {
            basis.matrix(op)?;
        }
    }
    let sum_c2 = terms.iter().map(|(_, c)| c.norm_sqr()).sum();
    let streams = Substreams::new(config.seed);
    let acc = par::accumulate(config.samples, config.execution, |range| {
        let mut acc = MeanAccumulator::default();
        for i in range {
            let psi = random_circuit_state(arch, &mut streams.stream(i));
            let value: Complex64 = terms
                .iter()
                .map(|(x, c)| c * psi.expectation(x, basis).expect("operator indices checked"))
                .sum();
            acc.push(value.re);
        }
        acc
    });
    let mut report = EstimateReport::from_accumulator(&acc, 1.0, config.seed, Method::Haar);
    report.sum_c2 = sum_c2;
    Ok(report)
}

/// `E_V ⟨0|V† H V|0⟩` for a traceless `H`; zero in expectation.
pub fn haar_first_moment(
    arch: &Architecture,
    spec: &HamiltonianSpec,
    basis: &OperatorBasis,
    config: &HaarConfig,
) -> Result<EstimateReport, OracleError> {
    if (arch.n, arch.q) != (spec.n(), spec.q()) {
        return Err(OracleError::Mismatch { arch: (arch.n, arch.q), spec: (spec.n(), spec.q()) });
    }
    let terms: Vec<(SupportPattern, Complex64)> =
        spec.terms().iter().map(|t| (t.pattern.clone(), t.coeff)).collect();
    haar_mean_expectation(arch, &terms, basis, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::hamiltonian::parse_pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_gate() -> Architecture {
        Architecture::new(2, 2, vec![vec![Gate(0, 1)]])
    }

    #[test]
    fn unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2usize, 4, 9] {
            let u = haar_unitary(dim, &mut rng);
            for r in 0..dim {
                for c in 0..dim {
                    let v: Complex64 = (0..dim).map(|k| u[k * dim + r].conj() * u[k * dim + c]).sum();
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((v - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn haar_second_moment_of_matrix_entry() {
        // E|U_00|² = 1/D and E|U_00|⁴ = 2/(D(D+1)).
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = 4usize;
        let (mut m2, mut m4) = (MeanAccumulator::default(), MeanAccumulator::default());
        for _ in 0..40_000 {
            let u = haar_unitary(d, &mut rng);
            let p = u[0].norm_sqr();
            m2.push(p);
            m4.push(p * p);
        }
        assert!((m2.mean() - 0.25).abs() < 3.0 * m2.std_error());
        assert!((m4.mean() - 0.1).abs() < 3.0 * m4.std_error());
    }

    #[test]
    fn single_gate_gx() {
        // tr(AA†)/(D(D+1)) with D = 4 and tr(AA†) = 4 gives 1/5.
        let b = OperatorBasis::pauli();
        let cfg = HaarConfig::new(20_000, 5);
        for x in [SupportPattern::uniform([0], 3), SupportPattern::uniform([0, 1], 3)] {
            let r = haar_gx(&single_gate(), &x, &b, &cfg).unwrap();
            assert!((r.estimate - 0.2).abs() < 3.0 * r.std_error, "{r:?}");
        }
        let e = haar_gx(&single_gate(), &SupportPattern::empty(), &b, &cfg).unwrap();
        assert_eq!((e.estimate, e.std_error), (1.0, 0.0));
    }

    #[test]
    fn first_moment_and_offset() {
        let b = OperatorBasis::pauli();
        let cfg = HaarConfig::new(10_000, 6);
        let h = parse_pauli(&[("ZI", Complex64::new(1.0, 0.0))]).unwrap();
        let r = haar_first_moment(&single_gate(), &h, &b, &cfg).unwrap();
        assert!(r.estimate.abs() < 3.0 * r.std_error, "{r:?}");
        let shifted = [
            (SupportPattern::uniform([0], 3), Complex64::new(1.0, 0.0)),
            (SupportPattern::empty(), Complex64::new(0.7, 0.0)),
        ];
        let r = haar_mean_expectation(&single_gate(), &shifted, &b, &cfg).unwrap();
        assert!((r.estimate - 0.7).abs() < 3.0 * r.std_error, "{r:?}");
    }

    #[test]
    fn deterministic_across_execution() {
        let b = OperatorBasis::pauli();
        let arch = crate::circuit::brickwork_1d(4, 2, 3).unwrap();
        let x = SupportPattern::uniform([1], 1);
        let cfg = HaarConfig::new(3000, 8);
        let a = haar_gx(&arch, &x, &b, &cfg.with_execution(Execution::Sequential)).unwrap();
        let p = haar_gx(&arch, &x, &b, &cfg.with_execution(Execution::Parallel)).unwrap();
        assert_eq!(a, p);
    }

    #[test]
    fn guards() {
        let b = OperatorBasis::clock_shift(3);
        let x = SupportPattern::uniform([0], 1);
        assert!(matches!(
            haar_gx(&single_gate(), &x, &b, &HaarConfig::new(10, 0)),
            Err(OracleError::BasisMismatch { .. })
        ));
        let big = crate::circuit::brickwork_1d(22, 2, 1).unwrap();
        assert!(matches!(
            haar_gx(&big, &x, &OperatorBasis::pauli(), &HaarConfig::new(10, 0)),
            Err(OracleError::DimensionTooLarge { .. })
        ));
    }
}
