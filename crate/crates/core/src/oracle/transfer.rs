//! Exact transfer-matrix evaluation of the biased walk.

use crate::circuit::{Architecture, Gate};
use crate::hamiltonian::{HamiltonianSpec, SupportPattern};

use super::{check_support, support_mask, OracleError, OracleLimits};

/// Probability of every configuration, indexed by bitmask (bit `i` set means
/// site `i` carries `S`).
#[derive(Clone, Debug, PartialEq)]
pub struct StateDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl StateDistribution {
    /// Product measure with `Pr[S] = p_swap` on every site.
    pub fn product(n: usize, p_swap: f64) -> Self {
        let mut probs = Vec::with_capacity(1 << n);
        probs.push(1.0);
        for site in 0..n {
            let bit = 1usize << site;
            for i in 0..bit {
                let p = probs[i];
                probs[i] = p * (1.0 - p_swap);
                probs.push(p * p_swap);
            }
        }
        StateDistribution { n, probs }
    }

    /// `Γ^0` of the biased walk.
    pub fn initial_biased(n: usize, q: usize) -> Self {
        Self::product(n, 1.0 / (q as f64 + 1.0))
    }

    /// Applies one gate: mixed mass on the pair moves to `(S, S)` with
    /// probability `1/(q²+1)` and to `(I, I)` otherwise.
    pub fn apply_gate(&mut self, gate: Gate, q: usize) {
        let to_swap = 1.0 / ((q * q) as f64 + 1.0);
        let (a, b) = (1usize << gate.0, 1usize << gate.1);
        let both = a | b;
        for base in 0..self.probs.len() {
            if base & both != 0 {
                continue;
            }
            let mixed = self.probs[base | a] + self.probs[base | b];
            if mixed == 0.0 {
                continue;
            }
            self.probs[base | a] = 0.0;
            self.probs[base | b] = 0.0;
            self.probs[base | both] += mixed * to_swap;
            self.probs[base] += mixed * (1.0 - to_swap);
        }
    }

    /// Propagates the initial measure through `gates` without validation.
    pub fn propagate(n: usize, q: usize, gates: impl IntoIterator<Item = Gate>) -> Self {
        let mut dist = Self::initial_biased(n, q);
        for g in gates {
            dist.apply_gate(g, q);
        }
        dist
    }

    /// Final distribution `Γ^m` for a validated architecture.
    pub fn final_for(arch: &Architecture, limits: &OracleLimits) -> Result<Self, OracleError> {
        arch.check()?;
        if arch.n > limits.max_transfer_n {
            return Err(OracleError::TooManySites { n: arch.n, cap: limits.max_transfer_n });
        }
        Ok(Self::propagate(arch.n, arch.q, arch.gates()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Pr[mask ⊆ supp(Γ)]`
    pub fn containment_mass(&self, mask: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(c, _)| c & mask == mask)
            .map(|(_, p)| p)
            .sum()
    }

    /// `Pr[Γ = S^n]`
    pub fn absorbed(&self) -> f64 {
        self.probs[self.probs.len() - 1]
    }
}

/// Exact `g_x = Pr[supp(x) ⊆ supp(Γ^m)]` under the biased walk.
pub fn exact_gx(arch: &Architecture, x: &SupportPattern) -> Result<f64, OracleError> {
    check_support(x, arch.n)?;
    let dist = StateDistribution::final_for(arch, &OracleLimits::default())?;
    if x.is_empty() {
        return Ok(1.0);
    }
    Ok(dist.containment_mass(support_mask(x)))
}

/// Exact `Σ_x |c_x|² g_x` from a single propagation.
pub fn exact_second_moment(arch: &Architecture, spec: &HamiltonianSpec) -> Result<f64, OracleError> {
    if (arch.n, arch.q) != (spec.n(), spec.q()) {
        return Err(OracleError::Mismatch { arch: (arch.n, arch.q), spec: (spec.n(), spec.q()) });
    }
    let dist = StateDistribution::final_for(arch, &OracleLimits::default())?;
    Ok(spec
        .terms()
        .iter()
        .map(|t| t.coeff.norm_sqr() * dist.containment_mass(support_mask(&t.pattern)))
        .sum())
}

/// `Pr[Γ^m = S^n]` under the biased walk.
pub fn exact_absorption_probability(arch: &Architecture) -> Result<f64, OracleError> {
    Ok(StateDistribution::final_for(arch, &OracleLimits::default())?.absorbed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{brickwork_1d, random_architecture};
    use crate::hamiltonian::parse_pauli;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_gate(q: usize) -> Architecture {
        Architecture::new(2, q, vec![vec![Gate(0, 1)]])
    }

    fn z(sites: &[usize]) -> SupportPattern {
        SupportPattern::uniform(sites.iter().copied(), 3)
    }

    #[test]
    fn single_gate_values() {
        assert!((exact_gx(&single_gate(2), &z(&[0])).unwrap() - 0.2).abs() < 1e-12);
        assert!((exact_gx(&single_gate(2), &z(&[0, 1])).unwrap() - 0.2).abs() < 1e-12);
        assert!((exact_gx(&single_gate(3), &SupportPattern::uniform([1], 1)).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(exact_gx(&single_gate(2), &SupportPattern::empty()).unwrap(), 1.0);
    }

    #[test]
    fn second_moment_examples() {
        let arch = brickwork_1d(4, 2, 3).unwrap();
        let one = parse_pauli(&[("ZIII", Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(exact_second_moment(&arch, &one).unwrap(), exact_gx(&arch, &z(&[0])).unwrap());

        let two = parse_pauli(&[("ZIII", Complex64::new(1.0, 0.0)), ("IXXI", Complex64::new(2.0, 0.0))]).unwrap();
        let a = exact_gx(&arch, &z(&[0])).unwrap();
        let b = exact_gx(&arch, &z(&[1, 2])).unwrap();
        assert!((exact_second_moment(&arch, &two).unwrap() - (a + 4.0 * b)).abs() < 1e-15);

        let h = parse_pauli(&[("ZI", Complex64::new(1.0, 0.0)), ("ZZ", Complex64::new(1.0, 0.0))]).unwrap();
        assert!((exact_second_moment(&single_gate(2), &h).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn caps_and_mismatch() {
        let big = brickwork_1d(22, 2, 2).unwrap();
        assert!(matches!(exact_gx(&big, &z(&[0])), Err(OracleError::TooManySites { n: 22, cap: 20 })));
        let h = parse_pauli(&[("ZII", Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(exact_second_moment(&single_gate(2), &h), Err(OracleError::Mismatch { .. })));
        assert!(exact_gx(&single_gate(2), &z(&[2])).is_err());
    }

    #[test]
    fn normalized_after_every_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(2..=10);
            let q = rng.random_range(2..=4);
            let arch = random_architecture(n, q, rng.random_range(n.div_ceil(2)..=30), &mut rng).unwrap();
            let mut dist = StateDistribution::initial_biased(n, q);
            assert!((dist.total() - 1.0).abs() < 1e-12);
            for g in arch.gates() {
                dist.apply_gate(g, q);
                assert!((dist.total() - 1.0).abs() < 1e-12);
                assert!(dist.probs().iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn monotone_under_support_enlargement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let arch = random_architecture(6, 2, 12, &mut rng).unwrap();
            let dist = StateDistribution::final_for(&arch, &OracleLimits::default()).unwrap();
            for small in 0usize..64 {
                for extra in [1usize, 2, 4, 8, 16, 32] {
                    assert!(dist.containment_mass(small | extra) <= dist.containment_mass(small));
                }
            }
        }
    }

    #[test]
    fn absorption_examples() {
        let arch = brickwork_1d(4, 2, 6).unwrap();
        assert!(exact_absorption_probability(&arch).unwrap() <= 1.0 / 17.0);
        let empty = StateDistribution::propagate(4, 2, std::iter::empty());
        assert!((empty.absorbed() - 3f64.powi(-4)).abs() < 1e-15);
        // Saturation with depth.
        let deep: Vec<f64> = [30, 40, 50]
            .iter()
            .map(|&d| exact_absorption_probability(&brickwork_1d(4, 2, d).unwrap()).unwrap())
            .collect();
        assert!(deep.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    }
}
