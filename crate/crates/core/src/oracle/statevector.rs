//! Dense qudit statevector. Amplitude index `Σ_i k_i q^i`, site 0 least
//! significant.

use num_complex::Complex64;

use crate::hamiltonian::SupportPattern;

use super::{OperatorBasis, OracleError};

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    q: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0^n⟩`
    pub fn zero(n: usize, q: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); q.pow(n as u32)];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, q, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn stride(&self, site: usize) -> usize {
        self.q.pow(site as u32)
    }

    /// Applies a `q × q` row-major matrix to `site`.
    pub fn apply_one(&mut self, site: usize, m: &[Complex64]) {
        let q = self.q;
        let s = self.stride(site);
        let mut buf = vec![Complex64::new(0.0, 0.0); q];
        for base in 0..self.amps.len() {
            if !(base / s).is_multiple_of(q) {
                continue;
            }
            for (k, b) in buf.iter_mut().enumerate() {
                *b = self.amps[base + k * s];
            }
            for k in 0..q {
                self.amps[base + k * s] = (0..q).map(|l| m[k * q + l] * buf[l]).sum();
            }
        }
    }

    /// Applies a `q² × q²` row-major matrix to sites `(a, b)`, local index
    /// `k_a · q + k_b`.
    pub fn apply_two(&mut self, a: usize, b: usize, u: &[Complex64]) {
        let q = self.q;
        let d = q * q;
        let (sa, sb) = (self.stride(a), self.stride(b));
        let mut buf = vec![Complex64::new(0.0, 0.0); d];
        let offsets: Vec<usize> = (0..d).map(|i| (i / q) * sa + (i % q) * sb).collect();
        for base in 0..self.amps.len() {
            if (base / sa) % q != 0 || (base / sb) % q != 0 {
                continue;
            }
            for (v, &o) in buf.iter_mut().zip(&offsets) {
                *v = self.amps[base + o];
            }
            for (r, &o) in offsets.iter().enumerate() {
                let row = &u[r * d..(r + 1) * d];
                self.amps[base + o] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
            }
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `⟨ψ| M_x |ψ⟩`
    pub fn expectation(&self, x: &SupportPattern, basis: &OperatorBasis) -> Result<Complex64, OracleError> {
        let mut phi = self.clone();
        for (site, op) in x.entries() {
            phi.apply_one(site, basis.matrix(op)?);
        }
        Ok(self.inner(&phi))
    }
}
