//! Single-site operator bases with `tr(M_i† M_j) = q δ_ij` and `M_0 = I`.

use num_complex::Complex64;

use crate::hamiltonian::BasisKind;

use super::OracleError;

/// Dense `q × q` basis matrices, row-major, indexed `0..q²` with index 0 the
/// identity.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    q: usize,
    kind: BasisKind,
    mats: Vec<Vec<Complex64>>,
}

impl OperatorBasis {
    /// `I, X, Y, Z` at indices 0, 1, 2, 3.
    pub fn pauli() -> Self {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        OperatorBasis {
            q: 2,
            kind: BasisKind::Pauli,
            mats: vec![vec![l, o, o, l], vec![o, l, l, o], vec![o, -i, i, o], vec![l, o, o, -l]],
        }
    }

    /// `Σ₁^a Σ₃^b` at index `a·q + b`, where `Σ₁|l⟩ = |l+1 mod q⟩` and
    /// `Σ₃|k⟩ = e^{2πik/q}|k⟩`.
    pub fn clock_shift(q: usize) -> Self {
        let mut mats = Vec::with_capacity(q * q);
        for a in 0..q {
            for b in 0..q {
                let mut m = vec![Complex64::new(0.0, 0.0); q * q];
                for l in 0..q {
                    let k = (l + a) % q;
                    let phase = 2.0 * std::f64::consts::PI * ((b * l) % q) as f64 / q as f64;
                    m[k * q + l] = Complex64::from_polar(1.0, phase);
                }
                mats.push(m);
            }
        }
        OperatorBasis { q, kind: BasisKind::ClockShift, mats }
    }

    pub fn for_kind(kind: BasisKind, q: usize) -> Result<Self, OracleError> {
        match kind {
            BasisKind::Pauli if q == 2 => Ok(Self::pauli()),
            BasisKind::Pauli => Err(OracleError::PauliNeedsQubits(q)),
            BasisKind::ClockShift => Ok(Self::clock_shift(q)),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn matrix(&self, index: usize) -> Result<&[Complex64], OracleError> {
        self.mats
            .get(index)
            .map(Vec::as_slice)
            .ok_or(OracleError::OperatorOutOfRange { index, q: self.q })
    }
}
