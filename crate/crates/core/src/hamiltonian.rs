//! Decomposition `H = Σ_x c_x M_x` over a tensor-product operator basis.
//!
//! Two basis conventions are supported. For qubits the Pauli basis uses
//! `X = 1, Y = 2, Z = 3`. For any `q` the clock/shift basis uses
//! `Σ₁^a Σ₃^b ↦ a·q + b`. Only the support of each term and `|c_x|²` enter
//! the random-walk estimators; the operator indices matter to the
//! statevector oracle alone.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("Pauli strings have mixed lengths ({0} and {1})")]
    MixedLengths(usize, usize),
    #[error("term {0} is proportional to the identity; H must be traceless")]
    IdentityTerm(usize),
    #[error("unknown Pauli letter {letter:?} in term {term}")]
    UnknownLetter { term: usize, letter: char },
    #[error("Pauli strings require q = 2, got q = {0}")]
    PauliNeedsQubits(usize),
    #[error("term {term}: site {site} has the identity exponent (0, 0)")]
    IdentityFactor { term: usize, site: usize },
    #[error("term {term}: exponent {exponent} out of range for q = {q}")]
    ExponentOutOfRange { term: usize, exponent: usize, q: usize },
    #[error("term {term}: operator index {index} out of range 1..{max}")]
    OperatorOutOfRange { term: usize, index: usize, max: usize },
    #[error("term {term}: site {site} out of range for n = {n}")]
    SiteOutOfRange { term: usize, site: usize, n: usize },
    #[error("term {term}: site {site} listed twice")]
    DuplicateSite { term: usize, site: usize },
    #[error("term {term}: {sites} sites but {ops} operator indices")]
    SitesOpsMismatch { term: usize, sites: usize, ops: usize },
    #[error("local dimension must be >= 2, got q = {0}")]
    Dimension(usize),
    #[error("Hamiltonian has no terms with nonzero coefficient")]
    Empty,
    #[error("Hamiltonian file must give exactly one of `terms` or `pauli_terms`")]
    AmbiguousFile,
    #[error("malformed Hamiltonian JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which single-site operator basis the indices of a [`SupportPattern`] refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Pauli,
    ClockShift,
}

impl BasisKind {
    pub fn default_for(q: usize) -> Self {
        if q == 2 {
            BasisKind::Pauli
        } else {
            BasisKind::ClockShift
        }
    }
}

/// Sparse term index `x`: site → non-identity basis index in `1..q²`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupportPattern {
    entries: BTreeMap<usize, usize>,
}

impl SupportPattern {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a pattern, dropping nothing: every entry must be non-identity.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let entries: BTreeMap<usize, usize> = entries.into_iter().collect();
        debug_assert!(entries.values().all(|&i| i != 0));
        SupportPattern { entries }
    }

    /// Pattern acting with operator index `op` on each listed site.
    pub fn uniform(sites: impl IntoIterator<Item = usize>, op: usize) -> Self {
        Self::from_entries(sites.into_iter().map(|s| (s, op)))
    }

    /// `|x|`
    pub fn weight(&self) -> usize {
        self.entries.len()
    }

    /// `supp(x)` in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|(&s, &o)| (s, o))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    /// Support as packed 64-bit words over `n` sites.
    pub fn support_words(&self, n: usize) -> Vec<u64> {
        let mut w = vec![0u64; n.div_ceil(64)];
        for s in self.support() {
            w[s / 64] |= 1u64 << (s % 64);
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub pattern: SupportPattern,
    pub coeff: Complex64,
}

/// Traceless observable as a list of distinct weighted basis terms.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    n: usize,
    q: usize,
    basis: BasisKind,
    terms: Vec<Term>,
    sum_c2: f64,
}

impl HamiltonianSpec {
    /// Checks every term, merges duplicate patterns by adding coefficients,
    /// and drops terms whose coefficient is exactly zero.
    pub fn new(n: usize, q: usize, basis: BasisKind, raw: Vec<Term>) -> Result<Self, HamiltonianError> {
        if q < 2 {
            return Err(HamiltonianError::Dimension(q));
        }
        let max_op = q * q;
        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        let mut index: BTreeMap<SupportPattern, usize> = BTreeMap::new();
        for (i, t) in raw.into_iter().enumerate() {
            if t.pattern.is_empty() {
                return Err(HamiltonianError::IdentityTerm(i));
            }
            for (site, op) in t.pattern.entries() {
                if site >= n {
                    return Err(HamiltonianError::SiteOutOfRange { term: i, site, n });
                }
                if op == 0 || op >= max_op {
                    return Err(HamiltonianError::OperatorOutOfRange { term: i, index: op, max: max_op });
                }
            }
            match index.get(&t.pattern) {
                Some(&j) => {
                    log::warn!("duplicate term {i} merged into an earlier identical pattern");
                    merged[j].coeff += t.coeff;
                }
                None => {
                    index.insert(t.pattern.clone(), merged.len());
                    merged.push(t);
                }
            }
        }
        merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        if merged.is_empty() {
            return Err(HamiltonianError::Empty);
        }
        let sum_c2 = merged.iter().map(|t| t.coeff.norm_sqr()).sum();
        Ok(HamiltonianSpec { n, q, basis, terms: merged, sum_c2 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `Σ_x |c_x|²`
    pub fn sum_c2(&self) -> f64 {
        self.sum_c2
    }

    /// `Σ_x |c_x|`, an upper bound on `‖H‖` since every `M_x` is unitary.
    pub fn operator_norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn distribution(&self) -> TermDistribution {
        TermDistribution::new(self.terms.iter().map(|t| t.coeff.norm_sqr()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, HamiltonianError> {
        let file: HamiltonianFile = serde_json::from_str(s)?;
        file.into_spec()
    }

    /// Canonical JSON (explicit `terms` form).
    pub fn to_json_string(&self) -> String {
        let file = HamiltonianFile {
            n: self.n,
            q: self.q,
            basis: Some(self.basis),
            terms: Some(
                self.terms
                    .iter()
                    .map(|t| TermRecord {
                        sites: t.pattern.support().collect(),
                        ops: t.pattern.entries().map(|(_, o)| o).collect(),
                        coeff: Coeff::Pair([t.coeff.re, t.coeff.im]),
                    })
                    .collect(),
            ),
            pauli_terms: None,
        };
        serde_json::to_string(&file).expect("hamiltonian serializes")
    }
}

/// Parses `(string, coefficient)` pairs over `{I, X, Y, Z}`.
pub fn parse_pauli<S: AsRef<str>>(strings: &[(S, Complex64)]) -> Result<HamiltonianSpec, HamiltonianError> {
    let mut n = None;
    let mut terms = Vec::with_capacity(strings.len());
    for (i, (s, c)) in strings.iter().enumerate() {
        let s = s.as_ref();
        let len = s.chars().count();
        match n {
            None => n = Some(len),
            Some(m) if m != len => return Err(HamiltonianError::MixedLengths(m, len)),
            _ => {}
        }
        let mut entries = Vec::new();
        for (site, ch) in s.chars().enumerate() {
            let op = match ch.to_ascii_uppercase() {
                'I' => continue,
                'X' => 1,
                'Y' => 2,
                'Z' => 3,
                letter => return Err(HamiltonianError::UnknownLetter { term: i, letter }),
            };
            entries.push((site, op));
        }
        if entries.is_empty() {
            return Err(HamiltonianError::IdentityTerm(i));
        }
        terms.push(Term { pattern: SupportPattern::from_entries(entries), coeff: *c });
    }
    HamiltonianSpec::new(n.unwrap_or(0), 2, BasisKind::Pauli, terms)
}

/// Site to `(a, b)` exponents of `Σ₁^a Σ₃^b`.
pub type ClockShiftFactors = BTreeMap<usize, (usize, usize)>;

/// Parses clock/shift products: each term maps sites to exponents `(a, b)`
/// of `Σ₁^a Σ₃^b`, stored as index `a·q + b`.
pub fn parse_clock_shift(
    terms: &[(ClockShiftFactors, Complex64)],
    n: usize,
    q: usize,
) -> Result<HamiltonianSpec, HamiltonianError> {
    if q < 2 {
        return Err(HamiltonianError::Dimension(q));
    }
    let mut out = Vec::with_capacity(terms.len());
    for (i, (map, c)) in terms.iter().enumerate() {
        let mut entries = Vec::with_capacity(map.len());
        for (&site, &(a, b)) in map {
            for e in [a, b] {
                if e >= q {
                    return Err(HamiltonianError::ExponentOutOfRange { term: i, exponent: e, q });
                }
            }
            if (a, b) == (0, 0) {
                return Err(HamiltonianError::IdentityFactor { term: i, site });
            }
            entries.push((site, a * q + b));
        }
        if entries.is_empty() {
            return Err(HamiltonianError::IdentityTerm(i));
        }
        out.push(Term { pattern: SupportPattern::from_entries(entries), coeff: *c });
    }
    HamiltonianSpec::new(n, q, BasisKind::ClockShift, out)
}

/// Cumulative `|c_x|²` weights for drawing `X` with `Pr[X = x] ∝ |c_x|²`.
#[derive(Clone, Debug)]
pub struct TermDistribution {
    cumulative: Vec<f64>,
}

impl TermDistribution {
    pub fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        TermDistribution { cumulative }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Index of the drawn term.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, HamiltonianError> {
        let total = self.total();
        if self.cumulative.is_empty() || total.is_nan() || total <= 0.0 {
            return Err(HamiltonianError::Empty);
        }
        if self.cumulative.len() == 1 {
            return Ok(0);
        }
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        Ok(i.min(self.cumulative.len() - 1))
    }
}

/// Draws a term of `spec` with probability `|c_x|² / Σ|c|²`.
pub fn sample_term<'a, R: Rng + ?Sized>(
    spec: &'a HamiltonianSpec,
    dist: &TermDistribution,
    rng: &mut R,
) -> Result<&'a SupportPattern, HamiltonianError> {
    Ok(&spec.terms[dist.sample(rng)?].pattern)
}

#[derive(Serialize, Deserialize)]
struct HamiltonianFile {
    n: usize,
    q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<BasisKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<TermRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pauli_terms: Option<Vec<(String, Coeff)>>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    sites: Vec<usize>,
    ops: Vec<usize>,
    coeff: Coeff,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Coeff {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Coeff> for Complex64 {
    fn from(c: Coeff) -> Self {
        match c {
            Coeff::Real(re) => Complex64::new(re, 0.0),
            Coeff::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl HamiltonianFile {
    fn into_spec(self) -> Result<HamiltonianSpec, HamiltonianError> {
        match (self.terms, self.pauli_terms) {
            (Some(records), None) => {
                let mut terms = Vec::with_capacity(records.len());
                for (i, r) in records.into_iter().enumerate() {
                    if r.sites.len() != r.ops.len() {
                        return Err(HamiltonianError::SitesOpsMismatch {
                            term: i,
                            sites: r.sites.len(),
                            ops: r.ops.len(),
                        });
                    }
                    let mut entries = BTreeMap::new();
                    for (&s, &o) in r.sites.iter().zip(&r.ops) {
                        if o == 0 {
                            continue;
                        }
                        if entries.insert(s, o).is_some() {
                            return Err(HamiltonianError::DuplicateSite { term: i, site: s });
                        }
                    }
                    terms.push(Term { pattern: SupportPattern { entries }, coeff: r.coeff.into() });
                }
                let basis = self.basis.unwrap_or_else(|| BasisKind::default_for(self.q));
                HamiltonianSpec::new(self.n, self.q, basis, terms)
            }
            (None, Some(pauli)) => {
                if self.q != 2 {
                    return Err(HamiltonianError::PauliNeedsQubits(self.q));
                }
                let pairs: Vec<(String, Complex64)> =
                    pauli.into_iter().map(|(s, c)| (s, c.into())).collect();
                if let Some((s, _)) = pairs.first() {
                    let len = s.chars().count();
                    if len != self.n {
                        return Err(HamiltonianError::MixedLengths(self.n, len));
                    }
                }
                parse_pauli(&pairs)
            }
            _ => Err(HamiltonianError::AmbiguousFile),
        }
    }
}
