//! Entangling-gate architectures.
//!
//! An [`Architecture`] is the gate skeleton of a variational circuit with all
//! parameterized gates stripped out: `n` qudits of local dimension `q`, and an
//! ordered list of layers of two-site entangling gates. Parameterized gates
//! are carried only as metadata (their count and generator norms), since the
//! second moments computed by this crate do not depend on them.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on `n` for exact regular-connectivity enumeration.
pub const DEFAULT_MAX_EXACT_CONNECTIVITY_N: usize = 16;

/// Default generator norm `‖A_i‖` for a parameter with no explicit norm.
pub const DEFAULT_GENERATOR_NORM: f64 = 0.5;

/// A two-site entangling gate. Endpoints are unordered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate(pub usize, pub usize);

impl Gate {
    #[inline]
    pub fn sites(self) -> (usize, usize) {
        (self.0, self.1)
    }

    #[inline]
    pub fn touches(self, site: usize) -> bool {
        self.0 == site || self.1 == site
    }
}

/// Generator norms as written in architecture files: either one value per
/// parameter or a single value shared by all `p` parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorNorms {
    Uniform(f64),
    PerParameter(Vec<f64>),
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid architecture: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("architecture has depth 0")]
    ZeroDepth,
    #[error("support must be a nonempty proper subset of the {n} sites")]
    DegenerateCut { n: usize },
    #[error("support must be nonempty")]
    EmptySupport,
    #[error("site {site} out of range for n = {n}")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("brickwork needs an even number of sites >= 2, got n = {0}")]
    OddBrickwork(usize),
    #[error("brickwork needs depth >= 1")]
    BrickworkDepth,
    #[error("local dimension must be >= 2, got q = {0}")]
    Dimension(usize),
    #[error("cannot place {gates} gates on {n} sites so that every site is entangled")]
    CannotCover { n: usize, gates: usize },
    #[error("malformed architecture JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// One broken architecture invariant, with coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoSites,
    LocalDimension { q: usize },
    EndpointOutOfRange { layer: usize, gate: usize, site: usize },
    SelfLoop { layer: usize, gate: usize, site: usize },
    SiteRepeated { layer: usize, site: usize },
    SiteNeverEntangled { site: usize },
    GeneratorNormCount { expected: usize, found: usize },
    NegativeGeneratorNorm { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NoSites => write!(f, "architecture has no sites"),
            Violation::LocalDimension { q } => write!(f, "local dimension q = {q} is below 2"),
            Violation::EndpointOutOfRange { layer, gate, site } => {
                write!(f, "gate {gate} in layer {layer} touches site {site}, which is out of range")
            }
            Violation::SelfLoop { layer, gate, site } => {
                write!(f, "gate {gate} in layer {layer} acts twice on site {site}")
            }
            Violation::SiteRepeated { layer, site } => {
                write!(f, "site {site} repeated in layer {layer}")
            }
            Violation::SiteNeverEntangled { site } => write!(f, "site {site} never entangled"),
            Violation::GeneratorNormCount { expected, found } => {
                write!(f, "expected {expected} generator norms (one per parameter), found {found}")
            }
            Violation::NegativeGeneratorNorm { index } => {
                write!(f, "generator norm {index} is negative")
            }
        }
    }
}

/// Layered entangling-gate circuit on `n` qudits of dimension `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub n: usize,
    pub q: usize,
    pub layers: Vec<Vec<Gate>>,
    #[serde(rename = "p", default, skip_serializing_if = "Option::is_none")]
    pub param_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_norms: Option<GeneratorNorms>,
    /// Skip the "every site is entangled at least once" rule.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lenient: bool,
}

/// Gate count `m` and depth `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    pub m: usize,
    pub d: usize,
}

/// Number of gates crossing the cut between a support and its complement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CutStats {
    pub gates_crossing: usize,
    pub subset: BTreeSet<usize>,
}

/// Backward lightcone of a support region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lightcone {
    pub sites: BTreeSet<usize>,
    pub n_prime: usize,
}

impl Architecture {
    pub fn new(n: usize, q: usize, layers: Vec<Vec<Gate>>) -> Self {
        Architecture {
            n,
            q,
            layers,
            param_count: None,
            generator_norms: None,
            lenient: false,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, CircuitError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("architecture serializes")
    }

    /// All gates in application order: layer by layer, list order within a layer.
    pub fn gates(&self) -> impl Iterator<Item = Gate> + '_ {
        self.layers.iter().flatten().copied()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Every invariant violation; empty iff the architecture is admissible.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::NoSites);
        }
        if self.q < 2 {
            out.push(Violation::LocalDimension { q: self.q });
        }
        let mut touched = vec![false; self.n];
        for (li, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.n];
            for (gi, gate) in layer.iter().enumerate() {
                let (a, b) = gate.sites();
                if a == b {
                    out.push(Violation::SelfLoop { layer: li, gate: gi, site: a });
                }
                for site in [a, b] {
                    if site >= self.n {
                        out.push(Violation::EndpointOutOfRange { layer: li, gate: gi, site });
                    }
                }
                let distinct: &[usize] = if a == b { &[a] } else { &[a, b] };
                for &site in distinct {
                    if site < self.n {
                        if used[site] {
                            out.push(Violation::SiteRepeated { layer: li, site });
                        }
                        used[site] = true;
                        touched[site] = true;
                    }
                }
            }
        }
        if !self.lenient {
            out.extend(
                touched
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| !**t)
                    .map(|(site, _)| Violation::SiteNeverEntangled { site }),
            );
        }
        match (&self.generator_norms, self.param_count) {
            (Some(GeneratorNorms::PerParameter(v)), p) => {
                if let Some(p) = p {
                    if v.len() != p {
                        out.push(Violation::GeneratorNormCount { expected: p, found: v.len() });
                    }
                }
                out.extend(
                    v.iter()
                        .enumerate()
                        .filter(|(_, a)| a.is_nan() || **a < 0.0)
                        .map(|(index, _)| Violation::NegativeGeneratorNorm { index }),
                );
            }
            (Some(GeneratorNorms::Uniform(a)), _) if a.is_nan() || *a < 0.0 => {
                out.push(Violation::NegativeGeneratorNorm { index: 0 });
            }
            _ => {}
        }
        out
    }

    /// `Ok(())` iff [`validate`](Self::validate) reports nothing.
    pub fn check(&self) -> Result<(), CircuitError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CircuitError::Invalid(v))
        }
    }

    pub fn stats(&self) -> Result<CircuitStats, CircuitError> {
        self.check()?;
        Ok(CircuitStats { m: self.gate_count(), d: self.depth() })
    }

    /// `Σ_i ‖A_i‖²`, defaulting each norm to 1/2. `None` when the parameter
    /// count is needed but unknown.
    pub fn sum_generator_sq(&self) -> Option<f64> {
        match (&self.generator_norms, self.param_count) {
            (Some(GeneratorNorms::PerParameter(v)), _) => Some(v.iter().map(|a| a * a).sum()),
            (Some(GeneratorNorms::Uniform(a)), Some(p)) => Some(p as f64 * a * a),
            (None, Some(p)) => Some(p as f64 * DEFAULT_GENERATOR_NORM * DEFAULT_GENERATOR_NORM),
            (_, None) => None,
        }
    }

    /// Gates with exactly one endpoint in `support`.
    pub fn gates_crossing(&self, support: &BTreeSet<usize>) -> Result<CutStats, CircuitError> {
        self.check_sites(support)?;
        if support.is_empty() || support.len() >= self.n {
            return Err(CircuitError::DegenerateCut { n: self.n });
        }
        let count = self
            .gates()
            .filter(|g| support.contains(&g.0) != support.contains(&g.1))
            .count();
        Ok(CutStats { gates_crossing: count, subset: support.clone() })
    }

    /// Smallest `r` such that every window of `r` consecutive layers contains a
    /// gate crossing every proper cut. `Ok(None)` when `n > max_exact_n`.
    ///
    /// A cut that is never crossed yields `d + 1`: no window of the circuit
    /// guarantees a crossing, and `⌊d/r⌋ = 0` downstream.
    pub fn regular_connectivity(&self, max_exact_n: usize) -> Result<Option<usize>, CircuitError> {
        self.check()?;
        let d = self.depth();
        if d == 0 {
            return Err(CircuitError::ZeroDepth);
        }
        if self.n > max_exact_n || self.n > 63 {
            return Ok(None);
        }
        if self.n < 2 {
            return Ok(Some(1));
        }
        let layer_masks: Vec<Vec<(u64, u64)>> = self
            .layers
            .iter()
            .map(|l| l.iter().map(|g| (1u64 << g.0, 1u64 << g.1)).collect())
            .collect();
        let full = (1u64 << self.n) - 1;
        let mut worst_run = 0usize;
        // Cuts are symmetric under complement, so fix site 0 inside the subset.
        let mut mask = 1u64;
        while mask < full {
            let mut run = 0usize;
            for layer in &layer_masks {
                let crossed = layer
                    .iter()
                    .any(|&(a, b)| ((mask & a) == 0) != ((mask & b) == 0));
                if crossed {
                    run = 0;
                } else {
                    run += 1;
                    worst_run = worst_run.max(run);
                }
            }
            if worst_run == d {
                break;
            }
            mask += 2;
        }
        Ok(Some(worst_run + 1))
    }

    /// Sites that can influence `support` at the end of the circuit, found by
    /// walking the layers backwards.
    pub fn backward_lightcone(&self, support: &BTreeSet<usize>) -> Result<Lightcone, CircuitError> {
        if support.is_empty() {
            return Err(CircuitError::EmptySupport);
        }
        self.check_sites(support)?;
        let mut inside = vec![false; self.n];
        for &s in support {
            inside[s] = true;
        }
        for layer in self.layers.iter().rev() {
            // Gates within a layer act on disjoint sites, so order is irrelevant.
            for g in layer {
                if g.0 < self.n && g.1 < self.n && (inside[g.0] || inside[g.1]) {
                    inside[g.0] = true;
                    inside[g.1] = true;
                }
            }
        }
        let sites: BTreeSet<usize> = (0..self.n).filter(|&i| inside[i]).collect();
        let n_prime = sites.len();
        Ok(Lightcone { sites, n_prime })
    }

    fn check_sites(&self, support: &BTreeSet<usize>) -> Result<(), CircuitError> {
        match support.iter().find(|&&s| s >= self.n) {
            Some(&site) => Err(CircuitError::SiteOutOfRange { site, n: self.n }),
            None => Ok(()),
        }
    }
}

/// Periodic 1D brickwork: odd layers (1-based) pair `(2j, 2j+1)`, even layers
/// pair `(2j, 2j-1 mod n)`.
pub fn brickwork_1d(n: usize, q: usize, d: usize) -> Result<Architecture, CircuitError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(CircuitError::OddBrickwork(n));
    }
    if d == 0 {
        return Err(CircuitError::BrickworkDepth);
    }
    if q < 2 {
        return Err(CircuitError::Dimension(q));
    }
    let layers = (1..=d)
        .map(|t| {
            (0..n / 2)
                .map(|j| {
                    if t % 2 == 1 {
                        Gate(2 * j, 2 * j + 1)
                    } else {
                        Gate(2 * j, (2 * j + n - 1) % n)
                    }
                })
                .collect()
        })
        .collect();
    Ok(Architecture::new(n, q, layers))
}

/// Random admissible architecture with exactly `gates` entangling gates.
///
/// The first `⌈n/2⌉` gates pair a random permutation of the sites so that
/// coverage holds; the rest are uniformly random pairs. Gates are packed
/// into layers as early as their endpoints allow.
pub fn random_architecture<R: Rng + ?Sized>(
    n: usize,
    q: usize,
    gates: usize,
    rng: &mut R,
) -> Result<Architecture, CircuitError> {
    if q < 2 {
        return Err(CircuitError::Dimension(q));
    }
    if n < 2 || gates < n.div_ceil(2) {
        return Err(CircuitError::CannotCover { n, gates });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut list: Vec<Gate> = perm.chunks(2).map(|c| {
        if c.len() == 2 {
            Gate(c[0], c[1])
        } else {
            // odd n: pair the leftover site with anyone else
            let other = loop {
                let o = rng.random_range(0..n);
                if o != c[0] {
                    break o;
                }
            };
            Gate(c[0], other)
        }
    }).collect();
    while list.len() < gates {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        list.push(Gate(a, b));
    }
    list.shuffle(rng);

    let mut next_free = vec![0usize; n];
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    for g in list {
        let l = next_free[g.0].max(next_free[g.1]);
        if l == layers.len() {
            layers.push(Vec::new());
        }
        layers[l].push(g);
        next_free[g.0] = l + 1;
        next_free[g.1] = l + 1;
    }
    Ok(Architecture::new(n, q, layers))
}
