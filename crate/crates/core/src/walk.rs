//! Random walks on `{I, S}^n` label configurations and the Monte Carlo
//! estimators built on them.
//!
//! Each entangling gate acts on its two sites: equal labels are left alone,
//! and a mixed pair resolves to `(S, S)` or `(I, I)`. In the biased walk
//! sites start as `S` with probability `1/(q+1)` and a mixed pair becomes
//! `(S, S)` with probability `1/(q²+1)`. Then
//! `g_x = Pr[supp(x) ⊆ supp(Γ^m)]` exactly. The unbiased walk uses fair
//! coins everywhere and reweights each trajectory by
//! `val(γ) = (2q/(q+1))^n (2q/(q²+1))^flips(γ) q^{-|Γ^m|}`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Architecture, CircuitError, Gate};
use crate::hamiltonian::{HamiltonianError, HamiltonianSpec, SupportPattern};
use crate::par::{self, Execution, MeanAccumulator, Substreams};

#[derive(Debug, Error)]
pub enum WalkError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("support site {site} out of range for n = {n}")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("architecture has (n, q) = ({}, {}) but the Hamiltonian has ({}, {})", .arch.0, .arch.1, .spec.0, .spec.1)]
    Mismatch { arch: (usize, usize), spec: (usize, usize) },
    #[error("required sample count {0} does not fit in 64 bits")]
    SampleCountOverflow(f64),
}

/// Site labels packed into 64-bit words; a set bit means `S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn all_identity(n: usize) -> Self {
        Configuration { n, words: vec![0; n.div_ceil(64)] }
    }

    pub fn all_swap(n: usize) -> Self {
        let mut c = Self::all_identity(n);
        for i in 0..n {
            c.set(i, true);
        }
        c
    }

    pub fn from_labels(labels: &[bool]) -> Self {
        let mut c = Self::all_identity(labels.len());
        for (i, &s) in labels.iter().enumerate() {
            c.set(i, s);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn is_swap(&self, site: usize) -> bool {
        (self.words[site / 64] >> (site % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, site: usize, swap: bool) {
        let bit = 1u64 << (site % 64);
        if swap {
            self.words[site / 64] |= bit;
        } else {
            self.words[site / 64] &= !bit;
        }
    }

    /// `|Γ|`, the number of `S` labels.
    pub fn count_swap(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Whether every site set in `mask` carries `S`.
    #[inline]
    pub fn contains_mask(&self, mask: &[u64]) -> bool {
        mask.iter().zip(&self.words).all(|(m, w)| m & !w == 0)
    }

    pub fn contains_support(&self, x: &SupportPattern) -> bool {
        x.support().all(|s| s < self.n && self.is_swap(s))
    }

    /// Bitmask for `n <= 64`.
    pub fn as_u64(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if self.is_swap(i) { "S" } else { "I" })?;
        }
        Ok(())
    }
}

/// Which walk measure to simulate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    #[default]
    Biased,
    Unbiased,
}

impl WalkKind {
    fn initial_swap_prob(self, q: usize) -> f64 {
        match self {
            WalkKind::Biased => 1.0 / (q as f64 + 1.0),
            WalkKind::Unbiased => 0.5,
        }
    }

    fn resolve_swap_prob(self, q: usize) -> f64 {
        match self {
            WalkKind::Biased => 1.0 / ((q * q) as f64 + 1.0),
            WalkKind::Unbiased => 0.5,
        }
    }
}

/// Final configuration and flip count of one walk, with the full path
/// `Γ^0, …, Γ^m` when recording was requested.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub final_config: Configuration,
    pub flips: u64,
    pub history: Option<Vec<Configuration>>,
}

impl Trajectory {
    /// Importance weight `val(γ)` of this trajectory under the unbiased walk.
    pub fn val(&self, q: usize) -> f64 {
        unbiased_weight(self.final_config.len(), q, self.flips, self.final_config.count_swap())
    }
}

/// `(2q/(q+1))^n (2q/(q²+1))^flips q^{-swaps}`, evaluated in log space.
pub fn unbiased_weight(n: usize, q: usize, flips: u64, swaps: usize) -> f64 {
    let q = q as f64;
    let ln = n as f64 * (2.0 * q / (q + 1.0)).ln() + flips as f64 * (2.0 * q / (q * q + 1.0)).ln()
        - swaps as f64 * q.ln();
    ln.exp()
}

pub fn sample_initial<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Configuration {
    let mut c = Configuration::all_identity(n);
    fill_initial(&mut c, q, WalkKind::Biased, rng);
    c
}

fn fill_initial<R: Rng + ?Sized>(c: &mut Configuration, q: usize, kind: WalkKind, rng: &mut R) {
    let p = kind.initial_swap_prob(q);
    for i in 0..c.n {
        c.set(i, rng.random_bool(p));
    }
}

/// One biased gate action in place; returns whether a label flipped.
pub fn step_biased<R: Rng + ?Sized>(config: &mut Configuration, gate: Gate, q: usize, rng: &mut R) -> bool {
    step(config, gate, WalkKind::Biased.resolve_swap_prob(q), rng)
}

#[inline]
fn step<R: Rng + ?Sized>(config: &mut Configuration, gate: Gate, p_swap: f64, rng: &mut R) -> bool {
    let (a, b) = gate.sites();
    let la = config.is_swap(a);
    if la == config.is_swap(b) {
        return false;
    }
    let s = rng.random_bool(p_swap);
    config.set(a, s);
    config.set(b, s);
    true
}

fn walk_in_place<R: Rng + ?Sized>(
    gates: &[Gate],
    p_swap: f64,
    config: &mut Configuration,
    mut history: Option<&mut Vec<Configuration>>,
    rng: &mut R,
) -> u64 {
    let mut flips = 0;
    if let Some(h) = history.as_deref_mut() {
        h.push(config.clone());
    }
    for &g in gates {
        flips += u64::from(step(config, g, p_swap, rng));
        if let Some(h) = history.as_deref_mut() {
            h.push(config.clone());
        }
    }
    flips
}

/// Walks the gates of `arch` from a given start, without validating `arch`.
/// Gates apply in layer order, list order within a layer.
pub fn run_from<R: Rng + ?Sized>(
    arch: &Architecture,
    kind: WalkKind,
    start: Configuration,
    record_history: bool,
    rng: &mut R,
) -> Trajectory {
    let gates: Vec<Gate> = arch.gates().collect();
    let mut config = start;
    let mut history = record_history.then(Vec::new);
    let flips = walk_in_place(&gates, kind.resolve_swap_prob(arch.q), &mut config, history.as_mut(), rng);
    Trajectory { final_config: config, flips, history }
}

fn run<R: Rng + ?Sized>(arch: &Architecture, kind: WalkKind, rng: &mut R) -> Result<Trajectory, WalkError> {
    arch.check()?;
    let mut start = Configuration::all_identity(arch.n);
    fill_initial(&mut start, arch.q, kind, rng);
    Ok(run_from(arch, kind, start, false, rng))
}

/// Samples `Γ^0` and simulates the biased walk through every gate.
pub fn run_biased<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Trajectory, WalkError> {
    run(arch, WalkKind::Biased, rng)
}

pub fn run_unbiased<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Trajectory, WalkError> {
    run(arch, WalkKind::Unbiased, rng)
}

/// Report tag naming the estimator that produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Biased,
    Unbiased,
    Haar,
}

impl From<WalkKind> for Method {
    fn from(k: WalkKind) -> Self {
        match k {
            WalkKind::Biased => Method::Biased,
            WalkKind::Unbiased => Method::Unbiased,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub sample_override: Option<u64>,
    pub method: WalkKind,
    /// Score every term against each trajectory instead of drawing one term
    /// per sample. Lower variance, `O(#terms)` work per sample.
    pub reuse_trajectory: bool,
    pub execution: Execution,
}

impl EstimatorConfig {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Self {
        EstimatorConfig {
            epsilon,
            delta,
            seed,
            sample_override: None,
            method: WalkKind::Biased,
            reuse_trajectory: false,
            execution: Execution::default(),
        }
    }

    pub fn with_samples(mut self, n: u64) -> Self {
        self.sample_override = Some(n);
        self
    }

    pub fn with_method(mut self, method: WalkKind) -> Self {
        self.method = method;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_reuse_trajectory(mut self, reuse: bool) -> Self {
        self.reuse_trajectory = reuse;
        self
    }

    fn check(&self) -> Result<(), WalkError> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(WalkError::Epsilon(self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(WalkError::Delta(self.delta));
        }
        if self.sample_override == Some(0) {
            return Err(WalkError::ZeroSamples);
        }
        Ok(())
    }

    fn resolve_samples(&self, sum_c2: f64) -> Result<u64, WalkError> {
        match self.sample_override {
            Some(n) => Ok(n),
            None => sample_count(sum_c2, self.epsilon, self.delta),
        }
    }
}

/// Hoeffding sample count `⌈½ ln(2/δ) (Σ|c|²/ε)²⌉`, at least 1.
pub fn sample_count(sum_c2: f64, epsilon: f64, delta: f64) -> Result<u64, WalkError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(WalkError::Epsilon(epsilon));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(WalkError::Delta(delta));
    }
    let n = (0.5 * (2.0 / delta).ln() * (sum_c2 / epsilon).powi(2)).ceil();
    if n.is_nan() || n >= u64::MAX as f64 {
        return Err(WalkError::SampleCountOverflow(n));
    }
    Ok((n as u64).max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub sum_c2: f64,
    pub method: Method,
}

impl EstimateReport {
    pub(crate) fn from_accumulator(acc: &MeanAccumulator, scale: f64, seed: u64, method: Method) -> Self {
        EstimateReport {
            estimate: scale * acc.mean(),
            std_error: scale * acc.std_error(),
            n_samples: acc.count(),
            seed,
            sum_c2: scale,
            method,
        }
    }
}

fn check_support(x: &SupportPattern, n: usize) -> Result<(), WalkError> {
    match x.max_site() {
        Some(site) if site >= n => Err(WalkError::SiteOutOfRange { site, n }),
        _ => Ok(()),
    }
}

/// Monte Carlo estimate of `g_x` with the walk selected by `config.method`.
///
/// With no explicit sample count, uses the Hoeffding count for a single
/// unit-coefficient term. The biased walk short-circuits an empty `x` to
/// exactly 1.
pub fn estimate_gx(arch: &Architecture, x: &SupportPattern, config: &EstimatorConfig) -> Result<EstimateReport, WalkError> {
    config.check()?;
    arch.check()?;
    check_support(x, arch.n)?;
    let n_samples = config.resolve_samples(1.0)?;
    if x.is_empty() && config.method == WalkKind::Biased {
        return Ok(EstimateReport {
            estimate: 1.0,
            std_error: 0.0,
            n_samples,
            seed: config.seed,
            sum_c2: 1.0,
            method: Method::Biased,
        });
    }
    let gates: Vec<Gate> = arch.gates().collect();
    let mask = x.support_words(arch.n);
    let (n, q, kind) = (arch.n, arch.q, config.method);
    let p_swap = kind.resolve_swap_prob(q);
    let streams = Substreams::new(config.seed);
    let acc = par::accumulate(n_samples, config.execution, |range| {
        let mut acc = MeanAccumulator::default();
        let mut cfg = Configuration::all_identity(n);
        for i in range {
            let mut rng = streams.stream(i);
            fill_initial(&mut cfg, q, kind, &mut rng);
            let flips = walk_in_place(&gates, p_swap, &mut cfg, None, &mut rng);
            let hit = cfg.contains_mask(&mask);
            acc.push(match kind {
                WalkKind::Biased => f64::from(u8::from(hit)),
                WalkKind::Unbiased if hit => unbiased_weight(n, q, flips, cfg.count_swap()),
                WalkKind::Unbiased => 0.0,
            });
        }
        acc
    });
    Ok(EstimateReport::from_accumulator(&acc, 1.0, config.seed, kind.into()))
}

/// [`estimate_gx`] forced onto the importance-weighted unbiased walk.
pub fn estimate_gx_unbiased(arch: &Architecture, x: &SupportPattern, config: &EstimatorConfig) -> Result<EstimateReport, WalkError> {
    let cfg = config.clone().with_method(WalkKind::Unbiased);
    estimate_gx(arch, x, &cfg)
}

/// Estimates `E_V E_θ f² = Σ_x |c_x|² g_x`.
///
/// Each sample draws one trajectory and then one term `X` with
/// `Pr[X = x] ∝ |c_x|²`, and records `1{supp(X) ⊆ supp(Γ^m)}`
/// (times `val(Γ)` for the unbiased walk). The result is `Σ|c|²` times the
/// sample mean over `N = ⌈½ ln(2/δ)(Σ|c|²/ε)²⌉` samples unless overridden.
pub fn estimate_second_moment(
    arch: &Architecture,
    spec: &HamiltonianSpec,
    config: &EstimatorConfig,
) -> Result<EstimateReport, WalkError> {
    config.check()?;
    arch.check()?;
    if (arch.n, arch.q) != (spec.n(), spec.q()) {
        return Err(WalkError::Mismatch { arch: (arch.n, arch.q), spec: (spec.n(), spec.q()) });
    }
    let sum_c2 = spec.sum_c2();
    let n_samples = config.resolve_samples(sum_c2)?;
    let gates: Vec<Gate> = arch.gates().collect();
    let masks: Vec<Vec<u64>> = spec.terms().iter().map(|t| t.pattern.support_words(arch.n)).collect();
    let fractions: Vec<f64> = spec.terms().iter().map(|t| t.coeff.norm_sqr() / sum_c2).collect();
    let dist = spec.distribution();
    let (n, q, kind, reuse) = (arch.n, arch.q, config.method, config.reuse_trajectory);
    let p_swap = kind.resolve_swap_prob(q);
    let streams = Substreams::new(config.seed);
    let acc = par::accumulate(n_samples, config.execution, |range| {
        let mut acc = MeanAccumulator::default();
        let mut cfg = Configuration::all_identity(n);
        for i in range {
            let mut rng = streams.stream(i);
            fill_initial(&mut cfg, q, kind, &mut rng);
            let flips = walk_in_place(&gates, p_swap, &mut cfg, None, &mut rng);
            let score = if reuse {
                masks
                    .iter()
                    .zip(&fractions)
                    .filter(|(m, _)| cfg.contains_mask(m))
                    .map(|(_, f)| f)
                    .sum::<f64>()
            } else {
                // sum_c2 > 0 is guaranteed by HamiltonianSpec
                let t = dist.sample(&mut rng).expect("nonempty spec");
                f64::from(u8::from(cfg.contains_mask(&masks[t])))
            };
            acc.push(match kind {
                WalkKind::Biased => score,
                WalkKind::Unbiased if score > 0.0 => score * unbiased_weight(n, q, flips, cfg.count_swap()),
                WalkKind::Unbiased => 0.0,
            });
        }
        acc
    });
    Ok(EstimateReport::from_accumulator(&acc, sum_c2, config.seed, kind.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{brickwork_1d, random_architecture};
    use crate::hamiltonian::parse_pauli;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_gate(q: usize) -> Architecture {
        Architecture::new(2, q, vec![vec![Gate(0, 1)]])
    }

    fn within_3sigma(hits: usize, trials: usize, p: f64) -> bool {
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        (hits as f64 / trials as f64 - p).abs() < 3.0 * sigma
    }

    #[test]
    fn initial_swap_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| sample_initial(1, 2, &mut rng).is_swap(0)).count();
        assert!(within_3sigma(hits, draws, 1.0 / 3.0));
        let hits = (0..draws).filter(|_| sample_initial(1, 3, &mut rng).is_swap(0)).count();
        assert!(within_3sigma(hits, draws, 0.25));
        let probs: Vec<f64> = (2..10).map(|q| WalkKind::Biased.initial_swap_prob(q)).collect();
        assert!(probs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn step_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let mut ss = Configuration::all_swap(2);
            assert!(!step_biased(&mut ss, Gate(0, 1), 2, &mut rng));
            assert_eq!(ss, Configuration::all_swap(2));
            let mut ii = Configuration::all_identity(2);
            assert!(!step_biased(&mut ii, Gate(0, 1), 2, &mut rng));
            assert_eq!(ii, Configuration::all_identity(2));
        }
        let trials = 100_000;
        let mut to_swap = 0;
        for _ in 0..trials {
            let mut c = Configuration::from_labels(&[false, true]);
            assert!(step_biased(&mut c, Gate(0, 1), 2, &mut rng));
            assert_eq!(c.is_swap(0), c.is_swap(1));
            to_swap += usize::from(c.is_swap(0));
        }
        assert!(within_3sigma(to_swap, trials, 0.2));
    }

    #[test]
    fn fixed_points() {
        let arch = brickwork_1d(8, 2, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let t = run_from(&arch, WalkKind::Biased, Configuration::all_swap(8), true, &mut rng);
            assert_eq!(t.final_config, Configuration::all_swap(8));
            assert_eq!(t.flips, 0);
            assert!(t.history.unwrap().iter().all(|c| *c == Configuration::all_swap(8)));
            let t = run_from(&arch, WalkKind::Unbiased, Configuration::all_identity(8), false, &mut rng);
            assert_eq!(t.final_config, Configuration::all_identity(8));
        }
    }

    #[test]
    fn history_respects_gate_locality() {
        let arch = brickwork_1d(6, 2, 5).unwrap();
        let gates: Vec<Gate> = arch.gates().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            let start = sample_initial(6, 2, &mut rng);
            let t = run_from(&arch, WalkKind::Biased, start, true, &mut rng);
            let h = t.history.unwrap();
            assert_eq!(h.len(), gates.len() + 1);
            let mut flips = 0;
            for (w, g) in h.windows(2).zip(&gates) {
                for s in 0..6 {
                    if !g.touches(s) {
                        assert_eq!(w[0].is_swap(s), w[1].is_swap(s));
                    }
                }
                let before = (w[0].is_swap(g.0), w[0].is_swap(g.1));
                let after = (w[1].is_swap(g.0), w[1].is_swap(g.1));
                if before.0 == before.1 {
                    assert_eq!(before, after);
                } else {
                    assert_eq!(after.0, after.1);
                    flips += 1;
                }
            }
            assert_eq!(flips, t.flips);
            assert!(t.flips <= gates.len() as u64);
        }
    }

    #[test]
    fn single_gate_final_marginal() {
        let arch = single_gate(2);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let runs = 100_000;
        let hits = (0..runs)
            .filter(|_| run_biased(&arch, &mut rng).unwrap().final_config.is_swap(0))
            .count();
        assert!(within_3sigma(hits, runs, 0.2));
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(sample_count(2.0, 0.1, 0.05).unwrap(), 738);
        assert_eq!(sample_count(1.0, 0.05, 0.01).unwrap(), 1060);
        assert!(sample_count(1.0, 0.0, 0.1).is_err());
        assert!(sample_count(1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn gx_estimates() {
        let arch = single_gate(2);
        let cfg = EstimatorConfig::new(0.01, 0.01, 42).with_samples(100_000);
        let empty = estimate_gx(&arch, &SupportPattern::empty(), &cfg).unwrap();
        assert_eq!((empty.estimate, empty.std_error), (1.0, 0.0));
        for sites in [vec![0], vec![0, 1]] {
            let r = estimate_gx(&arch, &SupportPattern::uniform(sites, 3), &cfg).unwrap();
            assert!((r.estimate - 0.2).abs() < 3.0 * r.std_error, "{r:?}");
            assert_eq!(r.n_samples, 100_000);
        }
        assert!(matches!(
            estimate_gx(&arch, &SupportPattern::uniform([4], 1), &cfg),
            Err(WalkError::SiteOutOfRange { site: 4, n: 2 })
        ));
    }

    #[test]
    fn unbiased_gx_estimates() {
        let arch = single_gate(2);
        let cfg = EstimatorConfig::new(0.01, 0.01, 7).with_samples(100_000);
        let empty = estimate_gx_unbiased(&arch, &SupportPattern::empty(), &cfg).unwrap();
        assert!((empty.estimate - 1.0).abs() < 3.0 * empty.std_error, "{empty:?}");
        assert!(empty.std_error > 0.0);
        let r = estimate_gx_unbiased(&arch, &SupportPattern::uniform([0], 3), &cfg).unwrap();
        assert_eq!(r.method, Method::Unbiased);
        assert!((r.estimate - 0.2).abs() < 3.0 * r.std_error, "{r:?}");
    }

    #[test]
    fn unbiased_without_gates_is_initial_measure() {
        // val on an empty circuit: (2q/(q+1))^n q^{-|Γ|} over fair coins.
        let mut arch = Architecture::new(3, 2, vec![]);
        arch.lenient = true;
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut acc = MeanAccumulator::default();
        for _ in 0..100_000 {
            let mut start = Configuration::all_identity(3);
            fill_initial(&mut start, 2, WalkKind::Unbiased, &mut rng);
            let t = run_from(&arch, WalkKind::Unbiased, start, false, &mut rng);
            acc.push(if t.final_config.is_swap(1) { t.val(2) } else { 0.0 });
        }
        assert!((acc.mean() - 1.0 / 3.0).abs() < 3.0 * acc.std_error());
    }

    #[test]
    fn second_moment_examples() {
        let arch = single_gate(2);
        let h = parse_pauli(&[("ZI", Complex64::new(1.0, 0.0))]).unwrap();
        let cfg = EstimatorConfig::new(0.05, 0.01, 3);
        let r = estimate_second_moment(&arch, &h, &cfg).unwrap();
        assert_eq!(r.n_samples, 1060);
        assert!((r.estimate - 0.2).abs() < 0.05);

        let h2 = parse_pauli(&[("ZI", Complex64::new(1.0, 0.0)), ("IZ", Complex64::new(1.0, 0.0))]).unwrap();
        let r = estimate_second_moment(&arch, &h2, &cfg.clone().with_samples(50_000)).unwrap();
        assert_eq!(r.sum_c2, 2.0);
        assert!((r.estimate - 0.4).abs() < 3.0 * r.std_error, "{r:?}");

        let reuse = cfg.clone().with_samples(50_000).with_reuse_trajectory(true);
        let r2 = estimate_second_moment(&arch, &h2, &reuse).unwrap();
        assert!((r2.estimate - 0.4).abs() < 3.0 * r2.std_error);
    }

    #[test]
    fn second_moment_errors() {
        let arch = single_gate(2);
        let h = parse_pauli(&[("ZII", Complex64::new(1.0, 0.0))]).unwrap();
        let cfg = EstimatorConfig::new(0.05, 0.01, 3);
        assert!(matches!(estimate_second_moment(&arch, &h, &cfg), Err(WalkError::Mismatch { .. })));
        let h = parse_pauli(&[("ZI", Complex64::new(1.0, 0.0))]).unwrap();
        let bad = EstimatorConfig::new(-1.0, 0.01, 3);
        assert!(matches!(estimate_second_moment(&arch, &h, &bad), Err(WalkError::Epsilon(_))));
        let bad = EstimatorConfig::new(0.1, 1.5, 3);
        assert!(matches!(estimate_second_moment(&arch, &h, &bad), Err(WalkError::Delta(_))));
        let zero = EstimatorConfig::new(0.1, 0.1, 3).with_samples(0);
        assert!(matches!(estimate_second_moment(&arch, &h, &zero), Err(WalkError::ZeroSamples)));
    }

    #[test]
    fn determinism_across_execution_modes() {
        let arch = brickwork_1d(10, 2, 6).unwrap();
        let h = parse_pauli(&[("ZZIIIIIIII", Complex64::new(1.0, 0.0)), ("IIIIXIIIII", Complex64::new(0.5, 0.0))]).unwrap();
        for method in [WalkKind::Biased, WalkKind::Unbiased] {
            let base = EstimatorConfig::new(0.01, 0.05, 99).with_method(method).with_samples(20_000);
            let a = estimate_second_moment(&arch, &h, &base.clone().with_execution(Execution::Sequential)).unwrap();
            let b = estimate_second_moment(&arch, &h, &base.clone().with_execution(Execution::Parallel)).unwrap();
            let c = estimate_second_moment(&arch, &h, &base).unwrap();
            assert_eq!(a, b);
            assert_eq!(b, c);
        }
    }

    #[test]
    fn monotone_bias_on_swap_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let arch = random_architecture(6, 2, 10, &mut rng).unwrap();
            let (mut before, mut after) = (MeanAccumulator::default(), MeanAccumulator::default());
            for _ in 0..5000 {
                let start = sample_initial(6, 2, &mut rng);
                before.push(start.count_swap() as f64);
                let t = run_from(&arch, WalkKind::Biased, start, false, &mut rng);
                after.push(t.final_config.count_swap() as f64);
            }
            assert!(after.mean() <= before.mean());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gx_depends_only_on_support(seed in any::<u64>(), mask in 1u32..15, op_a in 1usize..4, op_b in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let arch = random_architecture(4, 2, 6, &mut rng).unwrap();
            let sites: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
            let x = SupportPattern::uniform(sites.clone(), op_a);
            let y = SupportPattern::uniform(sites, op_b);
            let cfg = EstimatorConfig::new(0.1, 0.1, seed).with_samples(2000);
            prop_assert_eq!(estimate_gx(&arch, &x, &cfg).unwrap(), estimate_gx(&arch, &y, &cfg).unwrap());
        }

        #[test]
        fn support_monotonicity(seed in any::<u64>(), small in 1u32..31, extra in 1u32..31) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let arch = random_architecture(5, 2, 8, &mut rng).unwrap();
            let big = small | extra;
            let to_pattern = |m: u32| SupportPattern::uniform((0..5).filter(move |i| m >> i & 1 == 1), 3);
            // Common random numbers: the indicator for the larger support is
            // pointwise <= the smaller one, so the estimates are ordered exactly.
            let cfg = EstimatorConfig::new(0.1, 0.1, seed).with_samples(3000);
            let gx = estimate_gx(&arch, &to_pattern(small), &cfg).unwrap();
            let gy = estimate_gx(&arch, &to_pattern(big), &cfg).unwrap();
            prop_assert!(gy.estimate <= gx.estimate);
        }
    }
}
