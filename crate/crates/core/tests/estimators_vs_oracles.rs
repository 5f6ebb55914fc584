use num_complex::Complex64;
use plateau_core::circuit::{brickwork_1d, random_architecture, Architecture};
use plateau_core::hamiltonian::{parse_pauli, HamiltonianSpec, SupportPattern};
use plateau_core::oracle::{exact_gx, exact_second_moment, haar_gx, HaarConfig, OperatorBasis};
use plateau_core::walk::{estimate_gx, estimate_second_moment, EstimatorConfig, WalkKind};
use plateau_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn within(est: f64, se: f64, exact: f64, k: f64) -> bool {
    (est - exact).abs() <= k * se.max(1e-12)
}

#[test]
fn second_moment_matches_exact_on_brickwork() {
    let h = parse_pauli(&[("ZIIIII", Complex64::new(1.0, 0.0)), ("IXXIII", Complex64::new(0.0, 0.5))]).unwrap();
    for d in [2, 4, 7] {
        let arch = brickwork_1d(6, 2, d).unwrap();
        let exact = exact_second_moment(&arch, &h).unwrap();
        for kind in [WalkKind::Biased, WalkKind::Unbiased] {
            for reuse in [false, true] {
                let cfg = EstimatorConfig::new(0.01, 0.05, d as u64)
                    .with_samples(30_000)
                    .with_method(kind)
                    .with_reuse_trajectory(reuse);
                let r = estimate_second_moment(&arch, &h, &cfg).unwrap();
                assert!(within(r.estimate, r.std_error, exact, 4.0), "d={d} {kind:?} reuse={reuse}: {r:?} vs {exact}");
            }
        }
    }
}

#[test]
fn second_moment_decomposes_by_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n: usize = rng.random_range(2..=7);
        let m = rng.random_range(n.div_ceil(2)..=12);
        let arch = random_architecture(n, 2, m, &mut rng).unwrap();
        let strings: Vec<(String, Complex64)> = (0..3)
            .map(|_| {
                let mut s: Vec<char> = (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect();
                s[rng.random_range(0..n)] = 'Z';
                (s.into_iter().collect(), Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            })
            .collect();
        let spec = parse_pauli(&strings).unwrap();
        let direct: f64 = spec
            .terms()
            .iter()
            .map(|t| t.coeff.norm_sqr() * exact_gx(&arch, &t.pattern).unwrap())
            .sum();
        assert!((direct - exact_second_moment(&arch, &spec).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn haar_matches_walk_on_qutrits() {
    let arch = Architecture::new(3, 3, vec![vec![plateau_core::Gate(0, 1)], vec![plateau_core::Gate(1, 2)]]);
    let basis = OperatorBasis::clock_shift(3);
    let x = SupportPattern::from_entries([(0, 4), (2, 1)]);
    let h = haar_gx(&arch, &x, &basis, &HaarConfig::new(8000, 3)).unwrap();
    let e = exact_gx(&arch, &x).unwrap();
    assert!(within(h.estimate, h.std_error, e, 4.0), "{h:?} vs {e}");
}

#[test]
fn execution_modes_are_bit_identical() {
    let arch = brickwork_1d(10, 3, 5).unwrap();
    let x = SupportPattern::uniform([2, 3], 1);
    let base = EstimatorConfig::new(0.01, 0.05, 99).with_samples(5000);
    for kind in [WalkKind::Biased, WalkKind::Unbiased] {
        let seq = estimate_gx(&arch, &x, &base.clone().with_method(kind).with_execution(Execution::Sequential)).unwrap();
        let par = estimate_gx(&arch, &x, &base.clone().with_method(kind).with_execution(Execution::Parallel)).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn json_files_round_trip() {
    let arch = brickwork_1d(4, 2, 3).unwrap();
    assert_eq!(Architecture::from_json_str(&arch.to_json_string()).unwrap(), arch);
    let spec = parse_pauli(&[("ZZII", Complex64::new(1.0, 0.0)), ("IIXY", Complex64::new(0.0, -2.0))]).unwrap();
    let back = HamiltonianSpec::from_json_str(&spec.to_json_string()).unwrap();
    assert_eq!(back, spec);
    assert_eq!(exact_second_moment(&arch, &back).unwrap(), exact_second_moment(&arch, &spec).unwrap());
}
