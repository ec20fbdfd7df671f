use std::path::Path;

use nearopt::geometry::{ConvexHull, HullOptions};
use nearopt::maa::{find_optimum, run_maa, MaaConfig};
use nearopt::model::{Carrier, ModelInputs, PathwayConfig, Transport};
use nearopt::sampler::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn unit_square() -> ConvexHull {
    let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
    ConvexHull::new(&pts, HullOptions::default()).unwrap()
}

fn random_hull(seed: u64, n: usize, d: usize) -> ConvexHull {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    ConvexHull::new(&pts, HullOptions::default()).unwrap()
}

#[test]
fn square_splits_into_four_triangles() {
    let s = triangulate(&unit_square()).unwrap();
    assert_eq!(s.len(), 4);
    assert!((s.iter().map(|t| t.volume).sum::<f64>() - 1.0).abs() < 1e-15);
    for t in &s {
        assert_eq!(t.vertices[0], vec![0.5, 0.5]);
    }
}

#[test]
fn simplex_decomposition_volumes() {
    for d in 2..=5 {
        let mut pts = vec![vec![0.0; d]];
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            pts.push(e);
        }
        let h = ConvexHull::new(&pts, HullOptions::default()).unwrap();
        let total: f64 = triangulate(&h).unwrap().iter().map(|s| s.volume).sum();
        let fact: f64 = (1..=d).map(|i| i as f64).product();
        assert!((total * fact - 1.0).abs() < 1e-12);
    }
    let h = random_hull(11, 80, 5);
    let total: f64 = triangulate(&h).unwrap().iter().map(|s| s.volume).sum();
    assert!((total - h.volume).abs() <= 1e-9 * h.volume);
}

#[test]
fn unit_square_samples_are_uniform() {
    let n = 100_000;
    let set = sample(&unit_square(), n, 7).unwrap();
    assert_eq!(set.len(), n);
    let mut counts = [0usize; 100];
    let mut mean = [0.0; 2];
    for r in set.rows() {
        assert!((0.0..=1.0).contains(&r[0]) && (0.0..=1.0).contains(&r[1]));
        let i = ((r[0] * 10.0) as usize).min(9);
        let j = ((r[1] * 10.0) as usize).min(9);
        counts[i * 10 + j] += 1;
        mean[0] += r[0] / n as f64;
        mean[1] += r[1] / n as f64;
    }
    assert!((mean[0] - 0.5).abs() < 0.01 && (mean[1] - 0.5).abs() < 0.01);
    let expected = n as f64 / 100.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(99.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn dirichlet_on_a_segment_is_uniform() {
    // Two vertices: the first weight must be U(0, 1).
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut l: Vec<f64> = (0..n).map(|_| flat_dirichlet(&mut rng, 2)[0]).collect();
    l.sort_by(f64::total_cmp);
    let d = l
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
        .fold(0.0, f64::max);
    // Asymptotic Kolmogorov critical value at alpha = 0.001.
    let critical = (-(0.001f64 / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt();
    assert!(d < critical, "KS {d} >= {critical}");
}

#[test]
fn picks_follow_simplex_volumes() {
    let h = random_hull(3, 30, 3);
    let sampler = HullSampler::new(&h).unwrap();
    let total = sampler.total_volume();
    let n = 100_000;
    let mut counts = vec![0usize; sampler.simplices().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..n {
        counts[sampler.pick(&mut rng)] += 1;
    }
    for (s, &c) in sampler.simplices().iter().zip(&counts) {
        let p = s.volume / total;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma + 1.0, "p {p} count {c}");
    }
}

#[test]
fn samples_stay_inside_the_hull() {
    let h = random_hull(21, 50, 4);
    let set = sample(&h, 20_000, 1).unwrap();
    assert!(set.rows().all(|r| h.contains(r)));
}

#[test]
fn flat_hull_samples_stay_on_the_segment() {
    let pts = vec![vec![0.0, 1.0], vec![2.0, 0.0], vec![1.0, 0.5]];
    let h = ConvexHull::collapsing(&pts, HullOptions::default()).unwrap();
    let set = sample(&h, 1000, 2).unwrap();
    for r in set.rows() {
        assert!((r[0] / 2.0 + r[1] - 1.0).abs() < 1e-12);
        assert!(h.contains(r));
    }
}

#[test]
fn sampling_is_bit_identical_across_thread_counts() {
    let h = random_hull(8, 40, 5);
    let n = 3 * PARTITION_ROWS + 17;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample(&h, n, 99).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.matrix.len(), n * 5);
    assert!(a.matrix.iter().zip(&b.matrix).all(|(x, y)| x.to_bits() == y.to_bits()));
    let c = sample(&h, n, 100).unwrap();
    assert_ne!(a.matrix, c.matrix);
}

#[test]
fn zero_samples_is_an_error() {
    assert!(matches!(sample(&unit_square(), 0, 1), Err(SamplerError::Parameter(_))));
}

fn golden_set() -> SampleSet {
    SampleSet {
        variables: vec!["pv".into(), "wind".into()],
        units: vec!["GW".into(), "GW".into()],
        matrix: vec![1.0, 2.0, -0.5, 3.25, 1e-300, 12345.678],
        carrier_runs: vec![("hydrogen".into(), 2), ("ammonia".into(), 1)],
        cost: Some(vec![10.5, f64::NAN, f64::INFINITY]),
        labels: None,
        seed: 42,
        hull_id: "abc".into(),
    }
}

#[test]
fn sample_file_matches_golden_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.samples");
    write_samples(&path, &golden_set()).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(golden.join("tiny.samples")).unwrap());
    assert_eq!(
        std::fs::read_to_string(sidecar_path(&path)).unwrap(),
        std::fs::read_to_string(golden.join("tiny.samples.json")).unwrap()
    );

    let back = read_samples(&golden.join("tiny.samples")).unwrap();
    let want = golden_set();
    assert_eq!(back.matrix, want.matrix);
    assert_eq!(back.carrier_tags().unwrap(), vec!["hydrogen", "hydrogen", "ammonia"]);
    let c = back.cost.unwrap();
    assert_eq!(c[0], 10.5);
    assert!(c[1].is_nan());
    assert_eq!(c[2], f64::INFINITY);
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.samples");
    write_samples(&path, &golden_set()).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_samples(&path), Err(SamplerError::Format(_))));
}

#[test]
fn toy_samples_reverify_as_near_optimal() {
    let cfg = PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 730);
    let lp = ModelInputs::bundled().build(&cfg).unwrap().lp;
    let config = MaaConfig {
        mga_variables: vec!["pv".into(), "wind".into()],
        ..MaaConfig::default()
    };
    let res = run_maa(&lp, &config).unwrap();
    let mut set = sample(&res.hull, 1000, 3).unwrap();
    set.variables = config.mga_variables.clone();
    let full = VerifyOptions {
        fraction: 1.0,
        ..VerifyOptions::default()
    };
    let report = verify_near_optimal(&set, &lp, res.f_star, 0.1, &full).unwrap();
    assert_eq!(report.checked.len(), 1000);
    assert!(report.all_verified(), "{:?}", &report.violations[..report.violations.len().min(5)]);
    attach_costs(&mut set, &report);
    assert!(set.cost.as_ref().unwrap().iter().all(|&c| c >= res.f_star * (1.0 - 1e-9)));

    // The optimum itself re-solves at f*.
    let mut opt = set.subset(&[0]);
    opt.matrix = res.optimum.clone();
    let r = verify_near_optimal(&opt, &lp, res.f_star, 0.1, &full).unwrap();
    assert!(r.all_verified());
    assert!((r.costs[0] - find_optimum(&lp, Default::default()).unwrap().f_star()).abs() <= 1e-7 * res.f_star);

    // Default verification checks a seeded 1% subsample.
    let sub = verify_near_optimal(&set, &lp, res.f_star, 0.1, &VerifyOptions::default()).unwrap();
    assert_eq!(sub.checked.len(), 10);
    let again = verify_near_optimal(&set, &lp, res.f_star, 0.1, &VerifyOptions::default()).unwrap();
    assert_eq!(sub, again);
}

#[test]
fn infeasible_pin_is_a_violation() {
    let cfg = PathwayConfig::reference(Carrier::Hydrogen, Transport::Pipeline, 730);
    let lp = ModelInputs::bundled().build(&cfg).unwrap().lp;
    let f_star = find_optimum(&lp, Default::default()).unwrap().f_star();
    let set = SampleSet {
        variables: vec!["pv".into(), "wind".into()],
        units: vec!["GW".into(); 2],
        matrix: vec![0.0, 0.0],
        carrier_runs: vec![],
        cost: None,
        labels: None,
        seed: 0,
        hull_id: String::new(),
    };
    let full = VerifyOptions {
        fraction: 1.0,
        ..VerifyOptions::default()
    };
    let r = verify_near_optimal(&set, &lp, f_star, 0.1, &full).unwrap();
    assert_eq!(r.violations.len(), 1);
    assert!(!r.all_verified());
}
