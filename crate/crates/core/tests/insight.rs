use std::path::Path;

use nearopt::insight::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

/// Gaussian-ish blobs (sum of uniforms) around `centers`, with true labels.
fn blobs(seed: u64, centers: &[Vec<f64>], per: usize, spread: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = centers[0].len();
    let mut cols = vec![Vec::new(); p];
    let mut truth = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per {
            for j in 0..p {
                let noise: f64 = (0..4).map(|_| rng.random::<f64>() - 0.5).sum();
                cols[j].push(center[j] + spread * noise);
            }
            truth.push(c);
        }
    }
    (cols, truth)
}

fn opts(k: usize) -> ClusterOptions {
    ClusterOptions {
        k,
        seed: 1,
        ..ClusterOptions::default()
    }
}

#[test]
fn dissimilarity_examples() {
    let d = dissimilarity(&[0.2, 0.4], &[0], &[0.1, 0.4], &[1], 0.02).unwrap();
    assert!((d - 0.03).abs() < 1e-15);
    assert_eq!(dissimilarity(&[0.3, 0.7], &[2], &[0.3, 0.7], &[2], 5.0).unwrap(), 0.0);
    assert_eq!(dissimilarity(&[1.0, 0.0], &[0], &[0.0, 0.0], &[1], 0.0).unwrap(), 1.0);
    assert!(dissimilarity(&[1.0], &[], &[1.0, 2.0], &[], 0.02).is_err());
}

#[test]
fn adjusted_rand_index_by_hand() {
    assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]) - 4.0 / 7.0).abs() < 1e-12);
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 3, 3]), 1.0);
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let (cols, truth) = blobs(4, &[vec![0.0, 0.0], vec![10.0, 10.0]], 300, 1.0);
    let data = Dataset::normalized(names(2), &cols, vec![]).unwrap();
    let m = kmeans(&data, &opts(2)).unwrap();
    assert!(adjusted_rand_index(&m.labels, &truth) >= 0.99);
    assert!(m.converged);
    for w in m.inertia_trace.windows(2) {
        assert!(w[1] <= w[0]);
    }
    let direct: f64 = (0..data.n)
        .map(|i| dissimilarity(data.row(i), &[], &m.centroids[m.labels[i]], &[], 0.0).unwrap())
        .sum();
    assert!((direct - m.inertia).abs() <= 1e-9 * m.inertia);
    assert!(m.centroids.iter().flatten().all(|&c| (0.0..=1.0).contains(&c)));
    assert_eq!(m, kmeans(&data, &opts(2)).unwrap());
}

#[test]
fn kmeans_edge_cases() {
    let (cols, _) = blobs(5, &[vec![0.0, 1.0, 2.0]], 40, 1.0);
    let data = Dataset::normalized(names(3), &cols, vec![]).unwrap();
    let one = kmeans(&data, &opts(1)).unwrap();
    let mut total_var = 0.0;
    for j in 0..3 {
        let col = data.column(j);
        let mu = col.iter().sum::<f64>() / col.len() as f64;
        assert!((one.centroids[0][j] - mu).abs() < 1e-12);
        total_var += col.iter().map(|v| (v - mu).powi(2)).sum::<f64>();
    }
    assert!((one.inertia - total_var).abs() <= 1e-9 * total_var);
    let all = kmeans(&data, &opts(data.n)).unwrap();
    assert!(all.inertia < 1e-24);
    assert!(matches!(kmeans(&data, &opts(data.n + 1)), Err(InsightError::Parameter(_))));
}

fn mixed(seed: u64) -> (Dataset, Vec<usize>) {
    let levels = ["ammonia", "hydrogen", "methane"];
    let (cols, truth) = blobs(seed, &[vec![1.0, 8.0], vec![5.0, 4.0], vec![9.0, 1.0]], 200, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    // Carrier mostly follows the blob, with 10% noise.
    let tags: Vec<String> = truth
        .iter()
        .map(|&t| {
            let c = if rng.random::<f64>() < 0.1 { rng.random_range(0..3) } else { t };
            levels[c].to_string()
        })
        .collect();
    let data = Dataset::normalized(names(2), &cols, vec![("carrier".into(), tags)]).unwrap();
    (data, truth)
}

#[test]
fn kprototypes_on_mixed_data() {
    let (data, truth) = mixed(7);
    let m = kprototypes(&data, DEFAULT_GAMMA, &opts(3)).unwrap();
    assert!(adjusted_rand_index(&m.labels, &truth) >= 0.9);
    assert!(kmeans(&data, &opts(3)).is_err());
    let direct: f64 = (0..data.n)
        .map(|i| {
            let l = m.labels[i];
            dissimilarity(data.row(i), data.categorical_row(i), &m.centroids[l], &m.modes[l], m.gamma).unwrap()
        })
        .sum();
    assert!((direct - m.inertia).abs() <= 1e-9 * m.inertia);
    for w in m.inertia_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }

    // A huge gamma makes the categories decide.
    let big = kprototypes(&data, 1e6, &opts(3)).unwrap();
    let cats: Vec<usize> = (0..data.n).map(|i| data.categorical_row(i)[0] as usize).collect();
    assert_eq!(adjusted_rand_index(&big.labels, &cats), 1.0);

    let single = kprototypes(&data, DEFAULT_GAMMA, &opts(1)).unwrap();
    let mut counts = [0usize; 3];
    for &c in &cats {
        counts[c] += 1;
    }
    let majority = (0..3).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
    assert_eq!(single.modes[0][0] as usize, majority);
    assert!(kprototypes(&data, 0.0, &opts(3)).is_err());
}

#[test]
fn auto_gamma_is_mean_standard_deviation() {
    let mut data = Dataset::physical(names(2), &[vec![0.4, 0.6, 0.4, 0.6], vec![0.2, 0.8, 0.8, 0.2]]).unwrap();
    assert!((auto_gamma(&data).unwrap() - 0.2).abs() < 1e-12);
    data.values = vec![0.3, 0.3, 0.7, 0.7, 0.3, 0.3, 0.7, 0.7];
    assert!((auto_gamma(&data).unwrap() - 0.2).abs() < 1e-12);
    let flat = Dataset::physical(names(1), &[vec![0.5; 4]]).unwrap();
    assert!(auto_gamma(&flat).is_err());
}

#[test]
fn normalization_round_trip() {
    let (cols, _) = blobs(9, &[vec![3.0, 700.0, -2.0]], 50, 2.0);
    let mut with_const = cols.clone();
    with_const.push(vec![4.2; 50]);
    let data = Dataset::normalized(names(4), &with_const, vec![]).unwrap();
    assert_eq!(data.dropped, vec![("f3".to_string(), 4.2)]);
    assert_eq!(data.n_features(), 3);
    assert!(data.values.iter().all(|v| (0.0..=1.0).contains(v)));
    for i in 0..data.n {
        let back = data.denormalize(data.row(i));
        for j in 0..3 {
            assert!((back[j] - cols[j][i]).abs() <= 1e-12 * cols[j][i].abs().max(1.0));
        }
    }
}

fn gini_of(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut counts = std::collections::HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0.0) += 1.0;
    }
    1.0 - counts.values().map(|c: &f64| (c / n) * (c / n)).sum::<f64>()
}

/// Best (gain, feature, threshold) over every midpoint of every feature.
fn brute_force_split(cols: &[Vec<f64>], y: &[usize]) -> (f64, usize, f64) {
    let n = y.len() as f64;
    let parent = gini_of(y);
    let mut best = (f64::NEG_INFINITY, 0, 0.0);
    for (f, col) in cols.iter().enumerate() {
        let mut vals = col.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let l: Vec<usize> = (0..y.len()).filter(|&i| col[i] <= t).map(|i| y[i]).collect();
            let r: Vec<usize> = (0..y.len()).filter(|&i| col[i] > t).map(|i| y[i]).collect();
            let gain = parent - (l.len() as f64 * gini_of(&l) + r.len() as f64 * gini_of(&r)) / n;
            if gain > best.0 + 1e-12 {
                best = (gain, f, t);
            }
        }
    }
    best
}

#[test]
fn root_split_matches_exhaustive_search() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..50).map(|_| (rng.random::<f64>() * 20.0).round() / 2.0).collect()).collect();
        let y: Vec<usize> = (0..50).map(|i| usize::from(cols[0][i] + rng.random::<f64>() * 4.0 > cols[1][i] + 2.0)).collect();
        let data = Dataset::physical(names(2), &cols).unwrap();
        let tree = fit_cart(&data, &y, &TreeOptions { max_depth: 1, min_leaf: Some(1) }).unwrap();
        let (gain, f, t) = brute_force_split(&cols, &y);
        let root = &tree.nodes[0];
        let l = &tree.nodes[root.left.unwrap()];
        let r = &tree.nodes[root.right.unwrap()];
        let got = root.gini - (l.n_samples as f64 * l.gini + r.n_samples as f64 * r.gini) / 50.0;
        assert!((got - gain).abs() < 1e-12, "seed {seed}: {got} vs {gain}");
        assert_eq!((root.feature.unwrap(), root.threshold.unwrap()), (f, t), "seed {seed}");
    }
}

#[test]
fn separable_line_needs_one_split() {
    let x = vec![1.0, 2.0, 3.0, 4.0, 6.0, 7.0, 8.0];
    let y = vec![0, 0, 0, 0, 1, 1, 1];
    let data = Dataset::physical(names(1), &[x]).unwrap();
    let tree = fit_cart(&data, &y, &TreeOptions::default()).unwrap();
    assert_eq!(tree.depth(), 1);
    assert_eq!(tree.accuracy, 1.0);
    let t = tree.nodes[0].threshold.unwrap();
    assert!(t > 4.0 && t < 6.0);
    assert_eq!(reassign(&data, &tree).unwrap(), y);

    let pure = fit_cart(&data, &[2; 7], &TreeOptions::default()).unwrap();
    assert_eq!(pure.nodes.len(), 1);
    assert_eq!(pure.accuracy, 1.0);
    assert_eq!(reassign(&data, &pure).unwrap(), vec![2; 7]);
}

#[test]
fn tree_structure_invariants_and_reassignment() {
    let (cols, truth) = blobs(12, &[vec![0.0, 0.0], vec![1.5, 1.0], vec![3.0, 0.0]], 100, 2.0);
    let data = Dataset::physical(names(2), &cols).unwrap();
    let tree = fit_cart(&data, &truth, &TreeOptions::default()).unwrap();
    assert_eq!(tree.min_leaf, 3);
    for n in &tree.nodes {
        assert_eq!(n.histogram.iter().sum::<usize>(), n.n_samples);
        assert_eq!(n.is_leaf(), n.threshold.is_none());
        if let (Some(l), Some(r)) = (n.left, n.right) {
            assert_eq!(tree.nodes[l].n_samples + tree.nodes[r].n_samples, n.n_samples);
        } else {
            assert!(n.n_samples >= tree.min_leaf);
        }
    }
    let new = reassign(&data, &tree).unwrap();
    let disagree = new.iter().zip(&truth).filter(|(a, b)| a != b).count();
    assert_eq!(disagree, ((1.0 - tree.accuracy) * data.n as f64).round() as usize);
    assert!(disagree > 0, "blobs overlap");
    assert_eq!(reassign(&data, &tree).unwrap(), new);
}

#[test]
fn select_k_diagnostics() {
    let (cols, _) = blobs(13, &[vec![0.0, 0.0], vec![10.0, 0.0], vec![5.0, 9.0]], 150, 1.0);
    let data = Dataset::normalized(names(2), &cols, vec![]).unwrap();
    let diag = select_k(&data, &[1, 2, 3, 4, 5], 0.0, 3, 3).unwrap();
    assert!(diag[0].silhouette.is_none());
    let best = diag.iter().filter(|d| d.silhouette.is_some()).max_by(|a, b| a.silhouette.unwrap().total_cmp(&b.silhouette.unwrap())).unwrap();
    assert_eq!(best.k, 3);
    for w in diag.windows(2) {
        assert!(w[1].inertia <= w[0].inertia);
    }
    assert!(select_k(&data, &[], 0.0, 3, 3).is_err());
}

#[test]
fn tree_exports_match_golden_files() {
    let data = Dataset::physical(
        vec!["wind".into(), "pv".into()],
        &[vec![1.0, 2.0, 3.0, 8.0, 9.0, 9.5], vec![5.0, 1.0, 4.0, 2.0, 7.0, 3.0]],
    )
    .unwrap();
    let tree = fit_cart(&data, &[0, 0, 1, 2, 2, 1], &TreeOptions { max_depth: 2, min_leaf: Some(1) })
        .unwrap()
        .with_class_names(vec!["hydrogen".into(), "ammonia".into(), "methanol".into()]);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let json = serde_json::to_string_pretty(&tree).unwrap() + "\n";
    if std::env::var_os("NEAROPT_BLESS").is_some() {
        std::fs::write(golden.join("tree.json"), &json).unwrap();
        std::fs::write(golden.join("tree.dot"), tree.to_dot()).unwrap();
    }
    assert_eq!(json, std::fs::read_to_string(golden.join("tree.json")).unwrap());
    assert_eq!(tree.to_dot(), std::fs::read_to_string(golden.join("tree.dot")).unwrap());
    let back: DecisionTree = serde_json::from_str(&json).unwrap();
    assert_eq!(back, tree);
}

proptest! {
    #[test]
    fn dissimilarity_is_linear_in_gamma(
        x in proptest::collection::vec(0.0f64..1.0, 3),
        c in proptest::collection::vec(0.0f64..1.0, 3),
        xc in proptest::collection::vec(0u32..3, 2),
        cc in proptest::collection::vec(0u32..3, 2),
        gamma in 0.0f64..10.0,
    ) {
        let e = dissimilarity(&x, &[], &c, &[], 0.0).unwrap();
        let m = xc.iter().zip(&cc).filter(|(a, b)| a != b).count() as f64;
        prop_assert_eq!(dissimilarity(&x, &xc, &c, &cc, gamma).unwrap(), e + gamma * m);
        prop_assert_eq!(e, dissimilarity(&c, &[], &x, &[], 0.0).unwrap());
    }
}
