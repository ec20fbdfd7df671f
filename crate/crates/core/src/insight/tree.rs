use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, InsightError};

/// Gains below this are treated as no improvement.
const GAIN_TOL: f64 = 1e-12;

const PALETTE: [&str; 8] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeOptions {
    pub max_depth: usize,
    /// Smallest leaf; `None` means 1% of the rows (at least one).
    pub min_leaf: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            max_depth: 3,
            min_leaf: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub depth: usize,
    pub feature: Option<usize>,
    /// Rows with `feature <= threshold` go left.
    pub threshold: Option<f64>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub histogram: Vec<usize>,
    pub prediction: usize,
    pub n_samples: usize,
    pub gini: f64,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.feature.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Preorder; the root is node 0.
    pub nodes: Vec<TreeNode>,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub accuracy: f64,
}

/// Gini impurity of a class histogram.
pub fn gini(histogram: &[usize]) -> f64 {
    let n: usize = histogram.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - histogram.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn argmax(h: &[usize]) -> usize {
    (0..h.len()).fold(0, |b, i| if h[i] > h[b] { i } else { b })
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Weighted child impurity `Σ n_side · gini_side`.
    impurity: f64,
}

/// Best split on feature `f`; `sorted` holds the node's rows ordered by
/// (value, row index).
fn best_split_on(data: &Dataset, labels: &[usize], sorted: &[usize], f: usize, n_classes: usize, min_leaf: usize) -> Option<Split> {
    let p = data.n_features();
    let value = |i: usize| data.values[i * p + f];
    let m = sorted.len();
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &i in sorted {
        right[labels[i]] += 1;
    }
    let mut sq_left = 0.0;
    let mut sq_right: f64 = right.iter().map(|&c| (c * c) as f64).sum();
    let mut best: Option<Split> = None;
    for s in 0..m - 1 {
        let y = labels[sorted[s]];
        sq_left += (2 * left[y] + 1) as f64;
        sq_right -= (2 * right[y] - 1) as f64;
        left[y] += 1;
        right[y] -= 1;
        let (nl, nr) = (s + 1, m - s - 1);
        if nl < min_leaf {
            continue;
        }
        if nr < min_leaf {
            break;
        }
        let (a, b) = (value(sorted[s]), value(sorted[s + 1]));
        if a == b {
            continue;
        }
        let impurity = (nl as f64 - sq_left / nl as f64) + (nr as f64 - sq_right / nr as f64);
        if best.as_ref().is_none_or(|b| impurity < b.impurity - GAIN_TOL) {
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some(Split {
                feature: f,
                threshold,
                impurity,
            });
        }
    }
    best
}

/// Greedy CART with Gini impurity. Ties go to the lowest feature index,
/// then the lowest threshold.
pub fn fit_cart(data: &Dataset, labels: &[usize], options: &TreeOptions) -> Result<DecisionTree, InsightError> {
    if labels.len() != data.n {
        return Err(InsightError::Parameter(format!("{} labels for {} rows", labels.len(), data.n)));
    }
    if data.n == 0 {
        return Err(InsightError::Degenerate("no rows to fit".into()));
    }
    if options.max_depth == 0 {
        return Err(InsightError::Parameter("max_depth must be at least 1".into()));
    }
    let min_leaf = options
        .min_leaf
        .unwrap_or_else(|| ((data.n as f64 * 0.01).floor() as usize).max(1))
        .max(1);
    let n_classes = labels.iter().copied().max().expect("non-empty") + 1;
    let mut tree = DecisionTree {
        feature_names: data.feature_names.clone(),
        class_names: (0..n_classes).map(|c| c.to_string()).collect(),
        nodes: Vec::new(),
        max_depth: options.max_depth,
        min_leaf,
        accuracy: 0.0,
    };
    let p = data.n_features();
    let mut order: Vec<Vec<usize>> = (0..p)
        .into_par_iter()
        .map(|f| {
            let mut keyed: Vec<(f64, usize)> = (0..data.n).map(|i| (data.values[i * p + f], i)).collect();
            keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().map(|(_, i)| i).collect()
        })
        .collect();
    if order.is_empty() {
        order.push((0..data.n).collect());
    }
    let mut go_left = vec![false; data.n];
    let mut correct = 0;
    grow(&mut tree, data, labels, order, 0, n_classes, &mut go_left, &mut correct);
    tree.accuracy = correct as f64 / data.n as f64;
    Ok(tree)
}

fn grow(
    tree: &mut DecisionTree,
    data: &Dataset,
    labels: &[usize],
    // The node's rows once per feature, each sorted by (value, row index).
    order: Vec<Vec<usize>>,
    depth: usize,
    n_classes: usize,
    go_left: &mut [bool],
    correct: &mut usize,
) -> usize {
    let rows = &order[0];
    let mut histogram = vec![0usize; n_classes];
    for &i in rows {
        histogram[labels[i]] += 1;
    }
    let id = tree.nodes.len();
    let prediction = argmax(&histogram);
    let m = rows.len();
    tree.nodes.push(TreeNode {
        depth,
        feature: None,
        threshold: None,
        left: None,
        right: None,
        histogram: histogram.clone(),
        prediction,
        n_samples: m,
        gini: gini(&histogram),
    });
    let pure = histogram[prediction] == m;
    let split = if pure || depth >= tree.max_depth || m < 2 * tree.min_leaf {
        None
    } else {
        let parent = m as f64 - histogram.iter().map(|&c| (c * c) as f64).sum::<f64>() / m as f64;
        let candidates: Vec<Option<Split>> = (0..data.n_features())
            .into_par_iter()
            .map(|f| best_split_on(data, labels, &order[f], f, n_classes, tree.min_leaf))
            .collect();
        let mut best: Option<Split> = None;
        for c in candidates.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.impurity < b.impurity - GAIN_TOL) {
                best = Some(c);
            }
        }
        best.filter(|b| (parent - b.impurity) / m as f64 > GAIN_TOL)
    };
    let Some(split) = split else {
        *correct += histogram[prediction];
        return id;
    };
    let p = data.n_features();
    for &i in &order[0] {
        go_left[i] = data.values[i * p + split.feature] <= split.threshold;
    }
    // Stable partition keeps every feature's order intact in both children.
    let (left_order, right_order): (Vec<Vec<usize>>, Vec<Vec<usize>>) = order
        .into_iter()
        .map(|sorted| sorted.into_iter().partition::<Vec<usize>, _>(|&i| go_left[i]))
        .unzip();
    let left = grow(tree, data, labels, left_order, depth + 1, n_classes, go_left, correct);
    let right = grow(tree, data, labels, right_order, depth + 1, n_classes, go_left, correct);
    let node = &mut tree.nodes[id];
    node.feature = Some(split.feature);
    node.threshold = Some(split.threshold);
    node.left = Some(left);
    node.right = Some(right);
    id
}

impl DecisionTree {
    pub fn with_class_names(mut self, names: Vec<String>) -> Self {
        if names.len() >= self.class_names.len() {
            self.class_names = names;
        }
        self
    }

    /// Deepest node depth.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn n_samples(&self) -> usize {
        self.nodes.first().map_or(0, |n| n.n_samples)
    }

    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let (Some(f), Some(t)) = (self.nodes[i].feature, self.nodes[i].threshold) {
            i = if row[f] <= t {
                self.nodes[i].left.expect("internal node")
            } else {
                self.nodes[i].right.expect("internal node")
            };
        }
        i
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.nodes[self.leaf_of(row)].prediction
    }

    pub fn to_dot(&self) -> String {
        let total = self.n_samples().max(1) as f64;
        let mut s = String::from("digraph tree {\n  node [shape=box, style=\"rounded,filled\", fontname=\"helvetica\"];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let share = 100.0 * n.n_samples as f64 / total;
            let class = &self.class_names[n.prediction];
            let hist = n.histogram.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
            let label = match (n.feature, n.threshold) {
                (Some(f), Some(t)) => format!("{} <= {t:.4}\\nsamples = {share:.1}%\\nvalue = [{hist}]\\nclass = {class}", self.feature_names[f]),
                _ => format!("samples = {share:.1}%\\nvalue = [{hist}]\\nclass = {class}"),
            };
            let color = if n.is_leaf() {
                PALETTE[n.prediction % PALETTE.len()]
            } else {
                "#ffffff"
            };
            writeln!(s, "  n{i} [label=\"{label}\", fillcolor=\"{color}\"];").expect("write to string");
            if let (Some(l), Some(r)) = (n.left, n.right) {
                writeln!(s, "  n{i} -> n{l} [label=\"yes\"];").expect("write to string");
                writeln!(s, "  n{i} -> n{r} [label=\"no\"];").expect("write to string");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Tree predictions for every row of `data`.
pub fn reassign(data: &Dataset, tree: &DecisionTree) -> Result<Vec<usize>, InsightError> {
    if data.n_features() != tree.feature_names.len() {
        return Err(InsightError::Parameter(format!(
            "tree uses {} features, data has {}",
            tree.feature_names.len(),
            data.n_features()
        )));
    }
    Ok((0..data.n).into_par_iter().map(|i| tree.predict(data.row(i))).collect())
}
