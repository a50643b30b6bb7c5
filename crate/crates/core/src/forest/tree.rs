//! CART classification tree grown on a bootstrap multiset.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    /// `[healthy, malignant]` training counts.
    Leaf { counts: [u32; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// `nodes[0]` is the root.
    pub nodes: Vec<Node>,
}

/// Split chosen at one node; `score` is the weighted child Gini impurity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

pub(crate) fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (a, b) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - a * a - b * b
}

fn class_counts(data: &Dataset, idx: &[usize]) -> [usize; 2] {
    let mut c = [0, 0];
    for &i in idx {
        c[data.labels[i].index()] += 1;
    }
    c
}

/// Best Gini split of `idx` on one feature, or `None` if the feature is
/// constant there. Thresholds sit halfway between adjacent distinct values.
pub(crate) fn best_split_on(data: &Dataset, idx: &[usize], feature: usize) -> Option<SplitChoice> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| data.value(a, feature).total_cmp(&data.value(b, feature)));
    let total = class_counts(data, idx);
    let n = idx.len() as f64;
    let mut left = [0usize; 2];
    let mut best: Option<SplitChoice> = None;
    for k in 0..order.len() - 1 {
        left[data.labels[order[k]].index()] += 1;
        let (lo, hi) = (
            data.value(order[k], feature),
            data.value(order[k + 1], feature),
        );
        if lo == hi {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let nl = (k + 1) as f64;
        let score = (nl * gini(left) + (n - nl) * gini(right)) / n;
        if best.is_none_or(|b| score < b.score) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            best = Some(SplitChoice {
                feature,
                threshold,
                score,
            });
        }
    }
    best
}

/// Examines features in a random order until `mtry` non-constant ones have been
/// scored (or all are exhausted) and returns the lowest-impurity split.
///
/// The RNG is advanced by one full shuffle regardless of the data, so the
/// choice depends on the values only through their ordering.
pub(crate) fn choose_split<R: Rng>(
    data: &Dataset,
    idx: &[usize],
    mtry: usize,
    rng: &mut R,
) -> Option<SplitChoice> {
    let mut features: Vec<usize> = (0..data.n_features()).collect();
    features.shuffle(rng);
    let mut scored = 0;
    let mut best: Option<SplitChoice> = None;
    for f in features {
        if scored == mtry {
            break;
        }
        if let Some(s) = best_split_on(data, idx, f) {
            scored += 1;
            if best.is_none_or(|b| s.score < b.score) {
                best = Some(s);
            }
        }
    }
    best
}

/// Grows a tree on `sample` (row indices into `data`, repeats allowed) until
/// nodes are pure, hold at most `min_node_size` rows, or cannot be split.
pub fn train_tree<R: Rng>(
    data: &Dataset,
    sample: &[usize],
    mtry: usize,
    min_node_size: usize,
    rng: &mut R,
) -> DecisionTree {
    let mut nodes = vec![Node::Leaf { counts: [0, 0] }];
    let mut stack = vec![(0usize, sample.to_vec())];
    while let Some((slot, idx)) = stack.pop() {
        let counts = class_counts(data, &idx);
        let leaf = Node::Leaf {
            counts: [counts[0] as u32, counts[1] as u32],
        };
        if counts[0] == 0 || counts[1] == 0 || idx.len() <= min_node_size.max(1) {
            nodes[slot] = leaf;
            continue;
        }
        let Some(split) = choose_split(data, &idx, mtry, rng) else {
            nodes[slot] = leaf;
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| data.value(i, split.feature) <= split.threshold);
        let left = nodes.len() as u32;
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes.push(Node::Leaf { counts: [0, 0] });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right: left + 1,
        };
        // Right first so the left subtree is expanded (and numbered) first.
        stack.push((left as usize + 1, r));
        stack.push((left as usize, l));
    }
    DecisionTree { nodes }
}

impl DecisionTree {
    /// Leaf class counts reached by `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> [u32; 2] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    } as usize;
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64], tie: Label) -> Label {
        let [h, m] = self.leaf_counts(x);
        match h.cmp(&m) {
            std::cmp::Ordering::Greater => Label::Healthy,
            std::cmp::Ordering::Less => Label::Malignant,
            std::cmp::Ordering::Equal => tie,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let labels = labels
            .into_iter()
            .map(|l| {
                if l == 1 {
                    Label::Malignant
                } else {
                    Label::Healthy
                }
            })
            .collect();
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn single_class_is_one_leaf() {
        let d = ds(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, 1]);
        let t = train_tree(&d, &[0, 1, 2], 1, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes, vec![Node::Leaf { counts: [0, 3] }]);
    }

    #[test]
    fn separable_line_is_a_stump() {
        let d = ds(
            vec![vec![1.0], vec![2.0], vec![5.0], vec![6.0]],
            vec![0, 0, 1, 1],
        );
        let t = train_tree(&d, &[0, 1, 2, 3], 1, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.depth(), 1);
        assert!(matches!(t.nodes[0], Node::Split { threshold, .. } if threshold == 3.5));
        for i in 0..4 {
            assert_eq!(t.predict(d.row(i), Label::Malignant), d.labels[i]);
        }
    }

    #[test]
    fn identical_rows_with_mixed_labels_stop() {
        let d = ds(vec![vec![1.0], vec![1.0]], vec![0, 1]);
        let t = train_tree(&d, &[0, 1], 1, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(t.nodes, vec![Node::Leaf { counts: [1, 1] }]);
        assert_eq!(t.predict(&[1.0], Label::Malignant), Label::Malignant);
    }

    #[test]
    fn children_never_increase_gini() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let labels = rows
            .iter()
            .map(|r| u8::from(r[0] + 0.3 * r[1] > 0.6))
            .collect();
        let d = ds(rows, labels);
        let idx: Vec<usize> = (0..60).collect();
        let parent = gini(class_counts(&d, &idx));
        for f in 0..3 {
            let s = best_split_on(&d, &idx, f).unwrap();
            assert!(s.score <= parent + 1e-12);
        }
    }
}
