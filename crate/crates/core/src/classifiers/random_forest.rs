//! Random forest of CART trees grown to purity on bootstrap resamples.
//!
//! Each node considers a seeded random subset of `mtry` features and
//! takes the split with the largest Gini impurity decrease; ties resolve
//! to the lowest feature index, then the lowest threshold. The forest
//! probability is exactly the fraction of trees voting +1, and voting
//! ties go to +1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_set, mix_seed, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfParams {
    /// Features considered per split.
    pub mtry: usize,
    pub n_trees: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: i8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// One CART tree as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> i8 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub feature_count: usize,
    pub params: RfParams,
}

impl RfModel {
    /// Fraction of trees voting +1.
    pub fn vote_fraction(&self, x: &[f64]) -> f64 {
        let pos = self.trees.iter().filter(|t| t.predict(x) > 0).count();
        pos as f64 / self.trees.len() as f64
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn majority(pos: usize, total: usize) -> i8 {
    // Voting tie resolves to +1.
    if 2 * pos >= total {
        1
    } else {
        -1
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [i8],
    cols: usize,
    mtry: usize,
    nodes: Vec<Node>,
    feature_pool: Vec<usize>,
}

impl<'a> TreeBuilder<'a> {
    fn sample_features(&mut self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        for i in 0..self.mtry {
            let j = rng.gen_range(i..self.cols);
            self.feature_pool.swap(i, j);
        }
        let mut chosen = self.feature_pool[..self.mtry].to_vec();
        chosen.sort_unstable();
        chosen
    }

    /// Best (gain, threshold) for one feature over the node's samples, or
    /// None when the feature is constant there.
    fn best_threshold(&self, feature: usize, indices: &[usize]) -> Option<(f64, f64)> {
        let mut values: Vec<(f64, bool)> = indices
            .iter()
            .map(|&i| (self.x[i][feature], self.y[i] > 0))
            .collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = values.len();
        let total_pos = values.iter().filter(|(_, pos)| *pos).count();
        let parent = gini(total_pos, total);

        let mut best: Option<(f64, f64)> = None;
        let mut left_pos = 0;
        for i in 0..total - 1 {
            if values[i].1 {
                left_pos += 1;
            }
            if values[i].0 == values[i + 1].0 {
                continue;
            }
            let left_n = i + 1;
            let right_n = total - left_n;
            let right_pos = total_pos - left_pos;
            let weighted = (left_n as f64 * gini(left_pos, left_n)
                + right_n as f64 * gini(right_pos, right_n))
                / total as f64;
            let gain = parent - weighted;
            let threshold = (values[i].0 + values[i + 1].0) / 2.0;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, threshold));
            }
        }
        best
    }

    fn build(&mut self, indices: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let total = indices.len();
        let pos = indices.iter().filter(|&&i| self.y[i] > 0).count();
        if pos == 0 || pos == total {
            self.nodes.push(Node::Leaf {
                label: if pos == total { 1 } else { -1 },
            });
            return self.nodes.len() - 1;
        }

        let mut best: Option<(f64, usize, f64)> = None;
        for feature in self.sample_features(rng) {
            if let Some((gain, threshold)) = self.best_threshold(feature, &indices) {
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, threshold));
                }
            }
        }
        match best {
            Some((gain, feature, threshold)) if gain > 0.0 => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                let placeholder = self.nodes.len();
                self.nodes.push(Node::Leaf { label: 0 });
                let left = self.build(left_idx, rng);
                let right = self.build(right_idx, rng);
                self.nodes[placeholder] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                placeholder
            }
            // No usable split among the sampled features: majority leaf.
            _ => {
                self.nodes.push(Node::Leaf {
                    label: majority(pos, total),
                });
                self.nodes.len() - 1
            }
        }
    }
}

pub fn train_rf(x: &[Vec<f64>], y: &[i8], params: &RfParams) -> Result<RfModel, ModelError> {
    let cols = check_training_set(x, y)?;
    if params.mtry == 0 || params.mtry > cols {
        return Err(ModelError::BadParams(format!(
            "mtry {} out of range 1..={cols}",
            params.mtry
        )));
    }
    if params.n_trees == 0 {
        return Err(ModelError::BadParams("n_trees must be >= 1".into()));
    }
    let n = x.len();
    let trees = (0..params.n_trees)
        .map(|tree_idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(params.seed, tree_idx as u64));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                y,
                cols,
                mtry: params.mtry,
                nodes: Vec::new(),
                feature_pool: (0..cols).collect(),
            };
            let root = builder.build(bootstrap, &mut rng);
            debug_assert_eq!(root, 0);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();
    Ok(RfModel {
        trees,
        feature_count: cols,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_data() -> (Vec<Vec<f64>>, Vec<i8>) {
        // Feature 0 alone separates the classes; feature 1 is noise.
        let x = vec![
            vec![0.1, 5.0],
            vec![0.3, -2.0],
            vec![0.45, 7.0],
            vec![0.2, 1.0],
            vec![0.9, 4.0],
            vec![0.7, -3.0],
            vec![0.85, 2.0],
            vec![0.6, 6.0],
        ];
        let y = vec![-1, -1, -1, -1, 1, 1, 1, 1];
        (x, y)
    }

    #[test]
    fn single_tree_full_mtry_fits_pure_split() {
        let (x, y) = separable_data();
        let model = train_rf(
            &x,
            &y,
            &RfParams {
                mtry: 2,
                n_trees: 1,
                seed: 5,
            },
        )
        .unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(model.trees[0].predict(row), label);
        }
        // n_trees = 1: probability is 0 or 1 exactly.
        let p = model.vote_fraction(&x[0]);
        assert!(p == 0.0 || p == 1.0);
    }

    #[test]
    fn all_positive_labels_predict_positive() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.5, 3.0]];
        let y = vec![1, 1, 1];
        let model = train_rf(
            &x,
            &y,
            &RfParams {
                mtry: 1,
                n_trees: 7,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(model.vote_fraction(&[9.0, 9.0]), 1.0);
    }

    #[test]
    fn same_seed_gives_identical_forest() {
        let (x, y) = separable_data();
        let params = RfParams {
            mtry: 1,
            n_trees: 11,
            seed: 42,
        };
        let a = train_rf(&x, &y, &params).unwrap();
        let b = train_rf(&x, &y, &params).unwrap();
        assert_eq!(a, b);

        let c = train_rf(
            &x,
            &y,
            &RfParams {
                seed: 43,
                ..params
            },
        )
        .unwrap();
        assert!(a != c || a.vote_fraction(&x[0]) == c.vote_fraction(&x[0]));
    }

    #[test]
    fn vote_fraction_is_exact_tree_count_ratio() {
        let (x, y) = separable_data();
        let model = train_rf(
            &x,
            &y,
            &RfParams {
                mtry: 2,
                n_trees: 10,
                seed: 2,
            },
        )
        .unwrap();
        for row in &x {
            let pos = model.trees.iter().filter(|t| t.predict(row) > 0).count();
            assert_eq!(model.vote_fraction(row), pos as f64 / 10.0);
        }
    }

    #[test]
    fn mtry_out_of_range() {
        let (x, y) = separable_data();
        assert!(matches!(
            train_rf(
                &x,
                &y,
                &RfParams {
                    mtry: 3,
                    n_trees: 1,
                    seed: 0
                }
            )
            .unwrap_err(),
            ModelError::BadParams(_)
        ));
    }

    #[test]
    fn contradictory_duplicates_become_majority_leaf() {
        // Identical rows with conflicting labels cannot be split.
        let x = vec![vec![1.0], vec![1.0], vec![1.0]];
        let y = vec![1, -1, 1];
        let model = train_rf(
            &x,
            &y,
            &RfParams {
                mtry: 1,
                n_trees: 3,
                seed: 9,
            },
        )
        .unwrap();
        let p = model.vote_fraction(&[1.0]);
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn deterministic_tie_break_prefers_lowest_feature() {
        // Two identical separating features: splits must use feature 0.
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ];
        let y = vec![-1, -1, 1, 1];
        let model = train_rf(
            &x,
            &y,
            &RfParams {
                mtry: 2,
                n_trees: 1,
                seed: 1,
            },
        )
        .unwrap();
        match &model.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
            }
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }
}
