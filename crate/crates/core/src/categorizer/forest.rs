//! Random forest of Gini-split decision trees over the four intent categories.
//!
//! Each tree is grown on a bootstrap sample. At every node a random subset of
//! `⌈√F⌉` features is inspected first; further features are only examined
//! when none of the subset can split the node. Leaves keep the class
//! histogram of the bootstrap samples that reached them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kb::IntentCategory;

const NUM_CLASSES: usize = IntentCategory::ALL.len();

pub const DEFAULT_NUM_TREES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub num_trees: usize,
    /// `None` selects `⌈√F⌉` for `F` input features.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            num_trees: DEFAULT_NUM_TREES,
            max_depth: None,
            seed: 0,
        }
    }
}

/// `⌈√F⌉`, at least 1.
pub fn sqrt_features(num_features: usize) -> usize {
    let mut r = (num_features as f64).sqrt().ceil() as usize;
    while r * r < num_features {
        r += 1;
    }
    while r > 1 && (r - 1) * (r - 1) >= num_features {
        r -= 1;
    }
    r.max(1)
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        counts: [u32; NUM_CLASSES],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf(&self, row: &[f64]) -> &[u32; NUM_CLASSES] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Sum of all leaf histograms; equals the bootstrap sample size.
    pub fn leaf_total(&self) -> u64 {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { counts } => counts.iter().map(|&c| c as u64).sum(),
                Node::Split { .. } => 0,
            })
            .sum()
    }
}

/// The predicted category and the fraction of trees voting for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryPrediction {
    pub category: IntentCategory,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedForest {
    trees: Vec<DecisionTree>,
    num_features: usize,
    max_depth: usize,
    seed: u64,
}

fn gini(counts: &[u32; NUM_CLASSES], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn histogram(labels: &[usize], idx: &[usize]) -> [u32; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for &i in idx {
        counts[labels[i]] += 1;
    }
    counts
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    max_depth: usize,
    try_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = histogram(self.y, idx);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 {
            return at;
        }
        let Some(best) = self.best_split(idx) else {
            return at;
        };
        // partition in place: left side first
        let mut mid = 0;
        for i in 0..idx.len() {
            if self.x[idx[i]][best.feature] <= best.threshold {
                idx.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let num_features = self.x[0].len();
        let mut order: Vec<usize> = (0..num_features).collect();
        order.shuffle(&mut self.rng);

        let mut best: Option<BestSplit> = None;
        let mut inspected = 0;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
        for &feature in &order {
            if inspected >= self.try_features && best.is_some() {
                break;
            }
            inspected += 1;
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x[i][feature], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let n = pairs.len() as u32;
            let mut left = [0u32; NUM_CLASSES];
            let mut right = [0u32; NUM_CLASSES];
            for &(_, c) in &pairs {
                right[c] += 1;
            }
            for k in 0..pairs.len() - 1 {
                let c = pairs[k].1;
                left[c] += 1;
                right[c] -= 1;
                let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = k as u32 + 1;
                let nr = n - nl;
                let impurity =
                    (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

impl TrainedForest {
    /// Trains on a dense feature matrix. A single-class training set yields a
    /// degenerate forest that always predicts that class with confidence 1.
    pub fn fit(x: &[Vec<f64>], y: &[IntentCategory], params: &ForestParams) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "training needs aligned non-empty data ({} rows, {} labels)",
                x.len(),
                y.len()
            )));
        }
        if params.num_trees == 0 {
            return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
        }
        let num_features = x[0].len();
        if num_features == 0 || x.iter().any(|r| r.len() != num_features) {
            return Err(Error::InvalidArgument("ragged or empty feature rows".into()));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        let labels: Vec<usize> = y.iter().map(|c| c.index()).collect();
        let max_depth = params.max_depth.unwrap_or_else(|| sqrt_features(num_features));
        let try_features = sqrt_features(num_features);

        let mut master = ChaCha8Rng::seed_from_u64(params.seed);
        let tree_seeds: Vec<u64> = (0..params.num_trees).map(|_| master.gen()).collect();
        let n = x.len();
        let trees = tree_seeds
            .into_par_iter()
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut grower = Grower {
                    x,
                    y: &labels,
                    max_depth,
                    try_features,
                    rng,
                    nodes: Vec::new(),
                };
                grower.grow(&mut sample, 0);
                DecisionTree {
                    nodes: grower.nodes,
                }
            })
            .collect();
        Ok(Self {
            trees,
            num_features,
            max_depth,
            seed: params.seed,
        })
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Plurality vote over trees. Ties go to the category with more summed
    /// leaf samples, then to the earlier category in enum order.
    pub fn predict_row(&self, row: &[f64]) -> Result<CategoryPrediction> {
        if row.len() != self.num_features {
            return Err(Error::Domain(format!(
                "forest expects {} features, got {}",
                self.num_features,
                row.len()
            )));
        }
        let mut votes = [0usize; NUM_CLASSES];
        let mut mass = [0u64; NUM_CLASSES];
        for tree in &self.trees {
            let counts = tree.leaf(row);
            let mut winner = 0;
            for c in 1..NUM_CLASSES {
                if counts[c] > counts[winner] {
                    winner = c;
                }
            }
            votes[winner] += 1;
            for c in 0..NUM_CLASSES {
                mass[c] += counts[c] as u64;
            }
        }
        let mut best = 0;
        for c in 1..NUM_CLASSES {
            if (votes[c], mass[c]) > (votes[best], mass[best]) {
                best = c;
            }
        }
        Ok(CategoryPrediction {
            category: IntentCategory::from_index(best).expect("class index in range"),
            confidence: votes[best] as f64 / self.trees.len() as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n_per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<IntentCategory>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..n_per {
                x.push(vec![
                    center[0] + rng.gen_range(-1.0..1.0),
                    center[1] + rng.gen_range(-1.0..1.0),
                ]);
                y.push(IntentCategory::from_index(c).unwrap());
            }
        }
        (x, y)
    }

    #[test]
    fn sqrt_rounding() {
        assert_eq!(
            (1..=10).map(sqrt_features).collect::<Vec<_>>(),
            [1, 2, 2, 2, 3, 3, 3, 3, 3, 4]
        );
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (x, y) = blobs(30, 1);
        let forest = TrainedForest::fit(&x, &y, &ForestParams { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(forest.num_trees(), 100);
        assert_eq!(forest.max_depth(), 2);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, l)| forest.predict_row(r).unwrap().category == **l)
            .count();
        assert!(correct as f64 / x.len() as f64 > 0.95);
    }

    #[test]
    fn leaves_account_for_every_bootstrap_sample() {
        let (x, y) = blobs(10, 2);
        let forest = TrainedForest::fit(&x, &y, &ForestParams { num_trees: 7, max_depth: Some(5), seed: 9 }).unwrap();
        for tree in forest.trees() {
            assert_eq!(tree.leaf_total(), x.len() as u64);
            assert!(tree.depth() <= 5);
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![IntentCategory::Website; 3];
        let forest = TrainedForest::fit(&x, &y, &ForestParams::default()).unwrap();
        let p = forest.predict_row(&[10.0]).unwrap();
        assert_eq!(p, CategoryPrediction { category: IntentCategory::Website, confidence: 1.0 });
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = blobs(15, 4);
        let params = ForestParams { num_trees: 20, max_depth: None, seed: 11 };
        let a = TrainedForest::fit(&x, &y, &params).unwrap();
        let b = TrainedForest::fit(&x, &y, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn confidence_is_a_vote_fraction() {
        let (x, y) = blobs(10, 5);
        let forest = TrainedForest::fit(&x, &y, &ForestParams { num_trees: 13, max_depth: None, seed: 1 }).unwrap();
        for probe in [[2.5, 2.5], [0.0, 0.0], [4.0, 1.0]] {
            let p = forest.predict_row(&probe).unwrap();
            let k = p.confidence * 13.0;
            assert!((k - k.round()).abs() < 1e-9 && k >= 1.0);
        }
    }

    #[test]
    fn vote_ties_fall_back_to_leaf_mass_then_enum_order() {
        let leaf = |counts| DecisionTree { nodes: vec![Node::Leaf { counts }] };
        let forest = TrainedForest {
            trees: vec![leaf([0, 3, 0, 0]), leaf([0, 0, 5, 0])],
            num_features: 1,
            max_depth: 0,
            seed: 0,
        };
        let p = forest.predict_row(&[0.0]).unwrap();
        assert_eq!(p.category, IntentCategory::Service);
        assert_eq!(p.confidence, 0.5);

        let forest = TrainedForest {
            trees: vec![leaf([0, 4, 0, 0]), leaf([0, 0, 0, 4])],
            ..forest
        };
        assert_eq!(forest.predict_row(&[0.0]).unwrap().category, IntentCategory::Website);
    }

    #[test]
    fn dimension_mismatch_is_a_domain_error() {
        let (x, y) = blobs(5, 6);
        let forest = TrainedForest::fit(&x, &y, &ForestParams { num_trees: 3, ..Default::default() }).unwrap();
        assert!(matches!(forest.predict_row(&[1.0]), Err(Error::Domain(_))));
        assert!(TrainedForest::fit(&[], &[], &ForestParams::default()).is_err());
    }
}
