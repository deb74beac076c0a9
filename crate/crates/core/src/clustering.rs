//! Intent discovery: average-linkage agglomerative clustering of the
//! same-category refiners of a type.
//!
//! Merging stops once every inter-cluster distance exceeds the cut-off
//! `ε_c · M`, where `M` is the largest pairwise distance in the group and
//! `ε_c` is learned per category by grid search.

use serde::Serialize;

use crate::embedding::{cosine, PhraseVector, VectorSource};
use crate::error::{Error, Result};
use crate::eval::{homogeneity_completeness_v, ContingencyTable};
use crate::kb::{EntityType, IntentCategory};

pub const DEFAULT_GRID_STEP: f64 = 0.01;

/// Cosine distance `1 - cos(u, v)`, in `[0, 2]`.
pub fn distance(u: &[f64], v: &[f64]) -> Result<f64> {
    Ok((1.0 - cosine(u, v)?).max(0.0))
}

/// Same-category refiners of one type with their vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinerGroup {
    pub entity_type: EntityType,
    pub category: IntentCategory,
    members: Vec<(String, PhraseVector)>,
}

impl RefinerGroup {
    pub fn new(entity_type: EntityType, category: IntentCategory, members: Vec<(String, PhraseVector)>) -> Result<Self> {
        let Some(dim) = members.first().map(|(_, v)| v.vector.len()) else {
            return Err(Error::InvalidArgument("refiner group has no members".into()));
        };
        for (label, v) in &members {
            if v.vector.len() != dim {
                return Err(Error::InvalidArgument(format!("`{label}` has a vector of another dimension")));
            }
            if v.vector.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidArgument(format!("`{label}` has a zero vector")));
            }
        }
        Ok(Self {
            entity_type,
            category,
            members,
        })
    }

    /// Builds a group from raw vectors, tagging them as direct lookups.
    pub fn from_vectors(entity_type: EntityType, category: IntentCategory, members: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let members = members
            .into_iter()
            .map(|(l, vector)| {
                (
                    l,
                    PhraseVector {
                        vector,
                        source: VectorSource::DirectLookup,
                        covered_terms: 1,
                    },
                )
            })
            .collect();
        Self::new(entity_type, category, members)
    }

    pub fn members(&self) -> &[(String, PhraseVector)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn distances(&self) -> Vec<Vec<f64>> {
        let n = self.members.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let dij = distance(&self.members[i].1.vector, &self.members[j].1.vector)
                    .expect("group vectors are non-zero and equally sized");
                d[i][j] = dij;
                d[j][i] = dij;
            }
        }
        d
    }
}

/// A partition of a group's member indices. Each cluster is sorted and
/// clusters are ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterSet {
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster index of every member.
    pub fn labels(&self, members: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; members];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &m in cluster {
                labels[m] = c;
            }
        }
        labels
    }
}

/// `M`: the largest pairwise distance in the group; 0 for singletons.
pub fn max_pairwise_distance(group: &RefinerGroup) -> f64 {
    group
        .distances()
        .iter()
        .flat_map(|row| row.iter().copied())
        .fold(0.0, f64::max)
}

/// Full merge history of average-linkage agglomeration. Clusters are named
/// by their smallest member index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    size: usize,
    merges: Vec<(usize, usize, f64)>,
}

impl Dendrogram {
    pub fn build(group: &RefinerGroup) -> Self {
        Self::from_distances(&group.distances())
    }

    pub fn from_distances(d: &[Vec<f64>]) -> Self {
        let n = d.len();
        // pairwise sums and maxima between active clusters
        let mut sum: Vec<Vec<f64>> = d.to_vec();
        let mut max: Vec<Vec<f64>> = d.to_vec();
        let mut size = vec![1usize; n];
        let mut active = vec![true; n];
        let mut merges = Vec::with_capacity(n.saturating_sub(1));

        for _ in 1..n {
            let mut best: Option<(usize, usize, f64)> = None;
            for a in (0..n).filter(|&a| active[a]) {
                for b in (a + 1..n).filter(|&b| active[b]) {
                    let avg = (sum[a][b] / (size[a] * size[b]) as f64).min(max[a][b]);
                    if best.is_none_or(|(_, _, d)| avg < d) {
                        best = Some((a, b, avg));
                    }
                }
            }
            let (a, b, dist) = best.expect("at least two active clusters");
            merges.push((a, b, dist));
            active[b] = false;
            size[a] += size[b];
            for c in (0..n).filter(|&c| active[c] && c != a) {
                sum[a][c] += sum[b][c];
                sum[c][a] = sum[a][c];
                max[a][c] = max[a][c].max(max[b][c]);
                max[c][a] = max[a][c];
            }
        }
        Self { size: n, merges }
    }

    /// Merge steps as `(kept cluster, absorbed cluster, linkage distance)`.
    pub fn merges(&self) -> &[(usize, usize, f64)] {
        &self.merges
    }

    /// Replays merges until the first whose distance exceeds `cutoff`.
    pub fn cut(&self, cutoff: f64) -> ClusterSet {
        let mut clusters: Vec<Option<Vec<usize>>> = (0..self.size).map(|i| Some(vec![i])).collect();
        for &(a, b, d) in &self.merges {
            if d > cutoff {
                break;
            }
            let absorbed = clusters[b].take().expect("absorbed cluster is active");
            clusters[a].as_mut().expect("kept cluster is active").extend(absorbed);
        }
        let clusters = clusters
            .into_iter()
            .flatten()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        ClusterSet { clusters }
    }
}

/// Average-linkage agglomeration from singletons, merging the closest pair
/// while its distance is at most `cutoff`. Ties go to the pair with the
/// smallest member indices.
pub fn hac(group: &RefinerGroup, cutoff: f64) -> ClusterSet {
    Dendrogram::build(group).cut(cutoff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Linkage {
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringParams {
    /// `ε_c`, indexed by [`IntentCategory::index`].
    pub epsilon: [f64; 4],
    pub linkage: Linkage,
    pub grid_step: f64,
}

impl ClusteringParams {
    pub fn new(epsilon: [f64; 4], grid_step: f64) -> Result<Self> {
        if epsilon.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidArgument("every epsilon must lie in [0, 1]".into()));
        }
        if !(grid_step > 0.0) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        Ok(Self {
            epsilon,
            linkage: Linkage::Average,
            grid_step,
        })
    }

    pub fn uniform(epsilon: f64) -> Result<Self> {
        Self::new([epsilon; 4], DEFAULT_GRID_STEP)
    }

    pub fn epsilon(&self, category: IntentCategory) -> f64 {
        self.epsilon[category.index()]
    }
}

/// Clusters a group with cut-off `ε_c · M`.
pub fn cluster_group(group: &RefinerGroup, params: &ClusteringParams) -> ClusterSet {
    let dendrogram = Dendrogram::build(group);
    let m = max_pairwise_distance(group);
    dendrogram.cut(params.epsilon(group.category) * m)
}

/// Grid points `0, step, 2·step, ..., 1`.
pub fn epsilon_grid(grid_step: f64) -> Result<Vec<f64>> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} outside (0, 1]")));
    }
    let steps = (1.0 / grid_step).round();
    if (steps * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} does not divide 1")));
    }
    let steps = steps as usize;
    Ok((0..=steps).map(|i| i as f64 / steps as f64).collect())
}

/// A training group and the gold cluster label of each member.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldGroup {
    pub group: RefinerGroup,
    pub gold: Vec<usize>,
}

/// Grid search for the `ε` maximizing mean V-measure over the training
/// groups. Ties resolve to the smallest `ε`.
pub fn fit_epsilon(training: &[GoldGroup], category: IntentCategory, grid_step: f64) -> Result<f64> {
    if training.is_empty() {
        return Err(Error::Domain(format!("no training groups for {category}")));
    }
    if let Some(g) = training.iter().find(|g| g.group.category != category) {
        return Err(Error::InvalidArgument(format!(
            "training group of {} is {}, not {category}",
            g.group.entity_type, g.group.category
        )));
    }
    if let Some(g) = training.iter().find(|g| g.gold.len() != g.group.len()) {
        return Err(Error::InvalidArgument(format!(
            "gold labels for {} do not match its members",
            g.group.entity_type
        )));
    }
    let grid = epsilon_grid(grid_step)?;
    let prepared: Vec<(Dendrogram, f64)> = training
        .iter()
        .map(|g| (Dendrogram::build(&g.group), max_pairwise_distance(&g.group)))
        .collect();

    let mut best = (f64::NEG_INFINITY, 0.0);
    for &eps in &grid {
        let mut total = 0.0;
        for (g, (dendrogram, m)) in training.iter().zip(&prepared) {
            let predicted = dendrogram.cut(eps * m).labels(g.group.len());
            let table = ContingencyTable::from_labels(&g.gold, &predicted)?;
            total += homogeneity_completeness_v(&table).v_measure;
        }
        let mean = total / training.len() as f64;
        if mean > best.0 {
            best = (mean, eps);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn group(vectors: Vec<Vec<f64>>) -> RefinerGroup {
        RefinerGroup::from_vectors(
            EntityType::from_label("a.b").unwrap(),
            IntentCategory::Service,
            vectors.into_iter().enumerate().map(|(i, v)| (format!("r{i}"), v)).collect(),
        )
        .unwrap()
    }

    /// Two tight pairs: intra-pair distance ≈ 0.01, inter-pair ≈ 0.9.
    fn two_pairs() -> RefinerGroup {
        group(vec![
            vec![1.0, 0.1, 0.0],
            vec![1.0, 0.0, 0.1],
            vec![0.0, 1.0, 0.1],
            vec![0.1, 1.0, 0.0],
        ])
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert!((distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((distance(&[1.0, 1.0], &[2.0, 0.0]).unwrap() - 0.2929).abs() < 1e-4);
        assert!(distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn max_distance_matches_pair_scan() {
        assert_eq!(max_pairwise_distance(&group(vec![vec![1.0, 2.0]])), 0.0);
        assert_eq!(max_pairwise_distance(&group(vec![vec![1.0, 2.0], vec![1.0, 2.0]])), 0.0);
        let vs = vec![
            vec![1.0, 0.2, -0.3],
            vec![-0.5, 1.0, 0.0],
            vec![0.1, 0.1, 1.0],
            vec![0.7, -0.7, 0.2],
        ];
        let mut brute: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    brute = brute.max(1.0 - cosine(&vs[i], &vs[j]).unwrap());
                }
            }
        }
        assert!((max_pairwise_distance(&group(vs)) - brute).abs() < 1e-15);
    }

    #[test]
    fn cutoff_limits() {
        let g = two_pairs();
        assert_eq!(hac(&g, 0.0).len(), 4);
        assert_eq!(hac(&g, max_pairwise_distance(&g)).len(), 1);
        let dup = group(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(hac(&dup, 0.0).clusters, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn half_epsilon_finds_the_two_pairs() {
        let g = two_pairs();
        let set = cluster_group(&g, &ClusteringParams::uniform(0.5).unwrap());
        assert_eq!(set.clusters, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(cluster_group(&g, &ClusteringParams::uniform(0.0).unwrap()).len(), 4);
        assert_eq!(cluster_group(&g, &ClusteringParams::uniform(1.0).unwrap()).len(), 1);
    }

    #[test]
    fn fitting_recovers_pair_structure() {
        let g = GoldGroup { group: two_pairs(), gold: vec![0, 0, 1, 1] };
        let eps = fit_epsilon(&[g.clone()], IntentCategory::Service, 0.01).unwrap();
        let params = ClusteringParams::uniform(eps).unwrap();
        assert_eq!(cluster_group(&g.group, &params).clusters, vec![vec![0, 1], vec![2, 3]]);
        // exhaustive check: eps is the smallest grid value giving that partition
        for e in epsilon_grid(0.01).unwrap().into_iter().filter(|&e| e < eps) {
            assert_ne!(cluster_group(&g.group, &ClusteringParams::uniform(e).unwrap()).len(), 2);
        }
    }

    #[test]
    fn fitting_edge_cases() {
        let singletons = GoldGroup { group: two_pairs(), gold: vec![0, 1, 2, 3] };
        assert_eq!(fit_epsilon(&[singletons], IntentCategory::Service, 0.01).unwrap(), 0.0);

        let one = GoldGroup { group: two_pairs(), gold: vec![0, 0, 0, 0] };
        let eps = fit_epsilon(&[one.clone()], IntentCategory::Service, 0.01).unwrap();
        let grid = epsilon_grid(0.01).unwrap();
        let smallest = grid
            .iter()
            .copied()
            .find(|&e| cluster_group(&one.group, &ClusteringParams::uniform(e).unwrap()).len() == 1)
            .unwrap();
        assert_eq!(eps, smallest);

        assert!(matches!(fit_epsilon(&[], IntentCategory::Service, 0.01), Err(Error::Domain(_))));
        assert!(fit_epsilon(&[one.clone()], IntentCategory::Other, 0.01).is_err());
        assert!(fit_epsilon(&[one], IntentCategory::Service, 0.3).is_err());
    }

    #[test]
    fn grid_has_101_points() {
        let g = epsilon_grid(0.01).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!((g[0], g[7], g[100]), (0.0, 0.07, 1.0));
    }

    #[test]
    fn params_validation() {
        assert!(ClusteringParams::new([0.0, 0.5, 1.0, 1.1], 0.01).is_err());
        assert!(ClusteringParams::new([0.5; 4], 0.0).is_err());
    }

    fn arb_group() -> impl Strategy<Value = RefinerGroup> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..9)
            .prop_filter("non-zero", |vs| vs.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)))
            .prop_map(group)
    }

    proptest! {
        #[test]
        fn partitions_are_valid_and_monotone(g in arb_group(), c1 in 0.0f64..2.0, c2 in 0.0f64..2.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let a = hac(&g, lo);
            let b = hac(&g, hi);
            for set in [&a, &b] {
                let mut all: Vec<usize> = set.clusters.iter().flatten().copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..g.len()).collect::<Vec<_>>());
                prop_assert!(set.clusters.iter().all(|c| !c.is_empty()));
            }
            prop_assert!(b.len() <= a.len());
            prop_assert_eq!(hac(&g, max_pairwise_distance(&g)).len(), 1);
            prop_assert_eq!(hac(&g, lo), a);
        }
    }
}
