//! Evaluation machinery: clustering metrics, folds, flattening, sampling
//! and annotator agreement.

mod agreement;
mod metrics;
mod protocol;
mod sampling;

pub use agreement::{fleiss_kappa, majority_vote, AnnotatedItem, AnnotationSet, TIE_LABEL};
pub use metrics::{accuracy, homogeneity_completeness_v, ClusteringScores, ContingencyTable};
pub use protocol::{evaluate_clustering, ClusteringEvaluation, GoldRefiner};
pub use sampling::{confidence_bucket, stratified_sample, BucketSample, SampleParams, StratifiedSample};

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kb::{EntityType, IntentCategory};

/// Stratified fold assignment: instances of each label are shuffled and dealt
/// round-robin, continuing the deal across labels so fold sizes differ by at
/// most one. The same labels and seed always give the same folds.
pub fn make_folds<L: Ord>(labels: &[L], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let mut by_label: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut dealt = 0;
    for members in by_label.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(folds)
}

/// Clusters of refiner labels for one (type, category).
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryClusters {
    pub entity_type: EntityType,
    pub category: IntentCategory,
    pub clusters: Vec<Vec<String>>,
}

/// Drops the category level: the clusters of every category of a type are
/// collected into one partition of that type's refiners. Clusters are kept
/// as they are; none are merged.
pub fn flatten(per_category: &[CategoryClusters]) -> Result<BTreeMap<EntityType, Vec<Vec<String>>>> {
    let mut out: BTreeMap<EntityType, Vec<Vec<String>>> = BTreeMap::new();
    let mut owner: HashMap<(&EntityType, &str), IntentCategory> = HashMap::new();
    for cc in per_category {
        for refiner in cc.clusters.iter().flatten() {
            if let Some(prev) = owner.insert((&cc.entity_type, refiner), cc.category) {
                return Err(Error::InvalidArgument(format!(
                    "refiner `{refiner}` of {} appears under both {prev} and {}",
                    cc.entity_type, cc.category
                )));
            }
        }
        out.entry(cc.entity_type.clone())
            .or_default()
            .extend(cc.clusters.iter().cloned());
    }
    Ok(out)
}

/// Scores predicted clusters against gold clusters over the same refiners.
pub fn score_partitions(gold: &[Vec<String>], predicted: &[Vec<String>]) -> Result<ClusteringScores> {
    let label_of = |parts: &[Vec<String>]| -> BTreeMap<String, usize> {
        parts
            .iter()
            .enumerate()
            .flat_map(|(c, members)| members.iter().map(move |m| (m.clone(), c)))
            .collect()
    };
    let g = label_of(gold);
    let p = label_of(predicted);
    if g.len() != p.len() || g.keys().ne(p.keys()) {
        return Err(Error::InvalidArgument("gold and predicted partitions cover different refiners".into()));
    }
    let gold_labels: Vec<usize> = g.values().copied().collect();
    let pred_labels: Vec<usize> = p.values().copied().collect();
    Ok(homogeneity_completeness_v(&ContingencyTable::from_labels(&gold_labels, &pred_labels)?))
}
