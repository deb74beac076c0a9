//! Cross-validated clustering evaluation with oracle and automatically
//! assigned categories.
//!
//! For each fold, `ε_c` is fitted on the other folds. The held-out refiners
//! of every type are then grouped by category (gold or predicted), clustered,
//! flattened, and scored against the type's gold clusters. Scores are
//! averaged over (fold, type) pairs.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{flatten, score_partitions, CategoryClusters, ClusteringScores};
use crate::clustering::{cluster_group, fit_epsilon, ClusteringParams, GoldGroup, RefinerGroup};
use crate::embedding::PhraseVector;
use crate::error::{Error, Result};
use crate::kb::{EntityType, IntentCategory};

/// A labeled refiner with its gold category and gold intent cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldRefiner {
    pub entity_type: EntityType,
    pub refiner: String,
    pub category: IntentCategory,
    /// Gold cluster name, unique within the type.
    pub cluster: String,
    pub vector: PhraseVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringEvaluation {
    pub oracle: ClusteringScores,
    pub automatic: ClusteringScores,
    /// Number of (fold, type) pairs averaged.
    pub instances: usize,
    /// Fitted `ε_c` per fold, indexed by category.
    pub fold_epsilons: Vec<[f64; 4]>,
}

fn gold_groups(items: &[&GoldRefiner]) -> Result<BTreeMap<IntentCategory, Vec<GoldGroup>>> {
    let mut by_key: BTreeMap<(&EntityType, IntentCategory), Vec<&GoldRefiner>> = BTreeMap::new();
    for it in items {
        by_key.entry((&it.entity_type, it.category)).or_default().push(it);
    }
    let mut out: BTreeMap<IntentCategory, Vec<GoldGroup>> = BTreeMap::new();
    for ((ty, cat), members) in by_key {
        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        let gold = members
            .iter()
            .map(|m| {
                let next = names.len();
                *names.entry(m.cluster.as_str()).or_insert(next)
            })
            .collect();
        let group = RefinerGroup::new(
            ty.clone(),
            cat,
            members.iter().map(|m| (m.refiner.clone(), m.vector.clone())).collect(),
        )?;
        out.entry(cat).or_default().push(GoldGroup { group, gold });
    }
    Ok(out)
}

fn cluster_by(
    items: &[&GoldRefiner],
    categories: &[IntentCategory],
    params: &ClusteringParams,
) -> Result<Vec<CategoryClusters>> {
    let mut by_cat: BTreeMap<IntentCategory, Vec<&GoldRefiner>> = BTreeMap::new();
    for (it, &c) in items.iter().zip(categories) {
        by_cat.entry(c).or_default().push(it);
    }
    let mut out = Vec::new();
    for (cat, members) in by_cat {
        let group = RefinerGroup::new(
            members[0].entity_type.clone(),
            cat,
            members.iter().map(|m| (m.refiner.clone(), m.vector.clone())).collect(),
        )?;
        let set = cluster_group(&group, params);
        out.push(CategoryClusters {
            entity_type: group.entity_type.clone(),
            category: cat,
            clusters: set
                .clusters
                .iter()
                .map(|c| c.iter().map(|&i| members[i].refiner.clone()).collect())
                .collect(),
        });
    }
    Ok(out)
}

fn mean_scores(all: &[ClusteringScores]) -> ClusteringScores {
    let n = all.len().max(1) as f64;
    ClusteringScores {
        homogeneity: all.iter().map(|s| s.homogeneity).sum::<f64>() / n,
        completeness: all.iter().map(|s| s.completeness).sum::<f64>() / n,
        v_measure: all.iter().map(|s| s.v_measure).sum::<f64>() / n,
    }
}

/// Runs the protocol. `predicted` holds the automatically assigned category
/// of each item and `folds` its fold; categories without training groups in
/// a fold use `fallback_epsilon`.
pub fn evaluate_clustering(
    items: &[GoldRefiner],
    predicted: &[IntentCategory],
    folds: &[usize],
    grid_step: f64,
    fallback_epsilon: f64,
) -> Result<ClusteringEvaluation> {
    if items.len() != predicted.len() || items.len() != folds.len() {
        return Err(Error::InvalidArgument("clustering evaluation inputs are not aligned".into()));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    let mut oracle = Vec::new();
    let mut automatic = Vec::new();
    let mut fold_epsilons = Vec::new();

    for fold in 0..k {
        let train: Vec<&GoldRefiner> = (0..items.len())
            .filter(|&i| folds[i] != fold)
            .map(|i| &items[i])
            .collect();
        let groups = gold_groups(&train)?;
        let mut eps = [fallback_epsilon; 4];
        for (cat, gs) in &groups {
            eps[cat.index()] = fit_epsilon(gs, *cat, grid_step)?;
        }
        fold_epsilons.push(eps);
        let params = ClusteringParams::new(eps, grid_step)?;

        let mut by_type: BTreeMap<&EntityType, Vec<usize>> = BTreeMap::new();
        for i in (0..items.len()).filter(|&i| folds[i] == fold) {
            by_type.entry(&items[i].entity_type).or_default().push(i);
        }
        for (ty, idx) in by_type {
            let members: Vec<&GoldRefiner> = idx.iter().map(|&i| &items[i]).collect();
            let mut gold: BTreeMap<&str, Vec<String>> = BTreeMap::new();
            for m in &members {
                gold.entry(m.cluster.as_str()).or_default().push(m.refiner.clone());
            }
            let gold: Vec<Vec<String>> = gold.into_values().collect();

            let gold_cats: Vec<IntentCategory> = members.iter().map(|m| m.category).collect();
            let auto_cats: Vec<IntentCategory> = idx.iter().map(|&i| predicted[i]).collect();
            for (cats, sink) in [(&gold_cats, &mut oracle), (&auto_cats, &mut automatic)] {
                let flat = flatten(&cluster_by(&members, cats, &params)?)?;
                sink.push(score_partitions(&gold, &flat[ty])?);
            }
        }
    }
    Ok(ClusteringEvaluation {
        oracle: mean_scores(&oracle),
        automatic: mean_scores(&automatic),
        instances: oracle.len(),
        fold_epsilons,
    })
}
