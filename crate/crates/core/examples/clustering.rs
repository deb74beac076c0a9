//! Average-linkage clustering of same-category refiners with a normalized
//! cut-off, and fitting that cut-off from gold clusters.

use intentkb::clustering::{cluster_group, fit_epsilon, max_pairwise_distance, ClusteringParams, Dendrogram, GoldGroup, RefinerGroup};
use intentkb::kb::{EntityType, IntentCategory};

fn main() -> intentkb::Result<()> {
    let ty = EntityType::from_label("aviation.airline")?;
    let group = RefinerGroup::from_vectors(
        ty,
        IntentCategory::Property,
        vec![
            ("baggage".into(), vec![1.0, 0.1, 0.0]),
            ("baggage allowance".into(), vec![1.0, 0.0, 0.1]),
            ("seat map".into(), vec![0.0, 1.0, 0.1]),
            ("seating".into(), vec![0.1, 1.0, 0.0]),
        ],
    )?;
    println!("M = {:.4}", max_pairwise_distance(&group));
    for (a, b, d) in Dendrogram::build(&group).merges() {
        println!("merge {a} + {b} at {d:.4}");
    }

    for eps in [0.0, 0.5, 1.0] {
        let set = cluster_group(&group, &ClusteringParams::uniform(eps)?);
        let named: Vec<Vec<&str>> = set
            .clusters
            .iter()
            .map(|c| c.iter().map(|&i| group.members()[i].0.as_str()).collect())
            .collect();
        println!("eps = {eps}: {named:?}");
    }

    let gold = GoldGroup { group, gold: vec![0, 0, 1, 1] };
    let eps = fit_epsilon(&[gold], IntentCategory::Property, 0.01)?;
    println!("fitted eps = {eps}");
    Ok(())
}
