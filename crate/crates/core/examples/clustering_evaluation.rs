//! V-measure and the cross-validated clustering protocol with oracle and
//! predicted categories.

use intentkb::embedding::{PhraseVector, VectorSource};
use intentkb::eval::{evaluate_clustering, homogeneity_completeness_v, make_folds, ContingencyTable, GoldRefiner};
use intentkb::kb::{EntityType, IntentCategory};

fn main() -> intentkb::Result<()> {
    let table = ContingencyTable::from_labels(&["a", "a", "b", "b"], &[1, 1, 1, 2])?;
    let s = homogeneity_completeness_v(&table);
    println!("h = {:.3}, c = {:.3}, v = {:.3}", s.homogeneity, s.completeness, s.v_measure);

    use IntentCategory::*;
    let mut items = Vec::new();
    for (t, ty) in ["a.one", "a.two", "a.three", "a.four", "a.five"].iter().enumerate() {
        let shift = t as f64 * 0.01;
        for (refiner, category, cluster, v) in [
            ("book", Service, "booking", [1.0, shift]),
            ("booking", Service, "booking", [1.0, 0.02 + shift]),
            ("menu", Property, "menu", [shift, 1.0]),
            ("menus", Property, "menu", [0.03, 1.0]),
        ] {
            items.push(GoldRefiner {
                entity_type: EntityType::from_label(ty)?,
                refiner: refiner.into(),
                category,
                cluster: cluster.into(),
                vector: PhraseVector { vector: v.to_vec(), source: VectorSource::DirectLookup, covered_terms: 1 },
            });
        }
    }
    let labels: Vec<IntentCategory> = items.iter().map(|i| i.category).collect();
    let folds = make_folds(&labels, 2, 7)?;

    // a categorizer that puts "menus" under Service, splitting the menu cluster
    let predicted: Vec<IntentCategory> =
        items.iter().map(|i| if i.refiner == "menus" { Service } else { i.category }).collect();
    let eval = evaluate_clustering(&items, &predicted, &folds, 0.01, 0.5)?;
    println!("oracle    {:?}", eval.oracle);
    println!("automatic {:?}", eval.automatic);
    println!("{} (fold, type) pairs", eval.instances);
    Ok(())
}
