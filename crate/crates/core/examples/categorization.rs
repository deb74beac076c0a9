//! Features for (type, refiner) pairs and a random forest over them.

use std::collections::BTreeMap;

use intentkb::categorizer::{
    cross_validate, features, predict, train_forest, FeatureConfig, FeatureSet, ForestParams, LabeledInstance,
    SearchResult, SearchResultPage,
};
use intentkb::embedding::load_embeddings;
use intentkb::kb::{EntityType, IntentCategory};
use intentkb::pipeline::{io, load_search_store, StoreMode};

fn main() -> intentkb::Result<()> {
    let corpus = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus");
    let vocab = load_embeddings(corpus.join("embeddings.txt"))?;
    let search = load_search_store(&corpus.join("search.jsonl"), StoreMode::Replay)?;
    let labeled = io::parse_labeled(&std::fs::read_to_string(corpus.join("labeled.tsv")).unwrap(), "labeled.tsv")?;
    let cfg = FeatureConfig::default();

    // queries pair the refiner with the type's most popular entity
    let prominent = BTreeMap::from([("aviation.airline", "qantas"), ("music.artist", "adele")]);
    let instances: Vec<LabeledInstance> = labeled
        .iter()
        .map(|r| {
            let query = format!("{} {}", prominent[r.entity_type.label().as_str()], r.refiner);
            let page = search.get(&query).cloned().unwrap_or_else(|_| SearchResultPage::empty(&query));
            LabeledInstance {
                entity_type: r.entity_type.clone(),
                refiner: r.refiner.clone(),
                features: features(&r.entity_type, &r.refiner, &page, &vocab, &cfg),
                label: r.category,
            }
        })
        .collect();
    println!("{} labeled instances", instances.len());

    let params = ForestParams { seed: 42, ..ForestParams::default() };
    for set in FeatureSet::ALL {
        let cv = cross_validate(&instances, set, 5, &params)?;
        println!("{set:>9}: 5-fold accuracy {:.3}", cv.accuracy);
    }

    let forest = train_forest(&instances, FeatureSet::Combined, &params)?;
    let ty = EntityType::from_label("lodging.hotel")?;
    let page = SearchResultPage::new(
        "hilton sydney booking",
        vec![
            SearchResult {
                rank: 1,
                url: "https://www.hiltonsydney.com/booking".into(),
                domain: String::new(),
                title: "Booking - Hilton Sydney".into(),
                snippet: "Book your stay.".into(),
            },
            SearchResult {
                rank: 2,
                url: "https://booking.com/hiltonsydney/booking".into(),
                domain: String::new(),
                title: "booking hilton sydney".into(),
                snippet: "Deals and booking.".into(),
            },
        ],
    )?;
    let p = predict(&forest, &features(&ty, "booking", &page, &vocab, &cfg))?;
    println!("'booking' for {}: {} ({:.2} of trees)", ty.display(), p.category, p.confidence);
    assert!(IntentCategory::ALL.contains(&p.category));
    Ok(())
}
