//! Scoring clusters into intent profiles and writing the quadruple TSV.

use std::collections::HashMap;

use intentkb::builder::{build_profiles, write_profiles_jsonl};
use intentkb::categorizer::CategoryPrediction;
use intentkb::clustering::{cluster_group, ClusteringParams, RefinerGroup};
use intentkb::kb::{make_intent_id, parse_kb, serialize_kb, EntityType, IntentCategory, IntentProfile, ProfileRefiner};

fn main() -> intentkb::Result<()> {
    let airline = EntityType::from_label("aviation.airline")?;

    // a hand-made profile with known confidences
    let profile = IntentProfile::new(
        make_intent_id(&airline, 65, "customer service")?,
        IntentCategory::Service,
        0.866,
        vec![
            ProfileRefiner { label: "customer service".into(), conf: 0.688 },
            ProfileRefiner { label: "customer care".into(), conf: 0.656 },
        ],
    )?;
    println!("profile confidence {:.3}", profile.profile_confidence());
    print!("{}", String::from_utf8(serialize_kb(std::slice::from_ref(&profile))).unwrap());

    // profiles built from clustered vectors and classifier confidences
    let group = RefinerGroup::from_vectors(
        airline.clone(),
        IntentCategory::Service,
        vec![
            ("check in".into(), vec![1.0, 0.1]),
            ("online check in".into(), vec![1.0, 0.2]),
            ("flight status".into(), vec![0.1, 1.0]),
        ],
    )?;
    let set = cluster_group(&group, &ClusteringParams::uniform(0.5)?);
    let predictions: HashMap<_, _> = [("check in", 0.9), ("online check in", 0.7), ("flight status", 0.8)]
        .into_iter()
        .map(|(r, c)| {
            (
                (airline.clone(), r.to_string()),
                CategoryPrediction { category: IntentCategory::Service, confidence: c },
            )
        })
        .collect();
    let (kb, _) = build_profiles(&[(group, set)], &predictions)?;
    let tsv = serialize_kb(&kb);
    print!("{}", String::from_utf8(tsv.clone()).unwrap());
    assert_eq!(parse_kb(&tsv, "memory")?, kb);

    write_profiles_jsonl(&kb, std::io::stdout().lock())?;
    Ok(())
}
