//! Record/replay stores standing in for live suggestion and search services.

use std::collections::BTreeMap;

use intentkb::pipeline::{FixtureStore, StoreMode};

fn main() -> intentkb::Result<()> {
    let recorded = BTreeMap::from([("sydney".to_string(), vec!["sydney map".to_string(), "sydney weather".into()])]);

    let mut replay = FixtureStore::from_entries(StoreMode::Replay, recorded.clone());
    let mut live = |entity: &str| -> intentkb::Result<Vec<String>> { Ok(vec![format!("{entity} map")]) };
    println!("replay sydney: {:?}", replay.lookup("sydney", Some(&mut live))?);
    println!("replay paris:  {:?}", replay.lookup("paris", Some(&mut live))?);

    let mut record = FixtureStore::from_entries(StoreMode::RecordMissing, recorded);
    println!("record paris:  {:?}", record.lookup("paris", Some(&mut live))?);
    println!("newly recorded: {}", record.newly_recorded());
    println!("keys: {:?}", record.entries().keys().collect::<Vec<_>>());
    Ok(())
}
