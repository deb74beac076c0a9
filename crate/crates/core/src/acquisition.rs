//! Refiner acquisition: from per-entity query suggestions to supported
//! type-level refiners.
//!
//! A suggestion `hilton nyc` for the entity `hilton` yields the refiner `nyc`,
//! which is then credited to every type the entity carries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kb::EntityType;

pub const DEFAULT_POP_THRESHOLD: u64 = 3000;
pub const DEFAULT_MIN_ENTITIES: usize = 100;
pub const DEFAULT_TOP_K: usize = 1000;
pub const DEFAULT_MIN_SUPPORT: usize = 5;

/// One (entity, type) pairing with the entity's popularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub entity_name: String,
    pub entity_type: EntityType,
    pub popularity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuggestionRecord {
    pub entity_name: String,
    pub suggestion: String,
}

impl SuggestionRecord {
    pub fn new(entity_name: &str, suggestion: &str) -> Self {
        Self {
            entity_name: normalize_query(entity_name),
            suggestion: normalize_query(suggestion),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedRefiner {
    pub entity_type: EntityType,
    pub refiner: String,
    pub support: usize,
}

/// Lowercases and collapses whitespace runs into single spaces.
pub fn normalize_query(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Types with at least `min_entities` entities whose popularity exceeds
/// `pop_threshold`, sorted by label.
pub fn select_types(entities: &[EntityRecord], pop_threshold: u64, min_entities: usize) -> Vec<EntityType> {
    let mut counts: BTreeMap<String, (EntityType, BTreeSet<&str>)> = BTreeMap::new();
    for e in entities.iter().filter(|e| e.popularity > pop_threshold) {
        counts
            .entry(e.entity_type.label())
            .or_insert_with(|| (e.entity_type.clone(), BTreeSet::new()))
            .1
            .insert(&e.entity_name);
    }
    counts
        .into_values()
        .filter(|(_, names)| names.len() >= min_entities)
        .map(|(ty, _)| ty)
        .collect()
}

/// The `k` most popular entities of a type; ties go to the lexicographically
/// smaller name.
pub fn top_entities(entities: &[EntityRecord], entity_type: &EntityType, k: usize) -> Vec<EntityRecord> {
    let mut of_type: Vec<&EntityRecord> = entities
        .iter()
        .filter(|e| &e.entity_type == entity_type)
        .collect();
    of_type.sort_by(|a, b| {
        b.popularity
            .cmp(&a.popularity)
            .then_with(|| a.entity_name.cmp(&b.entity_name))
    });
    of_type.dedup_by(|a, b| a.entity_name == b.entity_name);
    of_type.into_iter().take(k).cloned().collect()
}

/// The refiner of a suggestion following `[entity] [refiner]`, if any.
pub fn extract_refiner<'a>(entity_name: &str, suggestion: &'a str) -> Option<&'a str> {
    let rest = suggestion.strip_prefix(entity_name)?.strip_prefix(' ')?;
    (!rest.trim().is_empty()).then_some(rest)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcquisitionDiagnostics {
    /// Suggestions whose entity is not among the given entity records.
    pub unknown_entity: usize,
    /// Suggestions not of the form `[entity] [refiner]`.
    pub unmatched: usize,
    /// Exact repeats of an (entity, suggestion) record.
    pub duplicate_suggestions: usize,
    /// Type-level refiners dropped for insufficient support.
    pub below_support: usize,
}

/// Counts, for each (type, refiner), the distinct suggestions that produce it
/// and keeps pairs with support of at least `min_support`.
pub fn aggregate_refiners(
    suggestions: &[SuggestionRecord],
    entities: &[EntityRecord],
    min_support: usize,
) -> (Vec<TypedRefiner>, AcquisitionDiagnostics) {
    let mut types_of: HashMap<&str, BTreeSet<&EntityType>> = HashMap::new();
    for e in entities {
        types_of.entry(&e.entity_name).or_default().insert(&e.entity_type);
    }

    let mut diag = AcquisitionDiagnostics::default();
    let distinct: BTreeSet<&SuggestionRecord> = suggestions.iter().collect();
    diag.duplicate_suggestions = suggestions.len() - distinct.len();

    let mut support: BTreeMap<(String, &str), (&EntityType, usize)> = BTreeMap::new();
    for s in distinct {
        let Some(types) = types_of.get(s.entity_name.as_str()) else {
            diag.unknown_entity += 1;
            continue;
        };
        let Some(refiner) = extract_refiner(&s.entity_name, &s.suggestion) else {
            diag.unmatched += 1;
            continue;
        };
        for ty in types {
            support.entry((ty.label(), refiner)).or_insert((ty, 0)).1 += 1;
        }
    }

    let mut out = Vec::new();
    for ((_, refiner), (ty, count)) in support {
        if count >= min_support {
            out.push(TypedRefiner {
                entity_type: ty.clone(),
                refiner: refiner.to_string(),
                support: count,
            });
        } else {
            diag.below_support += 1;
        }
    }
    (out, diag)
}

#[derive(Deserialize)]
struct EntityLine {
    entity: String,
    types: Vec<String>,
    popularity: u64,
}

#[derive(Deserialize)]
struct SuggestionLine {
    entity: String,
    suggestion: String,
}

fn read_jsonl<T, F>(path: &Path, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<()>,
{
    let file = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display().to_string(), i + 1, e.to_string()))?;
        f(i + 1, rec)?;
    }
    Ok(())
}

/// Reads `{"entity", "types", "popularity"}` lines; an entity with several
/// types yields one record per type.
pub fn load_entities(path: impl AsRef<Path>) -> Result<Vec<EntityRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    read_jsonl(path, |line, rec: EntityLine| {
        let name = normalize_query(&rec.entity);
        if name.is_empty() {
            return Err(Error::parse(path.display().to_string(), line, "empty entity name"));
        }
        for t in &rec.types {
            let entity_type = EntityType::from_label(t)
                .map_err(|e| Error::parse(path.display().to_string(), line, e.to_string()))?;
            out.push(EntityRecord {
                entity_name: name.clone(),
                entity_type,
                popularity: rec.popularity,
            });
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn load_suggestions(path: impl AsRef<Path>) -> Result<Vec<SuggestionRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    read_jsonl(path, |line, rec: SuggestionLine| {
        let r = SuggestionRecord::new(&rec.entity, &rec.suggestion);
        if r.entity_name.is_empty() || r.suggestion.is_empty() {
            return Err(Error::parse(path.display().to_string(), line, "empty suggestion field"));
        }
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ty(label: &str) -> EntityType {
        EntityType::from_label(label).unwrap()
    }

    fn ent(name: &str, t: &str, pop: u64) -> EntityRecord {
        EntityRecord {
            entity_name: name.into(),
            entity_type: ty(t),
            popularity: pop,
        }
    }

    #[test]
    fn refiner_extraction() {
        assert_eq!(extract_refiner("hilton", "hilton nyc"), Some("nyc"));
        assert_eq!(extract_refiner("sydney", "sydney map"), Some("map"));
        assert_eq!(extract_refiner("hilton", "paris hilton"), None);
        assert_eq!(extract_refiner("hilton", "hilton"), None);
        assert_eq!(extract_refiner("hilton", "hiltonia map"), None);
    }

    #[test]
    fn type_selection_counts_strictly_above_threshold() {
        let entities = vec![
            ent("a", "x.one", 10),
            ent("b", "x.one", 11),
            ent("c", "x.two", 11),
            ent("d", "x.two", 10),
            ent("e", "x.three", 1),
        ];
        assert_eq!(select_types(&entities, 10, 2), Vec::<EntityType>::new());
        assert_eq!(select_types(&entities, 9, 2), vec![ty("x.one"), ty("x.two")]);

        let fixture = vec![
            ent("a", "t.a", 50),
            ent("b", "t.a", 60),
            ent("c", "t.b", 70),
            ent("d", "t.b", 5),
            ent("e", "t.c", 1),
        ];
        assert_eq!(select_types(&fixture, 10, 2), vec![ty("t.a")]);
    }

    #[test]
    fn ninety_nine_entities_are_not_enough() {
        let entities: Vec<_> = (0..99).map(|i| ent(&format!("e{i}"), "a.b", 5000)).collect();
        assert!(select_types(&entities, DEFAULT_POP_THRESHOLD, DEFAULT_MIN_ENTITIES).is_empty());
        let mut more = entities;
        more.push(ent("e99", "a.b", 5000));
        assert_eq!(select_types(&more, DEFAULT_POP_THRESHOLD, DEFAULT_MIN_ENTITIES).len(), 1);
    }

    #[test]
    fn top_entities_ordering() {
        let entities = vec![ent("low", "a.b", 5), ent("high", "a.b", 10)];
        assert_eq!(top_entities(&entities, &ty("a.b"), 1)[0].entity_name, "high");
        let tied = vec![ent("berlin", "a.b", 7), ent("athens", "a.b", 7)];
        assert_eq!(top_entities(&tied, &ty("a.b"), 1)[0].entity_name, "athens");
        assert_eq!(top_entities(&tied, &ty("a.b"), 5).len(), 2);
    }

    #[test]
    fn aggregation_examples() {
        let entities = vec![
            ent("sydney", "travel.travel_destination", 9000),
            ent("paris", "travel.travel_destination", 9500),
        ];
        let sugg = vec![
            SuggestionRecord::new("sydney", "sydney map"),
            SuggestionRecord::new("paris", "paris map"),
            SuggestionRecord::new("paris", "paris hilton"),
            SuggestionRecord::new("paris", "paris hilton"),
            SuggestionRecord::new("rome", "rome map"),
            SuggestionRecord::new("sydney", "map of sydney"),
        ];
        let (out, diag) = aggregate_refiners(&sugg, &entities, 2);
        assert_eq!(
            out,
            vec![TypedRefiner {
                entity_type: ty("travel.travel_destination"),
                refiner: "map".into(),
                support: 2
            }]
        );
        assert_eq!(diag.unknown_entity, 1);
        assert_eq!(diag.unmatched, 1);
        assert_eq!(diag.duplicate_suggestions, 1);
        assert_eq!(diag.below_support, 1);

        let (single, _) = aggregate_refiners(&sugg[..1], &entities, 2);
        assert!(single.is_empty());
    }

    #[test]
    fn multi_typed_entities_credit_every_type() {
        let entities = vec![ent("hilton", "lodging.hotel", 1), ent("hilton", "business.brand", 1)];
        let (out, _) = aggregate_refiners(&[SuggestionRecord::new("hilton", "hilton jobs")], &entities, 1);
        let types: Vec<String> = out.iter().map(|r| r.entity_type.label()).collect();
        assert_eq!(types, ["business.brand", "lodging.hotel"]);
    }

    proptest! {
        #[test]
        fn extraction_inverts_construction(e in "[a-z]{1,8}( [a-z]{1,8}){0,2}", r in "[a-z]{1,8}( [a-z]{1,8}){0,2}") {
            let q = format!("{e} {r}");
            prop_assert_eq!(extract_refiner(&e, &q), Some(r.as_str()));
        }

        #[test]
        fn aggregation_matches_recount_and_ignores_order(
            picks in prop::collection::vec((0usize..4, 0usize..5), 0..60),
            min_support in 1usize..4,
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let names = ["ann", "bob", "cy", "dee"];
            let refiners = ["map", "news", "tour dates", "x", "bob"];
            let entities = vec![
                ent("ann", "a.one", 1), ent("bob", "a.one", 1),
                ent("cy", "a.two", 1), ent("dee", "a.two", 1), ent("dee", "a.one", 1),
            ];
            let sugg: Vec<SuggestionRecord> = picks
                .iter()
                .map(|&(e, r)| SuggestionRecord::new(names[e], &format!("{} {}", names[e], refiners[r])))
                .collect();
            let (out, _) = aggregate_refiners(&sugg, &entities, min_support);

            // brute-force recount over distinct suggestions
            let mut distinct = sugg.clone();
            distinct.sort();
            distinct.dedup();
            for tr in &out {
                let count = distinct
                    .iter()
                    .filter(|s| {
                        entities.iter().any(|e| e.entity_name == s.entity_name && e.entity_type == tr.entity_type)
                            && extract_refiner(&s.entity_name, &s.suggestion) == Some(tr.refiner.as_str())
                    })
                    .count();
                prop_assert_eq!(count, tr.support);
                prop_assert!(tr.support >= min_support);
            }

            let mut shuffled = sugg.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut ents = entities.clone();
            ents.reverse();
            prop_assert_eq!(aggregate_refiners(&shuffled, &ents, min_support).0, out);
        }
    }
}
