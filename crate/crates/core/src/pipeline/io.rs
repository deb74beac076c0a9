//! Tab-separated stage artifacts. Every file starts with a `#` header line.

use std::fmt::Write as _;
use std::path::Path;

use crate::acquisition::TypedRefiner;
use crate::categorizer::CategoryPrediction;
use crate::error::{Error, Result};
use crate::kb::{EntityType, IntentCategory};

pub const TYPES_FILE: &str = "types.tsv";
pub const REFINERS_FILE: &str = "refiners.tsv";
pub const CATEGORIES_FILE: &str = "categories.tsv";
pub const EPSILON_FILE: &str = "epsilon.tsv";
pub const CLUSTERS_FILE: &str = "clusters.tsv";
pub const KB_FILE: &str = "kb.tsv";
pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const SAMPLE_FILE: &str = "sample.tsv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRow {
    pub entity_type: EntityType,
    pub prominent_entity: String,
    pub qualifying_entities: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryRow {
    pub entity_type: EntityType,
    pub refiner: String,
    pub prediction: CategoryPrediction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub category: IntentCategory,
    pub epsilon: f64,
    /// `fixed`, `fitted` or `default`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterRow {
    pub entity_type: EntityType,
    pub category: IntentCategory,
    pub cluster: usize,
    pub refiner: String,
}

/// A row of the labeled set: `type<TAB>refiner<TAB>category[<TAB>cluster]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRow {
    pub entity_type: EntityType,
    pub refiner: String,
    pub category: IntentCategory,
    pub cluster: Option<String>,
}

pub(crate) fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads an artifact produced by `stage`; absence is reported as such.
pub(crate) fn read_artifact(path: &Path, stage: &'static str) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            stage,
        });
    }
    read_input(path)
}

pub(crate) fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Non-comment rows with their 1-based line numbers, checked for a column
/// count within `cols`.
fn rows<'a>(
    text: &'a str,
    source: &'a str,
    cols: std::ops::RangeInclusive<usize>,
) -> impl Iterator<Item = Result<(usize, Vec<&'a str>)>> + 'a {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(move |(i, l)| {
            let fields: Vec<&str> = l.split('\t').collect();
            if cols.contains(&fields.len()) {
                Ok((i + 1, fields))
            } else {
                Err(Error::parse(
                    source,
                    i + 1,
                    format!("expected {} to {} columns, found {}", cols.start(), cols.end(), fields.len()),
                ))
            }
        })
}

fn field<T: std::str::FromStr>(v: &str, source: &str, line: usize, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| Error::parse(source, line, format!("bad {what} `{v}`: {e}")))
}

pub fn format_types(rows: &[TypeRow]) -> String {
    let mut s = String::from("#type\tprominent_entity\tqualifying_entities\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}", r.entity_type, r.prominent_entity, r.qualifying_entities);
    }
    s
}

pub fn parse_types(text: &str, source: &str) -> Result<Vec<TypeRow>> {
    rows(text, source, 3..=3)
        .map(|r| {
            let (line, f) = r?;
            Ok(TypeRow {
                entity_type: field(f[0], source, line, "type")?,
                prominent_entity: f[1].to_string(),
                qualifying_entities: field(f[2], source, line, "count")?,
            })
        })
        .collect()
}

pub fn format_refiners(rows: &[TypedRefiner]) -> String {
    let mut s = String::from("#type\trefiner\tsupport\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}", r.entity_type, r.refiner, r.support);
    }
    s
}

pub fn parse_refiners(text: &str, source: &str) -> Result<Vec<TypedRefiner>> {
    rows(text, source, 3..=3)
        .map(|r| {
            let (line, f) = r?;
            Ok(TypedRefiner {
                entity_type: field(f[0], source, line, "type")?,
                refiner: f[1].to_string(),
                support: field(f[2], source, line, "support")?,
            })
        })
        .collect()
}

pub fn format_categories(rows: &[CategoryRow]) -> String {
    let mut s = String::from("#type\trefiner\tcategory\tconfidence\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            r.entity_type, r.refiner, r.prediction.category, r.prediction.confidence
        );
    }
    s
}

pub fn parse_categories(text: &str, source: &str) -> Result<Vec<CategoryRow>> {
    rows(text, source, 4..=4)
        .map(|r| {
            let (line, f) = r?;
            let confidence: f64 = field(f[3], source, line, "confidence")?;
            if !(0.0..=1.0).contains(&confidence) {
                return Err(Error::parse(source, line, "confidence outside [0, 1]"));
            }
            Ok(CategoryRow {
                entity_type: field(f[0], source, line, "type")?,
                refiner: f[1].to_string(),
                prediction: CategoryPrediction {
                    category: field(f[2], source, line, "category")?,
                    confidence,
                },
            })
        })
        .collect()
}

pub fn format_epsilons(rows: &[EpsilonRow]) -> String {
    let mut s = String::from("#category\tepsilon\tsource\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{:.4}\t{}", r.category, r.epsilon, r.source);
    }
    s
}

pub fn format_clusters(rows: &[ClusterRow]) -> String {
    let mut s = String::from("#type\tcategory\tcluster\trefiner\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", r.entity_type, r.category, r.cluster, r.refiner);
    }
    s
}

pub fn parse_clusters(text: &str, source: &str) -> Result<Vec<ClusterRow>> {
    rows(text, source, 4..=4)
        .map(|r| {
            let (line, f) = r?;
            Ok(ClusterRow {
                entity_type: field(f[0], source, line, "type")?,
                category: field(f[1], source, line, "category")?,
                cluster: field(f[2], source, line, "cluster")?,
                refiner: f[3].to_string(),
            })
        })
        .collect()
}

pub fn parse_labeled(text: &str, source: &str) -> Result<Vec<LabeledRow>> {
    let mut seen = std::collections::HashSet::new();
    rows(text, source, 3..=4)
        .map(|r| {
            let (line, f) = r?;
            let row = LabeledRow {
                entity_type: field(f[0], source, line, "type")?,
                refiner: crate::acquisition::normalize_query(f[1]),
                category: field(f[2], source, line, "category")?,
                cluster: f.get(3).map(|c| c.trim()).filter(|c| !c.is_empty()).map(str::to_string),
            };
            if row.refiner.is_empty() {
                return Err(Error::parse(source, line, "empty refiner"));
            }
            if !seen.insert((row.entity_type.clone(), row.refiner.clone())) {
                return Err(Error::parse(source, line, "refiner labeled twice for the same type"));
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty() -> EntityType {
        EntityType::from_label("travel.travel_destination").unwrap()
    }

    #[test]
    fn artifacts_round_trip() {
        let refiners = vec![TypedRefiner {
            entity_type: ty(),
            refiner: "map".into(),
            support: 3,
        }];
        assert_eq!(parse_refiners(&format_refiners(&refiners), "r").unwrap(), refiners);

        let cats = vec![CategoryRow {
            entity_type: ty(),
            refiner: "map".into(),
            prediction: CategoryPrediction {
                category: IntentCategory::Service,
                confidence: 0.37,
            },
        }];
        assert_eq!(parse_categories(&format_categories(&cats), "c").unwrap(), cats);

        let clusters = vec![ClusterRow {
            entity_type: ty(),
            category: IntentCategory::Property,
            cluster: 2,
            refiner: "weather".into(),
        }];
        assert_eq!(parse_clusters(&format_clusters(&clusters), "k").unwrap(), clusters);

        let types = vec![TypeRow {
            entity_type: ty(),
            prominent_entity: "sydney".into(),
            qualifying_entities: 4,
        }];
        assert_eq!(parse_types(&format_types(&types), "t").unwrap(), types);
    }

    #[test]
    fn labeled_rows() {
        let text = "#type\trefiner\tcategory\tcluster\ntravel.travel_destination\tMap\tservice\tmaps\ntravel.travel_destination\tweather\tproperty\n";
        let rows = parse_labeled(text, "l").unwrap();
        assert_eq!(rows[0].refiner, "map");
        assert_eq!(rows[0].cluster.as_deref(), Some("maps"));
        assert_eq!(rows[1].cluster, None);
        let dup = "a.b\tx\tservice\na.b\tx\tother\n";
        assert!(matches!(parse_labeled(dup, "l"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_labeled("a.b\tx\n", "l"), Err(Error::Parse { line: 1, .. })));
    }
}
