//! Quad TSV serialization.
//!
//! One quadruple per line, `intentID<TAB>predicate<TAB>object<TAB>confidence`,
//! confidences with four decimals, preceded by a single header line. Profiles
//! appear ordered by type label, then sequence number.

use std::collections::HashSet;
use std::io::Write;

use super::{
    profile_to_quadruples, EntityType, IntentCategory, IntentId, IntentProfile, Predicate,
    ProfileRefiner,
};
use crate::error::{Error, Result};

pub const KB_HEADER: &str = "#subject\tpredicate\tobject\tconfidence";

fn canonical_order(kb: &[IntentProfile]) -> Vec<&IntentProfile> {
    let mut sorted: Vec<&IntentProfile> = kb.iter().collect();
    sorted.sort_by(|a, b| {
        a.entity_type()
            .label()
            .cmp(&b.entity_type().label())
            .then(a.id().seq().cmp(&b.id().seq()))
            .then_with(|| a.id().slug().cmp(b.id().slug()))
    });
    sorted
}

pub fn write_kb<W: Write>(kb: &[IntentProfile], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{KB_HEADER}")?;
    for profile in canonical_order(kb) {
        for q in profile_to_quadruples(profile) {
            writeln!(
                out,
                "{}\t{}\t{}\t{:.4}",
                q.subject, q.predicate, q.object, q.confidence
            )?;
        }
    }
    Ok(())
}

pub fn serialize_kb(kb: &[IntentProfile]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_kb(kb, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

struct Pending {
    id: IntentId,
    first_line: usize,
    entity_type: Option<EntityType>,
    category: Option<(IntentCategory, f64)>,
    refiners: Vec<ProfileRefiner>,
}

impl Pending {
    fn finish(self, source: &str) -> Result<IntentProfile> {
        let err = |reason: String| Error::parse(source, self.first_line, reason);
        let ty = self
            .entity_type
            .ok_or_else(|| err(format!("{} has no searchedForType row", self.id)))?;
        if &ty != self.id.entity_type() {
            return Err(err(format!("{} is typed {}", self.id, ty.display())));
        }
        let (category, conf) = self
            .category
            .ok_or_else(|| err(format!("{} has no ofCategory row", self.id)))?;
        if self.refiners.is_empty() {
            return Err(err(format!("{} has no expressedBy rows", self.id)));
        }
        IntentProfile::new(self.id, category, conf, self.refiners).map_err(|e| err(e.to_string()))
    }
}

/// Parses a quad TSV back into profiles. Errors carry the 1-based line number.
pub fn parse_kb(data: &[u8], source: &str) -> Result<Vec<IntentProfile>> {
    let text = std::str::from_utf8(data).map_err(|e| Error::parse(source, 0, e.to_string()))?;
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, KB_HEADER)) => {}
        _ => return Err(Error::parse(source, 1, "missing quad TSV header")),
    }

    let mut profiles = Vec::new();
    let mut seen = HashSet::new();
    let mut pending: Option<Pending> = None;
    let mut trailing = false;

    for (lineno, line) in lines {
        if line.is_empty() {
            trailing = true;
            continue;
        }
        let err = |reason: String| Error::parse(source, lineno, reason);
        if trailing {
            return Err(err("data after blank line".into()));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [subject, predicate, object, confidence] = fields[..] else {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        };
        let id: IntentId = subject.parse().map_err(|e: Error| err(e.to_string()))?;
        let predicate: Predicate = predicate.parse().map_err(|e: Error| err(e.to_string()))?;
        let confidence: f64 = confidence
            .parse()
            .map_err(|_| err(format!("bad confidence `{confidence}`")))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(err(format!("confidence {confidence} outside [0,1]")));
        }

        if pending.as_ref().is_some_and(|p| p.id != id) {
            profiles.push(pending.take().unwrap().finish(source)?);
        }
        let p = match pending.as_mut() {
            Some(p) => p,
            None => {
                if !seen.insert(id.clone()) {
                    return Err(err(format!("rows for {id} are not contiguous")));
                }
                pending.insert(Pending {
                    id,
                    first_line: lineno,
                    entity_type: None,
                    category: None,
                    refiners: Vec::new(),
                })
            }
        };

        match predicate {
            Predicate::SearchedForType => {
                if p.entity_type.is_some() {
                    return Err(err(format!("second searchedForType row for {}", p.id)));
                }
                if confidence != 1.0 {
                    return Err(err("searchedForType confidence must be 1".into()));
                }
                p.entity_type =
                    Some(EntityType::from_display(object).map_err(|e| err(e.to_string()))?);
            }
            Predicate::OfCategory => {
                if p.category.is_some() {
                    return Err(err(format!("second ofCategory row for {}", p.id)));
                }
                let cat: IntentCategory = object.parse().map_err(|e: Error| err(e.to_string()))?;
                p.category = Some((cat, confidence));
            }
            Predicate::ExpressedBy => p.refiners.push(ProfileRefiner {
                label: object.to_string(),
                conf: confidence,
            }),
        }
    }
    if let Some(p) = pending {
        profiles.push(p.finish(source)?);
    }
    Ok(profiles)
}
