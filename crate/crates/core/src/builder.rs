//! Turns clustered refiners and their category predictions into scored intent
//! profiles.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::Serialize;

use crate::categorizer::CategoryPrediction;
use crate::clustering::{ClusterSet, RefinerGroup};
use crate::embedding::{centroid, cosine, PhraseVector};
use crate::error::{Error, Result};
use crate::kb::{bounded_mean, make_intent_id, EntityType, IntentCategory, IntentProfile, ProfileRefiner};

pub use crate::kb::profile_confidence;

/// Rounds to the four decimals the quad TSV keeps.
pub fn quantize(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftMember {
    pub refiner: String,
    pub vector: PhraseVector,
    /// Classifier confidence for the refiner's category.
    pub alpha: f64,
}

/// One cluster awaiting an identifier and confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDraft {
    pub entity_type: EntityType,
    pub category: IntentCategory,
    pub members: Vec<DraftMember>,
}

/// Cosine between a member and the centroid of all members, clamped to
/// `[0, 1]`; a zero centroid gives 0.
pub fn expressed_by_confidence(member: &[f64], members: &[&[f64]]) -> f64 {
    let Ok(c) = centroid(members) else {
        return 0.0;
    };
    cosine(member, &c).map_or(0.0, |v| v.clamp(0.0, 1.0))
}

/// Mean classifier confidence of the draft's refiners.
pub fn category_confidence(draft: &ProfileDraft) -> f64 {
    let alphas: Vec<f64> = draft.members.iter().map(|m| m.alpha).collect();
    bounded_mean(&alphas).unwrap_or(0.0)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildDiagnostics {
    /// Clusters whose member vectors summed to zero.
    pub zero_centroids: usize,
}

struct Scored {
    entity_type: EntityType,
    category: IntentCategory,
    category_conf: f64,
    refiners: Vec<ProfileRefiner>,
    alpha_i: f64,
    slug_source: String,
}

fn score(draft: &ProfileDraft, diag: &mut BuildDiagnostics) -> Result<Scored> {
    let vectors: Vec<&[f64]> = draft.members.iter().map(|m| m.vector.vector.as_slice()).collect();
    if centroid(&vectors)?.iter().all(|&x| x == 0.0) {
        diag.zero_centroids += 1;
    }
    let mut refiners: Vec<ProfileRefiner> = draft
        .members
        .iter()
        .map(|m| ProfileRefiner {
            label: m.refiner.clone(),
            conf: quantize(expressed_by_confidence(&m.vector.vector, &vectors)),
        })
        .collect();
    refiners.sort_by(|a, b| b.conf.total_cmp(&a.conf).then_with(|| a.label.cmp(&b.label)));
    let category_conf = quantize(category_confidence(draft));
    let confs: Vec<f64> = refiners.iter().map(|r| r.conf).collect();
    let alpha_i = profile_confidence(category_conf, &confs)?;
    Ok(Scored {
        entity_type: draft.entity_type.clone(),
        category: draft.category,
        category_conf,
        slug_source: refiners[0].label.clone(),
        refiners,
        alpha_i,
    })
}

/// Builds one profile per cluster. Within a type, sequence numbers follow
/// descending profile confidence, then slug. The nearest refiner naming the
/// profile is the member with the highest `expressedBy` confidence.
pub fn build_profiles(
    clustered: &[(RefinerGroup, ClusterSet)],
    predictions: &HashMap<(EntityType, String), CategoryPrediction>,
) -> Result<(Vec<IntentProfile>, BuildDiagnostics)> {
    let mut missing = Vec::new();
    let mut drafts = Vec::new();
    for (group, set) in clustered {
        for cluster in &set.clusters {
            let mut members = Vec::with_capacity(cluster.len());
            for &i in cluster {
                let (refiner, vector) = &group.members()[i];
                match predictions.get(&(group.entity_type.clone(), refiner.clone())) {
                    Some(p) if p.category == group.category => members.push(DraftMember {
                        refiner: refiner.clone(),
                        vector: vector.clone(),
                        alpha: p.confidence,
                    }),
                    Some(p) => {
                        return Err(Error::InvalidArgument(format!(
                            "`{refiner}` ({}) is predicted {} but clustered under {}",
                            group.entity_type, p.category, group.category
                        )))
                    }
                    None => missing.push(format!("{}\t{refiner}", group.entity_type)),
                }
            }
            drafts.push(ProfileDraft {
                entity_type: group.entity_type.clone(),
                category: group.category,
                members,
            });
        }
    }
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no category prediction for: {}",
            missing.join(", ")
        )));
    }

    let mut diag = BuildDiagnostics::default();
    let mut by_type: BTreeMap<String, Vec<Scored>> = BTreeMap::new();
    for d in drafts.iter().filter(|d| !d.members.is_empty()) {
        let s = score(d, &mut diag)?;
        by_type.entry(s.entity_type.label()).or_default().push(s);
    }

    let mut profiles = Vec::new();
    for (_, mut scored) in by_type {
        scored.sort_by(|a, b| {
            b.alpha_i
                .total_cmp(&a.alpha_i)
                .then_with(|| crate::kb::slugify(&a.slug_source).cmp(&crate::kb::slugify(&b.slug_source)))
        });
        for (seq, s) in scored.into_iter().enumerate() {
            let id = make_intent_id(&s.entity_type, seq as u32, &s.slug_source)?;
            profiles.push(IntentProfile::new(id, s.category, s.category_conf, s.refiners)?);
        }
    }
    Ok((profiles, diag))
}

#[derive(Serialize)]
struct ProfileLine<'a> {
    #[serde(rename = "intentID")]
    intent_id: String,
    #[serde(rename = "type")]
    entity_type: String,
    category: &'a str,
    alpha_c: f64,
    alpha_i: f64,
    refiners: &'a [ProfileRefiner],
}

/// Writes one JSON object per profile.
pub fn write_profiles_jsonl<W: Write>(profiles: &[IntentProfile], mut out: W) -> Result<()> {
    for p in profiles {
        let line = ProfileLine {
            intent_id: p.id().to_string(),
            entity_type: p.entity_type().label(),
            category: p.category().name(),
            alpha_c: p.category_confidence(),
            alpha_i: p.profile_confidence(),
            refiners: p.refiners(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n").map_err(|e| Error::io("writing profiles", e))?;
    }
    Ok(())
}
