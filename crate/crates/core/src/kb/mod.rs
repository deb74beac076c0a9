//! Knowledge-base data model.
//!
//! An intent KB is a set of `(subject, predicate, object, confidence)`
//! quadruples. Every subject is an [`IntentId`] and is described by exactly
//! one `searchedForType` fact, one `ofCategory` fact and one `expressedBy`
//! fact per refiner that lexicalizes the intent.

mod tsv;

pub use tsv::{parse_kb, serialize_kb, write_kb, KB_HEADER};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An entity type of the reference KB, e.g. `aviation.airline`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityType {
    domain: String,
    type_name: String,
}

fn valid_type_part(part: &str) -> bool {
    !part.is_empty()
        && part == part.to_lowercase()
        && !part
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '/' | '-' | '.'))
}

impl EntityType {
    pub fn new(domain: &str, type_name: &str) -> Result<Self> {
        if !valid_type_part(domain) || !valid_type_part(type_name) {
            return Err(Error::InvalidArgument(format!(
                "invalid entity type `{domain}.{type_name}`"
            )));
        }
        Ok(Self {
            domain: domain.to_string(),
            type_name: type_name.to_string(),
        })
    }

    /// Parses the `domain.type_name` label form.
    pub fn from_label(label: &str) -> Result<Self> {
        let (domain, type_name) = label
            .split_once('.')
            .ok_or_else(|| Error::InvalidArgument(format!("entity type `{label}` lacks a domain")))?;
        Self::new(domain, type_name)
    }

    /// Parses the `Domain/TypeName` display form.
    pub fn from_display(display: &str) -> Result<Self> {
        let (domain, type_name) = display.split_once('/').ok_or_else(|| {
            Error::InvalidArgument(format!("entity type display `{display}` lacks `/`"))
        })?;
        let ty = Self::new(&domain.to_lowercase(), &type_name.to_lowercase())?;
        if ty.display() != display {
            return Err(Error::InvalidArgument(format!(
                "`{display}` is not a canonical entity type display form"
            )));
        }
        Ok(ty)
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn label(&self) -> String {
        format!("{}.{}", self.domain, self.type_name)
    }

    /// `aviation.airline` renders as `Aviation/Airline`; underscore-separated
    /// words are capitalized individually (`Travel/Travel_Destination`).
    pub fn display(&self) -> String {
        fn title(part: &str) -> String {
            part.split('_')
                .map(|w| {
                    let mut cs = w.chars();
                    match cs.next() {
                        Some(first) => first.to_uppercase().chain(cs).collect(),
                        None => String::new(),
                    }
                })
                .collect::<Vec<_>>()
                .join("_")
        }
        format!("{}/{}", title(&self.domain), title(&self.type_name))
    }

    /// Words of the type name, e.g. `travel_destination` → `["travel", "destination"]`.
    pub fn name_terms(&self) -> Vec<&str> {
        self.type_name.split('_').filter(|w| !w.is_empty()).collect()
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.domain, self.type_name)
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_label(s)
    }
}

/// The four intent categories. The declaration order is the fixed enum order
/// used for tie-breaking throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntentCategory {
    Property,
    Website,
    Service,
    Other,
}

impl IntentCategory {
    pub const ALL: [IntentCategory; 4] = [
        IntentCategory::Property,
        IntentCategory::Website,
        IntentCategory::Service,
        IntentCategory::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            IntentCategory::Property => "Property",
            IntentCategory::Website => "Website",
            IntentCategory::Service => "Service",
            IntentCategory::Other => "Other",
        }
    }
}

impl fmt::Display for IntentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for IntentCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown intent category `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    SearchedForType,
    OfCategory,
    ExpressedBy,
}

impl Predicate {
    pub const ALL: [Predicate; 3] = [
        Predicate::SearchedForType,
        Predicate::OfCategory,
        Predicate::ExpressedBy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::SearchedForType => "searchedForType",
            Predicate::OfCategory => "ofCategory",
            Predicate::ExpressedBy => "expressedBy",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown predicate `{s}`")))
    }
}

/// Identifier of an intent profile: `<type label>-<seq>-<slug>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntentId {
    entity_type: EntityType,
    seq: u32,
    slug: String,
}

/// Lowercases and replaces each whitespace run with a single underscore.
pub fn slugify(label: &str) -> String {
    label
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// Builds the intent identifier from the type, a sequence number and the
/// label of the refiner nearest to the intent centroid.
pub fn make_intent_id(entity_type: &EntityType, seq: u32, nearest_refiner: &str) -> Result<IntentId> {
    let slug = slugify(nearest_refiner);
    if slug.is_empty() {
        return Err(Error::InvalidArgument(
            "intent id needs a non-empty refiner label".into(),
        ));
    }
    Ok(IntentId {
        entity_type: entity_type.clone(),
        seq,
        slug,
    })
}

impl IntentId {
    pub fn entity_type(&self) -> &EntityType {
        &self.entity_type
    }

    pub fn seq(&self) -> u32 {
        self.seq
    }

    pub fn slug(&self) -> &str {
        &self.slug
    }
}

impl fmt::Display for IntentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.entity_type, self.seq, self.slug)
    }
}

impl FromStr for IntentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed intent id `{s}`"));
        let mut parts = s.splitn(3, '-');
        let ty = EntityType::from_label(parts.next().ok_or_else(bad)?)?;
        let seq = parts.next().ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())?;
        let slug = parts.next().ok_or_else(bad)?;
        let id = make_intent_id(&ty, seq, slug)?;
        if id.slug != slug {
            return Err(bad());
        }
        Ok(id)
    }
}

/// A single KB fact.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadruple {
    pub subject: IntentId,
    pub predicate: Predicate,
    pub object: String,
    pub confidence: f64,
}

/// Equation for the profile confidence: the mean of the category confidence
/// and the average `expressedBy` confidence.
pub fn profile_confidence(category_conf: f64, expressed_by_confs: &[f64]) -> Result<f64> {
    let mean = bounded_mean(expressed_by_confs)
        .ok_or_else(|| Error::Domain("profile confidence of an empty refiner list".into()))?;
    Ok(0.5 * (category_conf + mean))
}

/// Arithmetic mean clamped into `[min, max]` of the inputs, which floating
/// point summation can otherwise overshoot by an ulp.
pub(crate) fn bounded_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Some(mean.clamp(lo, hi))
}

fn check_unit(what: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} confidence {v} outside [0,1]")))
    }
}

/// A refiner lexicalizing an intent, with its `expressedBy` confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRefiner {
    pub label: String,
    pub conf: f64,
}

/// A cluster of same-category refiners of one type, with its confidences.
///
/// Refiners are kept sorted by descending confidence, ties by label; the
/// profile confidence is always derived from the other two confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentProfile {
    id: IntentId,
    category: IntentCategory,
    category_confidence: f64,
    refiners: Vec<ProfileRefiner>,
    profile_confidence: f64,
}

impl IntentProfile {
    pub fn new(
        id: IntentId,
        category: IntentCategory,
        category_confidence: f64,
        mut refiners: Vec<ProfileRefiner>,
    ) -> Result<Self> {
        if refiners.is_empty() {
            return Err(Error::InvalidArgument(format!("profile {id} has no refiners")));
        }
        check_unit("category", category_confidence)?;
        for r in &refiners {
            check_unit("expressedBy", r.conf)?;
            if r.label.trim().is_empty() || r.label.contains(['\t', '\n', '\r']) {
                return Err(Error::InvalidArgument(format!(
                    "profile {id} has an unusable refiner label {:?}",
                    r.label
                )));
            }
        }
        refiners.sort_by(|a, b| b.conf.total_cmp(&a.conf).then_with(|| a.label.cmp(&b.label)));
        if refiners.windows(2).any(|w| w[0].label == w[1].label) {
            return Err(Error::InvalidArgument(format!("profile {id} repeats a refiner")));
        }
        let confs: Vec<f64> = refiners.iter().map(|r| r.conf).collect();
        let profile_confidence = profile_confidence(category_confidence, &confs)?;
        Ok(Self {
            id,
            category,
            category_confidence,
            refiners,
            profile_confidence,
        })
    }

    pub fn id(&self) -> &IntentId {
        &self.id
    }

    pub fn entity_type(&self) -> &EntityType {
        self.id.entity_type()
    }

    pub fn category(&self) -> IntentCategory {
        self.category
    }

    pub fn category_confidence(&self) -> f64 {
        self.category_confidence
    }

    pub fn refiners(&self) -> &[ProfileRefiner] {
        &self.refiners
    }

    pub fn profile_confidence(&self) -> f64 {
        self.profile_confidence
    }

    pub fn quad_count(&self) -> usize {
        2 + self.refiners.len()
    }
}

/// Expands a profile into its quadruples: type, category, then one
/// `expressedBy` fact per refiner in descending confidence.
pub fn profile_to_quadruples(profile: &IntentProfile) -> Vec<Quadruple> {
    let quad = |predicate, object: String, confidence| Quadruple {
        subject: profile.id.clone(),
        predicate,
        object,
        confidence,
    };
    let mut quads = Vec::with_capacity(profile.quad_count());
    quads.push(quad(Predicate::SearchedForType, profile.entity_type().display(), 1.0));
    quads.push(quad(
        Predicate::OfCategory,
        profile.category.name().to_string(),
        profile.category_confidence,
    ));
    quads.extend(
        profile
            .refiners
            .iter()
            .map(|r| quad(Predicate::ExpressedBy, r.label.clone(), r.conf)),
    );
    quads
}
