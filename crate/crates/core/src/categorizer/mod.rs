//! Refiner categorization: features for (type, refiner) pairs and a random
//! forest that maps them to an intent category with a vote-share confidence.

mod forest;
mod jaro;

pub use forest::{sqrt_features, CategoryPrediction, DecisionTree, ForestParams, TrainedForest, DEFAULT_NUM_TREES};
pub use jaro::jaro;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingVocabulary};
use crate::error::{Error, Result};
use crate::eval::make_folds;
use crate::kb::{EntityType, IntentCategory};

/// Known website domains used as a website-intent prior.
pub const DEFAULT_KNOWN_SITES: &[&str] = &[
    "amazon.com",
    "facebook.com",
    "imdb.com",
    "instagram.com",
    "linkedin.com",
    "pinterest.com",
    "reddit.com",
    "spotify.com",
    "tripadvisor.com",
    "twitter.com",
    "wikipedia.org",
    "yelp.com",
    "youtube.com",
];

/// Type names too generic to describe a type without its domain word.
pub const DEFAULT_GENERIC_TYPE_TOKENS: &[&str] = &["topic", "thing", "entity", "object", "item", "agent", "type"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub known_sites: Vec<String>,
    pub generic_type_tokens: Vec<String>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            known_sites: DEFAULT_KNOWN_SITES.iter().map(|s| s.to_string()).collect(),
            generic_type_tokens: DEFAULT_GENERIC_TYPE_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rank: u32,
    pub url: String,
    #[serde(default)]
    pub domain: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
}

/// Top search results for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResultPage {
    pub query: String,
    pub results: Vec<SearchResult>,
}

/// Host of a URL without a leading `www.`.
pub fn url_domain(url: &str) -> String {
    let host = url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_lowercase))
        .unwrap_or_default();
    host.strip_prefix("www.").map(str::to_string).unwrap_or(host)
}

impl SearchResultPage {
    /// Validates ranks (strictly increasing, within 1..=10, at most ten
    /// results) and fills in missing domains from the URLs.
    pub fn new(query: impl Into<String>, mut results: Vec<SearchResult>) -> Result<Self> {
        let query = query.into();
        if results.len() > 10 {
            return Err(Error::InvalidArgument(format!("`{query}` has more than 10 results")));
        }
        if results.iter().any(|r| !(1..=10).contains(&r.rank))
            || results.windows(2).any(|w| w[0].rank >= w[1].rank)
        {
            return Err(Error::InvalidArgument(format!(
                "`{query}` result ranks must be strictly increasing within 1..=10"
            )));
        }
        for r in &mut results {
            if r.domain.is_empty() {
                r.domain = url_domain(&r.url);
            }
        }
        Ok(Self { query, results })
    }

    pub fn empty(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            results: Vec::new(),
        }
    }
}

pub const LEXICAL_FEATURES: [&str; 9] = [
    "domain_count",
    "url_jaro_mean",
    "url_jaro_max",
    "title_match_fraction",
    "snippet_match_fraction",
    "refiner_terms",
    "refiner_chars",
    "known_site_fraction",
    "page_valid",
];

pub const SEMANTIC_FEATURES: [&str; 3] = ["refiner_type_cosine", "refiner_covered", "type_covered"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Lexical,
    Semantic,
    Combined,
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lexical" => Ok(FeatureSet::Lexical),
            "semantic" => Ok(FeatureSet::Semantic),
            "combined" => Ok(FeatureSet::Combined),
            other => Err(Error::InvalidArgument(format!("unknown feature set `{other}`"))),
        }
    }
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            FeatureSet::Lexical => "lexical",
            FeatureSet::Semantic => "semantic",
            FeatureSet::Combined => "combined",
        })
    }
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Lexical, FeatureSet::Semantic, FeatureSet::Combined];

    pub fn names(self) -> Vec<&'static str> {
        match self {
            FeatureSet::Lexical => LEXICAL_FEATURES.to_vec(),
            FeatureSet::Semantic => SEMANTIC_FEATURES.to_vec(),
            FeatureSet::Combined => LEXICAL_FEATURES.iter().chain(&SEMANTIC_FEATURES).copied().collect(),
        }
    }
}

/// Features of one (type, refiner) pair, ordered as [`LEXICAL_FEATURES`]
/// and [`SEMANTIC_FEATURES`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub lexical: [f64; 9],
    pub semantic: [f64; 3],
}

impl FeatureVector {
    pub fn values(&self, set: FeatureSet) -> Vec<f64> {
        match set {
            FeatureSet::Lexical => self.lexical.to_vec(),
            FeatureSet::Semantic => self.semantic.to_vec(),
            FeatureSet::Combined => self.lexical.iter().chain(&self.semantic).copied().collect(),
        }
    }
}

/// Terms describing a type: the words of its name, preceded by the domain
/// word when the name is a single generic token.
pub fn type_terms<'a>(ty: &'a EntityType, cfg: &FeatureConfig) -> Vec<&'a str> {
    let terms = ty.name_terms();
    if terms.len() == 1 && cfg.generic_type_tokens.iter().any(|g| g == terms[0]) {
        let mut with_domain = vec![ty.domain()];
        with_domain.extend(terms);
        return with_domain;
    }
    terms
}

/// Semantic group: cosine between the term centroids of refiner and type,
/// plus coverage flags. Uncovered sides give a cosine of 0.
pub fn semantic_features(ty: &EntityType, refiner: &str, vocab: &EmbeddingVocabulary, cfg: &FeatureConfig) -> [f64; 3] {
    let r = vocab.term_centroid(refiner.split_whitespace());
    let t = vocab.term_centroid(type_terms(ty, cfg));
    let cos = match (&r, &t) {
        (Some((rv, _)), Some((tv, _))) => cosine(rv, tv).unwrap_or(0.0),
        _ => 0.0,
    };
    [cos, r.is_some() as u8 as f64, t.is_some() as u8 as f64]
}

/// URL text compared against the refiner: lowercased, scheme removed.
fn url_text(url: &str) -> String {
    let lower = url.to_lowercase();
    match lower.split_once("://") {
        Some((_, rest)) => rest.to_string(),
        None => lower,
    }
}

/// Lexical group computed from the result page of `<prominent entity> <refiner>`.
pub fn lexical_features(refiner: &str, page: &SearchResultPage, cfg: &FeatureConfig) -> [f64; 9] {
    if page.results.is_empty() {
        return [0.0; 9];
    }
    let refiner = refiner.to_lowercase();
    let n = page.results.len() as f64;
    let domains: std::collections::BTreeSet<&str> = page.results.iter().map(|r| r.domain.as_str()).collect();
    let jaros: Vec<f64> = page.results.iter().map(|r| jaro(&refiner, &url_text(&r.url))).collect();
    let fraction = |pred: &dyn Fn(&SearchResult) -> bool| page.results.iter().filter(|r| pred(r)).count() as f64 / n;
    let known = |d: &str| {
        cfg.known_sites
            .iter()
            .any(|s| d == s || d.strip_suffix(s.as_str()).is_some_and(|p| p.ends_with('.')))
    };
    [
        domains.len() as f64,
        jaros.iter().sum::<f64>() / n,
        jaros.iter().copied().fold(0.0, f64::max),
        fraction(&|r| r.title.to_lowercase().contains(&refiner)),
        fraction(&|r| r.snippet.to_lowercase().contains(&refiner)),
        refiner.split_whitespace().count() as f64,
        refiner.chars().count() as f64,
        fraction(&|r| known(&r.domain)),
        1.0,
    ]
}

pub fn features(
    ty: &EntityType,
    refiner: &str,
    page: &SearchResultPage,
    vocab: &EmbeddingVocabulary,
    cfg: &FeatureConfig,
) -> FeatureVector {
    FeatureVector {
        lexical: lexical_features(refiner, page, cfg),
        semantic: semantic_features(ty, refiner, vocab, cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub entity_type: EntityType,
    pub refiner: String,
    pub features: FeatureVector,
    pub label: IntentCategory,
}

/// A forest bound to the feature group it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorizer {
    pub forest: TrainedForest,
    pub feature_set: FeatureSet,
}

pub fn train_forest(instances: &[LabeledInstance], feature_set: FeatureSet, params: &ForestParams) -> Result<Categorizer> {
    let x: Vec<Vec<f64>> = instances.iter().map(|i| i.features.values(feature_set)).collect();
    let y: Vec<IntentCategory> = instances.iter().map(|i| i.label).collect();
    Ok(Categorizer {
        forest: TrainedForest::fit(&x, &y, params)?,
        feature_set,
    })
}

pub fn predict(categorizer: &Categorizer, features: &FeatureVector) -> Result<CategoryPrediction> {
    categorizer.forest.predict_row(&features.values(categorizer.feature_set))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub accuracy: f64,
    /// Held-out prediction for every instance, in input order.
    pub predictions: Vec<CategoryPrediction>,
    pub folds: Vec<usize>,
}

/// Stratified k-fold cross-validation on raw feature rows.
pub fn cross_validate_rows(
    x: &[Vec<f64>],
    y: &[IntentCategory],
    k: usize,
    params: &ForestParams,
) -> Result<CrossValidation> {
    if y.len() < k {
        return Err(Error::InvalidArgument(format!("{} instances cannot fill {k} folds", y.len())));
    }
    let folds = make_folds(y, k, params.seed)?;
    cross_validate_with_folds(x, y, &folds, params)
}

pub fn cross_validate_with_folds(
    x: &[Vec<f64>],
    y: &[IntentCategory],
    folds: &[usize],
    params: &ForestParams,
) -> Result<CrossValidation> {
    if x.len() != y.len() || y.len() != folds.len() {
        return Err(Error::InvalidArgument("cross-validation inputs are not aligned".into()));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    if k < 2 || y.len() < k {
        return Err(Error::InvalidArgument(format!(
            "cross-validation needs k >= 2 and at least k instances ({} instances, k = {k})",
            y.len()
        )));
    }
    let mut predictions: Vec<Option<CategoryPrediction>> = vec![None; y.len()];
    for fold in 0..k {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != fold).collect();
        if train.is_empty() {
            continue;
        }
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<IntentCategory> = train.iter().map(|&i| y[i]).collect();
        let forest = TrainedForest::fit(&tx, &ty, params)?;
        for i in (0..y.len()).filter(|&i| folds[i] == fold) {
            predictions[i] = Some(forest.predict_row(&x[i])?);
        }
    }
    let predictions: Vec<CategoryPrediction> = predictions
        .into_iter()
        .map(|p| p.ok_or_else(|| Error::Domain("instance left without a held-out prediction".into())))
        .collect::<Result<_>>()?;
    let predicted: Vec<IntentCategory> = predictions.iter().map(|p| p.category).collect();
    let accuracy = crate::eval::accuracy(&predicted, y)?;
    Ok(CrossValidation {
        accuracy,
        predictions,
        folds: folds.to_vec(),
    })
}

pub fn cross_validate(
    instances: &[LabeledInstance],
    feature_set: FeatureSet,
    k: usize,
    params: &ForestParams,
) -> Result<CrossValidation> {
    let x: Vec<Vec<f64>> = instances.iter().map(|i| i.features.values(feature_set)).collect();
    let y: Vec<IntentCategory> = instances.iter().map(|i| i.label).collect();
    cross_validate_rows(&x, &y, k, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(rank: u32, url: &str, title: &str, snippet: &str) -> SearchResult {
        SearchResult {
            rank,
            url: url.into(),
            domain: String::new(),
            title: title.into(),
            snippet: snippet.into(),
        }
    }

    fn vocab() -> EmbeddingVocabulary {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        EmbeddingVocabulary::from_entries(
            2,
            [
                ("aaa", vec![1.0, 0.0]),
                ("bbb", vec![0.0, 1.0]),
                ("ccc", vec![s, s]),
                ("airline", vec![0.2, 0.9]),
                ("xxx", vec![1.0, 0.0]),
                ("yyy", vec![0.0, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn semantic_feature_examples() {
        let cfg = FeatureConfig::default();
        let v = vocab();
        let airline = EntityType::from_label("aviation.airline").unwrap();
        assert_eq!(semantic_features(&airline, "airline", &v, &cfg), [1.0, 1.0, 1.0]);

        let yyy = EntityType::from_label("dom.yyy").unwrap();
        assert_eq!(semantic_features(&yyy, "xxx", &v, &cfg)[0], 0.0);

        let ccc = EntityType::from_label("dom.ccc").unwrap();
        assert!((semantic_features(&ccc, "aaa bbb", &v, &cfg)[0] - 1.0).abs() < 1e-12);

        assert_eq!(semantic_features(&ccc, "zzz", &v, &cfg), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn generic_type_names_pull_in_the_domain() {
        let cfg = FeatureConfig::default();
        let t = EntityType::from_label("film.topic").unwrap();
        assert_eq!(type_terms(&t, &cfg), ["film", "topic"]);
        let t = EntityType::from_label("travel.travel_destination").unwrap();
        assert_eq!(type_terms(&t, &cfg), ["travel", "destination"]);
    }

    #[test]
    fn lexical_features_on_small_page() {
        let cfg = FeatureConfig::default();
        let page = SearchResultPage::new(
            "delta twitter",
            vec![
                result(1, "https://twitter.com/delta", "Delta (@Delta) / Twitter", "news"),
                result(2, "https://www.twitter.com/deltanews", "Delta News", "twitter feed"),
                result(3, "https://news.example.org/delta", "Delta", "airline"),
            ],
        )
        .unwrap();
        let f = lexical_features("twitter", &page, &cfg);
        assert_eq!(f[0], 2.0);
        let urls = ["twitter.com/delta", "www.twitter.com/deltanews", "news.example.org/delta"];
        let brute: Vec<f64> = urls.iter().map(|u| jaro("twitter", u)).collect();
        assert!((f[1] - brute.iter().sum::<f64>() / 3.0).abs() < 1e-12);
        assert_eq!(f[2], brute.iter().copied().fold(0.0, f64::max));
        assert!((f[3] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f[4] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!((f[5], f[6]), (1.0, 7.0));
        assert!((f[7] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f[8], 1.0);
    }

    #[test]
    fn single_domain_page_and_empty_page() {
        let cfg = FeatureConfig::default();
        let results = (1..=10)
            .map(|i| result(i, &format!("https://example.com/{i}"), "", ""))
            .collect();
        let page = SearchResultPage::new("q", results).unwrap();
        assert_eq!(lexical_features("map", &page, &cfg)[0], 1.0);
        assert_eq!(lexical_features("map", &SearchResultPage::empty("q"), &cfg), [0.0; 9]);
    }

    #[test]
    fn page_rank_validation() {
        assert!(SearchResultPage::new("q", vec![result(2, "http://a", "", ""), result(1, "http://b", "", "")]).is_err());
        assert!(SearchResultPage::new("q", vec![result(11, "http://a", "", "")]).is_err());
        let p = SearchResultPage::new("q", vec![result(1, "https://www.Imdb.com/x", "", "")]).unwrap();
        assert_eq!(p.results[0].domain, "imdb.com");
    }

    #[test]
    fn feature_sets_select_columns() {
        let fv = FeatureVector {
            lexical: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
            semantic: [10.0, 11.0, 12.0],
        };
        assert_eq!(fv.values(FeatureSet::Semantic), vec![10.0, 11.0, 12.0]);
        assert_eq!(fv.values(FeatureSet::Combined).len(), 12);
        assert_eq!(FeatureSet::Combined.names().len(), 12);
        assert_eq!("Semantic".parse::<FeatureSet>().unwrap(), FeatureSet::Semantic);
    }

    #[test]
    fn cross_validation_needs_enough_instances() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![IntentCategory::Property, IntentCategory::Other];
        assert!(cross_validate_rows(&x, &y, 5, &ForestParams::default()).is_err());
        assert!(cross_validate_rows(&x, &y, 1, &ForestParams::default()).is_err());
    }
}
