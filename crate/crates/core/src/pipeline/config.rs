//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the config file. Unknown keys are
//! rejected so typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};

use crate::acquisition::{DEFAULT_MIN_ENTITIES, DEFAULT_MIN_SUPPORT, DEFAULT_POP_THRESHOLD, DEFAULT_TOP_K};
use crate::categorizer::{FeatureConfig, FeatureSet, DEFAULT_NUM_TREES};
use crate::clustering::DEFAULT_GRID_STEP;
use crate::error::{Error, Result};
use crate::eval::SampleParams;
use crate::kb::{EntityType, IntentCategory};

use super::store::StoreMode;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub entities: PathBuf,
    pub suggestions: PathBuf,
    pub embeddings: PathBuf,
    pub labeled: PathBuf,
    pub search_store: PathBuf,
    pub annotations: Option<PathBuf>,
    pub out_dir: PathBuf,

    pub pop_threshold: u64,
    pub min_entities: usize,
    pub top_k: usize,
    pub min_support: usize,

    pub trees: usize,
    /// `None` selects `⌈√F⌉`.
    pub max_depth: Option<usize>,
    pub feature_set: FeatureSet,
    pub folds: usize,
    pub grid_step: f64,
    /// Fixed `ε_c` per category; unset categories are fitted.
    pub epsilon: [Option<f64>; 4],
    /// `ε` for categories that can be neither fixed nor fitted.
    pub epsilon_default: f64,

    pub train_types: Vec<EntityType>,
    pub apply_types: Vec<EntityType>,

    pub features: FeatureConfig,
    pub buckets: usize,
    pub types_per_bucket: usize,
    pub profiles_per_type: usize,
    pub store_mode: StoreMode,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            entities: "entities.jsonl".into(),
            suggestions: "suggestions.jsonl".into(),
            embeddings: "embeddings.txt".into(),
            labeled: "labeled.tsv".into(),
            search_store: "search.jsonl".into(),
            annotations: None,
            out_dir: "out".into(),
            pop_threshold: DEFAULT_POP_THRESHOLD,
            min_entities: DEFAULT_MIN_ENTITIES,
            top_k: DEFAULT_TOP_K,
            min_support: DEFAULT_MIN_SUPPORT,
            trees: DEFAULT_NUM_TREES,
            max_depth: None,
            feature_set: FeatureSet::Semantic,
            folds: 5,
            grid_step: DEFAULT_GRID_STEP,
            epsilon: [None; 4],
            epsilon_default: 0.5,
            train_types: Vec::new(),
            apply_types: Vec::new(),
            features: FeatureConfig::default(),
            buckets: 5,
            types_per_bucket: 25,
            profiles_per_type: 5,
            store_mode: StoreMode::Replay,
            seed: 0,
        }
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path, source: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| Error::parse(source, i + 1, reason);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |what: &str| -> Result<u64> {
                value.parse().map_err(|_| err(format!("`{what}` needs a non-negative integer")))
            };
            let real = |what: &str| -> Result<f64> {
                value.parse().map_err(|_| err(format!("`{what}` needs a number")))
            };
            let unit = |what: &str| -> Result<f64> {
                let v = real(what)?;
                if (0.0..=1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(err(format!("`{what}` must lie in [0, 1]")))
                }
            };
            let types = || -> Result<Vec<EntityType>> {
                list(value)
                    .iter()
                    .map(|t| EntityType::from_label(t).map_err(|e| err(e.to_string())))
                    .collect()
            };
            match key {
                "entities" => cfg.entities = value.into(),
                "suggestions" => cfg.suggestions = value.into(),
                "embeddings" => cfg.embeddings = value.into(),
                "labeled" => cfg.labeled = value.into(),
                "search_store" => cfg.search_store = value.into(),
                "annotations" => cfg.annotations = (!value.is_empty()).then(|| value.into()),
                "out_dir" => cfg.out_dir = value.into(),
                "pop_threshold" => cfg.pop_threshold = num(key)?,
                "min_entities" => cfg.min_entities = num(key)? as usize,
                "top_k" => cfg.top_k = num(key)? as usize,
                "min_support" => cfg.min_support = num(key)? as usize,
                "trees" => cfg.trees = num(key)? as usize,
                "max_depth" => {
                    cfg.max_depth = match value {
                        "" | "auto" => None,
                        _ => Some(num(key)? as usize),
                    }
                }
                "feature_set" => cfg.feature_set = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "folds" => cfg.folds = num(key)? as usize,
                "grid_step" => cfg.grid_step = real(key)?,
                "epsilon" => cfg.epsilon = [Some(unit(key)?); 4],
                "epsilon_default" => cfg.epsilon_default = unit(key)?,
                "train_types" => cfg.train_types = types()?,
                "apply_types" => cfg.apply_types = types()?,
                "known_sites" => cfg.features.known_sites = list(value),
                "generic_type_tokens" => cfg.features.generic_type_tokens = list(value),
                "buckets" => cfg.buckets = num(key)? as usize,
                "types_per_bucket" => cfg.types_per_bucket = num(key)? as usize,
                "profiles_per_type" => cfg.profiles_per_type = num(key)? as usize,
                "store_mode" => cfg.store_mode = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "seed" => cfg.seed = num(key)?,
                _ => match key.strip_prefix("epsilon.") {
                    Some(cat) => {
                        let cat: IntentCategory = cat.parse().map_err(|e: Error| err(e.to_string()))?;
                        cfg.epsilon[cat.index()] = Some(unit(key)?);
                    }
                    None => return Err(err(format!("unknown key `{key}`"))),
                },
            }
        }
        for p in [
            &mut cfg.entities,
            &mut cfg.suggestions,
            &mut cfg.embeddings,
            &mut cfg.labeled,
            &mut cfg.search_store,
            &mut cfg.out_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(a) = cfg.annotations.as_mut().filter(|a| a.is_relative()) {
            *a = base.join(&*a);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("min_entities", self.min_entities),
            ("top_k", self.top_k),
            ("min_support", self.min_support),
            ("trees", self.trees),
            ("buckets", self.buckets),
            ("types_per_bucket", self.types_per_bucket),
            ("profiles_per_type", self.profiles_per_type),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("`{name}` must be positive")));
        }
        if self.folds < 2 {
            return Err(Error::Config("`folds` must be at least 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("`max_depth` must be positive".into()));
        }
        crate::clustering::epsilon_grid(self.grid_step).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = self.train_types.iter().find(|t| self.apply_types.contains(t)) {
            return Err(Error::Config(format!("type {t} is listed for both training and application")));
        }
        Ok(())
    }

    pub fn sample_params(&self) -> SampleParams {
        SampleParams {
            buckets: self.buckets,
            types_per_bucket: self.types_per_bucket,
            profiles_per_type: self.profiles_per_type,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_published_thresholds() {
        let c = PipelineConfig::default();
        assert_eq!((c.pop_threshold, c.min_entities, c.top_k, c.min_support), (3000, 100, 1000, 5));
        assert_eq!((c.trees, c.folds, c.grid_step), (100, 5, 0.01));
        assert_eq!(c.feature_set, FeatureSet::Semantic);
    }

    #[test]
    fn parses_keys_and_resolves_paths() {
        let text = "\
# fixture
entities = data/entities.jsonl
out_dir = /tmp/out
min_support = 2
epsilon.service = 0.4
train_types = aviation.airline, music.artist
seed = 7
";
        let c = PipelineConfig::parse(text, Path::new("/base"), "cfg").unwrap();
        assert_eq!(c.entities, PathBuf::from("/base/data/entities.jsonl"));
        assert_eq!(c.out_dir, PathBuf::from("/tmp/out"));
        assert_eq!(c.min_support, 2);
        assert_eq!(c.epsilon, [None, None, Some(0.4), None]);
        assert_eq!(c.train_types.len(), 2);
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn rejects_bad_lines() {
        let base = Path::new(".");
        for (text, line) in [
            ("seed = 1\nbogus = 3\n", 2),
            ("min_support = -1\n", 1),
            ("epsilon = 1.5\n", 1),
            ("no equals sign\n", 1),
            ("epsilon.navigational = 0.2\n", 1),
        ] {
            match PipelineConfig::parse(text, base, "cfg") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(PipelineConfig::parse("trees = 0\n", base, "cfg"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::parse("grid_step = 0.3\n", base, "cfg"), Err(Error::Config(_))));
        assert!(matches!(
            PipelineConfig::parse("train_types = a.b\napply_types = a.b\n", base, "cfg"),
            Err(Error::Config(_))
        ));
    }
}
