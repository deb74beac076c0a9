//! File-based orchestration of the five stages.
//!
//! Each stage reads its inputs from the configured paths and the artifacts
//! of earlier stages from `out_dir`, writes its own artifacts there, and
//! leaves a `<stage>.report.json` with counts, diagnostics and timing. All
//! artifacts except the reports are fully determined by the inputs and seed.

mod config;
pub mod io;
mod store;

pub use config::PipelineConfig;
pub use store::{
    load_search_store, load_suggestion_store, save_search_store, save_suggestion_store, Fetcher, FixtureStore,
    StoreMode,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::acquisition::{aggregate_refiners, load_entities, select_types, top_entities, EntityRecord, SuggestionRecord};
use crate::builder::{build_profiles, write_profiles_jsonl};
use crate::categorizer::{
    cross_validate_with_folds, features, predict, train_forest, CategoryPrediction, FeatureConfig, FeatureSet, FeatureVector,
    ForestParams, LabeledInstance, SearchResultPage,
};
use crate::clustering::{cluster_group, fit_epsilon, ClusterSet, ClusteringParams, GoldGroup, RefinerGroup};
use crate::embedding::{load_embeddings, phrase_vector, EmbeddingVocabulary};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_clustering, fleiss_kappa, make_folds, majority_vote, stratified_sample, AnnotationSet,
    ClusteringEvaluation, GoldRefiner,
};
use crate::kb::{parse_kb, profile_to_quadruples, serialize_kb, EntityType, IntentCategory, IntentProfile, Predicate};
use io::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Acquire,
    Categorize,
    Cluster,
    Build,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Acquire, Stage::Categorize, Stage::Cluster, Stage::Build, Stage::Eval];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Acquire => "acquire",
            Stage::Categorize => "categorize",
            Stage::Cluster => "cluster",
            Stage::Build => "build",
            Stage::Eval => "eval",
        }
    }

    pub fn report_file(self) -> String {
        format!("{}.report.json", self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    /// Artifact file names written into the output directory.
    pub outputs: Vec<String>,
    pub counts: BTreeMap<String, serde_json::Value>,
    pub duration_ms: u64,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        Self {
            stage,
            outputs: Vec::new(),
            counts: BTreeMap::new(),
            duration_ms: 0,
        }
    }

    fn count(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.counts.insert(key.to_string(), v);
    }

    /// Integer count under `key`, if recorded.
    pub fn get_count(&self, key: &str) -> Option<u64> {
        self.counts.get(key).and_then(serde_json::Value::as_u64)
    }
}

/// Evaluation results written to `metrics.json`. The top-level clustering
/// scores are those with automatically assigned categories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub homogeneity: Option<f64>,
    pub completeness: Option<f64>,
    pub v_measure: Option<f64>,
    /// Cross-validated accuracy of the configured feature group.
    pub accuracy: f64,
    pub kappa_by_predicate: BTreeMap<String, f64>,
    pub feature_set: FeatureSet,
    pub accuracy_by_feature_set: BTreeMap<String, f64>,
    pub labeled_instances: usize,
    pub clustering: Option<ClusteringEvaluation>,
    pub sampled_profiles: usize,
    pub sampled_quads: usize,
    pub sample_shortfalls: Vec<String>,
    /// Share of judged triples whose majority label is `correct`.
    pub correct_rate_by_predicate: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub reports: Vec<StageReport>,
    pub kb: Vec<IntentProfile>,
    pub metrics: EvalMetrics,
}

type SuggestionFetcher<'f> = Box<dyn Fetcher<Vec<String>> + 'f>;
type SearchFetcher<'f> = Box<dyn Fetcher<SearchResultPage> + 'f>;

/// A configured pipeline with optional live fetchers for record-missing mode.
pub struct Pipeline<'f> {
    config: PipelineConfig,
    suggestion_fetcher: Option<SuggestionFetcher<'f>>,
    search_fetcher: Option<SearchFetcher<'f>>,
    metrics: Option<EvalMetrics>,
}

impl<'f> Pipeline<'f> {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            config,
            suggestion_fetcher: None,
            search_fetcher: None,
            metrics: None,
        }
    }

    pub fn with_suggestion_fetcher(mut self, f: impl Fetcher<Vec<String>> + 'f) -> Self {
        self.suggestion_fetcher = Some(Box::new(f));
        self
    }

    pub fn with_search_fetcher(mut self, f: impl Fetcher<SearchResultPage> + 'f) -> Self {
        self.search_fetcher = Some(Box::new(f));
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn out(&self, file: &str) -> PathBuf {
        self.config.out_dir.join(file)
    }

    pub fn run_stage(&mut self, stage: Stage) -> Result<StageReport> {
        self.run_stage_inner(stage).map_err(|e| Error::Stage {
            stage: stage.name(),
            source: Box::new(e),
        })
    }

    fn run_stage_inner(&mut self, stage: Stage) -> Result<StageReport> {
        self.config.validate()?;
        let dir = &self.config.out_dir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let start = Instant::now();
        let mut report = StageReport::new(stage);
        match stage {
            Stage::Acquire => self.acquire(&mut report)?,
            Stage::Categorize => self.categorize(&mut report)?,
            Stage::Cluster => self.cluster(&mut report)?,
            Stage::Build => self.build(&mut report)?,
            Stage::Eval => self.eval(&mut report)?,
        }
        report.duration_ms = start.elapsed().as_millis() as u64;
        let json = serde_json::to_string_pretty(&report)?;
        write(&self.out(&stage.report_file()), json + "\n")?;
        Ok(report)
    }

    /// Runs every stage in order and returns the KB and evaluation metrics.
    pub fn run_all(&mut self) -> Result<RunOutput> {
        let mut reports = Vec::new();
        for stage in Stage::ALL {
            reports.push(self.run_stage(stage)?);
        }
        let kb_path = self.out(KB_FILE);
        let kb = parse_kb(&read_artifact(&kb_path, "build")?.into_bytes(), &kb_path.display().to_string())?;
        let metrics = self
            .metrics
            .take()
            .ok_or_else(|| Error::Domain("eval stage left no metrics".into()))?;
        Ok(RunOutput { reports, kb, metrics })
    }

    fn acquire(&mut self, report: &mut StageReport) -> Result<()> {
        let cfg = &self.config;
        let entities = load_entities(&cfg.entities)?;
        let types = select_types(&entities, cfg.pop_threshold, cfg.min_entities);
        let mut store = load_suggestion_store(&cfg.suggestions, cfg.store_mode)?;

        let mut type_rows = Vec::new();
        let mut records: Vec<EntityRecord> = Vec::new();
        let mut suggestions = Vec::new();
        let mut fetched = BTreeSet::new();
        let mut unrecorded = 0usize;
        for ty in &types {
            let top = top_entities(&entities, ty, cfg.top_k);
            let qualifying: BTreeSet<&str> = entities
                .iter()
                .filter(|e| &e.entity_type == ty && e.popularity > cfg.pop_threshold)
                .map(|e| e.entity_name.as_str())
                .collect();
            type_rows.push(TypeRow {
                entity_type: ty.clone(),
                prominent_entity: top[0].entity_name.clone(),
                qualifying_entities: qualifying.len(),
            });
            for e in &top {
                if fetched.insert(e.entity_name.clone()) {
                    let fetcher = self.suggestion_fetcher.as_deref_mut();
                    match store.lookup(&e.entity_name, fetcher)? {
                        Some(list) => suggestions.extend(list.iter().map(|s| SuggestionRecord::new(&e.entity_name, s))),
                        None => unrecorded += 1,
                    }
                }
            }
            records.extend(top);
        }
        let (refiners, diag) = aggregate_refiners(&suggestions, &records, cfg.min_support);

        if store.newly_recorded() > 0 {
            save_suggestion_store(&store, &cfg.suggestions)?;
        }
        write(&self.out(TYPES_FILE), format_types(&type_rows))?;
        write(&self.out(REFINERS_FILE), format_refiners(&refiners))?;
        report.outputs = vec![TYPES_FILE.into(), REFINERS_FILE.into()];
        report.count("entity_records", entities.len());
        report.count("types_selected", types.len());
        report.count("entities_queried", fetched.len());
        report.count("entities_unrecorded", unrecorded);
        report.count("suggestions", suggestions.len());
        report.count("suggestions_newly_recorded", store.newly_recorded());
        report.count("refiners", refiners.len());
        report.count("skipped_unknown_entity", diag.unknown_entity);
        report.count("skipped_unmatched", diag.unmatched);
        report.count("skipped_duplicate", diag.duplicate_suggestions);
        report.count("refiners_below_support", diag.below_support);
        Ok(())
    }

    fn categorize(&mut self, report: &mut StageReport) -> Result<()> {
        let refiners_path = self.out(REFINERS_FILE);
        let refiners = parse_refiners(&read_artifact(&refiners_path, "acquire")?, &refiners_path.display().to_string())?;
        let cfg = self.config.clone();
        let labeled = load_labeled(&cfg)?;
        let train: Vec<&LabeledRow> = labeled
            .iter()
            .filter(|r| cfg.train_types.is_empty() || cfg.train_types.contains(&r.entity_type))
            .collect();
        if train.is_empty() {
            return Err(Error::InvalidArgument("no labeled rows for the training types".into()));
        }
        let apply: Vec<_> = refiners
            .iter()
            .filter(|r| {
                if cfg.apply_types.is_empty() {
                    !cfg.train_types.contains(&r.entity_type)
                } else {
                    cfg.apply_types.contains(&r.entity_type)
                }
            })
            .collect();

        let mut ctx = FeatureContext::open(&cfg)?;
        let mut instances = Vec::with_capacity(train.len());
        for r in &train {
            instances.push(LabeledInstance {
                entity_type: r.entity_type.clone(),
                refiner: r.refiner.clone(),
                features: ctx.features(&r.entity_type, &r.refiner, self.search_fetcher.as_deref_mut())?,
                label: r.category,
            });
        }
        let categorizer = train_forest(&instances, cfg.feature_set, &forest_params(&cfg))?;

        let mut rows = Vec::with_capacity(apply.len());
        let mut per_category: BTreeMap<IntentCategory, usize> = BTreeMap::new();
        for r in apply {
            let fv = ctx.features(&r.entity_type, &r.refiner, self.search_fetcher.as_deref_mut())?;
            let prediction = predict(&categorizer, &fv)?;
            *per_category.entry(prediction.category).or_default() += 1;
            rows.push(CategoryRow {
                entity_type: r.entity_type.clone(),
                refiner: r.refiner.clone(),
                prediction,
            });
        }
        ctx.save(&cfg)?;
        write(&self.out(CATEGORIES_FILE), format_categories(&rows))?;
        report.outputs = vec![CATEGORIES_FILE.into()];
        report.count("training_instances", instances.len());
        report.count("categorized", rows.len());
        report.count(
            "by_category",
            per_category.iter().map(|(c, n)| (c.name(), *n)).collect::<BTreeMap<_, _>>(),
        );
        ctx.report(report);
        Ok(())
    }

    fn cluster(&mut self, report: &mut StageReport) -> Result<()> {
        let cats_path = self.out(CATEGORIES_FILE);
        let cats = parse_categories(&read_artifact(&cats_path, "categorize")?, &cats_path.display().to_string())?;
        let cfg = &self.config;
        let vocab = load_embeddings(&cfg.embeddings)?;

        let mut eps = [cfg.epsilon_default; 4];
        let mut sources = ["default"; 4];
        let mut fitted_groups = 0;
        if cfg.epsilon.iter().any(Option::is_none) {
            let labeled = load_labeled(cfg)?;
            let train: Vec<&LabeledRow> = labeled
                .iter()
                .filter(|r| cfg.train_types.is_empty() || cfg.train_types.contains(&r.entity_type))
                .collect();
            for (cat, groups) in gold_groups(&train, &vocab)? {
                if cfg.epsilon[cat.index()].is_none() {
                    fitted_groups += groups.len();
                    eps[cat.index()] = fit_epsilon(&groups, cat, cfg.grid_step)?;
                    sources[cat.index()] = "fitted";
                }
            }
        }
        for (i, fixed) in cfg.epsilon.iter().enumerate() {
            if let Some(e) = fixed {
                eps[i] = *e;
                sources[i] = "fixed";
            }
        }
        let params = ClusteringParams::new(eps, cfg.grid_step)?;

        let mut groups: BTreeMap<(String, IntentCategory), (EntityType, Vec<(String, _)>)> = BTreeMap::new();
        let mut oov = 0usize;
        for r in &cats {
            match phrase_vector(&vocab, &r.refiner) {
                Some(v) => groups
                    .entry((r.entity_type.label(), r.prediction.category))
                    .or_insert_with(|| (r.entity_type.clone(), Vec::new()))
                    .1
                    .push((r.refiner.clone(), v)),
                None => oov += 1,
            }
        }
        let mut rows = Vec::new();
        let mut cluster_count = 0;
        for ((_, cat), (ty, members)) in groups {
            let group = RefinerGroup::new(ty, cat, members)?;
            let set = cluster_group(&group, &params);
            cluster_count += set.len();
            for (c, cluster) in set.clusters.iter().enumerate() {
                for &m in cluster {
                    rows.push(ClusterRow {
                        entity_type: group.entity_type.clone(),
                        category: cat,
                        cluster: c,
                        refiner: group.members()[m].0.clone(),
                    });
                }
            }
        }
        let eps_rows: Vec<EpsilonRow> = IntentCategory::ALL
            .iter()
            .map(|&c| EpsilonRow {
                category: c,
                epsilon: eps[c.index()],
                source: sources[c.index()].into(),
            })
            .collect();
        write(&self.out(EPSILON_FILE), format_epsilons(&eps_rows))?;
        write(&self.out(CLUSTERS_FILE), format_clusters(&rows))?;
        report.outputs = vec![EPSILON_FILE.into(), CLUSTERS_FILE.into()];
        report.count("refiners_in", cats.len());
        report.count("refiners_clustered", rows.len());
        report.count("oov_refiners_dropped", oov);
        report.count("clusters", cluster_count);
        report.count("epsilon_training_groups", fitted_groups);
        Ok(())
    }

    fn build(&mut self, report: &mut StageReport) -> Result<()> {
        let clusters_path = self.out(CLUSTERS_FILE);
        let rows = parse_clusters(&read_artifact(&clusters_path, "cluster")?, &clusters_path.display().to_string())?;
        let cats_path = self.out(CATEGORIES_FILE);
        let cats = parse_categories(&read_artifact(&cats_path, "categorize")?, &cats_path.display().to_string())?;
        let vocab = load_embeddings(&self.config.embeddings)?;

        let mut grouped: BTreeMap<(String, IntentCategory), (EntityType, Vec<(usize, String)>)> = BTreeMap::new();
        for r in rows {
            grouped
                .entry((r.entity_type.label(), r.category))
                .or_insert_with(|| (r.entity_type.clone(), Vec::new()))
                .1
                .push((r.cluster, r.refiner));
        }
        let mut clustered = Vec::with_capacity(grouped.len());
        for ((_, cat), (ty, members)) in grouped {
            let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            let mut vectors = Vec::with_capacity(members.len());
            for (i, (c, refiner)) in members.into_iter().enumerate() {
                let v = phrase_vector(&vocab, &refiner).ok_or_else(|| {
                    Error::InvalidArgument(format!("clustered refiner `{refiner}` ({ty}) has no vector"))
                })?;
                by_cluster.entry(c).or_default().push(i);
                vectors.push((refiner, v));
            }
            let group = RefinerGroup::new(ty, cat, vectors)?;
            clustered.push((
                group,
                ClusterSet {
                    clusters: by_cluster.into_values().collect(),
                },
            ));
        }
        let predictions: HashMap<(EntityType, String), CategoryPrediction> = cats
            .into_iter()
            .map(|r| ((r.entity_type, r.refiner), r.prediction))
            .collect();
        let (profiles, diag) = build_profiles(&clustered, &predictions)?;

        write(&self.out(KB_FILE), serialize_kb(&profiles))?;
        let mut jsonl = Vec::new();
        write_profiles_jsonl(&profiles, &mut jsonl)?;
        write(&self.out(PROFILES_FILE), jsonl)?;
        report.outputs = vec![KB_FILE.into(), PROFILES_FILE.into()];
        report.count("profiles", profiles.len());
        report.count("quads", profiles.iter().map(IntentProfile::quad_count).sum::<usize>());
        report.count(
            "types",
            profiles.iter().map(|p| p.entity_type().label()).collect::<BTreeSet<_>>().len(),
        );
        report.count("zero_centroids", diag.zero_centroids);
        Ok(())
    }

    fn eval(&mut self, report: &mut StageReport) -> Result<()> {
        let kb_path = self.out(KB_FILE);
        let kb = parse_kb(&read_artifact(&kb_path, "build")?.into_bytes(), &kb_path.display().to_string())?;
        let cfg = self.config.clone();
        let labeled = load_labeled(&cfg)?;
        if labeled.len() < cfg.folds {
            return Err(Error::InvalidArgument(format!(
                "{} labeled rows cannot fill {} folds",
                labeled.len(),
                cfg.folds
            )));
        }

        let mut ctx = FeatureContext::open(&cfg)?;
        let mut fvs = Vec::with_capacity(labeled.len());
        for r in &labeled {
            fvs.push(ctx.features(&r.entity_type, &r.refiner, self.search_fetcher.as_deref_mut())?);
        }
        ctx.save(&cfg)?;
        let y: Vec<IntentCategory> = labeled.iter().map(|r| r.category).collect();
        let folds = make_folds(&y, cfg.folds, cfg.seed)?;
        let params = forest_params(&cfg);
        let mut accuracy_by_feature_set = BTreeMap::new();
        let mut predicted = Vec::new();
        for fs in [FeatureSet::Lexical, FeatureSet::Semantic, FeatureSet::Combined] {
            let x: Vec<Vec<f64>> = fvs.iter().map(|f| f.values(fs)).collect();
            let cv = cross_validate_with_folds(&x, &y, &folds, &params)?;
            accuracy_by_feature_set.insert(fs.to_string(), cv.accuracy);
            if fs == cfg.feature_set {
                predicted = cv.predictions.iter().map(|p| p.category).collect();
            }
        }

        let mut items = Vec::new();
        let mut item_pred = Vec::new();
        let mut item_folds = Vec::new();
        for (i, r) in labeled.iter().enumerate() {
            let (Some(cluster), Some(vector)) = (&r.cluster, phrase_vector(&ctx.vocab, &r.refiner)) else {
                continue;
            };
            items.push(GoldRefiner {
                entity_type: r.entity_type.clone(),
                refiner: r.refiner.clone(),
                category: r.category,
                cluster: cluster.clone(),
                vector,
            });
            item_pred.push(predicted[i]);
            item_folds.push(folds[i]);
        }
        let clustering = if items.is_empty() {
            None
        } else {
            Some(evaluate_clustering(&items, &item_pred, &item_folds, cfg.grid_step, cfg.epsilon_default)?)
        };

        let sample = stratified_sample(&kb, &cfg.sample_params());
        let mut sample_tsv = String::from("#triple_id\tintentID\tpredicate\tobject\tconfidence\tbucket\n");
        let mut predicate_of: HashMap<String, Predicate> = HashMap::new();
        for b in &sample.buckets {
            for &p in &b.profiles {
                for (j, q) in profile_to_quadruples(&kb[p]).iter().enumerate() {
                    let id = format!("{}#{j}", q.subject);
                    sample_tsv.push_str(&format!(
                        "{id}\t{}\t{}\t{}\t{:.4}\t{}\n",
                        q.subject, q.predicate, q.object, q.confidence, b.bucket
                    ));
                    predicate_of.insert(id, q.predicate);
                }
            }
        }

        let mut kappa_by_predicate = BTreeMap::new();
        let mut correct_rate_by_predicate = BTreeMap::new();
        let mut unmatched_annotations = 0;
        if let Some(path) = &cfg.annotations {
            let set = AnnotationSet::parse_tsv(&read_input(path)?, &path.display().to_string())?;
            unmatched_annotations = set.items().iter().filter(|i| !predicate_of.contains_key(&i.triple_id)).count();
            for pred in [Predicate::SearchedForType, Predicate::OfCategory, Predicate::ExpressedBy] {
                let subset = set.filter(|i| predicate_of.get(&i.triple_id) == Some(&pred));
                if subset.items().len() >= 2 {
                    kappa_by_predicate.insert(pred.name().to_string(), fleiss_kappa(&subset)?);
                }
                if !subset.is_empty() {
                    let votes = majority_vote(&subset);
                    let correct = votes.iter().filter(|(_, l)| l == "correct").count();
                    correct_rate_by_predicate.insert(pred.name().to_string(), correct as f64 / votes.len() as f64);
                }
            }
        }

        let auto = clustering.as_ref().map(|c| c.automatic);
        let metrics = EvalMetrics {
            homogeneity: auto.map(|s| s.homogeneity),
            completeness: auto.map(|s| s.completeness),
            v_measure: auto.map(|s| s.v_measure),
            accuracy: accuracy_by_feature_set[&cfg.feature_set.to_string()],
            kappa_by_predicate,
            feature_set: cfg.feature_set,
            accuracy_by_feature_set,
            labeled_instances: labeled.len(),
            clustering,
            sampled_profiles: sample.profile_count,
            sampled_quads: sample.quad_count,
            sample_shortfalls: sample.shortfalls.clone(),
            correct_rate_by_predicate,
        };
        write(&self.out(SAMPLE_FILE), sample_tsv)?;
        write(&self.out(METRICS_FILE), serde_json::to_string_pretty(&metrics)? + "\n")?;
        report.outputs = vec![SAMPLE_FILE.into(), METRICS_FILE.into()];
        report.count("kb_profiles", kb.len());
        report.count("labeled_instances", labeled.len());
        report.count("clustering_items", items.len());
        report.count("sampled_profiles", sample.profile_count);
        report.count("sampled_quads", sample.quad_count);
        report.count("sample_shortfalls", sample.shortfalls.len());
        report.count("unmatched_annotations", unmatched_annotations);
        ctx.report(report);
        self.metrics = Some(metrics);
        Ok(())
    }
}

/// Runs one stage with no live fetchers.
pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<StageReport> {
    Pipeline::new(config.clone()).run_stage(stage)
}

/// Runs all five stages with no live fetchers.
pub fn run_all(config: &PipelineConfig) -> Result<RunOutput> {
    Pipeline::new(config.clone()).run_all()
}

fn forest_params(cfg: &PipelineConfig) -> ForestParams {
    ForestParams {
        num_trees: cfg.trees,
        max_depth: cfg.max_depth,
        seed: cfg.seed,
    }
}

fn load_labeled(cfg: &PipelineConfig) -> Result<Vec<LabeledRow>> {
    parse_labeled(&read_input(&cfg.labeled)?, &cfg.labeled.display().to_string())
}

/// Gold training groups per category from labeled rows carrying a cluster.
fn gold_groups(rows: &[&LabeledRow], vocab: &EmbeddingVocabulary) -> Result<BTreeMap<IntentCategory, Vec<GoldGroup>>> {
    let mut by_key: BTreeMap<(String, IntentCategory), Vec<&LabeledRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.cluster.is_some()) {
        by_key.entry((r.entity_type.label(), r.category)).or_default().push(r);
    }
    let mut out: BTreeMap<IntentCategory, Vec<GoldGroup>> = BTreeMap::new();
    for ((_, cat), members) in by_key {
        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        let mut gold = Vec::new();
        let mut vectors = Vec::new();
        for m in members.iter() {
            let Some(v) = phrase_vector(vocab, &m.refiner) else { continue };
            let next = names.len();
            gold.push(*names.entry(m.cluster.as_deref().unwrap_or_default()).or_insert(next));
            vectors.push((m.refiner.clone(), v));
        }
        if vectors.is_empty() {
            continue;
        }
        let group = RefinerGroup::new(members[0].entity_type.clone(), cat, vectors)?;
        out.entry(cat).or_default().push(GoldGroup { group, gold });
    }
    Ok(out)
}

/// Embeddings, search pages and prominent entities needed for features.
struct FeatureContext {
    vocab: EmbeddingVocabulary,
    search: FixtureStore<SearchResultPage>,
    entities: Vec<EntityRecord>,
    prominent: BTreeMap<EntityType, Option<String>>,
    feature_config: FeatureConfig,
    missing_pages: usize,
}

impl FeatureContext {
    fn open(cfg: &PipelineConfig) -> Result<Self> {
        Ok(Self {
            vocab: load_embeddings(&cfg.embeddings)?,
            search: load_search_store(&cfg.search_store, cfg.store_mode)?,
            entities: load_entities(&cfg.entities)?,
            prominent: BTreeMap::new(),
            feature_config: cfg.features.clone(),
            missing_pages: 0,
        })
    }

    /// Query pairing a refiner with its type's most popular entity, or with
    /// the type name when the type has no entities.
    fn query(&mut self, ty: &EntityType, refiner: &str) -> String {
        let entities = &self.entities;
        let prominent = self
            .prominent
            .entry(ty.clone())
            .or_insert_with(|| top_entities(entities, ty, 1).pop().map(|e| e.entity_name));
        match prominent {
            Some(name) => format!("{name} {refiner}"),
            None => format!("{} {refiner}", ty.name_terms().join(" ")),
        }
    }

    fn features(
        &mut self,
        ty: &EntityType,
        refiner: &str,
        fetcher: Option<&mut (dyn Fetcher<SearchResultPage> + '_)>,
    ) -> Result<FeatureVector> {
        let query = self.query(ty, refiner);
        let page = match self.search.lookup(&query, fetcher)? {
            Some(p) => p,
            None => {
                self.missing_pages += 1;
                SearchResultPage::empty(query)
            }
        };
        Ok(features(ty, refiner, &page, &self.vocab, &self.feature_config))
    }

    fn save(&self, cfg: &PipelineConfig) -> Result<()> {
        if self.search.newly_recorded() > 0 {
            save_search_store(&self.search, &cfg.search_store)?;
        }
        Ok(())
    }

    fn report(&self, report: &mut StageReport) {
        report.count("missing_search_pages", self.missing_pages);
        report.count("search_pages_newly_recorded", self.search.newly_recorded());
        report.count(
            "types_without_entities",
            self.prominent.values().filter(|p| p.is_none()).count(),
        );
    }
}
