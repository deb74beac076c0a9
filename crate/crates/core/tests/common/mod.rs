#![allow(dead_code)]

use std::path::{Path, PathBuf};

use intentkb::pipeline::PipelineConfig;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus")
}

pub fn golden_kb_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden/kb.tsv")
}

/// The bundled fixture config writing into `out`.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(corpus_dir().join("pipeline.conf")).expect("fixture config loads");
    cfg.out_dir = out.to_path_buf();
    cfg
}

/// Copies the corpus into `dir` so a test may modify the stores.
pub fn copy_corpus(dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            std::fs::copy(entry.path(), dir.join(entry.file_name())).unwrap();
        }
    }
    dir.join("pipeline.conf")
}

/// Stage artifacts covered by the determinism contract.
pub const ARTIFACTS: &[&str] = &[
    "types.tsv",
    "refiners.tsv",
    "categories.tsv",
    "epsilon.tsv",
    "clusters.tsv",
    "kb.tsv",
    "profiles.jsonl",
    "sample.tsv",
    "metrics.json",
];
