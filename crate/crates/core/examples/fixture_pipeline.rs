//! Runs all five stages over the bundled fixture corpus.
//!
//! Usage: `cargo run --example fixture_pipeline [out_dir]`

use intentkb::pipeline::{run_all, PipelineConfig};

fn main() -> intentkb::Result<()> {
    let conf = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus/pipeline.conf");
    let mut cfg = PipelineConfig::load(conf)?;
    cfg.out_dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("intentkb-fixture"));

    let out = run_all(&cfg)?;
    for r in &out.reports {
        println!("{:<10} {:>5} ms  {}", r.stage, r.duration_ms, r.outputs.join(", "));
    }
    println!("{} profiles written to {}", out.kb.len(), cfg.out_dir.join("kb.tsv").display());
    let m = &out.metrics;
    println!("accuracy {:.3} ({})", m.accuracy, m.feature_set);
    if let Some(v) = m.v_measure {
        println!("v-measure {v:.3}");
    }
    for (pred, k) in &m.kappa_by_predicate {
        println!("kappa {pred}: {k:.3}");
    }
    Ok(())
}
