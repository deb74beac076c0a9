//! Drawing a confidence-stratified sample of profiles and measuring
//! annotator agreement on it.

use intentkb::eval::{fleiss_kappa, majority_vote, stratified_sample, AnnotationSet, SampleParams};
use intentkb::kb::{make_intent_id, EntityType, IntentCategory, IntentProfile, ProfileRefiner};

fn main() -> intentkb::Result<()> {
    let mut profiles = Vec::new();
    for (t, label) in ["a.one", "a.two", "a.three"].iter().enumerate() {
        let ty = EntityType::from_label(label)?;
        for i in 0..6u32 {
            let conf = ((i as f64 + t as f64) * 0.17) % 1.0;
            let name = format!("r{i}");
            profiles.push(IntentProfile::new(
                make_intent_id(&ty, i, &name)?,
                IntentCategory::Other,
                conf,
                vec![ProfileRefiner { label: name, conf }],
            )?);
        }
    }
    let sample = stratified_sample(&profiles, &SampleParams { buckets: 5, types_per_bucket: 2, profiles_per_type: 1, seed: 3 });
    for b in &sample.buckets {
        println!("bucket {} [{:.1}, {:.1}): types {:?}, {} profiles", b.bucket, b.lower, b.upper, b.types, b.profiles.len());
    }
    println!("{} profiles, {} quads", sample.profile_count, sample.quad_count);
    for note in &sample.shortfalls {
        println!("shortfall: {note}");
    }

    let judgments = AnnotationSet::parse_tsv(
        "t1\tcorrect\tcorrect\tcorrect\n\
         t2\tincorrect\tincorrect\tincorrect\n\
         t3\tcorrect\tcorrect\tincorrect\n\
         t4\tcorrect\tincorrect\tincorrect\n",
        "inline",
    )?;
    println!("kappa = {:.4}", fleiss_kappa(&judgments)?);
    for (id, label) in majority_vote(&judgments) {
        println!("{id}: {label}");
    }
    Ok(())
}
