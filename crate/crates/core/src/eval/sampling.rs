//! Stratified sampling of intent profiles by confidence bucket.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kb::IntentProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleParams {
    pub buckets: usize,
    pub types_per_bucket: usize,
    pub profiles_per_type: usize,
    pub seed: u64,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            buckets: 5,
            types_per_bucket: 25,
            profiles_per_type: 5,
            seed: 0,
        }
    }
}

/// Bucket of a confidence over `[0, 1]` split into `buckets` equal,
/// half-open intervals; 1.0 falls in the last bucket.
pub fn confidence_bucket(confidence: f64, buckets: usize) -> usize {
    let b = (confidence.clamp(0.0, 1.0) * buckets as f64).floor() as usize;
    b.min(buckets.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketSample {
    pub bucket: usize,
    pub lower: f64,
    pub upper: f64,
    /// Sampled type labels, sorted.
    pub types: Vec<String>,
    /// Indices into the input profile list, grouped by type.
    pub profiles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedSample {
    pub buckets: Vec<BucketSample>,
    pub shortfalls: Vec<String>,
    pub profile_count: usize,
    pub quad_count: usize,
}

impl StratifiedSample {
    pub fn profile_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.buckets.iter().flat_map(|b| b.profiles.iter().copied())
    }
}

/// For every bucket, draws up to `types_per_bucket` distinct types among
/// those with a profile in the bucket, then up to `profiles_per_type` of each
/// type's in-bucket profiles. Shortfalls are recorded, not treated as errors.
pub fn stratified_sample(profiles: &[IntentProfile], params: &SampleParams) -> StratifiedSample {
    let buckets = params.buckets.max(1);
    let mut by_bucket: Vec<BTreeMap<String, Vec<usize>>> = vec![BTreeMap::new(); buckets];
    for (i, p) in profiles.iter().enumerate() {
        by_bucket[confidence_bucket(p.profile_confidence(), buckets)]
            .entry(p.entity_type().label())
            .or_default()
            .push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = StratifiedSample {
        buckets: Vec::with_capacity(buckets),
        shortfalls: Vec::new(),
        profile_count: 0,
        quad_count: 0,
    };
    for (b, types) in by_bucket.into_iter().enumerate() {
        let mut labels: Vec<&String> = types.keys().collect();
        labels.shuffle(&mut rng);
        if labels.len() < params.types_per_bucket {
            out.shortfalls.push(format!(
                "bucket {b}: {} of {} types available",
                labels.len(),
                params.types_per_bucket
            ));
        }
        labels.truncate(params.types_per_bucket);
        labels.sort();

        let mut picked = Vec::new();
        for label in &labels {
            let mut members = types[*label].clone();
            members.sort_by(|&x, &y| profiles[x].id().cmp(profiles[y].id()));
            members.shuffle(&mut rng);
            if members.len() < params.profiles_per_type {
                out.shortfalls.push(format!(
                    "bucket {b}, type {label}: {} of {} profiles available",
                    members.len(),
                    params.profiles_per_type
                ));
            }
            members.truncate(params.profiles_per_type);
            members.sort_by(|&x, &y| profiles[x].id().cmp(profiles[y].id()));
            picked.extend(members);
        }
        out.profile_count += picked.len();
        out.quad_count += picked.iter().map(|&i| profiles[i].quad_count()).sum::<usize>();
        out.buckets.push(BucketSample {
            bucket: b,
            lower: b as f64 / buckets as f64,
            upper: (b + 1) as f64 / buckets as f64,
            types: labels.into_iter().cloned().collect(),
            profiles: picked,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{make_intent_id, EntityType, IntentCategory, ProfileRefiner};
    use std::collections::BTreeSet;

    /// Profile whose confidence is exactly `conf` (category and refiner share it).
    fn profile(ty: &str, seq: u32, conf: f64) -> IntentProfile {
        let ty = EntityType::from_label(ty).unwrap();
        IntentProfile::new(
            make_intent_id(&ty, seq, "r").unwrap(),
            IntentCategory::Other,
            conf,
            vec![ProfileRefiner { label: "r".into(), conf }],
        )
        .unwrap()
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(confidence_bucket(0.0, 5), 0);
        assert_eq!(confidence_bucket(0.2, 5), 1);
        assert_eq!(confidence_bucket(0.1999, 5), 0);
        assert_eq!(confidence_bucket(1.0, 5), 4);
    }

    #[test]
    fn certain_profiles_land_in_last_bucket() {
        let ps: Vec<_> = (0..4).map(|i| profile("a.b", i, 1.0)).collect();
        let s = stratified_sample(&ps, &SampleParams { types_per_bucket: 3, profiles_per_type: 10, ..Default::default() });
        assert_eq!(s.buckets[4].profiles.len(), 4);
        assert!(s.buckets[..4].iter().all(|b| b.profiles.is_empty()));
    }

    #[test]
    fn counts_match_enumeration_of_qualifying_sets() {
        // 30 profiles over 3 buckets and 4 types
        let confs = [0.1, 0.5, 0.9];
        let types = ["t.a", "t.b", "t.c", "t.d"];
        let mut ps = Vec::new();
        for i in 0..30u32 {
            let ty = types[(i as usize * 7) % 4];
            let conf = confs[(i as usize) % 3];
            let bucket_only_some = !(conf == 0.9 && ty == "t.d");
            if bucket_only_some {
                ps.push(profile(ty, i, conf));
            } else {
                ps.push(profile("t.a", i, conf));
            }
        }
        assert_eq!(ps.len(), 30);
        let params = SampleParams { buckets: 5, types_per_bucket: 3, profiles_per_type: 2, seed: 7 };
        let s = stratified_sample(&ps, &params);

        let mut expected_total = 0;
        for b in 0..5 {
            let mut per_type: BTreeMap<String, usize> = BTreeMap::new();
            for p in &ps {
                if confidence_bucket(p.profile_confidence(), 5) == b {
                    *per_type.entry(p.entity_type().label()).or_default() += 1;
                }
            }
            let sampled = &s.buckets[b];
            assert_eq!(sampled.types.len(), per_type.len().min(3));
            let got_types: BTreeSet<&String> = sampled.types.iter().collect();
            let got: usize = sampled.types.iter().map(|t| per_type[t].min(2)).sum();
            assert_eq!(sampled.profiles.len(), got);
            assert_eq!(got_types.len(), sampled.types.len(), "types repeat");
            for &i in &sampled.profiles {
                assert_eq!(confidence_bucket(ps[i].profile_confidence(), 5), b);
                assert!(sampled.types.contains(&ps[i].entity_type().label()));
            }
            expected_total += got;
        }
        assert_eq!(s.profile_count, expected_total);
        assert_eq!(s.quad_count, expected_total * 3);
        assert_eq!(s, stratified_sample(&ps, &params));
    }

    #[test]
    fn shortfalls_are_reported() {
        let ps = vec![profile("a.b", 0, 0.5)];
        let s = stratified_sample(&ps, &SampleParams::default());
        assert_eq!(s.profile_count, 1);
        assert!(s.shortfalls.iter().any(|m| m.starts_with("bucket 2: 1 of 25")));
        assert!(s.shortfalls.iter().any(|m| m.contains("type a.b: 1 of 5")));
    }
}
