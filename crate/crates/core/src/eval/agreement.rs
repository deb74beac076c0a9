//! Inter-annotator agreement and majority voting over triple judgments.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Label assigned when annotators tie.
pub const TIE_LABEL: &str = "incorrect";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedItem {
    pub triple_id: String,
    pub labels: Vec<String>,
}

/// Items judged by the same number (at least two) of annotators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    items: Vec<AnnotatedItem>,
    annotators: usize,
}

impl AnnotationSet {
    pub fn new(items: Vec<AnnotatedItem>) -> Result<Self> {
        let annotators = items.first().map_or(0, |i| i.labels.len());
        if items.iter().any(|i| i.labels.len() != annotators) {
            return Err(Error::InvalidArgument(
                "every item needs the same number of annotator labels".into(),
            ));
        }
        if !items.is_empty() && annotators < 2 {
            return Err(Error::InvalidArgument("at least two annotators are required".into()));
        }
        Ok(Self { items, annotators })
    }

    pub fn items(&self) -> &[AnnotatedItem] {
        &self.items
    }

    pub fn annotators(&self) -> usize {
        self.annotators
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Keeps the items accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&AnnotatedItem) -> bool) -> Self {
        Self {
            items: self.items.iter().filter(|i| keep(i)).cloned().collect(),
            annotators: self.annotators,
        }
    }

    /// Parses `triple_id<TAB>label_1<TAB>...<TAB>label_m` rows. Lines starting
    /// with `#` are comments.
    pub fn parse_tsv(text: &str, source: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().trim().to_string();
            let labels: Vec<String> = fields.map(|l| l.trim().to_lowercase()).collect();
            if id.is_empty() || labels.len() < 2 || labels.iter().any(String::is_empty) {
                return Err(Error::parse(source, i + 1, "expected a triple id and at least two labels"));
            }
            if let Some(first) = items.first().map(|f: &AnnotatedItem| f.labels.len()) {
                if first != labels.len() {
                    return Err(Error::parse(
                        source,
                        i + 1,
                        format!("expected {first} labels, found {}", labels.len()),
                    ));
                }
            }
            items.push(AnnotatedItem { triple_id: id, labels });
        }
        Self::new(items)
    }
}

/// Fleiss' kappa. When chance agreement is 1 (every label identical) the
/// observed agreement is also 1 and kappa is reported as 1.
pub fn fleiss_kappa(annotations: &AnnotationSet) -> Result<f64> {
    if annotations.items.len() < 2 {
        return Err(Error::Domain("Fleiss kappa needs at least two items".into()));
    }
    let n = annotations.annotators as f64;
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    let mut p_bar = 0.0;
    for item in &annotations.items {
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        for l in &item.labels {
            *counts.entry(l).or_default() += 1.0;
            *totals.entry(l).or_default() += 1.0;
        }
        let agreeing: f64 = counts.values().map(|c| c * c).sum::<f64>() - n;
        p_bar += agreeing / (n * (n - 1.0));
    }
    let items = annotations.items.len() as f64;
    p_bar /= items;
    let p_e: f64 = totals.values().map(|c| (c / (items * n)).powi(2)).sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Plurality label per item; ties resolve to [`TIE_LABEL`].
pub fn majority_vote(annotations: &AnnotationSet) -> Vec<(String, String)> {
    annotations
        .items
        .iter()
        .map(|item| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for l in &item.labels {
                *counts.entry(l).or_default() += 1;
            }
            let top = counts.values().copied().max().unwrap_or(0);
            let leaders: Vec<&str> = counts.iter().filter(|(_, &c)| c == top).map(|(l, _)| *l).collect();
            let label = match leaders[..] {
                [single] => single.to_string(),
                _ => TIE_LABEL.to_string(),
            };
            (item.triple_id.clone(), label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[&str]]) -> AnnotationSet {
        AnnotationSet::new(
            rows.iter()
                .enumerate()
                .map(|(i, labels)| AnnotatedItem {
                    triple_id: format!("t{i}"),
                    labels: labels.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_agreement_is_one() {
        let s = set(&[&["y", "y", "y"], &["n", "n", "n"], &["y", "y", "y"]]);
        assert_eq!(fleiss_kappa(&s).unwrap(), 1.0);
        let s = set(&[&["y", "y"], &["y", "y"]]);
        assert_eq!(fleiss_kappa(&s).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_kappa() {
        let s = set(&[&["y", "y", "y"], &["n", "n", "n"], &["y", "y", "n"], &["y", "n", "n"]]);
        assert!((fleiss_kappa(&s).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_of_one_item_is_an_error() {
        let s = set(&[&["y", "n"]]);
        assert!(matches!(fleiss_kappa(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn votes() {
        let s = set(&[
            &["correct", "correct", "incorrect"],
            &["correct", "correct", "correct"],
        ]);
        let v = majority_vote(&s);
        assert_eq!(v[0].1, "correct");
        assert_eq!(v[1].1, "correct");
        let tie = set(&[&["correct", "incorrect"]]);
        assert_eq!(majority_vote(&tie)[0].1, "incorrect");
    }

    #[test]
    fn tsv_parsing() {
        let s = AnnotationSet::parse_tsv("# id\tlabels\nt1\tCorrect\tcorrect\tincorrect\n", "a.tsv").unwrap();
        assert_eq!(s.annotators(), 3);
        assert_eq!(s.items()[0].labels[0], "correct");
        let err = AnnotationSet::parse_tsv("t1\ta\tb\nt2\ta\n", "a.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(AnnotationSet::new(vec![AnnotatedItem { triple_id: "x".into(), labels: vec!["a".into()] }]).is_err());
    }
}
