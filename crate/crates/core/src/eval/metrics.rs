//! Clustering metrics from a class × cluster contingency table.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ContingencyTable {
    /// `counts[class][cluster]`; rows must share a length and the total must
    /// be positive.
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let width = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidArgument("ragged contingency table".into()));
        }
        let n = counts.iter().flatten().sum();
        if n == 0 {
            return Err(Error::InvalidArgument("empty contingency table".into()));
        }
        Ok(Self { counts, n })
    }

    /// Cross-tabulates aligned gold and predicted labels.
    pub fn from_labels<A: Ord, B: Ord>(gold: &[A], predicted: &[B]) -> Result<Self> {
        if gold.len() != predicted.len() {
            return Err(Error::Domain(format!(
                "label sequences differ in length ({} vs {})",
                gold.len(),
                predicted.len()
            )));
        }
        let classes: BTreeMap<&A, usize> = gold.iter().map(|g| (g, 0)).collect();
        let classes: BTreeMap<&A, usize> = classes.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
        let clusters: BTreeMap<&B, usize> = predicted.iter().map(|p| (p, 0)).collect();
        let clusters: BTreeMap<&B, usize> = clusters.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
        let mut counts = vec![vec![0u64; clusters.len()]; classes.len()];
        for (g, p) in gold.iter().zip(predicted) {
            counts[classes[g]][clusters[p]] += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let width = self.counts.first().map_or(0, Vec::len);
        let counts = (0..width)
            .map(|k| self.counts.iter().map(|row| row[k]).collect())
            .collect();
        Self { counts, n: self.n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ClusteringScores {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
}

fn entropy(marginal: impl Iterator<Item = u64>, n: f64) -> f64 {
    marginal
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `H(row | column)` with rows as the conditioned variable.
fn conditional_entropy(counts: &[Vec<u64>], n: f64) -> f64 {
    let width = counts.first().map_or(0, Vec::len);
    let mut h = 0.0;
    for k in 0..width {
        let col: u64 = counts.iter().map(|r| r[k]).sum();
        if col == 0 {
            continue;
        }
        for row in counts {
            let c = row[k];
            if c > 0 {
                h -= (c as f64 / n) * (c as f64 / col as f64).ln();
            }
        }
    }
    h
}

/// Homogeneity, completeness and their harmonic mean, the V-measure.
pub fn homogeneity_completeness_v(table: &ContingencyTable) -> ClusteringScores {
    let n = table.n as f64;
    let t = table.transpose();
    let h_class = entropy(table.counts.iter().map(|r| r.iter().sum()), n);
    let h_cluster = entropy(t.counts.iter().map(|r| r.iter().sum()), n);

    let homogeneity = if h_class == 0.0 {
        1.0
    } else {
        (1.0 - conditional_entropy(&table.counts, n) / h_class).clamp(0.0, 1.0)
    };
    let completeness = if h_cluster == 0.0 {
        1.0
    } else {
        (1.0 - conditional_entropy(&t.counts, n) / h_cluster).clamp(0.0, 1.0)
    };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    ClusteringScores {
        homogeneity,
        completeness,
        v_measure,
    }
}

/// Fraction of aligned positions that agree.
pub fn accuracy<T: PartialEq>(predictions: &[T], gold: &[T]) -> Result<f64> {
    if predictions.len() != gold.len() || gold.is_empty() {
        return Err(Error::Domain(format!(
            "accuracy needs aligned non-empty sequences ({} vs {})",
            predictions.len(),
            gold.len()
        )));
    }
    let hits = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}
