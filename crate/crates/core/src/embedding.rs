//! Pre-trained word vectors, phrase composition and cosine similarity.
//!
//! Vectors are read from the word2vec text format: a `<vocab_size> <dimension>`
//! header followed by one `token v1 ... vd` line per entry. Multiword entries
//! use underscores in place of spaces (`customer_service`).

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVocabulary {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    duplicates: usize,
}

impl EmbeddingVocabulary {
    /// Builds a vocabulary from in-memory entries; later duplicates win.
    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        if dimension == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        let mut vocab = Self {
            dimension,
            index: HashMap::new(),
            data: Vec::new(),
            duplicates: 0,
        };
        for (token, vector) in entries {
            let token = token.into();
            if vector.len() != dimension {
                return Err(Error::InvalidArgument(format!(
                    "vector for `{token}` has {} components, expected {dimension}",
                    vector.len()
                )));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite component for `{token}`")));
            }
            vocab.insert(token, &vector);
        }
        Ok(vocab)
    }

    fn insert(&mut self, token: String, vector: &[f64]) {
        match self.index.get(&token) {
            Some(&slot) => {
                self.duplicates += 1;
                self.data[slot * self.dimension..(slot + 1) * self.dimension].copy_from_slice(vector);
            }
            None => {
                self.index.insert(token, self.index.len());
                self.data.extend_from_slice(vector);
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Number of rows that overwrote an earlier entry with the same token.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&slot| &self.data[slot * self.dimension..(slot + 1) * self.dimension])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Plain (unnormalized) centroid of the in-vocabulary terms, plus how many
    /// terms were covered.
    pub fn term_centroid<'a>(&self, terms: impl IntoIterator<Item = &'a str>) -> Option<(Vec<f64>, usize)> {
        let found: Vec<&[f64]> = terms.into_iter().filter_map(|t| self.get(t)).collect();
        if found.is_empty() {
            return None;
        }
        let c = centroid(&found).ok()?;
        Some((c, found.len()))
    }
}

/// Reads an embedding file in the text format described in the module docs.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingVocabulary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading embeddings {}", path.display()), e))?;
    parse_embeddings(&text, &path.display().to_string())
}

pub fn parse_embeddings(text: &str, source: &str) -> Result<EmbeddingVocabulary> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 1, "empty embedding file"))?;
    let mut head = header.split_whitespace();
    let bad_header = || Error::parse(source, 1, "header must be `<vocab_size> <dimension>`");
    let rows: usize = head.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
    let dimension: usize = head.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
    if head.next().is_some() || dimension == 0 {
        return Err(bad_header());
    }

    let mut vocab = EmbeddingVocabulary::from_entries::<_, String>(dimension, [])?;
    let mut buf = Vec::with_capacity(dimension);
    let mut seen_rows = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default();
        buf.clear();
        for p in parts {
            let v: f64 = p
                .parse()
                .map_err(|_| Error::parse(source, lineno, format!("bad float `{p}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(source, lineno, "non-finite component"));
            }
            buf.push(v);
        }
        if buf.len() != dimension {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected {dimension} components, found {}", buf.len()),
            ));
        }
        vocab.insert(token.to_string(), &buf);
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::parse(
            source,
            1,
            format!("header declares {rows} rows, file has {seen_rows}"),
        ));
    }
    Ok(vocab)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorSource {
    DirectLookup,
    TermCentroid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector {
    pub vector: Vec<f64>,
    pub source: VectorSource,
    pub covered_terms: usize,
}

/// Vector for a (possibly multiword) phrase. The phrase's own entry is used
/// when present; otherwise the L2-normalized centroid of its in-vocabulary
/// terms. Returns `None` when no term is covered.
pub fn phrase_vector(vocab: &EmbeddingVocabulary, phrase: &str) -> Option<PhraseVector> {
    let terms: Vec<&str> = phrase.split_whitespace().collect();
    if terms.is_empty() {
        return None;
    }
    if let Some(v) = vocab.get(&terms.join("_")) {
        return Some(PhraseVector {
            vector: v.to_vec(),
            source: VectorSource::DirectLookup,
            covered_terms: terms.len(),
        });
    }
    let (mut c, covered) = vocab.term_centroid(terms.iter().copied())?;
    let norm = l2_norm(&c);
    // terms that cancel out leave nothing to normalize
    if norm == 0.0 {
        return None;
    }
    c.iter_mut().for_each(|x| *x /= norm);
    Some(PhraseVector {
        vector: c,
        source: VectorSource::TermCentroid,
        covered_terms: covered,
    })
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Cosine similarity, clamped to `[-1, 1]`. `cosine(v, v)` is exactly 1.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = dot(u, u);
    let nv = dot(v, v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cosine of a zero vector".into()));
    }
    let cos = if u == v { 1.0 } else { dot(u, v) / (nu.sqrt() * nv.sqrt()) };
    Ok(cos.clamp(-1.0, 1.0))
}

/// Componentwise arithmetic mean.
pub fn centroid<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Domain("centroid of an empty set".into()))?
        .as_ref();
    let mut sum = first.to_vec();
    for v in &vectors[1..] {
        let v = v.as_ref();
        if v.len() != sum.len() {
            return Err(Error::Domain("centroid of vectors with mixed dimensions".into()));
        }
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
    }
    let n = vectors.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}
