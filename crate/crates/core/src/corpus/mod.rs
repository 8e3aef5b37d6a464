//! Corpus ingestion and the TF-IDF vector space model.

mod io;
pub mod porter;
mod text;

use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::optcore::FeatureMask;

pub use io::{
    load_corpus, read_labels, read_vocabulary, read_vsm_triplets, write_labels, write_vocabulary,
    write_vsm_triplets, CorpusFormat,
};
pub use text::{remove_stopwords, stem, tokenize, Preprocessor, StopList};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: usize,
    pub text: String,
    /// Ground-truth class, used only for evaluation.
    pub label: String,
}

/// Stemmed terms in lexicographic order with their document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
}

impl Vocabulary {
    fn from_df(df_by_term: BTreeMap<String, usize>) -> Self {
        let (terms, df): (Vec<_>, Vec<_>) = df_by_term.into_iter().unzip();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index, df }
    }

    /// Vocabulary read back from a term list; document frequencies are unknown (0).
    pub fn from_terms(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let df = vec![0; terms.len()];
        Self { terms, index, df }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, j: usize) -> &str {
        &self.terms[j]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, j: usize) -> usize {
        self.df[j]
    }

    /// Terms whose mask bit is set, in vocabulary order.
    pub fn select(&self, mask: &FeatureMask) -> Result<Vec<String>> {
        check_len(self.len(), mask.len())?;
        Ok(mask
            .ones()
            .map(|j| self.terms[j].clone())
            .collect())
    }
}

/// Dense n x t matrix of non-negative term weights, row i being document i.
///
/// `doc_ids` carries the identity of each row through reordering; per-document
/// random streams are keyed on it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    t: usize,
    weights: Vec<f64>,
    doc_ids: Vec<usize>,
}

impl WeightMatrix {
    pub fn new(n: usize, t: usize, weights: Vec<f64>) -> Result<Self> {
        Self::with_doc_ids(n, t, weights, (0..n).collect())
    }

    pub fn with_doc_ids(n: usize, t: usize, weights: Vec<f64>, doc_ids: Vec<usize>) -> Result<Self> {
        check_len(n * t, weights.len())?;
        check_len(n, doc_ids.len())?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("weight {w} is not a finite non-negative number")));
        }
        Ok(Self {
            n,
            t,
            weights,
            doc_ids,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.first().map_or(0, Vec::len);
        for r in rows {
            check_len(t, r.len())?;
        }
        Self::new(rows.len(), t, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.t..(i + 1) * self.t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.t + j]
    }

    pub fn doc_ids(&self) -> &[usize] {
        &self.doc_ids
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        self.row(i).iter().all(|&w| w == 0.0)
    }

    /// Rows reordered so that row `k` of the result is row `order[k]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        check_len(self.n, order.len())?;
        let mut seen = vec![false; self.n];
        for &i in order {
            if i >= self.n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("row order is not a permutation"));
            }
        }
        let weights = order.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        let doc_ids = order.iter().map(|&i| self.doc_ids[i]).collect();
        Self::with_doc_ids(self.n, self.t, weights, doc_ids)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * factor).collect();
        Self::with_doc_ids(self.n, self.t, weights, self.doc_ids.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfBase {
    #[default]
    Natural,
    Ten,
}

impl IdfBase {
    fn log(self, x: f64) -> f64 {
        match self {
            IdfBase::Natural => x.ln(),
            IdfBase::Ten => x.log10(),
        }
    }
}

/// Output of [`build_vsm`].
#[derive(Debug, Clone)]
pub struct VectorSpace {
    pub vocabulary: Vocabulary,
    pub matrix: WeightMatrix,
    /// Raw term counts per document, sorted by term index.
    pub term_counts: Vec<Vec<(usize, u32)>>,
    /// Documents with no terms left after preprocessing (all-zero rows).
    pub empty_documents: Vec<usize>,
    pub labels: Vec<String>,
}

pub fn build_vsm(documents: &[RawDocument]) -> Result<VectorSpace> {
    build_vsm_with(documents, &Preprocessor::default(), IdfBase::Natural)
}

/// `w(i,j) = tf(i,j) * log(n / df(j))`.
pub fn build_vsm_with(
    documents: &[RawDocument],
    preprocessor: &Preprocessor,
    base: IdfBase,
) -> Result<VectorSpace> {
    let n = documents.len();
    if n < 2 {
        return Err(Error::invalid(format!("corpus needs at least 2 documents, got {n}")));
    }
    let mut ids = HashSet::with_capacity(n);
    if let Some(d) = documents.iter().find(|d| !ids.insert(d.id)) {
        return Err(Error::invalid(format!("duplicate document id {}", d.id)));
    }

    let counts: Vec<BTreeMap<String, u32>> = documents
        .par_iter()
        .map(|d| {
            let mut c = BTreeMap::new();
            for term in preprocessor.process(&d.text) {
                *c.entry(term).or_insert(0) += 1;
            }
            c
        })
        .collect();

    let mut df_by_term: BTreeMap<String, usize> = BTreeMap::new();
    for c in &counts {
        for term in c.keys() {
            *df_by_term.entry(term.clone()).or_insert(0) += 1;
        }
    }
    let vocabulary = Vocabulary::from_df(df_by_term);
    let t = vocabulary.len();
    let idf: Vec<f64> = (0..t)
        .map(|j| base.log(n as f64 / vocabulary.df(j) as f64))
        .collect();

    let mut weights = vec![0.0; n * t];
    let mut term_counts = Vec::with_capacity(n);
    let mut empty_documents = Vec::new();
    for (i, c) in counts.iter().enumerate() {
        if c.is_empty() {
            warn!(
                "document {} is empty after preprocessing; keeping an all-zero row",
                documents[i].id
            );
            empty_documents.push(i);
        }
        let mut row_counts = Vec::with_capacity(c.len());
        for (term, &tf) in c {
            let j = vocabulary.index_of(term).expect("term indexed above");
            weights[i * t + j] = tf as f64 * idf[j];
            row_counts.push((j, tf));
        }
        term_counts.push(row_counts);
    }

    let doc_ids = documents.iter().map(|d| d.id).collect();
    Ok(VectorSpace {
        matrix: WeightMatrix::with_doc_ids(n, t, weights, doc_ids)?,
        vocabulary,
        term_counts,
        empty_documents,
        labels: documents.iter().map(|d| d.label.clone()).collect(),
    })
}

/// Drops the columns whose mask bit is 0, keeping surviving columns in order.
pub fn reduce_vsm(matrix: &WeightMatrix, mask: &FeatureMask) -> Result<WeightMatrix> {
    check_len(matrix.t(), mask.len())?;
    let keep: Vec<usize> = mask.ones().collect();
    if keep.is_empty() {
        return Err(Error::EmptyFeatureSpace);
    }
    let weights = matrix
        .rows()
        .flat_map(|row| keep.iter().map(move |&j| row[j]))
        .collect();
    WeightMatrix::with_doc_ids(matrix.n(), keep.len(), weights, matrix.doc_ids().to_vec())
}
