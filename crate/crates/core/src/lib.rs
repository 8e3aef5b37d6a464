//! Filter-based feature selection for text document clustering.
//!
//! The pipeline turns a labeled corpus into a TF-IDF vector space, selects
//! informative terms document by document with a hybrid of teaching-learning
//! based optimization and the grey wolf optimizer, clusters the reduced space
//! with cosine K-means and scores the clustering by pair counting.
//!
//! * [`corpus`]: tokenizing, stop words, Porter stemming, TF-IDF.
//! * [`optcore`]: bit masks, MAD fitness, sigmoid binarization, genetic operators.
//! * [`baselines`]: plain binary TLBO and GWO.
//! * [`hybrid`]: the TLBO-GWO optimizer and the corpus-level feature union.
//! * [`kmeans`]: deterministic cosine K-means.
//! * [`metrics`]: pair-counting accuracy, precision, recall and F-measure.
//! * [`stats`]: one-sided Welch t-test and Mann-Whitney U.
//! * [`harness`]: multi-run experiments, arm comparison and report files.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod kmeans;
pub mod metrics;
pub mod optcore;
pub mod stats;

pub use error::{Error, Result};
