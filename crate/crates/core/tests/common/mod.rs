//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::Path;

use docfs::corpus::RawDocument;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ONSETS: &[u8] = b"bdfgklmnprtvz";
const VOWELS: &[u8] = b"aiou";
const CODAS: &[u8] = b"bdfgkpvz";

/// Deterministic pseudo-word that no stop list contains and that the stemmer
/// leaves alone (it ends in a consonant that starts no suffix rule).
pub fn pseudo_word(index: usize) -> String {
    let mut i = index;
    let mut w = String::new();
    for _ in 0..2 {
        w.push(ONSETS[i % ONSETS.len()] as char);
        i /= ONSETS.len();
        w.push(VOWELS[i % VOWELS.len()] as char);
        i /= VOWELS.len();
    }
    w.push(ONSETS[i % ONSETS.len()] as char);
    i /= ONSETS.len();
    w.push(VOWELS[i % VOWELS.len()] as char);
    i /= VOWELS.len();
    w.push(CODAS[i % CODAS.len()] as char);
    w
}

#[derive(Debug, Clone, Copy)]
pub struct DeskSpec {
    pub classes: usize,
    pub docs_per_class: usize,
    pub terms_per_class: usize,
    pub noise_terms: usize,
    /// Class terms every document of the class contains.
    pub core_terms: usize,
    pub informative_per_doc: usize,
    pub noise_per_doc: usize,
    pub informative_tf: (u32, u32),
    pub noise_tf: (u32, u32),
}

impl Default for DeskSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            docs_per_class: 10,
            terms_per_class: 20,
            noise_terms: 60,
            core_terms: 2,
            informative_per_doc: 6,
            noise_per_doc: 12,
            informative_tf: (1, 3),
            noise_tf: (1, 3),
        }
    }
}

pub fn noise_vocabulary(spec: &DeskSpec) -> Vec<String> {
    (0..spec.noise_terms).map(pseudo_word).collect()
}

/// Classes with disjoint informative vocabularies plus a noise pool shared by
/// all classes. The informative part of document `d` uses the same term
/// offsets and counts in every class, so no class is more cohesive than
/// another; noise is drawn independently per document.
pub fn desk_corpus(spec: &DeskSpec, seed: u64) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = noise_vocabulary(spec);
    let offsets: Vec<usize> = (spec.core_terms..spec.terms_per_class).collect();
    let patterns: Vec<Vec<(usize, u32)>> = (0..spec.docs_per_class)
        .map(|_| {
            let mut chosen: Vec<usize> = (0..spec.core_terms).collect();
            chosen.extend(offsets.choose_multiple(&mut rng, spec.informative_per_doc - spec.core_terms));
            chosen
                .into_iter()
                .map(|o| (o, rng.gen_range(spec.informative_tf.0..=spec.informative_tf.1)))
                .collect()
        })
        .collect();
    let mut docs = Vec::new();
    for c in 0..spec.classes {
        for pattern in &patterns {
            let mut words = Vec::new();
            for &(o, tf) in pattern {
                let term = pseudo_word(spec.noise_terms + c * spec.terms_per_class + o);
                words.extend(std::iter::repeat_n(term, tf as usize));
            }
            for term in noise.choose_multiple(&mut rng, spec.noise_per_doc) {
                for _ in 0..rng.gen_range(spec.noise_tf.0..=spec.noise_tf.1) {
                    words.push(term.clone());
                }
            }
            words.shuffle(&mut rng);
            docs.push(RawDocument {
                id: docs.len(),
                text: words.join(" "),
                label: format!("class{c}"),
            });
        }
    }
    docs
}

/// Writes documents as a `label,text` CSV file.
pub fn write_csv_corpus(docs: &[RawDocument], path: &Path) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["label", "text"]).unwrap();
    for d in docs {
        w.write_record([d.label.as_str(), d.text.as_str()]).unwrap();
    }
    w.flush().unwrap();
}
