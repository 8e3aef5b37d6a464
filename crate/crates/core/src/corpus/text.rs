use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

use super::porter;

static SMART_STOPWORDS: &str = include_str!("../../data/smart_stopwords.txt");

/// Splits text into maximal runs of alphabetic characters, lowercased.
/// Everything else (digits, punctuation, whitespace) separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stoplist: &StopList) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stoplist.contains(t))
        .collect()
}

pub fn stem(token: &str) -> String {
    porter::stem(token)
}

#[derive(Debug, Clone, Default)]
pub struct StopList {
    words: HashSet<String>,
}

impl StopList {
    /// The bundled SMART English stop list.
    pub fn smart() -> Self {
        Self::parse(SMART_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Tokenize, drop stop words, stem.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stoplist: StopList,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            stoplist: StopList::smart(),
        }
    }
}

impl Preprocessor {
    pub fn new(stoplist: StopList) -> Self {
        Self { stoplist }
    }

    pub fn process(&self, text: &str) -> Vec<String> {
        remove_stopwords(tokenize(text), &self.stoplist)
            .iter()
            .map(|t| stem(t))
            .collect()
    }
}
