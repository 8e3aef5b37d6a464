use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{RawDocument, Vocabulary, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One subdirectory per class label, one UTF-8 text file per document.
    Dirs,
    /// `label,text` delimited file with a header row.
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirs" => Ok(CorpusFormat::Dirs),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::invalid(format!(
                "unknown corpus format {other:?} (expected \"dirs\" or \"csv\")"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Dirs => "dirs",
            CorpusFormat::Csv => "csv",
        })
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<RawDocument>> {
    let docs = match format {
        CorpusFormat::Dirs => load_dirs(path)?,
        CorpusFormat::Csv => load_csv(path)?,
    };
    if docs.is_empty() {
        return Err(Error::malformed(path.display().to_string(), "corpus contains no documents"));
    }
    Ok(docs)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden {
            entries.push(entry.path());
        }
    }
    entries.sort();
    Ok(entries)
}

fn load_dirs(root: &Path) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for class_dir in sorted_entries(root)? {
        if !class_dir.is_dir() {
            return Err(Error::malformed(
                class_dir.display().to_string(),
                "expected a class subdirectory",
            ));
        }
        let label = class_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for file in sorted_entries(&class_dir)? {
            if !file.is_file() {
                return Err(Error::malformed(file.display().to_string(), "expected a text file"));
            }
            let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            if text.trim().is_empty() {
                return Err(Error::malformed(file.display().to_string(), "document is empty"));
            }
            docs.push(RawDocument {
                id: docs.len(),
                text,
                label: label.clone(),
            });
        }
    }
    Ok(docs)
}

fn load_csv(path: &Path) -> Result<Vec<RawDocument>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let location = |line: Option<u64>| match line {
        Some(l) => format!("{}:{l}", path.display()),
        None => path.display().to_string(),
    };
    let headers = reader
        .headers()
        .map_err(|e| Error::malformed(location(Some(1)), e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "label" || &headers[1] != "text" {
        return Err(Error::malformed(location(Some(1)), "header must be \"label,text\""));
    }
    let mut docs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            Error::malformed(location(line), e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        if record.len() != 2 {
            return Err(Error::malformed(location(line), "expected 2 fields"));
        }
        if record[1].trim().is_empty() {
            return Err(Error::malformed(location(line), "document text is empty"));
        }
        docs.push(RawDocument {
            id: docs.len(),
            label: record[0].to_string(),
            text: record[1].to_string(),
        });
    }
    Ok(docs)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut w = create(path)?;
    for l in lines {
        writeln!(w, "{l}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

/// One term per line.
pub fn write_vocabulary(vocabulary: &Vocabulary, path: &Path) -> Result<()> {
    write_lines(path, vocabulary.terms().iter().map(String::as_str))
}

pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    Ok(Vocabulary::from_terms(read_lines(path)?))
}

pub fn write_labels(labels: &[String], path: &Path) -> Result<()> {
    write_lines(path, labels.iter().map(String::as_str))
}

pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    read_lines(path)
}

/// Sparse triplets: header `n=<n>,t=<t>`, then `doc_index,term_index,weight`
/// for every nonzero weight. Weights use the shortest round-trip formatting.
pub fn write_vsm_triplets(matrix: &WeightMatrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "n={},t={}", matrix.n(), matrix.t()).map_err(io)?;
    for (i, row) in matrix.rows().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x != 0.0 {
                writeln!(w, "{i},{j},{x}").map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

pub fn read_vsm_triplets(path: &Path) -> Result<WeightMatrix> {
    let lines = read_lines(path)?;
    let at = |k: usize| format!("{}:{}", path.display(), k + 1);
    let header = lines
        .first()
        .ok_or_else(|| Error::malformed(at(0), "missing n=<n>,t=<t> header"))?;
    let dims = header
        .split_once(',')
        .and_then(|(n, t)| {
            let n = n.trim().strip_prefix("n=")?.parse::<usize>().ok()?;
            let t = t.trim().strip_prefix("t=")?.parse::<usize>().ok()?;
            Some((n, t))
        })
        .ok_or_else(|| Error::malformed(at(0), "expected header n=<n>,t=<t>"))?;
    let (n, t) = dims;
    let mut weights = vec![0.0; n * t];
    for (k, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [i, j, w] => i
                .parse::<usize>()
                .ok()
                .zip(j.parse::<usize>().ok())
                .zip(w.parse::<f64>().ok()),
            _ => None,
        };
        let ((i, j), w) =
            parsed.ok_or_else(|| Error::malformed(at(k), "expected doc_index,term_index,weight"))?;
        if i >= n || j >= t {
            return Err(Error::malformed(at(k), format!("index ({i},{j}) outside {n}x{t}")));
        }
        weights[i * t + j] = w;
    }
    WeightMatrix::new(n, t, weights)
}
