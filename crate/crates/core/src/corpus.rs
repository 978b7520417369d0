//! Bag-of-words corpora, timestamp tables, and a synthetic generator.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng;

/// A bag-of-words corpus with dense 0-based document and word ids.
///
/// Documents hold `(word_id, count)` pairs sorted by word id; documents
/// absent from the input exist with zero tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub doc_count: usize,
    pub vocab_size: usize,
    /// Per-document `(word_id, count)` pairs, sorted by word id, counts >= 1.
    pub docs: Vec<Vec<(u32, u32)>>,
    pub total_tokens: u64,
    /// Optional word strings, index = word id.
    pub vocab: Option<Vec<String>>,
}

impl Corpus {
    /// Build a corpus from raw per-document pairs, summing duplicates and
    /// dropping zero counts.
    pub fn from_docs(vocab_size: usize, raw_docs: Vec<Vec<(u32, u32)>>) -> Result<Corpus> {
        let mut docs = Vec::with_capacity(raw_docs.len());
        let mut total: u64 = 0;
        for (j, raw) in raw_docs.into_iter().enumerate() {
            let mut merged: BTreeMap<u32, u32> = BTreeMap::new();
            for (w, c) in raw {
                if (w as usize) >= vocab_size {
                    return Err(Error::Dimension(format!(
                        "word id {} out of range for vocab size {} (doc {})",
                        w, vocab_size, j
                    )));
                }
                if c > 0 {
                    *merged.entry(w).or_insert(0) += c;
                }
            }
            let pairs: Vec<(u32, u32)> = merged.into_iter().collect();
            total += pairs.iter().map(|&(_, c)| c as u64).sum::<u64>();
            docs.push(pairs);
        }
        Ok(Corpus {
            doc_count: docs.len(),
            vocab_size,
            docs,
            total_tokens: total,
            vocab: None,
        })
    }

    /// Token count of document `j`.
    pub fn doc_len(&self, j: usize) -> u64 {
        self.docs[j].iter().map(|&(_, c)| c as u64).sum()
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {} from {:?}", what, field),
    })
}

/// Read a corpus in the UCI bag-of-words format: three header lines
/// (D, W, NNZ) followed by `docID wordID count` triples with 1-based ids.
/// Duplicate `(doc, word)` entries are summed.
pub fn load_uci_bow<R: BufRead, V: BufRead>(docword: R, vocab: Option<V>) -> Result<Corpus> {
    let mut lines = docword.lines().enumerate();
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        loop {
            let (idx, line) = match lines.next() {
                Some((idx, line)) => (idx, line.map_err(|e| Error::io("<docword>", e))?),
                None => {
                    return Err(Error::Format(
                        "missing header lines (expected D, W, NNZ)".into(),
                    ))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            *slot = parse_field(&line, idx + 1, "header integer")?;
            break;
        }
    }
    let [doc_count, vocab_size, nnz] = header;

    let mut docs: Vec<BTreeMap<u32, u32>> = vec![BTreeMap::new(); doc_count];
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io("<docword>", e))?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (d, w, c) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(d), Some(w), Some(c), None) => (d, w, c),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `docID wordID count`, got {:?}", line),
                })
            }
        };
        let d: usize = parse_field(d, line_no, "docID")?;
        let w: usize = parse_field(w, line_no, "wordID")?;
        let c: u32 = parse_field(c, line_no, "count")?;
        if d < 1 || d > doc_count {
            return Err(Error::Bounds {
                line: line_no,
                msg: format!("docID {} outside 1..={}", d, doc_count),
            });
        }
        if w < 1 || w > vocab_size {
            return Err(Error::Bounds {
                line: line_no,
                msg: format!("wordID {} outside 1..={}", w, vocab_size),
            });
        }
        if c == 0 {
            return Err(Error::Parse {
                line: line_no,
                msg: "count must be >= 1".into(),
            });
        }
        *docs[d - 1].entry((w - 1) as u32).or_insert(0) += c;
        seen += 1;
    }
    if seen != nnz {
        return Err(Error::Format(format!(
            "header declares {} entries but file has {}",
            nnz, seen
        )));
    }

    let docs: Vec<Vec<(u32, u32)>> = docs.into_iter().map(|m| m.into_iter().collect()).collect();
    let total_tokens = docs
        .iter()
        .flat_map(|d| d.iter())
        .map(|&(_, c)| c as u64)
        .sum();

    let vocab = match vocab {
        Some(reader) => {
            let mut words = Vec::with_capacity(vocab_size);
            for line in reader.lines() {
                let line = line.map_err(|e| Error::io("<vocab>", e))?;
                words.push(line.trim().to_string());
            }
            if words.len() != vocab_size {
                return Err(Error::Format(format!(
                    "vocabulary has {} words but header declares {}",
                    words.len(),
                    vocab_size
                )));
            }
            Some(words)
        }
        None => None,
    };

    Ok(Corpus {
        doc_count,
        vocab_size,
        docs,
        total_tokens,
        vocab,
    })
}

/// Write a corpus in the UCI bag-of-words format (1-based ids). Reloading
/// the output yields an identical corpus.
pub fn write_uci_bow<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let wrap = |e| Error::io("<docword out>", e);
    let nnz: usize = corpus.docs.iter().map(|d| d.len()).sum();
    writeln!(out, "{}", corpus.doc_count).map_err(wrap)?;
    writeln!(out, "{}", corpus.vocab_size).map_err(wrap)?;
    writeln!(out, "{}", nnz).map_err(wrap)?;
    for (j, doc) in corpus.docs.iter().enumerate() {
        for &(w, c) in doc {
            writeln!(out, "{} {} {}", j + 1, w + 1, c).map_err(wrap)?;
        }
    }
    Ok(())
}

/// Per-document timestamp arrays of fixed length `L`.
///
/// Raw timestamps (publication years) are mapped to dense ids by sorted
/// order; each document's single raw timestamp is replicated `L` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampTable {
    /// `arrays[j]` has exactly `array_len` entries, each `< timestamp_vocab_size`.
    pub arrays: Vec<Vec<u32>>,
    pub array_len: usize,
    pub timestamp_vocab_size: usize,
    /// Distinct raw timestamp values, index = timestamp id.
    pub values: Vec<i64>,
}

impl TimestampTable {
    /// Build a table from one raw timestamp per document, replicated into
    /// a length-`array_len` array.
    pub fn from_raw(raw: &[i64], array_len: usize) -> Result<TimestampTable> {
        if array_len == 0 {
            return Err(Error::Config("timestamp array length must be >= 1".into()));
        }
        let mut values: Vec<i64> = raw.to_vec();
        values.sort_unstable();
        values.dedup();
        let id_of = |v: i64| values.binary_search(&v).expect("value present") as u32;
        let arrays = raw.iter().map(|&v| vec![id_of(v); array_len]).collect();
        Ok(TimestampTable {
            arrays,
            array_len,
            timestamp_vocab_size: values.len(),
            values,
        })
    }

    pub fn first_raw(&self) -> Option<i64> {
        self.values.first().copied()
    }

    pub fn last_raw(&self) -> Option<i64> {
        self.values.last().copied()
    }
}

/// Read `docID year` pairs (1-based docID, whitespace-separated) covering
/// every document of `corpus`, and replicate each year into a length-`L`
/// timestamp array.
pub fn load_timestamps<R: BufRead>(
    reader: R,
    corpus: &Corpus,
    array_len: usize,
) -> Result<TimestampTable> {
    let mut raw: Vec<Option<i64>> = vec![None; corpus.doc_count];
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<timestamps>", e))?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (d, y) = match (it.next(), it.next(), it.next()) {
            (Some(d), Some(y), None) => (d, y),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `docID year`, got {:?}", line),
                })
            }
        };
        let d: usize = parse_field(d, line_no, "docID")?;
        let y: i64 = parse_field(y, line_no, "year")?;
        if d < 1 || d > corpus.doc_count {
            return Err(Error::Bounds {
                line: line_no,
                msg: format!("docID {} outside 1..={}", d, corpus.doc_count),
            });
        }
        if raw[d - 1].is_some() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("docID {} listed twice", d),
            });
        }
        raw[d - 1] = Some(y);
    }
    let missing: Vec<usize> = raw
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(j, _)| j + 1)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(format!(
            "{} of {} documents have no timestamp (first missing docID {})",
            missing.len(),
            corpus.doc_count,
            missing[0]
        )));
    }
    let raw: Vec<i64> = raw.into_iter().map(|v| v.unwrap()).collect();
    TimestampTable::from_raw(&raw, array_len)
}

/// Draw from a Zipf law over ranks `1..=n` with the given exponent, via
/// inverse CDF lookup on a precomputed cumulative table.
struct ZipfTable {
    cumulative: Vec<f64>,
}

impl ZipfTable {
    fn new(n: usize, exponent: f64) -> ZipfTable {
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for r in 1..=n {
            acc += (r as f64).powf(-exponent);
            cumulative.push(acc);
        }
        ZipfTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty table");
        let u: f64 = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c < u)
    }
}

/// Generate a synthetic corpus: document lengths log-normal around
/// `mean_doc_len`, word ids Zipf-distributed with `zipf_exponent`.
/// Deterministic for a fixed seed.
pub fn generate_synthetic(
    doc_count: usize,
    vocab_size: usize,
    mean_doc_len: usize,
    zipf_exponent: f64,
    seed: u64,
) -> Result<Corpus> {
    if doc_count == 0 || vocab_size == 0 || mean_doc_len == 0 {
        return Err(Error::Config(
            "doc_count, vocab_size and mean_doc_len must be >= 1".into(),
        ));
    }
    if zipf_exponent.is_nan() || zipf_exponent <= 0.0 {
        return Err(Error::Config("zipf exponent must be > 0".into()));
    }
    let mut rng = rng::stream(seed, &[rng::SALT_INIT, doc_count as u64, vocab_size as u64]);
    let zipf = ZipfTable::new(vocab_size, zipf_exponent);

    // Log-normal lengths with sigma = 0.6, mean matched to mean_doc_len.
    let sigma = 0.6;
    let mu = (mean_doc_len as f64).ln() - sigma * sigma / 2.0;

    let mut raw_docs = Vec::with_capacity(doc_count);
    for _ in 0..doc_count {
        let len = {
            // Box-Muller.
            let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.gen();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            (mu + sigma * z).exp().round().max(1.0) as usize
        };
        let mut doc = Vec::with_capacity(len);
        for _ in 0..len {
            doc.push((zipf.sample(&mut rng) as u32, 1));
        }
        raw_docs.push(doc);
    }
    Corpus::from_docs(vocab_size, raw_docs)
}
