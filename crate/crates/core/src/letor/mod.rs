//! LETOR-format ranking data: parsing, min-max normalization and
//! priority-bucketed candidate slates.
//!
//! A LETOR line looks like
//!
//! ```text
//! 2 qid:10 1:0.5 2:-0.25 #docid = GX000-00-0000000
//! ```
//!
//! The leading integer is the relevance label, `qid:` names the query and the
//! remaining `index:value` pairs are 1-based sparse features. Anything after
//! `#` is ignored.

mod cache;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

pub use cache::{read_pool_cache, write_pool_cache, CACHE_VERSION};

/// Number of documents presented to the agent each timestep.
pub const SLATE_SIZE: usize = 5;

/// Which ranking dataset a pool was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    Mslr,
    Mq2008,
}

impl Dataset {
    pub fn max_label(self) -> u8 {
        match self {
            Dataset::Mslr => 4,
            Dataset::Mq2008 => 2,
        }
    }

    /// Order in which relevance buckets are drawn when building a slate.
    pub fn priority(self) -> &'static [u8] {
        match self {
            Dataset::Mslr => &[4, 0, 2, 3, 1],
            Dataset::Mq2008 => &[0, 2, 1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Mslr => "mslr",
            Dataset::Mq2008 => "mq2008",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mslr" | "mslr-web10k" | "mslr_web10k" => Ok(Dataset::Mslr),
            "mq2008" => Ok(Dataset::Mq2008),
            other => Err(Error::Config(format!("unknown dataset {other:?}"))),
        }
    }
}

/// One query-document pair as it appears in a LETOR file.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    pub relevance: u8,
    pub query_id: String,
    pub features: Vec<f64>,
}

impl DocumentRecord {
    /// Renders the record as a dense LETOR line.
    pub fn to_letor_line(&self) -> String {
        use std::fmt::Write;
        let mut line = format!("{} qid:{}", self.relevance, self.query_id);
        for (i, v) in self.features.iter().enumerate() {
            let _ = write!(line, " {}:{}", i + 1, v);
        }
        line
    }
}

/// Parses a single LETOR line. Errors report line 1.
pub fn parse_letor_line(line: &str) -> Result<DocumentRecord> {
    parse_letor_line_at(line, 1)
}

/// Parses a single LETOR line, reporting errors against `line_no`.
pub fn parse_letor_line_at(line: &str, line_no: usize) -> Result<DocumentRecord> {
    let err = |column: usize, message: String| Error::Parse {
        line: line_no,
        column,
        message,
    };
    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = tokens_with_columns(body);

    let (col, label) = tokens
        .next()
        .ok_or_else(|| err(1, "empty line".to_string()))?;
    let relevance: u8 = label
        .parse()
        .map_err(|_| err(col, format!("expected integer relevance label, found {label:?}")))?;

    let (col, qid) = tokens
        .next()
        .ok_or_else(|| err(line.len() + 1, "missing qid".to_string()))?;
    let query_id = match qid.strip_prefix("qid:") {
        Some(id) if !id.is_empty() => id.to_string(),
        _ => return Err(err(col, format!("expected qid:<id>, found {qid:?}"))),
    };

    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for (col, token) in tokens {
        let (index, value) = token
            .split_once(':')
            .ok_or_else(|| err(col, format!("expected <index>:<value>, found {token:?}")))?;
        let index: usize = index
            .parse()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| err(col, format!("invalid feature index {index:?}")))?;
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(col, format!("invalid feature value {value:?}")))?;
        if pairs.iter().any(|&(i, _)| i == index) {
            return Err(err(col, format!("duplicate feature index {index}")));
        }
        pairs.push((index, value));
    }

    let dim = pairs.iter().map(|&(i, _)| i).max().unwrap_or(0);
    let mut features = vec![0.0; dim];
    for (i, v) in pairs {
        features[i - 1] = v;
    }
    Ok(DocumentRecord {
        relevance,
        query_id,
        features,
    })
}

/// Whitespace tokens paired with their 1-based starting column.
fn tokens_with_columns(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split_whitespace()
        .map(move |tok| (tok.as_ptr() as usize - s.as_ptr() as usize + 1, tok))
}

/// Parses every non-blank line of a LETOR stream.
pub fn parse_letor<R: BufRead>(reader: R) -> Result<Vec<DocumentRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_letor_line_at(&line, i + 1)?);
    }
    Ok(records)
}

pub fn read_letor_file(path: &Path) -> Result<Vec<DocumentRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Dataset {
        path: path.to_path_buf(),
        source,
    })?;
    parse_letor(std::io::BufReader::new(file))
}

/// A normalized document inside a [`QueryPool`].
#[derive(Debug, Clone, PartialEq)]
pub struct PoolDocument {
    pub relevance: u8,
    pub features: Arc<[f64]>,
}

/// Normalized documents grouped by query. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPool {
    dataset: Dataset,
    feature_dim: usize,
    feature_bounds: Vec<(f64, f64)>,
    queries: BTreeMap<String, Vec<PoolDocument>>,
    ids: Vec<String>,
}

/// Maps `x` from `[min, max]` onto `[-1, 1]`; degenerate ranges map to 0.
pub fn normalize_value(x: f64, min: f64, max: f64) -> f64 {
    if min == max {
        0.0
    } else if x == min {
        -1.0
    } else if x == max {
        1.0
    } else {
        ((2.0 * x - (max + min)) / (max - min)).clamp(-1.0, 1.0)
    }
}

impl QueryPool {
    /// Normalizes every feature against the bounds of the whole record set and
    /// groups documents by query, dropping queries with fewer than `min_docs`
    /// documents.
    pub fn build(records: &[DocumentRecord], dataset: Dataset, min_docs: usize) -> Result<Self> {
        let first = records.first().ok_or(Error::Empty("document records"))?;
        let dim = first.features.len();
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for r in records {
            if r.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.features.len(),
                });
            }
            if r.relevance > dataset.max_label() {
                return Err(Error::LabelOutOfDomain {
                    relevance: r.relevance,
                    dataset: dataset.name(),
                });
            }
            for (b, &v) in bounds.iter_mut().zip(&r.features) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }

        let mut queries: BTreeMap<String, Vec<PoolDocument>> = BTreeMap::new();
        for r in records {
            let features: Arc<[f64]> = r
                .features
                .iter()
                .zip(&bounds)
                .map(|(&v, &(lo, hi))| normalize_value(v, lo, hi))
                .collect();
            queries.entry(r.query_id.clone()).or_default().push(PoolDocument {
                relevance: r.relevance,
                features,
            });
        }
        queries.retain(|_, docs| docs.len() >= min_docs);
        let ids = queries.keys().cloned().collect();

        Ok(QueryPool {
            dataset,
            feature_dim: dim,
            feature_bounds: bounds,
            queries,
            ids,
        })
    }

    pub(crate) fn from_parts(
        dataset: Dataset,
        feature_dim: usize,
        feature_bounds: Vec<(f64, f64)>,
        queries: BTreeMap<String, Vec<PoolDocument>>,
    ) -> Self {
        let ids = queries.keys().cloned().collect();
        QueryPool {
            dataset,
            feature_dim,
            feature_bounds,
            queries,
            ids,
        }
    }

    pub fn dataset(&self) -> Dataset {
        self.dataset
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Raw per-dimension `(min, max)` the features were normalized with.
    pub fn feature_bounds(&self) -> &[(f64, f64)] {
        &self.feature_bounds
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn query_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn documents(&self, query_id: &str) -> Option<&[PoolDocument]> {
        self.queries.get(query_id).map(Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &[PoolDocument])> {
        self.queries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// The pool's normalized contents as plain records.
    pub fn records(&self) -> Vec<DocumentRecord> {
        self.queries()
            .flat_map(|(qid, docs)| {
                docs.iter().map(move |d| DocumentRecord {
                    relevance: d.relevance,
                    query_id: qid.to_string(),
                    features: d.features.to_vec(),
                })
            })
            .collect()
    }

    /// Draws a query id uniformly over the pool.
    pub fn sample_query<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&str> {
        if self.ids.is_empty() {
            return Err(Error::Empty("query pool"));
        }
        Ok(&self.ids[rng.gen_range(0..self.ids.len())])
    }

    /// Builds a five-document slate for `query_id`.
    ///
    /// Buckets are visited in the dataset's priority order, one document per
    /// non-exhausted bucket per pass; passes repeat from the head of the list
    /// until the slate is full. Within a bucket the document is uniform among
    /// those not yet chosen.
    pub fn select_candidates<R: Rng + ?Sized>(
        &self,
        query_id: &str,
        rng: &mut R,
    ) -> Result<CandidateSlate> {
        let docs = self
            .queries
            .get(query_id)
            .ok_or_else(|| Error::UnknownQuery(query_id.to_string()))?;
        if docs.len() < SLATE_SIZE {
            return Err(Error::TooFewDocuments {
                query: query_id.to_string(),
                found: docs.len(),
                needed: SLATE_SIZE,
            });
        }

        let priority = self.dataset.priority();
        let mut buckets: Vec<Vec<usize>> = priority
            .iter()
            .map(|&label| {
                (0..docs.len())
                    .filter(|&i| docs[i].relevance == label)
                    .collect()
            })
            .collect();

        let mut chosen = Vec::with_capacity(SLATE_SIZE);
        'fill: loop {
            for bucket in buckets.iter_mut() {
                if chosen.len() == SLATE_SIZE {
                    break 'fill;
                }
                if !bucket.is_empty() {
                    let pick = rng.gen_range(0..bucket.len());
                    chosen.push(bucket.swap_remove(pick));
                }
            }
        }

        Ok(CandidateSlate {
            query_id: query_id.to_string(),
            relevances: chosen.iter().map(|&i| docs[i].relevance).collect(),
            features: chosen.iter().map(|&i| docs[i].features.clone()).collect(),
            document_indices: chosen,
        })
    }
}

/// The five documents offered to the agent at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSlate {
    pub query_id: String,
    /// Indices into the query's document list.
    pub document_indices: Vec<usize>,
    pub relevances: Vec<u8>,
    pub features: Vec<Arc<[f64]>>,
}

impl CandidateSlate {
    pub fn len(&self) -> usize {
        self.relevances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevances.is_empty()
    }
}
