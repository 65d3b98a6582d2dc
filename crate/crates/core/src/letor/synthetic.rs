//! Synthetic LETOR-format corpora with the label structure of the real
//! datasets, for running the simulators when the datasets are not on disk.
//!
//! The first `informative` feature dimensions carry a noisy linear signal of
//! the relevance label; the remaining dimensions are pure noise. Each query
//! also gets a random per-dimension offset so that raw features are not
//! directly comparable across queries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, DocumentRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub dataset: Dataset,
    pub queries: usize,
    pub min_docs: usize,
    pub max_docs: usize,
    pub feature_dim: usize,
    pub informative: usize,
    /// Half-width of the uniform noise added to every feature.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Defaults shaped after the public release of each dataset
    /// (46 features for MQ2008, 136 for MSLR-WEB10K).
    pub fn for_dataset(dataset: Dataset, seed: u64) -> Self {
        let feature_dim = match dataset {
            Dataset::Mslr => 136,
            Dataset::Mq2008 => 46,
        };
        SyntheticConfig {
            dataset,
            queries: 400,
            min_docs: 5,
            max_docs: 40,
            feature_dim,
            informative: 8,
            noise: 1.0,
            seed,
        }
    }

    /// Label frequencies roughly matching the real corpora, which are
    /// dominated by irrelevant documents.
    fn label_weights(&self) -> &'static [f64] {
        match self.dataset {
            Dataset::Mslr => &[0.52, 0.32, 0.13, 0.02, 0.01],
            Dataset::Mq2008 => &[0.74, 0.18, 0.08],
        }
    }

    pub fn generate(&self) -> Vec<DocumentRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let weights = self.label_weights();
        let max_label = self.dataset.max_label() as f64;
        let mut records = Vec::new();
        for q in 0..self.queries {
            let query_id = format!("{}", 1000 + q);
            let n_docs = rng.gen_range(self.min_docs..=self.max_docs.max(self.min_docs));
            let offsets: Vec<f64> = (0..self.feature_dim)
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect();
            for _ in 0..n_docs {
                let relevance = sample_weighted(weights, &mut rng) as u8;
                let signal = relevance as f64 / max_label;
                let features = (0..self.feature_dim)
                    .map(|j| {
                        let noise = rng.gen_range(-self.noise..=self.noise);
                        let base = if j < self.informative {
                            2.0 * signal
                        } else {
                            0.0
                        };
                        // Spread raw scales over a few orders of magnitude.
                        (base + offsets[j] + noise) * 10f64.powi((j % 4) as i32)
                    })
                    .collect();
                records.push(DocumentRecord {
                    relevance,
                    query_id: query_id.clone(),
                    features,
                });
            }
        }
        records
    }
}

fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Renders records as LETOR text, one line per record.
pub fn to_letor_text(records: &[DocumentRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_letor_line());
        out.push('\n');
    }
    out
}
