//! Log-odds ratio with an informative Dirichlet prior ("Fightin' Words").
//!
//! For each term w with counts y_a, y_b, corpus totals n_a, n_b and prior
//! α_w (α_0 = Σ α_w):
//!
//! ```text
//! δ_w  = ln((y_a+α_w)/(n_a+α_0−y_a−α_w)) − ln((y_b+α_w)/(n_b+α_0−y_b−α_w))
//! σ²_w = 1/(y_a+α_w) + 1/(n_a+α_0−y_a−α_w) + 1/(y_b+α_w) + 1/(n_b+α_0−y_b−α_w)
//! z_w  = δ_w / σ_w
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const DEFAULT_PRIOR_MASS: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// α_w = mass · pooled relative frequency of w.
    Informative { mass: f64 },
    /// The same α for every term.
    Uniform { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FightinConfig {
    /// 1 for unigrams only, 2 for unigrams and bigrams.
    pub max_ngram: usize,
    pub prior: Prior,
}

impl Default for FightinConfig {
    fn default() -> Self {
        Self {
            max_ngram: 2,
            prior: Prior::Informative {
                mass: DEFAULT_PRIOR_MASS,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub z: f64,
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn count_terms<S: AsRef<str>>(texts: &[S], max_ngram: usize) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for text in texts {
        let tokens = tokenize(text.as_ref());
        for n in 1..=max_ngram.max(1) {
            for window in tokens.windows(n) {
                *counts.entry(window.join(" ")).or_insert(0.0) += 1.0;
            }
        }
    }
    counts
}

/// Default unigram+bigram analysis with an informative prior of the given mass.
pub fn fightin_words<S: AsRef<str>>(texts_a: &[S], texts_b: &[S], prior_mass: f64) -> Result<Vec<TermScore>, AnalysisError> {
    fightin_words_with(
        texts_a,
        texts_b,
        &FightinConfig {
            prior: Prior::Informative { mass: prior_mass },
            ..FightinConfig::default()
        },
    )
}

/// Terms sorted by descending z (positive = characteristic of `texts_a`).
pub fn fightin_words_with<S: AsRef<str>>(
    texts_a: &[S],
    texts_b: &[S],
    config: &FightinConfig,
) -> Result<Vec<TermScore>, AnalysisError> {
    let counts_a = count_terms(texts_a, config.max_ngram);
    let counts_b = count_terms(texts_b, config.max_ngram);
    if counts_a.is_empty() || counts_b.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let n_a: f64 = counts_a.values().sum();
    let n_b: f64 = counts_b.values().sum();
    let mut vocab: Vec<&String> = counts_a.keys().chain(counts_b.keys()).collect();
    vocab.sort();
    vocab.dedup();

    let alphas: Vec<f64> = match config.prior {
        Prior::Informative { mass } => {
            let total = n_a + n_b;
            vocab
                .iter()
                .map(|w| {
                    let pooled = counts_a.get(*w).unwrap_or(&0.0) + counts_b.get(*w).unwrap_or(&0.0);
                    mass * pooled / total
                })
                .collect()
        }
        Prior::Uniform { alpha } => vec![alpha; vocab.len()],
    };
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(AnalysisError::InvalidConfig("prior must be positive".into()));
    }
    let alpha0: f64 = alphas.iter().sum();

    let mut scores: Vec<TermScore> = vocab
        .iter()
        .zip(&alphas)
        .map(|(w, &alpha)| {
            if vocab.len() == 1 {
                // No other terms to contrast with: the log-odds are undefined, nothing distinguishes.
                return TermScore {
                    term: (*w).clone(),
                    z: 0.0,
                };
            }
            let ya = *counts_a.get(*w).unwrap_or(&0.0);
            let yb = *counts_b.get(*w).unwrap_or(&0.0);
            let (in_a, out_a) = (ya + alpha, n_a + alpha0 - ya - alpha);
            let (in_b, out_b) = (yb + alpha, n_b + alpha0 - yb - alpha);
            let delta = (in_a / out_a).ln() - (in_b / out_b).ln();
            let var = 1.0 / in_a + 1.0 / out_a + 1.0 / in_b + 1.0 / out_b;
            TermScore {
                term: (*w).clone(),
                z: delta / var.sqrt(),
            }
        })
        .collect();
    scores.sort_by(|x, y| y.z.total_cmp(&x.z).then_with(|| x.term.cmp(&y.term)));
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_of(scores: &[TermScore], term: &str) -> f64 {
        scores.iter().find(|s| s.term == term).unwrap().z
    }

    #[test]
    fn tokenizer_splits_on_non_alphanumerics() {
        assert_eq!(tokenize("I'm OK--really!"), vec!["i", "m", "ok", "really"]);
    }

    #[test]
    fn toy_corpus_matches_hand_value() {
        let cfg = FightinConfig {
            max_ngram: 1,
            prior: Prior::Uniform { alpha: 0.5 },
        };
        let scores = fightin_words_with(&["good good"], &["bad bad"], &cfg).unwrap();
        let expected = 2.0 * 5f64.ln() / 4.8f64.sqrt();
        assert!((z_of(&scores, "good") - expected).abs() < 1e-12);
        assert!((z_of(&scores, "bad") + expected).abs() < 1e-12);
        assert_eq!(scores[0].term, "good");
    }

    #[test]
    fn single_term_vocabulary_is_neutral() {
        let scores = fightin_words(&["c"], &["c!"], DEFAULT_PRIOR_MASS).unwrap();
        assert_eq!(scores, vec![TermScore { term: "c".into(), z: 0.0 }]);
    }

    #[test]
    fn identical_corpora_score_zero() {
        let texts = ["i feel alone tonight", "nobody listens"];
        let scores = fightin_words(&texts, &texts, DEFAULT_PRIOR_MASS).unwrap();
        assert!(scores.iter().all(|s| s.z == 0.0));
        assert!(scores.iter().any(|s| s.term == "feel alone"));
    }

    #[test]
    fn swapping_corpora_negates() {
        let a = ["thank you so much", "that helps"];
        let b = ["whatever", "you don't get it", "whatever man"];
        let ab = fightin_words(&a, &b, 10.0).unwrap();
        let ba = fightin_words(&b, &a, 10.0).unwrap();
        for s in &ab {
            assert!((s.z + z_of(&ba, &s.term)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        let none: [&str; 1] = ["?!"];
        assert_eq!(fightin_words(&none, &["text"], 10.0), Err(AnalysisError::EmptyCorpus));
    }
}
