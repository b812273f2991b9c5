//! Corpus BLEU-4 compatible with SacreBLEU's defaults, and ROUGE-L F1.
//!
//! BLEU follows SacreBLEU 2.x exactly: the `13a` tokenizer, exponential
//! smoothing of zero n-gram matches, brevity penalty `exp(1 - ref/hyp)`, and
//! the early exit to 0 when no n-gram matches at all.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_NGRAM_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0 to 100.
    pub score: f64,
    /// Smoothed n-gram precisions in [0, 1], orders 1 to 4.
    pub precisions: [f64; MAX_NGRAM_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub correct: [u64; MAX_NGRAM_ORDER],
    pub total: [u64; MAX_NGRAM_ORDER],
}

static TOK_SYMBOLS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([{-~\[-` -&(-+:-@/])").unwrap());
static TOK_PERIOD_COMMA_AFTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([^0-9])([.,])").unwrap());
static TOK_PERIOD_COMMA_BEFORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([.,])([^0-9])").unwrap());
static TOK_DASH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([0-9])(-)").unwrap());

// Python's str.isspace also treats the ASCII separators 0x1C..0x1F as spaces.
fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\x1c'..='\x1f').contains(&c)
}

fn py_split(s: &str) -> impl Iterator<Item = &str> {
    s.split(is_py_space).filter(|t| !t.is_empty())
}

/// The WMT `13a` (mteval-v13a) tokenizer as implemented by SacreBLEU.
pub fn tokenize_13a(line: &str) -> String {
    let mut line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let line = format!(" {line} ");
    let line = TOK_SYMBOLS.replace_all(&line, " ${1} ");
    let line = TOK_PERIOD_COMMA_AFTER.replace_all(&line, "${1} ${2} ");
    let line = TOK_PERIOD_COMMA_BEFORE.replace_all(&line, " ${1} ${2}");
    let line = TOK_DASH.replace_all(&line, "${1} ${2} ");
    py_split(&line).collect::<Vec<_>>().join(" ")
}

fn preprocess(sentence: &str, lowercase: bool) -> String {
    let s = if lowercase {
        sentence.to_lowercase()
    } else {
        sentence.to_string()
    };
    tokenize_13a(s.trim_end_matches(is_py_space))
}

fn ngram_counts<'a>(tokens: &'a [&'a str]) -> HashMap<&'a [&'a str], u64> {
    let mut counts = HashMap::new();
    for n in 1..=MAX_NGRAM_ORDER {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Streaming corpus-BLEU statistics.
#[derive(Debug, Clone, Default)]
pub struct BleuAccumulator {
    lowercase: bool,
    hyp_len: usize,
    ref_len: usize,
    correct: [u64; MAX_NGRAM_ORDER],
    total: [u64; MAX_NGRAM_ORDER],
    segments: usize,
}

impl BleuAccumulator {
    pub fn new(lowercase: bool) -> Self {
        BleuAccumulator {
            lowercase,
            ..Default::default()
        }
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn add(&mut self, hypothesis: &str, reference: &str) {
        let hyp = preprocess(hypothesis, self.lowercase);
        let reference = preprocess(reference, self.lowercase);
        let hyp_tokens: Vec<&str> = hyp.split(' ').filter(|t| !t.is_empty()).collect();
        let ref_tokens: Vec<&str> = reference.split(' ').filter(|t| !t.is_empty()).collect();
        let ref_counts = ngram_counts(&ref_tokens);
        for (gram, count) in ngram_counts(&hyp_tokens) {
            let n = gram.len() - 1;
            self.total[n] += count;
            if let Some(r) = ref_counts.get(gram) {
                self.correct[n] += count.min(*r);
            }
        }
        self.hyp_len += hyp_tokens.len();
        self.ref_len += ref_tokens.len();
        self.segments += 1;
    }

    pub fn score(&self) -> BleuScore {
        let (sys_len, ref_len) = (self.hyp_len, self.ref_len);
        let brevity_penalty = if sys_len < ref_len {
            if sys_len > 0 {
                (1.0 - ref_len as f64 / sys_len as f64).exp()
            } else {
                0.0
            }
        } else {
            1.0
        };
        let mut percent = [0.0f64; MAX_NGRAM_ORDER];
        let mut score = 0.0;
        if self.correct.iter().any(|&c| c > 0) {
            let mut smooth = 1.0f64;
            #[allow(clippy::needless_range_loop)]
            for n in 0..MAX_NGRAM_ORDER {
                if self.total[n] == 0 {
                    break;
                }
                percent[n] = if self.correct[n] == 0 {
                    smooth *= 2.0;
                    100.0 / (smooth * self.total[n] as f64)
                } else {
                    100.0 * self.correct[n] as f64 / self.total[n] as f64
                };
            }
            // zero precision floors the log, as the reference scorer does
            let log_sum: f64 = percent
                .iter()
                .map(|&p| if p == 0.0 { -9_999_999_999.0 } else { p.ln() })
                .sum();
            score = brevity_penalty * (log_sum / MAX_NGRAM_ORDER as f64).exp();
        }
        BleuScore {
            score,
            precisions: percent.map(|p| p / 100.0),
            brevity_penalty,
            hyp_len: sys_len,
            ref_len,
            correct: self.correct,
            total: self.total,
        }
    }
}

/// Corpus BLEU-4 of `hypotheses` against one reference each.
pub fn bleu_corpus<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    lowercase: bool,
) -> Result<BleuScore> {
    if hypotheses.len() != references.len() {
        return Err(Error::Argument(format!(
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::Argument("empty corpus".into()));
    }
    let mut acc = BleuAccumulator::new(lowercase);
    for (h, r) in hypotheses.iter().zip(references) {
        acc.add(h.as_ref(), r.as_ref());
    }
    Ok(acc.score())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeL {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeL {
    const ZERO: RougeL = RougeL {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

/// Lowercased word tokens with punctuation treated as whitespace.
pub fn rouge_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Longest common subsequence length of two token sequences.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L of one hypothesis against one reference.
pub fn rouge_l(hypothesis: &str, reference: &str) -> RougeL {
    let hyp = rouge_tokens(hypothesis);
    let reference = rouge_tokens(reference);
    if hyp.is_empty() || reference.is_empty() {
        return RougeL::ZERO;
    }
    let lcs = lcs_len(&hyp, &reference) as f64;
    let precision = lcs / hyp.len() as f64;
    let recall = lcs / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RougeL {
        precision,
        recall,
        f1,
    }
}

/// Mean per-pair ROUGE-L F1, summed in input order.
pub fn rouge_l_corpus<H: AsRef<str>, R: AsRef<str>>(pairs: &[(H, R)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Argument("empty corpus".into()));
    }
    let sum: f64 = pairs
        .iter()
        .map(|(h, r)| rouge_l(h.as_ref(), r.as_ref()).f1)
        .sum();
    Ok(sum / pairs.len() as f64)
}
