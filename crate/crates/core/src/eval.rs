//! The first-reference-sentence baseline, system scoring and the results table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::JsonlReader;
use crate::metrics::{bleu_corpus, rouge_l_corpus};
use crate::record::{CaptionVariant, TrainingExample};
use crate::textprep::first_sentence;

/// First sentence of the first packed window, or "" when there is none.
pub fn baseline_first_reference(example: &TrainingExample) -> &str {
    example
        .packed_windows()
        .next()
        .map(|w| first_sentence(w.trim_start()))
        .unwrap_or("")
}

/// Writes one baseline prediction per gold record; returns the line count.
pub fn write_baseline(gold: &Path, out: &Path) -> Result<usize> {
    let mut text = String::new();
    let mut n = 0;
    for example in JsonlReader::open(gold)? {
        let example = example?;
        text.push_str(baseline_first_reference(&example));
        text.push('\n');
        n += 1;
    }
    fs::write(out, text).map_err(|e| Error::io(out, e))?;
    Ok(n)
}

/// One caption per line; a trailing newline does not start another line.
pub fn read_predictions(path: &Path) -> Result<Vec<String>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect())
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub system_name: String,
    pub variant: CaptionVariant,
    /// Corpus BLEU-4, 0 to 100.
    pub bleu: f64,
    /// Mean ROUGE-L F1, 0 to 1.
    pub rouge_l_f1: f64,
    pub n_examples: usize,
    #[serde(default)]
    pub image_input: bool,
    #[serde(default)]
    pub text_input: bool,
}

impl EvalRow {
    fn key(&self) -> (CaptionVariant, &str) {
        (self.variant, &self.system_name)
    }
}

/// Scores a line-aligned prediction file against the gold JSONL targets
/// with case-insensitive BLEU and mean ROUGE-L F1.
pub fn evaluate_system(
    predictions: &Path,
    gold: &Path,
    name: &str,
    variant: CaptionVariant,
) -> Result<EvalRow> {
    let preds = read_predictions(predictions)?;
    let mut refs = Vec::new();
    for example in JsonlReader::open(gold)? {
        let example = example?;
        if example.variant != variant {
            return Err(Error::validation(
                "variant",
                format!(
                    "gold record {} is {}, expected {}",
                    example.id, example.variant, variant
                ),
            ));
        }
        refs.push(example.target);
    }
    if preds.len() != refs.len() {
        return Err(Error::Alignment {
            predictions: preds.len(),
            gold: refs.len(),
        });
    }
    let bleu = bleu_corpus(&preds, &refs, true)?;
    let pairs: Vec<(&str, &str)> = preds
        .iter()
        .map(String::as_str)
        .zip(refs.iter().map(String::as_str))
        .collect();
    let rouge = rouge_l_corpus(&pairs)?;
    Ok(EvalRow {
        system_name: name.to_string(),
        variant,
        bleu: bleu.score,
        rouge_l_f1: rouge,
        n_examples: refs.len(),
        image_input: false,
        text_input: false,
    })
}

/// Results for several systems, at most one row per (system, variant).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    /// Inserts `row`, replacing any row with the same system and variant.
    pub fn upsert(&mut self, row: EvalRow) {
        self.rows.retain(|r| r.key() != row.key());
        self.rows.push(row);
        self.rows
            .sort_by(|a, b| a.key().cmp(&b.key()));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut report: EvalReport = serde_json::from_str(text).map_err(|e| Error::Parse {
            origin: "report".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        report.rows.sort_by(|a, b| a.key().cmp(&b.key()));
        Ok(report)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                origin: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    /// Writes the JSON sidecar at `path` and the rendered table next to it
    /// with a `.txt` extension; returns the table path.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))?;
        let table = path.with_extension("txt");
        fs::write(&table, render_report(&self.rows)).map_err(|e| Error::io(&table, e))?;
        Ok(table)
    }
}

const HEADERS: [&str; 6] = ["Image?", "Text?", "Caption type", "Model", "BLEU", "ROUGE-L"];

/// Fixed-width table sorted by (variant, system name).
pub fn render_report(rows: &[EvalRow]) -> String {
    let mut sorted: Vec<&EvalRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    let mark = |b: bool| if b { "x" } else { "" }.to_string();
    let cells: Vec<[String; 6]> = sorted
        .iter()
        .map(|r| {
            [
                mark(r.image_input),
                mark(r.text_input),
                r.variant.display_name().to_string(),
                r.system_name.clone(),
                format!("{:.2}", r.bleu),
                format!("{:.2}", r.rouge_l_f1),
            ]
        })
        .collect();
    let mut widths = HEADERS.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cols: Vec<&str>| {
        let mut l = String::new();
        for (i, (c, w)) in cols.iter().zip(widths).enumerate() {
            if i > 0 {
                l.push_str("  ");
            }
            // numbers right-aligned, text left-aligned
            if i >= 4 {
                let _ = write!(l, "{c:>w$}");
            } else {
                let _ = write!(l, "{c:<w$}");
            }
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(HEADERS.to_vec());
    for row in &cells {
        line(row.iter().map(String::as_str).collect());
    }
    out
}
