//! JSONL dataset interchange.
//!
//! One object per line, keys in alphabetical order, LF line endings. Records
//! are written sorted by `(paper_id, figure_label, sub_index)` so equal record
//! sets always produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{CaptionVariant, FigureId, TrainingExample};

// Field order here is the on-disk key order and must stay alphabetical.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireExample {
    context_text: String,
    figure_label: String,
    image_ref: String,
    paper_id: String,
    sub_index: u32,
    target: String,
    variant: CaptionVariant,
    version: u32,
}

impl From<&TrainingExample> for WireExample {
    fn from(ex: &TrainingExample) -> Self {
        WireExample {
            context_text: ex.context_text.clone(),
            figure_label: ex.id.figure_label.clone(),
            image_ref: ex.image_ref.clone(),
            paper_id: ex.id.paper_id.clone(),
            sub_index: ex.id.sub_index,
            target: ex.target.clone(),
            variant: ex.variant,
            version: ex.id.version,
        }
    }
}

impl From<WireExample> for TrainingExample {
    fn from(w: WireExample) -> Self {
        TrainingExample {
            id: FigureId {
                paper_id: w.paper_id,
                version: w.version,
                figure_label: w.figure_label,
                sub_index: w.sub_index,
            },
            context_text: w.context_text,
            target: w.target,
            variant: w.variant,
            image_ref: w.image_ref,
        }
    }
}

/// Encodes one example as a single JSON line (without the trailing newline).
pub fn encode_line(example: &TrainingExample) -> Result<String> {
    serde_json::to_string(&WireExample::from(example)).map_err(|e| Error::Parse {
        origin: "<encode>".into(),
        line: 0,
        message: e.to_string(),
    })
}

/// Sorts and writes `records` to `destination`, returning the number written.
pub fn write_jsonl<'a, I>(records: I, destination: &Path) -> Result<usize>
where
    I: IntoIterator<Item = &'a TrainingExample>,
{
    let mut sorted: Vec<&TrainingExample> = records.into_iter().collect();
    for ex in &sorted {
        ex.validate()?;
    }
    sorted.sort_by(|a, b| {
        a.id.sort_key()
            .cmp(&b.id.sort_key())
            .then(a.variant.cmp(&b.variant))
    });

    let file = File::create(destination).map_err(|e| Error::io(destination, e))?;
    let mut out = BufWriter::new(file);
    for ex in &sorted {
        let line = encode_line(ex)?;
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(destination, e))?;
    }
    out.flush().map_err(|e| Error::io(destination, e))?;
    Ok(sorted.len())
}

/// Streaming reader over a JSONL dataset; holds at most one line in memory.
pub struct JsonlReader<R> {
    inner: R,
    origin: PathBuf,
    line_no: usize,
    buf: String,
}

impl JsonlReader<BufReader<File>> {
    pub fn open(source: &Path) -> Result<Self> {
        let file = File::open(source).map_err(|e| Error::io(source, e))?;
        Ok(JsonlReader::new(BufReader::new(file), source))
    }
}

impl<R: BufRead> JsonlReader<R> {
    pub fn new(inner: R, origin: impl Into<PathBuf>) -> Self {
        JsonlReader {
            inner,
            origin: origin.into(),
            line_no: 0,
            buf: String::new(),
        }
    }

    fn parse_error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            origin: self.origin.display().to_string(),
            line: self.line_no,
            message: message.into(),
        }
    }
}

impl<R: BufRead> Iterator for JsonlReader<R> {
    type Item = Result<TrainingExample>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.inner.read_line(&mut self.buf) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(Error::io(&self.origin, e))),
        }
        self.line_no += 1;
        let line = self.buf.strip_suffix('\n').unwrap_or(&self.buf);
        let parsed = serde_json::from_str::<WireExample>(line)
            .map_err(|e| self.parse_error(e.to_string()))
            .map(TrainingExample::from)
            .and_then(|ex| match ex.validate() {
                Ok(()) => Ok(ex),
                Err(Error::Validation { field, message }) => Err(Error::Validation {
                    field,
                    message: format!("{}:{}: {message}", self.origin.display(), self.line_no),
                }),
                Err(other) => Err(other),
            });
        Some(parsed)
    }
}

/// Reads every record of `source` in file order.
pub fn read_jsonl(source: &Path) -> Result<Vec<TrainingExample>> {
    JsonlReader::open(source)?.collect()
}
