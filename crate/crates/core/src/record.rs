//! Domain types shared by the pipeline stages.

use std::fmt;
use std::path::PathBuf;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::align::MASK_SENTINEL;
use crate::error::{Error, Result};
use crate::textprep::{MentionWindow, SEP};

static NEW_STYLE_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[0-9]{4}\.[0-9]{4,5}$").unwrap());
static OLD_STYLE_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z]+(-[a-z]+)*(\.[A-Z]{2})?/[0-9]{7}$").unwrap());

/// True when `id` is a well-formed arXiv identifier without a version suffix,
/// either new style (`1001.1872`) or old style (`cs/0101001`).
pub fn is_arxiv_id(id: &str) -> bool {
    NEW_STYLE_ID.is_match(id) || OLD_STYLE_ID.is_match(id)
}

/// Identity of one rendered figure image inside an arXiv paper.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FigureId {
    pub paper_id: String,
    pub version: u32,
    pub figure_label: String,
    pub sub_index: u32,
}

impl FigureId {
    pub fn new(
        paper_id: impl Into<String>,
        version: u32,
        figure_label: impl Into<String>,
        sub_index: u32,
    ) -> Result<Self> {
        let id = FigureId {
            paper_id: paper_id.into(),
            version,
            figure_label: figure_label.into(),
            sub_index,
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_arxiv_id(&self.paper_id) {
            return Err(Error::validation(
                "paper_id",
                format!("{:?} is not an arXiv identifier", self.paper_id),
            ));
        }
        if self.version == 0 {
            return Err(Error::validation("version", "must be at least 1"));
        }
        if self.figure_label.is_empty() {
            return Err(Error::validation("figure_label", "must not be empty"));
        }
        Ok(())
    }

    /// Versioned paper id as used in SciCap filenames, e.g. `1001.1872v1`.
    pub fn versioned_paper_id(&self) -> String {
        format!("{}v{}", self.paper_id.replace('/', ""), self.version)
    }

    /// Canonical file stem, e.g. `1001.1872v1-Figure2-1`.
    pub fn file_stem(&self) -> String {
        format!(
            "{}-Figure{}-{}",
            self.versioned_paper_id(),
            self.figure_label,
            self.sub_index
        )
    }

    pub fn sort_key(&self) -> (&str, &str, u32, u32) {
        (
            &self.paper_id,
            &self.figure_label,
            self.sub_index,
            self.version,
        )
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.file_stem())
    }
}

/// Figure-independent paper data taken from the arXiv metadata dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperMetadata {
    pub arxiv_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

impl PaperMetadata {
    pub fn validate(&self) -> Result<()> {
        if self.title.contains(MASK_SENTINEL) {
            return Err(Error::validation("title", "contains the caption sentinel"));
        }
        if self.abstract_text.contains(MASK_SENTINEL) {
            return Err(Error::validation(
                "abstract",
                "contains the caption sentinel",
            ));
        }
        Ok(())
    }
}

/// One SciCap figure, progressively enriched by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRecord {
    pub id: FigureId,
    pub image_path: PathBuf,
    pub caption_original: String,
    pub caption_normalized: Option<String>,
    pub metadata: Option<PaperMetadata>,
    pub windows: Vec<MentionWindow>,
}

impl FigureRecord {
    pub fn new(id: FigureId, image_path: PathBuf, caption_original: String) -> Self {
        FigureRecord {
            id,
            image_path,
            caption_original,
            caption_normalized: None,
            metadata: None,
            windows: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.id.validate()?;
        if self.caption_original.trim().is_empty() {
            return Err(Error::validation("caption_original", "must not be empty"));
        }
        if let Some(meta) = &self.metadata {
            meta.validate()?;
        }
        if self
            .windows
            .iter()
            .any(|w| w.text.contains(self.caption_original.as_str()))
        {
            return Err(Error::validation(
                "windows",
                "a window contains the verbatim caption",
            ));
        }
        Ok(())
    }
}

/// Which caption flavour a training example targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaptionVariant {
    #[serde(rename = "normalized")]
    Normalized,
    #[serde(rename = "orig")]
    Original,
}

impl CaptionVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            CaptionVariant::Normalized => "normalized",
            CaptionVariant::Original => "orig",
        }
    }

    /// Caption-type column text used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            CaptionVariant::Normalized => "Normalized",
            CaptionVariant::Original => "Orig",
        }
    }
}

impl std::str::FromStr for CaptionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "orig" | "original" => Ok(CaptionVariant::Original),
            "normalized" | "norm" => Ok(CaptionVariant::Normalized),
            other => Err(Error::Argument(format!("unknown caption variant {other:?}"))),
        }
    }
}

impl fmt::Display for CaptionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The packed (image, context, caption) triple the model trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub id: FigureId,
    pub context_text: String,
    pub target: String,
    pub variant: CaptionVariant,
    pub image_ref: String,
}

impl TrainingExample {
    pub fn validate(&self) -> Result<()> {
        self.id.validate()?;
        if self.context_text.matches(SEP).count() < 2 {
            return Err(Error::validation(
                "context_text",
                "must contain the title and abstract separators",
            ));
        }
        if self.target.trim().is_empty() {
            return Err(Error::validation("target", "must not be empty"));
        }
        if self.target.contains('\n') {
            return Err(Error::validation("target", "must be a single line"));
        }
        if self.image_ref.is_empty() {
            return Err(Error::validation("image_ref", "must not be empty"));
        }
        Ok(())
    }

    /// The mention windows packed into `context_text`, in order.
    pub fn packed_windows(&self) -> impl Iterator<Item = &str> {
        self.context_text.split(SEP).skip(2).filter(|w| !w.is_empty())
    }
}
