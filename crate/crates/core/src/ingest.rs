//! SciCap figure discovery and arXiv metadata linking.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::record::{is_arxiv_id, FigureId, FigureRecord, PaperMetadata};

static FIGURE_FILENAME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<id>.+?)v(?P<ver>[0-9]+)-Figure(?P<label>[A-Za-z0-9.]+)-(?P<sub>[0-9]+)\.png$")
        .unwrap()
});

// Old-style ids lose their slash in filenames: cs/0101001 -> cs0101001.
static SLASHLESS_OLD_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?P<archive>[a-z]+(?:-[a-z]+)*(?:\.[A-Z]{2})?)(?P<num>[0-9]{7})$").unwrap());

pub(crate) fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Parses `<id>v<version>-Figure<label>-<sub>.png`.
pub fn parse_figure_filename(name: &str) -> Result<FigureId> {
    if name.contains(['/', '\\']) {
        return Err(Error::FigureName(name.to_string()));
    }
    let caps = FIGURE_FILENAME
        .captures(name)
        .ok_or_else(|| Error::FigureName(name.to_string()))?;
    let raw_id = &caps["id"];
    let paper_id = if is_arxiv_id(raw_id) {
        raw_id.to_string()
    } else if let Some(old) = SLASHLESS_OLD_ID.captures(raw_id) {
        format!("{}/{}", &old["archive"], &old["num"])
    } else {
        return Err(Error::FigureName(name.to_string()));
    };
    let number = |key: &str| {
        caps[key]
            .parse::<u32>()
            .map_err(|_| Error::FigureName(name.to_string()))
    };
    let (version, sub_index) = (number("ver")?, number("sub")?);
    FigureId::new(paper_id, version, &caps["label"], sub_index)
        .map_err(|_| Error::FigureName(name.to_string()))
}

/// Paper metadata keyed by arXiv id.
#[derive(Debug, Clone, Default)]
pub struct MetadataIndex {
    entries: HashMap<String, PaperMetadata>,
    pub source_path: PathBuf,
}

impl MetadataIndex {
    pub fn from_records(records: impl IntoIterator<Item = PaperMetadata>) -> Self {
        let mut index = MetadataIndex::default();
        for r in records {
            index.entries.insert(r.arxiv_id.clone(), r);
        }
        index
    }

    pub fn get(&self, arxiv_id: &str) -> Option<&PaperMetadata> {
        self.entries.get(arxiv_id)
    }

    /// Number of distinct ids.
    pub fn record_count(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Deserialize)]
struct DumpRecord {
    id: String,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
}

/// Loads an arXiv metadata dump (JSON lines with `id`, `title`, `abstract`).
/// Other keys are skipped; a later record for the same id replaces the earlier.
pub fn load_metadata_index(dump_path: &Path) -> Result<MetadataIndex> {
    let file = File::open(dump_path).map_err(|e| Error::io(dump_path, e))?;
    let origin = dump_path.display().to_string();
    let mut entries = HashMap::new();
    let mut buf = String::new();
    let mut reader = BufReader::new(file);
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader
            .read_line(&mut buf)
            .map_err(|e| Error::io(dump_path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if buf.trim().is_empty() {
            continue;
        }
        let rec: DumpRecord = serde_json::from_str(&buf).map_err(|e| Error::Parse {
            origin: origin.clone(),
            line: line_no,
            message: e.to_string(),
        })?;
        let meta = PaperMetadata {
            arxiv_id: rec.id.trim().to_string(),
            title: nfc(&rec.title),
            abstract_text: nfc(&rec.abstract_text),
        };
        entries.insert(meta.arxiv_id.clone(), meta);
    }
    Ok(MetadataIndex {
        entries,
        source_path: dump_path.to_path_buf(),
    })
}

/// Attaches metadata to every figure whose paper is in `index`; the rest are
/// returned as misses.
pub fn join_metadata(
    figures: Vec<FigureRecord>,
    index: &MetadataIndex,
) -> (Vec<FigureRecord>, Vec<FigureId>) {
    let mut joined = Vec::with_capacity(figures.len());
    let mut misses = Vec::new();
    for mut fig in figures {
        match index.get(&fig.id.paper_id) {
            Some(meta) => {
                fig.metadata = Some(meta.clone());
                joined.push(fig);
            }
            None => misses.push(fig.id),
        }
    }
    (joined, misses)
}

/// Dataset split names as used by SciCap's directory layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Argument(format!("unknown split {other:?}"))),
        }
    }
}

pub const IMAGE_DIR: &str = "SciCap-No-Subfig-Img";
pub const CAPTION_DIR: &str = "SciCap-Caption-All";

#[derive(Deserialize)]
struct CaptionFile {
    #[serde(rename = "contains-subfigure", default)]
    contains_subfigure: bool,
    #[serde(rename = "0-originally-extracted")]
    original: String,
    #[serde(rename = "2-normalized", default)]
    normalized: Option<HashMap<String, NormalizedCaption>>,
}

#[derive(Deserialize)]
struct NormalizedCaption {
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    sentence: Vec<String>,
}

impl NormalizedCaption {
    fn first(&self) -> Option<String> {
        self.sentence
            .first()
            .or(self.caption.as_ref())
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
    }
}

fn advanced_caption(map: &HashMap<String, NormalizedCaption>) -> Option<String> {
    // the published key carries a typo; accept the corrected spelling too
    ["2-2-advanced-euqation-bracket", "2-2-advanced-equation-bracket"]
        .iter()
        .find_map(|k| map.get(*k))
        .and_then(NormalizedCaption::first)
}

/// Loads one SciCap split: every image under `<root>/SciCap-No-Subfig-Img/<split>`
/// that has a caption file under `<root>/SciCap-Caption-All/<split>`, sorted by
/// filename. Figures flagged as containing subfigures are skipped.
pub fn load_scicap_split(root: &Path, split: Split) -> Result<Vec<FigureRecord>> {
    let image_dir = root.join(IMAGE_DIR).join(split.as_str());
    let caption_dir = root.join(CAPTION_DIR).join(split.as_str());
    let mut names = Vec::new();
    for entry in fs::read_dir(&image_dir).map_err(|e| Error::io(&image_dir, e))? {
        let entry = entry.map_err(|e| Error::io(&image_dir, e))?;
        if let Some(name) = entry.file_name().to_str() {
            if name.ends_with(".png") {
                names.push(name.to_string());
            }
        }
    }
    names.sort();

    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let id = match parse_figure_filename(&name) {
            Ok(id) => id,
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                continue;
            }
        };
        let caption_path = caption_dir.join(format!("{}.json", name.trim_end_matches(".png")));
        let raw = match fs::read_to_string(&caption_path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                log::warn!("skipping {name}: no caption file");
                continue;
            }
            Err(e) => return Err(Error::io(&caption_path, e)),
        };
        let cap: CaptionFile = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            origin: caption_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if cap.contains_subfigure || cap.original.trim().is_empty() {
            continue;
        }
        let mut record = FigureRecord::new(id, image_dir.join(&name), nfc(&cap.original));
        record.caption_normalized = cap.normalized.as_ref().and_then(advanced_caption).map(|s| nfc(&s));
        out.push(record);
    }
    Ok(out)
}
