//! End-to-end dataset construction and dataset statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::align::{mask_caption, ScoringParams};
use crate::error::{Error, Result};
use crate::imageprep::{preprocess_image, write_tensor};
use crate::ingest::{join_metadata, load_metadata_index, load_scicap_split, nfc, Split};
use crate::jsonl::{write_jsonl, JsonlReader};
use crate::record::{CaptionVariant, FigureRecord, TrainingExample};
use crate::textprep::{
    caption_first_sentence, extract_mentions_with, first_sentence, normalize_caption,
    pack_context, split_figure_label, NormalizationLevel, PackBudget, DEFAULT_WINDOW_CHARS,
};

pub const TENSOR_DIR: &str = "tensors";
pub const MISSES_FILE: &str = "misses.txt";

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub scicap_root: PathBuf,
    pub metadata_dump: PathBuf,
    pub fulltext_dir: PathBuf,
    pub split: Split,
    pub out: PathBuf,
    pub window: usize,
    pub budget: PackBudget,
    pub mask_threshold: f64,
    pub params: ScoringParams,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl BuildConfig {
    pub fn new(
        scicap_root: impl Into<PathBuf>,
        metadata_dump: impl Into<PathBuf>,
        fulltext_dir: impl Into<PathBuf>,
        split: Split,
        out: impl Into<PathBuf>,
    ) -> Self {
        BuildConfig {
            scicap_root: scicap_root.into(),
            metadata_dump: metadata_dump.into(),
            fulltext_dir: fulltext_dir.into(),
            split,
            out: out.into(),
            window: DEFAULT_WINDOW_CHARS,
            budget: PackBudget::default(),
            mask_threshold: 0.6,
            params: ScoringParams::default(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        self.params.validate()?;
        if !(self.mask_threshold > 0.0 && self.mask_threshold <= 1.0) {
            return Err(Error::validation("mask_threshold", "must lie in (0, 1]"));
        }
        if self.window == 0 {
            return Err(Error::validation("window", "must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(Error::validation("jobs", "must be positive"));
        }
        Ok(())
    }

    /// Path of the JSONL file for `variant`.
    pub fn jsonl_path(&self, variant: CaptionVariant) -> PathBuf {
        self.out
            .join(format!("{}.{}.jsonl", self.split.as_str(), variant.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildSummary {
    pub figures: usize,
    pub joined: usize,
    pub misses: usize,
    pub missing_fulltext: usize,
    pub with_windows: usize,
    pub masked_spans: usize,
    pub original_examples: usize,
    pub normalized_examples: usize,
}

impl fmt::Display for BuildSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "figures           {}", self.figures)?;
        writeln!(f, "joined            {}", self.joined)?;
        writeln!(f, "metadata misses   {}", self.misses)?;
        writeln!(f, "missing fulltext  {}", self.missing_fulltext)?;
        writeln!(f, "with windows      {}", self.with_windows)?;
        writeln!(f, "masked spans      {}", self.masked_spans)?;
        writeln!(f, "orig examples     {}", self.original_examples)?;
        write!(f, "normalized        {}", self.normalized_examples)
    }
}

fn read_fulltext(dir: &Path, figure: &FigureRecord) -> Result<Option<String>> {
    let candidates = [
        dir.join(format!("{}.txt", figure.id.versioned_paper_id().replace('/', "_"))),
        dir.join(format!("{}.txt", figure.id.paper_id.replace('/', "_"))),
    ];
    for path in candidates {
        match fs::read_to_string(&path) {
            Ok(text) => return Ok(Some(nfc(&text))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(e) => return Err(Error::io(&path, e)),
        }
    }
    Ok(None)
}

struct PaperOutcome {
    figures: Vec<FigureRecord>,
    fulltext_found: bool,
    masked_spans: usize,
}

// Masks every caption of the paper in its full text, then cuts windows.
fn process_paper(cfg: &BuildConfig, mut figures: Vec<FigureRecord>) -> Result<PaperOutcome> {
    let Some(text) = read_fulltext(&cfg.fulltext_dir, &figures[0])? else {
        return Ok(PaperOutcome {
            figures,
            fulltext_found: false,
            masked_spans: 0,
        });
    };
    let mut masked = text;
    let mut masked_spans = 0;
    let mut captions: Vec<&str> = figures.iter().map(|f| f.caption_original.as_str()).collect();
    captions.sort();
    captions.dedup();
    for caption in captions {
        let r = mask_caption(&masked, caption, &cfg.params, cfg.mask_threshold)?;
        masked_spans += r.iterations;
        masked = r.masked_text;
    }
    for fig in &mut figures {
        let mut windows = extract_mentions_with(&masked, &fig.id.figure_label, cfg.window);
        // a caption repeated beyond the pass cap can survive masking
        windows.retain(|w| !w.text.contains(fig.caption_original.as_str()));
        fig.windows = windows;
    }
    Ok(PaperOutcome {
        figures,
        fulltext_found: true,
        masked_spans,
    })
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Target caption for `variant`: the first caption sentence, either as
/// extracted or normalized.
pub fn target_caption(figure: &FigureRecord, variant: CaptionVariant) -> String {
    match variant {
        CaptionVariant::Original => caption_first_sentence(&figure.caption_original),
        CaptionVariant::Normalized => match &figure.caption_normalized {
            Some(n) => single_line(first_sentence(n)),
            None => {
                let (_, body) = split_figure_label(&figure.caption_original);
                normalize_caption(first_sentence(body), NormalizationLevel::Advanced)
            }
        },
    }
}

fn examples_for(cfg: &BuildConfig, figure: &FigureRecord, image_ref: &str) -> Result<Vec<TrainingExample>> {
    let meta = figure
        .metadata
        .as_ref()
        .expect("only joined figures reach packing");
    let context = pack_context(meta, &figure.windows, &cfg.budget)?;
    let mut out = Vec::new();
    for variant in [CaptionVariant::Original, CaptionVariant::Normalized] {
        let target = single_line(&target_caption(figure, variant));
        if target.is_empty() {
            log::warn!("{}: empty {variant} target, skipped", figure.id);
            continue;
        }
        out.push(TrainingExample {
            id: figure.id.clone(),
            context_text: context.clone(),
            target,
            variant,
            image_ref: image_ref.to_string(),
        });
    }
    Ok(out)
}

/// Runs the full pipeline: load, join, mask, window, pack, preprocess images,
/// and write `<split>.orig.jsonl`, `<split>.normalized.jsonl`, the tensors and
/// the list of figures without metadata.
pub fn build_dataset(cfg: &BuildConfig) -> Result<BuildSummary> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    pool.install(|| build_inner(cfg))
}

fn build_inner(cfg: &BuildConfig) -> Result<BuildSummary> {
    let figures = load_scicap_split(&cfg.scicap_root, cfg.split)?;
    let index = load_metadata_index(&cfg.metadata_dump)?;
    let mut summary = BuildSummary {
        figures: figures.len(),
        ..Default::default()
    };
    let (joined, mut misses) = join_metadata(figures, &index);
    summary.joined = joined.len();
    summary.misses = misses.len();

    let tensor_dir = cfg.out.join(TENSOR_DIR);
    fs::create_dir_all(&tensor_dir).map_err(|e| Error::io(&tensor_dir, e))?;

    misses.sort();
    let misses_path = cfg.out.join(MISSES_FILE);
    let listing: String = misses.iter().map(|m| format!("{m}\n")).collect();
    fs::write(&misses_path, listing).map_err(|e| Error::io(&misses_path, e))?;

    let mut by_paper: BTreeMap<String, Vec<FigureRecord>> = BTreeMap::new();
    for fig in joined {
        by_paper.entry(fig.id.versioned_paper_id()).or_default().push(fig);
    }
    let papers: Vec<PaperOutcome> = by_paper
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|figs| process_paper(cfg, figs))
        .collect::<Result<_>>()?;

    let mut figures = Vec::new();
    for p in papers {
        if !p.fulltext_found {
            summary.missing_fulltext += p.figures.len();
        }
        summary.masked_spans += p.masked_spans;
        figures.extend(p.figures);
    }
    summary.with_windows = figures.iter().filter(|f| !f.windows.is_empty()).count();

    let per_figure: Vec<Vec<TrainingExample>> = figures
        .par_iter()
        .map(|fig| {
            fig.validate()?;
            let png = fs::read(&fig.image_path).map_err(|e| Error::io(&fig.image_path, e))?;
            let mut tensor = preprocess_image(&png)?;
            tensor.source = Some(fig.id.clone());
            let name = format!("{}.fct", fig.id.file_stem());
            write_tensor(&tensor, &tensor_dir.join(&name))?;
            examples_for(cfg, fig, &format!("{TENSOR_DIR}/{name}"))
        })
        .collect::<Result<_>>()?;

    let (orig, norm): (Vec<TrainingExample>, Vec<TrainingExample>) = per_figure
        .into_iter()
        .flatten()
        .partition(|e| e.variant == CaptionVariant::Original);
    summary.original_examples = write_jsonl(&orig, &cfg.jsonl_path(CaptionVariant::Original))?;
    summary.normalized_examples = write_jsonl(&norm, &cfg.jsonl_path(CaptionVariant::Normalized))?;
    Ok(summary)
}

/// Aggregate statistics of one JSONL file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileStats {
    pub path: PathBuf,
    pub examples: usize,
    pub original: usize,
    pub normalized: usize,
    pub with_windows: usize,
    pub papers: usize,
    pub mean_context_chars: f64,
    pub mean_windows: f64,
    pub mean_target_chars: f64,
    pub missing_tensors: usize,
}

impl fmt::Display for FileStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        writeln!(f, "{name}")?;
        writeln!(f, "  examples            {}", self.examples)?;
        writeln!(f, "  orig / normalized   {} / {}", self.original, self.normalized)?;
        writeln!(f, "  papers              {}", self.papers)?;
        writeln!(f, "  with windows        {}", self.with_windows)?;
        writeln!(f, "  mean windows        {:.2}", self.mean_windows)?;
        writeln!(f, "  mean context chars  {:.1}", self.mean_context_chars)?;
        writeln!(f, "  mean target chars   {:.1}", self.mean_target_chars)?;
        write!(f, "  missing tensors     {}", self.missing_tensors)
    }
}

/// Statistics for every `*.jsonl` file in `dataset`, in filename order.
pub fn dataset_stats(dataset: &Path) -> Result<Vec<FileStats>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dataset).map_err(|e| Error::io(dataset, e))? {
        let path = entry.map_err(|e| Error::io(dataset, e))?.path();
        if path.extension().is_some_and(|x| x == "jsonl") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Argument(format!(
            "no .jsonl files in {}",
            dataset.display()
        )));
    }
    files.iter().map(|p| file_stats(dataset, p)).collect()
}

fn file_stats(dataset: &Path, path: &Path) -> Result<FileStats> {
    let mut s = FileStats {
        path: path.to_path_buf(),
        ..Default::default()
    };
    let (mut context, mut windows, mut target) = (0usize, 0usize, 0usize);
    let mut papers = std::collections::BTreeSet::new();
    for example in JsonlReader::open(path)? {
        let e = example?;
        s.examples += 1;
        match e.variant {
            CaptionVariant::Original => s.original += 1,
            CaptionVariant::Normalized => s.normalized += 1,
        }
        let n = e.packed_windows().count();
        windows += n;
        if n > 0 {
            s.with_windows += 1;
        }
        context += e.context_text.chars().count();
        target += e.target.chars().count();
        if !dataset.join(&e.image_ref).is_file() {
            s.missing_tensors += 1;
        }
        papers.insert(e.id.paper_id);
    }
    s.papers = papers.len();
    if s.examples > 0 {
        let n = s.examples as f64;
        s.mean_context_chars = context as f64 / n;
        s.mean_windows = windows as f64 / n;
        s.mean_target_chars = target as f64 / n;
    }
    Ok(s)
}
