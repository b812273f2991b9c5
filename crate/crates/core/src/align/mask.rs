use std::ops::Range;

use super::{ScoringParams, StripedProfile};
use crate::error::{Error, Result};

/// Replacement text for every masked caption occurrence.
pub const MASK_SENTINEL: &str = "[MASKED_CAPTION]";
pub const MAX_MASK_PASSES: usize = 16;

/// Outcome of [`mask_caption`]. Spans are char ranges of the input text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskResult {
    pub masked_text: String,
    pub spans: Vec<Range<usize>>,
    pub iterations: usize,
}

/// Lowercased, whitespace-collapsed copy of a text with a map back to the
/// char offsets of the original.
#[derive(Debug, Clone, Default)]
pub struct AlignmentView {
    pub chars: Vec<char>,
    pub offsets: Vec<usize>,
}

impl AlignmentView {
    /// Maps a half-open span of the view back onto the original text.
    pub fn original_span(&self, span: Range<usize>) -> Range<usize> {
        if span.is_empty() {
            let at = self.offsets.get(span.start).copied().unwrap_or(0);
            return at..at;
        }
        self.offsets[span.start]..self.offsets[span.end - 1] + 1
    }
}

/// Builds the alignment view of `text`; `trim` drops leading and trailing whitespace.
pub fn alignment_view(text: &[char], trim: bool) -> AlignmentView {
    let mut view = AlignmentView::default();
    let mut in_space = false;
    for (i, &c) in text.iter().enumerate() {
        if c.is_whitespace() {
            if !in_space && !(trim && view.chars.is_empty()) {
                view.chars.push(' ');
                view.offsets.push(i);
            }
            in_space = true;
            continue;
        }
        in_space = false;
        for lc in c.to_lowercase() {
            view.chars.push(lc);
            view.offsets.push(i);
        }
    }
    if trim && view.chars.last() == Some(&' ') {
        view.chars.pop();
        view.offsets.pop();
    }
    view
}

struct Segment {
    range: Range<usize>,
    score: u32,
    hit: Range<usize>,
}

fn best_in(profile: &StripedProfile, text: &[char], range: Range<usize>) -> Segment {
    let view = alignment_view(&text[range.clone()], false);
    let a = profile.align(&view.chars);
    let local = view.original_span(a.target_span);
    Segment {
        hit: range.start + local.start..range.start + local.end,
        range,
        score: a.score,
    }
}

fn sentinel_ranges(text: &[char]) -> Vec<Range<usize>> {
    let pattern: Vec<char> = MASK_SENTINEL.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i + pattern.len() <= text.len() {
        if text[i..i + pattern.len()] == pattern[..] {
            out.push(i..i + pattern.len());
            i += pattern.len();
        } else {
            i += 1;
        }
    }
    out
}

/// Masks every occurrence of `caption` in `full_text` that aligns at or above
/// `threshold_fraction` of the caption's perfect self-alignment score.
///
/// Alignment runs on the lowercased, whitespace-collapsed view of both
/// strings. Each accepted hit is cut out of the alignable text, so later
/// passes never align across an earlier sentinel. Sentinels already present
/// in the input are kept and reported as spans, which makes masking
/// idempotent.
pub fn mask_caption(
    full_text: &str,
    caption: &str,
    params: &ScoringParams,
    threshold_fraction: f64,
) -> Result<MaskResult> {
    if caption.is_empty() {
        return Err(Error::Argument("caption must not be empty".into()));
    }
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "threshold fraction {threshold_fraction} outside (0, 1]"
        )));
    }
    params.validate()?;

    let text: Vec<char> = full_text.chars().collect();
    let caption_chars: Vec<char> = caption.chars().collect();
    let query = alignment_view(&caption_chars, true);

    let mut spans = sentinel_ranges(&text);
    let mut iterations = 0;
    if !query.chars.is_empty() {
        let profile = StripedProfile::new(&query.chars, *params)?;
        let needed = threshold_fraction * query.chars.len() as f64 * params.match_score as f64;

        let mut segments: Vec<Segment> = Vec::new();
        let mut cursor = 0;
        for s in spans.iter().cloned().chain(std::iter::once(text.len()..text.len())) {
            if s.start > cursor {
                segments.push(best_in(&profile, &text, cursor..s.start));
            }
            cursor = s.end;
        }

        while iterations < MAX_MASK_PASSES {
            let Some(pick) = segments
                .iter()
                .enumerate()
                .filter(|(_, s)| s.score > 0 && s.score as f64 >= needed)
                .max_by(|(_, a), (_, b)| a.score.cmp(&b.score).then(b.range.start.cmp(&a.range.start)))
                .map(|(i, _)| i)
            else {
                break;
            };
            let seg = segments.swap_remove(pick);
            if seg.range.start < seg.hit.start {
                segments.push(best_in(&profile, &text, seg.range.start..seg.hit.start));
            }
            if seg.hit.end < seg.range.end {
                segments.push(best_in(&profile, &text, seg.hit.end..seg.range.end));
            }
            spans.push(seg.hit);
            iterations += 1;
        }
    }

    spans.sort_by_key(|s| s.start);
    let mut masked_text = String::with_capacity(full_text.len());
    let mut cursor = 0;
    for s in &spans {
        masked_text.extend(&text[cursor..s.start]);
        masked_text.push_str(MASK_SENTINEL);
        cursor = s.end;
    }
    masked_text.extend(&text[cursor..]);

    Ok(MaskResult {
        masked_text,
        spans,
        iterations,
    })
}
