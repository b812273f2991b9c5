//! Mention windows, context packing, caption normalization and sentence
//! splitting.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::align::MASK_SENTINEL;
use crate::error::{Error, Result};
use crate::record::PaperMetadata;

/// Separator between packed context features.
pub const SEP: &str = "[SEP]";
pub const DEFAULT_WINDOW_CHARS: usize = 100;

/// Excerpt of the masked full text around one (or several merged) mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionWindow {
    pub text: String,
    /// Char offset of the first mention inside the masked full text.
    pub mention_offset: usize,
    pub figure_label: String,
}

fn mention_regex(label: &str) -> Regex {
    let tail = if label.chars().last().is_some_and(|c| c.is_alphanumeric() || c == '_') {
        r"\b"
    } else {
        ""
    };
    Regex::new(&format!(
        r"(?i)\bfig(?:ure)?\.?\s*{}{tail}",
        regex::escape(label)
    ))
    .expect("escaped label always forms a valid pattern")
}

/// Char ranges of every sentinel occurrence in `chars`.
fn token_ranges(chars: &[char], token: &str) -> Vec<(usize, usize)> {
    let pat: Vec<char> = token.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i + pat.len() <= chars.len() {
        if chars[i..i + pat.len()] == pat[..] {
            out.push((i, i + pat.len()));
            i += pat.len();
        } else {
            i += 1;
        }
    }
    out
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Finds mentions of `figure_label` with the default ±100 character window.
pub fn extract_mentions(masked_text: &str, figure_label: &str) -> Vec<MentionWindow> {
    extract_mentions_with(masked_text, figure_label, DEFAULT_WINDOW_CHARS)
}

/// Finds every mention such as "Fig. 3", "Figure 3", "FIG.3" or "fig 3" and
/// cuts `window` chars of context on each side, merging overlapping windows.
///
/// Window text has its whitespace collapsed. A window edge never cuts
/// through a caption sentinel; a partially covered sentinel is dropped.
pub fn extract_mentions_with(masked_text: &str, figure_label: &str, window: usize) -> Vec<MentionWindow> {
    if figure_label.is_empty() {
        return Vec::new();
    }
    let re = mention_regex(figure_label);
    let chars: Vec<char> = masked_text.chars().collect();

    // (window start, window end, first mention offset)
    let mut spans: Vec<(usize, usize, usize)> = Vec::new();
    let mut last_byte = 0;
    let mut last_char = 0;
    for m in re.find_iter(masked_text) {
        let start = last_char + masked_text[last_byte..m.start()].chars().count();
        let end = start + m.as_str().chars().count();
        last_byte = m.end();
        last_char = end;
        let lo = start.saturating_sub(window);
        let hi = (end + window).min(chars.len());
        match spans.last_mut() {
            Some(prev) if lo <= prev.1 => prev.1 = prev.1.max(hi),
            _ => spans.push((lo, hi, start)),
        }
    }

    let sentinels = token_ranges(&chars, MASK_SENTINEL);
    spans
        .into_iter()
        .map(|(mut lo, mut hi, mention_offset)| {
            for &(s, e) in &sentinels {
                if s < lo && lo < e {
                    lo = e;
                }
                if s < hi && hi < e {
                    hi = s;
                }
            }
            let raw: String = chars[lo..hi].iter().collect();
            MentionWindow {
                text: collapse_whitespace(&raw),
                mention_offset,
                figure_label: figure_label.to_string(),
            }
        })
        .collect()
}

/// Character budget for the packed text-encoder input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackBudget {
    pub title_chars: usize,
    pub abstract_chars: usize,
    pub total_chars: usize,
}

impl Default for PackBudget {
    fn default() -> Self {
        PackBudget {
            title_chars: 100,
            abstract_chars: 150,
            total_chars: 2048,
        }
    }
}

impl PackBudget {
    pub fn validate(&self) -> Result<()> {
        let fixed = self.title_chars + self.abstract_chars + 2 * SEP.len();
        if fixed > self.total_chars {
            return Err(Error::validation(
                "total_chars",
                format!(
                    "{} is too small for {} title + {} abstract chars and two separators",
                    self.total_chars, self.title_chars, self.abstract_chars
                ),
            ));
        }
        Ok(())
    }
}

/// First `limit` chars of `chars`, pulled back so that no `[SEP]` or caption
/// sentinel is cut in half.
fn clean_prefix(chars: &[char], limit: usize) -> usize {
    if chars.len() <= limit {
        return chars.len();
    }
    let mut cut = limit;
    for token in [SEP, MASK_SENTINEL] {
        for (s, e) in token_ranges(chars, token) {
            if s < cut && cut < e {
                cut = s;
            }
        }
    }
    cut
}

fn truncate_clean(s: &str, limit: usize) -> String {
    let chars: Vec<char> = s.chars().collect();
    chars[..clean_prefix(&chars, limit)].iter().collect()
}

// Literal separators inside a feature would shift the feature boundaries.
// Metadata fields arrive with hard line breaks; one space per whitespace run.
fn scrub(s: &str) -> String {
    s.replace(SEP, " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Packs `title[SEP]abstract[SEP]window[SEP]window...` under `budget`.
pub fn pack_context(metadata: &PaperMetadata, windows: &[MentionWindow], budget: &PackBudget) -> Result<String> {
    budget.validate()?;
    let mut out = truncate_clean(&scrub(&metadata.title), budget.title_chars);
    out.push_str(SEP);
    out.push_str(&truncate_clean(&scrub(&metadata.abstract_text), budget.abstract_chars));
    out.push_str(SEP);
    let body = windows
        .iter()
        .map(|w| scrub(&w.text))
        .collect::<Vec<_>>()
        .join(SEP);
    out.push_str(&body);
    Ok(truncate_clean(&out, budget.total_chars))
}

/// Normalization strength, mirroring SciCap's basic and advanced variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationLevel {
    /// Numbers only.
    Basic,
    /// Numbers, equations and bracketed spans.
    #[default]
    Advanced,
}

/// Placeholder strings emitted by caption normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceholderTokens {
    pub number: String,
    pub equation: String,
    pub bracket: String,
}

impl Default for PlaceholderTokens {
    fn default() -> Self {
        PlaceholderTokens {
            number: "NUM".into(),
            equation: "EQUATION".into(),
            bracket: "BRACKET".into(),
        }
    }
}

// Placeholders travel through normalization as private-use code points so
// that lowercasing and the detectors never touch them.
const PUA_NUMBER: char = '\u{E000}';
const PUA_EQUATION: char = '\u{E001}';
const PUA_BRACKET: char = '\u{E002}';

static NUMBER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[0-9]+(?:[.,][0-9]+)*").unwrap());
static DOLLAR_MATH_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\$[^$]*\$").unwrap());

const MAX_ADVANCED_ROUNDS: usize = 32;
const EQUATION_OPERATORS: [char; 4] = ['=', '\\', '^', '_'];
const SYMBOL_CHARS: &str = "=<>+-*/\\^_~|";

/// Caption normalizer with configurable placeholder strings.
#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    pub level: NormalizationLevel,
    pub tokens: PlaceholderTokens,
}

impl Normalizer {
    pub fn new(level: NormalizationLevel) -> Self {
        Normalizer {
            level,
            tokens: PlaceholderTokens::default(),
        }
    }

    pub fn normalize(&self, caption: &str) -> String {
        let mut s = self.protect(caption).to_lowercase();
        if self.level == NormalizationLevel::Advanced {
            // Removing math can expose new bracket pairs and vice versa.
            for _ in 0..MAX_ADVANCED_ROUNDS {
                let mut next = replace_brackets(&s);
                next = DOLLAR_MATH_RE
                    .replace_all(&next, PUA_EQUATION.to_string().as_str())
                    .into_owned();
                next = replace_equation_runs(&next);
                if next == s {
                    break;
                }
                s = next;
            }
        }
        s = NUMBER_RE
            .replace_all(&s, PUA_NUMBER.to_string().as_str())
            .into_owned();
        self.restore(&s)
    }

    /// Encodes placeholder tokens already present in `s`. A chain of
    /// placeholders counts only when it is not glued to further uppercase
    /// letters, so "NUMBER" stays a word while "NUMBRACKET" is two tokens.
    fn protect(&self, s: &str) -> String {
        let mut tokens = [
            (self.tokens.equation.as_str(), PUA_EQUATION),
            (self.tokens.bracket.as_str(), PUA_BRACKET),
            (self.tokens.number.as_str(), PUA_NUMBER),
        ];
        tokens.sort_by_key(|(t, _)| std::cmp::Reverse(t.len()));
        let mut out = String::with_capacity(s.len());
        let mut i = 0;
        let mut prev_upper = false;
        while i < s.len() {
            if !prev_upper {
                let mut end = i;
                let mut encoded = String::new();
                while let Some((tok, pua)) = tokens
                    .iter()
                    .find(|(t, _)| !t.is_empty() && s[end..].starts_with(t))
                {
                    encoded.push(*pua);
                    end += tok.len();
                }
                let glued = s[end..].chars().next().is_some_and(lowercases);
                if end > i && !glued {
                    out.push_str(&encoded);
                    i = end;
                    continue;
                }
            }
            let c = s[i..].chars().next().unwrap();
            out.push(c);
            prev_upper = lowercases(c);
            i += c.len_utf8();
        }
        out
    }

    fn restore(&self, s: &str) -> String {
        let mut out = String::with_capacity(s.len() + 16);
        for c in s.chars() {
            match c {
                PUA_NUMBER => out.push_str(&self.tokens.number),
                PUA_EQUATION => out.push_str(&self.tokens.equation),
                PUA_BRACKET => out.push_str(&self.tokens.bracket),
                c => out.push(c),
            }
        }
        out
    }
}

// Uppercase letters with a lowercase form; uncased capitals such as
// mathematical script letters survive lowercasing and do not glue.
fn lowercases(c: char) -> bool {
    c.is_uppercase() && c.to_lowercase().ne(std::iter::once(c))
}

/// Replaces every outermost balanced `(...)`, `[...]` or `{...}` span; a
/// balanced pair inside an unclosed opener counts as outermost.
fn replace_brackets(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut spans = Vec::new();
    let mut stack: Vec<(char, usize)> = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' | '[' | '{' => stack.push((c, i)),
            ')' | ']' | '}' => {
                let opener = match c {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                if stack.last().map(|&(o, _)| o) == Some(opener) {
                    let (_, start) = stack.pop().unwrap();
                    // inner pairs close first, so an enclosing pair replaces them
                    while spans.last().is_some_and(|&(a, _)| a > start) {
                        spans.pop();
                    }
                    spans.push((start, i + 1));
                } else {
                    stack.clear();
                }
            }
            _ => {}
        }
    }
    if spans.is_empty() {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut cursor = 0;
    for (a, b) in spans {
        out.extend(&chars[cursor..a]);
        out.push(PUA_BRACKET);
        cursor = b;
    }
    out.extend(&chars[cursor..]);
    out
}

/// Collapses whitespace tokens that look like inline math into one placeholder.
fn replace_equation_runs(s: &str) -> String {
    let tokens: Vec<&str> = s.split_whitespace().collect();
    let has_op = |t: &str| t.chars().any(|c| EQUATION_OPERATORS.contains(&c));
    let pure_symbol = |t: &str| t.chars().all(|c| SYMBOL_CHARS.contains(c));
    let mut marked: Vec<bool> = tokens.iter().map(|t| has_op(t) || *t == PUA_EQUATION.to_string()).collect();
    // A free-standing operator such as "=" pulls its operands in.
    for i in 0..tokens.len() {
        if has_op(tokens[i]) && pure_symbol(tokens[i]) {
            if i > 0 {
                marked[i - 1] = true;
            }
            if i + 1 < tokens.len() {
                marked[i + 1] = true;
            }
        }
    }
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if !marked[i] {
            out.push(tokens[i].to_string());
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < tokens.len() && marked[j + 1] {
            j += 1;
        }
        let trailing: String = tokens[j]
            .chars()
            .rev()
            .take_while(|c| matches!(c, '.' | ',' | ';' | ':'))
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        out.push(format!("{PUA_EQUATION}{trailing}"));
        i = j + 1;
    }
    out.join(" ")
}

/// Normalizes a caption with the default placeholder tokens.
pub fn normalize_caption(caption: &str, level: NormalizationLevel) -> String {
    Normalizer::new(level).normalize(caption)
}

const ABBREVIATIONS: [&str; 7] = ["fig.", "figs.", "eq.", "eqs.", "e.g.", "i.e.", "vs."];

fn is_abbreviation(before: &str) -> bool {
    let mut words = before.rsplit(char::is_whitespace);
    let last = words.next().unwrap_or("");
    let last = last.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = last.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    lower == "al." && words.next().is_some_and(|w| w.eq_ignore_ascii_case("et"))
}

/// The text up to and including its first sentence terminator.
///
/// A `.`, `!` or `?` ends a sentence only when followed by whitespace or the
/// end of the text, which excludes decimals such as "4.1"; a `.` closing one
/// of the known abbreviations ("Fig.", "Eq.", "et al.", "e.g.", "i.e.",
/// "vs.") does not count.
pub fn first_sentence(text: &str) -> &str {
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let next = iter.peek().map(|&(_, n)| n);
        if next.is_some_and(|n| !n.is_whitespace()) {
            continue;
        }
        let end = i + c.len_utf8();
        if c == '.' && is_abbreviation(&text[..end]) {
            continue;
        }
        return &text[..end];
    }
    text
}

static FIGURE_PREFIX_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?i:fig(?:ure)?s?)\.?\s*[0-9]+[a-z]?\s*[.:]?\s*").unwrap()
});

/// Splits a leading figure label such as "Fig. 2." off a caption.
pub fn split_figure_label(caption: &str) -> (&str, &str) {
    match FIGURE_PREFIX_RE.find(caption) {
        Some(m) => (&caption[..m.end()], &caption[m.end()..]),
        None => ("", caption),
    }
}

/// First sentence of a caption, keeping a leading "Fig. N." label intact.
pub fn caption_first_sentence(caption: &str) -> String {
    let (label, body) = split_figure_label(caption);
    let sentence = format!("{label}{}", first_sentence(body));
    collapse_whitespace(&sentence)
}
