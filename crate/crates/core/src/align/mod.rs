//! Smith-Waterman local alignment with affine gaps, and caption masking.
//!
//! Two engines compute the same alignment: [`sw_scalar`] is the plain
//! column-by-column Gotoh recurrence, [`sw_striped`] the striped query-profile
//! formulation that processes `LANES` query positions per vector step. Both
//! report the alignment end as the smallest target end, then the smallest
//! query end, among cells holding the optimal score; the start is recovered
//! by the shared anchored reverse pass in [`start_of`], so spans agree too.
//!
//! All offsets are in Unicode scalar values (chars), not bytes.

mod mask;
mod scalar;
mod striped;

use std::ops::Range;

use crate::error::{Error, Result};

pub use mask::{alignment_view, mask_caption, AlignmentView, MaskResult, MASK_SENTINEL, MAX_MASK_PASSES};
pub use scalar::sw_scalar_chars;
pub use striped::{StripedProfile, LANES};

/// Affine gap scoring. A gap of length `k` costs `gap_open + (k - 1) * gap_extend`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringParams {
    pub match_score: i32,
    pub mismatch: i32,
    pub gap_open: i32,
    pub gap_extend: i32,
}

impl Default for ScoringParams {
    fn default() -> Self {
        ScoringParams {
            match_score: 2,
            mismatch: -2,
            gap_open: -3,
            gap_extend: -1,
        }
    }
}

// Keeps every intermediate sum far away from i32 overflow.
const MAX_PARAM_MAGNITUDE: i32 = 1 << 16;

impl ScoringParams {
    pub fn new(match_score: i32, mismatch: i32, gap_open: i32, gap_extend: i32) -> Result<Self> {
        let p = ScoringParams {
            match_score,
            mismatch,
            gap_open,
            gap_extend,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.match_score <= 0 {
            return Err(Error::validation("match", "must be positive"));
        }
        if self.mismatch > 0 {
            return Err(Error::validation("mismatch", "must be <= 0"));
        }
        if !(self.gap_open <= self.gap_extend && self.gap_extend <= 0) {
            return Err(Error::validation(
                "gap_open",
                "need gap_open <= gap_extend <= 0",
            ));
        }
        let magnitudes = [self.match_score, self.mismatch, self.gap_open, self.gap_extend];
        if magnitudes.iter().any(|v| v.abs() > MAX_PARAM_MAGNITUDE) {
            return Err(Error::validation("match", "scores must stay within ±65536"));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn substitution(&self, a: char, b: char) -> i32 {
        if a == b {
            self.match_score
        } else {
            self.mismatch
        }
    }
}

/// Optimal local alignment: score plus half-open char spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalAlignment {
    pub score: u32,
    pub target_span: Range<usize>,
    pub query_span: Range<usize>,
}

impl LocalAlignment {
    pub(crate) fn empty() -> Self {
        LocalAlignment {
            score: 0,
            target_span: 0..0,
            query_span: 0..0,
        }
    }
}

/// Scalar Gotoh local alignment of `query` against `target`.
pub fn sw_scalar(query: &str, target: &str, params: &ScoringParams) -> Result<LocalAlignment> {
    let q: Vec<char> = query.chars().collect();
    let t: Vec<char> = target.chars().collect();
    check_inputs(&q, params)?;
    Ok(sw_scalar_chars(&q, &t, params))
}

/// Striped local alignment; same result as [`sw_scalar`] for every input.
pub fn sw_striped(query: &str, target: &str, params: &ScoringParams) -> Result<LocalAlignment> {
    let q: Vec<char> = query.chars().collect();
    let t: Vec<char> = target.chars().collect();
    let profile = StripedProfile::new(&q, *params)?;
    Ok(profile.align(&t))
}

pub(crate) fn check_inputs(query: &[char], params: &ScoringParams) -> Result<()> {
    params.validate()?;
    if query.is_empty() {
        return Err(Error::Argument("query must not be empty".into()));
    }
    Ok(())
}

pub(crate) const NEG_INF: i32 = i32::MIN / 4;

/// Recovers the start of an optimal alignment that ends at
/// `(query_end, target_end)` with score `best`.
///
/// Runs an end-anchored Gotoh pass over the reversed prefixes and picks the
/// shortest query extent, then the shortest target extent, reaching `best`.
pub(crate) fn start_of(
    query: &[char],
    target: &[char],
    query_end: usize,
    target_end: usize,
    best: i32,
    params: &ScoringParams,
) -> (usize, usize) {
    debug_assert!(best > 0);
    // Gapped target characters each cost at least |gap_extend| and the
    // positive part of the score is at most match * query_end, which bounds
    // how far back the alignment can reach.
    let reach = if params.gap_extend < 0 {
        let positive = params.match_score as usize * query_end;
        let extra = positive / params.gap_extend.unsigned_abs() as usize + 1;
        query_end + extra
    } else {
        target_end
    };
    let window = reach.min(target_end);
    let rq: Vec<char> = query[..query_end].iter().rev().copied().collect();
    let rt: Vec<char> = target[target_end - window..target_end]
        .iter()
        .rev()
        .copied()
        .collect();
    let (m, n) = (rq.len(), rt.len());
    let (open, ext) = (params.gap_open, params.gap_extend);

    // Row-major over the reversed query: row i holds scores after consuming
    // i query characters, so the first hit scanning rows then columns is the
    // shortest extent.
    let gap = |len: usize| -> i32 {
        if len == 0 {
            0
        } else {
            open + ext * (len as i32 - 1)
        }
    };
    let mut h_prev: Vec<i32> = (0..=n).map(gap).collect();
    let mut f_prev: Vec<i32> = vec![NEG_INF; n + 1];
    let mut h_cur = vec![0; n + 1];
    let mut f_cur = vec![0; n + 1];
    for i in 1..=m {
        h_cur[0] = gap(i);
        f_cur[0] = gap(i);
        // f consumes query (vertical), e consumes target (horizontal)
        let mut e = NEG_INF;
        for j in 1..=n {
            f_cur[j] = (f_prev[j] + ext).max(h_prev[j] + open);
            e = (e + ext).max(h_cur[j - 1] + open);
            let diag = h_prev[j - 1] + params.substitution(rq[i - 1], rt[j - 1]);
            if diag == best {
                return (query_end - i, target_end - j);
            }
            h_cur[j] = diag.max(e).max(f_cur[j]);
        }
        std::mem::swap(&mut h_prev, &mut h_cur);
        std::mem::swap(&mut f_prev, &mut f_cur);
    }
    unreachable!("no alignment start reaches the optimal score");
}
