//! Striped (Farrar-style) Smith-Waterman.
//!
//! The query is split into `LANES` interleaved stripes: lane `k` of segment
//! `s` holds query position `k * seg_len + s`. Each target column is then a
//! pass over `seg_len` vectors, followed by the lazy-F loop that propagates
//! vertical gaps across stripe boundaries.

use std::collections::HashMap;

use super::{check_inputs, start_of, LocalAlignment, ScoringParams, NEG_INF};
use crate::error::Result;

pub const LANES: usize = 8;

/// Distinct query characters that get a precomputed profile row.
const MAX_PROFILE_ROWS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Lanes([i32; LANES]);

impl Lanes {
    #[inline(always)]
    fn splat(v: i32) -> Self {
        Lanes([v; LANES])
    }

    #[inline(always)]
    fn add(self, o: Lanes) -> Self {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a = a.saturating_add(b);
        }
        Lanes(r)
    }

    #[inline(always)]
    fn add_scalar(self, v: i32) -> Self {
        self.add(Lanes::splat(v))
    }

    #[inline(always)]
    fn max(self, o: Lanes) -> Self {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a = (*a).max(b);
        }
        Lanes(r)
    }

    /// Moves every lane up by one; lane 0 receives `fill`.
    #[inline(always)]
    fn shift_in(self, fill: i32) -> Self {
        let mut r = [fill; LANES];
        r[1..].copy_from_slice(&self.0[..LANES - 1]);
        Lanes(r)
    }

    #[inline(always)]
    fn any_gt(self, o: Lanes) -> bool {
        self.0.iter().zip(o.0).any(|(a, b)| *a > b)
    }

    #[inline(always)]
    fn horizontal_max(self) -> i32 {
        self.0.into_iter().max().unwrap()
    }
}

/// Precomputed striped query profile, reusable across many targets.
pub struct StripedProfile {
    query: Vec<char>,
    params: ScoringParams,
    seg_len: usize,
    rows: HashMap<char, usize>,
    // rows.len() + 1 profiles of seg_len vectors; the last scores
    // characters absent from the query.
    profile: Vec<Lanes>,
}

impl StripedProfile {
    pub fn new(query: &[char], params: ScoringParams) -> Result<Self> {
        check_inputs(query, &params)?;
        let seg_len = query.len().div_ceil(LANES);
        let mut rows = HashMap::new();
        for &c in query {
            if rows.len() == MAX_PROFILE_ROWS {
                break;
            }
            let next = rows.len();
            rows.entry(c).or_insert(next);
        }
        let mut ordered: Vec<(char, usize)> = rows.iter().map(|(c, i)| (*c, *i)).collect();
        ordered.sort_by_key(|&(_, i)| i);

        let mut this = StripedProfile {
            query: query.to_vec(),
            params,
            seg_len,
            rows,
            profile: Vec::with_capacity((ordered.len() + 1) * seg_len),
        };
        for (c, _) in &ordered {
            let row = this.column_profile(Some(*c));
            this.profile.extend(row);
        }
        let other = this.column_profile(None);
        this.profile.extend(other);
        Ok(this)
    }

    pub fn query(&self) -> &[char] {
        &self.query
    }

    // `None` builds the row for a character that occurs nowhere in the query.
    fn column_profile(&self, c: Option<char>) -> Vec<Lanes> {
        let mut out = vec![Lanes::splat(NEG_INF); self.seg_len];
        for (s, lanes) in out.iter_mut().enumerate() {
            for k in 0..LANES {
                let i = k * self.seg_len + s;
                if i < self.query.len() {
                    lanes.0[k] = match c {
                        Some(c) => self.params.substitution(self.query[i], c),
                        None => self.params.mismatch,
                    };
                }
            }
        }
        out
    }

    /// Optimal local alignment of the profiled query against `target`.
    pub fn align(&self, target: &[char]) -> LocalAlignment {
        let seg_len = self.seg_len;
        let open = self.params.gap_open;
        let ext = self.params.gap_extend;
        let zero = Lanes::splat(0);
        let other_row = self.rows.len();

        let mut h_store = vec![zero; seg_len];
        let mut h_load = vec![zero; seg_len];
        let mut e_store = vec![Lanes::splat(NEG_INF); seg_len];

        let (mut best, mut query_end, mut target_end) = (0i32, 0usize, 0usize);
        for (j, &tc) in target.iter().enumerate() {
            let scratch;
            let prof: &[Lanes] = match self.rows.get(&tc) {
                Some(&row) => &self.profile[row * seg_len..(row + 1) * seg_len],
                None if self.rows.len() < MAX_PROFILE_ROWS || !self.query.contains(&tc) => {
                    &self.profile[other_row * seg_len..(other_row + 1) * seg_len]
                }
                None => {
                    scratch = self.column_profile(Some(tc));
                    &scratch
                }
            };

            let mut vf = Lanes::splat(NEG_INF);
            let mut vh = h_store[seg_len - 1].shift_in(0);
            let mut vmax = zero;
            std::mem::swap(&mut h_load, &mut h_store);

            for s in 0..seg_len {
                vh = vh.add(prof[s]).max(e_store[s]).max(vf).max(zero);
                vmax = vmax.max(vh);
                h_store[s] = vh;
                let gap = vh.add_scalar(open);
                e_store[s] = e_store[s].add_scalar(ext).max(gap);
                vf = vf.add_scalar(ext).max(gap);
                vh = h_load[s];
            }

            // Lazy F: carry vertical gaps across stripe boundaries until no
            // lane can still raise a downstream cell.
            vf = vf.shift_in(NEG_INF);
            let mut s = 0;
            let mut wraps = 0;
            loop {
                let current = h_store[s];
                let fixed = current.max(vf);
                h_store[s] = fixed;
                vmax = vmax.max(fixed);
                let gap = fixed.add_scalar(open);
                e_store[s] = e_store[s].max(gap);
                let next = vf.add_scalar(ext).max(gap);
                if !next.any_gt(current.add_scalar(open)) {
                    break;
                }
                vf = next;
                s += 1;
                if s == seg_len {
                    s = 0;
                    wraps += 1;
                    if wraps > LANES {
                        break;
                    }
                    vf = vf.shift_in(NEG_INF);
                }
            }

            let column_best = vmax.horizontal_max();
            if column_best > best {
                best = column_best;
                target_end = j + 1;
                query_end = (0..self.query.len())
                    .find(|&i| h_store[i % seg_len].0[i / seg_len] == column_best)
                    .expect("column maximum lies on a real query position")
                    + 1;
            }
        }

        if best == 0 {
            return LocalAlignment::empty();
        }
        let (qs, ts) = start_of(&self.query, target, query_end, target_end, best, &self.params);
        LocalAlignment {
            score: best as u32,
            target_span: ts..target_end,
            query_span: qs..query_end,
        }
    }
}
