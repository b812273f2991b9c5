use super::{start_of, LocalAlignment, ScoringParams, NEG_INF};

/// Column-major Gotoh local alignment over pre-split chars.
///
/// Linear memory: one column of `H` and of the horizontal-gap state `E` is
/// kept for the query. `query` must be non-empty.
pub fn sw_scalar_chars(query: &[char], target: &[char], params: &ScoringParams) -> LocalAlignment {
    let m = query.len();
    let (open, ext) = (params.gap_open, params.gap_extend);
    let mut h_prev = vec![0i32; m + 1];
    let mut h_cur = vec![0i32; m + 1];
    let mut e = vec![NEG_INF; m + 1];

    let (mut best, mut query_end, mut target_end) = (0i32, 0usize, 0usize);
    for (j, &tc) in target.iter().enumerate() {
        let mut f = NEG_INF;
        h_cur[0] = 0;
        for i in 1..=m {
            e[i] = (e[i] + ext).max(h_prev[i] + open);
            f = (f + ext).max(h_cur[i - 1] + open);
            let diag = h_prev[i - 1] + params.substitution(query[i - 1], tc);
            let h = diag.max(e[i]).max(f).max(0);
            h_cur[i] = h;
            if h > best {
                best = h;
                query_end = i;
                target_end = j + 1;
            }
        }
        std::mem::swap(&mut h_prev, &mut h_cur);
    }

    if best == 0 {
        return LocalAlignment::empty();
    }
    let (qs, ts) = start_of(query, target, query_end, target_end, best, params);
    LocalAlignment {
        score: best as u32,
        target_span: ts..target_end,
        query_span: qs..query_end,
    }
}
