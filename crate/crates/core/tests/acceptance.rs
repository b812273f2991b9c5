//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! A criterion whose input data is absent reports `FAIL (blocked)`. Blocked
//! lines fail the process only when `FIGCAP_STRICT=1`; every executed check
//! that misses its tolerance fails it unconditionally.

mod common;

use std::env;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use figcap::align::{mask_caption, sw_scalar, sw_striped, ScoringParams};
use figcap::eval::{evaluate_system, write_baseline};
use figcap::ingest::Split;
use figcap::metrics::{bleu_corpus, lcs_len, rouge_tokens};
use figcap::pipeline::{build_dataset, BuildConfig};
use figcap::textprep::{normalize_caption, NormalizationLevel};
use figcap::CaptionVariant;

type Check = (&'static str, fn() -> Outcome);

const TIME_LIMIT: Duration = Duration::from_secs(60);

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

struct Report {
    failed: usize,
    blocked: usize,
}

impl Report {
    fn record(&mut self, name: &str, outcome: Outcome, elapsed: Duration) {
        let secs = elapsed.as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("PASS  {name}  [{secs:.2}s]  {d}"),
            Outcome::Fail(d) => {
                self.failed += 1;
                println!("FAIL  {name}  [{secs:.2}s]  {d}");
            }
            Outcome::Blocked(d) => {
                self.blocked += 1;
                println!("FAIL  {name}  (blocked)  {d}");
            }
        }
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn alignment_equivalence() -> Outcome {
    let start = Instant::now();
    let p = ScoringParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut mismatches = Vec::new();
    let printable: Vec<char> = (b' '..=b'~').map(char::from).collect();
    for i in 0..1000 {
        let ql = rng.gen_range(1..=200);
        let tl: usize = rng.gen_range(0..=200);
        // Half the pairs share material so high scores and gaps are exercised.
        let q: String = (0..ql).map(|_| *printable.choose(&mut rng).unwrap()).collect();
        let t: String = if i % 2 == 0 {
            (0..tl).map(|_| *printable.choose(&mut rng).unwrap()).collect()
        } else {
            let mut t: Vec<char> = q.chars().collect();
            for c in t.iter_mut() {
                if rng.gen_bool(0.15) {
                    *c = *printable.choose(&mut rng).unwrap();
                }
            }
            let pad: String = (0..rng.gen_range(0..50)).map(|_| *printable.choose(&mut rng).unwrap()).collect();
            let body: String = t.into_iter().take(tl.saturating_sub(2 * pad.len())).collect();
            format!("{pad}{body}{pad}")
        };
        assert!(t.chars().count() <= 200);
        if sw_striped(&q, &t, &p).unwrap().score != sw_scalar(&q, &t, &p).unwrap().score {
            mismatches.push(i);
        }
    }

    let mut words = vec![String::new()];
    for len in 1..=6 {
        for bits in 0u32..(1 << len) {
            words.push((0..len).map(|k| if bits >> k & 1 == 1 { 'b' } else { 'a' }).collect());
        }
    }
    let mut pairs = 0;
    for q in words.iter().filter(|w| !w.is_empty()) {
        for t in &words {
            pairs += 1;
            if sw_striped(q, t, &p).unwrap() != sw_scalar(q, t, &p).unwrap() {
                mismatches.push(usize::MAX);
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches.is_empty() && elapsed < TIME_LIMIT,
        format!("1000 random printable pairs + {pairs} exhaustive {{a,b}} pairs, {} mismatches", mismatches.len()),
    )
}

fn mutate(caption: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = caption.chars().collect();
    let subs = (rng.gen_range(0.0..=0.10) * chars.len() as f64).floor() as usize;
    let mut positions: Vec<usize> = (0..chars.len()).collect();
    positions.shuffle(rng);
    for &i in positions.iter().take(subs) {
        let orig = chars[i];
        chars[i] = loop {
            let c = rng.gen_range(b'a'..=b'z') as char;
            if c != orig.to_ascii_lowercase() {
                break c;
            }
        };
    }
    chars.into_iter().collect()
}

fn masking_recall() -> Outcome {
    let start = Instant::now();
    let p = ScoringParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut embedded, mut masked, mut worst_boundary) = (0usize, 0usize, 0usize);
    for d in 0..500 {
        let caption = format!(
            "Fig. {}. {} of the {} for {}.",
            1 + d % 9,
            common::sentence(&mut rng, 2, 6),
            common::sentence(&mut rng, 2, 5),
            common::sentence(&mut rng, 1, 4)
        );
        let mut doc = String::new();
        let mut truth = Vec::new();
        for k in 0..rng.gen_range(1..=3) {
            if k > 0 || rng.gen_bool(0.8) {
                doc.push_str(&common::sentence(&mut rng, 10, 60));
                doc.push_str(". ");
            }
            let copy = mutate(&caption, &mut rng);
            let at = doc.chars().count();
            truth.push(at..at + copy.chars().count());
            doc.push_str(&copy);
            doc.push(' ');
        }
        doc.push_str(&common::sentence(&mut rng, 0, 40));

        let r = mask_caption(&doc, &caption, &p, 0.6).unwrap();
        for t in &truth {
            embedded += 1;
            let best = r
                .spans
                .iter()
                .filter(|s| s.start < t.end && t.start < s.end)
                .map(|s| s.start.abs_diff(t.start).max(s.end.abs_diff(t.end)))
                .min();
            if let Some(err) = best {
                worst_boundary = worst_boundary.max(err);
                if err <= 5 {
                    masked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let recall = masked as f64 / embedded as f64;
    verdict(
        recall >= 0.99 && elapsed < TIME_LIMIT,
        format!("{masked}/{embedded} spans masked within 5 chars (recall {recall:.4}), worst boundary error {worst_boundary}"),
    )
}

fn fixture(name: &str) -> (Vec<String>, Vec<String>, Vec<(String, String)>) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(path).unwrap();
    let (mut hyps, mut refs, mut meta) = (vec![], vec![], vec![]);
    for line in text.lines() {
        let (a, b) = line.split_once('\t').unwrap();
        match a.strip_prefix('#') {
            Some(key) => meta.push((key.to_string(), b.to_string())),
            None => {
                hyps.push(a.to_string());
                refs.push(b.to_string());
            }
        }
    }
    (hyps, refs, meta)
}

fn bleu_parity() -> Outcome {
    let (hyps, refs, meta) = fixture("bleu_captions.tsv");
    let want = |key: &str| -> f64 { meta.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap() };
    let lower = bleu_corpus(&hyps, &refs, true).unwrap().score;
    let cased = bleu_corpus(&hyps, &refs, false).unwrap().score;
    let (dl, dc) = ((lower - want("lowercase.score")).abs(), (cased - want("cased.score")).abs());
    verdict(
        hyps.len() == 200 && dl <= 0.01 && dc <= 0.01,
        format!("{} pairs, lowercased {lower:.6} (|d| {dl:.1e}), cased {cased:.6} (|d| {dc:.1e})", hyps.len()),
    )
}

/// Longest common subsequence by enumerating every subsequence of `a`.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let mut it = b.iter();
        if (0..a.len()).filter(|k| mask >> k & 1 == 1).all(|k| it.by_ref().any(|&x| x == a[k])) {
            best = len;
        }
    }
    best
}

fn rouge_oracle() -> Outcome {
    const VOCAB: [&str; 3] = ["alpha", "beta", "gamma"];
    let mut lists: Vec<Vec<u8>> = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..10 {
        frontier = frontier
            .iter()
            .flat_map(|l: &Vec<u8>| (0..3u8).map(move |t| [l.as_slice(), &[t]].concat()))
            .collect();
        lists.extend(frontier.iter().cloned());
    }
    let tokens: Vec<Vec<String>> = lists
        .iter()
        .map(|l| rouge_tokens(&l.iter().map(|&t| VOCAB[t as usize]).collect::<Vec<_>>().join(" ")))
        .collect();

    let mut checked = 0u64;
    let mut wrong = 0u64;
    let short = lists.iter().take_while(|l| l.len() <= 6).count();
    for i in 0..short {
        for j in 0..short {
            checked += 1;
            if lcs_len(&tokens[i], &tokens[j]) != brute_lcs(&lists[i], &lists[j]) {
                wrong += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(310);
    for i in 0..lists.len() {
        for _ in 0..4 {
            let j = rng.gen_range(0..lists.len());
            for (a, b) in [(i, j), (j, i)] {
                checked += 1;
                if lcs_len(&tokens[a], &tokens[b]) != brute_lcs(&lists[a], &lists[b]) {
                    wrong += 1;
                }
            }
        }
    }
    verdict(
        wrong == 0,
        format!(
            "{} lists; all {short}x{short} pairs up to length 6 plus 8 seeded partners per list up to length 10; {checked} pairs, {wrong} mismatches",
            lists.len()
        ),
    )
}

fn real_data() -> Option<(PathBuf, PathBuf, PathBuf)> {
    Some((
        env::var_os("FIGCAP_SCICAP_ROOT")?.into(),
        env::var_os("FIGCAP_METADATA_DUMP")?.into(),
        env::var_os("FIGCAP_FULLTEXT_DIR")?.into(),
    ))
}

fn real_split() -> Split {
    env::var("FIGCAP_SPLIT").ok().and_then(|s| s.parse().ok()).unwrap_or(Split::Test)
}

fn baseline_sanity() -> Outcome {
    let Some((root, dump, fulltext)) = real_data() else {
        return Outcome::Blocked(
            "no SciCap sample available; set FIGCAP_SCICAP_ROOT, FIGCAP_METADATA_DUMP and FIGCAP_FULLTEXT_DIR".into(),
        );
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = BuildConfig::new(root, dump, fulltext, real_split(), dir.path().join("out"));
    let summary = match build_dataset(&cfg) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(format!("build failed: {e}")),
    };
    let mut detail = format!("{} figures joined;", summary.joined);
    let mut ok = summary.original_examples >= 500;
    for variant in [CaptionVariant::Original, CaptionVariant::Normalized] {
        let gold = cfg.jsonl_path(variant);
        let pred = dir.path().join(format!("baseline.{}.txt", variant.as_str()));
        let row = write_baseline(&gold, &pred)
            .and_then(|_| evaluate_system(&pred, &gold, "First reference sentence", variant));
        match row {
            Ok(row) => {
                ok &= (0.5..=4.0).contains(&row.bleu);
                let _ = write!(detail, " {} BLEU {:.2} ROUGE-L {:.2} (n={});", variant.as_str(), row.bleu, row.rouge_l_f1, row.n_examples);
            }
            Err(e) => return Outcome::Fail(format!("{detail} eval failed: {e}")),
        }
    }
    verdict(ok, detail)
}

fn digest(dir: &std::path::Path) -> (usize, String) {
    let files = common::snapshot(dir);
    let mut h = Sha256::new();
    for (path, bytes) in &files {
        h.update(path.to_string_lossy().as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    let hex = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    (files.len(), hex)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (root, dump, fulltext, source) = match real_data() {
        Some((r, d, f)) => (r, d, f, "SciCap sample"),
        None => {
            let c = common::synthetic_corpus(dir.path(), 80, 2024);
            (c.scicap_root, c.metadata_dump, c.fulltext_dir, "synthetic 80-paper corpus")
        }
    };
    let split = if source == "SciCap sample" { real_split() } else { Split::Test };
    let mut digests = Vec::new();
    for (run, jobs) in [(1, 1), (2, 4)] {
        let mut cfg = BuildConfig::new(&root, &dump, &fulltext, split, dir.path().join(format!("run{run}")));
        cfg.jobs = Some(jobs);
        if let Err(e) = build_dataset(&cfg) {
            return Outcome::Fail(format!("build failed: {e}"));
        }
        digests.push(digest(&cfg.out));
    }
    let (a, b) = (&digests[0], &digests[1]);
    verdict(
        a == b && a.0 > 2,
        format!("{source}, jobs 1 vs 4: {} vs {} files, sha256 {} / {}", a.0, b.0, &a.1[..16], &b.1[..16]),
    )
}

fn normalization_golden() -> Outcome {
    let pairs = [
        ("SER performance at 4 BPCU for codes", "ser performance at NUM bpcu for codes"),
        (
            "Comparision between the 3 approaches in the case of a DBSC channel",
            "comparision between the NUM approaches in the case of a dbsc channel",
        ),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (input, gold) in pairs {
        for level in [NormalizationLevel::Basic, NormalizationLevel::Advanced] {
            let got = normalize_caption(input, level);
            if got != gold {
                ok = false;
                let _ = write!(detail, "{level:?} {input:?} -> {got:?} (want {gold:?}); ");
            }
        }
    }
    // The printed gold caption of the first pair keeps an unreplaced digit run.
    let printed = "ser performance at NUM bpcu for codes for4× systems.";
    let ours = normalize_caption("SER performance at 4 BPCU for codes for4× 2 systems.", NormalizationLevel::Basic);
    let _ = write!(detail, "2 pairs at both levels; long form {ours:?} vs printed {printed:?}");
    verdict(ok, detail)
}

fn main() -> ExitCode {
    let strict = env::var("FIGCAP_STRICT").is_ok_and(|v| v == "1");
    let mut report = Report { failed: 0, blocked: 0 };
    let checks: [Check; 7] = [
        ("alignment oracle equivalence", alignment_equivalence),
        ("masking recall on synthetic corpus", masking_recall),
        ("BLEU parity with stored reference output", bleu_parity),
        ("ROUGE-L LCS oracle", rouge_oracle),
        ("baseline sanity on real data", baseline_sanity),
        ("determinism of repeated builds", determinism),
        ("normalization golden pairs", normalization_golden),
    ];
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        report.record(name, outcome, start.elapsed());
    }
    println!(
        "acceptance: {} passed, {} failed, {} blocked",
        checks.len() - report.failed - report.blocked,
        report.failed,
        report.blocked
    );
    if report.failed > 0 || (strict && report.blocked > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
