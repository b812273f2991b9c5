//! Synthetic SciCap-layout corpora for integration tests.
#![allow(dead_code)]

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const WORDS: &[&str] = &[
    "throughput", "latency", "energy", "model", "training", "loss", "accuracy", "users",
    "channel", "capacity", "scheme", "proposed", "baseline", "network", "error", "rate",
    "performance", "codes", "graph", "nodes", "iterations", "convergence", "kernel", "memory",
    "bandwidth", "signal", "noise", "power", "system", "results", "dataset", "samples",
];

pub fn sentence(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn png(rng: &mut impl Rng) -> Vec<u8> {
    let (w, h) = (rng.gen_range(40..180), rng.gen_range(30..140));
    let base: [u8; 3] = rng.gen();
    let img = RgbImage::from_fn(w, h, |x, y| {
        Rgb([
            base[0].wrapping_add((x * 3) as u8),
            base[1].wrapping_add((y * 5) as u8),
            base[2] ^ ((x + y) as u8),
        ])
    });
    let mut buf = Cursor::new(Vec::new());
    DynamicImage::ImageRgb8(img)
        .write_to(&mut buf, ImageFormat::Png)
        .unwrap();
    buf.into_inner()
}

pub struct Corpus {
    pub scicap_root: PathBuf,
    pub metadata_dump: PathBuf,
    pub fulltext_dir: PathBuf,
    /// Figures written with a usable caption file and no subfigures.
    pub figures: usize,
    /// Of those, figures whose paper is absent from the dump.
    pub unlinked: usize,
    /// The original caption of every usable figure.
    pub captions: Vec<String>,
}

/// Writes a deterministic corpus of `papers` papers into `dir`.
pub fn synthetic_corpus(dir: &Path, papers: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scicap_root = dir.join("scicap");
    let img_dir = scicap_root.join("SciCap-No-Subfig-Img/test");
    let cap_dir = scicap_root.join("SciCap-Caption-All/test");
    let fulltext_dir = dir.join("fulltext");
    for d in [&img_dir, &cap_dir, &fulltext_dir] {
        fs::create_dir_all(d).unwrap();
    }

    let mut dump = String::new();
    let mut figures = 0;
    let mut unlinked = 0;
    let mut captions = Vec::new();
    for p in 0..papers {
        let paper_id = format!("1001.{:04}", 1000 + p);
        let linked = p % 7 != 3;
        if linked {
            let extra = json!({
                "id": paper_id,
                "submitter": "someone",
                "title": format!("On {} for {}", sentence(&mut rng, 2, 5), sentence(&mut rng, 1, 3)),
                "abstract": format!("  We study {}.\nResults show {}.\n", sentence(&mut rng, 20, 40), sentence(&mut rng, 10, 20)),
                "categories": "cs.IT",
            });
            dump.push_str(&extra.to_string());
            dump.push('\n');
        }

        let mut body = vec![format!("Introduction. {}.", sentence(&mut rng, 30, 60))];
        let n_figs = rng.gen_range(1..=3);
        for f in 1..=n_figs {
            let stem = format!("{paper_id}v1-Figure{f}-1");
            fs::write(img_dir.join(format!("{stem}.png")), png(&mut rng)).unwrap();
            let subfig = rng.gen_bool(0.05);
            let first = sentence(&mut rng, 5, 12);
            let caption = format!("Fig. {f}. {} at {} dB. {}.", capitalize(&first), rng.gen_range(1..40), sentence(&mut rng, 3, 8));
            let mut cap = json!({
                "contains-subfigure": subfig,
                "paper-ID": paper_id,
                "figure-ID": format!("{stem}.png"),
                "0-originally-extracted": caption,
            });
            if rng.gen_bool(0.5) {
                let norm = format!("{first} at [NUM] db .");
                cap["2-normalized"] = json!({
                    "2-1-basic-num": {"caption": norm, "sentence": [norm], "token": []},
                    "2-2-advanced-euqation-bracket": {"caption": norm, "sentence": [norm], "token": []},
                });
            }
            if !subfig {
                figures += 1;
                if !linked {
                    unlinked += 1;
                }
                captions.push(caption.clone());
            }
            fs::write(cap_dir.join(format!("{stem}.json")), cap.to_string()).unwrap();

            body.push(format!("As shown in Figure {f}, the {}. {}.", sentence(&mut rng, 6, 15), sentence(&mut rng, 20, 50)));
            body.push(format!("We plot this in Figure {f} below. {}", &caption["Fig. 1. ".len()..]));
            body.push(format!("{}. In Fig. {f} we also see {}.", sentence(&mut rng, 20, 40), sentence(&mut rng, 5, 10)));
        }
        if p % 5 != 4 {
            fs::write(fulltext_dir.join(format!("{paper_id}v1.txt")), body.join("\n\n")).unwrap();
        }
    }
    // An image without a caption file is ignored.
    fs::write(img_dir.join("1001.9999v1-Figure1-1.png"), png(&mut rng)).unwrap();

    let metadata_dump = dir.join("arxiv-metadata.json");
    fs::write(&metadata_dump, dump).unwrap();
    Corpus {
        scicap_root,
        metadata_dump,
        fulltext_dir,
        figures,
        unlinked,
        captions,
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Every file under `dir`, relative path and contents, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
