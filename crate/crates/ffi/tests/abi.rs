use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use figcap_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    figcap_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = figcap_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn aligner_roundtrip() {
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(figcap_aligner_new(c("ACGT").as_ptr(), 2, -2, -3, -1, &mut a), FigcapStatus::Ok);
        let mut r = FigcapAlignment::default();
        assert_eq!(figcap_aligner_align(a, c("xxACGTxx").as_ptr(), &mut r), FigcapStatus::Ok);
        assert_eq!(
            r,
            FigcapAlignment {
                score: 8,
                target_start: 2,
                target_end: 6,
                query_start: 0,
                query_end: 4
            }
        );
        figcap_aligner_free(a);
    }
}

#[test]
fn aligner_rejects_bad_input() {
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(
            figcap_aligner_new(c("").as_ptr(), 2, -2, -3, -1, &mut a),
            FigcapStatus::InvalidArgument
        );
        assert!(a.is_null());
        assert!(last_error().contains("query"));
        assert_eq!(
            figcap_aligner_new(c("x").as_ptr(), 0, -2, -3, -1, &mut a),
            FigcapStatus::Validation
        );
        assert_eq!(
            figcap_aligner_new(ptr::null(), 2, -2, -3, -1, &mut a),
            FigcapStatus::NullPointer
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            figcap_aligner_new(bad.as_ptr().cast(), 2, -2, -3, -1, &mut a),
            FigcapStatus::InvalidUtf8
        );
        let mut r = FigcapAlignment::default();
        assert_eq!(
            figcap_aligner_align(ptr::null(), c("x").as_ptr(), &mut r),
            FigcapStatus::NullPointer
        );
        figcap_aligner_free(ptr::null_mut());
    }
}

#[test]
fn masking_through_the_aligner() {
    unsafe {
        let caption = "throughput versus batch size";
        let mut a = ptr::null_mut();
        assert_eq!(figcap_aligner_new(c(caption).as_ptr(), 2, -2, -3, -1, &mut a), FigcapStatus::Ok);
        let text = c(&format!("a {caption} b {caption} c"));
        let mut out = ptr::null_mut();
        let mut n = 0usize;
        assert_eq!(figcap_aligner_mask(a, text.as_ptr(), 0.6, &mut out, &mut n), FigcapStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(take(out), "a [MASKED_CAPTION] b [MASKED_CAPTION] c");
        assert_eq!(
            figcap_aligner_mask(a, text.as_ptr(), 1.5, &mut out, ptr::null_mut()),
            FigcapStatus::InvalidArgument
        );
        assert!(out.is_null());
        figcap_aligner_free(a);
    }
}

#[test]
fn bleu_accumulator() {
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(figcap_bleu_new(true, &mut b), FigcapStatus::Ok);
        let mut s = FigcapBleuScore::default();
        assert_eq!(figcap_bleu_score(b, &mut s), FigcapStatus::InvalidArgument);
        for line in ["Fig. 2. SER performance at 4 BPCU.", "Loss over epochs"] {
            let upper = c(&line.to_uppercase());
            assert_eq!(figcap_bleu_add(b, upper.as_ptr(), c(line).as_ptr()), FigcapStatus::Ok);
        }
        assert_eq!(figcap_bleu_score(b, &mut s), FigcapStatus::Ok);
        assert!((s.score - 100.0).abs() < 1e-9);
        assert_eq!(s.brevity_penalty, 1.0);
        assert_eq!(s.hyp_len, s.ref_len);
        figcap_bleu_free(b);
    }
}

#[test]
fn text_helpers() {
    unsafe {
        let mut r = FigcapRouge::default();
        assert_eq!(figcap_rouge_l(c("the cat").as_ptr(), c("the cat sat").as_ptr(), &mut r), FigcapStatus::Ok);
        assert!((r.f1 - 0.8).abs() < 1e-12);

        let mut out = ptr::null_mut();
        assert_eq!(figcap_first_sentence(c("A. B.").as_ptr(), &mut out), FigcapStatus::Ok);
        assert_eq!(take(out), "A.");

        assert_eq!(
            figcap_normalize_caption(c("Accuracy at 4 BPCU").as_ptr(), false, &mut out),
            FigcapStatus::Ok
        );
        assert!(!take(out).contains('4'));
        figcap_string_free(ptr::null_mut());
    }
}

fn png_bytes() -> Vec<u8> {
    let img = image::RgbImage::from_pixel(40, 20, image::Rgb([255, 255, 255]));
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png).unwrap();
    buf.into_inner()
}

#[test]
fn tensor_handle() {
    unsafe {
        let png = png_bytes();
        let mut t = ptr::null_mut();
        assert_eq!(figcap_tensor_from_png(png.as_ptr(), png.len(), &mut t), FigcapStatus::Ok);
        let mut data = ptr::null();
        let mut len = 0usize;
        assert_eq!(figcap_tensor_data(t, &mut data, &mut len), FigcapStatus::Ok);
        assert_eq!(len, 3 * 224 * 224);
        let values = std::slice::from_raw_parts(data, len);
        let plane = 224 * 224;
        for ch in values.chunks(plane) {
            assert!(ch.iter().all(|v| (*v - ch[0]).abs() < 1e-5));
        }
        assert!((values[0] - 1.930_336).abs() < 1e-4);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.fct");
        let cpath = c(path.to_str().unwrap());
        assert_eq!(figcap_tensor_write(t, cpath.as_ptr()), FigcapStatus::Ok);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 602_128);
        let missing = c(dir.path().join("no/such/dir/t.fct").to_str().unwrap());
        assert_eq!(figcap_tensor_write(t, missing.as_ptr()), FigcapStatus::Io);
        figcap_tensor_free(t);

        let junk = b"junk";
        assert_eq!(figcap_tensor_from_png(junk.as_ptr(), junk.len(), &mut t), FigcapStatus::Decode);
        assert!(t.is_null());
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/figcap.h")
}

#[test]
fn header_declares_the_abi() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct FigcapAligner FigcapAligner;",
        "typedef struct FigcapBleu FigcapBleu;",
        "typedef struct FigcapTensor FigcapTensor;",
        "FIGCAP_STATUS_OK = 0",
        "figcap_aligner_new",
        "figcap_aligner_mask",
        "figcap_bleu_score",
        "figcap_rouge_l",
        "figcap_tensor_write",
        "figcap_last_error",
        "figcap_string_free",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "figcap.h"

int main(void) {
    FigcapAligner *a = NULL;
    if (figcap_aligner_new("ACGT", 2, -2, -3, -1, &a) != FIGCAP_STATUS_OK) return 1;
    FigcapAlignment r;
    if (figcap_aligner_align(a, "xxACGTxx", &r) != FIGCAP_STATUS_OK) return 2;
    figcap_aligner_free(a);
    if (r.score != 8 || r.target_start != 2 || r.target_end != 6) return 3;
    char *s = NULL;
    if (figcap_first_sentence("One. Two.", &s) != FIGCAP_STATUS_OK) return 4;
    int same = strcmp(s, "One.") == 0;
    figcap_string_free(s);
    if (!same) return 5;
    if (figcap_aligner_new("", 2, -2, -3, -1, &a) != FIGCAP_STATUS_INVALID_ARGUMENT) return 6;
    if (figcap_last_error() == NULL) return 7;
    puts("ok");
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler available; header compile check skipped");
        return;
    };
    assert!(status.success(), "header does not compile as C99");

    // Link against the static library when this build produced one.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libfigcap_ffi.a");
    if !lib.exists() {
        eprintln!("{} not found; link check skipped", lib.display());
        return;
    }
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
