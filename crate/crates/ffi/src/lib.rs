//! C ABI over the figcap toolkit.
//!
//! Every fallible function returns a [`FigcapStatus`]; on failure the message
//! is available from [`figcap_last_error`] on the same thread. Strings are
//! NUL-terminated UTF-8. Strings returned through `char **` out-parameters are
//! owned by the caller and released with [`figcap_string_free`]. Handles are
//! opaque and released with their own `*_free` function; passing NULL to a
//! `*_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use figcap::align::{mask_caption, ScoringParams, StripedProfile};
use figcap::imageprep::{preprocess_image, write_tensor, ImageTensor};
use figcap::metrics::{rouge_l, BleuAccumulator};
use figcap::textprep::{first_sentence, normalize_caption, NormalizationLevel};
use figcap::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigcapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Validation = 4,
    Io = 5,
    Decode = 6,
    Format = 7,
    Panic = 8,
}

impl From<&Error> for FigcapStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => FigcapStatus::Io,
            Error::Validation { .. } | Error::Parse { .. } | Error::Alignment { .. } => {
                FigcapStatus::Validation
            }
            Error::Decode(_) => FigcapStatus::Decode,
            Error::Format(_) => FigcapStatus::Format,
            Error::Argument(_) | Error::FigureName(_) => FigcapStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(FigcapStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(FigcapStatus::from(&e), e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> FigcapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FigcapStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FigcapStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FigcapStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FigcapStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn owned_string(s: &str) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(FigcapStatus::InvalidArgument, "result contains NUL".into()))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next figcap call on the same thread.
#[no_mangle]
pub extern "C" fn figcap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string produced by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn figcap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Local alignment result. Spans are half-open char (code point) ranges.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FigcapAlignment {
    pub score: u32,
    pub target_start: usize,
    pub target_end: usize,
    pub query_start: usize,
    pub query_end: usize,
}

/// Striped Smith-Waterman profile of one query, reusable across targets.
pub struct FigcapAligner {
    query: String,
    profile: StripedProfile,
    params: ScoringParams,
}

/// Builds an aligner for `query` with affine gap scoring.
///
/// # Safety
/// `query` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn figcap_aligner_new(
    query: *const c_char,
    match_score: i32,
    mismatch: i32,
    gap_open: i32,
    gap_extend: i32,
    out: *mut *mut FigcapAligner,
) -> FigcapStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let query = str_arg(query, "query")?;
        let params = ScoringParams::new(match_score, mismatch, gap_open, gap_extend)?;
        let chars: Vec<char> = query.chars().collect();
        let profile = StripedProfile::new(&chars, params)?;
        *out = Box::into_raw(Box::new(FigcapAligner {
            query: query.to_string(),
            profile,
            params,
        }));
        Ok(())
    })
}

/// Aligns the aligner's query against `target`.
///
/// # Safety
/// `aligner` must come from [`figcap_aligner_new`]; `target` must be a valid
/// C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn figcap_aligner_align(
    aligner: *const FigcapAligner,
    target: *const c_char,
    out: *mut FigcapAlignment,
) -> FigcapStatus {
    guard(|| {
        let aligner = aligner.as_ref().ok_or_else(|| null("aligner"))?;
        let target = str_arg(target, "target")?;
        let out = out_ref(out, "out")?;
        let chars: Vec<char> = target.chars().collect();
        let a = aligner.profile.align(&chars);
        *out = FigcapAlignment {
            score: a.score,
            target_start: a.target_span.start,
            target_end: a.target_span.end,
            query_start: a.query_span.start,
            query_end: a.query_span.end,
        };
        Ok(())
    })
}

/// Masks every occurrence of the aligner's query in `text` that scores at
/// least `threshold` of a perfect match. Writes the masked text and the number
/// of masked spans.
///
/// # Safety
/// Pointers must be valid; `out_text` receives a string to free with
/// [`figcap_string_free`]. `out_spans` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn figcap_aligner_mask(
    aligner: *const FigcapAligner,
    text: *const c_char,
    threshold: f64,
    out_text: *mut *mut c_char,
    out_spans: *mut usize,
) -> FigcapStatus {
    guard(|| {
        let aligner = aligner.as_ref().ok_or_else(|| null("aligner"))?;
        let text = str_arg(text, "text")?;
        let out_text = out_ref(out_text, "out_text")?;
        *out_text = ptr::null_mut();
        let r = mask_caption(text, &aligner.query, &aligner.params, threshold)?;
        *out_text = owned_string(&r.masked_text)?;
        if let Some(n) = out_spans.as_mut() {
            *n = r.spans.len();
        }
        Ok(())
    })
}

/// # Safety
/// `aligner` must be NULL or come from [`figcap_aligner_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn figcap_aligner_free(aligner: *mut FigcapAligner) {
    if !aligner.is_null() {
        drop(Box::from_raw(aligner));
    }
}

/// Corpus BLEU summary; `precisions` are in [0, 1], `score` in [0, 100].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FigcapBleuScore {
    pub score: f64,
    pub precisions: [f64; 4],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

/// Accumulates corpus BLEU statistics one segment at a time.
pub struct FigcapBleu {
    inner: BleuAccumulator,
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn figcap_bleu_new(lowercase: bool, out: *mut *mut FigcapBleu) -> FigcapStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(FigcapBleu {
            inner: BleuAccumulator::new(lowercase),
        }));
        Ok(())
    })
}

/// # Safety
/// `bleu` must come from [`figcap_bleu_new`]; strings must be valid.
#[no_mangle]
pub unsafe extern "C" fn figcap_bleu_add(
    bleu: *mut FigcapBleu,
    hypothesis: *const c_char,
    reference: *const c_char,
) -> FigcapStatus {
    guard(|| {
        let bleu = bleu.as_mut().ok_or_else(|| null("bleu"))?;
        let h = str_arg(hypothesis, "hypothesis")?;
        let r = str_arg(reference, "reference")?;
        bleu.inner.add(h, r);
        Ok(())
    })
}

/// Scores the segments added so far; fails on an empty corpus.
///
/// # Safety
/// `bleu` must come from [`figcap_bleu_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn figcap_bleu_score(bleu: *const FigcapBleu, out: *mut FigcapBleuScore) -> FigcapStatus {
    guard(|| {
        let bleu = bleu.as_ref().ok_or_else(|| null("bleu"))?;
        let out = out_ref(out, "out")?;
        if bleu.inner.segments() == 0 {
            return Err(Error::Argument("empty corpus".into()).into());
        }
        let s = bleu.inner.score();
        *out = FigcapBleuScore {
            score: s.score,
            precisions: s.precisions,
            brevity_penalty: s.brevity_penalty,
            hyp_len: s.hyp_len,
            ref_len: s.ref_len,
        };
        Ok(())
    })
}

/// # Safety
/// `bleu` must be NULL or come from [`figcap_bleu_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn figcap_bleu_free(bleu: *mut FigcapBleu) {
    if !bleu.is_null() {
        drop(Box::from_raw(bleu));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FigcapRouge {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// # Safety
/// Strings must be valid; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn figcap_rouge_l(
    hypothesis: *const c_char,
    reference: *const c_char,
    out: *mut FigcapRouge,
) -> FigcapStatus {
    guard(|| {
        let h = str_arg(hypothesis, "hypothesis")?;
        let r = str_arg(reference, "reference")?;
        let out = out_ref(out, "out")?;
        let s = rouge_l(h, r);
        *out = FigcapRouge {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}

/// Replaces numbers (and, when `advanced`, equations and bracketed spans)
/// with placeholder tokens.
///
/// # Safety
/// `caption` must be valid; `out` receives a string to free with
/// [`figcap_string_free`].
#[no_mangle]
pub unsafe extern "C" fn figcap_normalize_caption(
    caption: *const c_char,
    advanced: bool,
    out: *mut *mut c_char,
) -> FigcapStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let caption = str_arg(caption, "caption")?;
        let level = if advanced {
            NormalizationLevel::Advanced
        } else {
            NormalizationLevel::Basic
        };
        *out = owned_string(&normalize_caption(caption, level))?;
        Ok(())
    })
}

/// # Safety
/// `text` must be valid; `out` receives a string to free with
/// [`figcap_string_free`].
#[no_mangle]
pub unsafe extern "C" fn figcap_first_sentence(text: *const c_char, out: *mut *mut c_char) -> FigcapStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        *out = owned_string(first_sentence(text))?;
        Ok(())
    })
}

/// Preprocessed `3 × 224 × 224` image tensor.
pub struct FigcapTensor {
    inner: ImageTensor,
}

/// Decodes and preprocesses a PNG image.
///
/// # Safety
/// `png` must point to `len` readable bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn figcap_tensor_from_png(
    png: *const u8,
    len: usize,
    out: *mut *mut FigcapTensor,
) -> FigcapStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if png.is_null() {
            return Err(null("png"));
        }
        let bytes = std::slice::from_raw_parts(png, len);
        let inner = preprocess_image(bytes)?;
        *out = Box::into_raw(Box::new(FigcapTensor { inner }));
        Ok(())
    })
}

/// Borrows the channel-major tensor values; valid while the tensor lives.
///
/// # Safety
/// `tensor` must come from [`figcap_tensor_from_png`]; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn figcap_tensor_data(
    tensor: *const FigcapTensor,
    data: *mut *const f32,
    len: *mut usize,
) -> FigcapStatus {
    guard(|| {
        let t = tensor.as_ref().ok_or_else(|| null("tensor"))?;
        let data = out_ref(data, "data")?;
        let len = out_ref(len, "len")?;
        *data = t.inner.data().as_ptr();
        *len = t.inner.data().len();
        Ok(())
    })
}

/// Writes the tensor to `path` in FCT1 format.
///
/// # Safety
/// `tensor` must come from [`figcap_tensor_from_png`]; `path` must be valid.
#[no_mangle]
pub unsafe extern "C" fn figcap_tensor_write(tensor: *const FigcapTensor, path: *const c_char) -> FigcapStatus {
    guard(|| {
        let t = tensor.as_ref().ok_or_else(|| null("tensor"))?;
        let path = str_arg(path, "path")?;
        write_tensor(&t.inner, Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `tensor` must be NULL or come from [`figcap_tensor_from_png`], freed once.
#[no_mangle]
pub unsafe extern "C" fn figcap_tensor_free(tensor: *mut FigcapTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}
