#ifndef FIGCAP_H
#define FIGCAP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum FigcapStatus {
  FIGCAP_STATUS_OK = 0,
  FIGCAP_STATUS_NULL_POINTER = 1,
  FIGCAP_STATUS_INVALID_UTF8 = 2,
  FIGCAP_STATUS_INVALID_ARGUMENT = 3,
  FIGCAP_STATUS_VALIDATION = 4,
  FIGCAP_STATUS_IO = 5,
  FIGCAP_STATUS_DECODE = 6,
  FIGCAP_STATUS_FORMAT = 7,
  FIGCAP_STATUS_PANIC = 8,
} FigcapStatus;

// Striped Smith-Waterman profile of one query, reusable across targets.
typedef struct FigcapAligner FigcapAligner;

// Accumulates corpus BLEU statistics one segment at a time.
typedef struct FigcapBleu FigcapBleu;

// Preprocessed `3 × 224 × 224` image tensor.
typedef struct FigcapTensor FigcapTensor;

// Local alignment result. Spans are half-open char (code point) ranges.
typedef struct FigcapAlignment {
  uint32_t score;
  size_t target_start;
  size_t target_end;
  size_t query_start;
  size_t query_end;
} FigcapAlignment;

// Corpus BLEU summary; `precisions` are in [0, 1], `score` in [0, 100].
typedef struct FigcapBleuScore {
  double score;
  double precisions[4];
  double brevity_penalty;
  size_t hyp_len;
  size_t ref_len;
} FigcapBleuScore;

typedef struct FigcapRouge {
  double precision;
  double recall;
  double f1;
} FigcapRouge;

// Message of the last failed call on this thread, or NULL. Valid until the
// next figcap call on the same thread.
const char *figcap_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be NULL or a string produced by this library, freed once.
void figcap_string_free(char *s);

// Builds an aligner for `query` with affine gap scoring.
//
// # Safety
// `query` must be a valid C string and `out` a valid pointer.
enum FigcapStatus figcap_aligner_new(const char *query,
                                     int32_t match_score,
                                     int32_t mismatch,
                                     int32_t gap_open,
                                     int32_t gap_extend,
                                     struct FigcapAligner **out);

// Aligns the aligner's query against `target`.
//
// # Safety
// `aligner` must come from [`figcap_aligner_new`]; `target` must be a valid
// C string and `out` a valid pointer.
enum FigcapStatus figcap_aligner_align(const struct FigcapAligner *aligner,
                                       const char *target,
                                       struct FigcapAlignment *out);

// Masks every occurrence of the aligner's query in `text` that scores at
// least `threshold` of a perfect match. Writes the masked text and the number
// of masked spans.
//
// # Safety
// Pointers must be valid; `out_text` receives a string to free with
// [`figcap_string_free`]. `out_spans` may be NULL.
enum FigcapStatus figcap_aligner_mask(const struct FigcapAligner *aligner,
                                      const char *text,
                                      double threshold,
                                      char **out_text,
                                      size_t *out_spans);

// # Safety
// `aligner` must be NULL or come from [`figcap_aligner_new`], freed once.
void figcap_aligner_free(struct FigcapAligner *aligner);

// # Safety
// `out` must be a valid pointer.
enum FigcapStatus figcap_bleu_new(bool lowercase, struct FigcapBleu **out);

// # Safety
// `bleu` must come from [`figcap_bleu_new`]; strings must be valid.
enum FigcapStatus figcap_bleu_add(struct FigcapBleu *bleu,
                                  const char *hypothesis,
                                  const char *reference);

// Scores the segments added so far; fails on an empty corpus.
//
// # Safety
// `bleu` must come from [`figcap_bleu_new`]; `out` must be valid.
enum FigcapStatus figcap_bleu_score(const struct FigcapBleu *bleu, struct FigcapBleuScore *out);

// # Safety
// `bleu` must be NULL or come from [`figcap_bleu_new`], freed once.
void figcap_bleu_free(struct FigcapBleu *bleu);

// # Safety
// Strings must be valid; `out` must be valid.
enum FigcapStatus figcap_rouge_l(const char *hypothesis,
                                 const char *reference,
                                 struct FigcapRouge *out);

// Replaces numbers (and, when `advanced`, equations and bracketed spans)
// with placeholder tokens.
//
// # Safety
// `caption` must be valid; `out` receives a string to free with
// [`figcap_string_free`].
enum FigcapStatus figcap_normalize_caption(const char *caption, bool advanced, char **out);

// # Safety
// `text` must be valid; `out` receives a string to free with
// [`figcap_string_free`].
enum FigcapStatus figcap_first_sentence(const char *text, char **out);

// Decodes and preprocesses a PNG image.
//
// # Safety
// `png` must point to `len` readable bytes; `out` must be valid.
enum FigcapStatus figcap_tensor_from_png(const uint8_t *png, size_t len, struct FigcapTensor **out);

// Borrows the channel-major tensor values; valid while the tensor lives.
//
// # Safety
// `tensor` must come from [`figcap_tensor_from_png`]; out pointers must be valid.
enum FigcapStatus figcap_tensor_data(const struct FigcapTensor *tensor,
                                     const float **data,
                                     size_t *len);

// Writes the tensor to `path` in FCT1 format.
//
// # Safety
// `tensor` must come from [`figcap_tensor_from_png`]; `path` must be valid.
enum FigcapStatus figcap_tensor_write(const struct FigcapTensor *tensor, const char *path);

// # Safety
// `tensor` must be NULL or come from [`figcap_tensor_from_png`], freed once.
void figcap_tensor_free(struct FigcapTensor *tensor);

#endif  /* FIGCAP_H */
