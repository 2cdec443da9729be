#ifndef CHEMLM_H
#define CHEMLM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChemlmFormat {
  CHEMLM_FORMAT_XYZ = 0,
  CHEMLM_FORMAT_CIF = 1,
  CHEMLM_FORMAT_PDB = 2,
} ChemlmFormat;

typedef enum ChemlmKind {
  CHEMLM_KIND_MOLECULE = 0,
  CHEMLM_KIND_CRYSTAL = 1,
  CHEMLM_KIND_POCKET = 2,
} ChemlmKind;

typedef enum ChemlmStatus {
  CHEMLM_STATUS_OK = 0,
  CHEMLM_STATUS_NULL_POINTER = 1,
  CHEMLM_STATUS_INVALID_ARGUMENT = 2,
  CHEMLM_STATUS_IO = 3,
  CHEMLM_STATUS_PARSE = 4,
  CHEMLM_STATUS_TOKENIZE = 5,
  CHEMLM_STATUS_DECODE = 6,
  CHEMLM_STATUS_MODEL = 7,
  CHEMLM_STATUS_BUFFER_TOO_SMALL = 8,
  CHEMLM_STATUS_PANIC = 9,
} ChemlmStatus;

// Trained model weights.
typedef struct ChemlmModel ChemlmModel;

// Token sequences drawn from a model.
typedef struct ChemlmSamples ChemlmSamples;

// A parsed or decoded molecule, crystal or pocket.
typedef struct ChemlmStructure ChemlmStructure;

// A token vocabulary.
typedef struct ChemlmVocab ChemlmVocab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *chemlm_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *chemlm_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void chemlm_string_free(char *s);

// Parses file text in the given format.
//
// # Safety
// `text` must be a NUL-terminated string and `out_structure` a valid pointer.
enum ChemlmStatus chemlm_structure_parse(enum ChemlmFormat format,
                                         const char *text,
                                         struct ChemlmStructure **out_structure);

// Reads a `.xyz`, `.cif` or `.pdb` file.
//
// # Safety
// `path` must be a NUL-terminated string and `out_structure` a valid pointer.
enum ChemlmStatus chemlm_structure_read(const char *path, struct ChemlmStructure **out_structure);

// Serializes a structure in its native format with 1 to 3 decimal places.
//
// # Safety
// `s` must be a live structure handle and `out_text` a valid pointer.
enum ChemlmStatus chemlm_structure_write(const struct ChemlmStructure *s,
                                         uint8_t precision,
                                         char **out_text);

// # Safety
// `s` must be NULL or a handle from this library, not used afterwards.
void chemlm_structure_free(struct ChemlmStructure *s);

// # Safety
// `s` must be a live structure handle and `out_kind` a valid pointer.
enum ChemlmStatus chemlm_structure_kind(const struct ChemlmStructure *s, enum ChemlmKind *out_kind);

// # Safety
// `s` must be a live structure handle and `out_count` a valid pointer.
enum ChemlmStatus chemlm_structure_atom_count(const struct ChemlmStructure *s, size_t *out_count);

// Cartesian positions in Å as x0 y0 z0 x1 ... (3 values per atom).
//
// # Safety
// `buf` must hold `cap` doubles; `out_len` must be valid.
enum ChemlmStatus chemlm_structure_positions(const struct ChemlmStructure *s,
                                             double *buf,
                                             size_t cap,
                                             size_t *out_len);

// Canonical key used for uniqueness and novelty.
//
// # Safety
// `s` must be a live structure handle and `out_key` a valid pointer.
enum ChemlmStatus chemlm_structure_key(const struct ChemlmStructure *s, char **out_key);

// Validity: valence and connectivity for molecules, the 0.5 Å distance rule
// for crystals, residue completeness and contacts for pockets. When invalid
// and `out_reason` is not NULL, a reason string is returned there.
//
// # Safety
// `s` must be a live structure handle; `out_valid` must be valid.
enum ChemlmStatus chemlm_structure_is_valid(const struct ChemlmStructure *s,
                                            bool *out_valid,
                                            char **out_reason);

// Reads a vocabulary file written by `chemlm prepare`.
//
// # Safety
// `path` must be a NUL-terminated string and `out_vocab` a valid pointer.
enum ChemlmStatus chemlm_vocab_load(const char *path, struct ChemlmVocab **out_vocab);

// # Safety
// `v` must be NULL or a handle from this library, not used afterwards.
void chemlm_vocab_free(struct ChemlmVocab *v);

// # Safety
// `v` must be a live vocabulary handle and `out_len` a valid pointer.
enum ChemlmStatus chemlm_vocab_len(const struct ChemlmVocab *v, size_t *out_len);

// Token ids for a structure, bracketed by BOS and EOS. On
// `CHEMLM_STATUS_BUFFER_TOO_SMALL`, `out_len` holds the required length.
//
// # Safety
// `buf` must hold `cap` ids; the handles and `out_len` must be valid.
enum ChemlmStatus chemlm_encode(const struct ChemlmVocab *v,
                                const struct ChemlmStructure *s,
                                uint32_t *buf,
                                size_t cap,
                                size_t *out_len);

// # Safety
// `ids` must point to `len` ids; the handles must be valid.
enum ChemlmStatus chemlm_decode(const struct ChemlmVocab *v,
                                const uint32_t *ids,
                                size_t len,
                                struct ChemlmStructure **out_structure);

// Loads a model checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string and `out_model` a valid pointer.
enum ChemlmStatus chemlm_model_load(const char *path, struct ChemlmModel **out_model);

// # Safety
// `m` must be NULL or a handle from this library, not used afterwards.
void chemlm_model_free(struct ChemlmModel *m);

// Draws `n` sequences at the given temperature. Output depends only on the
// arguments, not on thread count.
//
// # Safety
// The handles and `out_samples` must be valid.
enum ChemlmStatus chemlm_sample(const struct ChemlmModel *m,
                                const struct ChemlmVocab *v,
                                size_t n,
                                double temperature,
                                uint64_t seed,
                                struct ChemlmSamples **out_samples);

// # Safety
// `s` must be a live samples handle and `out_count` a valid pointer.
enum ChemlmStatus chemlm_samples_count(const struct ChemlmSamples *s, size_t *out_count);

// Ids of sample `index`. `out_truncated` may be NULL.
//
// # Safety
// `buf` must hold `cap` ids; the handle and `out_len` must be valid.
enum ChemlmStatus chemlm_samples_get(const struct ChemlmSamples *s,
                                     size_t index,
                                     uint32_t *buf,
                                     size_t cap,
                                     size_t *out_len,
                                     bool *out_truncated);

// # Safety
// `s` must be NULL or a handle from this library, not used afterwards.
void chemlm_samples_free(struct ChemlmSamples *s);

// Earth mover's distance between two 1D empirical distributions.
//
// # Safety
// `a` and `b` must point to `na` and `nb` doubles.
enum ChemlmStatus chemlm_emd_1d(const double *a,
                                size_t na,
                                const double *b,
                                size_t nb,
                                double *out_distance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEMLM_H */
