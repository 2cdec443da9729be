//! C interface to chemlm.
//!
//! Every function returns a [`ChemlmStatus`]. On failure the message is kept
//! per thread and can be read with [`chemlm_last_error`]. Objects are handed
//! out as opaque pointers and must be released with the matching `_free`
//! function. Strings returned through `char **` out-parameters are owned by
//! the caller and released with [`chemlm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chemlm::decimal::Precision;
use chemlm::formats::{self, FileDocument, Format};
use chemlm::geometry::cartesian_positions;
use chemlm::metrics::{
    canonical_key, crystal_structural_validity, emd_1d, molecule_validity, pocket_overlap_check,
    pocket_residue_check, ResidueCompositionTable, ValenceTable, DEFAULT_OVERLAP_THRESHOLD,
};
use chemlm::sample::{sample, SampleConfig, SampledSequence};
use chemlm::structure::{Structure, StructureKind};
use chemlm::tokenizer::{decode, encode, Vocabulary};
use chemlm::transformer::Checkpoint;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemlmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Tokenize = 5,
    Decode = 6,
    Model = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemlmFormat {
    Xyz = 0,
    Cif = 1,
    Pdb = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemlmKind {
    Molecule = 0,
    Crystal = 1,
    Pocket = 2,
}

/// A parsed or decoded molecule, crystal or pocket.
pub struct ChemlmStructure(Structure);

/// A token vocabulary.
pub struct ChemlmVocab(Vocabulary);

/// Trained model weights.
pub struct ChemlmModel(Checkpoint);

/// Token sequences drawn from a model.
pub struct ChemlmSamples(Vec<SampledSequence>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ChemlmStatus, String);

type FfiResult = Result<(), Failure>;

fn fail<T>(status: ChemlmStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> ChemlmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ChemlmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ChemlmStatus::Panic
        }
    }
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(ChemlmStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .map_or_else(|| fail(ChemlmStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(ChemlmStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(ChemlmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(ChemlmStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `src` into a caller buffer, always reporting the full length.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len_out: *mut usize) -> FfiResult {
    *out(len_out, "length output")? = src.len();
    if src.len() > cap {
        return fail(
            ChemlmStatus::BufferTooSmall,
            format!("need room for {} values, buffer holds {cap}", src.len()),
        );
    }
    if !src.is_empty() {
        if buf.is_null() {
            return fail(ChemlmStatus::NullPointer, "output buffer is null");
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).unwrap_or_default().into_raw()
}

fn box_out<T>(value: T, dst: &mut *mut T) {
    *dst = Box::into_raw(Box::new(value));
}

fn core_status(e: &chemlm::Error) -> ChemlmStatus {
    match e {
        chemlm::Error::Io { .. } => ChemlmStatus::Io,
        chemlm::Error::Parse(_) => ChemlmStatus::Parse,
        chemlm::Error::Tokenize(_) => ChemlmStatus::Tokenize,
        chemlm::Error::Decode(_) => ChemlmStatus::Decode,
        chemlm::Error::Model(_) | chemlm::Error::Sample(_) | chemlm::Error::Train(_) => ChemlmStatus::Model,
        _ => ChemlmStatus::InvalidArgument,
    }
}

fn core<T, E: Into<chemlm::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| {
        let e = e.into();
        Failure(core_status(&e), e.to_string())
    })
}

fn format_of(f: ChemlmFormat) -> Format {
    match f {
        ChemlmFormat::Xyz => Format::Xyz,
        ChemlmFormat::Cif => Format::Cif,
        ChemlmFormat::Pdb => Format::Pdb,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chemlm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn chemlm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn chemlm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses file text in the given format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out_structure` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_parse(
    format: ChemlmFormat,
    text: *const c_char,
    out_structure: *mut *mut ChemlmStructure,
) -> ChemlmStatus {
    guard(|| {
        let dst = out(out_structure, "structure output")?;
        let doc = FileDocument::new(format_of(format), self::text(text, "text")?);
        let s = core(formats::parse(&doc))?;
        box_out(ChemlmStructure(s), dst);
        Ok(())
    })
}

/// Reads a `.xyz`, `.cif` or `.pdb` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_structure` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_read(
    path: *const c_char,
    out_structure: *mut *mut ChemlmStructure,
) -> ChemlmStatus {
    guard(|| {
        let dst = out(out_structure, "structure output")?;
        let doc = core(FileDocument::read(Path::new(text(path, "path")?)))?;
        let s = core(formats::parse(&doc))?;
        box_out(ChemlmStructure(s), dst);
        Ok(())
    })
}

/// Serializes a structure in its native format with 1 to 3 decimal places.
///
/// # Safety
/// `s` must be a live structure handle and `out_text` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_write(
    s: *const ChemlmStructure,
    precision: u8,
    out_text: *mut *mut c_char,
) -> ChemlmStatus {
    guard(|| {
        let s = obj(s, "structure")?;
        let dst = out(out_text, "text output")?;
        let p = core(Precision::new(precision))?;
        *dst = owned_string(formats::write(&s.0, p).text);
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_free(s: *mut ChemlmStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live structure handle and `out_kind` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_kind(s: *const ChemlmStructure, out_kind: *mut ChemlmKind) -> ChemlmStatus {
    guard(|| {
        *out(out_kind, "kind output")? = match obj(s, "structure")?.0.kind() {
            StructureKind::Molecule => ChemlmKind::Molecule,
            StructureKind::Crystal => ChemlmKind::Crystal,
            StructureKind::Pocket => ChemlmKind::Pocket,
        };
        Ok(())
    })
}

/// # Safety
/// `s` must be a live structure handle and `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_atom_count(s: *const ChemlmStructure, out_count: *mut usize) -> ChemlmStatus {
    guard(|| {
        *out(out_count, "count output")? = obj(s, "structure")?.0.atom_count();
        Ok(())
    })
}

/// Cartesian positions in Å as x0 y0 z0 x1 ... (3 values per atom).
///
/// # Safety
/// `buf` must hold `cap` doubles; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_positions(
    s: *const ChemlmStructure,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> ChemlmStatus {
    guard(|| {
        let points = core(cartesian_positions(&obj(s, "structure")?.0))?;
        let flat: Vec<f64> = points.iter().flatten().copied().collect();
        copy_out(&flat, buf, cap, out_len)
    })
}

/// Canonical key used for uniqueness and novelty.
///
/// # Safety
/// `s` must be a live structure handle and `out_key` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_key(s: *const ChemlmStructure, out_key: *mut *mut c_char) -> ChemlmStatus {
    guard(|| {
        let s = obj(s, "structure")?;
        *out(out_key, "key output")? = owned_string(canonical_key(&s.0));
        Ok(())
    })
}

/// Validity: valence and connectivity for molecules, the 0.5 Å distance rule
/// for crystals, residue completeness and contacts for pockets. When invalid
/// and `out_reason` is not NULL, a reason string is returned there.
///
/// # Safety
/// `s` must be a live structure handle; `out_valid` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chemlm_structure_is_valid(
    s: *const ChemlmStructure,
    out_valid: *mut bool,
    out_reason: *mut *mut c_char,
) -> ChemlmStatus {
    guard(|| {
        let s = obj(s, "structure")?;
        let valid = out(out_valid, "validity output")?;
        let (ok, reason) = match &s.0 {
            Structure::Molecule(m) => {
                let v = core(molecule_validity(m, ValenceTable::standard()))?;
                (v.valid, v.reason)
            }
            Structure::Crystal(c) => {
                let v = core(crystal_structural_validity(c))?;
                (v.valid, v.reason)
            }
            Structure::Pocket(p) => {
                let r = core(pocket_residue_check(p, ResidueCompositionTable::standard()))?;
                if r.valid {
                    let v = core(pocket_overlap_check(p, DEFAULT_OVERLAP_THRESHOLD))?;
                    (v.valid, v.reason)
                } else {
                    (false, Some(r.reasons.join("; ")))
                }
            }
        };
        *valid = ok;
        if let Some(dst) = out_reason.as_mut() {
            *dst = reason.filter(|_| !ok).map_or(std::ptr::null_mut(), owned_string);
        }
        Ok(())
    })
}

/// Reads a vocabulary file written by `chemlm prepare`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_vocab` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_vocab_load(path: *const c_char, out_vocab: *mut *mut ChemlmVocab) -> ChemlmStatus {
    guard(|| {
        let dst = out(out_vocab, "vocabulary output")?;
        let v = core(Vocabulary::load(Path::new(text(path, "path")?)))?;
        box_out(ChemlmVocab(v), dst);
        Ok(())
    })
}

/// # Safety
/// `v` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chemlm_vocab_free(v: *mut ChemlmVocab) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `v` must be a live vocabulary handle and `out_len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_vocab_len(v: *const ChemlmVocab, out_len: *mut usize) -> ChemlmStatus {
    guard(|| {
        *out(out_len, "length output")? = obj(v, "vocabulary")?.0.len();
        Ok(())
    })
}

/// Token ids for a structure, bracketed by BOS and EOS. On
/// `CHEMLM_STATUS_BUFFER_TOO_SMALL`, `out_len` holds the required length.
///
/// # Safety
/// `buf` must hold `cap` ids; the handles and `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chemlm_encode(
    v: *const ChemlmVocab,
    s: *const ChemlmStructure,
    buf: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> ChemlmStatus {
    guard(|| {
        let seq = core(encode(&obj(s, "structure")?.0, &obj(v, "vocabulary")?.0))?;
        copy_out(&seq.ids, buf, cap, out_len)
    })
}

/// # Safety
/// `ids` must point to `len` ids; the handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn chemlm_decode(
    v: *const ChemlmVocab,
    ids: *const u32,
    len: usize,
    out_structure: *mut *mut ChemlmStructure,
) -> ChemlmStatus {
    guard(|| {
        let dst = out(out_structure, "structure output")?;
        let s = core(decode(slice(ids, len, "ids")?, &obj(v, "vocabulary")?.0))?;
        box_out(ChemlmStructure(s), dst);
        Ok(())
    })
}

/// Loads a model checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_model_load(path: *const c_char, out_model: *mut *mut ChemlmModel) -> ChemlmStatus {
    guard(|| {
        let dst = out(out_model, "model output")?;
        let ck = core(Checkpoint::load(Path::new(text(path, "path")?)))?;
        box_out(ChemlmModel(ck), dst);
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chemlm_model_free(m: *mut ChemlmModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Draws `n` sequences at the given temperature. Output depends only on the
/// arguments, not on thread count.
///
/// # Safety
/// The handles and `out_samples` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chemlm_sample(
    m: *const ChemlmModel,
    v: *const ChemlmVocab,
    n: usize,
    temperature: f64,
    seed: u64,
    out_samples: *mut *mut ChemlmSamples,
) -> ChemlmStatus {
    guard(|| {
        let dst = out(out_samples, "samples output")?;
        let cfg = SampleConfig {
            n_samples: n,
            temperature,
            max_len: None,
            seed,
        };
        let drawn = core(sample(&obj(m, "model")?.0, &obj(v, "vocabulary")?.0, &cfg))?;
        box_out(ChemlmSamples(drawn), dst);
        Ok(())
    })
}

/// # Safety
/// `s` must be a live samples handle and `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chemlm_samples_count(s: *const ChemlmSamples, out_count: *mut usize) -> ChemlmStatus {
    guard(|| {
        *out(out_count, "count output")? = obj(s, "samples")?.0.len();
        Ok(())
    })
}

/// Ids of sample `index`. `out_truncated` may be NULL.
///
/// # Safety
/// `buf` must hold `cap` ids; the handle and `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn chemlm_samples_get(
    s: *const ChemlmSamples,
    index: usize,
    buf: *mut u32,
    cap: usize,
    out_len: *mut usize,
    out_truncated: *mut bool,
) -> ChemlmStatus {
    guard(|| {
        let all = &obj(s, "samples")?.0;
        let Some(one) = all.get(index) else {
            return fail(ChemlmStatus::InvalidArgument, format!("index {index} out of {}", all.len()));
        };
        if let Some(t) = out_truncated.as_mut() {
            *t = one.truncated;
        }
        copy_out(&one.tokens.ids, buf, cap, out_len)
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chemlm_samples_free(s: *mut ChemlmSamples) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Earth mover's distance between two 1D empirical distributions.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` doubles.
#[no_mangle]
pub unsafe extern "C" fn chemlm_emd_1d(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_distance: *mut f64,
) -> ChemlmStatus {
    guard(|| {
        let d = core(emd_1d(slice(a, na, "a")?, slice(b, nb, "b")?))?;
        *out(out_distance, "distance output")? = d;
        Ok(())
    })
}
