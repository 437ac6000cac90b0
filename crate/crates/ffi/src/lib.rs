//! C ABI over the diovqa toolkit.
//!
//! Matrices and vocabularies are opaque heap handles released with their
//! `_free` function. Every fallible call returns a [`DiovqaStatus`]; on failure
//! [`diovqa_last_error`] describes the most recent error on the calling thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use diovqa::encoder::dof_report;
use diovqa::jsr::{block_reduce, classify_convergence, jsr_bounds, Classification, MatrixVocabulary};
use diovqa::matcore::{self, ComplexMatrix, C64};
use diovqa::sospoly::count_monomials;
use diovqa::vqasim::{vqa_objective, VqaInstance};
use diovqa::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiovqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BudgetExceeded = 3,
    NumericFailure = 4,
    Parse = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiovqaClassification {
    Converges = 0,
    Diverges = 1,
    #[default]
    Undecided = 2,
}

/// Square complex matrix.
pub struct DiovqaMatrix(ComplexMatrix);

/// Ordered set of equally sized matrices.
pub struct DiovqaVocabulary(Vec<ComplexMatrix>);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DiovqaJsrBounds {
    pub lower: f64,
    pub upper: f64,
    pub products: u64,
    pub classification: DiovqaClassification,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DiovqaStatus {
    match err {
        Error::BudgetExceeded { .. }
        | Error::EnumerationCapExceeded { .. }
        | Error::BudgetExhausted { .. }
        | Error::CapExceeded { .. } => DiovqaStatus::BudgetExceeded,
        Error::NonConvergence { .. }
        | Error::DegenerateSpectrum { .. }
        | Error::IllConditioned { .. }
        | Error::NumericIntegrity { .. } => DiovqaStatus::NumericFailure,
        Error::Parse(_) | Error::Json(_) => DiovqaStatus::Parse,
        _ => DiovqaStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic.
fn guard<F>(f: F) -> DiovqaStatus
where
    F: FnOnce() -> Result<(), (DiovqaStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DiovqaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            DiovqaStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DiovqaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DiovqaStatus, String) {
    (DiovqaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn matrix_ref<'a>(m: *const DiovqaMatrix, what: &str) -> Result<&'a ComplexMatrix, (DiovqaStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (DiovqaStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn diovqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a `dim`×`dim` matrix from row-major real and imaginary parts.
/// `im` may be null for a real matrix.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `dim*dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_matrix_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut DiovqaMatrix,
) -> DiovqaStatus {
    guard(|| {
        if re.is_null() {
            return Err(null("re"));
        }
        let len = dim.checked_mul(dim).ok_or_else(|| {
            (DiovqaStatus::InvalidArgument, "dimension overflows".to_string())
        })?;
        let re = std::slice::from_raw_parts(re, len);
        let entries = if im.is_null() {
            re.iter().map(|&r| C64::new(r, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect()
        };
        let m = ComplexMatrix::new(dim, entries).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(DiovqaMatrix(m))), "out")
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn diovqa_matrix_free(m: *mut DiovqaMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of `m`, or 0 for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn diovqa_matrix_dim(m: *const DiovqaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Copies the entries row-major into `re` and `im` (each `dim*dim` long).
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must be writable for `dim*dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn diovqa_matrix_entries(
    m: *const DiovqaMatrix,
    re: *mut f64,
    im: *mut f64,
) -> DiovqaStatus {
    guard(|| {
        let m = matrix_ref(m, "matrix")?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        for (k, z) in m.entries().iter().enumerate() {
            re.add(k).write(z.re);
            im.add(k).write(z.im);
        }
        Ok(())
    })
}

/// `out = exp(k·A)` for complex `k = k_re + i·k_im`.
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_matrix_exp(
    a: *const DiovqaMatrix,
    k_re: f64,
    k_im: f64,
    out: *mut *mut DiovqaMatrix,
) -> DiovqaStatus {
    guard(|| {
        let a = matrix_ref(a, "matrix")?;
        let e = matcore::matrix_exp(a, C64::new(k_re, k_im)).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(DiovqaMatrix(e))), "out")
    })
}

/// Largest singular value.
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_operator_norm(a: *const DiovqaMatrix, out: *mut f64) -> DiovqaStatus {
    guard(|| {
        let a = matrix_ref(a, "matrix")?;
        write_out(out, matcore::operator_norm(a), "out")
    })
}

/// Largest eigenvalue modulus.
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_spectral_radius(a: *const DiovqaMatrix, out: *mut f64) -> DiovqaStatus {
    guard(|| {
        let a = matrix_ref(a, "matrix")?;
        let r = matcore::spectral_radius(a).map_err(lib_err)?;
        write_out(out, r, "out")
    })
}

/// Empty vocabulary.
#[no_mangle]
pub extern "C" fn diovqa_vocabulary_new() -> *mut DiovqaVocabulary {
    Box::into_raw(Box::new(DiovqaVocabulary(Vec::new())))
}

/// Appends a copy of `m`.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn diovqa_vocabulary_push(
    v: *mut DiovqaVocabulary,
    m: *const DiovqaMatrix,
) -> DiovqaStatus {
    guard(|| {
        let v = v.as_mut().ok_or_else(|| null("vocabulary"))?;
        let m = matrix_ref(m, "matrix")?;
        if let Some(first) = v.0.first() {
            if first.dim() != m.dim() {
                return Err(lib_err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: m.dim(),
                }));
            }
        }
        v.0.push(m.clone());
        Ok(())
    })
}

/// # Safety
/// `v` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn diovqa_vocabulary_free(v: *mut DiovqaVocabulary) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Joint spectral radius bounds from products up to `depth` factors.
/// A nonzero `reduce` first replaces the vocabulary by its block reduction.
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_jsr_bounds(
    v: *const DiovqaVocabulary,
    depth: usize,
    cap: u64,
    margin: f64,
    reduce: i32,
    out: *mut DiovqaJsrBounds,
) -> DiovqaStatus {
    guard(|| {
        let v = v.as_ref().ok_or_else(|| null("vocabulary"))?;
        let mut vocab = MatrixVocabulary::new(v.0.clone(), None).map_err(lib_err)?;
        if reduce != 0 {
            vocab = block_reduce(&vocab);
        }
        let b = jsr_bounds(&vocab, depth, cap).map_err(lib_err)?;
        let classification = match classify_convergence(&b, margin) {
            Classification::Converges => DiovqaClassification::Converges,
            Classification::Diverges => DiovqaClassification::Diverges,
            Classification::Undecided => DiovqaClassification::Undecided,
        };
        write_out(
            out,
            DiovqaJsrBounds {
                lower: b.lower,
                upper: b.upper,
                products: b.products,
                classification,
            },
            "out",
        )
    })
}

/// Real degrees of freedom for `layers` generators in dimension `n`:
/// `out[0..4]` = state, observable, one generator, all generators.
///
/// # Safety
/// `out` must be writable for four values.
#[no_mangle]
pub unsafe extern "C" fn diovqa_dof(layers: u64, n: u64, out: *mut u64) -> DiovqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = dof_report(layers, n).map_err(lib_err)?;
        for (k, row) in r.rows.iter().take(4).enumerate() {
            out.add(k).write(row.dof);
        }
        Ok(())
    })
}

/// Number of monomials of total degree ≤ `degree` in `num_vars` variables.
/// Fails with `InvalidArgument` if the count does not fit in 64 bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_count_monomials(num_vars: u64, degree: u64, out: *mut u64) -> DiovqaStatus {
    guard(|| {
        let c = count_monomials(num_vars, degree);
        let v = u64::try_from(&c)
            .map_err(|_| (DiovqaStatus::InvalidArgument, format!("count {c} exceeds 64 bits")))?;
        write_out(out, v, "out")
    })
}

/// `⟨Ψ(φ)|O|Ψ(φ)⟩` for an instance given as JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string, `phi` must hold `len` doubles
/// (may be null when `len` is 0), `out` writable.
#[no_mangle]
pub unsafe extern "C" fn diovqa_vqa_objective_json(
    json: *const c_char,
    phi: *const f64,
    len: usize,
    out: *mut f64,
) -> DiovqaStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (DiovqaStatus::Parse, e.to_string()))?;
        let inst: VqaInstance =
            serde_json::from_str(text).map_err(|e| (DiovqaStatus::Parse, e.to_string()))?;
        let phi = if len == 0 {
            &[][..]
        } else if phi.is_null() {
            return Err(null("phi"));
        } else {
            std::slice::from_raw_parts(phi, len)
        };
        let v = vqa_objective(&inst, phi).map_err(lib_err)?;
        write_out(out, v, "out")
    })
}
