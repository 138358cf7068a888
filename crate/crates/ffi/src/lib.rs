//! C ABI over `grasstensor`: opaque handles, status codes, caller-owned
//! buffers. Every function returns a [`GtStatus`]; the message of the last
//! failure on the calling thread is available from [`gt_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::os::raw::c_int;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use grasstensor::analysis;
use grasstensor::critical::{self, CriticalProblem};
use grasstensor::grassmann::{self, GrassmannTensor};
use grasstensor::multiview::{self, Camera, Profile};
use nalgebra::{DMatrix, DVector};
use grasstensor::reconstruction::{self, RecoveryOptions};
use grasstensor::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtStatus {
    Ok = 0,
    NullPointer = 1,
    BufferTooSmall = 2,
    Panic = 3,
    InvalidInput = 10,
    ShapeMismatch = 11,
    InvalidProfile = 12,
    RankDeficient = 13,
    PointAtCenter = 14,
    CentersIntersect = 15,
    GeneralityViolated = 16,
    BoundViolated = 17,
    ConvergenceFailure = 18,
    AmbiguousReconstruction = 19,
    NotOnLocus = 20,
    NoConjugate = 21,
    ShortSample = 22,
    Underdetermined = 23,
    /// Any other library error; see [`gt_last_error`].
    Other = 99,
}

fn status_of(e: &Error) -> GtStatus {
    match e {
        Error::InvalidInput(_) | Error::EmptyInput => GtStatus::InvalidInput,
        Error::ShapeMismatch(_) => GtStatus::ShapeMismatch,
        Error::InvalidProfile(_) => GtStatus::InvalidProfile,
        Error::RankDeficient(_) | Error::RankDeficientBasis => GtStatus::RankDeficient,
        Error::PointAtCenter => GtStatus::PointAtCenter,
        Error::CentersIntersect => GtStatus::CentersIntersect,
        Error::GeneralityViolated(_) | Error::GeneralPositionViolated(_) | Error::NoInvertibleBlock => {
            GtStatus::GeneralityViolated
        }
        Error::BoundViolated(_) => GtStatus::BoundViolated,
        Error::ConvergenceFailure(_) => GtStatus::ConvergenceFailure,
        Error::AmbiguousReconstruction => GtStatus::AmbiguousReconstruction,
        Error::NotOnLocus => GtStatus::NotOnLocus,
        Error::NoConjugate(_) => GtStatus::NoConjugate,
        Error::ShortSample { .. } => GtStatus::ShortSample,
        Error::Underdetermined { .. } => GtStatus::Underdetermined,
        _ => GtStatus::Other,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Fail {
    Status(GtStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null() -> Fail {
    Fail::Status(GtStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GtStatus::Ok,
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(format!("{}: {e}", e.code()));
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GtStatus::Panic
        }
    }
}

unsafe fn view<'a, T>(ptr: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(null)
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(null)
}

unsafe fn write_buffer(src: &[f64], buf: *mut f64, buf_len: usize) -> Result<(), Fail> {
    if buf_len < src.len() {
        return Err(Fail::Status(
            GtStatus::BufferTooSmall,
            format!("buffer holds {buf_len} values, {} needed", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null());
    }
    slice::from_raw_parts_mut(buf, src.len()).copy_from_slice(src);
    Ok(())
}

fn to_usize(v: &[u32]) -> Vec<usize> {
    v.iter().map(|&x| x as usize).collect()
}

/// A list of cameras on one scene space.
pub struct GtCameras {
    cams: Vec<Camera>,
}

pub struct GtTensor {
    tensor: GrassmannTensor,
}

pub struct GtProblem {
    problem: CriticalProblem,
}

/// Name of a status code, as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gt_status_name(status: GtStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        GtStatus::Ok => b"Ok\0",
        GtStatus::NullPointer => b"NullPointer\0",
        GtStatus::BufferTooSmall => b"BufferTooSmall\0",
        GtStatus::Panic => b"Panic\0",
        GtStatus::InvalidInput => b"InvalidInput\0",
        GtStatus::ShapeMismatch => b"ShapeMismatch\0",
        GtStatus::InvalidProfile => b"InvalidProfile\0",
        GtStatus::RankDeficient => b"RankDeficient\0",
        GtStatus::PointAtCenter => b"PointAtCenter\0",
        GtStatus::CentersIntersect => b"CentersIntersect\0",
        GtStatus::GeneralityViolated => b"GeneralityViolated\0",
        GtStatus::BoundViolated => b"BoundViolated\0",
        GtStatus::ConvergenceFailure => b"ConvergenceFailure\0",
        GtStatus::AmbiguousReconstruction => b"AmbiguousReconstruction\0",
        GtStatus::NotOnLocus => b"NotOnLocus\0",
        GtStatus::NoConjugate => b"NoConjugate\0",
        GtStatus::ShortSample => b"ShortSample\0",
        GtStatus::Underdetermined => b"Underdetermined\0",
        GtStatus::Other => b"Other\0",
    };
    s.as_ptr() as *const c_char
}

/// Message of the last failure on this thread; valid until the next call
/// that fails on the same thread.
#[no_mangle]
pub extern "C" fn gt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Cameras from row-major matrices concatenated in `data`; camera `j` is
/// `(h_list[j]+1) × (k+1)`.
///
/// # Safety
/// `h_list` must point to `n` values, `data` to `data_len` values and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_cameras_new(
    k: u32,
    h_list: *const u32,
    n: usize,
    data: *const f64,
    data_len: usize,
    out_handle: *mut *mut GtCameras,
) -> GtStatus {
    guard(|| {
        let h = to_usize(view(h_list, n)?);
        let data = view(data, data_len)?;
        let k = k as usize;
        let needed: usize = h.iter().map(|&hj| (hj + 1) * (k + 1)).sum();
        if needed != data.len() {
            return Err(Fail::Lib(Error::ShapeMismatch(format!(
                "{} values given, {needed} needed",
                data.len()
            ))));
        }
        let mut cams = Vec::with_capacity(n);
        let mut off = 0;
        for &hj in &h {
            let len = (hj + 1) * (k + 1);
            let m = DMatrix::from_row_slice(hj + 1, k + 1, &data[off..off + len]);
            cams.push(Camera::with_dims(k, hj, m)?);
            off += len;
        }
        *out(out_handle)? = Box::into_raw(Box::new(GtCameras { cams }));
        Ok(())
    })
}

/// Seeded cameras in general position.
///
/// # Safety
/// `h_list` must point to `n` values and `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_cameras_sample(
    k: u32,
    h_list: *const u32,
    n: usize,
    seed: u64,
    out_handle: *mut *mut GtCameras,
) -> GtStatus {
    guard(|| {
        let h = to_usize(view(h_list, n)?);
        let cams = multiview::sample_general_cameras(k as usize, &h, seed)?;
        *out(out_handle)? = Box::into_raw(Box::new(GtCameras { cams }));
        Ok(())
    })
}

/// Zero for a null handle.
///
/// # Safety
/// `cams` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gt_cameras_count(cams: *const GtCameras) -> usize {
    cams.as_ref().map_or(0, |c| c.cams.len())
}

/// Row-major entries of camera `index`; `buf_len` must be at least
/// `(h+1)(k+1)`.
///
/// # Safety
/// `cams` must be a live handle and `buf` must hold `buf_len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_cameras_copy(
    cams: *const GtCameras,
    index: usize,
    buf: *mut f64,
    buf_len: usize,
) -> GtStatus {
    guard(|| {
        let c = handle(cams)?;
        let cam = c.cams.get(index).ok_or_else(|| {
            Fail::Status(GtStatus::InvalidInput, format!("no camera {index}"))
        })?;
        let m = cam.matrix();
        let rows: Vec<f64> = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect();
        write_buffer(&rows, buf, buf_len)
    })
}

/// # Safety
/// `cams` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gt_cameras_free(cams: *mut GtCameras) {
    if !cams.is_null() {
        drop(Box::from_raw(cams));
    }
}

/// # Safety
/// `cams` must be a live handle, `profile` must point to one value per
/// camera and `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_tensor_build(
    cams: *const GtCameras,
    profile: *const u32,
    n: usize,
    out_handle: *mut *mut GtTensor,
) -> GtStatus {
    guard(|| {
        let c = handle(cams)?;
        let alphas = to_usize(view(profile, n)?);
        let first = c.cams.first().ok_or(Error::EmptyInput)?;
        let h: Vec<usize> = c.cams.iter().map(|x| x.h()).collect();
        let p = Profile::new(alphas, first.k(), &h)?;
        let tensor = grassmann::build_tensor(&c.cams, &p)?;
        *out(out_handle)? = Box::into_raw(Box::new(GtTensor { tensor }));
        Ok(())
    })
}

/// Zero for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gt_tensor_len(t: *const GtTensor) -> usize {
    t.as_ref().map_or(0, |t| t.tensor.entries().len())
}

/// Row-major entries (last axis fastest).
///
/// # Safety
/// `t` must be a live handle and `buf` must hold `buf_len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_tensor_copy_entries(t: *const GtTensor, buf: *mut f64, buf_len: usize) -> GtStatus {
    guard(|| write_buffer(handle(t)?.tensor.entries().data(), buf, buf_len))
}

/// Sign- and scale-invariant distance `1 − |cos|`.
///
/// # Safety
/// `a` and `b` must be live handles and `distance` writable.
#[no_mangle]
pub unsafe extern "C" fn gt_tensor_distance(a: *const GtTensor, b: *const GtTensor, distance: *mut f64) -> GtStatus {
    guard(|| {
        *out(distance)? = grassmann::tensor_distance(&handle(a)?.tensor, &handle(b)?.tensor)?;
        Ok(())
    })
}

/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gt_tensor_free(t: *mut GtTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Cameras (first one `[I | 0]`) reproducing a tensor; `distance` receives
/// the tensor distance of the fit.
///
/// # Safety
/// `t` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_recover_cameras(
    t: *const GtTensor,
    seed: u64,
    out_handle: *mut *mut GtCameras,
    distance: *mut f64,
) -> GtStatus {
    guard(|| {
        let opts = RecoveryOptions { seed, ..RecoveryOptions::default() };
        let rec = reconstruction::recover_cameras(&handle(t)?.tensor, &opts)?;
        *out(distance)? = rec.distance;
        *out(out_handle)? = Box::into_raw(Box::new(GtCameras { cams: rec.cameras }));
        Ok(())
    })
}

/// # Safety
/// `rank` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_bifocal_rank(k: u32, h1: u32, h2: u32, a1: u32, a2: u32, rank: *mut u64) -> GtStatus {
    guard(|| {
        *out(rank)? = analysis::bifocal_rank_formula(k as usize, h1 as usize, h2 as usize, a1 as usize, a2 as usize)?;
        Ok(())
    })
}

/// # Safety
/// `h` and `profile` must point to three values; `rank` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_trifocal_rank(k: u32, h: *const u32, profile: *const u32, rank: *mut u64) -> GtStatus {
    guard(|| {
        let h = to_usize(view(h, 3)?);
        let a = to_usize(view(profile, 3)?);
        *out(rank)? = analysis::trifocal_rank_formula(k as usize, [h[0], h[1], h[2]], [a[0], a[1], a[2]])?;
        Ok(())
    })
}

/// # Safety
/// `h_list` must point to `n` values; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_variety_dimension(k: u32, h_list: *const u32, n: usize, dim: *mut i64) -> GtStatus {
    guard(|| {
        *out(dim)? = grassmann::variety_dimension(k as usize, &to_usize(view(h_list, n)?))?;
        Ok(())
    })
}

/// # Safety
/// `h_list` must point to `n` values; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_expected_dimension(k: u32, h_list: *const u32, n: usize, dim: *mut i64) -> GtStatus {
    guard(|| {
        *out(dim)? = critical::expected_dimension(n, k as usize, &to_usize(view(h_list, n)?))?;
        Ok(())
    })
}

/// # Safety
/// `h_list` must point to `n` values; `degree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_expected_degree(k: u32, h_list: *const u32, n: usize, degree: *mut u64) -> GtStatus {
    guard(|| {
        *out(degree)? = critical::expected_degree(n, k as usize, &to_usize(view(h_list, n)?))?;
        Ok(())
    })
}

/// A critical problem from two camera lists. The handles stay owned by the
/// caller.
///
/// # Safety
/// `p` and `q` must be live handles and `out_handle` writable.
#[no_mangle]
pub unsafe extern "C" fn gt_problem_new(p: *const GtCameras, q: *const GtCameras, out_handle: *mut *mut GtProblem) -> GtStatus {
    guard(|| {
        let problem = CriticalProblem::new(handle(p)?.cams.clone(), handle(q)?.cams.clone())?;
        *out(out_handle)? = Box::into_raw(Box::new(GtProblem { problem }));
        Ok(())
    })
}

/// # Safety
/// `h_list` must point to `n` values and `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_problem_sample(
    k: u32,
    h_list: *const u32,
    n: usize,
    seed: u64,
    out_handle: *mut *mut GtProblem,
) -> GtStatus {
    guard(|| {
        let problem = CriticalProblem::sample(k as usize, &to_usize(view(h_list, n)?), seed)?;
        *out(out_handle)? = Box::into_raw(Box::new(GtProblem { problem }));
        Ok(())
    })
}

/// # Safety
/// `prob` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gt_problem_free(prob: *mut GtProblem) {
    if !prob.is_null() {
        drop(Box::from_raw(prob));
    }
}

/// Rank-drop membership of `x` (length `k+1`).
///
/// # Safety
/// `prob` must be a live handle, `x` must hold `len` values and the out
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_critical_membership(
    prob: *const GtProblem,
    x: *const f64,
    len: usize,
    tol: f64,
    is_member: *mut c_int,
    rank_gap: *mut usize,
) -> GtStatus {
    guard(|| {
        let point = DVector::from_column_slice(view(x, len)?);
        let m = critical::critical_membership(&handle(prob)?.problem, &point, tol)?;
        *out(is_member)? = c_int::from(m.is_member);
        *out(rank_gap)? = m.rank_gap;
        Ok(())
    })
}

/// `count` seeded points of the locus, written consecutively (each of
/// length `k+1`) into `buf`.
///
/// # Safety
/// `prob` must be a live handle and `buf` must hold `buf_len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_critical_sample(
    prob: *const GtProblem,
    count: usize,
    seed: u64,
    buf: *mut f64,
    buf_len: usize,
) -> GtStatus {
    guard(|| {
        let p = &handle(prob)?.problem;
        let need = count * (p.k() + 1);
        if buf_len < need {
            return Err(Fail::Status(
                GtStatus::BufferTooSmall,
                format!("buffer holds {buf_len} values, {need} needed"),
            ));
        }
        let samples = critical::sample_critical_points(p, count, seed)?;
        let flat: Vec<f64> = samples.iter().flat_map(|s| s.point.iter().copied()).collect();
        write_buffer(&flat, buf, buf_len)
    })
}

/// Conjugate point of a critical `x`, written into `y` (length `k+1`).
///
/// # Safety
/// `prob` must be a live handle; `x` and `y` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_conjugate_point(prob: *const GtProblem, x: *const f64, len: usize, y: *mut f64) -> GtStatus {
    guard(|| {
        let point = DVector::from_column_slice(view(x, len)?);
        let conj = critical::conjugate_point(&handle(prob)?.problem, &point)?;
        write_buffer(conj.as_slice(), y, len)
    })
}
