//! C ABI over `multipose`.
//!
//! Every fallible function returns an [`MpStatus`]; on failure a message is
//! available from [`mp_last_error_message`] on the same thread. Models are
//! opaque handles created by [`mp_model_load`] and released with
//! [`mp_model_free`]. Poses are flat `f64` arrays, joint-major (`x y z` or
//! `u v` per joint).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use multipose::eval::{mpjpe, pa_mpjpe};
use multipose::lifter::{baseline_regress, sample_candidates, LifterModel, SampleSet};
use multipose::nn::RngStream;
use multipose::ordinal::{score_samples, softmax_weights, OrdinalMatrix};
use multipose::pose::{Pose2D, Pose3D, Skeleton};
use multipose::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Parse = 5,
    Checkpoint = 6,
    NonFinite = 7,
    Degenerate = 8,
    WrongModelKind = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Kind of a loaded model.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpModelKind {
    Cvae = 0,
    Baseline = 1,
}

/// Opaque model handle.
pub struct MpModel {
    inner: LifterModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::ShapeMismatch(_) | Error::TooFewSamples { .. } => {
                MpStatus::DimensionMismatch
            }
            Error::Io(_) => MpStatus::Io,
            Error::Parse { .. } => MpStatus::Parse,
            Error::Checkpoint(_) => MpStatus::Checkpoint,
            Error::NonFinite(_) => MpStatus::NonFinite,
            Error::DegenerateConfiguration(_) | Error::DegenerateCoordinate(_) => MpStatus::Degenerate,
            _ => MpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: MpStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MpStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(MpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(fail(MpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn model<'a>(m: *const MpModel) -> Result<&'a MpModel, Failure> {
    m.as_ref().ok_or_else(|| fail(MpStatus::NullPointer, "model is null"))
}

fn check_room(needed: usize, got: usize) -> Result<(), Failure> {
    if got < needed {
        return Err(fail(MpStatus::BufferTooSmall, format!("output needs {needed} values, got {got}")));
    }
    Ok(())
}

fn pose3d(flat: &[f64], num_joints: usize) -> Result<Pose3D, Failure> {
    if flat.len() != 3 * num_joints {
        return Err(fail(MpStatus::DimensionMismatch, "pose length must be 3 * num_joints"));
    }
    Ok(Pose3D::from_flat(flat)?)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint written by `multipose train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_model_load(path: *const c_char, out: *mut *mut MpModel) -> MpStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(fail(MpStatus::NullPointer, "path or out is null"));
        }
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(MpStatus::InvalidArgument, "path is not UTF-8"))?;
        let inner = LifterModel::load(path).map_err(|e| {
            let Failure(status, msg) = Failure::from(e.with_path(path));
            if msg.contains(path) {
                Failure(status, msg)
            } else {
                Failure(status, format!("{path}: {msg}"))
            }
        })?;
        *out = Box::into_raw(Box::new(MpModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`mp_model_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_model_free(model: *mut MpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_model_kind(model: *const MpModel, out: *mut MpModelKind) -> MpStatus {
    guard(|| {
        let m = self::model(model)?;
        *out.as_mut().ok_or_else(|| fail(MpStatus::NullPointer, "out is null"))? = match m.inner {
            LifterModel::Cvae(_) => MpModelKind::Cvae,
            LifterModel::Baseline(_) => MpModelKind::Baseline,
        };
        Ok(())
    })
}

/// Input (2D) and output (3D) joint counts of the model.
///
/// # Safety
/// `model` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_model_joints(model: *const MpModel, joints_2d: *mut usize, joints_3d: *mut usize) -> MpStatus {
    guard(|| {
        let m = self::model(model)?;
        let norm = match &m.inner {
            LifterModel::Cvae(c) => &c.norm,
            LifterModel::Baseline(b) => &b.norm,
        };
        if joints_2d.is_null() || joints_3d.is_null() {
            return Err(fail(MpStatus::NullPointer, "output is null"));
        }
        *joints_2d = norm.dim2() / 2;
        *joints_3d = norm.dim3() / 3 + 1;
        Ok(())
    })
}

/// Draws `k` root-centred candidates from a CVAE for one 2D pose. Writes
/// `k * 3 * joints_3d` values to `out`. The same seed reproduces the draw
/// and a larger `k` extends a smaller one.
///
/// # Safety
/// `pose2d` must hold `len_2d` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_model_sample(
    model: *const MpModel,
    pose2d: *const f64,
    len_2d: usize,
    k: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> MpStatus {
    guard(|| {
        let LifterModel::Cvae(m) = &self::model(model)?.inner else {
            return Err(fail(MpStatus::WrongModelKind, "model is not a CVAE"));
        };
        let p = Pose2D::from_flat(slice(pose2d, len_2d, "pose2d")?)?;
        let set = sample_candidates(m, &p, k, &mut RngStream::new(seed))?;
        let flat: Vec<f64> = set.candidates().iter().flat_map(Pose3D::to_flat).collect();
        check_room(flat.len(), out_len)?;
        slice_mut(out, out_len, "out")?[..flat.len()].copy_from_slice(&flat);
        Ok(())
    })
}

/// Deterministic root-centred prediction of a baseline model.
///
/// # Safety
/// `pose2d` must hold `len_2d` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_baseline_regress(
    model: *const MpModel,
    pose2d: *const f64,
    len_2d: usize,
    out: *mut f64,
    out_len: usize,
) -> MpStatus {
    guard(|| {
        let LifterModel::Baseline(m) = &self::model(model)?.inner else {
            return Err(fail(MpStatus::WrongModelKind, "model is not a baseline regressor"));
        };
        let p = Pose2D::from_flat(slice(pose2d, len_2d, "pose2d")?)?;
        let flat = baseline_regress(m, &p)?.to_flat();
        check_room(flat.len(), out_len)?;
        slice_mut(out, out_len, "out")?[..flat.len()].copy_from_slice(&flat);
        Ok(())
    })
}

/// Mean per-joint Euclidean distance.
///
/// # Safety
/// `pred` and `gt` must hold `3 * num_joints` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_mpjpe(pred: *const f64, gt: *const f64, num_joints: usize, out: *mut f64) -> MpStatus {
    guard(|| {
        let p = pose3d(slice(pred, 3 * num_joints, "pred")?, num_joints)?;
        let g = pose3d(slice(gt, 3 * num_joints, "gt")?, num_joints)?;
        *out.as_mut().ok_or_else(|| fail(MpStatus::NullPointer, "out is null"))? = mpjpe(&p, &g)?;
        Ok(())
    })
}

/// MPJPE after similarity (or rigid, when `with_scale` is false) alignment.
///
/// # Safety
/// As [`mp_mpjpe`].
#[no_mangle]
pub unsafe extern "C" fn mp_pa_mpjpe(
    pred: *const f64,
    gt: *const f64,
    num_joints: usize,
    with_scale: bool,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let p = pose3d(slice(pred, 3 * num_joints, "pred")?, num_joints)?;
        let g = pose3d(slice(gt, 3 * num_joints, "gt")?, num_joints)?;
        *out.as_mut().ok_or_else(|| fail(MpStatus::NullPointer, "out is null"))? = pa_mpjpe(&p, &g, with_scale)?;
        Ok(())
    })
}

/// Temperature softmax of `n` scores into `out`.
///
/// # Safety
/// `scores` and `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn mp_softmax_weights(scores: *const f64, n: usize, temperature: f64, out: *mut f64) -> MpStatus {
    guard(|| {
        let w = softmax_weights(slice(scores, n, "scores")?, temperature)?;
        slice_mut(out, n, "out")?.copy_from_slice(&w);
        Ok(())
    })
}

/// Scores `k` candidates against a reference ordinal matrix and writes the
/// weighted average pose to `out` (`3 * num_joints` values). The reference
/// is `n_ref * n_ref` codes (1 farther, 2 nearer, 3 equal, 0 unknown),
/// sanitized before use. With 17 joints and a 16x16 reference the standard
/// skeleton's scoring joints are used; otherwise `n_ref` must equal
/// `num_joints`. `weights_out` may be null; otherwise it receives `k` values.
///
/// # Safety
/// `samples` must hold `k * 3 * num_joints` values, `reference`
/// `n_ref * n_ref` bytes and `out` `3 * num_joints` values.
#[no_mangle]
pub unsafe extern "C" fn mp_ordinal_aggregate(
    samples: *const f64,
    k: usize,
    num_joints: usize,
    reference: *const u8,
    n_ref: usize,
    epsilon: f64,
    temperature: f64,
    out: *mut f64,
    weights_out: *mut f64,
) -> MpStatus {
    guard(|| {
        if k == 0 || num_joints == 0 {
            return Err(fail(MpStatus::InvalidArgument, "k and num_joints must be positive"));
        }
        let flat = slice(samples, k * 3 * num_joints, "samples")?;
        let set = SampleSet::new(
            flat.chunks_exact(3 * num_joints)
                .map(Pose3D::from_flat)
                .collect::<multipose::Result<Vec<_>>>()?,
        )?;
        let reference = OrdinalMatrix::sanitize(n_ref, slice(reference, n_ref * n_ref, "reference")?)?;
        let joints: Vec<usize> = if num_joints == 17 && n_ref == 16 {
            Skeleton::h36m17().scoring_joints().to_vec()
        } else if n_ref == num_joints {
            (0..num_joints).collect()
        } else {
            return Err(fail(MpStatus::DimensionMismatch, "reference size does not match the joints"));
        };
        let scored = score_samples(&set, &reference, epsilon, &joints, temperature)?;
        slice_mut(out, 3 * num_joints, "out")?.copy_from_slice(&scored.estimate().to_flat());
        if !weights_out.is_null() {
            slice_mut(weights_out, k, "weights_out")?.copy_from_slice(&scored.weights);
        }
        Ok(())
    })
}
