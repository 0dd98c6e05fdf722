//! C ABI over the `deeprc` crate.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `_free` function. Every fallible call returns a
//! [`DeeprcStatus`]; on failure the message is kept per thread and can be
//! read with [`deeprc_last_error`]. Matrices are exchanged in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{DMatrix, DVector};

use deeprc::controller::iteration_cost;
use deeprc::experiment::{export_csv, run_experiment, Arm, ExperimentConfig, RunReport};
use deeprc::{lift_system, Error, Family, LptvPlant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeeprcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Config = 4,
    Io = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeeprcFamily {
    A = 0,
    B = 1,
    C = 2,
    D = 3,
    K = 4,
    F = 5,
    G = 6,
}

impl From<DeeprcFamily> for Family {
    fn from(f: DeeprcFamily) -> Self {
        match f {
            DeeprcFamily::A => Family::A,
            DeeprcFamily::B => Family::B,
            DeeprcFamily::C => Family::C,
            DeeprcFamily::D => Family::D,
            DeeprcFamily::K => Family::K,
            DeeprcFamily::F => Family::F,
            DeeprcFamily::G => Family::G,
        }
    }
}

/// Matrices of the lifted system anchored at a given time.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeeprcLiftedMatrix {
    A = 0,
    B = 1,
    F = 2,
    K = 3,
    C = 4,
    D = 5,
    G = 6,
    H = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeeprcArm {
    Deeprc = 0,
    Baseline = 1,
    NoControl = 2,
}

impl From<DeeprcArm> for Arm {
    fn from(a: DeeprcArm) -> Self {
        match a {
            DeeprcArm::Deeprc => Arm::DeePrc,
            DeeprcArm::Baseline => Arm::Baseline,
            DeeprcArm::NoControl => Arm::NoControl,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeeprcDims {
    pub period: usize,
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub disturbances: usize,
}

/// Opaque periodic plant.
pub struct DeeprcPlant(LptvPlant);

/// Opaque result of a closed-loop experiment.
pub struct DeeprcReport(RunReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> DeeprcStatus {
    match err {
        Error::Dimension { .. } | Error::Length(_) | Error::Window { .. } => DeeprcStatus::Dimension,
        Error::Config(_) | Error::Parse { .. } => DeeprcStatus::Config,
        Error::Io { .. } | Error::Plot(_) => DeeprcStatus::Io,
        _ => DeeprcStatus::Numerical,
    }
}

struct Failure(DeeprcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DeeprcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DeeprcStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DeeprcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DeeprcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn vector(p: *const f64, len: usize, what: &str) -> Result<DVector<f64>, Failure> {
    if len == 0 {
        return Ok(DVector::zeros(0));
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(p, len)))
}

unsafe fn write(values: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < values.len() {
        return Err(Failure(
            DeeprcStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

unsafe fn path(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DeeprcStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn deeprc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// The built-in case-study plant. Release with [`deeprc_plant_free`].
#[no_mangle]
pub extern "C" fn deeprc_plant_case_study() -> *mut DeeprcPlant {
    Box::into_raw(Box::new(DeeprcPlant(LptvPlant::case_study())))
}

/// Load the `[plant]` table of a TOML or JSON configuration file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn deeprc_plant_from_config(
    config_path: *const c_char,
    out: *mut *mut DeeprcPlant,
) -> DeeprcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = ExperimentConfig::load(path(config_path, "config_path")?)?;
        let plant = cfg.plant.build()?;
        *out = Box::into_raw(Box::new(DeeprcPlant(plant)));
        Ok(())
    })
}

/// # Safety
/// `plant` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn deeprc_plant_free(plant: *mut DeeprcPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// # Safety
/// `plant` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn deeprc_plant_dims(plant: *const DeeprcPlant, out: *mut DeeprcDims) -> DeeprcStatus {
    guard(|| {
        let p = &as_ref(plant, "plant")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = DeeprcDims {
            period: p.period(),
            states: p.states(),
            inputs: p.inputs(),
            outputs: p.outputs(),
            disturbances: p.disturbances(),
        };
        Ok(())
    })
}

/// Write the matrix of `family` at time `k` in row-major order; `rows` and
/// `cols` receive its shape. With a null `out` only the shape is reported.
///
/// # Safety
/// `out` must hold `len` doubles; `rows` and `cols` may be null.
#[no_mangle]
pub unsafe extern "C" fn deeprc_plant_matrix_at(
    plant: *const DeeprcPlant,
    family: DeeprcFamily,
    k: i64,
    out: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> DeeprcStatus {
    guard(|| {
        let m = as_ref(plant, "plant")?.0.matrix_at(family.into(), k);
        report_shape(&m, rows, cols);
        if !out.is_null() {
            write(&row_major(&m), out, len)?;
        }
        Ok(())
    })
}

unsafe fn report_shape(m: &DMatrix<f64>, rows: *mut usize, cols: *mut usize) {
    if !rows.is_null() {
        *rows = m.nrows();
    }
    if !cols.is_null() {
        *cols = m.ncols();
    }
}

/// One plant step at time `k`. Vectors have the lengths given by
/// [`deeprc_plant_dims`]; `x_next` and `y` receive the results.
///
/// # Safety
/// All pointers must reference arrays of the plant's dimensions.
#[no_mangle]
pub unsafe extern "C" fn deeprc_plant_step(
    plant: *const DeeprcPlant,
    x: *const f64,
    u: *const f64,
    d: *const f64,
    e: *const f64,
    k: i64,
    x_next: *mut f64,
    y: *mut f64,
) -> DeeprcStatus {
    guard(|| {
        let p = &as_ref(plant, "plant")?.0;
        let (xn, yk) = p.step(
            &vector(x, p.states(), "x")?,
            &vector(u, p.inputs(), "u")?,
            &vector(d, p.disturbances(), "d")?,
            &vector(e, p.outputs(), "e")?,
            k,
        )?;
        write(xn.as_slice(), x_next, p.states())?;
        write(yk.as_slice(), y, p.outputs())
    })
}

/// One matrix of the lifted system anchored at `k0`, row-major. With a null
/// `out` only the shape is reported.
///
/// # Safety
/// `out` must hold `len` doubles; `rows` and `cols` may be null.
#[no_mangle]
pub unsafe extern "C" fn deeprc_lift(
    plant: *const DeeprcPlant,
    k0: i64,
    which: DeeprcLiftedMatrix,
    out: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> DeeprcStatus {
    guard(|| {
        let lifted = lift_system(&as_ref(plant, "plant")?.0, k0);
        let m = match which {
            DeeprcLiftedMatrix::A => &lifted.a,
            DeeprcLiftedMatrix::B => &lifted.b,
            DeeprcLiftedMatrix::F => &lifted.f,
            DeeprcLiftedMatrix::K => &lifted.k,
            DeeprcLiftedMatrix::C => &lifted.c,
            DeeprcLiftedMatrix::D => &lifted.d,
            DeeprcLiftedMatrix::G => &lifted.g,
            DeeprcLiftedMatrix::H => &lifted.h,
        };
        report_shape(m, rows, cols);
        if !out.is_null() {
            write(&row_major(m), out, len)?;
        }
        Ok(())
    })
}

/// `q |y|^2 + r |u|^2` for one period of stacked outputs and inputs.
///
/// # Safety
/// `y` and `u` must hold `ny` and `nu` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn deeprc_iteration_cost(
    y: *const f64,
    ny: usize,
    u: *const f64,
    nu: usize,
    q: f64,
    r: f64,
    out: *mut f64,
) -> DeeprcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let qm = DMatrix::identity(ny, ny) * q;
        let rm = DMatrix::identity(nu, nu) * r;
        *out = iteration_cost(&vector(y, ny, "y")?, &vector(u, nu, "u")?, &qm, &rm)?;
        Ok(())
    })
}

/// Run the three-arm experiment. `config_path` may be null for the built-in
/// case study. A negative `seed` keeps the configured seed; `noise` is 0 to
/// disable noise, 1 to enable it and negative to keep the configured value.
///
/// # Safety
/// `config_path` is null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn deeprc_experiment_run(
    config_path: *const c_char,
    seed: i64,
    noise: i32,
    init_periods: usize,
    run_periods: usize,
    out: *mut *mut DeeprcReport,
) -> DeeprcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = if config_path.is_null() {
            ExperimentConfig::case_study()
        } else {
            ExperimentConfig::load(path(config_path, "config_path")?)?
        };
        if seed >= 0 {
            cfg.experiment.seed = seed as u64;
        }
        if noise >= 0 {
            cfg.experiment.noise = noise != 0;
        }
        if init_periods > 0 {
            cfg.experiment.init_periods = init_periods;
        }
        if run_periods > 0 {
            cfg.experiment.run_periods = run_periods;
        }
        let report = run_experiment(&cfg)?;
        *out = Box::into_raw(Box::new(DeeprcReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn deeprc_report_free(report: *mut DeeprcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of period costs of one arm (zero for a null handle).
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn deeprc_report_cost_count(report: *const DeeprcReport, arm: DeeprcArm) -> usize {
    report.as_ref().map_or(0, |r| r.0.arm(arm.into()).costs.len())
}

/// Index of the first period under control.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn deeprc_report_enable_period(report: *const DeeprcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.enable_period())
}

/// Copy the period costs of one arm into `out`.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn deeprc_report_costs(
    report: *const DeeprcReport,
    arm: DeeprcArm,
    out: *mut f64,
    len: usize,
) -> DeeprcStatus {
    guard(|| write(&as_ref(report, "report")?.0.arm(arm.into()).costs, out, len))
}

/// Write the per-arm CSV logs, the cost CSV and `metadata.json` into `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn deeprc_report_export_csv(report: *const DeeprcReport, dir: *const c_char) -> DeeprcStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        export_csv(r, path(dir, "dir")?)?;
        Ok(())
    })
}
