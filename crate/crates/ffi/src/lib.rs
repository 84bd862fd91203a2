//! C ABI over the `loghls` library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every entry point returns a
//! [`LoghlsStatus`]; on failure the message is available from
//! [`loghls_last_error`] until the next call on the same thread. Strings
//! returned through `char **` are owned by the caller and released with
//! [`loghls_string_free`].

use loghls::cli::{self, FlowKind, InputSpec, RunConfig};
use loghls::flows::FlowTrajectory;
use loghls::functionals::{planar_free_energy_parts, PlanarInput, RadialDensity};
use loghls::grids::RadialGrid;
use loghls::{Error, ErrorKind};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

/// Status codes. Library error kinds map one to one onto codes 10 and up.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoghlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BufferTooSmall = 3,
    Panic = 4,
    Dimension = 10,
    Domain = 11,
    Normalization = 12,
    Precondition = 13,
    Parameter = 14,
    Convergence = 15,
    Positivity = 16,
    StepSize = 17,
    Conservation = 18,
    Parse = 19,
    Io = 20,
}

impl From<ErrorKind> for LoghlsStatus {
    fn from(k: ErrorKind) -> Self {
        match k {
            ErrorKind::Dimension => LoghlsStatus::Dimension,
            ErrorKind::Domain => LoghlsStatus::Domain,
            ErrorKind::Normalization => LoghlsStatus::Normalization,
            ErrorKind::Precondition => LoghlsStatus::Precondition,
            ErrorKind::Parameter => LoghlsStatus::Parameter,
            ErrorKind::Convergence => LoghlsStatus::Convergence,
            ErrorKind::Positivity => LoghlsStatus::Positivity,
            ErrorKind::StepSize => LoghlsStatus::StepSize,
            ErrorKind::Conservation => LoghlsStatus::Conservation,
            ErrorKind::Parse => LoghlsStatus::Parse,
            ErrorKind::Io => LoghlsStatus::Io,
        }
    }
}

/// Which flow [`loghls_flow_run`] integrates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoghlsFlowKind {
    Heat = 0,
    KellerSegel = 1,
}

/// Run configuration; starts from the library defaults.
pub struct LoghlsConfig(RunConfig);

/// A parsed input spec.
pub struct LoghlsSpec(InputSpec);

/// A log-uniform radial grid on which callers sample densities.
pub struct LoghlsRadialGrid(Arc<RadialGrid>);

/// A sampled flow trajectory.
pub struct LoghlsTrajectory(FlowTrajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(LoghlsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(e.kind.into(), e.to_string())
    }
}

type FfiResult<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> LoghlsStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LoghlsStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_last_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            LoghlsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(LoghlsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LoghlsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|_| Fail(LoghlsStatus::InvalidUtf8, "output contains NUL".into()))?;
    put(out, c.into_raw(), "output string pointer")
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn loghls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn loghls_status_name(status: LoghlsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        LoghlsStatus::Ok => c"ok",
        LoghlsStatus::NullPointer => c"null pointer",
        LoghlsStatus::InvalidUtf8 => c"invalid utf-8",
        LoghlsStatus::BufferTooSmall => c"buffer too small",
        LoghlsStatus::Panic => c"panic",
        LoghlsStatus::Dimension => c"dimension error",
        LoghlsStatus::Domain => c"domain error",
        LoghlsStatus::Normalization => c"normalization error",
        LoghlsStatus::Precondition => c"precondition violated",
        LoghlsStatus::Parameter => c"parameter error",
        LoghlsStatus::Convergence => c"convergence error",
        LoghlsStatus::Positivity => c"positivity error",
        LoghlsStatus::StepSize => c"step-size error",
        LoghlsStatus::Conservation => c"conservation error",
        LoghlsStatus::Parse => c"parse error",
        LoghlsStatus::Io => c"io error",
    };
    s.as_ptr()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn loghls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn loghls_config_new() -> *mut LoghlsConfig {
    Box::into_raw(Box::new(LoghlsConfig(RunConfig::default())))
}

/// Set one configuration key, using the same names and value syntax as the
/// CLI configuration file. The whole configuration is validated afterwards
/// and left unchanged when invalid.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn loghls_config_set(
    cfg: *mut LoghlsConfig,
    key: *const c_char,
    value: *const c_char,
) -> LoghlsStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        let mut next = cfg.0.clone();
        next.set(text(key, "key")?, text(value, "value")?)?;
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle from [`loghls_config_new`].
#[no_mangle]
pub unsafe extern "C" fn loghls_config_free(cfg: *mut LoghlsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Parse an input spec such as `gaussian:sigma=2` or `1+0.5*P1`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_spec_parse(src: *const c_char, out: *mut *mut LoghlsSpec) -> LoghlsStatus {
    guard(|| {
        let spec = InputSpec::parse(text(src, "spec")?)?;
        put(out, Box::into_raw(Box::new(LoghlsSpec(spec))), "output spec pointer")
    })
}

/// Canonical text of a spec; parsing it gives the same spec back.
///
/// # Safety
/// `spec` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_spec_to_string(spec: *const LoghlsSpec, out: *mut *mut c_char) -> LoghlsStatus {
    guard(|| put_string(out, borrow(spec, "spec")?.0.to_string()))
}

/// # Safety
/// `spec` must be null or a live handle from [`loghls_spec_parse`].
#[no_mangle]
pub unsafe extern "C" fn loghls_spec_free(spec: *mut LoghlsSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// One named value from the `eval` report, e.g. `free_energy` or `onofri`.
///
/// # Safety
/// Handles must be live, `name` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_eval(
    spec: *const LoghlsSpec,
    cfg: *const LoghlsConfig,
    name: *const c_char,
    out: *mut f64,
) -> LoghlsStatus {
    guard(|| {
        let (spec, cfg, name) = (borrow(spec, "spec")?, borrow(cfg, "config")?, text(name, "name")?);
        let r = cli::cmd_eval(&spec.0, &cfg.0)?;
        let v = r.values.get(name).copied().ok_or_else(|| {
            let known: Vec<&str> = r.values.keys().map(String::as_str).collect();
            Fail(
                LoghlsStatus::Parameter,
                format!(
                    "no value {name:?} for {} inputs; available: {}",
                    r.domain,
                    known.join(", ")
                ),
            )
        })?;
        put(out, v, "output value pointer")
    })
}

/// Full `eval` report as JSON.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_eval_json(
    spec: *const LoghlsSpec,
    cfg: *const LoghlsConfig,
    out: *mut *mut c_char,
) -> LoghlsStatus {
    guard(|| {
        let r = cli::cmd_eval(&borrow(spec, "spec")?.0, &borrow(cfg, "config")?.0)?;
        put_string(out, serde_json::to_string(&r).expect("report serializes"))
    })
}

/// Stability certificates for the input's domain as JSON; `pass` receives 1
/// when all of them pass. Either output may be null.
///
/// # Safety
/// Handles must be live; non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_stability(
    spec: *const LoghlsSpec,
    cfg: *const LoghlsConfig,
    json: *mut *mut c_char,
    pass: *mut c_int,
) -> LoghlsStatus {
    guard(|| {
        let r = cli::cmd_stability(&borrow(spec, "spec")?.0, &borrow(cfg, "config")?.0)?;
        if !pass.is_null() {
            pass.write(r.pass as c_int);
        }
        if !json.is_null() {
            put_string(json, serde_json::to_string(&r).expect("report serializes"))?;
        }
        Ok(())
    })
}

/// A log-uniform radial grid from `r_min` to `r_max` with `n` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_radial_grid_new(
    r_min: f64,
    r_max: f64,
    n: usize,
    out: *mut *mut LoghlsRadialGrid,
) -> LoghlsStatus {
    guard(|| {
        let g = RadialGrid::log_uniform(r_min, r_max, n)?;
        put(
            out,
            Box::into_raw(Box::new(LoghlsRadialGrid(Arc::new(g)))),
            "output grid pointer",
        )
    })
}

/// # Safety
/// `grid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn loghls_radial_grid_len(grid: *const LoghlsRadialGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Copy the grid radii into `buf`, which must hold `len` >= grid length values.
///
/// # Safety
/// `grid` must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn loghls_radial_grid_nodes(
    grid: *const LoghlsRadialGrid,
    buf: *mut f64,
    len: usize,
) -> LoghlsStatus {
    guard(|| {
        let r = borrow(grid, "grid")?.0.nodes();
        copy_out(r, buf, len)
    })
}

/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn loghls_radial_grid_free(grid: *mut LoghlsRadialGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Planar free energy of a radial density sampled at the grid nodes.
/// `entropy` and `interaction` receive the two parts and may be null.
///
/// # Safety
/// `grid` must be live, `rho` valid for `len` reads, `free_energy` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_radial_free_energy(
    grid: *const LoghlsRadialGrid,
    rho: *const f64,
    len: usize,
    free_energy: *mut f64,
    entropy: *mut f64,
    interaction: *mut f64,
) -> LoghlsStatus {
    guard(|| {
        let grid = borrow(grid, "grid")?;
        if rho.is_null() {
            return Err(null("rho"));
        }
        let values = std::slice::from_raw_parts(rho, len).to_vec();
        let d = RadialDensity::new(grid.0.clone(), values)?;
        let parts = planar_free_energy_parts(&PlanarInput::Radial(d))?;
        put(free_energy, parts.free_energy, "free_energy")?;
        if !entropy.is_null() {
            entropy.write(parts.entropy);
        }
        if !interaction.is_null() {
            interaction.write(parts.interaction);
        }
        Ok(())
    })
}

/// Run the heat flow (Legendre spec) or Keller-Segel (`8pi*<planar spec>`).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_flow_run(
    kind: LoghlsFlowKind,
    spec: *const LoghlsSpec,
    cfg: *const LoghlsConfig,
    out: *mut *mut LoghlsTrajectory,
) -> LoghlsStatus {
    guard(|| {
        let k = match kind {
            LoghlsFlowKind::Heat => FlowKind::Heat,
            LoghlsFlowKind::KellerSegel => FlowKind::Ks,
        };
        let t = cli::cmd_flow(k, &borrow(spec, "spec")?.0, &borrow(cfg, "config")?.0)?;
        put(
            out,
            Box::into_raw(Box::new(LoghlsTrajectory(t))),
            "output trajectory pointer",
        )
    })
}

/// Number of samples.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn loghls_trajectory_len(traj: *const LoghlsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// 1 when the run satisfied its monotonicity and bound checks, else 0.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn loghls_trajectory_pass(traj: *const LoghlsTrajectory) -> c_int {
    traj.as_ref()
        .map_or(0, |t| (t.0.diagnostic_bool("pass") == Some(true)) as c_int)
}

/// Copy a column (`t`, `free_energy`, `distance_L1`, `dissipation` or
/// `mass_error`) into `buf`, which must hold at least the trajectory length.
///
/// # Safety
/// `traj` must be live, `column` NUL-terminated, `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn loghls_trajectory_column(
    traj: *const LoghlsTrajectory,
    column: *const c_char,
    buf: *mut f64,
    len: usize,
) -> LoghlsStatus {
    guard(|| {
        let t = &borrow(traj, "trajectory")?.0;
        let col = match text(column, "column")? {
            "t" => &t.times,
            "free_energy" => &t.free_energy,
            "distance_L1" => &t.distance_l1,
            "dissipation" => &t.dissipation,
            "mass_error" => &t.mass_error,
            other => return Err(Fail(LoghlsStatus::Parameter, format!("no trajectory column {other:?}"))),
        };
        copy_out(col, buf, len)
    })
}

/// Trajectory with diagnostics as JSON.
///
/// # Safety
/// `traj` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_trajectory_json(traj: *const LoghlsTrajectory, out: *mut *mut c_char) -> LoghlsStatus {
    guard(|| put_string(out, borrow(traj, "trajectory")?.0.to_json()))
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn loghls_trajectory_free(traj: *mut LoghlsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Run acceptance criteria (`ids`, or all when `n_ids` is 0). `json` and
/// `pass` may be null.
///
/// # Safety
/// `cfg` must be live, `ids` valid for `n_ids` reads, non-null outputs writable.
#[no_mangle]
pub unsafe extern "C" fn loghls_suite_run(
    cfg: *const LoghlsConfig,
    ids: *const usize,
    n_ids: usize,
    json: *mut *mut c_char,
    pass: *mut c_int,
) -> LoghlsStatus {
    guard(|| {
        let cfg = borrow(cfg, "config")?;
        let ids: &[usize] = if n_ids == 0 {
            &[]
        } else if ids.is_null() {
            return Err(null("ids"));
        } else {
            std::slice::from_raw_parts(ids, n_ids)
        };
        let s = cli::run_suite(&cfg.0, ids);
        if !pass.is_null() {
            pass.write(s.pass as c_int);
        }
        if !json.is_null() {
            put_string(json, s.to_json())?;
        }
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> FfiResult<()> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Fail(
            LoghlsStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}
