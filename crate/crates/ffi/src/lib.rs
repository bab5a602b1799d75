//! C ABI for `pareto-descent`.
//!
//! Problems and reports are opaque handles created and freed by this
//! library. Every fallible function returns a [`PdStatus`]; on failure a
//! description is available from [`pd_last_error_message`] on the same
//! thread. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use pareto_descent::diagnostics::{self, DiagnosticsSummary};
use pareto_descent::direction::{self, SubproblemConfig};
use pareto_descent::objective::{Jacobian, MultiObjective, Point};
use pareto_descent::problems;
use pareto_descent::solver::{self, RunReport, SolverConfig, SolverError, Termination};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownProblem = 3,
    DimensionMismatch = 4,
    NumericalFailure = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdTermination {
    CriticalPoint = 0,
    MaxIter = 1,
    LinesearchFailure = 2,
    SubproblemFailure = 3,
}

impl From<Termination> for PdTermination {
    fn from(t: Termination) -> Self {
        match t {
            Termination::CriticalPoint => PdTermination::CriticalPoint,
            Termination::MaxIter => PdTermination::MaxIter,
            Termination::LinesearchFailure => PdTermination::LinesearchFailure,
            Termination::SubproblemFailure => PdTermination::SubproblemFailure,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdSolverConfig {
    pub beta: f64,
    pub sigma: f64,
    pub eps_critical: f64,
    pub max_iter: u64,
    pub max_j: u32,
    pub tol_gap: f64,
    pub max_inner: u64,
    pub eps_subproblem: f64,
}

impl From<SolverConfig> for PdSolverConfig {
    fn from(c: SolverConfig) -> Self {
        PdSolverConfig {
            beta: c.beta,
            sigma: c.sigma,
            eps_critical: c.eps_critical,
            max_iter: c.max_iter as u64,
            max_j: c.max_j,
            tol_gap: c.subproblem.tol_gap,
            max_inner: c.subproblem.max_inner as u64,
            eps_subproblem: c.subproblem.eps_critical,
        }
    }
}

impl PdSolverConfig {
    fn to_config(self) -> Result<SolverConfig, String> {
        let cfg = SolverConfig {
            beta: self.beta,
            sigma: self.sigma,
            eps_critical: self.eps_critical,
            max_iter: usize::try_from(self.max_iter).map_err(|e| e.to_string())?,
            max_j: self.max_j,
            subproblem: SubproblemConfig {
                tol_gap: self.tol_gap,
                max_inner: usize::try_from(self.max_inner).map_err(|e| e.to_string())?,
                eps_critical: self.eps_subproblem,
            },
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// Scalar data of one trajectory record.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdRecord {
    pub k: u64,
    pub t: f64,
    pub j: u32,
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    pub norm_v: f64,
    pub sigma_certified: bool,
    pub inner_iterations: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdDiagnostics {
    pub monotone_ok: bool,
    pub level_set_ok: bool,
    pub summability_ok: bool,
    pub fejer_ok: bool,
    pub proximity_ok: bool,
    pub descent_chain_ok: bool,
    pub all_ok: bool,
}

impl From<&DiagnosticsSummary> for PdDiagnostics {
    fn from(s: &DiagnosticsSummary) -> Self {
        PdDiagnostics {
            monotone_ok: s.monotone_ok,
            level_set_ok: s.level_set_ok,
            summability_ok: s.summability_ok,
            fejer_ok: s.fejer_ok,
            proximity_ok: s.proximity_ok,
            descent_chain_ok: s.descent_chain_ok,
            all_ok: s.all_ok(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdDirection {
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub sigma_certified: bool,
    pub critical: bool,
    pub inner_iterations: u64,
}

/// Writes `F(x)` (`m` values) to `out`; returns 0 on success.
pub type PdEvalFn =
    Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, out: *mut f64, m: usize) -> c_int>;

/// Writes the row-major `m × n` Jacobian to `out`; returns 0 on success.
pub type PdJacobianFn =
    Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const f64, n: usize, out: *mut f64, m: usize) -> c_int>;

/// Opaque problem handle.
pub struct PdProblem {
    inner: MultiObjective,
}

/// Opaque run report handle.
pub struct PdReport {
    report: RunReport,
    diagnostics: DiagnosticsSummary,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Last error message on this thread; empty if none. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn guard(f: impl FnOnce() -> Result<(), (PdStatus, String)>) -> PdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PdStatus::Panic
        }
    }
}

fn null(what: &str) -> (PdStatus, String) {
    (PdStatus::NullPointer, format!("{what} is null"))
}

fn solver_error(e: SolverError) -> (PdStatus, String) {
    let status = match e {
        SolverError::InvalidConfig(_) => PdStatus::InvalidArgument,
        _ => PdStatus::NumericalFailure,
    };
    (status, e.to_string())
}

unsafe fn in_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (PdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points to `len` readable doubles
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], (PdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points to `len` writable doubles
    Ok(unsafe { slice::from_raw_parts_mut(p, len) })
}

fn check_len(got: usize, expected: usize, what: &str) -> Result<(), (PdStatus, String)> {
    if got == expected {
        Ok(())
    } else {
        Err((
            PdStatus::DimensionMismatch,
            format!("{what}: expected length {expected}, got {got}"),
        ))
    }
}

/// Looks up a builtin problem by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_problem_builtin(name: *const c_char, out: *mut *mut PdProblem) -> PdStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees NUL termination
        let name = unsafe { CStr::from_ptr(name) }
            .to_str()
            .map_err(|_| (PdStatus::InvalidArgument, "name is not UTF-8".to_string()))?;
        let desc = problems::get_problem(name).map_err(|e| (PdStatus::UnknownProblem, e.to_string()))?;
        let handle = Box::new(PdProblem { inner: desc.problem });
        // SAFETY: checked non-null
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

struct UserData(*mut c_void);

// SAFETY: the caller of pd_problem_from_callbacks promises the callbacks and
// user_data may be used from any thread.
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

/// Wraps C callbacks as a problem. `jacobian` may be null, in which case
/// central differences are used. A callback returning non-zero makes the
/// evaluation fail with `PD_STATUS_NUMERICAL_FAILURE`.
///
/// # Safety
/// The callbacks must be safe to call with `user_data` from any thread for
/// the lifetime of the handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_problem_from_callbacks(
    n: usize,
    m: usize,
    eval: PdEvalFn,
    jacobian: PdJacobianFn,
    user_data: *mut c_void,
    out: *mut *mut PdProblem,
) -> PdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let Some(eval) = eval else {
            return Err(null("eval"));
        };
        if n == 0 || m == 0 {
            return Err((PdStatus::InvalidArgument, "dimensions must be positive".to_string()));
        }
        let data = std::sync::Arc::new(UserData(user_data));
        let eval_data = data.clone();
        let eval_fn = move |x: &[f64]| {
            let mut fx = vec![f64::NAN; m];
            // SAFETY: buffers sized n and m; callback contract from the caller
            let rc = unsafe { eval(eval_data.0, x.as_ptr(), n, fx.as_mut_ptr(), m) };
            if rc != 0 {
                fx.fill(f64::NAN);
            }
            fx
        };
        let inner = match jacobian {
            Some(jac) => MultiObjective::new(n, m, eval_fn, move |x: &[f64]| {
                let mut buf = vec![f64::NAN; m * n];
                // SAFETY: buffer sized m·n; callback contract from the caller
                let rc = unsafe { jac(data.0, x.as_ptr(), n, buf.as_mut_ptr(), m) };
                if rc != 0 {
                    buf.fill(f64::NAN);
                }
                buf.chunks(n).map(<[f64]>::to_vec).collect()
            }),
            None => MultiObjective::derivative_free(n, m, eval_fn),
        };
        // SAFETY: checked non-null
        unsafe { *out = Box::into_raw(Box::new(PdProblem { inner })) };
        Ok(())
    })
}

/// # Safety
/// `problem` must be a live handle; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_problem_dims(problem: *const PdProblem, n: *mut usize, m: *mut usize) -> PdStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null
        let p = unsafe { problem.as_ref() }.ok_or_else(|| null("problem"))?;
        if n.is_null() || m.is_null() {
            return Err(null("n or m"));
        }
        // SAFETY: checked non-null
        unsafe {
            *n = p.inner.n();
            *m = p.inner.m();
        }
        Ok(())
    })
}

/// Frees a problem handle; null is ignored.
///
/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pd_problem_free(problem: *mut PdProblem) {
    if !problem.is_null() {
        // SAFETY: ownership returns from the caller
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_solver_config_default(out: *mut PdSolverConfig) -> PdStatus {
    guard(|| {
        // SAFETY: caller guarantees a writable pointer or null
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = SolverConfig::default().into();
        Ok(())
    })
}

/// Runs the solver from `x0` (length `n`) and computes the diagnostics.
/// `config` may be null for defaults.
///
/// # Safety
/// `problem` must be live, `x0` readable for `n` doubles, `config` null or
/// readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_solve(
    problem: *const PdProblem,
    x0: *const f64,
    n: usize,
    config: *const PdSolverConfig,
    out: *mut *mut PdReport,
) -> PdStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null
        let p = unsafe { problem.as_ref() }.ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        check_len(n, p.inner.n(), "x0")?;
        // SAFETY: caller guarantees n readable doubles
        let x0 = unsafe { in_slice(x0, n, "x0") }?;
        // SAFETY: caller guarantees null or readable
        let cfg = match unsafe { config.as_ref() } {
            Some(c) => c.to_config().map_err(|e| (PdStatus::InvalidArgument, e))?,
            None => SolverConfig::default(),
        };
        let x0 = Point::new(x0.to_vec()).map_err(|e| (PdStatus::InvalidArgument, e.to_string()))?;
        let report = solver::run(&p.inner, &x0, &cfg).map_err(solver_error)?;
        let diagnostics =
            diagnostics::summarize(&report, &p.inner, None).map_err(|e| (PdStatus::NumericalFailure, e.to_string()))?;
        // SAFETY: checked non-null
        unsafe { *out = Box::into_raw(Box::new(PdReport { report, diagnostics })) };
        Ok(())
    })
}

fn report_ref<'a>(r: *const PdReport) -> Result<&'a PdReport, (PdStatus, String)> {
    // SAFETY: callers of the public accessors guarantee a live handle or null
    unsafe { r.as_ref() }.ok_or_else(|| null("report"))
}

/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_report_termination(report: *const PdReport, out: *mut PdTermination) -> PdStatus {
    guard(|| {
        let r = report_ref(report)?;
        // SAFETY: caller guarantees writable or null
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = r.report.termination.into();
        Ok(())
    })
}

/// Number of records, including the terminal record.
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_report_num_records(report: *const PdReport, out: *mut usize) -> PdStatus {
    guard(|| {
        let r = report_ref(report)?;
        // SAFETY: caller guarantees writable or null
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = r.report.records.len();
        Ok(())
    })
}

/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_report_final_alpha(report: *const PdReport, out: *mut f64) -> PdStatus {
    guard(|| {
        let r = report_ref(report)?;
        // SAFETY: caller guarantees writable or null
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = r.report.final_alpha;
        Ok(())
    })
}

/// Copies the final point into `buf`, which must hold exactly `n` values.
///
/// # Safety
/// `report` must be live; `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_report_final_x(report: *const PdReport, buf: *mut f64, len: usize) -> PdStatus {
    guard(|| {
        let r = report_ref(report)?;
        check_len(len, r.report.final_x.len(), "buf")?;
        // SAFETY: caller guarantees len writable doubles
        unsafe { out_slice(buf, len, "buf") }?.copy_from_slice(&r.report.final_x);
        Ok(())
    })
}

fn record_at(r: &PdReport, k: usize) -> Result<&solver::IterationRecord, (PdStatus, String)> {
    r.report.records.get(k).ok_or_else(|| {
        (
            PdStatus::InvalidArgument,
            format!("record {k} out of range ({} records)", r.report.records.len()),
        )
    })
}

/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_report_record(report: *const PdReport, k: usize, out: *mut PdRecord) -> PdStatus {
    guard(|| {
        let rec = record_at(report_ref(report)?, k)?;
        // SAFETY: caller guarantees writable or null
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = PdRecord {
            k: rec.k as u64,
            t: rec.t,
            j: rec.j,
            alpha_upper: rec.alpha_upper,
            alpha_lower: rec.alpha_lower,
            norm_v: rec.norm_v(),
            sigma_certified: rec.sigma_certified,
            inner_iterations: rec.inner_iterations as u64,
        };
        Ok(())
    })
}

fn copy_record_field(
    report: *const PdReport,
    k: usize,
    buf: *mut f64,
    len: usize,
    field: fn(&solver::IterationRecord) -> &[f64],
) -> PdStatus {
    guard(|| {
        let values = field(record_at(report_ref(report)?, k)?);
        check_len(len, values.len(), "buf")?;
        // SAFETY: caller guarantees len writable doubles
        unsafe { out_slice(buf, len, "buf") }?.copy_from_slice(values);
        Ok(())
    })
}

/// Copies iterate `x^k` into `buf` (length `n`).
///
/// # Safety
/// `report` must be live; `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_report_record_x(report: *const PdReport, k: usize, buf: *mut f64, len: usize) -> PdStatus {
    copy_record_field(report, k, buf, len, |r| &r.x)
}

/// Copies `F(x^k)` into `buf` (length `m`).
///
/// # Safety
/// `report` must be live; `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_report_record_fx(report: *const PdReport, k: usize, buf: *mut f64, len: usize) -> PdStatus {
    copy_record_field(report, k, buf, len, |r| &r.fx)
}

/// Copies direction `v^k` into `buf` (length `n`).
///
/// # Safety
/// `report` must be live; `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_report_record_v(report: *const PdReport, k: usize, buf: *mut f64, len: usize) -> PdStatus {
    copy_record_field(report, k, buf, len, |r| &r.v)
}

/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_report_diagnostics(report: *const PdReport, out: *mut PdDiagnostics) -> PdStatus {
    guard(|| {
        let r = report_ref(report)?;
        // SAFETY: caller guarantees writable or null
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = (&r.diagnostics).into();
        Ok(())
    })
}

/// Frees a report handle; null is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pd_report_free(report: *mut PdReport) {
    if !report.is_null() {
        // SAFETY: ownership returns from the caller
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Solves the direction subproblem for a row-major `m × n` Jacobian with
/// default subproblem settings. `sigma = 0` requests the exact direction.
/// `v_out` receives `n` values and `w_out` (nullable) `m` weights.
///
/// # Safety
/// `jacobian` readable for `m·n` doubles; `v_out` writable for `n`;
/// `w_out` null or writable for `m`; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pd_direction_solve(
    jacobian: *const f64,
    m: usize,
    n: usize,
    sigma: f64,
    v_out: *mut f64,
    w_out: *mut f64,
    info: *mut PdDirection,
) -> PdStatus {
    guard(|| {
        if m == 0 || n == 0 {
            return Err((PdStatus::InvalidArgument, "dimensions must be positive".to_string()));
        }
        // SAFETY: caller guarantees m·n readable doubles
        let data = unsafe { in_slice(jacobian, m * n, "jacobian") }?;
        let jac =
            Jacobian::from_row_major(m, n, data.to_vec()).map_err(|e| (PdStatus::InvalidArgument, e.to_string()))?;
        let d = direction::solve_sigma_approx(&jac, sigma, &SubproblemConfig::default())
            .map_err(|e| (PdStatus::InvalidArgument, e.to_string()))?;
        // SAFETY: caller guarantees n writable doubles
        unsafe { out_slice(v_out, n, "v_out") }?.copy_from_slice(&d.v);
        if !w_out.is_null() {
            // SAFETY: non-null, caller guarantees m writable doubles
            unsafe { slice::from_raw_parts_mut(w_out, m) }.copy_from_slice(d.weights.as_slice());
        }
        // SAFETY: caller guarantees null or writable
        if let Some(info) = unsafe { info.as_mut() } {
            *info = PdDirection {
                alpha_lower: d.alpha_lower,
                alpha_upper: d.alpha_upper,
                sigma_certified: d.sigma_certified,
                critical: d.critical,
                inner_iterations: d.inner_iterations as u64,
            };
        }
        Ok(())
    })
}
