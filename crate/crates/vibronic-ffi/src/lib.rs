//! C ABI over the `vibronic` library.
//!
//! Every fallible call returns a [`VibronicStatus`]; on failure the message is
//! available from [`vibronic_last_error`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.
//! Strings returned to the caller are released with [`vibronic_string_free`].
//!
//! The library links OpenBLAS. On CPUs whose auto-detected kernel misbehaves
//! set `OPENBLAS_CORETYPE=Haswell` in the environment before loading it;
//! [`vibronic_backend_check`] reports whether the eigensolver is sound.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use vibronic::bo::weyl_count;
use vibronic::config::ScenarioConfig;
use vibronic::engine::TrajectoryRow;
use vibronic::fermion::CmqbHamiltonian;
use vibronic::scenario::{Scenario, SimulationOutput};
use vibronic::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VibronicStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Stage selected by [`vibronic_scenario_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VibronicCommand {
    Integrals = 0,
    Map = 1,
    Simulate = 2,
    Tomography = 3,
}

/// One trajectory row; `fon` holds the four spin-orbital occupations.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VibronicTrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub fon: [f64; 4],
    pub r_mean: f64,
    pub r2_mean: f64,
}

/// Configured scenario with its output directory.
pub struct VibronicScenario {
    inner: Scenario,
}

/// Mapped qubit-boson Hamiltonian.
pub struct VibronicHamiltonian {
    inner: CmqbHamiltonian,
}

/// Trajectory of one propagation.
pub struct VibronicSimulation {
    rows: Vec<TrajectoryRow>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> VibronicStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::Config(_) => VibronicStatus::Config,
        Error::Io(_) | Error::Json(_) => VibronicStatus::Io,
        Error::InvalidParameter(_)
        | Error::Grid(_)
        | Error::IndexOutOfRange(_)
        | Error::MissingLabel(_)
        | Error::Parity(_)
        | Error::Compare(_)
        | Error::DimensionMismatch { .. }
        | Error::DimensionTooLarge { .. } => VibronicStatus::InvalidArgument,
        _ => VibronicStatus::Numerical,
    }
}

/// Runs `f`, records any error or panic and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), (VibronicStatus, String)>) -> VibronicStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VibronicStatus::Ok,
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
            set_error(format!("panic: {msg}"));
            VibronicStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (VibronicStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VibronicStatus, String) {
    (VibronicStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn optional_str<'a>(p: *const c_char) -> Result<Option<&'a str>, (VibronicStatus, String)> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p).to_str().map(Some).map_err(|_| {
        (
            VibronicStatus::InvalidArgument,
            "string is not valid UTF-8".into(),
        )
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn vibronic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn vibronic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Checks the linear-algebra backend on a small eigenproblem.
#[no_mangle]
pub extern "C" fn vibronic_backend_check() -> VibronicStatus {
    guard(|| vibronic::linalg::backend_self_check().map_err(lib_err))
}

/// Creates a scenario from TOML text (null for defaults) and an output
/// directory (null keeps `output_dir` from the configuration).
///
/// # Safety
/// `toml` and `out_dir` must be null or valid NUL-terminated strings; `out`
/// must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn vibronic_scenario_new(
    toml: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut VibronicScenario,
) -> VibronicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut cfg = match optional_str(toml)? {
            Some(text) => ScenarioConfig::from_toml(text).map_err(lib_err)?,
            None => ScenarioConfig::default(),
        };
        if let Some(dir) = optional_str(out_dir)? {
            cfg.output_dir = PathBuf::from(dir);
        }
        let inner = Scenario::new(cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VibronicScenario { inner }));
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `s` must be null or a handle from [`vibronic_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vibronic_scenario_free(s: *mut VibronicScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs one stage and writes its files into the output directory.
///
/// # Safety
/// `s` must be a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn vibronic_scenario_run(
    s: *const VibronicScenario,
    command: VibronicCommand,
) -> VibronicStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let sc = &s.inner;
        match command {
            VibronicCommand::Integrals => sc.run_integrals().map(drop),
            VibronicCommand::Map => sc.run_map().map(drop),
            VibronicCommand::Simulate => sc.run_simulate().map(drop),
            VibronicCommand::Tomography => sc.run_tomography().map(drop),
        }
        .map_err(lib_err)
    })
}

/// Builds (or loads from cache) the mapped Hamiltonian.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn vibronic_hamiltonian_build(
    s: *const VibronicScenario,
    out: *mut *mut VibronicHamiltonian,
) -> VibronicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let es = s.inner.electronic().map_err(lib_err)?;
        let inner = s.inner.hamiltonian(&es).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VibronicHamiltonian { inner }));
        Ok(())
    })
}

/// Releases a Hamiltonian; null is ignored.
///
/// # Safety
/// `h` must be null or a handle from [`vibronic_hamiltonian_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vibronic_hamiltonian_free(h: *mut VibronicHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of Pauli terms, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live Hamiltonian handle.
#[no_mangle]
pub unsafe extern "C" fn vibronic_hamiltonian_term_count(h: *const VibronicHamiltonian) -> usize {
    h.as_ref().map_or(0, |h| h.inner.terms.len())
}

/// Term `index`: its Pauli letters (qubit 1 first, NUL-terminated) into
/// `pauli` of capacity `pauli_len`, and its constant and (b + b†) coefficients.
///
/// # Safety
/// `h` must be a live handle; `pauli` must hold `pauli_len` bytes; `v0` and
/// `v1` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vibronic_hamiltonian_term(
    h: *const VibronicHamiltonian,
    index: usize,
    pauli: *mut c_char,
    pauli_len: usize,
    v0: *mut f64,
    v1: *mut f64,
) -> VibronicStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("hamiltonian"))?;
        if pauli.is_null() || v0.is_null() || v1.is_null() {
            return Err(null("output"));
        }
        let term = h.inner.terms.get(index).ok_or_else(|| {
            (
                VibronicStatus::InvalidArgument,
                format!("term {index} of {}", h.inner.terms.len()),
            )
        })?;
        let letters = term.pauli.to_string();
        if pauli_len < letters.len() + 1 {
            return Err((
                VibronicStatus::InvalidArgument,
                format!("buffer of {pauli_len} bytes too small"),
            ));
        }
        ptr::copy_nonoverlapping(letters.as_ptr().cast(), pauli, letters.len());
        *pauli.add(letters.len()) = 0;
        *v0 = term.v0;
        *v1 = term.v1;
        Ok(())
    })
}

/// Boson frequency of the Hamiltonian, or NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live Hamiltonian handle.
#[no_mangle]
pub unsafe extern "C" fn vibronic_hamiltonian_omega(h: *const VibronicHamiltonian) -> f64 {
    h.as_ref().map_or(f64::NAN, |h| h.inner.omega)
}

/// JSON form of the Hamiltonian; release with [`vibronic_string_free`].
///
/// # Safety
/// `h` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn vibronic_hamiltonian_to_json(
    h: *const VibronicHamiltonian,
    out: *mut *mut c_char,
) -> VibronicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let h = h.as_ref().ok_or_else(|| null("hamiltonian"))?;
        let json = h.inner.to_json().map_err(lib_err)?;
        let c = CString::new(json).map_err(|e| (VibronicStatus::Io, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vibronic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Propagates with the configured method without writing files.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn vibronic_simulate(
    s: *const VibronicScenario,
    out: *mut *mut VibronicSimulation,
) -> VibronicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        let es = s.inner.electronic().map_err(lib_err)?;
        let h = s.inner.hamiltonian(&es).map_err(lib_err)?;
        let SimulationOutput { trajectory, .. } = s.inner.simulate(&es, &h).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VibronicSimulation { rows: trajectory }));
        Ok(())
    })
}

/// Releases a simulation; null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from [`vibronic_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vibronic_simulation_free(sim: *mut VibronicSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of trajectory rows, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn vibronic_simulation_len(sim: *const VibronicSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.rows.len())
}

/// Copies trajectory row `index` into `row`.
///
/// # Safety
/// `sim` must be a live handle and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn vibronic_simulation_row(
    sim: *const VibronicSimulation,
    index: usize,
    row: *mut VibronicTrajectoryRow,
) -> VibronicStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("simulation"))?;
        if row.is_null() {
            return Err(null("row"));
        }
        let r = sim.rows.get(index).ok_or_else(|| {
            (
                VibronicStatus::InvalidArgument,
                format!("row {index} of {}", sim.rows.len()),
            )
        })?;
        *row = VibronicTrajectoryRow {
            t: r.t,
            norm: r.norm,
            energy: r.energy,
            fon: r.fon,
            r_mean: r.r_mean,
            r2_mean: r.r2_mean,
        };
        Ok(())
    })
}

/// Number of spin-adapted configurations for spin `two_s / 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vibronic_weyl_count(
    two_s: u32,
    n_spin_orbitals: u32,
    n_electrons: u32,
    out: *mut u64,
) -> VibronicStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = weyl_count(two_s, n_spin_orbitals, n_electrons).map_err(lib_err)?;
        *out = u64::try_from(n).map_err(|_| {
            (
                VibronicStatus::InvalidArgument,
                format!("count {n} exceeds 64 bits"),
            )
        })?;
        Ok(())
    })
}
