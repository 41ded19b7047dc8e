//! C interface to the gate compiler, the circuit verifier and the pair
//! dynamics.
//!
//! Objects are opaque handles created by `rq_*_new`/`rq_*_compile`-style
//! calls and released with the matching `rq_*_free`. Every fallible call
//! returns an [`RqStatus`]; on failure [`rq_last_error_message`] describes
//! the problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rotqudit::circuitsim::verify_circuit;
use rotqudit::dynamics::{propagate, EvolutionResult, PhaseBranch, PropagationSettings, SolverMode};
use rotqudit::encodings::Encoding;
use rotqudit::gates::{compile, CompileOptions, GateSpec, Layout, QuditCircuit};
use rotqudit::molecule::{MoleculeSpec, TrapSpec};
use rotqudit::trajectory::{confinement_timescale, ProfileKind, TrajectoryProfile};
use rotqudit::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Compute = 4,
    SizeGuard = 5,
    Panic = 6,
}

/// Compiled gate sequence.
pub struct RqCircuit(QuditCircuit);

/// Outcome of one trajectory propagation.
pub struct RqEvolution(EvolutionResult);

/// Truth-table comparison of a sequence.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RqVerification {
    pub fidelity: f64,
    pub max_deviation: f64,
    pub leakage: f64,
    pub entangler_count: usize,
    pub depth: usize,
    pub entangler_depth: usize,
    /// 1 if the sequence matches within tolerance.
    pub passed: u8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RqEvolutionSummary {
    pub f_iswap: f64,
    pub f_id: f64,
    pub fidelity_plus: f64,
    pub fidelity_minus: f64,
    pub unitarity_defect: f64,
    pub leakage: f64,
    pub pulse_area: f64,
    /// +1 for the +i branch, -1 for -i.
    pub phase_branch: i32,
    pub steps: usize,
    /// Side of the square operator.
    pub dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> RqStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => RqStatus::Parse,
        Error::Domain(_) | Error::Config(_) => RqStatus::InvalidArgument,
        Error::SizeGuard { .. } => RqStatus::SizeGuard,
        _ => RqStatus::Compute,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (RqStatus, String)>) -> RqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RqStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RqStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RqStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RqStatus, String) {
    (RqStatus::NullPointer, format!("{what} is null"))
}

/// Reads a required C string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RqStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RqStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Reads an optional C string (null means absent).
unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, (RqStatus, String)> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

fn branch_of(sign: i32) -> Result<PhaseBranch, (RqStatus, String)> {
    match sign {
        1 => Ok(PhaseBranch::PlusI),
        -1 => Ok(PhaseBranch::MinusI),
        _ => Err((RqStatus::InvalidArgument, format!("branch must be +1 or -1, got {sign}"))),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, (RqStatus, String)> {
    s.parse().map_err(lib_err)
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Transport timescale t₀ (μs) of a molecule preset in the reference trap.
///
/// # Safety
/// `molecule` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_confinement_timescale(molecule: *const c_char, out: *mut f64) -> RqStatus {
    guard(|| {
        let spec = MoleculeSpec::preset(text(molecule, "molecule")?).map_err(lib_err)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = confinement_timescale(&spec, &TrapSpec::reference());
        Ok(())
    })
}

/// Compiles a named gate. `encoding` may be null for the gate's default;
/// `n` sets the qubit count of cnz/toffoli; `layout` is 0 (linear) or 1
/// (tree); `branch` is the hardware entangler phase, +1 or -1.
///
/// # Safety
/// String arguments must be NUL-terminated or null where allowed; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_compile(
    gate: *const c_char,
    encoding: *const c_char,
    n: usize,
    layout: u32,
    branch: i32,
    out: *mut *mut RqCircuit,
) -> RqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let layout = match layout {
            0 => Layout::Linear,
            1 => Layout::BinaryTree,
            _ => return Err((RqStatus::InvalidArgument, format!("unknown layout {layout}"))),
        };
        let spec = GateSpec::by_name(text(gate, "gate")?, n, layout).map_err(lib_err)?;
        let enc = match opt_text(encoding, "encoding")? {
            Some(e) => parse::<Encoding>(e)?,
            None => spec.default_encoding(),
        };
        let options = CompileOptions {
            physical_branch: branch_of(branch)?,
        };
        let circuit = compile(&spec, enc, options).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RqCircuit(circuit)));
        Ok(())
    })
}

/// Parses the line-oriented sequence format.
///
/// # Safety
/// `source` must be NUL-terminated; `default_encoding` may be null; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_from_text(
    source: *const c_char,
    default_encoding: *const c_char,
    out: *mut *mut RqCircuit,
) -> RqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let enc = match opt_text(default_encoding, "default_encoding")? {
            Some(e) => parse::<Encoding>(e)?,
            None => Encoding::Qubit,
        };
        let circuit = QuditCircuit::from_text(text(source, "source")?, enc).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RqCircuit(circuit)));
        Ok(())
    })
}

/// Text form of a circuit; free the result with [`rq_string_free`].
///
/// # Safety
/// `circuit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_to_text(circuit: *const RqCircuit, out: *mut *mut c_char) -> RqStatus {
    guard(|| {
        let c = circuit.as_ref().ok_or_else(|| null("circuit"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(c.0.to_text()).expect("no NUL in circuit text").into_raw();
        Ok(())
    })
}

/// Number of native operations; 0 for a null handle.
///
/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_num_ops(circuit: *const RqCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.ops.len())
}

/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_num_qudits(circuit: *const RqCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.num_qudits)
}

/// Entangler applications (a power-p op counts p).
///
/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_entangler_count(circuit: *const RqCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.entangler_count())
}

/// Compares a circuit with a named gate's truth table on hardware with
/// entangler phase `branch` (+1 or -1).
///
/// # Safety
/// `circuit` must be a live handle, `gate` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_verify(
    circuit: *const RqCircuit,
    gate: *const c_char,
    layout: u32,
    branch: i32,
    tolerance: f64,
    out: *mut RqVerification,
) -> RqStatus {
    guard(|| {
        let c = circuit.as_ref().ok_or_else(|| null("circuit"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let layout = if layout == 1 { Layout::BinaryTree } else { Layout::Linear };
        let spec = GateSpec::by_name(text(gate, "gate")?, c.0.num_qudits, layout).map_err(lib_err)?;
        let v = verify_circuit(&c.0, &spec, branch_of(branch)?, tolerance).map_err(lib_err)?;
        *out = RqVerification {
            fidelity: v.fidelity,
            max_deviation: v.max_deviation,
            leakage: v.leakage,
            entangler_count: v.entangler_count,
            depth: v.depth,
            entangler_depth: v.entangler_depth,
            passed: u8::from(v.passed),
        };
        Ok(())
    })
}

/// # Safety
/// `circuit` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rq_circuit_free(circuit: *mut RqCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Propagates a molecule pair along a trajectory in the reference trap.
/// `mode` may be null (secular).
///
/// # Safety
/// Strings must be NUL-terminated (or null where allowed); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rq_evolve(
    molecule: *const c_char,
    kind: *const c_char,
    tau_us: f64,
    mode: *const c_char,
    j_max: u32,
    out: *mut *mut RqEvolution,
) -> RqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let spec = MoleculeSpec::preset(text(molecule, "molecule")?).map_err(lib_err)?;
        let kind = parse::<ProfileKind>(text(kind, "kind")?)?;
        let profile = TrajectoryProfile::from_trap(kind, &TrapSpec::reference(), tau_us).map_err(lib_err)?;
        let settings = PropagationSettings {
            j_max,
            mode: match opt_text(mode, "mode")? {
                Some(m) => parse::<SolverMode>(m)?,
                None => SolverMode::Secular,
            },
            ..PropagationSettings::default()
        };
        let result = propagate(&spec, &profile, &settings).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(RqEvolution(result)));
        Ok(())
    })
}

/// # Safety
/// `evolution` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rq_evolution_summary(
    evolution: *const RqEvolution,
    out: *mut RqEvolutionSummary,
) -> RqStatus {
    guard(|| {
        let r = &evolution.as_ref().ok_or_else(|| null("evolution"))?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = RqEvolutionSummary {
            f_iswap: r.f_iswap,
            f_id: r.f_id,
            fidelity_plus: r.fidelity_plus,
            fidelity_minus: r.fidelity_minus,
            unitarity_defect: r.unitarity_defect,
            leakage: r.leakage,
            pulse_area: r.pulse_area,
            phase_branch: if r.phase_branch == PhaseBranch::PlusI { 1 } else { -1 },
            steps: r.steps,
            dim: r.operator.nrows(),
        };
        Ok(())
    })
}

/// Copies the evolved operator row-major into `re` and `im`, each of
/// length `len` = dim².
///
/// # Safety
/// `evolution` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rq_evolution_operator(
    evolution: *const RqEvolution,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> RqStatus {
    guard(|| {
        let op = &evolution.as_ref().ok_or_else(|| null("evolution"))?.0.operator;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let n = op.nrows();
        if len != n * n {
            return Err((RqStatus::InvalidArgument, format!("buffer length {len}, need {}", n * n)));
        }
        let (re, im) = (std::slice::from_raw_parts_mut(re, len), std::slice::from_raw_parts_mut(im, len));
        for r in 0..n {
            for c in 0..n {
                re[r * n + c] = op[(r, c)].re;
                im[r * n + c] = op[(r, c)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `evolution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rq_evolution_free(evolution: *mut RqEvolution) {
    if !evolution.is_null() {
        drop(Box::from_raw(evolution));
    }
}
