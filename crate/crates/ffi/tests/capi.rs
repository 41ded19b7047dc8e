use std::ffi::{CStr, CString};
use std::ptr;

use rotqudit_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rq_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn compile_verify_round_trip() {
    unsafe {
        let mut c: *mut RqCircuit = ptr::null_mut();
        let st = rq_circuit_compile(cstr("cnz").as_ptr(), ptr::null(), 4, 1, 1, &mut c);
        assert_eq!(st, RqStatus::Ok, "{}", last_error());
        assert_eq!(rq_circuit_entangler_count(c), 6);
        assert_eq!(rq_circuit_num_qudits(c), 4);

        let mut v = RqVerification::default();
        let st = rq_circuit_verify(c, cstr("cnz").as_ptr(), 1, 1, 1e-10, &mut v);
        assert_eq!(st, RqStatus::Ok, "{}", last_error());
        assert_eq!(v.passed, 1);
        assert!((v.fidelity - 1.0).abs() < 1e-10);

        let mut txt: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(rq_circuit_to_text(c, &mut txt), RqStatus::Ok);
        let mut back: *mut RqCircuit = ptr::null_mut();
        assert_eq!(rq_circuit_from_text(txt, ptr::null(), &mut back), RqStatus::Ok);
        assert_eq!(rq_circuit_num_ops(back), rq_circuit_num_ops(c));
        rq_string_free(txt);
        rq_circuit_free(back);
        rq_circuit_free(c);
    }
}

#[test]
fn minus_branch_compile_passes_on_minus_hardware() {
    unsafe {
        let mut c: *mut RqCircuit = ptr::null_mut();
        assert_eq!(rq_circuit_compile(cstr("cnot").as_ptr(), cstr("qubit").as_ptr(), 2, 0, -1, &mut c), RqStatus::Ok);
        let mut v = RqVerification::default();
        assert_eq!(rq_circuit_verify(c, cstr("cnot").as_ptr(), 0, -1, 1e-10, &mut v), RqStatus::Ok);
        assert_eq!(v.passed, 1);
        assert_eq!(rq_circuit_verify(c, cstr("cnot").as_ptr(), 0, 1, 1e-10, &mut v), RqStatus::Ok);
        assert_eq!(v.passed, 0);
        rq_circuit_free(c);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut c: *mut RqCircuit = ptr::null_mut();
        assert_eq!(
            rq_circuit_compile(cstr("nope").as_ptr(), ptr::null(), 2, 0, 1, &mut c),
            RqStatus::InvalidArgument
        );
        assert!(c.is_null());
        assert!(last_error().contains("nope"));

        assert_eq!(rq_circuit_compile(ptr::null(), ptr::null(), 2, 0, 1, &mut c), RqStatus::NullPointer);
        assert_eq!(rq_circuit_compile(cstr("cnot").as_ptr(), ptr::null(), 2, 0, 3, &mut c), RqStatus::InvalidArgument);
        assert_eq!(
            rq_circuit_from_text(cstr("RX 0 0,0 1,0 1.0\nbogus\n").as_ptr(), ptr::null(), &mut c),
            RqStatus::Parse
        );
        assert!(last_error().contains('2'), "{}", last_error());

        let mut t0 = 0.0;
        assert_eq!(rq_confinement_timescale(cstr("srf").as_ptr(), &mut t0), RqStatus::Ok);
        assert!(last_error().is_empty());
        assert!((t0 - 8.02).abs() / 8.02 < 0.01);
        assert_eq!(rq_confinement_timescale(cstr("xx").as_ptr(), &mut t0), RqStatus::InvalidArgument);

        rq_circuit_free(ptr::null_mut());
        rq_evolution_free(ptr::null_mut());
        assert_eq!(rq_circuit_num_ops(ptr::null()), 0);
    }
}

#[test]
fn evolve_handle() {
    unsafe {
        let mut h: *mut RqEvolution = ptr::null_mut();
        let st = rq_evolve(cstr("srf").as_ptr(), cstr("cosine").as_ptr(), 82.59, ptr::null(), 4, &mut h);
        assert_eq!(st, RqStatus::Ok, "{}", last_error());
        let mut s = RqEvolutionSummary::default();
        assert_eq!(rq_evolution_summary(h, &mut s), RqStatus::Ok);
        assert!(s.f_iswap >= 0.99);
        assert!(s.unitarity_defect <= 1e-8);
        let len = s.dim * s.dim;
        let (mut re, mut im) = (vec![0.0; len], vec![0.0; len]);
        assert_eq!(rq_evolution_operator(h, re.as_mut_ptr(), im.as_mut_ptr(), len), RqStatus::Ok);
        let norm: f64 = (0..s.dim).map(|c| re[c] * re[c] + im[c] * im[c]).sum();
        assert!((norm - 1.0).abs() < 1e-8);
        assert_eq!(rq_evolution_operator(h, re.as_mut_ptr(), im.as_mut_ptr(), 3), RqStatus::InvalidArgument);
        rq_evolution_free(h);

        assert_eq!(
            rq_evolve(cstr("srf").as_ptr(), cstr("cosine").as_ptr(), -1.0, ptr::null(), 4, &mut h),
            RqStatus::InvalidArgument
        );
        assert!(h.is_null());
    }
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rotqudit.h")).unwrap();
    for name in [
        "rq_last_error_message",
        "rq_circuit_compile",
        "rq_circuit_verify",
        "rq_circuit_free",
        "rq_evolve",
        "rq_evolution_operator",
        "typedef struct RqCircuit RqCircuit",
        "RQ_STATUS_NULL_POINTER",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    let v = unsafe { CStr::from_ptr(rq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = std::env::temp_dir().join(format!("rotqudit_header_check_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"rotqudit.h\"\nint main(void) { RqCircuit *c = 0; return (int)rq_circuit_num_ops(c); }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status();
    let _ = std::fs::remove_file(&src);
    match status {
        Ok(s) => assert!(s.success(), "C compiler rejected the header"),
        Err(e) => eprintln!("no C compiler available ({e}); header syntax not checked"),
    }
}
