use std::ffi::{CStr, CString};
use std::ptr;

use neurols_ffi::*;

fn nk(n: usize, k: usize, seed: u64) -> *mut NlsInstance {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { nls_nk_generate(n, k, seed, &mut h) }, NlsStatus::Ok);
    h
}

fn last_error() -> String {
    let p = nls_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn evaluate_and_deltas_agree() {
    let inst = nk(12, 3, 5);
    assert_eq!(unsafe { nls_instance_n(inst) }, 12);
    let x: Vec<u8> = (0..12).map(|i| (i % 3 == 0) as u8).collect();
    let mut f = 0.0;
    assert_eq!(unsafe { nls_instance_evaluate(inst, x.as_ptr(), 12, &mut f) }, NlsStatus::Ok);
    let mut deltas = vec![0.0; 12];
    assert_eq!(unsafe { nls_instance_deltas(inst, x.as_ptr(), 12, deltas.as_mut_ptr()) }, NlsStatus::Ok);
    for (i, d) in deltas.iter().enumerate() {
        let mut y = x.clone();
        y[i] ^= 1;
        let mut g = 0.0;
        unsafe { nls_instance_evaluate(inst, y.as_ptr(), 12, &mut g) };
        assert!((d - (f - g)).abs() < 1e-12);
    }
    unsafe { nls_instance_free(inst) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { nls_nk_generate(4, 9, 1, &mut h) }, NlsStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { nls_nk_generate(4, 1, 1, ptr::null_mut()) }, NlsStatus::NullPointer);

    let inst = nk(8, 1, 2);
    let x = [0u8; 7];
    let mut f = 0.0;
    assert_eq!(
        unsafe { nls_instance_evaluate(inst, x.as_ptr(), 7, &mut f) },
        NlsStatus::DimensionMismatch
    );
    assert!(last_error().contains("expected 8"));
    unsafe { nls_instance_free(inst) };

    let missing = CString::new("/nonexistent/file.json").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { nls_instance_load(missing.as_ptr(), &mut out) }, NlsStatus::Io);
    let mut pol = ptr::null_mut();
    assert_eq!(unsafe { nls_policy_load(missing.as_ptr(), &mut pol) }, NlsStatus::Io);
    assert_eq!(
        unsafe { nls_policy_baseline(NlsBaseline::OneCommaLambda, 0, &mut pol) },
        NlsStatus::InvalidArgument
    );
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("i.json").to_str().unwrap()).unwrap();
    let inst = nk(10, 2, 3);
    assert_eq!(unsafe { nls_instance_save(inst, path.as_ptr()) }, NlsStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { nls_instance_load(path.as_ptr(), &mut back) }, NlsStatus::Ok);
    let x = [1u8, 0, 1, 1, 0, 0, 1, 0, 1, 1];
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        nls_instance_evaluate(inst, x.as_ptr(), 10, &mut a);
        nls_instance_evaluate(back, x.as_ptr(), 10, &mut b);
        nls_instance_free(inst);
        nls_instance_free(back);
    }
    assert_eq!(a, b);
}

#[test]
fn trajectory_is_deterministic_and_bhc_climbs() {
    let inst = nk(16, 2, 7);
    let mut pol = ptr::null_mut();
    assert_eq!(
        unsafe { nls_policy_baseline(NlsBaseline::BestImprovement, 0, &mut pol) },
        NlsStatus::Ok
    );
    let x0 = [0u8; 16];
    let mut f0 = 0.0;
    unsafe { nls_instance_evaluate(inst, x0.as_ptr(), 16, &mut f0) };
    let run = |seed| {
        let mut best = 0.0;
        let mut actions = vec![0usize; 32];
        let s = unsafe { nls_run_trajectory(inst, pol, x0.as_ptr(), 16, 32, seed, &mut best, actions.as_mut_ptr()) };
        assert_eq!(s, NlsStatus::Ok);
        (best, actions)
    };
    let (b1, a1) = run(9);
    let (b2, a2) = run(9);
    assert_eq!((b1, &a1), (b2, &a2));
    assert!(b1 >= f0);
    assert!(a1.iter().all(|&a| a < 16));

    let mut best = 0.0;
    let s = unsafe { nls_run_trajectory(inst, pol, x0.as_ptr(), 16, 0, 1, &mut best, ptr::null_mut()) };
    assert_eq!(s, NlsStatus::InvalidArgument);
    unsafe {
        nls_policy_free(pol);
        nls_instance_free(inst);
        nls_policy_free(ptr::null_mut());
        nls_instance_free(ptr::null_mut());
    }
}

#[test]
fn welch_through_c_abi() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0];
    let (mut t, mut df, mut p) = (0.0, 0.0, 0.0);
    let s = unsafe { nls_welch_t(a.as_ptr(), 5, b.as_ptr(), 5, &mut t, &mut df, &mut p) };
    assert_eq!(s, NlsStatus::Ok);
    assert!((t + 1.0).abs() < 1e-12 && (df - 8.0).abs() < 1e-12);
    assert!((p - 0.346_593_9).abs() < 1e-6);
    let s = unsafe { nls_welch_t(a.as_ptr(), 1, b.as_ptr(), 5, &mut t, &mut df, &mut p) };
    assert_eq!(s, NlsStatus::InvalidArgument);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/neurols.h")).unwrap();
    for name in [
        "nls_last_error_message",
        "nls_nk_generate",
        "nls_instance_load",
        "nls_instance_save",
        "nls_instance_free",
        "nls_instance_n",
        "nls_instance_evaluate",
        "nls_instance_deltas",
        "nls_policy_load",
        "nls_policy_baseline",
        "nls_policy_free",
        "nls_run_trajectory",
        "nls_welch_t",
        "typedef struct NlsInstance NlsInstance",
        "typedef struct NlsPolicy NlsPolicy",
        "NLS_STATUS_DIMENSION_MISMATCH = 5",
        "NLS_STATUS_PANIC = 6",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(exe) = std::env::current_exe() else { return };
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libneurols_ffi.a");
    if !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler unavailable");
        return;
    }
    let root = env!("CARGO_MANIFEST_DIR");
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(format!("{root}/include"))
        .arg(format!("{root}/tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
