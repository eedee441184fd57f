use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use laminate_bloch_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { lb_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn sofc() -> *mut LbCell {
    let mut cell = ptr::null_mut();
    assert_eq!(unsafe { lb_cell_sofc_bilayer(&mut cell) }, LbStatus::Ok);
    assert!(!cell.is_null());
    cell
}

#[test]
fn sofc_multipliers_come_in_reciprocal_pairs() {
    let cell = sofc();
    assert!((unsafe { lb_cell_period(cell) } - 2e-3).abs() < 1e-15);
    let mut sol = ptr::null_mut();
    let prec = CString::new("auto").unwrap();
    let st = unsafe { lb_solve_floquet(cell, 0.0, 1e5, prec.as_ptr(), 7, &mut sol) };
    assert_eq!(st, LbStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { lb_solution_len(sol) }, 8);
    assert!(unsafe { lb_solution_precision_bits(sol) } >= 106);
    assert!(unsafe { lb_solution_log2_det_residual(sol) } < -40.0);
    let mut ms = Vec::new();
    for i in 0..8 {
        let mut m = std::mem::MaybeUninit::<LbMultiplier>::uninit();
        assert_eq!(unsafe { lb_solution_multiplier(sol, i, m.as_mut_ptr()) }, LbStatus::Ok);
        ms.push(unsafe { m.assume_init() });
    }
    for (i, m) in ms.iter().enumerate() {
        let p = &ms[m.partner as usize];
        assert_eq!(p.partner as usize, i);
        // ln λ + ln λ' = 0 up to the log scale of the pair
        let tol = 1e-8 * (1.0 + m.ln_abs.abs());
        assert!((m.ln_abs + p.ln_abs).abs() < tol, "{m:?} vs {p:?}");
    }
    let mut m = std::mem::MaybeUninit::<LbMultiplier>::uninit();
    assert_eq!(unsafe { lb_solution_multiplier(sol, 8, m.as_mut_ptr()) }, LbStatus::IndexOutOfRange);
    assert!(last_error().contains("out of range"));
    unsafe {
        lb_solution_free(sol);
        lb_cell_free(cell);
    }
}

#[test]
fn decoupled_cell_has_a_real_shear_pair_below_first_gap() {
    let cell = sofc();
    let mut dec = ptr::null_mut();
    assert_eq!(unsafe { lb_cell_with_coupling(cell, 0.0, &mut dec) }, LbStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { lb_solve_floquet(dec, 0.0, 1e6, ptr::null(), 0, &mut sol) }, LbStatus::Ok);
    let mut shear = 0;
    for i in 0..8 {
        let mut m = std::mem::MaybeUninit::<LbMultiplier>::uninit();
        unsafe { lb_solution_multiplier(sol, i, m.as_mut_ptr()) };
        let m = unsafe { m.assume_init() };
        if m.classification == LbClassification::ShearPropagating {
            shear += 1;
            assert!(m.k2i_star.abs() < 1e-6);
        }
    }
    assert_eq!(shear, 2);
    unsafe {
        lb_solution_free(sol);
        lb_cell_free(dec);
        lb_cell_free(cell);
    }
}

#[test]
fn bad_arguments_map_to_status_codes() {
    let cell = sofc();
    let mut sol = ptr::null_mut();
    let bad = CString::new("octuple").unwrap();
    assert_eq!(unsafe { lb_solve_floquet(cell, 0.0, 1.0, bad.as_ptr(), 0, &mut sol) }, LbStatus::InvalidArgument);
    assert!(sol.is_null());
    assert_eq!(unsafe { lb_solve_floquet(cell, 0.0, -1.0, ptr::null(), 0, &mut sol) }, LbStatus::InvalidArgument);
    assert_eq!(unsafe { lb_solve_floquet(ptr::null(), 0.0, 1.0, ptr::null(), 0, &mut sol) }, LbStatus::NullPointer);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lb_cell_with_coupling(cell, -0.5, &mut out) }, LbStatus::InvalidArgument);
    let json = CString::new("{\"cell\": 3}").unwrap();
    assert_eq!(unsafe { lb_cell_from_config_json(json.as_ptr(), &mut out) }, LbStatus::Config);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { lb_solution_len(ptr::null()) }, 0);
    unsafe {
        lb_cell_free(ptr::null_mut());
        lb_solution_free(ptr::null_mut());
        lb_cell_free(cell);
    }
}

#[test]
fn config_json_cell_matches_preset() {
    let json = CString::new(
        r#"{"cell": {"layers": [{"preset": "sofc_phase1", "thickness": 1e-3}, {"preset": "sofc_phase2", "thickness": 1e-3}]}}"#,
    )
    .unwrap();
    let mut cell = ptr::null_mut();
    let st = unsafe { lb_cell_from_config_json(json.as_ptr(), &mut cell) };
    assert_eq!(st, LbStatus::Ok, "{}", last_error());
    assert!((unsafe { lb_cell_period(cell) } - 2e-3).abs() < 1e-15);
    unsafe { lb_cell_free(cell) };
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include");
    // target/<profile>/ holds the cdylib next to the test's deps/ directory
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("liblaminate_bloch_ffi.so").exists() {
        eprintln!("cdylib not found in {}; skipping C link check", lib_dir.display());
        return;
    }
    let dir = std::env::temp_dir().join(format!("lb_ffi_c_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "laminate_bloch.h"
int main(void) {
    LbCell *cell = NULL;
    LbSolution *sol = NULL;
    if (lb_cell_sofc_bilayer(&cell) != LB_STATUS_OK) return 1;
    if (lb_solve_floquet(cell, 0.0, 1000.0, "auto", 0, &sol) != LB_STATUS_OK) return 2;
    if (lb_solution_len(sol) != 8) return 3;
    LbMultiplier m;
    if (lb_solution_multiplier(sol, 0, &m) != LB_STATUS_OK) return 4;
    printf("%s %u\n", lb_version(), m.partner);
    lb_solution_free(sol);
    lb_cell_free(cell);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-llaminate_bloch_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("cc not available");
    assert!(status.success());
    let out = Command::new(&bin).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
    let _ = std::fs::remove_dir_all(&dir);
}
