use std::ffi::{CStr, CString};
use std::ptr;

use pdtrim_ffi::*;

fn last_error() -> String {
    let p = pdtrim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn pd_draws_are_seeded_and_ordered() {
    let draw = |seed| {
        let rng = pdtrim_rng_new(seed);
        let mut v = [0.0; 5];
        let mut tail = 0.0;
        let st = unsafe { pdtrim_sample_pd(rng, 0.5, 2, 5, 1e-6, v.as_mut_ptr(), &mut tail) };
        unsafe { pdtrim_rng_free(rng) };
        assert_eq!(st, PdtrimStatus::Ok);
        (v, tail)
    };
    let (v, tail) = draw(42);
    assert!(v.windows(2).all(|w| w[0] >= w[1]));
    assert!((v.iter().sum::<f64>() + tail - 1.0).abs() < 1e-12);
    assert_eq!(draw(42), (v, tail));
}

#[test]
fn jumps_decrease() {
    let rng = pdtrim_rng_new(1);
    let mut j = [0.0; 8];
    assert_eq!(unsafe { pdtrim_sample_jumps(rng, 0.7, 2.0, 1.5, 8, j.as_mut_ptr()) }, PdtrimStatus::Ok);
    assert!(j.windows(2).all(|w| w[0] > w[1]) && j[7] > 0.0);
    unsafe { pdtrim_rng_free(rng) };
}

#[test]
fn error_codes_and_messages() {
    let rng = pdtrim_rng_new(1);
    let mut v = [0.0; 2];
    let mut tail = 0.0;
    let st = unsafe { pdtrim_sample_pd(rng, 1.5, 0, 2, 1e-6, v.as_mut_ptr(), &mut tail) };
    assert_eq!(st, PdtrimStatus::Domain);
    assert!(last_error().contains("alpha"), "{}", last_error());
    let st = unsafe { pdtrim_sample_pd(rng, 0.5, 0, 2, 1e-6, ptr::null_mut(), &mut tail) };
    assert_eq!(st, PdtrimStatus::NullPointer);
    assert!(last_error().contains("values"));
    unsafe { pdtrim_rng_free(rng) };
    assert_eq!(unsafe { pdtrim_sample_pd(ptr::null_mut(), 0.5, 0, 2, 1e-6, v.as_mut_ptr(), &mut tail) }, PdtrimStatus::NullPointer);
}

#[test]
fn density_handle_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pdtrim_density_new(0.5, 1.0, 2, &mut h) }, PdtrimStatus::Ok);
    assert!(!h.is_null());
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { pdtrim_density_range(h, 0, &mut lo, &mut hi) }, PdtrimStatus::Ok);
    assert!(lo < 1.0 && hi > 10.0);
    let mut v = 0.0;
    assert_eq!(unsafe { pdtrim_density_eval(h, 0, 1.0, &mut v) }, PdtrimStatus::Ok);
    assert!(v > 0.0);
    assert_eq!(unsafe { pdtrim_density_eval(h, 0, hi + 1.0, &mut v) }, PdtrimStatus::Range);
    assert_eq!(unsafe { pdtrim_density_eval(h, 5, 1.0, &mut v) }, PdtrimStatus::Domain);
    unsafe { pdtrim_density_free(h) };
    unsafe { pdtrim_density_free(ptr::null_mut()) };
}

#[test]
fn constants_and_fit() {
    let mut k = 0.0;
    assert_eq!(unsafe { pdtrim_k_n(0.5, 1, &mut k) }, PdtrimStatus::Ok);
    assert!(k > 0.0);
    let mut l = 0.0;
    assert_eq!(unsafe { pdtrim_laplace_ratio(0.5, 1.0, 0.0, &mut l) }, PdtrimStatus::Ok);
    assert_eq!(l, 1.0);
    let w: Vec<f64> = (1..=50).map(|i| (i as f64).powi(-2)).collect();
    let (mut r, mut a, mut res) = (9usize, 0.0, 1.0);
    assert_eq!(unsafe { pdtrim_fit(w.as_ptr(), w.len(), 5, f64::NAN, &mut r, &mut a, &mut res) }, PdtrimStatus::Ok);
    assert_eq!(r, 0);
    assert!((a - 0.5).abs() < 1e-12);
    let flat = [1.0; 10];
    assert_eq!(unsafe { pdtrim_fit(flat.as_ptr(), 10, 3, -1.0, &mut r, &mut a, &mut res) }, PdtrimStatus::FitFailure);
}

#[test]
fn verify_returns_json() {
    let suite = CString::new("kn").unwrap();
    let mut json = ptr::null_mut();
    let mut pass = -1;
    assert_eq!(unsafe { pdtrim_verify(suite.as_ptr(), 0, 2000, &mut json, &mut pass) }, PdtrimStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { pdtrim_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v.as_array().unwrap().iter().any(|r| r["check_name"] == "kn_dual_forms"));
    assert!(pass == 0 || pass == 1);
    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { pdtrim_verify(bad.as_ptr(), 0, 2000, &mut json, &mut pass) }, PdtrimStatus::Domain);
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(pdtrim_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
