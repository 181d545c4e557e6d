use std::ffi::{CStr, CString};
use std::ptr;

use subpost_ffi::*;

fn last_error() -> String {
    let p = subpost_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn chains(dim: usize, data: &[Vec<f64>]) -> *mut SubpostChains {
    let mut h = ptr::null_mut();
    assert_eq!(subpost_chains_new(dim, &mut h), SubpostStatus::Ok);
    for c in data {
        let st = unsafe { subpost_chains_add(h, c.as_ptr(), c.len() / dim) };
        assert_eq!(st, SubpostStatus::Ok);
    }
    h
}

#[test]
fn ar_shifts_to_grand_mean() {
    let h = chains(1, &[vec![-1.0, 1.0], vec![3.0, 5.0]]);
    assert_eq!(unsafe { subpost_chains_count(h) }, 2);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { subpost_combine_ar(h, &mut s) }, SubpostStatus::Ok);
    assert_eq!(unsafe { subpost_sample_len(s) }, 4);
    assert_eq!(unsafe { subpost_sample_dim(s) }, 1);
    let mut draws = [0.0; 4];
    assert_eq!(unsafe { subpost_sample_draws(s, draws.as_mut_ptr(), 4) }, SubpostStatus::Ok);
    assert_eq!(draws, [1.0, 3.0, 1.0, 3.0]);
    let mut center = [0.0];
    assert_eq!(unsafe { subpost_sample_center(s, center.as_mut_ptr(), 1) }, SubpostStatus::Ok);
    assert_eq!(center, [2.0]);
    let mut small = [0.0; 2];
    assert_eq!(
        unsafe { subpost_sample_draws(s, small.as_mut_ptr(), 2) },
        SubpostStatus::InvalidArgument
    );
    assert!(last_error().contains("buffer"));
    unsafe {
        subpost_sample_free(s);
        subpost_chains_free(h);
    }
}

#[test]
fn cmc_single_chain_identity() {
    let data = vec![0.1, 0.4, -0.3, 0.8, 0.2];
    let h = chains(1, &[data.clone()]);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { subpost_combine_cmc(h, &mut s) }, SubpostStatus::Ok);
    let mut out = [0.0; 5];
    assert_eq!(unsafe { subpost_sample_draws(s, out.as_mut_ptr(), 5) }, SubpostStatus::Ok);
    for (a, b) in out.iter().zip(&data) {
        assert!((a - b).abs() < 1e-12);
    }
    unsafe {
        subpost_sample_free(s);
        subpost_chains_free(h);
    }
}

#[test]
fn empty_chain_set_is_an_error() {
    let h = chains(2, &[]);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { subpost_combine_ar(h, &mut s) }, SubpostStatus::InvalidArgument);
    assert!(s.is_null());
    unsafe { subpost_chains_free(h) };
}

#[test]
fn null_handles() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { subpost_combine_ar(ptr::null(), &mut s) }, SubpostStatus::NullPointer);
    assert_eq!(subpost_chains_new(1, ptr::null_mut()), SubpostStatus::NullPointer);
    unsafe {
        subpost_chains_free(ptr::null_mut());
        subpost_sample_free(ptr::null_mut());
    }
}

#[test]
fn kl_and_tv() {
    let (mu1, mu2) = ([1.0, 0.0], [0.0, 0.0]);
    let sigma = [1.0, 0.0, 0.0, 1.0];
    let mut kl = 0.0;
    let st = unsafe { subpost_gaussian_kl(mu1.as_ptr(), mu2.as_ptr(), sigma.as_ptr(), 2, &mut kl) };
    assert_eq!(st, SubpostStatus::Ok);
    assert_eq!(kl, 0.5);
    let mut tv = 0.0;
    assert_eq!(unsafe { subpost_tv_bound(0.25, &mut tv) }, SubpostStatus::Ok);
    assert_eq!(tv, 1.0);
    assert_eq!(unsafe { subpost_tv_bound(-1.0, &mut tv) }, SubpostStatus::Numerical);
    let bad = [1.0, 2.0, 2.0, 1.0];
    let st = unsafe { subpost_gaussian_kl(mu1.as_ptr(), mu2.as_ptr(), bad.as_ptr(), 2, &mut kl) };
    assert_eq!(st, SubpostStatus::NotPositiveDefinite);
}

#[test]
fn l2_identical_samples_is_zero() {
    let a: Vec<f64> = (0..400).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
    let mut total = -1.0;
    let mut per = [0.0; 2];
    let st = unsafe { subpost_l2_samples(a.as_ptr(), 200, a.as_ptr(), 200, 2, 128, &mut total, per.as_mut_ptr()) };
    assert_eq!(st, SubpostStatus::Ok);
    assert_eq!(total, 0.0);
    assert_eq!(per, [0.0, 0.0]);
}

#[test]
fn run_experiment_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nexample = \"beta-bernoulli\"\nn = 1000\nk = [10]\ncombiners = [\"AR\", \"CMC\"]\ndraws = 500\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let cfg_c = CString::new(cfg.to_str().unwrap()).unwrap();
    let out_c = CString::new(out.to_str().unwrap()).unwrap();
    let mut ok = 0;
    let st = unsafe { subpost_run_experiment(cfg_c.as_ptr(), out_c.as_ptr(), &mut ok) };
    assert_eq!(st, SubpostStatus::Ok);
    assert_eq!(ok, 1);
    assert!(out.join("results.csv").exists());

    let missing = CString::new("/nonexistent/c.toml").unwrap();
    let st = unsafe { subpost_run_experiment(missing.as_ptr(), ptr::null(), ptr::null_mut()) };
    assert_eq!(st, SubpostStatus::Io);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/subpost.h")).unwrap();
    for f in [
        "subpost_last_error",
        "subpost_version",
        "subpost_chains_new",
        "subpost_chains_add",
        "subpost_chains_free",
        "subpost_combine_ar",
        "subpost_combine_cmc",
        "subpost_sample_draws",
        "subpost_sample_free",
        "subpost_gaussian_kl",
        "subpost_tv_bound",
        "subpost_l2_samples",
        "subpost_run_experiment",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    let v = unsafe { CStr::from_ptr(subpost_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
