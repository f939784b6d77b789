use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fbkan::diff::ModelTape;
use fbkan::harness::resolve;
use fbkan::harness::run::build_model;
use fbkan_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        fbkan_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn preset_model(name: &str, seed: u64) -> *mut FbkanModel {
    let mut m = ptr::null_mut();
    let status = unsafe { fbkan_model_from_preset(cstr(name).as_ptr(), seed, &mut m) };
    assert_eq!(status, FbkanStatus::Ok, "{}", last_error());
    assert!(!m.is_null());
    m
}

fn reference(name: &str, seed: u64) -> fbkan::decomposition::FbkanModel {
    let mut cfg = resolve(name).unwrap();
    cfg.seed = seed;
    build_model(&cfg, &cfg.problem_spec().unwrap()).unwrap()
}

#[test]
fn predictions_match_the_library() {
    let m = preset_model("helmholtz-fbkan1-L4", 7);
    let r = reference("helmholtz-fbkan1-L4", 7);
    unsafe {
        assert_eq!(fbkan_model_input_dim(m), 2);
        assert_eq!(fbkan_model_param_count(m), r.param_count());
        let pts = [-0.9, 0.3, 0.0, 0.0, 0.95, -0.6];
        let mut out = [0.0; 3];
        assert_eq!(fbkan_model_predict(m, pts.as_ptr(), 3, 2, out.as_mut_ptr()), FbkanStatus::Ok);
        let mut tape = ModelTape::new();
        for (x, o) in pts.chunks(2).zip(out) {
            let jet = tape.forward(&r, x, 2, false).unwrap().clone();
            assert_eq!(o, jet.value);
            let (mut v, mut d, mut dd) = (0.0, [0.0; 2], [0.0; 2]);
            let s = fbkan_model_jet(m, x.as_ptr(), 2, &mut v, d.as_mut_ptr(), dd.as_mut_ptr());
            assert_eq!(s, FbkanStatus::Ok);
            assert_eq!(v, jet.value);
            assert_eq!(d.to_vec(), jet.first);
            assert_eq!(dd.to_vec(), jet.second_diag);
            let mut v0 = 0.0;
            let s = fbkan_model_jet(m, x.as_ptr(), 2, &mut v0, ptr::null_mut(), ptr::null_mut());
            assert_eq!(s, FbkanStatus::Ok);
            assert_eq!(v0, jet.value);
        }
        fbkan_model_free(m);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(fbkan_model_from_preset(ptr::null(), 0, &mut m), FbkanStatus::NullPointer);
        assert!(last_error().contains("name"));
        assert_eq!(fbkan_model_from_preset(cstr("nope").as_ptr(), 0, &mut m), FbkanStatus::Config);
        assert!(last_error().contains("nope"), "{}", last_error());
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(fbkan_model_from_preset(bad.as_ptr().cast(), 0, &mut m), FbkanStatus::InvalidUtf8);
        assert_eq!(fbkan_model_load(cstr("/nonexistent/ckpt.json").as_ptr(), &mut m), FbkanStatus::Config);
        assert!(m.is_null());

        let m = preset_model("data1", 0);
        assert_eq!(fbkan_last_error(ptr::null_mut(), 0), 0, "success clears the message");
        let x = [0.1, 0.2];
        let mut out = [0.0; 1];
        assert_eq!(fbkan_model_predict(m, x.as_ptr(), 1, 2, out.as_mut_ptr()), FbkanStatus::InvalidArgument);
        let nan = [f64::NAN];
        assert_eq!(fbkan_model_predict(m, nan.as_ptr(), 1, 1, out.as_mut_ptr()), FbkanStatus::InvalidArgument);
        assert_eq!(fbkan_model_predict(m, ptr::null(), 1, 1, out.as_mut_ptr()), FbkanStatus::NullPointer);
        assert_eq!(fbkan_model_predict(ptr::null_mut(), x.as_ptr(), 1, 1, out.as_mut_ptr()), FbkanStatus::NullPointer);
        let mut params = vec![0.0; 3];
        assert_eq!(fbkan_model_get_params(m, params.as_mut_ptr(), 3), FbkanStatus::InvalidArgument);
        assert_eq!(fbkan_model_set_params(m, params.as_ptr(), 3), FbkanStatus::InvalidArgument);
        assert_eq!(fbkan_model_input_dim(ptr::null()), 0);
        fbkan_model_free(m);
        fbkan_model_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates() {
    unsafe {
        let mut m = ptr::null_mut();
        fbkan_model_from_preset(cstr("nope").as_ptr(), 0, &mut m);
        let full = fbkan_last_error(ptr::null_mut(), 0);
        assert!(full > 8);
        let mut buf = [1 as c_char; 8];
        assert_eq!(fbkan_last_error(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 7);
    }
}

#[test]
fn params_and_checkpoints_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = cstr(dir.path().join("m.json").to_str().unwrap());
    unsafe {
        let m = preset_model("data1-L4", 1);
        let n = fbkan_model_param_count(m);
        let mut p = vec![0.0; n];
        assert_eq!(fbkan_model_get_params(m, p.as_mut_ptr(), n), FbkanStatus::Ok);
        for v in &mut p {
            *v *= 0.5;
        }
        assert_eq!(fbkan_model_set_params(m, p.as_ptr(), n), FbkanStatus::Ok);
        assert_eq!(fbkan_model_save(m, path.as_ptr()), FbkanStatus::Ok);

        let mut back = ptr::null_mut();
        assert_eq!(fbkan_model_load(path.as_ptr(), &mut back), FbkanStatus::Ok);
        let mut q = vec![0.0; n];
        assert_eq!(fbkan_model_get_params(back, q.as_mut_ptr(), n), FbkanStatus::Ok);
        assert_eq!(p, q);
        let xs = [-0.7, 0.1, 0.8];
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        fbkan_model_predict(m, xs.as_ptr(), 3, 1, a.as_mut_ptr());
        fbkan_model_predict(back, xs.as_ptr(), 3, 1, b.as_mut_ptr());
        assert_eq!(a, b);
        fbkan_model_free(m);
        fbkan_model_free(back);
    }
}

#[test]
fn config_constructor_and_training() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = resolve("data1-L2").unwrap();
    cfg.training.iterations = 30;
    cfg.training.eval_every = 10;
    let text = cstr(&cfg.to_toml());
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(fbkan_model_from_config(text.as_ptr(), &mut m), FbkanStatus::Ok);
        assert_eq!(fbkan_model_param_count(m), reference("data1-L2", 0).param_count());
        fbkan_model_free(m);

        let out = cstr(dir.path().to_str().unwrap());
        let mut res = FbkanRunResult::default();
        assert_eq!(fbkan_train(text.as_ptr(), out.as_ptr(), &mut res), FbkanStatus::Ok, "{}", last_error());
        assert_eq!(res.iterations, 30);
        assert!(res.rel_l2 < res.initial_rel_l2);

        let ckpt = cstr(dir.path().join("checkpoint.json").to_str().unwrap());
        let mut trained = ptr::null_mut();
        assert_eq!(fbkan_model_load(ckpt.as_ptr(), &mut trained), FbkanStatus::Ok);
        assert_eq!(fbkan_model_param_count(trained), res.param_count);
        fbkan_model_free(trained);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(fbkan_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn static_lib() -> Option<PathBuf> {
    // tests run from target/<profile>/deps; the static library sits one up
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libfbkan_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/fbkan.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for sym in ["fbkan_model_from_preset", "fbkan_model_jet", "fbkan_last_error", "FBKAN_STATUS_NULL_POINTER"] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    let Some(lib) = static_lib() else {
        eprintln!("static library not built; skipping the C link check");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping the C link check");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status);

    let r = reference("data1-L4", 3);
    let jet = ModelTape::new().forward(&r, &[0.5], 2, false).unwrap().clone();
    let line = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields[0].parse::<usize>().unwrap(), r.param_count());
    assert_eq!(fields[1].parse::<f64>().unwrap(), jet.value);
    assert_eq!(fields[2].parse::<f64>().unwrap(), jet.first[0]);
    assert_eq!(fields[3].parse::<f64>().unwrap(), jet.second_diag[0]);
}
