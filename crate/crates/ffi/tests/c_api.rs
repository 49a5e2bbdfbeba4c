use std::ffi::{CStr, CString};
use std::ptr;

use tgv_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tgv_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn small_config() -> TgvConfig {
    let mut c = TgvConfig {
        n: 0,
        nu: 0.0,
        dt: 0.0,
        t_end: 0.0,
        diag_stride: 0,
        checkpoint_stride: 0,
        viscous_scheme: 0,
    };
    assert_eq!(unsafe { tgv_config_default(&mut c) }, TgvStatus::Ok);
    c.n = 16;
    c.dt = 0.01;
    c
}

fn create(c: &TgvConfig) -> *mut TgvSolver {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { tgv_solver_create(c, &mut s) },
        TgvStatus::Ok,
        "{}",
        last_error()
    );
    assert!(!s.is_null());
    s
}

#[test]
fn defaults_and_version() {
    let mut c = small_config();
    unsafe { tgv_config_default(&mut c) };
    assert_eq!(c.n, 256);
    assert_eq!(c.nu, 1.0 / 1600.0);
    assert_eq!(c.t_end, 20.0);
    let v = unsafe { CStr::from_ptr(tgv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn solver_lifecycle() {
    let s = create(&small_config());
    unsafe {
        let (mut e, mut z, mut t, mut step) = (0.0, 0.0, -1.0, 9u64);
        assert_eq!(tgv_solver_energy(s, &mut e), TgvStatus::Ok);
        assert_eq!(tgv_solver_enstrophy(s, &mut z), TgvStatus::Ok);
        assert!((e - 0.125).abs() < 1e-14);
        assert!((z - 1.5 * std::f64::consts::PI.powi(2)).abs() < 1e-12);

        assert_eq!(tgv_solver_step(s, 5), TgvStatus::Ok);
        tgv_solver_time(s, &mut t);
        tgv_solver_step_index(s, &mut step);
        assert_eq!(step, 5);
        assert!((t - 0.05).abs() < 1e-15);
        let mut e1 = 0.0;
        tgv_solver_energy(s, &mut e1);
        assert!(e1 < e);

        let (mut ln, mut lr) = (0.0, 0.0);
        assert_eq!(tgv_solver_log_sup_norm(s, 200, &mut ln), TgvStatus::Ok);
        assert!(ln.is_finite() && ln > 0.0);
        assert_eq!(tgv_solver_log_ratio(s, 5, &mut lr), TgvStatus::Ok);
        assert!(lr.is_finite());
        assert_eq!(tgv_solver_log_ratio(s, 0, &mut lr), TgvStatus::InvalidArgument);
        tgv_solver_free(s);
    }
}

#[test]
fn checkpoint_round_trip_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("c.bin").to_str().unwrap()).unwrap();
    let c = small_config();
    let a = create(&c);
    let b = create(&c);
    unsafe {
        tgv_solver_step(a, 3);
        assert_eq!(tgv_solver_save_checkpoint(a, path.as_ptr()), TgvStatus::Ok);
        assert_eq!(tgv_solver_load_checkpoint(b, path.as_ptr()), TgvStatus::Ok);
        tgv_solver_step(a, 2);
        tgv_solver_step(b, 2);
        let (mut ea, mut eb) = (0.0, 0.0);
        tgv_solver_energy(a, &mut ea);
        tgv_solver_energy(b, &mut eb);
        assert_eq!(ea.to_bits(), eb.to_bits());

        let other = create(&TgvConfig { n: 8, ..c });
        assert_eq!(tgv_solver_load_checkpoint(other, path.as_ptr()), TgvStatus::Checkpoint);
        assert!(last_error().contains("grid mismatch"), "{}", last_error());
        let missing = CString::new(dir.path().join("none.bin").to_str().unwrap()).unwrap();
        assert_eq!(tgv_solver_load_checkpoint(b, missing.as_ptr()), TgvStatus::Checkpoint);
        for s in [a, b, other] {
            tgv_solver_free(s);
        }
    }
}

#[test]
fn error_reporting() {
    let mut s = ptr::null_mut();
    unsafe {
        let bad = TgvConfig { n: 7, ..small_config() };
        assert_eq!(tgv_solver_create(&bad, &mut s), TgvStatus::Config);
        assert!(s.is_null());
        assert!(last_error().contains('7'));
        let weird = TgvConfig {
            viscous_scheme: 4,
            ..small_config()
        };
        assert_eq!(tgv_solver_create(&weird, &mut s), TgvStatus::InvalidArgument);
        assert_eq!(tgv_solver_create(ptr::null(), &mut s), TgvStatus::NullPointer);
        assert_eq!(tgv_solver_step(ptr::null_mut(), 1), TgvStatus::NullPointer);
        assert!(last_error().contains("solver"));
        let missing = CString::new("/nonexistent/run.cfg").unwrap();
        assert_eq!(tgv_solver_create_from_file(missing.as_ptr(), &mut s), TgvStatus::Io);
        assert!(last_error().contains("/nonexistent/run.cfg"));
        let mut e = 0.0;
        let ok = create(&small_config());
        assert_eq!(tgv_solver_energy(ok, &mut e), TgvStatus::Ok);
        assert_eq!(last_error(), "");
        tgv_solver_free(ok);
        tgv_solver_free(ptr::null_mut());
    }
}

#[test]
fn analysis_entry_points() {
    let dt = 0.001;
    let t: Vec<f64> = (0..=3000).map(|i| i as f64 * dt).collect();
    let y: Vec<f64> = t.iter().map(|&ti| 0.3 * (2.5 - ti).abs().max(dt).ln()).collect();
    let z: Vec<f64> = t.iter().map(|&ti| 5.0 - (ti - 2.5).powi(2)).collect();
    unsafe {
        let mut g = 0.0;
        assert_eq!(
            tgv_fit_gamma(t.as_ptr(), y.as_ptr(), t.len(), 2.5, dt, &mut g),
            TgvStatus::Ok
        );
        assert!((g - 0.3).abs() < 1e-12);

        let (mut ts, mut idx) = (0.0, 0usize);
        assert_eq!(
            tgv_detect_peak(t.as_ptr(), z.as_ptr(), t.len(), &mut ts, &mut idx),
            TgvStatus::Ok
        );
        assert!((ts - 2.5).abs() < 1e-9);
        assert_eq!(idx, 2500);
        assert_eq!(
            tgv_detect_peak(t.as_ptr(), z.as_ptr(), 2, &mut ts, ptr::null_mut()),
            TgvStatus::Analysis
        );

        let k: Vec<u32> = (1..=20).map(|j| 5 * j).collect();
        let gam: Vec<f64> = k.iter().map(|&k| (k as f64).powf(-0.89)).collect();
        let mut a = 0.0;
        assert_eq!(tgv_fit_alpha(k.as_ptr(), gam.as_ptr(), k.len(), &mut a), TgvStatus::Ok);
        assert!((a - 0.89).abs() < 1e-12);
        assert_eq!(
            tgv_fit_alpha(ptr::null(), gam.as_ptr(), 3, &mut a),
            TgvStatus::NullPointer
        );

        assert_eq!(tgv_epsilon_2k(1, 1.0), 8.0);
        let mut r = TgvScaleReport::default();
        assert_eq!(tgv_scale_comparison(10.0, 5, 0.89, &mut r), TgvStatus::Ok);
        assert!(r.dominant && !r.reversed_regime);
        assert_eq!(r.epsilon_2k, tgv_epsilon_2k(5, 0.89));
        assert_eq!(tgv_scale_comparison(10.0, 0, 0.89, &mut r), TgvStatus::InvalidArgument);
    }
}
