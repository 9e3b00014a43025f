use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use rough_volterra_ffi::*;

fn last_error() -> String {
    let p = rv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn measure(atoms: &[(f64, f64)]) -> *mut RvMeasure {
    let xi: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let w: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let mut m = ptr::null_mut();
    assert_eq!(rv_measure_from_atoms(xi.as_ptr(), w.as_ptr(), atoms.len(), &mut m), RvStatus::Ok);
    m
}

unsafe fn linear_driver(cells: usize) -> *mut RvDriver {
    let times: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    let mut d = ptr::null_mut();
    assert_eq!(rv_driver_from_values(times.as_ptr(), times.len(), times.as_ptr(), 1, &mut d), RvStatus::Ok);
    d
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(rv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn linear_equation_matches_its_closed_form() {
    unsafe {
        let (xi, c, a) = (1.0, 0.5, 0.7);
        let m = measure(&[(xi, 1.0)]);
        let d = linear_driver(128);
        let mut lift = ptr::null_mut();
        assert_eq!(rv_lift_new(d, m, 1.0, &mut lift), RvStatus::Ok);
        rv_driver_free(d);
        rv_measure_free(m);

        let mut sigma = ptr::null_mut();
        let (scale, offset) = ([c], [0.0]);
        assert_eq!(rv_sigma_new(1, 1, RvProfile::Linear, scale.as_ptr(), offset.as_ptr(), &mut sigma), RvStatus::Ok);

        let mut cfg = rv_solver_config_default(1.0, 0.9, 1e-13);
        cfg.young = true;
        cfg.sewing_level = 4;
        let mut sol = ptr::null_mut();
        assert_eq!(rv_solve(lift, sigma, [a].as_ptr(), 1, &cfg, &mut sol), RvStatus::Ok, "{}", last_error());

        let n = rv_solution_points(sol);
        assert_eq!(n, 129);
        assert_eq!(rv_solution_dims(sol), 1);
        assert!(rv_solution_intervals(sol) >= 1);
        assert!(rv_solution_picard_residual(sol) < 1e-10);
        let mut t = vec![0.0; n];
        let mut y = vec![0.0; n];
        assert_eq!(rv_solution_times(sol, t.as_mut_ptr(), n), RvStatus::Ok);
        assert_eq!(rv_solution_values(sol, y.as_mut_ptr(), n), RvStatus::Ok);

        // Differentiating y_t = a + c ∫_0^t e^{-ξ(t-r)} y_r dr gives
        // y' = -ξ (y - a) + c y, a linear ODE with equilibrium ξ a / (ξ - c).
        let lam = c - xi;
        let eq = -xi * a / lam;
        for (ti, yi) in t.iter().zip(&y) {
            let exact = eq + (a - eq) * (lam * ti).exp();
            assert!((yi - exact).abs() < 1e-5, "t = {ti}: {yi} vs {exact}");
        }

        rv_solution_free(sol);
        rv_sigma_free(sigma);
        rv_lift_free(lift);
    }
}

#[test]
fn lift_levels_are_readable() {
    unsafe {
        let m = measure(&[(0.0, 1.0), (2.0, 1.0)]);
        let d = linear_driver(16);
        let mut lift = ptr::null_mut();
        assert_eq!(rv_lift_new(d, m, 1.0, &mut lift), RvStatus::Ok);

        let mut x1 = [0.0];
        assert_eq!(rv_lift_x1_tilde(lift, 0.25, 0.75, 0, x1.as_mut_ptr(), 1), RvStatus::Ok);
        assert!((x1[0] - 0.5).abs() < 1e-14);
        assert_eq!(rv_lift_x1_tilde(lift, 0.25, 0.75, 1, x1.as_mut_ptr(), 1), RvStatus::Ok);
        let want = (1.0 - (-2.0f64 * 0.5).exp()) / 2.0;
        assert!((x1[0] - want).abs() < 1e-14);

        // At ξ = 0 the second level is ∫_s^t x¹_{vs} dv with
        // x¹_{vs} = (v - s) + (1 - e^{-2(v-s)}) / 2 over a span of 1/2.
        let mut x2 = [0.0];
        assert_eq!(rv_lift_x2_tilde(lift, 0.25, 0.75, 0, x2.as_mut_ptr(), 1), RvStatus::Ok);
        let want = 0.125 + 0.25 - (1.0 - (-1.0f64).exp()) / 4.0;
        assert!((x2[0] - want).abs() < 1e-12, "{} vs {want}", x2[0]);

        assert_eq!(rv_lift_x1_tilde(lift, 0.0, 1.0, 2, x1.as_mut_ptr(), 1), RvStatus::InvalidInput);
        assert!(last_error().contains("atom 2"));
        assert_eq!(rv_lift_x2_tilde(lift, 0.0, 1.0, 0, x2.as_mut_ptr(), 0), RvStatus::BufferTooSmall);

        rv_lift_free(lift);
        rv_driver_free(d);
        rv_measure_free(m);
    }
}

#[test]
fn sampled_drivers_are_reproducible() {
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(rv_driver_sample_fbm(0.4, 1.0, 64, 2, 9, &mut a), RvStatus::Ok);
        assert_eq!(rv_driver_sample_fbm(0.4, 1.0, 64, 2, 9, &mut b), RvStatus::Ok);
        assert_eq!(rv_driver_points(a), 65);
        assert_eq!(rv_driver_dims(a), 2);
        let mut va = vec![0.0; 130];
        let mut vb = vec![0.0; 130];
        assert_eq!(rv_driver_values(a, va.as_mut_ptr(), va.len()), RvStatus::Ok);
        assert_eq!(rv_driver_values(b, vb.as_mut_ptr(), vb.len()), RvStatus::Ok);
        assert_eq!(va, vb);
        assert_eq!(&va[..2], &[0.0, 0.0]);
        rv_driver_free(a);
        rv_driver_free(b);

        let mut w = ptr::null_mut();
        assert_eq!(rv_driver_sample_brownian(1.0, 32, 1, 3, &mut w), RvStatus::Ok);
        assert_eq!(rv_driver_points(w), 33);
        rv_driver_free(w);
    }
}

#[test]
fn failures_report_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(rv_measure_from_atoms(ptr::null(), ptr::null(), 1, &mut m), RvStatus::NullPointer);
        assert!(m.is_null());
        assert!(last_error().contains("xi"));

        let (xi, w) = ([-1.0], [1.0]);
        assert_eq!(rv_measure_from_atoms(xi.as_ptr(), w.as_ptr(), 1, &mut m), RvStatus::InvalidInput);
        assert!(last_error().contains("frequency >= 0"));

        let mut d = ptr::null_mut();
        assert_eq!(rv_driver_sample_fbm(1.5, 1.0, 8, 1, 0, &mut d), RvStatus::InvalidInput);

        let mut s = ptr::null_mut();
        let p = [1.0, 2.0];
        assert_eq!(rv_sigma_new(1, 1, RvProfile::Sin, p.as_ptr(), p.as_ptr(), ptr::null_mut()), RvStatus::NullPointer);
        assert_eq!(rv_sigma_new(0, 1, RvProfile::Sin, p.as_ptr(), p.as_ptr(), &mut s), RvStatus::InvalidInput);

        let m = measure(&[(1.0, 1.0)]);
        let d = linear_driver(8);
        let mut lift = ptr::null_mut();
        assert_eq!(rv_lift_new(d, m, 1.0, &mut lift), RvStatus::Ok);
        assert_eq!(rv_sigma_new(1, 1, RvProfile::Sin, p.as_ptr(), p.as_ptr(), &mut s), RvStatus::Ok);
        let cfg = rv_solver_config_default(0.3, 0.4, 1e-10);
        let mut sol = ptr::null_mut();
        assert_eq!(rv_solve(lift, s, [0.0].as_ptr(), 1, &cfg, &mut sol), RvStatus::InvalidInput);
        let cfg = rv_solver_config_default(0.45, 0.4, 1e-10);
        assert_eq!(rv_solve(lift, s, [0.0, 1.0].as_ptr(), 2, &cfg, &mut sol), RvStatus::ShapeMismatch, "{}", last_error());
        assert!(sol.is_null());

        assert_eq!(rv_solution_points(ptr::null()), 0);
        assert!(rv_solution_picard_residual(ptr::null()).is_nan());
        rv_solution_free(ptr::null_mut());

        rv_sigma_free(s);
        rv_lift_free(lift);
        rv_driver_free(d);
        rv_measure_free(m);
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rough_volterra.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct RvMeasure RvMeasure;",
        "RvStatus rv_solve(",
        "const char *rv_last_error(void);",
        "RV_STATUS_BUFFER_TOO_SMALL",
        "RV_PROFILE_TANH",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).status() else {
        eprintln!("no C compiler on PATH; skipping the syntax check");
        return;
    };
    assert!(status.success());
}
