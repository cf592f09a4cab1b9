use std::ffi::CStr;
use std::ptr;

use msgain_ffi::*;

fn last_error() -> Option<String> {
    let p = msgain_last_error_message();
    if p.is_null() {
        None
    } else {
        // SAFETY: non-null pointers from the library are valid C strings.
        Some(unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }
}

fn tf(num: &[f64], den: &[f64]) -> *mut MsgainTransferFunction {
    let mut out = ptr::null_mut();
    let s = unsafe { msgain_tf_new(num.as_ptr(), num.len(), den.as_ptr(), den.len(), &mut out) };
    assert_eq!(s, MsgainStatus::Ok, "{:?}", last_error());
    out
}

fn triple() -> *mut MsgainCovariance {
    let mut out = ptr::null_mut();
    let s = unsafe { msgain_cov_two_channel(0.2, 0.1, 0.05, &mut out) };
    assert_eq!(s, MsgainStatus::Ok);
    out
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(msgain_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn transfer_function_roundtrip() {
    let h = tf(&[1.0], &[1.0, -0.5]);
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(msgain_tf_evaluate(h, 0.0, &mut re, &mut im), MsgainStatus::Ok);
    }
    assert!((re - 2.0).abs() < 1e-14 && im.abs() < 1e-14);

    let mut stable = false;
    let mut h2 = 0.0;
    let mut h2q = 0.0;
    unsafe {
        assert_eq!(msgain_tf_is_schur_stable(h, 1e-9, &mut stable), MsgainStatus::Ok);
        assert_eq!(msgain_tf_h2_norm_sq(h, false, 4096, &mut h2), MsgainStatus::Ok);
        assert_eq!(msgain_tf_h2_norm_sq(h, true, 4096, &mut h2q), MsgainStatus::Ok);
        msgain_tf_free(h);
    }
    assert!(stable);
    assert!((h2 - 4.0 / 3.0).abs() < 1e-12);
    assert!((h2q - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn error_codes_and_messages() {
    let mut out = ptr::null_mut();
    let num = [1.0, 2.0, 3.0];
    let den = [1.0, 0.5];
    let s = unsafe { msgain_tf_new(num.as_ptr(), 3, den.as_ptr(), 2, &mut out) };
    assert_eq!(s, MsgainStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(last_error().is_some());

    let s = unsafe { msgain_tf_new(num.as_ptr(), 1, den.as_ptr(), 2, ptr::null_mut()) };
    assert_eq!(s, MsgainStatus::NullPointer);

    let unstable = tf(&[1.0], &[1.0, -1.5]);
    let mut h2 = 0.0;
    let s = unsafe { msgain_tf_h2_norm_sq(unstable, false, 4096, &mut h2) };
    assert_eq!(s, MsgainStatus::Unstable);
    let (mut re, mut im) = (0.0, 0.0);
    let on_circle = tf(&[1.0], &[1.0, -1.0]);
    let s = unsafe { msgain_tf_evaluate(on_circle, 0.0, &mut re, &mut im) };
    assert_eq!(s, MsgainStatus::Singular);

    let mut cov = ptr::null_mut();
    let s = unsafe { msgain_cov_two_channel(0.2, 0.1, 0.5, &mut cov) };
    assert_eq!(s, MsgainStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("semi-definite"));

    let mut k = 0.0;
    assert_eq!(unsafe { msgain_optimal_gain_case1(0.5, &mut k) }, MsgainStatus::Unstable);
    // A successful call clears the message.
    assert_eq!(unsafe { msgain_optimal_gain_case1(2.0, &mut k) }, MsgainStatus::Ok);
    assert!(last_error().is_none());
    unsafe {
        msgain_tf_free(unstable);
        msgain_tf_free(on_circle);
        msgain_tf_free(ptr::null_mut());
        msgain_cov_free(ptr::null_mut());
        msgain_tm_free(ptr::null_mut());
    }
}

#[test]
fn closed_loop_verdicts_agree() {
    let plant = tf(&[1.0], &[1.0, -std::f64::consts::SQRT_2]);
    let cov = triple();
    let mut k = 0.0;
    let mut g = ptr::null_mut();
    let mut v = MsgainVerdict {
        rho: 0.0,
        stable: false,
        margin: 0.0,
        method: MsgainMethod::ClosedForm,
        grid_points: 0,
        marginal: false,
    };
    let mut r = 0.0;
    unsafe {
        assert_eq!(msgain_optimal_gain_case1(std::f64::consts::SQRT_2, &mut k), MsgainStatus::Ok);
        assert_eq!(msgain_closed_loop_block(plant, k, &mut g), MsgainStatus::Ok);
        assert_eq!(msgain_is_ms_stable(g, cov, 4096, &mut v), MsgainStatus::Ok);
        assert_eq!(msgain_ms_operator_radius(g, cov, 4096, 20000, 1e-13, &mut r), MsgainStatus::Ok);
    }
    assert!((v.rho - 0.3).abs() < 1e-6, "{}", v.rho);
    assert!(v.stable);
    assert_eq!(v.method, MsgainMethod::KronVec);
    assert_eq!(v.grid_points, 4096);
    assert!((r - v.rho).abs() < 1e-8);

    let mut scalar = ptr::null_mut();
    let mut bad = MsgainVerdict { ..v };
    unsafe {
        assert_eq!(msgain_tm_from_tf(plant, &mut scalar), MsgainStatus::Ok);
        // The open-loop plant is unstable.
        assert_eq!(msgain_is_ms_stable(scalar, cov, 4096, &mut bad), MsgainStatus::Unstable);
        msgain_tm_free(scalar);
        let stable = tf(&[1.0], &[1.0, -0.5]);
        assert_eq!(msgain_tm_from_tf(stable, &mut scalar), MsgainStatus::Ok);
        // 1x1 system against a 2x2 covariance.
        assert_eq!(msgain_is_ms_stable(scalar, cov, 4096, &mut bad), MsgainStatus::Dimension);
        msgain_tf_free(stable);
        assert_eq!(msgain_is_ms_stable(g, cov, 8, &mut bad), MsgainStatus::InvalidArgument);
        msgain_tm_free(scalar);
        msgain_tm_free(g);
        msgain_tf_free(plant);
        msgain_cov_free(cov);
    }
}

#[test]
fn general_covariance_constructor() {
    let vals = [0.2, 0.05, 0.05, 0.1];
    let mut a = ptr::null_mut();
    let mut v = MsgainStabVerdict {
        lhs: 0.0,
        feasible: false,
        condition: MsgainCondition::Consensus,
        sufficient_only: true,
    };
    unsafe {
        assert_eq!(msgain_cov_new(2, vals.as_ptr(), &mut a), MsgainStatus::Ok);
        assert_eq!(msgain_condition_case1(5.5f64.sqrt(), a, &mut v), MsgainStatus::Ok);
    }
    // sqrt(5.5) sits exactly on the boundary.
    assert!((v.lhs - 1.0).abs() < 1e-12);
    assert!(!v.feasible);
    assert_eq!(v.condition, MsgainCondition::CaseOne);
    assert!(!v.sufficient_only);
    let asym = [0.2, 0.05, 0.04, 0.1];
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(msgain_cov_new(2, asym.as_ptr(), &mut b), MsgainStatus::InvalidArgument);
        assert_eq!(msgain_cov_new(2, ptr::null(), &mut b), MsgainStatus::NullPointer);
        msgain_cov_free(a);
    }
}

#[test]
fn reduced_conditions() {
    let cov = triple();
    let mut v = MsgainStabVerdict {
        lhs: 0.0,
        feasible: false,
        condition: MsgainCondition::CaseOne,
        sufficient_only: false,
    };
    let p1 = std::f64::consts::SQRT_2;
    unsafe {
        assert_eq!(msgain_condition_case1(p1, cov, &mut v), MsgainStatus::Ok);
        assert!((v.lhs - 0.3).abs() < 1e-12 && v.feasible);
        assert_eq!(msgain_condition_case2(p1, 2.0 * p1, cov, &mut v), MsgainStatus::Ok);
        assert!((v.lhs - 2.0).abs() < 1e-12 && !v.feasible && v.sufficient_only);
        assert_eq!(v.condition, MsgainCondition::CaseTwo);
        assert_eq!(msgain_condition_consensus(p1, cov, &mut v), MsgainStatus::Ok);
        assert!((v.lhs - 0.1).abs() < 1e-12 && v.feasible);
        assert_eq!(msgain_condition_case2(0.5, 2.0, cov, &mut v), MsgainStatus::Unstable);
        msgain_cov_free(cov);
    }
    let (mut lo, mut hi) = (0.0, 0.0);
    unsafe {
        assert_eq!(msgain_jury_gain_interval(p1, 2.0 * p1, &mut lo, &mut hi), MsgainStatus::Ok);
        assert_eq!(msgain_jury_gain_interval(p1, 1.0, &mut lo, &mut hi), MsgainStatus::InvalidArgument);
    }
    assert!((lo - -0.6306019374818708).abs() < 1e-12);
    assert!((hi - -0.2265409196609893).abs() < 1e-12);
}

#[test]
fn two_agent_simulation_is_deterministic() {
    let cov = triple();
    let run = |seed| {
        let mut s = MsgainSimSummary {
            classification: MsgainClassification::Inconclusive,
            growth_rate: 0.0,
            step_ratio: 0.0,
            steps_completed: 0,
        };
        let st = unsafe { msgain_simulate_two_agent(std::f64::consts::SQRT_2, 0.5, cov, 200, 50, seed, &mut s) };
        assert_eq!(st, MsgainStatus::Ok);
        s
    };
    let a = run(7);
    assert_eq!(a, run(7));
    assert_eq!(a.classification, MsgainClassification::Bounded);
    assert_eq!(a.steps_completed, 200);
    unsafe { msgain_cov_free(cov) };
}
