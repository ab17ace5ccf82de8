//! Oracle comparisons for the square-root filter: a conventional
//! covariance-form Kalman filter on linear-Gaussian systems and a dense
//! covariance-form CKF on a nonlinear system.

mod support;

use iestrack_core::sckf::{self, FnPointMap, SqrtFilterState};
use nalgebra::{DMatrix, DVector};
use support::{chol, random_linear_system, simulate_linear, DenseCkf, DenseKf};

#[test]
fn linear_gaussian_matches_dense_kalman_over_50_steps() {
    let sys = random_linear_system(42, 6, 4);
    let (_, meas) = simulate_linear(&sys, 50, 43);

    let mut kf = DenseKf {
        f: sys.f.clone(),
        c: sys.c.clone(),
        h: sys.h.clone(),
        q: sys.q.clone(),
        r: sys.r.clone(),
        x: sys.x0.clone(),
        p: sys.p0.clone(),
    };

    let mut fs = SqrtFilterState::new(
        sys.x0.clone(),
        chol(&sys.p0),
        chol(&sys.q),
        chol(&sys.r),
    );
    let fmat = sys.f.clone();
    let cvec = sys.c.clone();
    let f = FnPointMap::new(6, move |x: &DVector<f64>| Ok(&fmat * x + &cvec));
    let hmat = sys.h.clone();
    let h = FnPointMap::new(4, move |x: &DVector<f64>| Ok(&hmat * x));

    for z in &meas {
        kf.step(z);
        let (next, _) = sckf::step(&fs, &f, &h, z, &|c| format!("z{c}")).unwrap();
        fs = next;
        let err = (&fs.estimate - &kf.x).amax();
        assert!(err < 1e-8, "estimate deviates from dense KF by {err}");
        let p_sr = &fs.sqrt_covariance * fs.sqrt_covariance.transpose();
        let rel = (&p_sr - &kf.p).norm() / kf.p.norm();
        assert!(rel < 1e-8, "covariance deviates by {rel}");
    }
}

#[test]
fn nonlinear_matches_dense_ckf() {
    // Mildly nonlinear dynamics; the square-root covariance must equal
    // the covariance a dense-form CKF carries.
    let n = 3;
    let q = DMatrix::identity(n, n) * 1e-3;
    let r = DMatrix::identity(2, 2) * 1e-2;
    let x0 = DVector::from_column_slice(&[0.4, -0.2, 0.1]);
    let p0 = DMatrix::identity(n, n) * 0.2;

    let f_fun = |x: &DVector<f64>| {
        DVector::from_column_slice(&[
            0.9 * x[0] + 0.05 * x[1].sin(),
            0.85 * x[1] + 0.05 * (x[0] * x[2]),
            0.95 * x[2] + 0.02 * x[0].cos(),
        ])
    };
    let h_fun =
        |x: &DVector<f64>| DVector::from_column_slice(&[x[0] + 0.1 * x[1] * x[1], x[2]]);

    let mut dense = DenseCkf {
        q: q.clone(),
        r: r.clone(),
        x: x0.clone(),
        p: p0.clone(),
    };
    let mut fs = SqrtFilterState::new(x0, chol(&p0), chol(&q), chol(&r));
    let f = FnPointMap::new(n, move |x: &DVector<f64>| Ok(f_fun(x)));
    let h = FnPointMap::new(2, move |x: &DVector<f64>| Ok(h_fun(x)));

    // A deterministic, slightly off-model measurement sequence.
    for t in 0..40 {
        let z = DVector::from_column_slice(&[
            0.3 * ((t as f64) * 0.2).sin(),
            0.1 * ((t as f64) * 0.13).cos(),
        ]);
        dense.step(&|x| f_fun(x), &|x| h_fun(x), &z);
        let (next, _) = sckf::step(&fs, &f, &h, &z, &|c| format!("z{c}")).unwrap();
        fs = next;
        let err = (&fs.estimate - &dense.x).amax();
        assert!(err < 1e-8, "step {t}: estimate deviates by {err}");
        let p_sr = &fs.sqrt_covariance * fs.sqrt_covariance.transpose();
        let rel = (&p_sr - &dense.p).norm() / dense.p.norm();
        assert!(rel < 1e-8, "step {t}: covariance deviates by {rel}");
    }
}

#[test]
fn no_covariance_blowup_over_many_steps() {
    let sys = random_linear_system(7, 4, 3);
    let (_, meas) = simulate_linear(&sys, 10_000, 8);
    let mut fs = SqrtFilterState::new(
        sys.x0.clone(),
        chol(&sys.p0),
        chol(&sys.q),
        chol(&sys.r),
    );
    let fmat = sys.f.clone();
    let cvec = sys.c.clone();
    let f = FnPointMap::new(4, move |x: &DVector<f64>| Ok(&fmat * x + &cvec));
    let hmat = sys.h.clone();
    let h = FnPointMap::new(3, move |x: &DVector<f64>| Ok(&hmat * x));
    let mut max_trace = 0.0f64;
    for z in &meas {
        let (next, _) = sckf::step(&fs, &f, &h, z, &|c| format!("z{c}")).unwrap();
        fs = next;
        let p = &fs.sqrt_covariance * fs.sqrt_covariance.transpose();
        max_trace = max_trace.max(p.trace());
    }
    assert!(max_trace < 10.0, "trace grew to {max_trace}");
    assert!(fs.estimate.iter().all(|v| v.is_finite()));
}
