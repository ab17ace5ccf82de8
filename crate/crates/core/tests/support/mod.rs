//! Shared test oracles: a textbook covariance-form Kalman filter, a dense
//! covariance-form CKF, and a seeded random linear-Gaussian system
//! generator. These stay independent of the square-root implementation
//! they are used to check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Conventional covariance-form Kalman filter for `x' = F x + c + w`,
/// `z = H x + v`.
pub struct DenseKf {
    pub f: DMatrix<f64>,
    pub c: DVector<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl DenseKf {
    pub fn step(&mut self, z: &DVector<f64>) {
        // Predict.
        let x_pred = &self.f * &self.x + &self.c;
        let p_pred = &self.f * &self.p * self.f.transpose() + &self.q;
        // Update.
        let s = &self.h * &p_pred * self.h.transpose() + &self.r;
        let k = &p_pred
            * self.h.transpose()
            * s.try_inverse().expect("innovation covariance invertible");
        self.x = &x_pred + &k * (z - &self.h * &x_pred);
        let ikh = DMatrix::identity(self.x.len(), self.x.len()) - &k * &self.h;
        // Joseph form for symmetry.
        self.p = &ikh * p_pred * ikh.transpose() + &k * &self.r * k.transpose();
    }
}

/// Dense covariance-form cubature Kalman filter over arbitrary point maps,
/// written directly from the moment formulas, no square roots anywhere.
pub struct DenseCkf {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl DenseCkf {
    pub fn step(
        &mut self,
        f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
        h: &dyn Fn(&DVector<f64>) -> DVector<f64>,
        z: &DVector<f64>,
    ) {
        let n = self.x.len();
        let pts = dense_cubature(&self.x, &self.p);
        let prop: Vec<DVector<f64>> = pts.iter().map(|p| f(p)).collect();
        let x_pred = vec_mean(&prop);
        let mut p_pred = self.q.clone();
        for p in &prop {
            let d = p - &x_pred;
            p_pred += &d * d.transpose() / (2 * n) as f64;
        }

        let pts2 = dense_cubature(&x_pred, &p_pred);
        let imgs: Vec<DVector<f64>> = pts2.iter().map(|p| h(p)).collect();
        let z_pred = vec_mean(&imgs);
        let mut p_zz = self.r.clone();
        let mut p_xz = DMatrix::zeros(n, z_pred.len());
        for (p, img) in pts2.iter().zip(&imgs) {
            let dz = img - &z_pred;
            let dx = p - &x_pred;
            p_zz += &dz * dz.transpose() / (2 * n) as f64;
            p_xz += &dx * dz.transpose() / (2 * n) as f64;
        }
        let k = &p_xz * p_zz.clone().try_inverse().expect("P_zz invertible");
        self.x = &x_pred + &k * (z - &z_pred);
        self.p = p_pred - &k * p_zz * k.transpose();
    }
}

fn dense_cubature(x: &DVector<f64>, p: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = x.len();
    let chol = p
        .clone()
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| sqrt_by_eig(p));
    let scale = (n as f64).sqrt();
    let mut pts = Vec::with_capacity(2 * n);
    for i in 0..n {
        pts.push(x + scale * chol.column(i));
    }
    for i in 0..n {
        pts.push(x - scale * chol.column(i));
    }
    pts
}

fn sqrt_by_eig(p: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (p + p.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut m = eig.eigenvectors.clone();
    for c in 0..m.ncols() {
        let lam = eig.eigenvalues[c].max(0.0).sqrt();
        m.column_mut(c).scale_mut(lam);
    }
    m
}

fn vec_mean(vs: &[DVector<f64>]) -> DVector<f64> {
    let mut m = DVector::zeros(vs[0].len());
    for v in vs {
        m += v;
    }
    m / vs.len() as f64
}

/// Seeded random linear-Gaussian system with a stable transition matrix.
pub struct LinearSystem {
    pub f: DMatrix<f64>,
    pub c: DVector<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub p0: DMatrix<f64>,
}

pub fn random_linear_system(seed: u64, n: usize, m: usize) -> LinearSystem {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut f = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    // Scale to spectral radius 0.9 for a stable system.
    let radius = f
        .complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0f64, f64::max);
    f *= 0.9 / radius.max(1e-9);
    let c = DVector::from_fn(n, |_, _| rng.gen_range(-0.2..0.2));
    let h = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let lq = DMatrix::from_fn(n, n, |r_, c_| {
        if r_ >= c_ {
            rng.gen_range(-0.1..0.1)
        } else {
            0.0
        }
    });
    let q = &lq * lq.transpose() + DMatrix::identity(n, n) * 1e-4;
    let lr = DMatrix::from_fn(m, m, |r_, c_| {
        if r_ >= c_ {
            rng.gen_range(-0.2..0.2)
        } else {
            0.0
        }
    });
    let r = &lr * lr.transpose() + DMatrix::identity(m, m) * 1e-3;
    let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let p0 = DMatrix::identity(n, n) * 0.5;
    LinearSystem { f, c, h, q, r, x0, p0 }
}

/// Simulates the system and returns (truth, measurements) over `steps`.
pub fn simulate_linear(
    sys: &LinearSystem,
    steps: usize,
    seed: u64,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let lq = sys.q.clone().cholesky().expect("Q SPD").l();
    let lr = sys.r.clone().cholesky().expect("R SPD").l();
    let mut truth = Vec::with_capacity(steps);
    let mut meas = Vec::with_capacity(steps);
    let mut x = sys.x0.clone();
    let normal = |rng: &mut ChaCha12Rng, n: usize| {
        DVector::from_fn(n, |_, _| {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
    };
    for _ in 0..steps {
        x = &sys.f * &x + &sys.c + &lq * normal(&mut rng, x.len());
        let z = &sys.h * &x + &lr * normal(&mut rng, sys.h.nrows());
        truth.push(x.clone());
        meas.push(z);
    }
    (truth, meas)
}

/// Lower-triangular Cholesky factor, for handing covariances to the
/// square-root filter.
pub fn chol(p: &DMatrix<f64>) -> DMatrix<f64> {
    p.clone().cholesky().expect("SPD").l()
}
