//! Generic square-root cubature Kalman filter over pluggable transition
//! and measurement functions.
//!
//! The filter never forms a covariance matrix: it carries a lower
//! triangular factor `S` with `S S^T = P` and updates it through
//! orthogonal triangularization of stacked factors. The cubature rule is
//! the third-degree spherical-radial rule with 2n equally weighted points
//! at `x +- sqrt(n) * S e_i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maps a matrix whose columns are state points to a matrix whose columns
/// are the images. Implementations must be pure and reentrant: columns
/// may be evaluated in any order or concurrently.
pub trait PointMap {
    fn output_dim(&self) -> usize;

    fn map_points(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>>;
}

/// Adapter for a per-point closure.
pub struct FnPointMap<F>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    dim: usize,
    f: F,
}

impl<F> FnPointMap<F>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnPointMap { dim, f }
    }
}

impl<F> PointMap for FnPointMap<F>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    fn output_dim(&self) -> usize {
        self.dim
    }

    fn map_points(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.dim, points.ncols());
        for c in 0..points.ncols() {
            let x = points.column(c).into_owned();
            let y = (self.f)(&x).map_err(|e| Error::CubaturePoint {
                point: c,
                reason: e.to_string(),
            })?;
            out.set_column(c, &y);
        }
        Ok(out)
    }
}

/// Lower-triangular `S` with `S S^T = M M^T`, computed by QR factorization
/// of `M^T`. Column signs are normalized so the diagonal is nonnegative,
/// making the factor unique for full-rank input.
pub fn tria(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let qr = m.transpose().qr();
    let r = qr.r();
    let mut s = DMatrix::<f64>::zeros(n, n);
    // r is min(ncols(m), n) x n upper triangular; S = R^T padded with
    // zero columns when M has fewer columns than rows.
    let k = r.nrows().min(n);
    for i in 0..k {
        for j in i..n {
            s[(j, i)] = r[(i, j)];
        }
    }
    for i in 0..n {
        if s[(i, i)] < 0.0 {
            for j in i..n {
                s[(j, i)] = -s[(j, i)];
            }
        }
    }
    s
}

/// The 2n cubature points `x +- sqrt(n) S e_i` as matrix columns,
/// ordered +1..+n then -1..-n.
pub fn cubature_points(x: &DVector<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.len();
    let scale = (n as f64).sqrt();
    let mut pts = DMatrix::<f64>::zeros(n, 2 * n);
    for i in 0..n {
        let col = s.column(i);
        for r in 0..n {
            pts[(r, i)] = x[r] + scale * col[r];
            pts[(r, n + i)] = x[r] - scale * col[r];
        }
    }
    pts
}

fn check_finite(points: &DMatrix<f64>, what: &'static str) -> Result<()> {
    for c in 0..points.ncols() {
        if !points.column(c).iter().all(|v| v.is_finite()) {
            return Err(Error::CubaturePoint {
                point: c,
                reason: format!("{what} produced a non-finite value"),
            });
        }
    }
    Ok(())
}

/// Column mean of a point matrix.
fn point_mean(points: &DMatrix<f64>) -> DVector<f64> {
    let m = points.ncols() as f64;
    DVector::from_fn(points.nrows(), |r, _| points.row(r).sum() / m)
}

/// Centered point matrix scaled by 1/sqrt(count).
fn centered(points: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let scale = 1.0 / (points.ncols() as f64).sqrt();
    let mut out = points.clone();
    for c in 0..out.ncols() {
        let mut col = out.column_mut(c);
        col -= mean;
        col *= scale;
    }
    out
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    m
}

/// Filter state: estimate, its lower-triangular covariance factor and the
/// constant process / measurement noise factors.
#[derive(Debug, Clone)]
pub struct SqrtFilterState {
    pub estimate: DVector<f64>,
    /// Lower-triangular factor of the estimate covariance.
    pub sqrt_covariance: DMatrix<f64>,
    /// Lower-triangular process noise factor (n_x x n_x).
    pub process_sqrt: DMatrix<f64>,
    /// Lower-triangular measurement noise factor (m_z x m_z).
    pub measurement_sqrt: DMatrix<f64>,
}

/// Result of the prediction step.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub state: DVector<f64>,
    pub sqrt_covariance: DMatrix<f64>,
}

impl SqrtFilterState {
    pub fn new(
        estimate: DVector<f64>,
        sqrt_covariance: DMatrix<f64>,
        process_sqrt: DMatrix<f64>,
        measurement_sqrt: DMatrix<f64>,
    ) -> Self {
        SqrtFilterState {
            estimate,
            sqrt_covariance,
            process_sqrt,
            measurement_sqrt,
        }
    }

    pub fn dim(&self) -> usize {
        self.estimate.len()
    }
}

/// Prediction: propagate the cubature set through the transition and
/// re-triangularize with the process noise factor.
pub fn predict(fs: &SqrtFilterState, f: &dyn PointMap) -> Result<Prediction> {
    let pts = cubature_points(&fs.estimate, &fs.sqrt_covariance);
    let propagated = f.map_points(&pts)?;
    check_finite(&propagated, "transition")?;
    let mean = point_mean(&propagated);
    let centered_pts = centered(&propagated, &mean);
    let s = tria(&hstack(&centered_pts, &fs.process_sqrt));
    Ok(Prediction {
        state: mean,
        sqrt_covariance: s,
    })
}

/// Filtering: weigh the predicted state against the measurement through
/// the square-root gain solves.
pub fn update(
    pred: &Prediction,
    h: &dyn PointMap,
    z: &DVector<f64>,
    measurement_sqrt: &DMatrix<f64>,
    channel_name: &dyn Fn(usize) -> String,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if z.len() != h.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: h.output_dim(),
            got: z.len(),
            context: "measurement vector",
        });
    }
    let pts = cubature_points(&pred.state, &pred.sqrt_covariance);
    let images = h.map_points(&pts)?;
    check_finite(&images, "measurement function")?;
    let z_pred = point_mean(&images);
    let z_centered = centered(&images, &z_pred);
    let s_zz = tria(&hstack(&z_centered, measurement_sqrt));
    for ch in 0..s_zz.nrows() {
        if s_zz[(ch, ch)] == 0.0 {
            return Err(Error::SingularInnovation {
                channel: ch,
                name: channel_name(ch),
            });
        }
    }
    let x_centered = centered(&pts, &pred.state);
    let p_xz = &x_centered * z_centered.transpose();

    // W = ((P_xz / S_zz^T) / S_zz) via two triangular solves.
    let y_t = s_zz
        .solve_lower_triangular(&p_xz.transpose())
        .ok_or_else(|| Error::SingularInnovation {
            channel: 0,
            name: "first gain solve".into(),
        })?;
    let w_t = s_zz
        .transpose()
        .solve_upper_triangular(&y_t)
        .ok_or_else(|| Error::SingularInnovation {
            channel: 0,
            name: "second gain solve".into(),
        })?;
    let w = w_t.transpose();

    let estimate = &pred.state + &w * (z - &z_pred);
    let s_hat = tria(&hstack(
        &(&x_centered - &w * &z_centered),
        &(&w * measurement_sqrt),
    ));
    Ok((estimate, s_hat))
}

/// One full tracking step: predict then update.
pub fn step(
    fs: &SqrtFilterState,
    f: &dyn PointMap,
    h: &dyn PointMap,
    z: &DVector<f64>,
    channel_name: &dyn Fn(usize) -> String,
) -> Result<(SqrtFilterState, Prediction)> {
    let pred = predict(fs, f)?;
    let (estimate, s_hat) = update(&pred, h, z, &fs.measurement_sqrt, channel_name)?;
    Ok((
        SqrtFilterState {
            estimate,
            sqrt_covariance: s_hat,
            process_sqrt: fs.process_sqrt.clone(),
            measurement_sqrt: fs.measurement_sqrt.clone(),
        },
        pred,
    ))
}
