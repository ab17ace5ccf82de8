//! From-scratch LSTM gas-load forecaster: stacked cells, batched
//! backpropagation through time, Adam updates, min-max normalization and
//! MAPE evaluation, plus the synthetic load generator used in place of
//! field data.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate slices inside the stacked pre-activation: input, forget, output,
/// cell candidate.
const GATES: usize = 4;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Min-max bounds of one node's raw load series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct NormBounds {
    pub min: f64,
    pub max: f64,
}

impl NormBounds {
    pub fn from_series(values: &[f64]) -> Result<Self> {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let b = NormBounds { min, max };
        b.validate(0)?;
        Ok(b)
    }

    pub fn validate(&self, node: usize) -> Result<()> {
        if !(self.max > self.min) {
            return Err(Error::DegenerateBounds {
                node,
                min: self.min,
                max: self.max,
            });
        }
        Ok(())
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, normed: f64) -> f64 {
        self.min + normed * (self.max - self.min)
    }
}

/// Parameters of one stacked layer; gate weights are stored stacked along
/// rows in the order input, forget, output, candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerParams {
    /// (4H x in_dim) input weights.
    pub w_x: DMatrix<f64>,
    /// (4H x H) recurrent weights.
    pub w_h: DMatrix<f64>,
    /// (4H) biases.
    pub bias: DVector<f64>,
}

impl LayerParams {
    fn zeros(in_dim: usize, hidden: usize) -> Self {
        LayerParams {
            w_x: DMatrix::zeros(GATES * hidden, in_dim),
            w_h: DMatrix::zeros(GATES * hidden, hidden),
            bias: DVector::zeros(GATES * hidden),
        }
    }

    fn init(in_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / ((in_dim + hidden) as f64).sqrt();
        let mut p = LayerParams::zeros(in_dim, hidden);
        for v in p.w_x.iter_mut() {
            *v = rng.gen_range(-scale..scale);
        }
        for v in p.w_h.iter_mut() {
            *v = rng.gen_range(-scale..scale);
        }
        // Forget-gate bias starts at 1 so early training carries state.
        for k in hidden..2 * hidden {
            p.bias[k] = 1.0;
        }
        p
    }
}

/// The trained forecaster: stacked LSTM, scalar output projection and
/// per-node normalization bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LstmModel {
    pub version: u32,
    pub hidden: usize,
    pub window: usize,
    pub layers: Vec<LayerParams>,
    /// (H) output projection weights.
    pub w_out: DVector<f64>,
    pub b_out: f64,
    /// Normalization bounds per gas node id.
    pub bounds: BTreeMap<usize, NormBounds>,
}

impl LstmModel {
    pub fn new(layers: usize, hidden: usize, window: usize, rng: &mut impl Rng) -> Self {
        let mut ls = Vec::with_capacity(layers);
        for l in 0..layers {
            let in_dim = if l == 0 { 1 } else { hidden };
            ls.push(LayerParams::init(in_dim, hidden, rng));
        }
        let scale = 1.0 / (hidden as f64).sqrt();
        let w_out = DVector::from_fn(hidden, |_, _| rng.gen_range(-scale..scale));
        LstmModel {
            version: 1,
            hidden,
            window,
            layers: ls,
            w_out,
            b_out: 0.0,
            bounds: BTreeMap::new(),
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Forward pass over a batch of windows (rows of `windows`), returning
    /// one normalized prediction per row.
    pub fn forward_batch(&self, windows: &DMatrix<f64>) -> Result<DVector<f64>> {
        if windows.ncols() != self.window {
            return Err(Error::DimensionMismatch {
                expected: self.window,
                got: windows.ncols(),
                context: "LSTM input window",
            });
        }
        let tape = self.forward_tape(windows);
        Ok(tape.output)
    }

    /// Forecast the next raw load value for `node` from its trailing raw
    /// window.
    pub fn forecast(&self, node: usize, raw_window: &[f64]) -> Result<f64> {
        if raw_window.len() != self.window {
            return Err(Error::DimensionMismatch {
                expected: self.window,
                got: raw_window.len(),
                context: "LSTM input window",
            });
        }
        let bounds = self.bounds.get(&node).ok_or(Error::MissingInput {
            node,
            what: "normalization bounds",
        })?;
        let w = DMatrix::from_fn(1, self.window, |_, c| bounds.normalize(raw_window[c]));
        let y = self.forward_batch(&w)?;
        Ok(bounds.denormalize(y[0]))
    }

    fn forward_tape(&self, windows: &DMatrix<f64>) -> ForwardTape {
        let b = windows.nrows();
        let h = self.hidden;
        let w = self.window;
        let mut steps: Vec<Vec<CellCache>> = (0..self.layers.len())
            .map(|_| Vec::with_capacity(w))
            .collect();
        let mut layer_input: Vec<DMatrix<f64>> = (0..w)
            .map(|t| DMatrix::from_fn(b, 1, |r, _| windows[(r, t)]))
            .collect();

        for (l, params) in self.layers.iter().enumerate() {
            let mut hidden_state = DMatrix::<f64>::zeros(b, h);
            let mut cell = DMatrix::<f64>::zeros(b, h);
            let mut next_input = Vec::with_capacity(w);
            for x_t in layer_input.iter().take(w) {
                let cache = cell_forward(params, x_t, &hidden_state, &cell, h);
                hidden_state = cache.h.clone();
                cell = cache.c.clone();
                next_input.push(cache.h.clone());
                steps[l].push(cache);
            }
            layer_input = next_input;
        }

        let h_last = steps.last().unwrap().last().unwrap().h.clone();
        let output = DVector::from_fn(b, |r, _| {
            let mut acc = self.b_out;
            for k in 0..h {
                acc += h_last[(r, k)] * self.w_out[k];
            }
            acc
        });
        ForwardTape { steps, output }
    }
}

/// Per-step cache of a cell evaluation.
struct CellCache {
    x: DMatrix<f64>,
    h_prev: DMatrix<f64>,
    c_prev: DMatrix<f64>,
    i: DMatrix<f64>,
    f: DMatrix<f64>,
    o: DMatrix<f64>,
    g: DMatrix<f64>,
    c: DMatrix<f64>,
    tanh_c: DMatrix<f64>,
    h: DMatrix<f64>,
}

struct ForwardTape {
    /// steps[layer][t]
    steps: Vec<Vec<CellCache>>,
    output: DVector<f64>,
}

fn cell_forward(
    params: &LayerParams,
    x: &DMatrix<f64>,
    h_prev: &DMatrix<f64>,
    c_prev: &DMatrix<f64>,
    h: usize,
) -> CellCache {
    let b = x.nrows();
    let mut pre = x * params.w_x.transpose() + h_prev * params.w_h.transpose();
    for r in 0..b {
        for k in 0..GATES * h {
            pre[(r, k)] += params.bias[k];
        }
    }
    let mut i = DMatrix::zeros(b, h);
    let mut f = DMatrix::zeros(b, h);
    let mut o = DMatrix::zeros(b, h);
    let mut g = DMatrix::zeros(b, h);
    for r in 0..b {
        for k in 0..h {
            i[(r, k)] = sigmoid(pre[(r, k)]);
            f[(r, k)] = sigmoid(pre[(r, h + k)]);
            o[(r, k)] = sigmoid(pre[(r, 2 * h + k)]);
            g[(r, k)] = pre[(r, 3 * h + k)].tanh();
        }
    }
    let mut c = DMatrix::zeros(b, h);
    let mut tanh_c = DMatrix::zeros(b, h);
    let mut h_out = DMatrix::zeros(b, h);
    for r in 0..b {
        for k in 0..h {
            c[(r, k)] = i[(r, k)] * g[(r, k)] + f[(r, k)] * c_prev[(r, k)];
            tanh_c[(r, k)] = c[(r, k)].tanh();
            h_out[(r, k)] = o[(r, k)] * tanh_c[(r, k)];
        }
    }
    CellCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        i,
        f,
        o,
        g,
        c,
        tanh_c,
        h: h_out,
    }
}

/// Single cell step on plain vectors, the direct transcription of the
/// gate equations. Exposed for unit tests and spot checks.
pub fn lstm_cell(
    params: &LayerParams,
    x: &DVector<f64>,
    h_prev: &DVector<f64>,
    c_prev: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let h = h_prev.len();
    let xm = DMatrix::from_fn(1, x.len(), |_, c| x[c]);
    let hm = DMatrix::from_fn(1, h, |_, c| h_prev[c]);
    let cm = DMatrix::from_fn(1, h, |_, c| c_prev[c]);
    let cache = cell_forward(params, &xm, &hm, &cm, h);
    (
        DVector::from_fn(h, |k, _| cache.h[(0, k)]),
        DVector::from_fn(h, |k, _| cache.c[(0, k)]),
    )
}

/// Gradients for all trainable tensors.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub w_out: DVector<f64>,
    pub b_out: f64,
}

impl Gradients {
    fn zeros(model: &LstmModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| LayerParams::zeros(l.w_x.ncols(), model.hidden))
                .collect(),
            w_out: DVector::zeros(model.hidden),
            b_out: 0.0,
        }
    }

    fn global_norm(&self) -> f64 {
        let mut acc = self.b_out * self.b_out;
        acc += self.w_out.iter().map(|v| v * v).sum::<f64>();
        for l in &self.layers {
            acc += l.w_x.iter().map(|v| v * v).sum::<f64>();
            acc += l.w_h.iter().map(|v| v * v).sum::<f64>();
            acc += l.bias.iter().map(|v| v * v).sum::<f64>();
        }
        acc.sqrt()
    }

    fn scale(&mut self, s: f64) {
        self.b_out *= s;
        self.w_out *= s;
        for l in &mut self.layers {
            l.w_x *= s;
            l.w_h *= s;
            l.bias *= s;
        }
    }
}

/// Mean squared error and its gradients over one batch of windows.
pub fn loss_and_gradients(
    model: &LstmModel,
    windows: &DMatrix<f64>,
    targets: &DVector<f64>,
) -> Result<(f64, Gradients)> {
    let b = windows.nrows();
    let h = model.hidden;
    let w = model.window;
    let tape = model.forward_tape(windows);

    let resid = &tape.output - targets;
    let loss = resid.iter().map(|r| r * r).sum::<f64>() / b as f64;
    let dy = 2.0 * &resid / b as f64;

    let mut grads = Gradients::zeros(model);
    let h_last = &tape.steps.last().unwrap().last().unwrap().h;
    for k in 0..h {
        let mut acc = 0.0;
        for r in 0..b {
            acc += h_last[(r, k)] * dy[r];
        }
        grads.w_out[k] = acc;
    }
    grads.b_out = dy.sum();

    // d_from_above[t]: gradient w.r.t. the current layer's output h_t.
    let mut d_from_above: Vec<DMatrix<f64>> = (0..w).map(|_| DMatrix::zeros(b, h)).collect();
    {
        let last = d_from_above.last_mut().unwrap();
        for r in 0..b {
            for k in 0..h {
                last[(r, k)] = dy[r] * model.w_out[k];
            }
        }
    }

    for l in (0..model.layers.len()).rev() {
        let params = &model.layers[l];
        let in_dim = params.w_x.ncols();
        let mut d_below: Vec<DMatrix<f64>> = (0..w).map(|_| DMatrix::zeros(b, in_dim)).collect();
        let mut dh_next = DMatrix::<f64>::zeros(b, h);
        let mut dc_next = DMatrix::<f64>::zeros(b, h);

        for t in (0..w).rev() {
            let cache = &tape.steps[l][t];
            let dh_total = &d_from_above[t] + &dh_next;
            let mut dpre = DMatrix::<f64>::zeros(b, GATES * h);
            for r in 0..b {
                for k in 0..h {
                    let d_o = dh_total[(r, k)] * cache.tanh_c[(r, k)];
                    let dtanh = dh_total[(r, k)] * cache.o[(r, k)];
                    let dc = dc_next[(r, k)] + dtanh * (1.0 - cache.tanh_c[(r, k)].powi(2));
                    let d_i = dc * cache.g[(r, k)];
                    let d_g = dc * cache.i[(r, k)];
                    let d_f = dc * cache.c_prev[(r, k)];
                    dc_next[(r, k)] = dc * cache.f[(r, k)];
                    dpre[(r, k)] = d_i * cache.i[(r, k)] * (1.0 - cache.i[(r, k)]);
                    dpre[(r, h + k)] = d_f * cache.f[(r, k)] * (1.0 - cache.f[(r, k)]);
                    dpre[(r, 2 * h + k)] = d_o * cache.o[(r, k)] * (1.0 - cache.o[(r, k)]);
                    dpre[(r, 3 * h + k)] = d_g * (1.0 - cache.g[(r, k)].powi(2));
                }
            }
            grads.layers[l].w_x += dpre.transpose() * &cache.x;
            grads.layers[l].w_h += dpre.transpose() * &cache.h_prev;
            for k in 0..GATES * h {
                grads.layers[l].bias[k] += dpre.column(k).sum();
            }
            d_below[t] = &dpre * &params.w_x;
            dh_next = &dpre * &params.w_h;
        }
        d_from_above = d_below;
    }

    Ok((loss, grads))
}

/// Adam optimizer state mirroring the gradient structure.
struct Adam {
    m: Gradients,
    v: Gradients,
    t: usize,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(model: &LstmModel, lr: f64) -> Self {
        Adam {
            m: Gradients::zeros(model),
            v: Gradients::zeros(model),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn apply(&mut self, model: &mut LstmModel, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let mut update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for ix in 0..p.len() {
                m[ix] = b1 * m[ix] + (1.0 - b1) * g[ix];
                v[ix] = b2 * v[ix] + (1.0 - b2) * g[ix] * g[ix];
                p[ix] -= lr * (m[ix] / bc1) / ((v[ix] / bc2).sqrt() + eps);
            }
        };
        for l in 0..model.layers.len() {
            update(
                model.layers[l].w_x.as_mut_slice(),
                grads.layers[l].w_x.as_slice(),
                self.m.layers[l].w_x.as_mut_slice(),
                self.v.layers[l].w_x.as_mut_slice(),
            );
            update(
                model.layers[l].w_h.as_mut_slice(),
                grads.layers[l].w_h.as_slice(),
                self.m.layers[l].w_h.as_mut_slice(),
                self.v.layers[l].w_h.as_mut_slice(),
            );
            update(
                model.layers[l].bias.as_mut_slice(),
                grads.layers[l].bias.as_slice(),
                self.m.layers[l].bias.as_mut_slice(),
                self.v.layers[l].bias.as_mut_slice(),
            );
        }
        update(
            model.w_out.as_mut_slice(),
            grads.w_out.as_slice(),
            self.m.w_out.as_mut_slice(),
            self.v.w_out.as_mut_slice(),
        );
        update(
            std::slice::from_mut(&mut model.b_out),
            std::slice::from_ref(&grads.b_out),
            std::slice::from_mut(&mut self.m.b_out),
            std::slice::from_mut(&mut self.v.b_out),
        );
    }
}

/// Raw load series per gas node at a fixed sampling step.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LoadSeries {
    pub dt_seconds: f64,
    pub nodes: Vec<usize>,
    /// data[k] is the series for nodes[k]; all series share one length.
    pub data: Vec<Vec<f64>>,
}

impl LoadSeries {
    pub fn len(&self) -> usize {
        self.data.first().map(|d| d.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn series(&self, node: usize) -> Option<&[f64]> {
        self.nodes
            .iter()
            .position(|n| *n == node)
            .map(|k| self.data[k].as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.len();
        for (k, d) in self.data.iter().enumerate() {
            if d.len() != len {
                return Err(Error::Inconsistent(format!(
                    "load series for node {} has length {} != {}",
                    self.nodes[k],
                    d.len(),
                    len
                )));
            }
            if let Some(bad) = d.iter().find(|v| !v.is_finite()) {
                return Err(Error::Inconsistent(format!(
                    "non-finite load value {bad} for node {}",
                    self.nodes[k]
                )));
            }
        }
        Ok(())
    }

    /// Fills non-finite entries by linear interpolation between the
    /// nearest finite neighbors (ingestion path for external data).
    pub fn interpolate_gaps(&mut self) {
        for d in &mut self.data {
            let n = d.len();
            let mut i = 0;
            while i < n {
                if d[i].is_finite() {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < n && !d[i].is_finite() {
                    i += 1;
                }
                let left = if start > 0 { Some(d[start - 1]) } else { None };
                let right = if i < n { Some(d[i]) } else { None };
                for (off, slot) in (start..i).enumerate() {
                    d[slot] = match (left, right) {
                        (Some(l), Some(r)) => {
                            let frac = (off + 1) as f64 / (i - start + 1) as f64;
                            l + frac * (r - l)
                        }
                        (Some(l), None) => l,
                        (None, Some(r)) => r,
                        (None, None) => 0.0,
                    };
                }
            }
        }
    }
}

/// Chronological 80/10/10 split boundaries (train end, test end).
pub fn split_indices(len: usize) -> (usize, usize) {
    let train_end = len * 8 / 10;
    let test_end = len * 9 / 10;
    (train_end, test_end)
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Optional cap on the number of training pairs (chronologically
    /// strided subsample) to bound training cost.
    pub max_train_pairs: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            batch: 64,
            seed: 0,
            max_train_pairs: None,
        }
    }
}

const GRAD_CLIP: f64 = 5.0;

/// Per-epoch loss history; `smoothed` is the running minimum.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LossCurve {
    pub epochs: Vec<f64>,
    pub smoothed: Vec<f64>,
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub loss: LossCurve,
    pub train_mape: f64,
    pub test_mape: f64,
}

struct Dataset {
    windows: DMatrix<f64>,
    targets: DVector<f64>,
}

fn build_pairs(
    model_window: usize,
    series: &LoadSeries,
    bounds: &BTreeMap<usize, NormBounds>,
    range: std::ops::Range<usize>,
) -> Dataset {
    let w = model_window;
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (k, node) in series.nodes.iter().enumerate() {
        let b = bounds[node];
        let data = &series.data[k];
        let hi = range.end.min(data.len());
        for t in range.start..hi {
            if t + w >= hi {
                break;
            }
            let mut row = Vec::with_capacity(w);
            for s in t..t + w {
                row.push(b.normalize(data[s]));
            }
            rows.push(row);
            targets.push(b.normalize(data[t + w]));
        }
    }
    let windows = DMatrix::from_fn(rows.len(), w, |r, c| rows[r][c]);
    Dataset {
        windows,
        targets: DVector::from_vec(targets),
    }
}

fn subsample(ds: &Dataset, cap: usize) -> Dataset {
    let n = ds.windows.nrows();
    if n <= cap || cap == 0 {
        return Dataset {
            windows: ds.windows.clone(),
            targets: ds.targets.clone(),
        };
    }
    let stride = n as f64 / cap as f64;
    let rows: Vec<usize> = (0..cap).map(|k| (k as f64 * stride) as usize).collect();
    let windows = DMatrix::from_fn(cap, ds.windows.ncols(), |r, c| ds.windows[(rows[r], c)]);
    let targets = DVector::from_fn(cap, |r, _| ds.targets[rows[r]]);
    Dataset { windows, targets }
}

/// Trains the model in place on the chronological train split (first 80%)
/// and reports train/test MAPE in raw units. Normalization bounds are
/// taken from the train split only.
pub fn train(
    model: &mut LstmModel,
    series: &LoadSeries,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    series.validate()?;
    let len = series.len();
    if len < model.window + 2 {
        return Err(Error::Inconsistent(format!(
            "series length {len} too short for window {}",
            model.window
        )));
    }
    let (train_end, test_end) = split_indices(len);

    let mut bounds = BTreeMap::new();
    for (k, node) in series.nodes.iter().enumerate() {
        let b = NormBounds::from_series(&series.data[k][..train_end])
            .map_err(|_| Error::DegenerateBounds {
                node: *node,
                min: series.data[k][0],
                max: series.data[k][0],
            })?;
        bounds.insert(*node, b);
    }
    model.bounds = bounds.clone();

    let full_train = build_pairs(model.window, series, &bounds, 0..train_end);
    let train_ds = match cfg.max_train_pairs {
        Some(cap) => subsample(&full_train, cap),
        None => full_train,
    };
    let test_ds = build_pairs(model.window, series, &bounds, train_end..test_end);

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed);
    let n = train_ds.windows.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = LossCurve::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0f64;
        let mut adam_holder = None;
        let adam = adam_holder.get_or_insert_with(|| Adam::new(model, cfg.learning_rate));
        let mut start = 0;
        while start < n {
            let end = (start + cfg.batch).min(n);
            let rows = &order[start..end];
            let wb = DMatrix::from_fn(rows.len(), model.window, |r, c| {
                train_ds.windows[(rows[r], c)]
            });
            let tb = DVector::from_fn(rows.len(), |r, _| train_ds.targets[rows[r]]);
            let (loss, mut grads) = loss_and_gradients(model, &wb, &tb)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            let gnorm = grads.global_norm();
            if gnorm > GRAD_CLIP {
                grads.scale(GRAD_CLIP / gnorm);
            }
            adam.apply(model, &grads);
            epoch_loss += loss;
            batches += 1.0;
            start = end;
        }
        let mean = epoch_loss / batches.max(1.0);
        let best = loss_curve
            .smoothed
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
            .min(mean);
        loss_curve.epochs.push(mean);
        loss_curve.smoothed.push(best);
    }

    let train_mape = dataset_mape(model, series, &train_ds)?;
    let test_mape = if test_ds.windows.nrows() > 0 {
        dataset_mape(model, series, &test_ds)?
    } else {
        f64::NAN
    };
    Ok(TrainReport {
        loss: loss_curve,
        train_mape,
        test_mape,
    })
}

fn dataset_mape(model: &LstmModel, _series: &LoadSeries, ds: &Dataset) -> Result<f64> {
    if ds.windows.nrows() == 0 {
        return Ok(f64::NAN);
    }
    let pred = model.forward_batch(&ds.windows)?;
    // Normalized targets can be legitimately near zero; MAPE is computed
    // on the normalized pair shifted into a strictly positive range by
    // the normalization itself being min-based is not guaranteed, so the
    // raw-unit comparison happens per-node in `evaluate_series`. Here the
    // pooled normalized values are compared directly where nonzero.
    let mut num = 0.0;
    let mut count = 0usize;
    for k in 0..pred.len() {
        let t = ds.targets[k];
        if t.abs() > 1e-9 {
            num += ((pred[k] - t) / t).abs();
            count += 1;
        }
    }
    Ok(100.0 * num / count.max(1) as f64)
}

/// Mean absolute percentage error between two raw series.
pub fn mape(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: predictions.len(),
            context: "MAPE inputs",
        });
    }
    let mut acc = 0.0;
    for (k, (p, t)) in predictions.iter().zip(truth).enumerate() {
        if *t == 0.0 {
            return Err(Error::ZeroTruth { index: k });
        }
        acc += ((p - t) / t).abs();
    }
    Ok(100.0 * acc / truth.len().max(1) as f64)
}

/// Rolling one-step forecasts over a raw series segment in raw units.
pub fn rolling_forecast(
    model: &LstmModel,
    node: usize,
    data: &[f64],
    range: std::ops::Range<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = model.window;
    let mut preds = Vec::new();
    let mut truth = Vec::new();
    for t in range {
        if t < w || t >= data.len() {
            continue;
        }
        let window = &data[t - w..t];
        preds.push(model.forecast(node, window)?);
        truth.push(data[t]);
    }
    Ok((preds, truth))
}

/// Parameters of the synthetic load generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticLoadConfig {
    /// Relative amplitude of the daily sinusoid.
    pub daily_amplitude: f64,
    /// Relative amplitude of the weekly modulation.
    pub weekly_amplitude: f64,
    /// Gaussian noise sigma as a fraction of the mean.
    pub noise_fraction: f64,
}

impl Default for SyntheticLoadConfig {
    fn default() -> Self {
        SyntheticLoadConfig {
            daily_amplitude: 0.15,
            weekly_amplitude: 0.05,
            noise_fraction: 0.02,
        }
    }
}

/// Seeded synthetic per-node load series: daily sinusoid, weekly
/// modulation and Gaussian noise, strictly positive.
pub fn generate_synthetic_loads(
    node_means: &[(usize, f64)],
    days: usize,
    dt_seconds: f64,
    cfg: &SyntheticLoadConfig,
    rng: &mut impl Rng,
) -> LoadSeries {
    let steps_per_day = (86_400.0 / dt_seconds).round() as usize;
    let len = days * steps_per_day;
    let mut nodes = Vec::with_capacity(node_means.len());
    let mut data = Vec::with_capacity(node_means.len());
    for (node, mean) in node_means {
        let phase_d: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let phase_w: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut series = Vec::with_capacity(len);
        for t in 0..len {
            let day_frac = t as f64 / steps_per_day as f64;
            let daily = cfg.daily_amplitude * (std::f64::consts::TAU * day_frac + phase_d).sin();
            let weekly =
                cfg.weekly_amplitude * (std::f64::consts::TAU * day_frac / 7.0 + phase_w).sin();
            let noise: f64 = if cfg.noise_fraction > 0.0 {
                let xi: f64 = StandardNormal.sample(rng);
                cfg.noise_fraction * mean * xi
            } else {
                0.0
            };
            let v = mean * (1.0 + daily + weekly) + noise;
            series.push(v.max(0.05 * mean));
        }
        nodes.push(*node);
        data.push(series);
    }
    LoadSeries {
        dt_seconds,
        nodes,
        data,
    }
}

/// One cell of the hyperparameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResult {
    pub layers: usize,
    pub hidden: usize,
    pub window: usize,
    pub train_mape: f64,
    pub test_mape: f64,
}

/// Runs the 2x3x3 grid (layers x hidden units x window length) and
/// returns one row per cell, in grid order.
pub fn run_grid(
    series: &LoadSeries,
    cfg: &TrainConfig,
    jobs: usize,
) -> Result<Vec<GridResult>> {
    use rand::SeedableRng;
    let cells: Vec<(usize, usize, usize)> = [2usize, 3]
        .iter()
        .flat_map(|&l| {
            [40usize, 80, 160]
                .iter()
                .flat_map(move |&h| [5usize, 10, 15].iter().map(move |&w| (l, h, w)))
                .collect::<Vec<_>>()
        })
        .collect();

    let run_cell = |(idx, (l, h, w)): (usize, &(usize, usize, usize))| -> Result<GridResult> {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed ^ (idx as u64 + 1));
        let mut model = LstmModel::new(*l, *h, *w, &mut rng);
        let cell_cfg = TrainConfig {
            seed: cfg.seed ^ (0x9e37 + idx as u64),
            ..cfg.clone()
        };
        let report = train(&mut model, series, &cell_cfg)?;
        Ok(GridResult {
            layers: *l,
            hidden: *h,
            window: *w,
            train_mape: report.train_mape,
            test_mape: report.test_mape,
        })
    };

    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            cells
                .par_iter()
                .enumerate()
                .map(run_cell)
                .collect::<Result<Vec<_>>>()
        })
    } else {
        cells.iter().enumerate().map(run_cell).collect()
    }
}

/// Serializes the model to the versioned JSON parameter dump.
pub fn save_model(model: &LstmModel, path: &std::path::Path) -> Result<()> {
    let json = serde_json::to_string(model)
        .map_err(|e| Error::Parse(format!("model serialization: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: &std::path::Path) -> Result<LstmModel> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let model: LstmModel = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("model file {}: {e}", path.display())))?;
    if model.version != 1 {
        return Err(Error::Parse(format!(
            "unsupported model version {}",
            model.version
        )));
    }
    Ok(model)
}
