use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::huber_td_loss;
use super::matrix::{matmul_nn, matmul_nt, matmul_tn, Matrix};
use super::noise::{FactorNoise, NoiseSet};
use super::real::Real;
use super::QnetError;

pub const HIDDEN_WIDTH: usize = 256;
pub const TENSOR_COUNT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub hidden: usize,
    pub actions: usize,
}

impl NetworkShape {
    pub fn new(input_dim: usize, actions: usize) -> Self {
        Self { input_dim, hidden: HIDDEN_WIDTH, actions }
    }

    pub fn with_hidden(input_dim: usize, hidden: usize, actions: usize) -> Self {
        Self { input_dim, hidden, actions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Dense<T> {
    /// `in x out`, so a batch maps as `x . W + b`.
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

/// Noisy linear layer (`in x out` weights): effective weight is `mu + sigma * (eps_in outer eps_out)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NoisyDense<T> {
    pub weight_mu: Matrix<T>,
    pub weight_sigma: Matrix<T>,
    pub bias_mu: Vec<T>,
    pub bias_sigma: Vec<T>,
}

impl<T: Real> NoisyDense<T> {
    pub fn effective(&self, noise: &FactorNoise<T>) -> (Matrix<T>, Vec<T>) {
        let mut w = self.weight_mu.clone();
        for (i, &ei) in noise.eps_in.iter().enumerate() {
            if ei.is_zero() {
                continue;
            }
            let sigma = self.weight_sigma.row(i);
            for ((wv, &s), &eo) in w.row_mut(i).iter_mut().zip(sigma).zip(&noise.eps_out) {
                *wv += s * ei * eo;
            }
        }
        let b = self
            .bias_mu
            .iter()
            .zip(&self.bias_sigma)
            .zip(&noise.eps_out)
            .map(|((&m, &s), &e)| m + s * e)
            .collect();
        (w, b)
    }
}

/// Two ReLU hidden layers followed by noisy value and advantage heads with dueling aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NetworkParams<T> {
    pub layer1: Dense<T>,
    pub layer2: Dense<T>,
    pub value_head: NoisyDense<T>,
    pub advantage_head: NoisyDense<T>,
}

/// One gradient entry per parameter, laid out exactly like [`NetworkParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GradientSet<T>(pub NetworkParams<T>);

pub const TENSOR_NAMES: [&str; TENSOR_COUNT] = [
    "layer1.weight",
    "layer1.bias",
    "layer2.weight",
    "layer2.bias",
    "value_head.weight_mu",
    "value_head.weight_sigma",
    "value_head.bias_mu",
    "value_head.bias_sigma",
    "advantage_head.weight_mu",
    "advantage_head.weight_sigma",
    "advantage_head.bias_mu",
    "advantage_head.bias_sigma",
];

impl<T: Real> NetworkParams<T> {
    pub fn zeros(shape: NetworkShape) -> Self {
        let NetworkShape { input_dim, hidden, actions } = shape;
        let noisy = |out: usize| NoisyDense {
            weight_mu: Matrix::zeros(hidden, out),
            weight_sigma: Matrix::zeros(hidden, out),
            bias_mu: vec![T::zero(); out],
            bias_sigma: vec![T::zero(); out],
        };
        Self {
            layer1: Dense { weights: Matrix::zeros(input_dim, hidden), bias: vec![T::zero(); hidden] },
            layer2: Dense { weights: Matrix::zeros(hidden, hidden), bias: vec![T::zero(); hidden] },
            value_head: noisy(1),
            advantage_head: noisy(actions),
        }
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            input_dim: self.layer1.weights.rows,
            hidden: self.layer1.weights.cols,
            actions: self.advantage_head.bias_mu.len(),
        }
    }

    /// `[rows, cols]` of every tensor in [`TENSOR_NAMES`] order; vectors report one column.
    pub fn tensor_shapes(&self) -> [[usize; 2]; TENSOR_COUNT] {
        let NetworkShape { input_dim, hidden, actions } = self.shape();
        [
            [input_dim, hidden],
            [hidden, 1],
            [hidden, hidden],
            [hidden, 1],
            [hidden, 1],
            [hidden, 1],
            [1, 1],
            [1, 1],
            [hidden, actions],
            [hidden, actions],
            [actions, 1],
            [actions, 1],
        ]
    }

    pub fn tensors(&self) -> [&[T]; TENSOR_COUNT] {
        [
            &self.layer1.weights.data,
            &self.layer1.bias,
            &self.layer2.weights.data,
            &self.layer2.bias,
            &self.value_head.weight_mu.data,
            &self.value_head.weight_sigma.data,
            &self.value_head.bias_mu,
            &self.value_head.bias_sigma,
            &self.advantage_head.weight_mu.data,
            &self.advantage_head.weight_sigma.data,
            &self.advantage_head.bias_mu,
            &self.advantage_head.bias_sigma,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; TENSOR_COUNT] {
        [
            &mut self.layer1.weights.data,
            &mut self.layer1.bias,
            &mut self.layer2.weights.data,
            &mut self.layer2.bias,
            &mut self.value_head.weight_mu.data,
            &mut self.value_head.weight_sigma.data,
            &mut self.value_head.bias_mu,
            &mut self.value_head.bias_sigma,
            &mut self.advantage_head.weight_mu.data,
            &mut self.advantage_head.weight_sigma.data,
            &mut self.advantage_head.bias_mu,
            &mut self.advantage_head.bias_sigma,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Same shape, every entry mapped through `f`.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            for v in t.iter_mut() {
                *v = f(*v);
            }
        }
        out
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.tensor_shapes() == other.tensor_shapes()
    }
}

impl<T: Real> GradientSet<T> {
    pub fn zeros(shape: NetworkShape) -> Self {
        Self(NetworkParams::zeros(shape))
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn max_abs(&self) -> T {
        self.0
            .tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Euclidean norm over every tensor, accumulated in f64.
    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self.0.tensors().iter().flat_map(|t| t.iter()).map(|v| v.as_f64() * v.as_f64()).sum();
        libm::sqrt(sq)
    }

    /// Rescale so the global norm is at most `max_norm`. Returns the norm before clipping.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.l2_norm();
        if norm > max_norm {
            let scale = T::from_f64(max_norm / norm);
            for t in self.0.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= scale);
            }
        }
        norm
    }
}

fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, bound: f64) -> T {
    T::from_f64((rng.random::<f64>() * 2.0 - 1.0) * bound)
}

pub const SIGMA_ZERO: f64 = 0.5;

/// Standard-width network (`HIDDEN_WIDTH` units per hidden layer).
pub fn init_network<T: Real, R: Rng + ?Sized>(input_dim: usize, action_count: usize, rng: &mut R) -> NetworkParams<T> {
    init_network_with_shape(NetworkShape::new(input_dim, action_count), rng)
}

/// Glorot-uniform dense layers; noisy heads with `mu ~ U(+-1/sqrt(fan_in))` and
/// `sigma = 0.5/sqrt(fan_in)`.
pub fn init_network_with_shape<T: Real, R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> NetworkParams<T> {
    assert!(shape.input_dim >= 1 && shape.actions >= 2 && shape.hidden >= 1);
    let mut p = NetworkParams::zeros(shape);
    let glorot = |fan_in: usize, fan_out: usize| libm::sqrt(6.0 / (fan_in + fan_out) as f64);

    let b1 = glorot(shape.input_dim, shape.hidden);
    p.layer1.weights.data.iter_mut().for_each(|w| *w = uniform(rng, b1));
    let b2 = glorot(shape.hidden, shape.hidden);
    p.layer2.weights.data.iter_mut().for_each(|w| *w = uniform(rng, b2));

    let mu_bound = 1.0 / libm::sqrt(shape.hidden as f64);
    let sigma = T::from_f64(SIGMA_ZERO / libm::sqrt(shape.hidden as f64));
    for head in [&mut p.value_head, &mut p.advantage_head] {
        head.weight_mu.data.iter_mut().for_each(|w| *w = uniform(rng, mu_bound));
        head.bias_mu.iter_mut().for_each(|w| *w = uniform(rng, mu_bound));
        head.weight_sigma.data.iter_mut().for_each(|w| *w = sigma);
        head.bias_sigma.iter_mut().for_each(|w| *w = sigma);
    }
    p
}

/// Intermediate values of a batched forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    pub z1: Matrix<T>,
    pub h1: Matrix<T>,
    pub z2: Matrix<T>,
    pub h2: Matrix<T>,
    pub value_weights: Matrix<T>,
    pub advantage_weights: Matrix<T>,
    pub q: Matrix<T>,
}

fn dense_relu<T: Real>(input: &Matrix<T>, layer: &Dense<T>) -> (Matrix<T>, Matrix<T>) {
    let mut z = matmul_nn(input, &layer.weights);
    for r in 0..z.rows {
        for (v, &b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    let h = Matrix::from_vec(z.rows, z.cols, z.data.iter().map(|&v| v.max(T::zero())).collect());
    (z, h)
}

fn affine<T: Real>(input: &Matrix<T>, weights: &Matrix<T>, bias: &[T]) -> Matrix<T> {
    let mut out = matmul_nn(input, weights);
    for r in 0..out.rows {
        for (v, &b) in out.row_mut(r).iter_mut().zip(bias) {
            *v += b;
        }
    }
    out
}

/// Dueling aggregation `Q = V + A - mean(A)` applied row-wise.
pub fn dueling_combine<T: Real>(value: T, advantage: &[T], out: &mut [T]) {
    let n = T::from_f64(advantage.len() as f64);
    let mean = advantage.iter().copied().sum::<T>() / n;
    for (q, &a) in out.iter_mut().zip(advantage) {
        *q = value + a - mean;
    }
}

/// Batched forward pass over `inputs` (`batch x input_dim`).
pub fn forward_trace<T: Real>(
    params: &NetworkParams<T>,
    inputs: &Matrix<T>,
    noise: &NoiseSet<T>,
) -> Result<ForwardTrace<T>, QnetError> {
    let shape = params.shape();
    if inputs.cols != shape.input_dim {
        return Err(QnetError::ShapeMismatch);
    }
    if inputs.data.iter().any(|v| !v.is_finite()) {
        return Err(QnetError::NonFiniteInput);
    }
    let (z1, h1) = dense_relu(inputs, &params.layer1);
    let (z2, h2) = dense_relu(&h1, &params.layer2);
    let (wv, bv) = params.value_head.effective(&noise.value);
    let (wa, ba) = params.advantage_head.effective(&noise.advantage);
    let value = affine(&h2, &wv, &bv);
    let advantage = affine(&h2, &wa, &ba);
    let mut q = Matrix::zeros(inputs.rows, shape.actions);
    for r in 0..inputs.rows {
        dueling_combine(value.get(r, 0), advantage.row(r), q.row_mut(r));
    }
    if q.data.iter().any(|v| !v.is_finite()) {
        return Err(QnetError::NonFiniteActivation);
    }
    Ok(ForwardTrace { z1, h1, z2, h2, value_weights: wv, advantage_weights: wa, q })
}

pub fn forward_batch<T: Real>(
    params: &NetworkParams<T>,
    inputs: &Matrix<T>,
    noise: &NoiseSet<T>,
) -> Result<Matrix<T>, QnetError> {
    forward_trace(params, inputs, noise).map(|t| t.q)
}

/// Q-values for a single observation.
pub fn forward<T: Real>(params: &NetworkParams<T>, obs: &[T], noise: &NoiseSet<T>) -> Result<Vec<T>, QnetError> {
    let input = Matrix::from_vec(1, obs.len(), obs.to_vec());
    forward_batch(params, &input, noise).map(|q| q.data)
}

fn noisy_grads<T: Real>(d_eff_w: Matrix<T>, d_eff_b: Vec<T>, noise: &FactorNoise<T>) -> NoisyDense<T> {
    let mut d_sigma = Matrix::zeros(d_eff_w.rows, d_eff_w.cols);
    for (i, &ei) in noise.eps_in.iter().enumerate() {
        for ((s, &g), &eo) in d_sigma.row_mut(i).iter_mut().zip(d_eff_w.row(i)).zip(&noise.eps_out) {
            *s = g * ei * eo;
        }
    }
    let d_bias_sigma = d_eff_b.iter().zip(&noise.eps_out).map(|(&g, &e)| g * e).collect();
    NoisyDense { weight_mu: d_eff_w, weight_sigma: d_sigma, bias_mu: d_eff_b, bias_sigma: d_bias_sigma }
}

fn column_sums<T: Real>(m: &Matrix<T>) -> Vec<T> {
    let mut out = vec![T::zero(); m.cols];
    for r in 0..m.rows {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    out
}

fn relu_mask<T: Real>(grad: &mut Matrix<T>, pre: &Matrix<T>) {
    for (g, &z) in grad.data.iter_mut().zip(&pre.data) {
        if z <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Analytic gradient of the mean Huber TD loss with respect to every parameter.
///
/// `noise` must be the noise used for the corresponding forward pass. Returns the loss together
/// with the gradients.
pub fn backward<T: Real>(
    params: &NetworkParams<T>,
    inputs: &Matrix<T>,
    actions: &[usize],
    targets: &[T],
    noise: &NoiseSet<T>,
) -> Result<(T, GradientSet<T>), QnetError> {
    let batch = inputs.rows;
    if actions.len() != batch || targets.len() != batch {
        return Err(QnetError::ShapeMismatch);
    }
    let shape = params.shape();
    if actions.iter().any(|&a| a >= shape.actions) {
        return Err(QnetError::ShapeMismatch);
    }
    let trace = forward_trace(params, inputs, noise)?;
    let (loss, dq) = huber_td_loss(&trace.q, actions, targets);

    // Dueling head: dV = sum_a dQ, dA = dQ - mean_a dQ.
    let inv_actions = T::one() / T::from_f64(shape.actions as f64);
    let mut dv = Matrix::zeros(batch, 1);
    let mut da = Matrix::zeros(batch, shape.actions);
    for r in 0..batch {
        let row = dq.row(r);
        let total: T = row.iter().copied().sum();
        dv.set(r, 0, total);
        let mean = total * inv_actions;
        for (d, &g) in da.row_mut(r).iter_mut().zip(row) {
            *d = g - mean;
        }
    }

    let value_head = noisy_grads(matmul_tn(&trace.h2, &dv), column_sums(&dv), &noise.value);
    let advantage_head = noisy_grads(matmul_tn(&trace.h2, &da), column_sums(&da), &noise.advantage);

    let mut dh2 = matmul_nt(&dv, &trace.value_weights);
    for (d, g) in dh2.data.iter_mut().zip(matmul_nt(&da, &trace.advantage_weights).data) {
        *d += g;
    }
    relu_mask(&mut dh2, &trace.z2);
    let dz2 = dh2;
    let layer2 = Dense { weights: matmul_tn(&trace.h1, &dz2), bias: column_sums(&dz2) };

    let mut dh1 = matmul_nt(&dz2, &params.layer2.weights);
    relu_mask(&mut dh1, &trace.z1);
    let dz1 = dh1;
    let layer1 = Dense { weights: matmul_tn(inputs, &dz1), bias: column_sums(&dz1) };

    let grads = GradientSet(NetworkParams { layer1, layer2, value_head, advantage_head });
    if !loss.is_finite() || !grads.is_finite() {
        return Err(QnetError::NonFiniteActivation);
    }
    Ok((loss, grads))
}

/// `target <- tau * eval + (1 - tau) * target`, parameter-wise.
pub fn soft_update<T: Real>(target: &mut NetworkParams<T>, eval: &NetworkParams<T>, tau: f64) {
    assert!((0.0..=1.0).contains(&tau), "tau must lie in [0, 1]");
    assert!(target.same_shape(eval), "soft_update on mismatched shapes");
    let tau_t = T::from_f64(tau);
    let keep = T::from_f64(1.0 - tau);
    for (t, e) in target.tensors_mut().into_iter().zip(eval.tensors()) {
        for (tv, &ev) in t.iter_mut().zip(e) {
            let (lo, hi) = if *tv <= ev { (*tv, ev) } else { (ev, *tv) };
            *tv = (tau_t * ev + keep * *tv).max(lo).min(hi);
        }
    }
}
