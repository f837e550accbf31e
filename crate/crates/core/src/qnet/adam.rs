use serde::{Deserialize, Serialize};

use super::network::{GradientSet, NetworkParams, NetworkShape};
use super::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AdamState<T> {
    pub first_moment: NetworkParams<T>,
    pub second_moment: NetworkParams<T>,
    pub timestep: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(shape: NetworkShape) -> Self {
        Self {
            first_moment: NetworkParams::zeros(shape),
            second_moment: NetworkParams::zeros(shape),
            timestep: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Real>(params: &mut NetworkParams<T>, grads: &GradientSet<T>, state: &mut AdamState<T>, lr: f64) {
    assert!(params.same_shape(&grads.0), "gradient shape mismatch");
    assert!(params.same_shape(&state.first_moment), "optimizer state shape mismatch");
    state.timestep += 1;
    let t = state.timestep as i32;
    let b1 = T::from_f64(state.beta1);
    let b2 = T::from_f64(state.beta2);
    let one_minus_b1 = T::from_f64(1.0 - state.beta1);
    let one_minus_b2 = T::from_f64(1.0 - state.beta2);
    let correction1 = T::from_f64(1.0 - libm::pow(state.beta1, t as f64));
    let correction2 = T::from_f64(1.0 - libm::pow(state.beta2, t as f64));
    let lr = T::from_f64(lr);
    let eps = T::from_f64(state.epsilon);

    let p_all = params.tensors_mut();
    let m_all = state.first_moment.tensors_mut();
    let v_all = state.second_moment.tensors_mut();
    let g_all = grads.0.tensors();
    for (((p, m), v), g) in p_all.into_iter().zip(m_all).zip(v_all).zip(g_all) {
        for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
            *m = flush(b1 * *m + one_minus_b1 * g);
            *v = flush(b2 * *v + one_minus_b2 * g * g);
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

// Moments of units whose gradient stays at zero decay geometrically into the
// subnormal range, where float arithmetic is an order of magnitude slower.
#[inline]
fn flush<T: Real>(x: T) -> T {
    if x.is_subnormal() { T::zero() } else { x }
}
