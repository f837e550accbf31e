//! Dense dueling Q-network with factorized noisy heads, hand-derived backpropagation, Huber TD
//! loss and Adam.

mod adam;
mod loss;
mod matrix;
mod network;
mod noise;
mod real;

pub use adam::{adam_step, AdamState};
pub use loss::{huber, huber_derivative, huber_td_loss, HUBER_KAPPA};
pub use matrix::{matmul_nn, matmul_nn_acc, matmul_nt, matmul_tn, Matrix};
pub use network::{
    backward, dueling_combine, forward, forward_batch, forward_trace, init_network, init_network_with_shape,
    soft_update, Dense, ForwardTrace, GradientSet, NetworkParams, NetworkShape, NoisyDense, HIDDEN_WIDTH, SIGMA_ZERO,
    TENSOR_COUNT, TENSOR_NAMES,
};
pub use noise::{noise_transform, sample_noise, zero_noise, FactorNoise, NoiseSet};
pub use real::{gemm, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum QnetError {
    #[error("non-finite network input")]
    NonFiniteInput,
    #[error("non-finite activation, loss or gradient")]
    NonFiniteActivation,
    #[error("tensor shapes do not agree")]
    ShapeMismatch,
}
