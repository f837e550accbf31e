use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::network::NetworkShape;
use super::real::Real;

/// Factorized Gaussian noise for one noisy layer; entries are already passed through
/// `sign(x) * sqrt(|x|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FactorNoise<T> {
    pub eps_in: Vec<T>,
    pub eps_out: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NoiseSet<T> {
    pub value: FactorNoise<T>,
    pub advantage: FactorNoise<T>,
}

pub fn noise_transform(x: f64) -> f64 {
    libm::copysign(libm::sqrt(x.abs()), x)
}

impl<T: Real> FactorNoise<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { eps_in: vec![T::zero(); inputs], eps_out: vec![T::zero(); outputs] }
    }

    fn sample<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let mut draw = |n: usize| -> Vec<T> {
            (0..n)
                .map(|_| T::from_f64(noise_transform(rng.sample::<f64, _>(StandardNormal))))
                .collect()
        };
        let eps_in = draw(inputs);
        let eps_out = draw(outputs);
        Self { eps_in, eps_out }
    }

    pub fn is_zero(&self) -> bool {
        self.eps_in.iter().chain(&self.eps_out).all(|v| v.is_zero())
    }
}

impl<T: Real> NoiseSet<T> {
    pub fn zero(shape: NetworkShape) -> Self {
        Self {
            value: FactorNoise::zeros(shape.hidden, 1),
            advantage: FactorNoise::zeros(shape.hidden, shape.actions),
        }
    }

    pub fn sample<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        let value = FactorNoise::sample(shape.hidden, 1, rng);
        let advantage = FactorNoise::sample(shape.hidden, shape.actions, rng);
        Self { value, advantage }
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero() && self.advantage.is_zero()
    }
}

pub fn sample_noise<T: Real, R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> NoiseSet<T> {
    NoiseSet::sample(shape, rng)
}

pub fn zero_noise<T: Real>(shape: NetworkShape) -> NoiseSet<T> {
    NoiseSet::zero(shape)
}
