use super::matrix::Matrix;
use super::real::Real;

pub const HUBER_KAPPA: f64 = 1.0;

pub fn huber<T: Real>(residual: T) -> T {
    let k = T::from_f64(HUBER_KAPPA);
    let half = T::from_f64(0.5);
    let a = residual.abs();
    if a <= k {
        half * residual * residual
    } else {
        k * (a - half * k)
    }
}

pub fn huber_derivative<T: Real>(residual: T) -> T {
    let k = T::from_f64(HUBER_KAPPA);
    residual.max(-k).min(k)
}

/// Mean Huber loss of `q_pred[i, actions[i]] - targets[i]` and its gradient with respect to
/// `q_pred`, which is non-zero only at the taken-action entries.
pub fn huber_td_loss<T: Real>(q_pred: &Matrix<T>, actions: &[usize], targets: &[T]) -> (T, Matrix<T>) {
    assert_eq!(q_pred.rows, actions.len(), "batch size mismatch");
    assert_eq!(q_pred.rows, targets.len(), "batch size mismatch");
    let batch = T::from_f64(q_pred.rows.max(1) as f64);
    let mut grad = Matrix::zeros(q_pred.rows, q_pred.cols);
    let mut loss = T::zero();
    for (i, (&a, &y)) in actions.iter().zip(targets).enumerate() {
        let r = q_pred.get(i, a) - y;
        loss += huber(r);
        grad.set(i, a, huber_derivative(r) / batch);
    }
    (loss / batch, grad)
}
