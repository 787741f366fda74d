//! Central finite-difference gradient checking.

use crate::error::Result;
use crate::numerics::tensor::Tensor;

/// Central-difference estimate of `d f / d inputs[which]`.
pub fn numeric_grad(
    f: &mut dyn FnMut(&[Tensor]) -> Result<f64>,
    inputs: &[Tensor],
    which: usize,
    eps: f64,
) -> Result<Tensor> {
    let mut work: Vec<Tensor> = inputs.to_vec();
    let mut g = Tensor::zeros(inputs[which].shape());
    for i in 0..inputs[which].len() {
        let orig = inputs[which].data()[i];
        work[which].data_mut()[i] = orig + eps;
        let up = f(&work)?;
        work[which].data_mut()[i] = orig - eps;
        let down = f(&work)?;
        work[which].data_mut()[i] = orig;
        g.data_mut()[i] = (up - down) / (2.0 * eps);
    }
    Ok(g)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &Tensor, b: &Tensor, floor: f64) -> f64 {
    let diff: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    diff / a.frobenius_norm().max(b.frobenius_norm()).max(floor)
}
