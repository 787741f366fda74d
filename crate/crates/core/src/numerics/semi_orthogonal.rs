use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

/// Which scale the rows of a constrained factor are pulled toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrthoScale {
    /// `c* = tr(PP)/tr(P)`, re-estimated every step.
    #[default]
    Floating,
    /// `c* = 1`.
    Fixed,
}

fn gram(m: &Tensor) -> Tensor {
    // P = M Mᵀ
    let (r, c) = (m.rows(), m.cols());
    let mut p = vec![0.0; r * r];
    crate::numerics::tensor::gemm(r, c, r, m.data(), false, m.data(), true, &mut p, 0.0);
    Tensor::from_parts(vec![r, r], p)
}

/// The scale `c*` of `M` under the given policy.
pub fn target_scale(m: &Tensor, scale: OrthoScale) -> Result<f64> {
    match scale {
        OrthoScale::Fixed => Ok(1.0),
        OrthoScale::Floating => {
            let p = gram(m);
            let r = p.rows();
            let tr_p: f64 = (0..r).map(|i| p.get(i, i)).sum();
            if tr_p == 0.0 {
                return Err(Error::DegenerateMatrix);
            }
            // tr(P·P) = ‖P‖²_F since P is symmetric.
            Ok(p.data().iter().map(|v| v * v).sum::<f64>() / tr_p)
        }
    }
}

/// `‖MMᵀ − c*I‖_F / ‖c*I‖_F` with `c*` from the given policy.
pub fn orthogonality_error(m: &Tensor, scale: OrthoScale) -> Result<f64> {
    let c = target_scale(m, scale)?;
    let mut p = gram(m);
    let r = p.rows();
    for i in 0..r {
        p.data_mut()[i * r + i] -= c;
    }
    Ok(p.frobenius_norm() / (c * (r as f64).sqrt()))
}

/// One projection step toward `MMᵀ = c*·I`:
/// `M ← M − (1/(2c*))·(P − c*·I)·M` with `P = MMᵀ`.
pub fn semi_orthogonal_step(m: &Tensor, scale: OrthoScale) -> Result<Tensor> {
    let (r, c) = (m.rows(), m.cols());
    if m.shape().len() != 2 || r > c {
        return Err(Error::ShapeMismatch(format!(
            "semi-orthogonal factor must be r×c with r ≤ c, got {:?}",
            m.shape()
        )));
    }
    if m.data().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateMatrix);
    }
    let cstar = target_scale(m, scale)?;
    let mut p = gram(m);
    for i in 0..r {
        p.data_mut()[i * r + i] -= cstar;
    }
    let mut out = m.data().to_vec();
    let alpha = -1.0 / (2.0 * cstar);
    // out = M + alpha·(P − c*I)·M
    let mut delta = vec![0.0; r * c];
    crate::numerics::tensor::gemm(r, r, c, p.data(), false, m.data(), false, &mut delta, 0.0);
    for (o, d) in out.iter_mut().zip(&delta) {
        *o += alpha * d;
    }
    Ok(Tensor::from_parts(vec![r, c], out))
}
