//! Parameter initialization and the affine layer shared by the models.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::numerics::{semi_orthogonal_step, Constraint, OrthoScale, ParamId, ParamStore, Tape, Tensor, Value};

pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Tensor {
    let dist = Normal::new(0.0, std).expect("finite std");
    Tensor::from_parts(vec![rows, cols], (0..rows * cols).map(|_| dist.sample(rng)).collect())
}

/// Gaussian init projected onto the semi-orthogonal manifold.
pub fn semi_orthogonal_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Tensor> {
    let mut m = gaussian(rows, cols, 1.0 / (cols as f64).sqrt(), rng);
    for _ in 0..30 {
        m = semi_orthogonal_step(&m, OrthoScale::Floating)?;
    }
    Ok(m)
}

/// `y = x·Wᵀ + b` with `W: [out × in]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.add(
            format!("{name}.weight"),
            gaussian(out_dim, in_dim, (2.0 / in_dim as f64).sqrt(), rng),
            Constraint::None,
        )?;
        let bias = if bias {
            Some(store.add(format!("{name}.bias"), Tensor::zeros(&[out_dim]), Constraint::None)?)
        } else {
            None
        };
        Ok(Self {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Value) -> Result<Value> {
        let w = tape.param(store, self.weight);
        let y = tape.matmul_t(x, w)?;
        match self.bias {
            Some(b) => {
                let b = tape.param(store, b);
                tape.add_bias(y, b)
            }
            None => Ok(y),
        }
    }
}
