//! Reverse-mode differentiation on a tiny softmax regression, checked
//! against central finite differences.

use senan::numerics::gradcheck::{numeric_grad, relative_error};
use senan::numerics::{Tape, Tensor, Value};

/// Negative log-likelihood of every class for every row; returns the weight
/// handle, the loss handle and the loss value.
fn nll(tape: &mut Tape, w: Tensor, x: &Tensor) -> senan::Result<(Value, Value, f64)> {
    let w = tape.variable(w);
    let x = tape.constant(x.clone());
    let z = tape.matmul(x, w)?;
    let lp = tape.log_softmax(z)?;
    let s = tape.sum(lp);
    let l = tape.scale(s, -1.0);
    Ok((w, l, tape.scalar(l)))
}

fn main() -> senan::Result<()> {
    let x = Tensor::matrix(3, 2, vec![0.5, -1.0, 1.5, 0.2, -0.3, 0.8])?;
    let w = Tensor::matrix(2, 4, vec![0.1, -0.2, 0.3, 0.0, 0.4, 0.1, -0.5, 0.2])?;

    let mut tape = Tape::new();
    let (wv, l, value) = nll(&mut tape, w.clone(), &x)?;
    tape.backward(l)?;
    let analytic = tape.grad(wv);

    let mut f = |inputs: &[Tensor]| -> senan::Result<f64> { Ok(nll(&mut Tape::new(), inputs[0].clone(), &x)?.2) };
    let numeric = numeric_grad(&mut f, &[w], 0, 1e-6)?;

    println!("loss {value:.6}");
    println!("analytic gradient\n{}", analytic.to_text());
    println!("relative error vs finite differences: {:.2e}", relative_error(&analytic, &numeric, 1e-12));
    Ok(())
}
