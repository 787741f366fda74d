#![allow(dead_code)]

pub mod data_suite;
pub mod grad_suite;
pub mod lfmmi_suite;
pub mod scoring_suite;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senan::numerics::{ParamStore, Tape, Tensor, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Fixed projection used to reduce any output to a scalar.
fn projection(shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|i| ((i * 7919 % 97) as f64 / 48.5) - 1.0).collect()).unwrap()
}

fn reduce(tape: &mut Tape, out: Value) -> Value {
    let w = tape.constant(projection(tape.shape(out)));
    let p = tape.mul(out, w).unwrap();
    tape.sum(p)
}

fn rel_err(a: &Tensor, b: &Tensor) -> f64 {
    let diff: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |t: &Tensor| t.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(1e-10)
}

const EPS: f64 = 1e-5;

fn with(t: &Tensor, j: usize, x: f64) -> Tensor {
    let mut d = t.data().to_vec();
    d[j] = x;
    Tensor::new(t.shape().to_vec(), d).unwrap()
}

fn from_vec(shape: &[usize], d: Vec<f64>) -> Tensor {
    Tensor::new(shape.to_vec(), d).unwrap()
}

/// Largest relative error between tape gradients and central differences
/// with respect to every input of `f`.
pub fn input_grad_error(f: &dyn Fn(&mut Tape, &[Value]) -> Value, inputs: &[Tensor]) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Value> = inputs.iter().map(|t| tape.variable(t.clone())).collect();
    let out = f(&mut tape, &vars);
    let loss = reduce(&mut tape, out);
    tape.backward(loss).unwrap();
    let eval = |xs: &[Tensor]| {
        let mut t = Tape::new();
        let vs: Vec<Value> = xs.iter().map(|x| t.constant(x.clone())).collect();
        let o = f(&mut t, &vs);
        let l = reduce(&mut t, o);
        t.scalar(l)
    };
    let mut worst = 0.0f64;
    for (i, v) in vars.iter().enumerate() {
        let analytic = tape.grad(*v);
        let mut work = inputs.to_vec();
        let mut numeric = Vec::with_capacity(inputs[i].len());
        for j in 0..inputs[i].len() {
            let x = inputs[i].data()[j];
            work[i] = with(&inputs[i], j, x + EPS);
            let up = eval(&work);
            work[i] = with(&inputs[i], j, x - EPS);
            let down = eval(&work);
            numeric.push((up - down) / (2.0 * EPS));
        }
        worst = worst.max(rel_err(&analytic, &from_vec(inputs[i].shape(), numeric)));
    }
    worst
}

/// Same check with respect to every parameter in `store`. Returns the
/// worst error and the per-parameter analytic gradient norms.
pub fn param_grad_error(store: &ParamStore, f: &dyn Fn(&mut Tape, &ParamStore) -> Value) -> (f64, Vec<(String, f64)>) {
    let mut s = store.clone();
    s.zero_grad();
    let mut tape = Tape::new();
    let out = f(&mut tape, &s);
    let loss = reduce(&mut tape, out);
    tape.backward(loss).unwrap();
    s.accumulate_from(&tape);
    let eval = |st: &ParamStore| {
        let mut t = Tape::new();
        let o = f(&mut t, st);
        let l = reduce(&mut t, o);
        t.scalar(l)
    };
    let ids: Vec<_> = s.iter().map(|(id, _)| id).collect();
    let mut worst = 0.0f64;
    let mut norms = Vec::new();
    for id in ids {
        let analytic = s.get(id).grad.clone();
        let orig = s.get(id).value.clone();
        let mut work = s.clone();
        let mut numeric = Vec::with_capacity(orig.len());
        for j in 0..orig.len() {
            let x = orig.data()[j];
            work.get_mut(id).value = with(&orig, j, x + EPS);
            let up = eval(&work);
            work.get_mut(id).value = with(&orig, j, x - EPS);
            let down = eval(&work);
            numeric.push((up - down) / (2.0 * EPS));
        }
        worst = worst.max(rel_err(&analytic, &from_vec(orig.shape(), numeric)));
        norms.push((s.get(id).name.clone(), analytic.frobenius_norm()));
    }
    (worst, norms)
}

/// Zero biases put ReLU inputs exactly on the kink; move them off it.
pub fn randomize_biases(store: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for p in store.iter_mut().filter(|p| p.name.ends_with(".bias")) {
        p.value = random(p.value.shape(), rng).map(|v| 0.1 * v + 0.05);
    }
}
