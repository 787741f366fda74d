//! Central finite differences against tape gradients for every
//! differentiable operation, each on at least three random shapes.

use super::{input_grad_error, param_grad_error, random, randomize_biases, rng};

use senan::acoustic_model::{AcousticModel, AmArch, AmConfig, InputFrameSpec};
use senan::aggregation::{Aggregator, AggregatorKind};
use senan::config::LossWeights;
use senan::corpus::PhoneInventory;
use senan::lfmmi::{build_denominator_graph, build_numerator_graph, lfmmi_loss, PhoneLm};
use senan::numerics::{ParamStore, Tape, Tensor, Value};
use senan::senan::{mse_loss, SenanConfig, SenanModel};
use senan::training::{ce_loss, joint_loss};

const TOL: f64 = 1e-5;
const STACK_TOL: f64 = 1e-4;
const SHAPES: [(usize, usize); 3] = [(1, 1), (3, 4), (6, 2)];

fn check(name: &str, err: f64, tol: f64) {
    assert!(err < tol, "{name}: relative error {err:e} exceeds {tol:e}");
}

fn unary(name: &str, f: fn(&mut Tape, Value) -> Value, positive: bool) {
    let mut r = rng(11);
    for (i, &(a, b)) in SHAPES.iter().enumerate() {
        let mut x = random(&[a, b], &mut r);
        if positive {
            x = x.map(|v| v.abs() + 0.5);
        }
        check(&format!("{name} #{i}"), input_grad_error(&|t, v| f(t, v[0]), &[x]), TOL);
    }
}

fn binary(name: &str, f: fn(&mut Tape, Value, Value) -> Value, b_shape: fn(usize, usize) -> (usize, usize)) {
    let mut r = rng(12);
    for (i, &(m, n)) in SHAPES.iter().enumerate() {
        let (p, q) = b_shape(m, n);
        let a = random(&[m, n], &mut r);
        let b = random(&[p, q], &mut r);
        check(&format!("{name} #{i}"), input_grad_error(&|t, v| f(t, v[0], v[1]), &[a, b]), TOL);
    }
}

pub fn elementwise_ops() {
    binary("add", |t, a, b| t.add(a, b).unwrap(), |m, n| (m, n));
    binary("sub", |t, a, b| t.sub(a, b).unwrap(), |m, n| (m, n));
    binary("mul", |t, a, b| t.mul(a, b).unwrap(), |m, n| (m, n));
    unary("relu", |t, a| t.relu(a), false);
    unary("log", |t, a| t.log(a).unwrap(), true);
    unary("exp", |t, a| t.exp(a), false);
    unary("scale", |t, a| t.scale(a, -2.5), false);
    unary("sum", |t, a| t.sum(a), false);
}

pub fn matrix_ops() {
    binary("matmul", |t, a, b| t.matmul(a, b).unwrap(), |_, n| (n, 3));
    binary("matmul_t", |t, a, b| t.matmul_t(a, b).unwrap(), |_, n| (5, n));
    let mut r = rng(13);
    for (i, &(m, n)) in SHAPES.iter().enumerate() {
        let x = random(&[m, n], &mut r);
        let b = random(&[n], &mut r);
        check(&format!("add_bias #{i}"), input_grad_error(&|t, v| t.add_bias(v[0], v[1]).unwrap(), &[x, b]), TOL);
    }
}

pub fn softmax_and_normalization() {
    unary("log_softmax", |t, a| t.log_softmax(a).unwrap(), false);
    let mut r = rng(14);
    for (i, &(m, n)) in [(2, 3), (5, 4), (9, 1)].iter().enumerate() {
        let x = random(&[m, n], &mut r);
        check(&format!("rms_norm #{i}"), input_grad_error(&|t, v| t.rms_norm(v[0], 1e-5), &[x]), TOL);
    }
}

pub fn structural_ops() {
    let mut r = rng(15);
    for (i, &(m, n)) in SHAPES.iter().enumerate() {
        let a = random(&[m, n], &mut r);
        let b = random(&[m, 2], &mut r);
        let c = random(&[1, n], &mut r);
        check(
            &format!("concat cols #{i}"),
            input_grad_error(&|t, v| t.concat(&[v[0], v[1]], 1).unwrap(), &[a.clone(), b]),
            TOL,
        );
        check(
            &format!("concat rows #{i}"),
            input_grad_error(&|t, v| t.concat(&[v[0], v[1]], 0).unwrap(), &[a.clone(), c]),
            TOL,
        );
        let len = m * n;
        let index: Vec<usize> = (0..7).map(|k| (k * 5 + 3) % len).collect();
        check(
            &format!("gather #{i}"),
            input_grad_error(&|t, v| t.gather(v[0], index.clone(), vec![7]).unwrap(), &[a.clone()]),
            TOL,
        );
        check(
            &format!("splice #{i}"),
            input_grad_error(&|t, v| t.splice(v[0], &[-2, 0, 1]).unwrap(), &[a.clone()]),
            TOL,
        );
        let rows: Vec<usize> = (0..m + 2).map(|k| (k * 3) % m).collect();
        check(
            &format!("select_rows #{i}"),
            input_grad_error(&|t, v| t.select_rows(v[0], &rows).unwrap(), &[a]),
            TOL,
        );
    }
}

pub fn windowed_ops() {
    let mut r = rng(16);
    for (i, &(m, n, back, ahead)) in [(1, 2, 1, 1), (6, 3, 2, 1), (9, 2, 4, 3)].iter().enumerate() {
        let x = random(&[m, n], &mut r);
        check(
            &format!("window_stats #{i}"),
            input_grad_error(&|t, v| t.window_stats(v[0], back, ahead), &[x.clone()]),
            TOL,
        );
        let (q, k, vv) = (random(&[m, n], &mut r), random(&[m, n], &mut r), random(&[m, n + 1], &mut r));
        check(
            &format!("window_attention #{i}"),
            input_grad_error(&|t, v| t.window_attention(v[0], v[1], v[2], back, ahead).unwrap(), &[q, k, vv]),
            TOL,
        );
    }
}

pub fn external_scalar() {
    let mut r = rng(17);
    for (i, &(m, n)) in SHAPES.iter().enumerate() {
        let x = random(&[m, n], &mut r);
        let w = random(&[m, n], &mut r);
        // A linear function supplied from outside the tape.
        let f = move |t: &mut Tape, v: &[Value]| {
            let val: f64 = t.value(v[0]).data().iter().zip(w.data()).map(|(a, b)| a * b).sum();
            t.external_scalar(val, vec![v[0]], vec![w.clone()]).unwrap()
        };
        check(&format!("external_scalar #{i}"), input_grad_error(&f, &[x]), TOL);
    }
}

pub fn senan_network_and_mse() {
    for (i, &(d_in, d_out, h0, h1, frames)) in [(3, 2, 4, 6, 2), (5, 3, 4, 7, 4), (4, 4, 3, 5, 7)].iter().enumerate() {
        let mut r = rng(20 + i as u64);
        let mut store = ParamStore::new();
        let cfg = SenanConfig { h_first: h0, h_last: h1, noise_head: true };
        let model = SenanModel::new(&cfg, d_in, d_out, &mut store, &mut r).unwrap();
        randomize_biases(&mut store, &mut r);
        let x = random(&[frames, d_in], &mut r);
        let (te, tn) = (random(&[frames, d_out], &mut r), random(&[frames, d_out], &mut r));
        let f = |t: &mut Tape, s: &ParamStore| {
            let xv = t.constant(x.clone());
            let out = model.forward(t, s, xv).unwrap();
            let (a, b) = (t.constant(te.clone()), t.constant(tn.clone()));
            let le = mse_loss(t, out.y_enh, a).unwrap();
            let ln = mse_loss(t, out.y_nse.unwrap(), b).unwrap();
            t.add(le, ln).unwrap()
        };
        let (err, norms) = param_grad_error(&store, &f);
        check(&format!("senan #{i}"), err, TOL);
        assert!(norms.iter().all(|(_, g)| *g > 0.0), "{norms:?}");
        let g = |t: &mut Tape, v: &[Value]| mse_loss(t, v[0], v[1]).unwrap();
        check(&format!("mse #{i}"), input_grad_error(&g, &[te.clone(), tn.clone()]), TOL);
    }
}

pub fn aggregation_functions() {
    for (i, &(frames, dim)) in [(1, 2), (5, 3), (12, 2)].iter().enumerate() {
        let mut r = rng(30 + i as u64);
        let y = random(&[frames, dim], &mut r);
        for kind in AggregatorKind::ALL {
            let mut store = ParamStore::new();
            let agg = Aggregator::new(kind, dim, "agg", &mut store, &mut r).unwrap();
            let f = |t: &mut Tape, v: &[Value]| {
                let s = store.clone();
                agg.forward(t, &s, v[0]).unwrap()
            };
            check(&format!("{kind} input #{i}"), input_grad_error(&f, &[y.clone()]), TOL);
            if kind == AggregatorKind::Stat {
                let std = agg.clone().with_stat_std(true);
                let f = |t: &mut Tape, v: &[Value]| std.forward(t, &store, v[0]).unwrap();
                check(&format!("stat std input #{i}"), input_grad_error(&f, &[y.clone()]), TOL);
            }
            if kind == AggregatorKind::Sat {
                let g = |t: &mut Tape, s: &ParamStore| {
                    let yv = t.constant(y.clone());
                    agg.forward(t, s, yv).unwrap()
                };
                check(&format!("sat params #{i}"), param_grad_error(&store, &g).0, TOL);
            }
        }
    }
}

fn tiny_am(arch: AmArch, spec: InputFrameSpec, grid: usize, k: usize, seed: u64) -> (AcousticModel, ParamStore) {
    let cfg = AmConfig {
        arch,
        layers: 2,
        hidden: 5,
        bottleneck: 3,
        final_bottleneck: 4,
        conv_filters: vec![2, 3],
        ..AmConfig::default()
    };
    let mut store = ParamStore::new();
    let mut r = rng(seed);
    let am = AcousticModel::new(&cfg, spec, grid, k, &mut store, &mut r).unwrap();
    randomize_biases(&mut store, &mut r);
    (am, store)
}

pub fn acoustic_model_stacks() {
    let cases = [
        (AmArch::Tdnnf, InputFrameSpec { d_nsy: 3, d_enh: 0, d_nse: 0 }, 6),
        (AmArch::Tdnnf, InputFrameSpec { d_nsy: 4, d_enh: 6, d_nse: 4 }, 5),
        (AmArch::CnnTdnnf, InputFrameSpec { d_nsy: 4, d_enh: 3, d_nse: 2 }, 6),
    ];
    for (i, (arch, spec, frames)) in cases.into_iter().enumerate() {
        let (am, store) = tiny_am(arch, spec, 3, 4, 40 + i as u64);
        let x = random(&[frames, spec.d_in()], &mut rng(50 + i as u64));
        let f = |t: &mut Tape, s: &ParamStore| {
            let xv = t.constant(x.clone());
            am.forward(t, s, xv).unwrap()
        };
        let (err, norms) = param_grad_error(&store, &f);
        check(&format!("am params #{i}"), err, STACK_TOL);
        assert!(norms.iter().all(|(_, g)| *g > 0.0), "{norms:?}");
        let g = |t: &mut Tape, v: &[Value]| am.forward(t, &store, v[0]).unwrap();
        check(&format!("am input #{i}"), input_grad_error(&g, &[x.clone()]), STACK_TOL);
    }
}

pub fn sequence_objective() {
    for (i, &(phones, spp, frames)) in [(2, 1, 3), (3, 2, 6), (2, 3, 8)].iter().enumerate() {
        let inv = PhoneInventory::generate(phones, spp, i as u64);
        let lm = PhoneLm::train(&[vec![0, 1], vec![1, 0, 1]], phones);
        let num = build_numerator_graph(&[1, 0], &inv, &lm).unwrap();
        let den = build_denominator_graph(&lm, &inv).unwrap();
        let x = random(&[frames, inv.num_states()], &mut rng(60 + i as u64));
        let f = |t: &mut Tape, v: &[Value]| lfmmi_loss(t, v[0], &num, &den).unwrap();
        check(&format!("lfmmi #{i}"), input_grad_error(&f, &[x]), TOL);
    }
}

pub fn training_losses() {
    for (i, &(frames, k)) in SHAPES.iter().enumerate() {
        let k = k + 1;
        let x = random(&[frames, k], &mut rng(70 + i as u64));
        let ali: Vec<usize> = (0..frames).map(|t| (t * 3 + 1) % k).collect();
        let f = |t: &mut Tape, v: &[Value]| ce_loss(t, v[0], &ali).unwrap();
        check(&format!("ce #{i}"), input_grad_error(&f, &[x]), TOL);
        let scalars: Vec<Tensor> = (0..4).map(|j| Tensor::scalar(0.3 * j as f64 - 0.4 + i as f64)).collect();
        let w = LossWeights { alpha: 5.0, beta: 0.2 + i as f64 };
        let g = |t: &mut Tape, v: &[Value]| joint_loss(t, v[0], v[1], v[2], v[3], w).unwrap();
        check(&format!("joint #{i}"), input_grad_error(&g, &scalars), TOL);
    }
}
