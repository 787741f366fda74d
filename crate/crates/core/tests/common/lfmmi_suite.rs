//! Forward-backward and Viterbi against explicit path enumeration on small
//! random graphs, plus the numerator == denominator cancellation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use senan::corpus::PhoneInventory;
use senan::lfmmi::{
    build_denominator_graph, build_numerator_graph, forward_backward, lfmmi_loss, viterbi_decode, Graph, PhoneLm,
};
use senan::numerics::{Tape, Tensor};
use senan::Error;

pub struct Enumerated {
    pub log_z: f64,
    pub best: f64,
    pub gamma: Vec<f64>,
    pub paths: usize,
}

/// Every complete path of exactly `t` arcs, scored in plain probability
/// space relative to the best path.
pub fn enumerate(g: &Graph, logp: &Tensor) -> Option<Enumerated> {
    let (t_len, k) = (logp.rows(), logp.cols());
    let mut complete: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut stack: Vec<(usize, f64, Vec<usize>)> = vec![(g.start, 0.0, Vec::new())];
    while let Some((state, score, labels)) = stack.pop() {
        if labels.len() == t_len {
            if g.final_logw[state] > f64::NEG_INFINITY {
                complete.push((score + g.final_logw[state], labels));
            }
            continue;
        }
        let t = labels.len();
        for a in g.arcs.iter().filter(|a| a.src == state) {
            let mut l = labels.clone();
            l.push(a.label);
            stack.push((a.dst, score + a.log_weight + logp.get(t, a.label), l));
        }
    }
    if complete.is_empty() {
        return None;
    }
    let best = complete.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = complete.iter().map(|c| (c.0 - best).exp()).sum();
    let mut gamma = vec![0.0; t_len * k];
    for (s, labels) in &complete {
        let p = (s - best).exp() / total;
        for (t, &l) in labels.iter().enumerate() {
            gamma[t * k + l] += p;
        }
    }
    Some(Enumerated {
        log_z: best + total.ln(),
        best,
        gamma,
        paths: complete.len(),
    })
}

fn random_graph(r: &mut ChaCha8Rng, k: usize) -> Graph {
    let n = r.random_range(1..=5);
    let mut g = Graph::new(n, r.random_range(0..n));
    for src in 0..n {
        for dst in 0..n {
            if r.random_bool(0.45) {
                g.add_arc(src, dst, r.random_range(0..k), r.random_range(-2.0..0.5));
            }
        }
    }
    for s in 0..n {
        if r.random_bool(0.5) {
            g.set_final(s, r.random_range(-1.0..0.0));
        }
    }
    g
}

fn path_score(g: &Graph, logp: &Tensor, labels: &[usize]) -> f64 {
    // Best-scoring state sequence realizing exactly these labels.
    let mut cur = vec![f64::NEG_INFINITY; g.num_states];
    cur[g.start] = 0.0;
    for (t, &l) in labels.iter().enumerate() {
        let mut next = vec![f64::NEG_INFINITY; g.num_states];
        for a in g.arcs.iter().filter(|a| a.label == l) {
            let v = cur[a.src] + a.log_weight + logp.get(t, l);
            if v > next[a.dst] {
                next[a.dst] = v;
            }
        }
        cur = next;
    }
    cur.iter().zip(&g.final_logw).map(|(a, f)| a + f).fold(f64::NEG_INFINITY, f64::max)
}

pub fn forward_backward_and_viterbi_match_enumeration() {
    let mut r = super::rng(2024);
    let (mut checked, mut empty) = (0, 0);
    while checked < 150 {
        let k = r.random_range(1..=3);
        let t = r.random_range(1..=6);
        let g = random_graph(&mut r, k);
        let logp = super::random(&[t, k], &mut r).map(|v| 2.0 * v);
        let inv = PhoneInventory::generate(k, 1, 0);
        match enumerate(&g, &logp) {
            None => {
                assert!(matches!(forward_backward(&g, &logp), Err(Error::NoPath)));
                assert!(matches!(viterbi_decode(&g, &logp, &inv), Err(Error::NoPath)));
                empty += 1;
            }
            Some(e) => {
                let (log_z, post) = forward_backward(&g, &logp).unwrap();
                assert!((log_z - e.log_z).abs() < 1e-9, "logZ {log_z} vs {} over {} paths", e.log_z, e.paths);
                for (a, b) in post.gamma.data().iter().zip(&e.gamma) {
                    assert!((a - b).abs() < 1e-9, "gamma {a} vs {b}");
                }
                for row in 0..t {
                    let s: f64 = post.gamma.row(row).iter().sum();
                    assert!((s - 1.0).abs() < 1e-9, "gamma row {row} sums to {s}");
                }
                let v = viterbi_decode(&g, &logp, &inv).unwrap();
                assert!((v.best_logp - e.best).abs() < 1e-9, "viterbi {} vs {}", v.best_logp, e.best);
                assert_eq!(v.labels.len(), t);
                assert!((path_score(&g, &logp, &v.labels) - e.best).abs() < 1e-9);
                checked += 1;
            }
        }
    }
    assert!(empty > 0, "no instance exercised the no-path case");
}

pub fn built_graphs_match_enumeration() {
    let mut r = super::rng(7);
    for case in 0..30 {
        let (phones, spp) = (r.random_range(1..=3), r.random_range(1..=2));
        let inv = PhoneInventory::generate(phones, spp, case);
        let transcripts: Vec<Vec<usize>> = (0..4)
            .map(|_| (0..r.random_range(1..=3)).map(|_| r.random_range(0..phones)).collect())
            .collect();
        let lm = PhoneLm::train(&transcripts, phones);
        let t = r.random_range(spp..=5);
        let logp = super::random(&[t, inv.num_states()], &mut r);
        let den = build_denominator_graph(&lm, &inv).unwrap();
        let e = enumerate(&den, &logp).expect("denominator admits a path");
        let (log_z, _) = forward_backward(&den, &logp).unwrap();
        assert!((log_z - e.log_z).abs() < 1e-9);
        let tr = &transcripts[0];
        let num = build_numerator_graph(tr, &inv, &lm).unwrap();
        match enumerate(&num, &logp) {
            Some(e) => assert!((forward_backward(&num, &logp).unwrap().0 - e.log_z).abs() < 1e-9),
            None => assert!(matches!(forward_backward(&num, &logp), Err(Error::NoPath))),
        }
    }
}

pub fn zero_scores_give_lm_normalization() {
    // With all acoustic scores 0 the denominator mass over T frames is the
    // LM probability of every transcript whose HMM paths fit in T frames.
    let inv = PhoneInventory::generate(2, 1, 0);
    let lm = PhoneLm::uniform(2);
    let den = build_denominator_graph(&lm, &inv).unwrap();
    for t in 1..=5 {
        let logp = Tensor::zeros(&[t, 2]);
        let e = enumerate(&den, &logp).unwrap();
        let (log_z, _) = forward_backward(&den, &logp).unwrap();
        assert!((log_z - e.log_z).abs() < 1e-12);
        assert!(log_z < 0.0);
    }
}

pub fn identical_graphs_cancel() {
    let mut r = super::rng(99);
    let mut done = 0;
    while done < 40 {
        let k = r.random_range(1..=3);
        let g = random_graph(&mut r, k);
        let t = r.random_range(1..=6);
        let x = super::random(&[t, k], &mut r).map(|v| 3.0 * v);
        let mut tape = Tape::new();
        let z = tape.variable(x);
        let f = match lfmmi_loss(&mut tape, z, &g, &g) {
            Ok(f) => f,
            Err(Error::NoPath) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(tape.scalar(f).abs() <= 1e-12);
        tape.backward(f).unwrap();
        assert!(tape.grad(z).data().iter().all(|g| g.abs() <= 1e-12));
        done += 1;
    }
    let inv = PhoneInventory::generate(4, 3, 1);
    let den = build_denominator_graph(&PhoneLm::uniform(4), &inv).unwrap();
    let mut tape = Tape::new();
    let z = tape.variable(super::random(&[9, 12], &mut r));
    let f = lfmmi_loss(&mut tape, z, &den, &den).unwrap();
    assert!(tape.scalar(f).abs() <= 1e-12);
    tape.backward(f).unwrap();
    assert!(tape.grad(z).data().iter().all(|g| g.abs() <= 1e-12));
}
