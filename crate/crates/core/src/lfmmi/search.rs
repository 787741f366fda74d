use crate::corpus::PhoneInventory;
use crate::error::{Error, Result};
use crate::lfmmi::Graph;
use crate::numerics::{Tape, Tensor, Value};

/// Per-frame label occupancies, `T × K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Posteriors {
    pub gamma: Tensor,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn check_inputs(g: &Graph, logp: &Tensor) -> Result<(usize, usize)> {
    if logp.shape().len() != 2 {
        return Err(Error::ShapeMismatch(format!("scores must be T×K, got {:?}", logp.shape())));
    }
    let (t, k) = (logp.rows(), logp.cols());
    if t == 0 {
        return Err(Error::NoPath);
    }
    if let Some(label) = g.max_label().filter(|&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, num_states: k });
    }
    Ok((t, k))
}

/// Log-semiring forward-backward over the frame-synchronous expansion.
pub fn forward_backward(g: &Graph, logp: &Tensor) -> Result<(f64, Posteriors)> {
    let (t_len, k) = check_inputs(g, logp)?;
    let s = g.num_states;
    let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    alpha[g.start] = 0.0;
    for t in 0..t_len {
        let (cur, next) = alpha.split_at_mut((t + 1) * s);
        let cur = &cur[t * s..];
        for a in &g.arcs {
            let from = cur[a.src];
            if from > f64::NEG_INFINITY {
                let v = from + a.log_weight + logp.get(t, a.label);
                next[a.dst] = log_add(next[a.dst], v);
            }
        }
    }
    let log_z = (0..s).fold(f64::NEG_INFINITY, |acc, st| log_add(acc, alpha[t_len * s + st] + g.final_logw[st]));
    if !log_z.is_finite() {
        return Err(Error::NoPath);
    }
    let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    beta[t_len * s..].copy_from_slice(&g.final_logw);
    let mut gamma = vec![0.0; t_len * k];
    for t in (0..t_len).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * s);
        let cur = &mut cur[t * s..];
        for a in &g.arcs {
            let to = next[a.dst];
            if to == f64::NEG_INFINITY {
                continue;
            }
            let v = a.log_weight + logp.get(t, a.label) + to;
            cur[a.src] = log_add(cur[a.src], v);
            let from = alpha[t * s + a.src];
            if from > f64::NEG_INFINITY {
                gamma[t * k + a.label] += (from + v - log_z).exp();
            }
        }
    }
    Ok((
        log_z,
        Posteriors {
            gamma: Tensor::from_parts(vec![t_len, k], gamma),
        },
    ))
}

/// Best path of a Viterbi search.
#[derive(Clone, Debug, PartialEq)]
pub struct ViterbiPath {
    pub best_logp: f64,
    pub labels: Vec<usize>,
    pub phones: Vec<usize>,
}

/// Max-semiring search; phones collapse runs of labels from the same phone.
pub fn viterbi_decode(g: &Graph, logp: &Tensor, inv: &PhoneInventory) -> Result<ViterbiPath> {
    let (t_len, _) = check_inputs(g, logp)?;
    let s = g.num_states;
    let mut score = vec![f64::NEG_INFINITY; (t_len + 1) * s];
    let mut back = vec![usize::MAX; t_len * s];
    score[g.start] = 0.0;
    for t in 0..t_len {
        for (i, a) in g.arcs.iter().enumerate() {
            let from = score[t * s + a.src];
            if from == f64::NEG_INFINITY {
                continue;
            }
            let v = from + a.log_weight + logp.get(t, a.label);
            let slot = (t + 1) * s + a.dst;
            if v > score[slot] {
                score[slot] = v;
                back[t * s + a.dst] = i;
            }
        }
    }
    let (best_state, best_logp) = (0..s)
        .map(|st| (st, score[t_len * s + st] + g.final_logw[st]))
        .fold((usize::MAX, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    if !best_logp.is_finite() {
        return Err(Error::NoPath);
    }
    let mut labels = vec![0; t_len];
    let mut state = best_state;
    for t in (0..t_len).rev() {
        let arc = &g.arcs[back[t * s + state]];
        labels[t] = arc.label;
        state = arc.src;
    }
    let mut phones: Vec<usize> = Vec::new();
    for &l in &labels {
        let p = inv.phone_of(l);
        if phones.last() != Some(&p) {
            phones.push(p);
        }
    }
    Ok(ViterbiPath { best_logp, labels, phones })
}

/// Sequence objective `F = log Z_num − log Z_den` with the logits used as
/// acoustic log-likelihoods. Gradient into the logits is `γ_num − γ_den`.
pub fn lfmmi_loss(tape: &mut Tape, logits: Value, num: &Graph, den: &Graph) -> Result<Value> {
    let scores = tape.value(logits);
    let (z_num, g_num) = forward_backward(num, scores)?;
    let (z_den, g_den) = forward_backward(den, scores)?;
    let grad = g_num.gamma.zip_map(&g_den.gamma, |a, b| a - b);
    tape.external_scalar(z_num - z_den, vec![logits], vec![grad])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfmmi::{build_denominator_graph, build_numerator_graph, PhoneLm};

    fn single_path() -> Graph {
        let mut g = Graph::new(4, 0);
        g.add_arc(0, 1, 1, -0.5);
        g.add_arc(1, 2, 0, -0.25);
        g.add_arc(2, 3, 1, 0.0);
        g.set_final(3, -1.0);
        g
    }

    fn scores() -> Tensor {
        Tensor::from_rows(&[vec![0.1, -0.3], vec![1.2, 0.4], vec![-2.0, 0.7]]).unwrap()
    }

    #[test]
    fn single_path_graph() {
        let (z, post) = forward_backward(&single_path(), &scores()).unwrap();
        let expect = -0.5 - 0.3 - 0.25 + 1.2 + 0.7 - 1.0;
        assert!((z - expect).abs() < 1e-12);
        assert_eq!(post.gamma.data(), &[0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let inv = PhoneInventory::generate(2, 1, 0);
        let v = viterbi_decode(&single_path(), &scores(), &inv).unwrap();
        assert_eq!(v.labels, [1, 0, 1]);
        assert_eq!(v.phones, [1, 0, 1]);
        assert!((v.best_logp - z).abs() < 1e-12);
    }

    #[test]
    fn empty_and_unreachable() {
        let inv = PhoneInventory::generate(2, 1, 0);
        let empty = Tensor::from_parts(vec![0, 2], vec![]);
        assert!(matches!(forward_backward(&single_path(), &empty), Err(Error::NoPath)));
        assert!(matches!(viterbi_decode(&single_path(), &empty, &inv), Err(Error::NoPath)));
        let two = Tensor::zeros(&[2, 2]);
        assert!(matches!(forward_backward(&single_path(), &two), Err(Error::NoPath)));
        let narrow = Tensor::zeros(&[3, 1]);
        assert!(matches!(
            forward_backward(&single_path(), &narrow),
            Err(Error::LabelOutOfRange { label: 1, num_states: 1 })
        ));
    }

    #[test]
    fn cancellation_gives_zero() {
        let inv = PhoneInventory::generate(3, 1, 0);
        let den = build_denominator_graph(&PhoneLm::uniform(3), &inv).unwrap();
        let mut tape = Tape::new();
        let x = tape.variable(Tensor::from_rows(&[vec![0.3, -1.0, 2.0], vec![0.0, 0.5, 0.1]]).unwrap());
        let f = lfmmi_loss(&mut tape, x, &den, &den).unwrap();
        assert_eq!(tape.scalar(f), 0.0);
        tape.backward(f).unwrap();
        assert!(tape.grad(x).data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn frame_shift_leaves_objective_unchanged() {
        let inv = PhoneInventory::generate(3, 2, 0);
        let lm = PhoneLm::train(&[vec![0, 2, 1]], 3);
        let num = build_numerator_graph(&[2, 0], &inv, &lm).unwrap();
        let den = build_denominator_graph(&lm, &inv).unwrap();
        let base = Tensor::from_rows(&(0..6).map(|t| (0..6).map(|k| ((t * 7 + k * 3) % 5) as f64 * 0.3).collect()).collect::<Vec<_>>()).unwrap();
        let mut shifted = base.clone();
        for k in 0..6 {
            shifted.data_mut()[2 * 6 + k] += 4.0;
        }
        let f = |x: &Tensor| {
            let (a, ga) = forward_backward(&num, x).unwrap();
            let (b, gb) = forward_backward(&den, x).unwrap();
            (a - b, ga, gb)
        };
        let (fa, ga, gb) = f(&base);
        let (fb, ha, hb) = f(&shifted);
        assert!((fa - fb).abs() < 1e-9);
        assert!(ga.gamma.max_abs_diff(&ha.gamma) < 1e-12 && gb.gamma.max_abs_diff(&hb.gamma) < 1e-12);
        for t in 0..6 {
            assert!((ga.gamma.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
