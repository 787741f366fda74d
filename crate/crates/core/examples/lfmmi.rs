//! Numerator and denominator graphs for one transcript, forward-backward
//! occupancies, the sequence objective and Viterbi decoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senan::corpus::PhoneInventory;
use senan::lfmmi::{build_denominator_graph, build_numerator_graph, forward_backward, lfmmi_loss, viterbi_decode, PhoneLm};
use senan::numerics::{Tape, Tensor};

fn main() -> senan::Result<()> {
    let inv = PhoneInventory::generate(3, 2, 1);
    let lm = PhoneLm::train(&[vec![0, 1, 2], vec![1, 2], vec![0, 2, 1, 0]], 3);
    let transcript = [0, 2];
    let num = build_numerator_graph(&transcript, &inv, &lm)?;
    let den = build_denominator_graph(&lm, &inv)?;
    println!("numerator: {} states, {} arcs", num.num_states, num.arcs.len());
    println!("denominator: {} states, {} arcs", den.num_states, den.arcs.len());

    // Logits that favour the reference alignment 0 0 1 1 4 4 5 5.
    let k = 6;
    let align = [0, 0, 1, 1, 4, 4, 5, 5];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = align
        .iter()
        .flat_map(|&s| (0..k).map(move |j| if j == s { 1.0 } else { 0.0 }))
        .map(|v| v + rng.random_range(-0.5..0.5))
        .collect();
    let logits = Tensor::matrix(align.len(), k, data)?;

    let (log_z_num, post) = forward_backward(&num, &logits)?;
    let (log_z_den, _) = forward_backward(&den, &logits)?;
    println!("log Z_num {log_z_num:.4}  log Z_den {log_z_den:.4}");
    println!("occupancy of frame 0: {:.3?}", post.gamma.row(0));

    let mut tape = Tape::new();
    let z = tape.variable(logits.clone());
    let f = lfmmi_loss(&mut tape, z, &num, &den)?;
    tape.backward(f)?;
    println!("F = {:.4}; gradient row 0: {:.3?}", tape.scalar(f), tape.grad(z).row(0));

    let best = viterbi_decode(&den, &logits, &inv)?;
    println!("viterbi states {:?} -> phones {:?}", best.labels, best.phones);
    Ok(())
}
