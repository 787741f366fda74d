//! Phone error rate from edit-distance alignment, overall and per noise
//! subset.

use senan::scoring::{align, score, Hypothesis, Reference};

fn main() -> senan::Result<()> {
    let c = align(&["a", "b", "c"], &["a", "x", "c"]);
    println!("a b c vs a x c: S={} D={} I={} WER {:.2}", c.substitutions, c.deletions, c.insertions, c.wer());

    let pairs = [
        ("test-0000-white", vec![1, 2, 3, 4], vec![1, 2, 3, 4]),
        ("test-0001-hum", vec![5, 6, 7], vec![5, 7]),
        ("test-0002-white", vec![2, 2, 9], vec![2, 2, 9, 9]),
    ];
    let refs: Vec<Reference> =
        pairs.iter().map(|(id, r, _)| Reference { id: id.to_string(), phones: r.clone(), alignment: vec![] }).collect();
    let hyps: Vec<Hypothesis> =
        pairs.iter().map(|(id, _, h)| Hypothesis { id: id.to_string(), phones: h.clone(), states: None }).collect();
    let report = score(&refs, &hyps)?;
    println!("overall WER {:.2} over {} utterances", report.overall.wer(), report.utterances);
    for (subset, counts) in &report.subsets {
        println!("  {subset:<6} WER {:.2}", counts.wer());
    }
    Ok(())
}
