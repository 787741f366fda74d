//! Edit counts against a separately written full-table dynamic program.

use rand::Rng;
use senan::scoring::{align, score, Hypothesis, Reference};

/// Full `(n+1)×(m+1)` tables: minimum errors first, then the largest
/// substitution count among minimum-error alignments. Deletions and
/// insertions follow from `d − i = n − m`.
pub fn oracle(r: &[usize], h: &[usize]) -> (usize, usize, usize) {
    let (n, m) = (r.len(), h.len());
    let mut e = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in e.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        e[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = e[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]);
            e[i][j] = sub.min(e[i - 1][j] + 1).min(e[i][j - 1] + 1);
        }
    }
    let mut s = vec![vec![i64::MIN; m + 1]; n + 1];
    s[0][0] = 0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = i64::MIN;
            if i > 0 && j > 0 {
                let mismatch = usize::from(r[i - 1] != h[j - 1]);
                if e[i - 1][j - 1] + mismatch == e[i][j] && s[i - 1][j - 1] != i64::MIN {
                    best = best.max(s[i - 1][j - 1] + mismatch as i64);
                }
            }
            if i > 0 && e[i - 1][j] + 1 == e[i][j] && s[i - 1][j] != i64::MIN {
                best = best.max(s[i - 1][j]);
            }
            if j > 0 && e[i][j - 1] + 1 == e[i][j] && s[i][j - 1] != i64::MIN {
                best = best.max(s[i][j - 1]);
            }
            s[i][j] = best;
        }
    }
    let (errors, subs) = (e[n][m] as i64, s[n][m]);
    let d = (errors - subs + n as i64 - m as i64) / 2;
    let ins = errors - subs - d;
    (subs as usize, d as usize, ins as usize)
}

pub fn thousand_random_pairs() {
    let mut r = super::rng(10);
    let (mut refs, mut hyps) = (Vec::new(), Vec::new());
    let mut total = (0, 0, 0);
    for i in 0..1000 {
        let vocab = r.random_range(1..=6);
        let rf: Vec<usize> = (0..r.random_range(0..=12)).map(|_| r.random_range(0..vocab)).collect();
        let hy: Vec<usize> = (0..r.random_range(0..=12)).map(|_| r.random_range(0..vocab)).collect();
        let c = align(&rf, &hy);
        assert_eq!((c.substitutions, c.deletions, c.insertions), oracle(&rf, &hy), "{rf:?} vs {hy:?}");
        assert_eq!(c.ref_len, rf.len());
        let o = oracle(&rf, &hy);
        total = (total.0 + o.0, total.1 + o.1, total.2 + o.2);
        let id = format!("test-{i:04}-white");
        refs.push(Reference { id: id.clone(), phones: rf, alignment: vec![] });
        hyps.push(Hypothesis { id, phones: hy, states: None });
    }
    let rep = score(&refs, &hyps).unwrap();
    assert_eq!((rep.overall.substitutions, rep.overall.deletions, rep.overall.insertions), total);
    assert_eq!(rep.utterances, 1000);
}

