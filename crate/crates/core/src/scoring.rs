//! Phone error rate by Levenshtein alignment and frame state accuracy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::subset_of;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `(S+D+I)/N·100`; 0 for an empty reference with no insertions.
    pub fn wer(&self) -> f64 {
        if self.ref_len == 0 {
            return if self.insertions == 0 { 0.0 } else { 100.0 * self.insertions as f64 };
        }
        100.0 * self.errors() as f64 / self.ref_len as f64
    }

    pub fn add(&mut self, o: &EditCounts) {
        self.substitutions += o.substitutions;
        self.deletions += o.deletions;
        self.insertions += o.insertions;
        self.ref_len += o.ref_len;
    }
}

/// Minimum-edit alignment. Among alignments with the fewest errors the one
/// with the most substitutions is chosen, which fixes S, D and I uniquely.
pub fn align<T: PartialEq>(reference: &[T], hyp: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hyp.len());
    // cost[j] = (errors, -substitutions, deletions) for the current row.
    let mut prev: Vec<(usize, isize, usize)> = (0..=m).map(|j| (j, 0, 0)).collect();
    let mut cur = vec![(0, 0, 0); m + 1];
    for i in 1..=n {
        cur[0] = (i, 0, i);
        for j in 1..=m {
            let (e, s, d) = prev[j - 1];
            let diag = if reference[i - 1] == hyp[j - 1] { (e, s, d) } else { (e + 1, s - 1, d) };
            let (e, s, d) = prev[j];
            let del = (e + 1, s, d + 1);
            let (e, s, d) = cur[j - 1];
            let ins = (e + 1, s, d);
            cur[j] = [diag, del, ins]
                .into_iter()
                .min_by_key(|&(e, s, _)| (e, s))
                .expect("three candidates");
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (errors, neg_s, deletions) = prev[m];
    let substitutions = (-neg_s) as usize;
    EditCounts {
        substitutions,
        deletions,
        insertions: errors - substitutions - deletions,
        ref_len: n,
    }
}

/// Aggregate scores of one decoding run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreReport {
    pub overall: EditCounts,
    /// Keyed by the subset tag of the utterance ids.
    pub subsets: BTreeMap<String, EditCounts>,
    pub frames_correct: usize,
    pub frames_total: usize,
    pub utterances: usize,
}

impl ScoreReport {
    pub fn frame_accuracy(&self) -> f64 {
        if self.frames_total == 0 {
            return 0.0;
        }
        100.0 * self.frames_correct as f64 / self.frames_total as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, name: &str, c: &EditCounts| {
            let _ = writeln!(
                s,
                "{name:<12} WER {:6.2}  N {:6}  S {:5}  D {:5}  I {:5}",
                c.wer(),
                c.ref_len,
                c.substitutions,
                c.deletions,
                c.insertions
            );
        };
        line(&mut s, "overall", &self.overall);
        for (name, c) in &self.subsets {
            line(&mut s, name, c);
        }
        let _ = writeln!(s, "frame accuracy {:.2}% over {} frames", self.frame_accuracy(), self.frames_total);
        let _ = writeln!(s, "utterances {}", self.utterances);
        s
    }
}

/// One reference utterance for scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub id: String,
    pub phones: Vec<usize>,
    pub alignment: Vec<usize>,
}

/// One hypothesis: phones and, when available, per-frame states.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub id: String,
    pub phones: Vec<usize>,
    pub states: Option<Vec<usize>>,
}

/// Every reference must have a hypothesis; extra hypotheses are errors too.
pub fn score(refs: &[Reference], hyps: &[Hypothesis]) -> Result<ScoreReport> {
    let by_id: BTreeMap<&str, &Hypothesis> = hyps.iter().map(|h| (h.id.as_str(), h)).collect();
    if let Some(h) = hyps.iter().find(|h| !refs.iter().any(|r| r.id == h.id)) {
        return Err(Error::MissingUtterance(format!("hypothesis {} has no reference", h.id)));
    }
    let mut report = ScoreReport::default();
    for r in refs {
        let h = by_id
            .get(r.id.as_str())
            .ok_or_else(|| Error::MissingUtterance(format!("no hypothesis for {}", r.id)))?;
        let c = align(&r.phones, &h.phones);
        report.overall.add(&c);
        report.subsets.entry(subset_of(&r.id).to_string()).or_default().add(&c);
        if let Some(states) = &h.states {
            report.frames_total += r.alignment.len();
            report.frames_correct += r.alignment.iter().zip(states).filter(|(a, b)| a == b).count();
        }
        report.utterances += 1;
    }
    Ok(report)
}

/// `id  p1 p2 …` per line.
pub fn format_sequences<'a>(items: impl IntoIterator<Item = (&'a str, &'a [usize])>) -> String {
    let mut s = String::new();
    for (id, seq) in items {
        let body: Vec<String> = seq.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{id}  {}", body.join(" "));
    }
    s
}

pub fn parse_sequences(text: &str) -> Result<Vec<(String, Vec<usize>)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut parts = l.split_whitespace();
            let id = parts.next().expect("nonempty line").to_string();
            let seq = parts
                .map(|p| p.parse().map_err(|_| Error::Parse(format!("bad token {p:?} in line {l:?}"))))
                .collect::<Result<Vec<usize>>>()?;
            Ok((id, seq))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_cases() {
        assert_eq!(align(&[1, 2, 3], &[1, 2, 3]).wer(), 0.0);
        let c = align(&[1, 2, 3], &[1, 9, 3]);
        assert_eq!((c.substitutions, c.deletions, c.insertions), (1, 0, 0));
        assert!((c.wer() - 33.333333333333336).abs() < 1e-9);
        let c = align(&[1, 2, 3], &[1, 3]);
        assert_eq!((c.substitutions, c.deletions, c.insertions), (0, 1, 0));
        let c = align(&[1, 2], &[4, 1, 2, 5]);
        assert_eq!((c.substitutions, c.deletions, c.insertions), (0, 0, 2));
        let c = align::<usize>(&[], &[]);
        assert_eq!(c.wer(), 0.0);
    }

    #[test]
    fn ties_prefer_substitution() {
        let c = align(&[1, 2], &[2, 3]);
        assert_eq!((c.errors(), c.substitutions), (2, 2));
    }

    #[test]
    fn report_by_subset_and_missing() {
        let refs = vec![
            Reference { id: "test-0000-white".into(), phones: vec![1, 2], alignment: vec![1, 1, 2] },
            Reference { id: "test-0001-hum".into(), phones: vec![3], alignment: vec![3, 3] },
        ];
        let hyps = vec![
            Hypothesis { id: "test-0001-hum".into(), phones: vec![3], states: Some(vec![3, 1]) },
            Hypothesis { id: "test-0000-white".into(), phones: vec![1], states: Some(vec![1, 1, 2]) },
        ];
        let r = score(&refs, &hyps).unwrap();
        assert_eq!(r.overall.deletions, 1);
        assert_eq!(r.subsets["hum"].wer(), 0.0);
        assert_eq!(r.subsets["white"].wer(), 50.0);
        assert!((r.frame_accuracy() - 80.0).abs() < 1e-12);
        assert!(matches!(score(&refs, &hyps[..1]), Err(Error::MissingUtterance(_))));
    }

    #[test]
    fn sequence_text_round_trip() {
        let a = [1usize, 2, 3];
        let e: [usize; 0] = [];
        let text = format_sequences([("u1", &a[..]), ("u2", &e[..])]);
        let back = parse_sequences(&text).unwrap();
        assert_eq!(back, vec![("u1".to_string(), vec![1, 2, 3]), ("u2".to_string(), vec![])]);
    }
}
