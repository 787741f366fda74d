use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::corpus::PhoneInventory;
use crate::error::{Error, Result};
use crate::lfmmi::PhoneLm;

const HALF: f64 = -std::f64::consts::LN_2;

/// One emitting transition: consumes a frame labeled `label`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub src: usize,
    pub dst: usize,
    pub label: usize,
    pub log_weight: f64,
}

/// Weighted acceptor over state labels; every arc emits.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub num_states: usize,
    pub start: usize,
    pub arcs: Vec<Arc>,
    /// `-inf` for non-final states.
    pub final_logw: Vec<f64>,
}

impl Graph {
    pub fn new(num_states: usize, start: usize) -> Self {
        Self {
            num_states,
            start,
            arcs: Vec::new(),
            final_logw: vec![f64::NEG_INFINITY; num_states],
        }
    }

    pub fn add_arc(&mut self, src: usize, dst: usize, label: usize, log_weight: f64) {
        self.arcs.push(Arc { src, dst, label, log_weight });
    }

    pub fn set_final(&mut self, state: usize, log_weight: f64) {
        self.final_logw[state] = log_weight;
    }

    pub fn is_final(&self, state: usize) -> bool {
        self.final_logw[state] > f64::NEG_INFINITY
    }

    pub fn max_label(&self) -> Option<usize> {
        self.arcs.iter().map(|a| a.label).max()
    }

    /// Checks endpoint ranges and that some final state is reachable.
    pub fn validate(&self) -> Result<()> {
        if self.start >= self.num_states || self.final_logw.len() != self.num_states {
            return Err(Error::Parse(format!(
                "graph with {} states has start {} and {} final weights",
                self.num_states,
                self.start,
                self.final_logw.len()
            )));
        }
        if let Some(a) = self.arcs.iter().find(|a| a.src >= self.num_states || a.dst >= self.num_states) {
            return Err(Error::Parse(format!("arc {}→{} outside {} states", a.src, a.dst, self.num_states)));
        }
        let mut seen = vec![false; self.num_states];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(s) = queue.pop_front() {
            if self.is_final(s) {
                return Ok(());
            }
            for a in self.arcs.iter().filter(|a| a.src == s) {
                if !seen[a.dst] {
                    seen[a.dst] = true;
                    queue.push_back(a.dst);
                }
            }
        }
        Err(Error::NoPath)
    }

    /// `start <id>`, then `src dst label log_weight` per arc, then
    /// `state final_logw` for every state (`-inf` when non-final).
    pub fn to_text(&self) -> String {
        let mut s = format!("start {}\n", self.start);
        for a in &self.arcs {
            let _ = writeln!(s, "{} {} {} {}", a.src, a.dst, a.label, a.log_weight);
        }
        for (i, w) in self.final_logw.iter().enumerate() {
            let _ = writeln!(s, "{i} {w}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let start = lines
            .next()
            .and_then(|l| l.strip_prefix("start "))
            .ok_or_else(|| Error::Parse("graph must begin with `start <id>`".into()))?;
        let start = parse_num::<usize>(start)?;
        let mut arcs = Vec::new();
        let mut finals = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.len() {
                4 => arcs.push(Arc {
                    src: parse_num(f[0])?,
                    dst: parse_num(f[1])?,
                    label: parse_num(f[2])?,
                    log_weight: parse_num(f[3])?,
                }),
                2 => finals.push((parse_num::<usize>(f[0])?, parse_num::<f64>(f[1])?)),
                _ => return Err(Error::Parse(format!("bad graph line {line:?}"))),
            }
        }
        let num_states = finals.len();
        let mut final_logw = vec![f64::NEG_INFINITY; num_states];
        for (i, (state, w)) in finals.into_iter().enumerate() {
            if state != i {
                return Err(Error::Parse(format!("final weight lines out of order at state {state}")));
            }
            final_logw[i] = w;
        }
        let g = Self { num_states, start, arcs, final_logw };
        if g.start >= num_states || g.arcs.iter().any(|a| a.src >= num_states || a.dst >= num_states) {
            return Err(Error::Parse("graph state id out of range".into()));
        }
        Ok(g)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

/// Left-to-right HMM of one phone: states `0..n` emit, state `n` is the
/// final exit. Each emitting state has a self-loop and a forward arc.
pub fn build_hmm(phone: usize, inv: &PhoneInventory) -> Result<Graph> {
    if phone >= inv.num_phones() {
        return Err(Error::UnknownPhone(phone));
    }
    let n = inv.states_per_phone;
    let mut g = Graph::new(n + 1, 0);
    for j in 0..n {
        let pdf = inv.state(phone, j);
        g.add_arc(j, j, pdf, HALF);
        g.add_arc(j, j + 1, pdf, HALF);
    }
    g.set_final(n, 0.0);
    Ok(g)
}

/// Concatenated phone HMMs of one transcript, weighted by the phone LM.
pub fn build_numerator_graph(transcript: &[usize], inv: &PhoneInventory, lm: &PhoneLm) -> Result<Graph> {
    let (&first, &last) = match (transcript.first(), transcript.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyTranscript),
    };
    let n = inv.states_per_phone;
    let mut g = Graph::new(transcript.len() * n + 1, 0);
    for (i, &p) in transcript.iter().enumerate() {
        if p >= inv.num_phones() {
            return Err(Error::UnknownPhone(p));
        }
        let base = i * n;
        for j in 0..n {
            let pdf = inv.state(p, j);
            g.add_arc(base + j, base + j, pdf, HALF);
            let lm_w = match (j + 1 == n, transcript.get(i + 1)) {
                (true, Some(&next)) => lm.log_prob(Some(p), Some(next)),
                _ => 0.0,
            };
            g.add_arc(base + j, base + j + 1, pdf, HALF + lm_w);
        }
    }
    let end = transcript.len() * n;
    g.set_final(end, lm.log_prob(None, Some(first)) + lm.log_prob(Some(last), None));
    Ok(g)
}

/// Every phone HMM once, plus one shared start state and one exit state per
/// phone. Exit and start states carry the bigram-weighted entry arcs.
pub fn build_denominator_graph(lm: &PhoneLm, inv: &PhoneInventory) -> Result<Graph> {
    let (p_count, n) = (inv.num_phones(), inv.states_per_phone);
    if lm.num_phones() != p_count {
        return Err(Error::InvalidConfig(format!(
            "phone LM covers {} phones, inventory has {p_count}",
            lm.num_phones()
        )));
    }
    let emit = |p: usize, j: usize| p * n + j;
    let exit = |p: usize| p_count * n + p;
    let start = p_count * (n + 1);
    let next_of = |p: usize, j: usize| if j + 1 == n { exit(p) } else { emit(p, j + 1) };
    let mut g = Graph::new(start + 1, start);
    for p in 0..p_count {
        for j in 0..n {
            let pdf = inv.state(p, j);
            g.add_arc(emit(p, j), emit(p, j), pdf, HALF);
            g.add_arc(emit(p, j), next_of(p, j), pdf, HALF);
        }
    }
    for (src, hist) in (0..p_count).map(|p| (exit(p), Some(p))).chain([(start, None)]) {
        for q in 0..p_count {
            let w = lm.log_prob(hist, Some(q));
            let pdf = inv.state(q, 0);
            g.add_arc(src, emit(q, 0), pdf, HALF + w);
            g.add_arc(src, next_of(q, 0), pdf, HALF + w);
        }
        if let Some(p) = hist {
            g.set_final(src, lm.log_prob(Some(p), None));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(spp: usize) -> PhoneInventory {
        PhoneInventory::generate(3, spp, 1)
    }

    #[test]
    fn hmm_shapes() {
        let g = build_hmm(1, &inv(1)).unwrap();
        assert_eq!(g.arcs.len(), 2);
        let p: f64 = g.arcs.iter().map(|a| a.log_weight.exp()).sum();
        assert!((p - 1.0).abs() < 1e-15);
        let g2 = build_hmm(2, &inv(2)).unwrap();
        assert_eq!(g2.arcs.len(), 4);
        assert!(g2.arcs.iter().all(|a| a.dst == a.src || a.dst == a.src + 1));
        assert!(matches!(build_hmm(3, &inv(1)), Err(Error::UnknownPhone(3))));
    }

    #[test]
    fn numerator_is_left_to_right() {
        let i = inv(2);
        let lm = PhoneLm::uniform(3);
        let g = build_numerator_graph(&[0, 2], &i, &lm).unwrap();
        assert_eq!(g.num_states, 5);
        assert!(g.arcs.iter().all(|a| a.dst >= a.src));
        let labels: Vec<usize> = g.arcs.iter().filter(|a| a.dst > a.src).map(|a| a.label).collect();
        assert_eq!(labels, [0, 1, 4, 5]);
        assert!(matches!(build_numerator_graph(&[], &i, &lm), Err(Error::EmptyTranscript)));
        g.validate().unwrap();
    }

    #[test]
    fn denominator_counts_and_weights() {
        let i = inv(1);
        let lm = PhoneLm::uniform(3);
        let g = build_denominator_graph(&lm, &i).unwrap();
        assert_eq!(g.num_states, 3 * 2 + 1);
        let w = (0.25f64).ln() + HALF;
        assert!(g.arcs.iter().filter(|a| a.src >= 3).all(|a| (a.log_weight - w).abs() < 1e-15));
        g.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let i = inv(2);
        let lm = PhoneLm::train(&[vec![0, 1, 2], vec![2, 1]], 3);
        let g = build_denominator_graph(&lm, &i).unwrap();
        let back = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), g.to_text());
        assert!(Graph::from_text("0 1 0 0.5\n").is_err());
        assert!(Graph::from_text("start 0\n0 3 0 0.5\n0 0\n").is_err());
    }

    #[test]
    fn unreachable_final_is_rejected() {
        let mut g = Graph::new(3, 0);
        g.add_arc(0, 1, 0, 0.0);
        g.set_final(2, 0.0);
        assert!(matches!(g.validate(), Err(Error::NoPath)));
    }
}
