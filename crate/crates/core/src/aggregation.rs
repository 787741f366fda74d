//! Aggregation functions turning frame-wise SENAN outputs into context-bearing
//! features: current frame (CUR), ±1 splice (CONT), 150-frame mean and
//! variance (STAT), and local single-head self-attention (SAT).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::gaussian;
use crate::numerics::{Constraint, ParamId, ParamStore, Tape, Tensor, Value};

pub const CONT_OFFSETS: [isize; 3] = [-1, 0, 1];
/// Centered 150-frame window: 75 back, 74 ahead.
pub const STAT_BACK: usize = 75;
pub const STAT_AHEAD: usize = 74;
/// Added to the window variance before the square root of the std variant.
pub const STAT_STD_EPS: f64 = 1e-10;
pub const SAT_BACK: usize = 5;
pub const SAT_AHEAD: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggregatorKind {
    Cur,
    Cont,
    Stat,
    Sat,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 4] = [
        AggregatorKind::Cur,
        AggregatorKind::Cont,
        AggregatorKind::Stat,
        AggregatorKind::Sat,
    ];

    pub fn output_dim(self, d: usize) -> usize {
        match self {
            AggregatorKind::Cur | AggregatorKind::Sat => d,
            AggregatorKind::Cont => 3 * d,
            AggregatorKind::Stat => 2 * d,
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregatorKind::Cur => "cur",
            AggregatorKind::Cont => "cont",
            AggregatorKind::Stat => "stat",
            AggregatorKind::Sat => "sat",
        })
    }
}

impl FromStr for AggregatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cur" => Ok(AggregatorKind::Cur),
            "cont" => Ok(AggregatorKind::Cont),
            "stat" => Ok(AggregatorKind::Stat),
            "sat" => Ok(AggregatorKind::Sat),
            _ => Err(Error::InvalidConfig(format!(
                "aggregator must be cur|cont|stat|sat, got {s:?}"
            ))),
        }
    }
}

pub fn agg_cur(y: Value) -> Value {
    y
}

pub fn agg_cont(tape: &mut Tape, y: Value) -> Result<Value> {
    tape.splice(y, &CONT_OFFSETS)
}

pub fn agg_stat(tape: &mut Tape, y: Value) -> Value {
    tape.window_stats(y, STAT_BACK, STAT_AHEAD)
}

/// STAT with the standard deviation `sqrt(var + STAT_STD_EPS)` in place of
/// the variance, so both halves share the units of `y`.
pub fn agg_stat_std(tape: &mut Tape, y: Value) -> Result<Value> {
    let s = agg_stat(tape, y);
    let (rows, d) = (tape.value(y).rows(), tape.value(y).cols());
    let half = |off: usize| (0..rows).flat_map(move |r| r * 2 * d + off..r * 2 * d + off + d).collect();
    let mean = tape.gather(s, half(0), vec![rows, d])?;
    let var = tape.gather(s, half(d), vec![rows, d])?;
    let eps = tape.constant(Tensor::full(&[rows, d], STAT_STD_EPS));
    let var = tape.add(var, eps)?;
    let log_var = tape.log(var)?;
    let half_log = tape.scale(log_var, 0.5);
    let std = tape.exp(half_log);
    tape.concat(&[mean, std], 1)
}

/// Projection matrices of one SAT stream, each `[D × D]`.
#[derive(Clone, Debug)]
pub struct SatParams {
    pub query: ParamId,
    pub key: ParamId,
    pub value: ParamId,
}

impl SatParams {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, prefix: &str, dim: usize, rng: &mut R) -> Result<Self> {
        let std = 1.0 / (dim as f64).sqrt();
        Ok(Self {
            query: store.add(format!("{prefix}.query"), gaussian(dim, dim, std, rng), Constraint::None)?,
            key: store.add(format!("{prefix}.key"), gaussian(dim, dim, std, rng), Constraint::None)?,
            value: store.add(format!("{prefix}.value"), Tensor::identity(dim), Constraint::None)?,
        })
    }
}

pub fn agg_sat(tape: &mut Tape, store: &ParamStore, y: Value, params: &SatParams) -> Result<Value> {
    let (wq, wk, wv) = (
        tape.param(store, params.query),
        tape.param(store, params.key),
        tape.param(store, params.value),
    );
    let q = tape.matmul_t(y, wq)?;
    let k = tape.matmul_t(y, wk)?;
    let v = tape.matmul_t(y, wv)?;
    tape.window_attention(q, k, v, SAT_BACK, SAT_AHEAD)
}

/// One configured aggregation function `A(·)`.
#[derive(Clone, Debug)]
pub struct Aggregator {
    pub kind: AggregatorKind,
    pub dim: usize,
    pub sat: Option<SatParams>,
    /// STAT emits the standard deviation instead of the variance.
    pub stat_std: bool,
}

impl Aggregator {
    /// SAT parameters are registered under `prefix`; other kinds have none.
    pub fn new<R: Rng + ?Sized>(
        kind: AggregatorKind,
        dim: usize,
        prefix: &str,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        let sat = match kind {
            AggregatorKind::Sat => Some(SatParams::new(store, prefix, dim, rng)?),
            _ => None,
        };
        Ok(Self { kind, dim, sat, stat_std: false })
    }

    pub fn with_stat_std(mut self, on: bool) -> Self {
        self.stat_std = on;
        self
    }

    pub fn output_dim(&self) -> usize {
        self.kind.output_dim(self.dim)
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, y: Value) -> Result<Value> {
        match self.kind {
            AggregatorKind::Cur => Ok(agg_cur(y)),
            AggregatorKind::Cont => agg_cont(tape, y),
            AggregatorKind::Stat if self.stat_std => agg_stat_std(tape, y),
            AggregatorKind::Stat => Ok(agg_stat(tape, y)),
            AggregatorKind::Sat => {
                let p = self.sat.as_ref().expect("SAT aggregator carries its projections");
                agg_sat(tape, store, y, p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(t: usize, d: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        gaussian(t, d, 1.0, &mut rng)
    }

    fn run(kind: AggregatorKind, y: &Tensor) -> Tensor {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let agg = Aggregator::new(kind, y.cols(), "agg", &mut store, &mut rng).unwrap();
        let mut tape = Tape::new();
        let v = tape.constant(y.clone());
        let out = agg.forward(&mut tape, &store, v).unwrap();
        tape.value(out).clone()
    }

    #[test]
    fn output_dims_and_frame_counts() {
        let y = random(7, 3, 1);
        for kind in AggregatorKind::ALL {
            let out = run(kind, &y);
            assert_eq!(out.shape(), &[7, kind.output_dim(3)]);
        }
        assert_eq!(run(AggregatorKind::Cur, &y), y);
    }

    #[test]
    fn cont_boundaries_and_interior() {
        let y = random(5, 2, 2);
        let out = run(AggregatorKind::Cont, &y);
        let row = |t: usize| y.row(t).to_vec();
        assert_eq!(out.row(0), [row(0), row(0), row(1)].concat().as_slice());
        assert_eq!(out.row(2), [row(1), row(2), row(3)].concat().as_slice());
        assert_eq!(out.row(4), [row(3), row(4), row(4)].concat().as_slice());
        let single = random(1, 2, 3);
        let o = run(AggregatorKind::Cont, &single);
        assert_eq!(o.row(0), [single.row(0), single.row(0), single.row(0)].concat().as_slice());
    }

    #[test]
    fn stat_on_constant_sequence() {
        let y = Tensor::full(&[20, 3], 2.5);
        let out = run(AggregatorKind::Stat, &y);
        for t in 0..20 {
            assert_eq!(out.row(t), &[2.5, 2.5, 2.5, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn sat_with_zero_query_key_is_windowed_mean() {
        let y = random(9, 2, 4);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let agg = Aggregator::new(AggregatorKind::Sat, 2, "agg", &mut store, &mut rng).unwrap();
        let p = agg.sat.clone().unwrap();
        store.get_mut(p.query).value = Tensor::zeros(&[2, 2]);
        store.get_mut(p.key).value = Tensor::zeros(&[2, 2]);
        let mut tape = Tape::new();
        let v = tape.constant(y.clone());
        let out = agg.forward(&mut tape, &store, v).unwrap();
        for t in 0..9usize {
            let (lo, hi) = (t.saturating_sub(5), (t + 2).min(8));
            for c in 0..2 {
                let mean: f64 = (lo..=hi).map(|j| y.get(j, c)).sum::<f64>() / (hi - lo + 1) as f64;
                assert!((tape.value(out).get(t, c) - mean).abs() < 1e-12);
            }
        }
        let constant = Tensor::full(&[6, 2], -1.25);
        let mut tape = Tape::new();
        let v = tape.constant(constant.clone());
        let out = agg.forward(&mut tape, &store, v).unwrap();
        assert!(tape.value(out).max_abs_diff(&constant) < 1e-12);
    }

    #[test]
    fn stat_std_is_root_of_variance() {
        let y = random(40, 3, 8);
        let mut tape = Tape::new();
        let v = tape.constant(y);
        let var = agg_stat(&mut tape, v);
        let std = agg_stat_std(&mut tape, v).unwrap();
        let (a, b) = (tape.value(var), tape.value(std));
        for r in 0..40 {
            for c in 0..6 {
                let expect = if c < 3 { a.get(r, c) } else { (a.get(r, c) + STAT_STD_EPS).sqrt() };
                assert!((b.get(r, c) - expect).abs() < 1e-12);
            }
        }
        let mut tape = Tape::new();
        let v = tape.constant(Tensor::from_rows(&[vec![1.0], vec![3.0]]).unwrap());
        let s = agg_stat_std(&mut tape, v).unwrap();
        assert!((tape.value(s).get(0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sat_weights_are_normalized() {
        let y = random(12, 3, 5);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = SatParams::new(&mut store, "agg", 3, &mut rng).unwrap();
        let mut tape = Tape::new();
        let v = tape.constant(y);
        let out = agg_sat(&mut tape, &store, v, &p).unwrap();
        for (_, w) in tape.attention_weights(out).unwrap() {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parses_config_names() {
        for k in AggregatorKind::ALL {
            assert_eq!(k.to_string().parse::<AggregatorKind>().unwrap(), k);
        }
        assert!("attn".parse::<AggregatorKind>().is_err());
    }
}
