//! Acoustic model: an optional 3×3 convolutional front-end over the MFCC
//! grid followed by factorized TDNN layers producing per-frame state logits.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::nn::{gaussian, semi_orthogonal_init, Linear};
use crate::numerics::{tape::clamp_frame, Constraint, ParamId, ParamStore, Tape, Tensor, Value};

pub const DEFAULT_OFFSETS: [isize; 3] = [-1, 0, 1];
pub const NORM_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmArch {
    Tdnnf,
    CnnTdnnf,
}

impl fmt::Display for AmArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmArch::Tdnnf => "tdnnf",
            AmArch::CnnTdnnf => "cnn_tdnnf",
        })
    }
}

impl FromStr for AmArch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tdnnf" => Ok(AmArch::Tdnnf),
            "cnn_tdnnf" => Ok(AmArch::CnnTdnnf),
            _ => Err(Error::InvalidConfig(format!("am.arch must be tdnnf|cnn_tdnnf, got {s:?}"))),
        }
    }
}

/// Widths of the three streams concatenated into the AM input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputFrameSpec {
    pub d_nsy: usize,
    pub d_enh: usize,
    pub d_nse: usize,
}

impl InputFrameSpec {
    pub fn d_in(&self) -> usize {
        self.d_nsy + self.d_enh + self.d_nse
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmConfig {
    pub arch: AmArch,
    pub layers: usize,
    pub hidden: usize,
    pub bottleneck: usize,
    pub final_bottleneck: usize,
    pub bypass_scale: f64,
    pub offsets: Vec<isize>,
    /// Channel counts of the convolutional front-end.
    pub conv_filters: Vec<usize>,
    /// Per-dimension unit-RMS scaling over the frames after each layer.
    pub renorm: bool,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self {
            arch: AmArch::Tdnnf,
            layers: 4,
            hidden: 64,
            bottleneck: 16,
            final_bottleneck: 24,
            bypass_scale: 0.66,
            offsets: DEFAULT_OFFSETS.to_vec(),
            conv_filters: vec![4, 4, 8, 8, 8, 16],
            renorm: true,
        }
    }
}

impl AmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.bottleneck == 0 || self.final_bottleneck == 0 {
            return Err(Error::InvalidConfig("am extents must be positive".into()));
        }
        if self.bottleneck >= self.hidden {
            return Err(Error::InvalidConfig("am.bottleneck must be smaller than am.hidden".into()));
        }
        if !(0.0..=1.0).contains(&self.bypass_scale) {
            return Err(Error::InvalidConfig("am.bypass_scale must lie in [0, 1]".into()));
        }
        if self.offsets.is_empty() {
            return Err(Error::InvalidConfig("am offsets must be nonempty".into()));
        }
        if self.arch == AmArch::CnnTdnnf && (self.conv_filters.is_empty() || self.conv_filters.contains(&0)) {
            return Err(Error::InvalidConfig("conv filter counts must be positive".into()));
        }
        Ok(())
    }
}

/// Per-frame concatenation noisy ⊕ enhanced ⊕ noise-aware.
pub fn build_input(
    x_nsy: &FeatureMatrix,
    x_enh: Option<&FeatureMatrix>,
    x_nse: Option<&FeatureMatrix>,
) -> Result<FeatureMatrix> {
    let t = x_nsy.frames();
    let parts: Vec<&FeatureMatrix> = [Some(x_nsy), x_enh, x_nse].into_iter().flatten().collect();
    if let Some(bad) = parts.iter().find(|p| p.frames() != t) {
        return Err(Error::FrameCountMismatch(format!("{t} vs {}", bad.frames())));
    }
    let d: usize = parts.iter().map(|p| p.dims()).sum();
    let mut data = Vec::with_capacity(t * d);
    for r in 0..t {
        for p in &parts {
            data.extend_from_slice(p.data.row(r));
        }
    }
    FeatureMatrix::new(Tensor::from_parts(vec![t, d], data), FeatureKind::Input)
}

/// Tape form of [`build_input`]; `None` streams are omitted.
pub fn build_input_value(tape: &mut Tape, x_nsy: Value, x_enh: Option<Value>, x_nse: Option<Value>) -> Result<Value> {
    let parts: Vec<Value> = [Some(x_nsy), x_enh, x_nse].into_iter().flatten().collect();
    if parts.len() == 1 {
        return Ok(x_nsy);
    }
    let t = tape.value(x_nsy).rows();
    if let Some(&bad) = parts.iter().find(|&&p| tape.value(p).rows() != t) {
        return Err(Error::FrameCountMismatch(format!("{t} vs {}", tape.value(bad).rows())));
    }
    tape.concat(&parts, 1)
}

/// 3×3 convolution over a `time × height` grid with `c_in` channels per cell.
#[derive(Clone, Debug)]
pub struct ConvLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub c_in: usize,
    pub c_out: usize,
    pub height: usize,
    pub renorm: bool,
}

impl ConvLayer {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        height: usize,
        c_in: usize,
        c_out: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let fan_in = 9 * c_in;
        let weight = store.add(
            format!("{name}.weight"),
            gaussian(c_out, fan_in, (2.0 / fan_in as f64).sqrt(), rng),
            Constraint::None,
        )?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[c_out]), Constraint::None)?;
        Ok(Self { weight, bias, c_in, c_out, height, renorm: true })
    }

    /// `x: [T × height·c_in]` (cell `(h, c)` at column `h·c_in + c`) to
    /// `[T × height·c_out]`, edges clamped, then ReLU and renorm.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Value) -> Result<Value> {
        let (rows, cols) = (tape.value(x).rows(), tape.value(x).cols());
        let (h, c) = (self.height, self.c_in);
        if cols != h * c {
            return Err(Error::ShapeMismatch(format!("conv expects {} columns, got {cols}", h * c)));
        }
        let mut index = Vec::with_capacity(rows * h * 9 * c);
        for t in 0..rows {
            for y in 0..h {
                for dt in -1..=1isize {
                    let tt = clamp_frame(t as isize + dt, rows);
                    for dy in -1..=1isize {
                        let yy = clamp_frame(y as isize + dy, h);
                        let base = tt * cols + yy * c;
                        index.extend(base..base + c);
                    }
                }
            }
        }
        let patches = tape.gather(x, index, vec![rows * h, 9 * c])?;
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let y = tape.matmul_t(patches, w)?;
        let y = tape.add_bias(y, b)?;
        let mut y = tape.relu(y);
        if self.renorm {
            y = tape.rms_norm(y, NORM_EPS);
        }
        let n = rows * h * self.c_out;
        tape.gather(y, (0..n).collect(), vec![rows, h * self.c_out])
    }
}

#[derive(Clone, Debug)]
pub struct TdnnfLayer {
    /// Semi-orthogonal factor `[bottleneck × context·d_in]`.
    pub linear: ParamId,
    pub affine: Linear,
    pub offsets: Vec<isize>,
    pub bypass_scale: f64,
    pub d_in: usize,
    pub d_out: usize,
    pub renorm: bool,
}

impl TdnnfLayer {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        bottleneck: usize,
        offsets: &[isize],
        bypass_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let linear = store.add(
            format!("{name}.linear"),
            semi_orthogonal_init(bottleneck, offsets.len() * d_in, rng)?,
            Constraint::SemiOrthogonal,
        )?;
        let affine = Linear::new(store, &format!("{name}.affine"), bottleneck, d_out, true, rng)?;
        Ok(Self {
            linear,
            affine,
            offsets: offsets.to_vec(),
            bypass_scale,
            d_in,
            d_out,
            renorm: true,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Value) -> Result<Value> {
        let spliced = tape.splice(x, &self.offsets)?;
        let m = tape.param(store, self.linear);
        let b = tape.matmul_t(spliced, m)?;
        let a = self.affine.forward(tape, store, b)?;
        let a = tape.relu(a);
        let out = if self.renorm { tape.rms_norm(a, NORM_EPS) } else { a };
        if self.d_in != self.d_out {
            return Ok(out);
        }
        let skip = tape.scale(x, self.bypass_scale);
        let main = tape.scale(out, 1.0 - self.bypass_scale);
        tape.add(skip, main)
    }
}

#[derive(Clone, Debug)]
pub struct AcousticModel {
    pub spec: InputFrameSpec,
    /// Width of the MFCC grid the conv stack reads (first columns of the input).
    pub grid_height: usize,
    pub conv: Vec<ConvLayer>,
    pub layers: Vec<TdnnfLayer>,
    pub final_linear: ParamId,
    pub output: Linear,
    pub n_states: usize,
}

impl AcousticModel {
    /// `grid_height` is the number of cepstra leading each noisy row; only
    /// used by the convolutional front-end.
    pub fn new<R: Rng + ?Sized>(
        cfg: &AmConfig,
        spec: InputFrameSpec,
        grid_height: usize,
        n_states: usize,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if n_states == 0 || spec.d_nsy == 0 {
            return Err(Error::InvalidConfig("acoustic model needs states and a noisy stream".into()));
        }
        let mut conv = Vec::new();
        let mut d = spec.d_in();
        if cfg.arch == AmArch::CnnTdnnf {
            if grid_height == 0 || grid_height > spec.d_nsy {
                return Err(Error::InvalidConfig("conv grid must fit inside the noisy stream".into()));
            }
            let mut c_in = 1;
            for (i, &c_out) in cfg.conv_filters.iter().enumerate() {
                let mut layer = ConvLayer::new(store, &format!("am.conv{i}"), grid_height, c_in, c_out, rng)?;
                layer.renorm = cfg.renorm;
                conv.push(layer);
                c_in = c_out;
            }
            d = d - grid_height + grid_height * c_in;
        }
        let mut layers = Vec::with_capacity(cfg.layers);
        for i in 0..cfg.layers {
            let mut layer = TdnnfLayer::new(
                store,
                &format!("am.tdnnf{i}"),
                d,
                cfg.hidden,
                cfg.bottleneck,
                &cfg.offsets,
                cfg.bypass_scale,
                rng,
            )?;
            layer.renorm = cfg.renorm;
            layers.push(layer);
            d = cfg.hidden;
        }
        let final_linear = store.add(
            "am.final.linear",
            semi_orthogonal_init(cfg.final_bottleneck, cfg.hidden, rng)?,
            Constraint::SemiOrthogonal,
        )?;
        let output = Linear::new(store, "am.output", cfg.final_bottleneck, n_states, true, rng)?;
        Ok(Self {
            spec,
            grid_height,
            conv,
            layers,
            final_linear,
            output,
            n_states,
        })
    }

    /// Frames `[T × d_in]` to logits `[T × K]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x_in: Value) -> Result<Value> {
        let (rows, cols) = (tape.value(x_in).rows(), tape.value(x_in).cols());
        if tape.value(x_in).shape().len() != 2 || cols != self.spec.d_in() {
            return Err(Error::ShapeMismatch(format!(
                "acoustic model expects {} input dims, got {:?}",
                self.spec.d_in(),
                tape.value(x_in).shape()
            )));
        }
        let mut h = x_in;
        if !self.conv.is_empty() {
            let g = self.grid_height;
            let grid_idx = (0..rows).flat_map(|t| t * cols..t * cols + g).collect();
            let mut grid = tape.gather(x_in, grid_idx, vec![rows, g])?;
            for layer in &self.conv {
                grid = layer.forward(tape, store, grid)?;
            }
            let rest_w = cols - g;
            h = if rest_w == 0 {
                grid
            } else {
                let rest_idx = (0..rows).flat_map(|t| t * cols + g..(t + 1) * cols).collect();
                let rest = tape.gather(x_in, rest_idx, vec![rows, rest_w])?;
                tape.concat(&[grid, rest], 1)?
            };
        }
        for layer in &self.layers {
            h = layer.forward(tape, store, h)?;
        }
        let m = tape.param(store, self.final_linear);
        let b = tape.matmul_t(h, m)?;
        self.output.forward(tape, store, b)
    }

    /// Inference-only logits.
    pub fn logits(&self, store: &ParamStore, x_in: &FeatureMatrix) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.constant(x_in.data.clone());
        let y = self.forward(&mut tape, store, x)?;
        Ok(tape.value(y).clone())
    }

    /// Frames on either side that can influence one output frame.
    pub fn receptive_field(&self) -> (usize, usize) {
        let (mut back, mut ahead) = (self.conv.len(), self.conv.len());
        for l in &self.layers {
            back += l.offsets.iter().map(|&o| (-o).max(0) as usize).max().unwrap_or(0);
            ahead += l.offsets.iter().map(|&o| o.max(0) as usize).max().unwrap_or(0);
        }
        (back, ahead)
    }
}
