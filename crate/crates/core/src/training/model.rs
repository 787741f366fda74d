use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acoustic_model::{build_input_value, AcousticModel, InputFrameSpec};
use crate::aggregation::Aggregator;
use crate::checkpoint::Checkpoint;
use crate::config::{ExperimentConfig, Mode};
use crate::corpus::{Corpus, PhoneInventory};
use crate::error::{Error, Result};
use crate::features::{assemble_noisy_features, cmn, FeatureKind, FeatureMatrix, MfccExtractor, SpeakerTable};
use crate::lfmmi::{build_denominator_graph, build_numerator_graph, lfmmi_loss, viterbi_decode, Graph, PhoneLm, ViterbiPath};
use crate::numerics::{ParamStore, Tape, Tensor, Value};
use crate::senan::{mse_loss, SenanModel};
use crate::training::losses::{ce_loss, joint_loss};

/// Features, targets and graphs of one utterance, computed once.
#[derive(Clone, Debug)]
pub struct PreparedUtterance {
    pub id: String,
    pub speaker: String,
    /// Mean-normalized noisy MFCCs with the speaker vector appended.
    pub x_nsy: FeatureMatrix,
    pub clean: FeatureMatrix,
    pub noise: FeatureMatrix,
    pub alignment: Vec<usize>,
    pub transcript: Vec<usize>,
    pub numerator: Graph,
}

impl PreparedUtterance {
    pub fn frames(&self) -> usize {
        self.x_nsy.frames()
    }
}

pub fn phone_inventory(cfg: &ExperimentConfig) -> PhoneInventory {
    PhoneInventory::generate(cfg.corpus.num_phones, cfg.corpus.states_per_phone, cfg.corpus.seed)
}

/// Bigram phone LM over the training transcripts.
pub fn train_phone_lm(train: &Corpus, cfg: &ExperimentConfig) -> PhoneLm {
    let transcripts: Vec<Vec<usize>> = train.utterances.iter().map(|u| u.transcript.clone()).collect();
    PhoneLm::train(&transcripts, cfg.corpus.num_phones)
}

/// MFCC extraction, mean normalization and numerator graphs for a split.
pub fn prepare_corpus(corpus: &Corpus, cfg: &ExperimentConfig, lm: &PhoneLm) -> Result<Vec<PreparedUtterance>> {
    let inv = phone_inventory(cfg);
    let extractor = MfccExtractor::new(&cfg.features, cfg.corpus.sample_rate)?;
    let mut speakers = SpeakerTable::new(cfg.features.spk_dim, cfg.corpus.seed);
    corpus.utterances
        .iter()
        .map(|u| {
            speakers.register(&u.speaker);
            let noisy = cmn(&extractor.mfcc(&u.noisy, FeatureKind::Noisy)?);
            let clean = cmn(&extractor.mfcc(&u.clean, FeatureKind::Clean)?);
            let noise = cmn(&extractor.mfcc(&u.noise, FeatureKind::Noise)?);
            if u.alignment.len() != noisy.frames() {
                return Err(Error::FrameCountMismatch(format!(
                    "{}: {} feature frames vs {} alignment labels",
                    u.id,
                    noisy.frames(),
                    u.alignment.len()
                )));
            }
            Ok(PreparedUtterance {
                id: u.id.clone(),
                speaker: u.speaker.clone(),
                x_nsy: assemble_noisy_features(&noisy, speakers.embedding(&u.speaker)?),
                clean,
                noise,
                alignment: u.alignment.clone(),
                transcript: u.transcript.clone(),
                numerator: build_numerator_graph(&u.transcript, &inv, lm)?,
            })
        })
        .collect()
}

/// Loss values of one utterance; `total` is on the tape.
#[derive(Clone, Copy, Debug)]
pub struct UtteranceLoss {
    pub total: Value,
    pub ce: f64,
    pub fmmi: f64,
    pub enh: f64,
    pub nse: f64,
}

/// SENAN, aggregators and acoustic model sharing one parameter store.
#[derive(Clone, Debug)]
pub struct JointModel {
    pub config: ExperimentConfig,
    pub inventory: PhoneInventory,
    pub lm: PhoneLm,
    pub den: Graph,
    pub store: ParamStore,
    pub senan: Option<SenanModel>,
    pub agg_enh: Option<Aggregator>,
    pub agg_nse: Option<Aggregator>,
    pub am: AcousticModel,
}

impl JointModel {
    /// Fresh parameters drawn from `config.seed`.
    pub fn new(config: &ExperimentConfig, lm: PhoneLm) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let inventory = phone_inventory(config);
        let den = build_denominator_graph(&lm, &inventory)?;
        let n_ceps = config.features.n_ceps;
        let mode = config.train.mode;
        let noise_stream = config.senan.noise_head;
        let senan = match mode {
            Mode::Proposed => Some(SenanModel::new(
                &config.senan,
                n_ceps + config.features.spk_dim,
                n_ceps,
                &mut store,
                &mut rng,
            )?),
            _ => None,
        };
        let (agg_enh, agg_nse) = match mode {
            Mode::Baseline => (None, None),
            _ => {
                let enh = Aggregator::new(config.agg_enh, n_ceps, "agg.enh", &mut store, &mut rng)?
                    .with_stat_std(config.agg_stat_std);
                let nse = if noise_stream {
                    Some(
                        Aggregator::new(config.agg_nse, n_ceps, "agg.nse", &mut store, &mut rng)?
                            .with_stat_std(config.agg_stat_std),
                    )
                } else {
                    None
                };
                (Some(enh), nse)
            }
        };
        let spec = InputFrameSpec {
            d_nsy: n_ceps + config.features.spk_dim,
            d_enh: agg_enh.as_ref().map_or(0, Aggregator::output_dim),
            d_nse: agg_nse.as_ref().map_or(0, Aggregator::output_dim),
        };
        let am = AcousticModel::new(&config.am, spec, n_ceps, inventory.num_states(), &mut store, &mut rng)?;
        Ok(Self {
            config: config.clone(),
            inventory,
            lm,
            den,
            store,
            senan,
            agg_enh,
            agg_nse,
            am,
        })
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let mut m = Self::new(&ck.config, ck.lm.clone())?;
        ck.restore_into(&mut m.store)?;
        Ok(m)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(&self.config, &self.lm, &self.store)
    }

    pub fn mode(&self) -> Mode {
        self.config.train.mode
    }

    /// Builds the AM input on the tape. Returns it with the two
    /// reconstruction losses when SENAN is present.
    fn input(&self, tape: &mut Tape, utt: &PreparedUtterance, x: Value) -> Result<(Value, Option<Value>, Option<Value>)> {
        let (y_enh, y_nse, l_enh, l_nse) = match (self.mode(), &self.senan) {
            (Mode::Baseline, _) => return Ok((x, None, None)),
            (Mode::Proposed, Some(senan)) => {
                let out = senan.forward(tape, &self.store, x)?;
                let t_enh = tape.constant(utt.clean.data.clone());
                let l_enh = mse_loss(tape, out.y_enh, t_enh)?;
                let (y_nse, l_nse) = match (out.y_nse, &self.agg_nse) {
                    (Some(y), Some(_)) => {
                        let t_nse = tape.constant(utt.noise.data.clone());
                        (Some(y), Some(mse_loss(tape, y, t_nse)?))
                    }
                    _ => (None, None),
                };
                (out.y_enh, y_nse, Some(l_enh), l_nse)
            }
            _ => {
                let y_enh = tape.constant(utt.clean.data.clone());
                let y_nse = self.agg_nse.as_ref().map(|_| tape.constant(utt.noise.data.clone()));
                (y_enh, y_nse, None, None)
            }
        };
        let agg_enh = self.agg_enh.as_ref().expect("aggregators exist outside baseline mode");
        let a_enh = agg_enh.forward(tape, &self.store, y_enh)?;
        let a_nse = match (y_nse, &self.agg_nse) {
            (Some(y), Some(agg)) => Some(agg.forward(tape, &self.store, y)?),
            _ => None,
        };
        Ok((build_input_value(tape, x, Some(a_enh), a_nse)?, l_enh, l_nse))
    }

    /// Joint objective of one utterance with `x_nsy` as the (possibly
    /// masked) noisy stream.
    pub fn utterance_loss(&self, tape: &mut Tape, utt: &PreparedUtterance, x_nsy: &FeatureMatrix) -> Result<UtteranceLoss> {
        let x = tape.constant(x_nsy.data.clone());
        let (x_in, l_enh, l_nse) = self.input(tape, utt, x)?;
        let logits = self.am.forward(tape, &self.store, x_in)?;
        let ce = ce_loss(tape, logits, &utt.alignment)?;
        let fmmi = lfmmi_loss(tape, logits, &utt.numerator, &self.den)?;
        let zero = tape.constant(Tensor::scalar(0.0));
        let (e, n) = (l_enh.unwrap_or(zero), l_nse.unwrap_or(zero));
        let total = joint_loss(tape, ce, fmmi, e, n, self.config.train.weights)?;
        Ok(UtteranceLoss {
            total,
            ce: tape.scalar(ce),
            fmmi: tape.scalar(fmmi),
            enh: tape.scalar(e),
            nse: tape.scalar(n),
        })
    }

    /// State logits for decoding.
    pub fn logits(&self, utt: &PreparedUtterance) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.constant(utt.x_nsy.data.clone());
        let (x_in, _, _) = self.input(&mut tape, utt, x)?;
        let y = self.am.forward(&mut tape, &self.store, x_in)?;
        Ok(tape.value(y).clone())
    }

    /// Viterbi search of the phone-bigram decoding graph.
    pub fn decode(&self, utt: &PreparedUtterance) -> Result<ViterbiPath> {
        let scale = self.config.acoustic_scale;
        let logits = self.logits(utt)?.map(|v| v * scale);
        viterbi_decode(&self.den, &logits, &self.inventory)
    }
}
