use crate::error::{Error, Result};

/// Add-one smoothed phone bigram. Histories are the phones plus `<s>`;
/// outcomes are the phones plus `</s>`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhoneLm {
    num_phones: usize,
    /// `(P+1) × (P+1)`: row = history (`P` is `<s>`), column = outcome
    /// (`P` is `</s>`).
    log_probs: Vec<f64>,
}

impl PhoneLm {
    pub fn train(transcripts: &[Vec<usize>], num_phones: usize) -> Self {
        let w = num_phones + 1;
        let mut counts = vec![1.0; w * w];
        for tr in transcripts {
            let mut hist = num_phones;
            for &p in tr.iter().filter(|&&p| p < num_phones) {
                counts[hist * w + p] += 1.0;
                hist = p;
            }
            counts[hist * w + num_phones] += 1.0;
        }
        Self::from_counts(num_phones, counts)
    }

    /// Equal probability for every outcome, `</s>` included.
    pub fn uniform(num_phones: usize) -> Self {
        let w = num_phones + 1;
        Self::from_counts(num_phones, vec![1.0; w * w])
    }

    fn from_counts(num_phones: usize, counts: Vec<f64>) -> Self {
        let w = num_phones + 1;
        let log_probs = counts
            .chunks(w)
            .flat_map(|row| {
                let total: f64 = row.iter().sum();
                row.iter().map(move |c| (c / total).ln())
            })
            .collect();
        Self { num_phones, log_probs }
    }

    /// Row-major `(P+1) × (P+1)` log-probabilities.
    pub fn table(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn from_table(num_phones: usize, log_probs: Vec<f64>) -> Result<Self> {
        if log_probs.len() != (num_phones + 1) * (num_phones + 1) {
            return Err(Error::Parse(format!(
                "phone LM table of {} entries for {num_phones} phones",
                log_probs.len()
            )));
        }
        Ok(Self { num_phones, log_probs })
    }

    pub fn num_phones(&self) -> usize {
        self.num_phones
    }

    /// `None` history is `<s>`; `None` outcome is `</s>`.
    pub fn log_prob(&self, history: Option<usize>, next: Option<usize>) -> f64 {
        let p = self.num_phones;
        let h = history.unwrap_or(p);
        let n = next.unwrap_or(p);
        self.log_probs[h * (p + 1) + n]
    }

    /// Log-probability of a full transcript including both boundary symbols.
    pub fn score(&self, transcript: &[usize]) -> Result<f64> {
        if let Some(&bad) = transcript.iter().find(|&&p| p >= self.num_phones) {
            return Err(Error::UnknownPhone(bad));
        }
        let mut hist = None;
        let mut total = 0.0;
        for &p in transcript {
            total += self.log_prob(hist, Some(p));
            hist = Some(p);
        }
        Ok(total + self.log_prob(hist, None))
    }
}
