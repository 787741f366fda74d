use crate::corpus::waveform::Waveform;
use crate::error::{Error, Result};

/// Least-squares volume fit of `clean` to `noisy` and the residual noise:
/// `g = ⟨noisy, clean⟩ / ⟨clean, clean⟩`, `noise = noisy − g·clean`.
pub fn derive_noise(noisy: &Waveform, clean: &Waveform) -> Result<(f64, Waveform)> {
    noisy.check_same_len(clean)?;
    let energy = clean.dot(clean);
    if energy == 0.0 {
        return Err(Error::ZeroReferenceSignal);
    }
    let gain = noisy.dot(clean) / energy;
    Ok((gain, noisy.sub_scaled(clean, gain)?))
}

/// Scale factor `a` such that `clean + a·noise` has the requested SNR.
pub fn snr_scale(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<f64> {
    let pn = noise.power();
    if pn == 0.0 {
        return Err(Error::ZeroNoiseSignal);
    }
    Ok((clean.power() / (pn * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `clean + a·noise` at the requested SNR.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform> {
    clean.check_same_len(noise)?;
    let a = snr_scale(clean, noise, snr_db)?;
    Ok(Waveform::new(
        clean
            .samples
            .iter()
            .zip(&noise.samples)
            .map(|(c, n)| c + a * n)
            .collect(),
        clean.sample_rate,
    ))
}

/// Removes the component of `noise` along `clean`.
pub fn orthogonalize(noise: &Waveform, clean: &Waveform) -> Result<Waveform> {
    noise.check_same_len(clean)?;
    let energy = clean.dot(clean);
    if energy == 0.0 {
        return Err(Error::ZeroReferenceSignal);
    }
    noise.sub_scaled(clean, noise.dot(clean) / energy)
}

pub fn volume_perturb(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidFactor(factor));
    }
    Ok(w.scaled(factor))
}

/// Output length for a speed factor: `round(len / factor)`.
pub fn speed_perturbed_len(len: usize, factor: f64) -> usize {
    (len as f64 / factor).round() as usize
}

/// Linear-interpolation resampling; output sample `i` reads input position `i·factor`.
pub fn speed_perturb(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(0.5..=2.0).contains(&factor) {
        return Err(Error::InvalidFactor(factor));
    }
    if factor == 1.0 {
        return Ok(w.clone());
    }
    let n = w.len();
    let out_len = speed_perturbed_len(n, factor);
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * factor;
            let j = pos.floor() as usize;
            if j + 1 >= n {
                return w.samples[n - 1];
            }
            let frac = pos - j as f64;
            w.samples[j] * (1.0 - frac) + w.samples[j + 1] * frac
        })
        .collect();
    Ok(Waveform::new(samples, w.sample_rate))
}
