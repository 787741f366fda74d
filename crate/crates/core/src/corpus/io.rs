//! On-disk corpus layout.
//!
//! `<dir>/<split>/manifest.tsv` holds one tab-separated line per utterance:
//! `id speaker snr_db transcript path_clean path_noise path_noisy path_alignment`
//! with paths relative to the manifest's directory. Waveforms are raw
//! little-endian `f32` with a `<file>.hdr` sidecar reading `sample_rate=N`;
//! alignments hold one state id per line.

use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::generate::{Corpus, Segment, Split, Utterance};
use crate::corpus::waveform::Waveform;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub speaker: String,
    pub snr_db: f64,
    pub transcript: Vec<usize>,
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub noisy: PathBuf,
    pub alignment: PathBuf,
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        let transcript: Vec<String> = self.transcript.iter().map(usize::to_string).collect();
        format!(
            "{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.speaker,
            self.snr_db,
            transcript.join(" "),
            self.clean.display(),
            self.noise.display(),
            self.noisy.display(),
            self.alignment.display()
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(Error::Parse(format!("manifest line has {} fields: {line:?}", f.len())));
        }
        let transcript = f[3]
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad phone id {t:?}"))))
            .collect::<Result<Vec<usize>>>()?;
        Ok(Self {
            id: f[0].to_string(),
            speaker: f[1].to_string(),
            snr_db: f[2].parse().map_err(|_| Error::Parse(format!("bad snr {:?}", f[2])))?,
            transcript,
            clean: f[4].into(),
            noise: f[5].into(),
            noisy: f[6].into(),
            alignment: f[7].into(),
        })
    }
}

pub fn manifest_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(split.as_str()).join("manifest.tsv")
}

pub fn write_waveform(path: &Path, w: &Waveform) -> Result<()> {
    let bytes: Vec<u8> = w
        .samples
        .iter()
        .flat_map(|&s| (s as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let hdr = header_path(path);
    fs::write(&hdr, format!("sample_rate={}\n", w.sample_rate)).map_err(|e| Error::io(&hdr, e))
}

fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn read_waveform(path: &Path) -> Result<Waveform> {
    let hdr_path = header_path(path);
    let hdr = fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
    let sample_rate = hdr
        .lines()
        .find_map(|l| l.trim().strip_prefix("sample_rate="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("{}: missing sample_rate", hdr_path.display())))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Parse(format!("{}: truncated f32 data", path.display())));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    Ok(Waveform::new(samples, sample_rate))
}

pub fn write_alignment(path: &Path, labels: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_alignment(path: &Path) -> Result<Vec<usize>> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse().map_err(|_| Error::Parse(format!("bad state id {l:?}"))))
        .collect()
}

/// Writes a split under `<dir>/<split>/` and returns the manifest path.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<PathBuf> {
    let split_dir = dir.join(corpus.split.as_str());
    let wav_dir = split_dir.join("wav");
    fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let mut manifest = String::new();
    for u in &corpus.utterances {
        let rel = |suffix: &str| PathBuf::from("wav").join(format!("{}.{suffix}", u.id));
        let entry = ManifestEntry {
            id: u.id.clone(),
            speaker: u.speaker.clone(),
            snr_db: u.snr_db,
            transcript: u.transcript.clone(),
            clean: rel("clean.f32"),
            noise: rel("noise.f32"),
            noisy: rel("noisy.f32"),
            alignment: rel("ali"),
        };
        write_waveform(&split_dir.join(&entry.clean), &u.clean)?;
        write_waveform(&split_dir.join(&entry.noise), &u.noise)?;
        write_waveform(&split_dir.join(&entry.noisy), &u.noisy)?;
        write_alignment(&split_dir.join(&entry.alignment), &u.alignment)?;
        manifest.push_str(&entry.to_line());
        manifest.push('\n');
    }
    let path = manifest_path(dir, corpus.split);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .map(ManifestEntry::parse)
        .collect()
}

/// Loads a split written by [`write_corpus`]. Segment boundaries are
/// reconstructed at frame resolution from the alignment.
pub fn read_corpus(dir: &Path, split: Split, hop: usize) -> Result<Corpus> {
    let manifest = manifest_path(dir, split);
    let base = manifest.parent().unwrap_or(Path::new("."));
    let utterances = read_manifest(&manifest)?
        .into_iter()
        .map(|e| {
            let alignment = read_alignment(&base.join(&e.alignment))?;
            let noisy = read_waveform(&base.join(&e.noisy))?;
            let mut segments: Vec<Segment> = Vec::new();
            let mut start = 0;
            for (t, w) in alignment.chunk_by(|a, b| a == b).scan(0usize, |t, w| {
                let s = *t;
                *t += w.len();
                Some((s, w))
            }) {
                let end = ((t + w.len()) * hop).min(noisy.len());
                segments.push(Segment { phone: w[0], start, end });
                start = end;
            }
            if let Some(last) = segments.last_mut() {
                last.end = noisy.len();
            }
            Ok(Utterance {
                clean: read_waveform(&base.join(&e.clean))?,
                noise: read_waveform(&base.join(&e.noise))?,
                noisy,
                id: e.id,
                speaker: e.speaker,
                transcript: e.transcript,
                segments,
                alignment,
                snr_db: e.snr_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        utterances,
        split,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate::{generate_corpus, CorpusConfig};

    #[test]
    fn manifest_line_round_trips() {
        let e = ManifestEntry {
            id: "train-0001-white".into(),
            speaker: "spk03".into(),
            snr_db: 12.5,
            transcript: vec![3, 1, 4],
            clean: "wav/a.clean.f32".into(),
            noise: "wav/a.noise.f32".into(),
            noisy: "wav/a.noisy.f32".into(),
            alignment: "wav/a.ali".into(),
        };
        let line = e.to_line();
        assert_eq!(line.split('\t').count(), 8);
        assert_eq!(ManifestEntry::parse(&line).unwrap(), e);
        assert!(ManifestEntry::parse("a\tb").is_err());
    }

    #[test]
    fn corpus_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = CorpusConfig { num_train: 3, num_test: 2, ..CorpusConfig::default() };
        let c = generate_corpus(&cfg, Split::Test).unwrap();
        let path = write_corpus(dir.path(), &c).unwrap();
        assert!(path.ends_with("test/manifest.tsv"));
        let hdr = fs::read_to_string(dir.path().join("test/wav").join(format!("{}.clean.f32.hdr", c.utterances[0].id))).unwrap();
        assert_eq!(hdr.trim(), "sample_rate=16000");
        let back = read_corpus(dir.path(), Split::Test, cfg.hop_len()).unwrap();
        assert_eq!(back.len(), c.len());
        for (a, b) in back.utterances.iter().zip(&c.utterances) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.alignment, b.alignment);
            assert_eq!(a.transcript, b.transcript);
            assert_eq!(a.segments.len(), b.segments.len());
            for (x, y) in a.clean.samples.iter().zip(&b.clean.samples) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
