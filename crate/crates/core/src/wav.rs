//! Multichannel WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Multichannel audio held as `[channel][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub sample_rate_hz: f64,
    pub channels: Vec<Vec<f64>>,
}

impl Recording {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads a PCM (16/24/32-bit integer) or IEEE-float WAV file, normalizing
/// integer samples to `[-1, 1]`.
pub fn read_multichannel_wav(path: &Path) -> Result<Recording> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = WavReader::open(path).map_err(map_hound)?;
    let spec = reader.spec();
    let nch = spec.channels as usize;
    if nch == 0 {
        return Err(Error::MalformedHeader("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedCodec(format!("{fmt:?} {bits}-bit")));
        }
    };
    let frames = interleaved.len() / nch;
    let mut channels = vec![Vec::with_capacity(frames); nch];
    for frame in interleaved.chunks_exact(nch) {
        for (ch, &s) in channels.iter_mut().zip(frame) {
            ch.push(s);
        }
    }
    Ok(Recording {
        sample_rate_hz: spec.sample_rate as f64,
        channels,
    })
}

/// Writes 32-bit float WAV. Samples are stored as `f32`, so a recording
/// whose samples are already `f32`-representable round-trips exactly.
pub fn write_wav_f32(path: &Path, rec: &Recording) -> Result<()> {
    let spec = WavSpec {
        channels: rec.num_channels() as u16,
        sample_rate: rec.sample_rate_hz.round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).map_err(map_hound)?;
    for i in 0..rec.len() {
        for ch in &rec.channels {
            w.write_sample(ch[i] as f32).map_err(map_hound)?;
        }
    }
    w.finalize().map_err(map_hound)?;
    Ok(())
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        // hound reports short reads as `Other`
        hound::Error::IoError(io)
            if matches!(io.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            Error::MalformedHeader(format!("truncated file: {io}"))
        }
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::FormatError(msg) => Error::MalformedHeader(msg.into()),
        hound::Error::Unsupported => Error::UnsupportedCodec("unsupported WAV format".into()),
        hound::Error::TooWide => Error::UnsupportedCodec("sample too wide".into()),
        other => Error::MalformedHeader(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_recording(channels: usize, len: usize) -> Recording {
        Recording {
            sample_rate_hz: 48_000.0,
            channels: (0..channels)
                .map(|c| {
                    (0..len)
                        .map(|i| (((i * 7 + c * 13) % 101) as f32 / 101.0 - 0.5) as f64)
                        .collect()
                })
                .collect(),
        }
    }

    #[test]
    fn float_wav_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let rec = sample_recording(32, 500);
        write_wav_f32(&path, &rec).unwrap();
        let back = read_multichannel_wav(&path).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn int16_is_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i16.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for s in [i16::MIN, 0, 16384, -16384] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        let rec = read_multichannel_wav(&path).unwrap();
        assert_eq!(rec.channels, vec![vec![-1.0, 0.5], vec![0.0, -0.5]]);
    }

    #[test]
    fn truncated_header_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        std::fs::write(&path, b"RIFF\x24\x00\x00\x00WAVEfmt ").unwrap();
        let err = read_multichannel_wav(&path).unwrap_err();
        assert!(matches!(err, Error::MalformedHeader(_)), "{err:?}");
    }

    #[test]
    fn missing_file() {
        let err = read_multichannel_wav(Path::new("/no/such/file.wav")).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn unsupported_codec() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        let err = read_multichannel_wav(&path).unwrap_err();
        assert!(matches!(err, Error::UnsupportedCodec(_)), "{err:?}");
    }
}
