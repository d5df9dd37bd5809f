use std::path::Path;

use super::FrontendError;

/// Lowest sample rate the frontend accepts.
pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Mono audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, FrontendError> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(FrontendError::UnsupportedFormat(format!(
                "sample rate {sample_rate} Hz is below {MIN_SAMPLE_RATE} Hz"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(FrontendError::InvalidAudio(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads a mono 16-bit PCM RIFF/WAVE file, scaling samples by 1/32768.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioBuffer, FrontendError> {
    let reader = hound::WavReader::open(path.as_ref()).map_err(map_hound)?;
    read_wav(reader)
}

pub(crate) fn read_wav<R: std::io::Read>(
    reader: hound::WavReader<R>,
) -> Result<AudioBuffer, FrontendError> {
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(FrontendError::UnsupportedFormat(
            "only integer PCM is supported".into(),
        ));
    }
    if spec.bits_per_sample != 16 {
        return Err(FrontendError::UnsupportedFormat(format!(
            "{} bits per sample, expected 16",
            spec.bits_per_sample
        )));
    }
    if spec.channels != 1 {
        return Err(FrontendError::UnsupportedFormat(format!(
            "{} channels, expected mono",
            spec.channels
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Loads WAV bytes already in memory (used by the HTTP upload path).
pub fn load_audio_bytes(bytes: &[u8]) -> Result<AudioBuffer, FrontendError> {
    let reader = hound::WavReader::new(std::io::Cursor::new(bytes)).map_err(map_hound)?;
    read_wav(reader)
}

/// Writes a mono 16-bit PCM WAV, clipping to the representable range.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<(), FrontendError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    for &s in &audio.samples {
        writer.write_sample(to_pcm16(s)).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

pub(crate) fn to_pcm16(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn map_hound(e: hound::Error) -> FrontendError {
    match e {
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            FrontendError::CorruptFile("unexpected end of file".into())
        }
        hound::Error::IoError(io) if io.kind() == std::io::ErrorKind::NotFound => {
            FrontendError::Io(io)
        }
        hound::Error::IoError(io) => FrontendError::CorruptFile(io.to_string()),
        hound::Error::FormatError(msg) => FrontendError::CorruptFile(msg.to_string()),
        hound::Error::TooWide => FrontendError::UnsupportedFormat("sample too wide".into()),
        hound::Error::UnfinishedSample => FrontendError::CorruptFile("unfinished sample".into()),
        hound::Error::Unsupported => FrontendError::UnsupportedFormat("unsupported WAV".into()),
        hound::Error::InvalidSampleFormat => {
            FrontendError::UnsupportedFormat("invalid sample format".into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes(channels: u16, bits: u16, samples: &[i32]) -> Vec<u8> {
        let spec = hound::WavSpec {
            channels,
            sample_rate: 16000,
            bits_per_sample: bits,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cursor = std::io::Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut cursor, spec).unwrap();
            for &s in samples {
                w.write_sample(s).unwrap();
            }
            w.finalize().unwrap();
        }
        cursor.into_inner()
    }

    #[test]
    fn silence_round_trips() {
        let bytes = wav_bytes(1, 16, &vec![0; 16000]);
        let audio = load_audio_bytes(&bytes).unwrap();
        assert_eq!(audio.len(), 16000);
        assert_eq!(audio.sample_rate(), 16000);
        assert!(audio.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn max_sample_normalizes_below_one() {
        let bytes = wav_bytes(1, 16, &[32767, -32768]);
        let audio = load_audio_bytes(&bytes).unwrap();
        assert_eq!(audio.samples()[0], 32767.0 / 32768.0);
        assert_eq!(audio.samples()[1], -1.0);
    }

    #[test]
    fn stereo_is_rejected() {
        let bytes = wav_bytes(2, 16, &[0, 0, 0, 0]);
        assert!(matches!(
            load_audio_bytes(&bytes),
            Err(FrontendError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn eight_bit_is_rejected() {
        let bytes = wav_bytes(1, 8, &[0, 1, 2]);
        assert!(matches!(
            load_audio_bytes(&bytes),
            Err(FrontendError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncated_data_is_corrupt() {
        let mut bytes = wav_bytes(1, 16, &vec![100; 1000]);
        bytes.truncate(bytes.len() - 501);
        assert!(matches!(
            load_audio_bytes(&bytes),
            Err(FrontendError::CorruptFile(_))
        ));
    }

    #[test]
    fn garbage_header_is_corrupt() {
        assert!(matches!(
            load_audio_bytes(b"RIFX not a wave file at all"),
            Err(FrontendError::CorruptFile(_))
        ));
    }

    #[test]
    fn low_sample_rate_rejected() {
        assert!(AudioBuffer::new(vec![0.0; 10], 4000).is_err());
        assert!(AudioBuffer::new(vec![f64::NAN], 16000).is_err());
    }
}
