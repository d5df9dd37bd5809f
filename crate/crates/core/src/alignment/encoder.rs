use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::frontend::{FeatureGroup, FeatureMatrix};

use super::{AlignmentError, PhonemeInventory, Posteriorgram};

pub const DEFAULT_BLANK_PRIOR: f64 = 0.2;

/// Per-phone MFCC centroid templates for the template-matching encoder.
///
/// Each frame's phone posteriors are a softmax over negative Euclidean
/// distances to the templates (scaled by `temperature`), sharing
/// `1 - blank_prior` of the mass; blank always receives `blank_prior`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    /// One row per inventory symbol, in inventory order.
    pub templates: Vec<Vec<f64>>,
    pub temperature: f64,
    pub blank_prior: f64,
}

impl TemplateSet {
    pub fn new(templates: Vec<Vec<f64>>, temperature: f64, blank_prior: f64) -> Self {
        Self {
            templates,
            temperature,
            blank_prior,
        }
    }

    /// Averages the MFCC frames of one rendered example per symbol.
    pub fn from_examples(examples: &[FeatureMatrix], temperature: f64, blank_prior: f64) -> Self {
        let templates = examples
            .iter()
            .map(|m| {
                m.data
                    .mean_axis(ndarray::Axis(0))
                    .map(|v| v.to_vec())
                    .unwrap_or_default()
            })
            .collect();
        Self::new(templates, temperature, blank_prior)
    }

    pub fn dims(&self) -> usize {
        self.templates.first().map_or(0, Vec::len)
    }
}

/// Where phone posteriors come from.
#[derive(Debug, Clone)]
pub enum EncoderSource {
    Templates(TemplateSet),
    /// Matrix file in the external posteriorgram format.
    External(PathBuf),
}

/// Produces the phone posteriorgram for a feature matrix.
pub fn phoneme_posteriors(
    features: &FeatureMatrix,
    inv: &PhonemeInventory,
    model: &EncoderSource,
) -> Result<Posteriorgram, AlignmentError> {
    match model {
        EncoderSource::External(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AlignmentError::BadExternalFile(format!("{}: {e}", path.display())))?;
            let post = Posteriorgram::parse_external(&text, inv.blank_index())?;
            if post.n_symbols() != inv.len() {
                return Err(AlignmentError::BadExternalFile(format!(
                    "{} symbol columns, inventory has {}",
                    post.n_symbols(),
                    inv.len()
                )));
            }
            if post.frames() != features.frames() {
                return Err(AlignmentError::BadExternalFile(format!(
                    "{} frames, features have {}",
                    post.frames(),
                    features.frames()
                )));
            }
            Ok(post)
        }
        EncoderSource::Templates(set) => template_posteriors(features, inv, set),
    }
}

fn template_posteriors(
    features: &FeatureMatrix,
    inv: &PhonemeInventory,
    set: &TemplateSet,
) -> Result<Posteriorgram, AlignmentError> {
    if set.templates.len() != inv.len() {
        return Err(AlignmentError::TemplateInventoryMismatch {
            templates: set.templates.len(),
            inventory: inv.len(),
        });
    }
    let mfcc_cols = features.group_channels(FeatureGroup::Mfcc);
    if mfcc_cols.is_empty() {
        return Err(AlignmentError::MissingChannels("mfcc_*".into()));
    }
    if set.templates.iter().any(|t| t.len() != mfcc_cols.len()) {
        return Err(AlignmentError::MissingChannels(format!(
            "templates have {} dims, features have {} mfcc channels",
            set.dims(),
            mfcc_cols.len()
        )));
    }
    if !(set.temperature > 0.0) || !(0.0..1.0).contains(&set.blank_prior) {
        return Err(AlignmentError::InvalidPosteriorgram(
            "temperature must be > 0 and blank_prior in [0, 1)".into(),
        ));
    }

    let n = inv.len();
    let frames = features.frames();
    let mut probs = Array2::zeros((frames, n + 1));
    let mut logits = vec![0.0; n];
    for t in 0..frames {
        let row = features.data.row(t);
        for (s, template) in set.templates.iter().enumerate() {
            let d2: f64 = mfcc_cols
                .iter()
                .zip(template)
                .map(|(&c, &m)| (row[c] - m).powi(2))
                .sum();
            logits[s] = -d2.sqrt() / set.temperature;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        for s in 0..n {
            probs[[t, inv.column(s)]] = (1.0 - set.blank_prior) * (logits[s] - max).exp() / total;
        }
        probs[[t, inv.blank_index()]] = set.blank_prior;
    }
    Posteriorgram::new(probs, features.frame_rate, inv.blank_index())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mfcc_rows(rows: &[Vec<f64>]) -> FeatureMatrix {
        let dims = rows[0].len();
        FeatureMatrix::new(
            Array2::from_shape_vec((rows.len(), dims), rows.concat()).unwrap(),
            62.5,
            (0..dims).map(|i| format!("mfcc_{i}")).collect(),
        )
        .unwrap()
    }

    fn inv3() -> PhonemeInventory {
        PhonemeInventory::from_json(
            r#"{"name":"x","blank_index":0,"symbols":[
                {"symbol":"a","mean_ms":100,"std_ms":20},
                {"symbol":"b","mean_ms":100,"std_ms":20},
                {"symbol":"c","mean_ms":100,"std_ms":20}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn exact_template_at_low_temperature() {
        let set = TemplateSet::new(vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]], 1e-3, 0.2);
        let post = phoneme_posteriors(&mfcc_rows(&[vec![0.0, 0.0]]), &inv3(), &EncoderSource::Templates(set)).unwrap();
        assert!((post.prob(0, Some(0)) - 0.8).abs() < 1e-12);
        assert_eq!(post.prob(0, None), 0.2);
    }

    #[test]
    fn equidistant_frame_is_uniform() {
        let set = TemplateSet::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]], 0.7, 0.2);
        let post = phoneme_posteriors(&mfcc_rows(&[vec![0.0, 0.0]]), &inv3(), &EncoderSource::Templates(set)).unwrap();
        for s in 0..3 {
            assert!((post.prob(0, Some(s)) - 0.8 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatches_are_reported() {
        let set = TemplateSet::new(vec![vec![0.0, 0.0]; 2], 1.0, 0.2);
        let r = phoneme_posteriors(&mfcc_rows(&[vec![0.0, 0.0]]), &inv3(), &EncoderSource::Templates(set));
        assert!(matches!(r, Err(AlignmentError::TemplateInventoryMismatch { templates: 2, inventory: 3 })));
        let no_mfcc = FeatureMatrix::new(Array2::zeros((1, 1)), 62.5, vec!["energy_db".into()]).unwrap();
        let set = TemplateSet::new(vec![vec![0.0]; 3], 1.0, 0.2);
        assert!(matches!(
            phoneme_posteriors(&no_mfcc, &inv3(), &EncoderSource::Templates(set)),
            Err(AlignmentError::MissingChannels(_))
        ));
    }

    #[test]
    fn external_file_passes_through() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("post.txt");
        std::fs::write(&path, "2 4 62.5\n0.1 0.2 0.3 0.4\n0.25 0.25 0.25 0.25\n").unwrap();
        let feats = mfcc_rows(&[vec![0.0], vec![0.0]]);
        let post = phoneme_posteriors(&feats, &inv3(), &EncoderSource::External(path.clone())).unwrap();
        assert_eq!(post.probs()[[0, 3]], 0.4);
        std::fs::write(&path, "2 4 62.5\n0.1 0.2 0.3 0.5\n0.25 0.25 0.25 0.25\n").unwrap();
        assert!(matches!(
            phoneme_posteriors(&feats, &inv3(), &EncoderSource::External(path)),
            Err(AlignmentError::BadExternalFile(_))
        ));
    }
}
