use ndarray::Array2;

use super::{FeatureMatrix, FrontendConfig, FrontendError};

/// Orthonormal DCT-II basis, `n_coef x n_in`.
pub fn dct_matrix(n_coef: usize, n_in: usize) -> Array2<f64> {
    let n = n_in as f64;
    Array2::from_shape_fn((n_coef, n_in), |(k, i)| {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        scale * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()
    })
}

/// Per-frame orthonormal DCT-II of the log-mel vector, coefficients `0..n_coef`.
pub fn mfcc(mel: &FeatureMatrix, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    if mel.channels() != cfg.n_mels {
        return Err(FrontendError::ChannelMismatch {
            expected: cfg.n_mels,
            actual: mel.channels(),
        });
    }
    if cfg.n_coef > cfg.n_mels {
        return Err(FrontendError::InvalidConfig("n_coef exceeds n_mels".into()));
    }
    let basis = dct_matrix(cfg.n_coef, cfg.n_mels);
    let data = mel.data.dot(&basis.t());
    let labels = (0..cfg.n_coef).map(|i| format!("mfcc_{i}")).collect();
    FeatureMatrix::new(data, mel.frame_rate, labels)
}
