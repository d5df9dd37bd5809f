use ndarray::{concatenate, Array1, Array2, Axis};

use super::{HiddenSeq, Origin, TemporalError, WeightBundle};

#[derive(Debug, Clone)]
pub(crate) struct Fusion {
    weight: Array2<f64>,
    bias: Array1<f64>,
}

impl Fusion {
    pub(crate) fn new(w: &WeightBundle) -> Result<Self, TemporalError> {
        Ok(Self {
            weight: w.matrix("fusion.weight")?,
            bias: w.vector("fusion.bias")?,
        })
    }

    pub(crate) fn run(&self, local: &HiddenSeq, global: &HiddenSeq) -> Result<HiddenSeq, TemporalError> {
        if local.frames() != global.frames() {
            return Err(TemporalError::FrameCountMismatch(local.frames(), global.frames()));
        }
        if self.weight.ncols() != local.dim() + global.dim() {
            return Err(TemporalError::ShapeMismatch(format!(
                "fusion expects {} input dims, got {} + {}",
                self.weight.ncols(),
                local.dim(),
                global.dim()
            )));
        }
        let joined = concatenate(Axis(1), &[local.data.view(), global.data.view()])
            .map_err(|e| TemporalError::ShapeMismatch(e.to_string()))?;
        Ok(HiddenSeq {
            data: joined.dot(&self.weight.t()) + &self.bias,
            origin: Origin::Fused,
        })
    }
}

/// Per-frame `[local, global]` concatenation followed by an affine projection.
pub fn fuse(local: &HiddenSeq, global: &HiddenSeq, w: &WeightBundle) -> Result<HiddenSeq, TemporalError> {
    Fusion::new(w)?.run(local, global)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::TemporalConfig;

    fn cfg(fused: usize) -> TemporalConfig {
        TemporalConfig {
            input_dim: 2,
            hidden_size: 2,
            model_dim: 2,
            n_heads: 1,
            n_layers: 1,
            fused_dim: fused,
        }
    }

    fn seq(rows: usize, origin: Origin, offset: f64) -> HiddenSeq {
        HiddenSeq {
            data: Array2::from_shape_fn((rows, 2), |(r, c)| offset + (r * 2 + c) as f64),
            origin,
        }
    }

    #[test]
    fn identity_projection_concatenates() {
        let mut w = WeightBundle::zeros(cfg(4)).unwrap();
        let eye: Vec<f32> = (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        w.set("fusion.weight", eye).unwrap();
        let (l, g) = (seq(3, Origin::Local, 0.0), seq(3, Origin::Global, 10.0));
        let f = fuse(&l, &g, &w).unwrap();
        assert_eq!(f.data, concatenate(Axis(1), &[l.data.view(), g.data.view()]).unwrap());
        assert_eq!(f.origin, Origin::Fused);
    }

    #[test]
    fn zero_projection_gives_zeros() {
        let w = WeightBundle::zeros(cfg(3)).unwrap();
        let f = fuse(&seq(2, Origin::Local, 1.0), &seq(2, Origin::Global, 2.0), &w).unwrap();
        assert!(f.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let w = WeightBundle::zeros(cfg(3)).unwrap();
        assert!(matches!(
            fuse(&seq(2, Origin::Local, 0.0), &seq(3, Origin::Global, 0.0), &w),
            Err(TemporalError::FrameCountMismatch(2, 3))
        ));
    }
}
