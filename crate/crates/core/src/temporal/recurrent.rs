use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::{sigmoid, HiddenSeq, Origin, TemporalError, WeightBundle};

const GATES: [&str; 4] = ["i", "f", "g", "o"];

/// Gate weights stacked in `i, f, g, o` order, converted once.
#[derive(Debug, Clone)]
pub(crate) struct Lstm {
    w_in: Array2<f64>,
    w_rec: Array2<f64>,
    bias: Array1<f64>,
    input_dim: usize,
    hidden: usize,
}

fn stacked(w: &WeightBundle, part: &str) -> Result<Array2<f64>, TemporalError> {
    let mats = GATES
        .iter()
        .map(|g| w.matrix(&format!("lstm.{g}.{part}")))
        .collect::<Result<Vec<_>, _>>()?;
    let views: Vec<_> = mats.iter().map(|m| m.view()).collect();
    concatenate(Axis(0), &views).map_err(|e| TemporalError::ShapeMismatch(e.to_string()))
}

impl Lstm {
    pub(crate) fn new(w: &WeightBundle) -> Result<Self, TemporalError> {
        let bias = GATES
            .iter()
            .map(|g| w.vector(&format!("lstm.{g}.bias")))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(Self {
            w_in: stacked(w, "w_in")?,
            w_rec: stacked(w, "w_rec")?,
            bias,
            input_dim: w.config().input_dim,
            hidden: w.config().hidden_size,
        })
    }

    pub(crate) fn run(&self, input: &Array2<f64>) -> Result<HiddenSeq, TemporalError> {
        if input.ncols() != self.input_dim {
            return Err(TemporalError::ShapeMismatch(format!(
                "recurrent input has {} channels, weights expect {}",
                input.ncols(),
                self.input_dim
            )));
        }
        let hs = self.hidden;
        // input contributions for every frame at once
        let x_pre = input.dot(&self.w_in.t()) + &self.bias;
        let mut h = Array1::zeros(hs);
        let mut c = Array1::<f64>::zeros(hs);
        let mut out = Array2::zeros((input.nrows(), hs));
        for t in 0..input.nrows() {
            let pre = &x_pre.row(t) + &self.w_rec.dot(&h);
            let gate = |k: usize| pre.slice(s![k * hs..(k + 1) * hs]);
            let i = gate(0).mapv(sigmoid);
            let f = gate(1).mapv(sigmoid);
            let g = gate(2).mapv(f64::tanh);
            let o = gate(3).mapv(sigmoid);
            c = &f * &c + &i * &g;
            h = &o * &c.mapv(f64::tanh);
            out.row_mut(t).assign(&h);
        }
        Ok(HiddenSeq {
            data: out,
            origin: Origin::Local,
        })
    }
}

/// Left-to-right LSTM from a zero state; returns the hidden state per frame.
///
/// `c = f*c + i*g`, `h = o*tanh(c)` with sigmoid `i`, `f`, `o` and tanh `g`.
pub fn local_recurrent_pass(input: &Array2<f64>, w: &WeightBundle) -> Result<HiddenSeq, TemporalError> {
    Lstm::new(w)?.run(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::TemporalConfig;

    fn cfg() -> TemporalConfig {
        TemporalConfig {
            input_dim: 3,
            hidden_size: 5,
            model_dim: 4,
            n_heads: 2,
            n_layers: 1,
            fused_dim: 4,
        }
    }

    #[test]
    fn zero_weights_give_exact_zeros() {
        let w = WeightBundle::zeros(cfg()).unwrap();
        let x = Array2::from_shape_fn((7, 3), |(t, c)| (t * 3 + c) as f64 - 4.0);
        let h = local_recurrent_pass(&x, &w).unwrap();
        assert_eq!(h.data.dim(), (7, 5));
        assert!(h.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_width_is_shape_mismatch() {
        let w = WeightBundle::zeros(cfg()).unwrap();
        assert!(matches!(
            local_recurrent_pass(&Array2::zeros((2, 4)), &w),
            Err(TemporalError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn default_width_is_256() {
        let c = TemporalConfig { input_dim: 3, ..TemporalConfig::default() };
        let w = WeightBundle::random(c, 0).unwrap();
        let h = local_recurrent_pass(&Array2::ones((4, 3)), &w).unwrap();
        assert_eq!(h.data.dim(), (4, 256));
    }
}
