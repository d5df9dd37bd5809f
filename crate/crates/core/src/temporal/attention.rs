use ndarray::{s, Array1, Array2, Axis};

use super::{HiddenSeq, Origin, TemporalError, WeightBundle};

const LN_EPS: f64 = 1e-5;

/// Attention probabilities, indexed `[layer][head]`, each `frames x frames`.
#[derive(Debug, Clone, Default)]
pub struct AttentionTrace {
    pub layers: Vec<Vec<Array2<f64>>>,
}

#[derive(Debug, Clone)]
struct Affine {
    /// Stored transposed so `apply` is a plain product.
    weight_t: Array2<f64>,
    bias: Array1<f64>,
}

impl Affine {
    fn load(w: &WeightBundle, weight: &str, bias: &str) -> Result<Self, TemporalError> {
        Ok(Self {
            weight_t: w.matrix(weight)?.reversed_axes().as_standard_layout().into_owned(),
            bias: w.vector(bias)?,
        })
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight_t) + &self.bias
    }
}

#[derive(Debug, Clone)]
struct Norm {
    scale: Array1<f64>,
    shift: Array1<f64>,
}

impl Norm {
    fn load(w: &WeightBundle, prefix: &str) -> Result<Self, TemporalError> {
        Ok(Self {
            scale: w.vector(&format!("{prefix}.scale"))?,
            shift: w.vector(&format!("{prefix}.shift"))?,
        })
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.outer_iter_mut() {
            let mean = row.mean().unwrap_or(0.0);
            let var = row.mapv(|v| (v - mean).powi(2)).mean().unwrap_or(0.0);
            let inv = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * inv);
            row.zip_mut_with(&self.scale, |v, s| *v *= s);
            row += &self.shift;
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Layer {
    ln1: Norm,
    q: Affine,
    k: Affine,
    v: Affine,
    o: Affine,
    ln2: Norm,
    ff1: Affine,
    ff2: Affine,
}

/// The attention stack with its weights converted once.
#[derive(Debug, Clone)]
pub(crate) struct AttentionStack {
    in_proj: Affine,
    layers: Vec<Layer>,
    ln_out: Norm,
    input_dim: usize,
    model_dim: usize,
    heads: usize,
}

/// Sinusoidal positions: even channels `sin(t / 10000^(2i/d))`, odd channels
/// the matching cosine.
pub(crate) fn positional_encoding(frames: usize, dim: usize) -> Array2<f64> {
    let denom: Vec<f64> = (0..dim).map(|c| 10000f64.powf((c - c % 2) as f64 / dim as f64)).collect();
    Array2::from_shape_fn((frames, dim), |(t, c)| {
        let angle = t as f64 / denom[c];
        if c % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl AttentionStack {
    pub(crate) fn new(w: &WeightBundle) -> Result<Self, TemporalError> {
        let cfg = *w.config();
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let p = format!("global.layer{l}");
                let proj = |n: &str| Affine::load(w, &format!("{p}.attn.{n}.weight"), &format!("{p}.attn.{n}.bias"));
                Ok(Layer {
                    ln1: Norm::load(w, &format!("{p}.ln1"))?,
                    q: proj("q")?,
                    k: proj("k")?,
                    v: proj("v")?,
                    o: proj("o")?,
                    ln2: Norm::load(w, &format!("{p}.ln2"))?,
                    ff1: Affine::load(w, &format!("{p}.ff.w1"), &format!("{p}.ff.b1"))?,
                    ff2: Affine::load(w, &format!("{p}.ff.w2"), &format!("{p}.ff.b2"))?,
                })
            })
            .collect::<Result<Vec<_>, TemporalError>>()?;
        Ok(Self {
            in_proj: Affine::load(w, "global.in_proj.weight", "global.in_proj.bias")?,
            layers,
            ln_out: Norm::load(w, "global.ln_out")?,
            input_dim: cfg.input_dim,
            model_dim: cfg.model_dim,
            heads: cfg.n_heads,
        })
    }

    pub(crate) fn run(
        &self,
        input: &Array2<f64>,
        introspect: bool,
    ) -> Result<(HiddenSeq, Option<AttentionTrace>), TemporalError> {
        if input.ncols() != self.input_dim {
            return Err(TemporalError::ShapeMismatch(format!(
                "attention input has {} channels, weights expect {}",
                input.ncols(),
                self.input_dim
            )));
        }
        let (frames, d, heads) = (input.nrows(), self.model_dim, self.heads);
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let mut x = self.in_proj.apply(input);
        x += &positional_encoding(frames, d);
        let mut trace = introspect.then(AttentionTrace::default);

        for layer in &self.layers {
            let normed = layer.ln1.apply(&x);
            let (q, k, v) = (layer.q.apply(&normed), layer.k.apply(&normed), layer.v.apply(&normed));
            let mut concat = Array2::zeros((frames, d));
            let mut layer_probs = Vec::new();
            for h in 0..heads {
                let cols = s![.., h * dh..(h + 1) * dh];
                let (qh, kh, vh) = (
                    q.slice(cols).to_owned(),
                    k.slice(cols).to_owned(),
                    v.slice(cols).to_owned(),
                );
                let mut scores = qh.dot(&kh.t());
                scores *= scale;
                softmax_rows(&mut scores);
                concat.slice_mut(cols).assign(&scores.dot(&vh));
                if trace.is_some() {
                    layer_probs.push(scores);
                }
            }
            if let Some(t) = trace.as_mut() {
                t.layers.push(layer_probs);
            }
            x += &layer.o.apply(&concat);

            let hidden = layer.ff1.apply(&layer.ln2.apply(&x)).mapv(|v| v.max(0.0));
            x += &layer.ff2.apply(&hidden);
        }
        let out = self.ln_out.apply(&x);
        debug_assert_eq!(out.len_of(Axis(1)), d);
        Ok((
            HiddenSeq {
                data: out,
                origin: Origin::Global,
            },
            trace,
        ))
    }
}

/// Pre-norm self-attention stack.
///
/// The input is projected to the model width and summed with sinusoidal
/// positions once; each layer then applies `x += MHA(LN(x))` and
/// `x += FF(LN(x))` with a ReLU feed-forward of width `4 * d`, and a final
/// layer norm closes the stack. With `introspect`, every layer's per-head
/// attention matrix is returned.
pub fn global_attention_pass(
    input: &Array2<f64>,
    w: &WeightBundle,
    introspect: bool,
) -> Result<(HiddenSeq, Option<AttentionTrace>), TemporalError> {
    AttentionStack::new(w)?.run(input, introspect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::TemporalConfig;

    fn cfg(layers: usize, heads: usize) -> TemporalConfig {
        TemporalConfig {
            input_dim: 3,
            hidden_size: 4,
            model_dim: 8,
            n_heads: heads,
            n_layers: layers,
            fused_dim: 4,
        }
    }

    #[test]
    fn single_frame_attention_is_one() {
        let w = WeightBundle::random(cfg(2, 2), 5).unwrap();
        let (_, trace) = global_attention_pass(&Array2::ones((1, 3)), &w, true).unwrap();
        for layer in trace.unwrap().layers {
            for head in layer {
                assert_eq!(head.dim(), (1, 1));
                assert_eq!(head[[0, 0]], 1.0);
            }
        }
    }

    #[test]
    fn no_trace_without_introspection() {
        let w = WeightBundle::random(cfg(1, 2), 5).unwrap();
        let (h, trace) = global_attention_pass(&Array2::ones((4, 3)), &w, false).unwrap();
        assert!(trace.is_none());
        assert_eq!(h.data.dim(), (4, 8));
    }

    #[test]
    fn positions_start_at_sin0_cos0() {
        let pe = positional_encoding(2, 4);
        assert_eq!(pe.row(0).to_vec(), vec![0.0, 1.0, 0.0, 1.0]);
        assert!((pe[[1, 0]] - 1f64.sin()).abs() < 1e-15);
    }
}
