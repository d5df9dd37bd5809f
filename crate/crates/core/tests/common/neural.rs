//! Scalar-loop references for the temporal stack.

use udm_core::temporal::WeightBundle;

type Mat = Vec<Vec<f64>>;

fn mat(w: &WeightBundle, name: &str) -> Mat {
    let t = w.get(name).unwrap();
    let cols = t.shape[1];
    (0..t.shape[0])
        .map(|r| (0..cols).map(|c| t.data[r * cols + c] as f64).collect())
        .collect()
}

fn vec(w: &WeightBundle, name: &str) -> Vec<f64> {
    w.get(name).unwrap().data.iter().map(|&v| v as f64).collect()
}

fn affine(x: &[f64], m: &Mat, b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for r in 0..m.len() {
        let mut acc = 0.0;
        for c in 0..x.len() {
            acc += m[r][c] * x[c];
        }
        out[r] = acc + b[r];
    }
    out
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// LSTM over `input`, one frame at a time.
pub fn lstm(input: &Mat, w: &WeightBundle) -> Mat {
    let hs = w.config().hidden_size;
    let gate = |g: &str| (mat(w, &format!("lstm.{g}.w_in")), mat(w, &format!("lstm.{g}.w_rec")), vec(w, &format!("lstm.{g}.bias")));
    let gates = [gate("i"), gate("f"), gate("g"), gate("o")];
    let mut h = vec![0.0; hs];
    let mut c = vec![0.0; hs];
    let mut out = Vec::new();
    for x in input {
        let mut pre = [vec![0.0; hs], vec![0.0; hs], vec![0.0; hs], vec![0.0; hs]];
        for (k, (wi, wr, b)) in gates.iter().enumerate() {
            for j in 0..hs {
                let mut acc = b[j];
                for (i, xi) in x.iter().enumerate() {
                    acc += wi[j][i] * xi;
                }
                for (i, hi) in h.iter().enumerate() {
                    acc += wr[j][i] * hi;
                }
                pre[k][j] = acc;
            }
        }
        for j in 0..hs {
            let i_g = sig(pre[0][j]);
            let f_g = sig(pre[1][j]);
            let g_g = pre[2][j].tanh();
            let o_g = sig(pre[3][j]);
            c[j] = f_g * c[j] + i_g * g_g;
            h[j] = o_g * c[j].tanh();
        }
        out.push(h.clone());
    }
    out
}

fn layer_norm(x: &[f64], scale: &[f64], shift: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = (var + 1e-5).sqrt();
    x.iter()
        .enumerate()
        .map(|(i, v)| (v - mean) / sd * scale[i] + shift[i])
        .collect()
}

/// One pre-norm layer, one head, with the final layer norm.
pub fn attention_one_layer_one_head(input: &Mat, w: &WeightBundle) -> Mat {
    let d = w.config().model_dim;
    let t_len = input.len();
    let mut x: Mat = input
        .iter()
        .map(|row| affine(row, &mat(w, "global.in_proj.weight"), &vec(w, "global.in_proj.bias")))
        .collect();
    for (t, row) in x.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let pair = (c / 2) as f64 * 2.0;
            let angle = t as f64 / 10000f64.powf(pair / d as f64);
            *v += if c % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    let p = "global.layer0";
    let normed: Mat = x
        .iter()
        .map(|r| layer_norm(r, &vec(w, &format!("{p}.ln1.scale")), &vec(w, &format!("{p}.ln1.shift"))))
        .collect();
    let proj = |n: &str| -> Mat {
        normed
            .iter()
            .map(|r| affine(r, &mat(w, &format!("{p}.attn.{n}.weight")), &vec(w, &format!("{p}.attn.{n}.bias"))))
            .collect()
    };
    let (q, k, v) = (proj("q"), proj("k"), proj("v"));
    for i in 0..t_len {
        let mut scores = vec![0.0; t_len];
        for j in 0..t_len {
            let mut dot = 0.0;
            for c in 0..d {
                dot += q[i][c] * k[j][c];
            }
            scores[j] = dot / (d as f64).sqrt();
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut ctx = vec![0.0; d];
        for j in 0..t_len {
            for c in 0..d {
                ctx[c] += exps[j] / total * v[j][c];
            }
        }
        let o = affine(&ctx, &mat(w, &format!("{p}.attn.o.weight")), &vec(w, &format!("{p}.attn.o.bias")));
        for c in 0..d {
            x[i][c] += o[c];
        }
    }
    for row in x.iter_mut() {
        let n = layer_norm(row, &vec(w, &format!("{p}.ln2.scale")), &vec(w, &format!("{p}.ln2.shift")));
        let hidden: Vec<f64> = affine(&n, &mat(w, &format!("{p}.ff.w1")), &vec(w, &format!("{p}.ff.b1")))
            .into_iter()
            .map(|v| if v > 0.0 { v } else { 0.0 })
            .collect();
        let ff = affine(&hidden, &mat(w, &format!("{p}.ff.w2")), &vec(w, &format!("{p}.ff.b2")));
        for c in 0..d {
            row[c] += ff[c];
        }
    }
    x.iter()
        .map(|r| layer_norm(r, &vec(w, "global.ln_out.scale"), &vec(w, "global.ln_out.shift")))
        .collect()
}

/// Per-frame matrix-vector product over the concatenated states.
pub fn fusion(local: &Mat, global: &Mat, w: &WeightBundle) -> Mat {
    let m = mat(w, "fusion.weight");
    let b = vec(w, "fusion.bias");
    local
        .iter()
        .zip(global)
        .map(|(l, g)| {
            let joined: Vec<f64> = l.iter().chain(g).copied().collect();
            affine(&joined, &m, &b)
        })
        .collect()
}
