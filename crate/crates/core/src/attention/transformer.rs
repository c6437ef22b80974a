use rand::Rng;

use super::config::ModelConfig;
use super::mask::MaskPlan;
use super::AttentionError;
use crate::encoder::{EncoderDims, EncoderParams};
use crate::tensor::{Graph, ParamId, ParamStore, Tensor, Var, LAYER_NORM_EPS};

#[derive(Debug, Clone, Copy)]
pub struct HeadParams {
    pub w_q: ParamId,
    pub w_k: ParamId,
    pub w_v: ParamId,
}

/// One encoder layer: attention heads, output projection, feed-forward
/// block and two layer norms.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub heads: Vec<HeadParams>,
    pub w_o: ParamId,
    pub w_1: ParamId,
    pub b_1: ParamId,
    pub w_2: ParamId,
    pub b_2: ParamId,
    pub ln1_gain: ParamId,
    pub ln1_bias: ParamId,
    pub ln2_gain: ParamId,
    pub ln2_bias: ParamId,
}

impl LayerParams {
    fn init(store: &mut ParamStore, prefix: &str, cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let (d, dk, dff) = (cfg.d_model, cfg.d_k, cfg.d_ff);
        let heads = (0..cfg.heads)
            .map(|h| HeadParams {
                w_q: store.add_glorot(format!("{prefix}.head{h}.w_q"), d, dk, rng),
                w_k: store.add_glorot(format!("{prefix}.head{h}.w_k"), d, dk, rng),
                w_v: store.add_glorot(format!("{prefix}.head{h}.w_v"), d, dk, rng),
            })
            .collect();
        Self {
            heads,
            w_o: store.add_glorot(format!("{prefix}.w_o"), cfg.heads * dk, d, rng),
            w_1: store.add_glorot(format!("{prefix}.ffn.w_1"), d, dff, rng),
            b_1: store.add(format!("{prefix}.ffn.b_1"), Tensor::zeros(1, dff)),
            w_2: store.add_glorot(format!("{prefix}.ffn.w_2"), dff, d, rng),
            b_2: store.add(format!("{prefix}.ffn.b_2"), Tensor::zeros(1, d)),
            ln1_gain: store.add(format!("{prefix}.ln1.gain"), Tensor::filled(1, d, 1.0)),
            ln1_bias: store.add(format!("{prefix}.ln1.bias"), Tensor::zeros(1, d)),
            ln2_gain: store.add(format!("{prefix}.ln2.gain"), Tensor::filled(1, d, 1.0)),
            ln2_bias: store.add(format!("{prefix}.ln2.bias"), Tensor::zeros(1, d)),
        }
    }

    fn lookup(store: &ParamStore, prefix: &str, heads: usize) -> Option<Self> {
        let f = |name: &str| store.find(&format!("{prefix}.{name}"));
        let heads = (0..heads)
            .map(|h| {
                Some(HeadParams {
                    w_q: f(&format!("head{h}.w_q"))?,
                    w_k: f(&format!("head{h}.w_k"))?,
                    w_v: f(&format!("head{h}.w_v"))?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            heads,
            w_o: f("w_o")?,
            w_1: f("ffn.w_1")?,
            b_1: f("ffn.b_1")?,
            w_2: f("ffn.w_2")?,
            b_2: f("ffn.b_2")?,
            ln1_gain: f("ln1.gain")?,
            ln1_bias: f("ln1.bias")?,
            ln2_gain: f("ln2.gain")?,
            ln2_bias: f("ln2.bias")?,
        })
    }
}

/// Handles of every learned tensor of the classifier.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub layers: Vec<LayerParams>,
    /// `d_model x P` output projection.
    pub w_out: ParamId,
    pub b_out: ParamId,
}

impl ModelParams {
    pub fn init(store: &mut ParamStore, cfg: &ModelConfig, vocab_len: usize, rng: &mut impl Rng) -> Self {
        let encoder = EncoderParams::init(
            store,
            EncoderDims { vocab: vocab_len, embed: cfg.embed_dim, hidden: cfg.d_model },
            rng,
        );
        let layers = (0..cfg.layers).map(|l| LayerParams::init(store, &format!("layer{l}"), cfg, rng)).collect();
        let w_out = store.add_glorot("head.w_out", cfg.d_model, cfg.num_classes, rng);
        let b_out = store.add("head.b_out", Tensor::zeros(1, cfg.num_classes));
        Self { encoder, layers, w_out, b_out }
    }

    /// Recover handles by name from a loaded store.
    pub fn lookup(store: &ParamStore, cfg: &ModelConfig) -> Option<Self> {
        Some(Self {
            encoder: EncoderParams::lookup(store)?,
            layers: (0..cfg.layers)
                .map(|l| LayerParams::lookup(store, &format!("layer{l}"), cfg.heads))
                .collect::<Option<Vec<_>>>()?,
            w_out: store.find("head.w_out")?,
            b_out: store.find("head.b_out")?,
        })
    }
}

/// `PE(pos, 2i) = sin(pos / 10000^(2i/d))`, `PE(pos, 2i+1) = cos(same)`.
pub fn positional_encoding(n: usize, d_model: usize) -> Result<Tensor, AttentionError> {
    positional_rows(&(0..n).collect::<Vec<_>>(), d_model)
}

/// Positional encoding of an explicit position per row.
pub fn positional_rows(positions: &[usize], d_model: usize) -> Result<Tensor, AttentionError> {
    if !d_model.is_multiple_of(2) {
        return Err(AttentionError::OddDimension(d_model));
    }
    let mut out = Tensor::zeros(positions.len(), d_model);
    for (r, &pos) in positions.iter().enumerate() {
        let row = out.row_mut(r);
        for i in 0..d_model / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            row[2 * i] = angle.sin();
            row[2 * i + 1] = angle.cos();
        }
    }
    Ok(out)
}

/// Result of one attention head. `weights` is the softmax node on the
/// dense path and the fused kernel on the sparse path.
#[derive(Debug, Clone, Copy)]
pub struct AttentionOutput {
    pub out: Var,
    weights: Var,
    sparse: bool,
}

impl AttentionOutput {
    /// `N x N` attention weights with zeros at disallowed pairs.
    pub fn weights(&self, g: &Graph) -> Tensor {
        if self.sparse {
            g.sparse_attention_weights(self.weights).expect("sparse attention node")
        } else {
            g.value(self.weights).clone()
        }
    }
}

/// Scaled dot-product attention restricted to the pairs allowed by `plan`.
pub fn masked_attention(g: &mut Graph, q: Var, k: Var, v: Var, plan: &MaskPlan) -> Result<AttentionOutput, AttentionError> {
    let scale = 1.0 / (g.shape(q)[1] as f64).sqrt();
    match plan {
        MaskPlan::Sparse(pattern) => {
            let out = g.sparse_attention(q, k, v, pattern.clone(), scale)?;
            Ok(AttentionOutput { out, weights: out, sparse: true })
        }
        MaskPlan::Dense(mask) => {
            if g.shape(q)[1] != g.shape(k)[1] {
                return Err(crate::tensor::TensorError::ShapeMismatch {
                    op: "masked_attention",
                    expected: vec![g.shape(k)[0], g.shape(q)[1]],
                    got: g.shape(k).to_vec(),
                }
                .into());
            }
            let kt = g.transpose(k);
            let raw = g.matmul(q, kt)?;
            let scores = g.scale(raw, scale);
            let weights = g.softmax_rows_masked(scores, mask.clone())?;
            let out = g.matmul(weights, v)?;
            Ok(AttentionOutput { out, weights, sparse: false })
        }
    }
}

/// Per-head projections and masked attention, concatenated and projected
/// by `W^O`.
pub fn multi_head(
    g: &mut Graph,
    store: &ParamStore,
    x: Var,
    layer: &LayerParams,
    plan: &MaskPlan,
) -> Result<(Var, Vec<AttentionOutput>), AttentionError> {
    let mut heads = Vec::with_capacity(layer.heads.len());
    for h in &layer.heads {
        let (wq, wk, wv) = (g.param(store, h.w_q), g.param(store, h.w_k), g.param(store, h.w_v));
        let q = g.matmul(x, wq)?;
        let k = g.matmul(x, wk)?;
        let v = g.matmul(x, wv)?;
        heads.push(masked_attention(g, q, k, v, plan)?);
    }
    let outs: Vec<Var> = heads.iter().map(|h| h.out).collect();
    let cat = if outs.len() == 1 { outs[0] } else { g.concat_cols(&outs)? };
    let w_o = g.param(store, layer.w_o);
    Ok((g.matmul(cat, w_o)?, heads))
}

/// `LN(X + MH(X))` followed by `LN(. + FFN(.))`.
pub fn encoder_layer(
    g: &mut Graph,
    store: &ParamStore,
    x: Var,
    layer: &LayerParams,
    plan: &MaskPlan,
) -> Result<(Var, Vec<AttentionOutput>), AttentionError> {
    let (mh, heads) = multi_head(g, store, x, layer, plan)?;
    let res1 = g.add(x, mh)?;
    let (g1, b1) = (g.param(store, layer.ln1_gain), g.param(store, layer.ln1_bias));
    let h = g.layer_norm(res1, g1, b1, LAYER_NORM_EPS)?;

    let (w1, bias1, w2, bias2) = (
        g.param(store, layer.w_1),
        g.param(store, layer.b_1),
        g.param(store, layer.w_2),
        g.param(store, layer.b_2),
    );
    let a = g.matmul(h, w1)?;
    let a = g.add(a, bias1)?;
    let a = g.relu(a);
    let f = g.matmul(a, w2)?;
    let f = g.add(f, bias2)?;

    let res2 = g.add(h, f)?;
    let (g2, b2) = (g.param(store, layer.ln2_gain), g.param(store, layer.ln2_bias));
    Ok((g.layer_norm(res2, g2, b2, LAYER_NORM_EPS)?, heads))
}

#[derive(Debug, Clone)]
pub struct StackOutput {
    pub out: Var,
    /// `attention[layer][head]`.
    pub attention: Vec<Vec<AttentionOutput>>,
}

/// Adds the positional encoding of `positions` to `e` once, then applies
/// every layer in order.
pub fn encoder_stack(
    g: &mut Graph,
    store: &ParamStore,
    params: &ModelParams,
    e: Var,
    plan: &MaskPlan,
    positions: &[usize],
) -> Result<StackOutput, AttentionError> {
    let [n, d] = g.shape(e);
    if positions.len() != n || plan.len() != n {
        return Err(crate::tensor::TensorError::ShapeMismatch {
            op: "encoder_stack",
            expected: vec![n, d],
            got: vec![positions.len().min(plan.len()), d],
        }
        .into());
    }
    let pe = g.leaf(positional_rows(positions, d)?);
    let mut x = g.add(e, pe)?;
    let mut attention = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (y, heads) = encoder_layer(g, store, x, layer, plan)?;
        x = y;
        attention.push(heads);
    }
    Ok(StackOutput { out: x, attention })
}

/// Max-pool each row range of the stack output and apply the linear head:
/// one row of `P` logits per segment.
pub fn classify(
    g: &mut Graph,
    store: &ParamStore,
    params: &ModelParams,
    stack_out: Var,
    segments: &[(usize, usize)],
) -> Result<Var, AttentionError> {
    if segments.is_empty() || segments.iter().any(|&(s, e)| s >= e) {
        return Err(AttentionError::ZeroLength);
    }
    let v = g.segment_max_rows(stack_out, segments)?;
    let (w, b) = (g.param(store, params.w_out), g.param(store, params.b_out));
    let logits = g.matmul(v, w)?;
    Ok(g.add(logits, b)?)
}
