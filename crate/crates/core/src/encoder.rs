//! Forward-only temporal encoder at toy scale.
//!
//! Each temporal block runs multi-head self-attention over the right and left
//! hand sequences concatenated along time, then cross-attention from each hand
//! into a global feature sequence, then a feed-forward layer that reduces the
//! channel count. Sub-blocks are pre-normalized; the two attention stages carry
//! residual connections. Sinusoidal positional encodings (by frame index, the
//! same for both hands) are optionally added at the start of every block.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LAYER_NORM_EPS: f64 = 1e-5;
pub const WEIGHTS_FORMAT: &str = "interhand-encoder";

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("{what}: expected {expected:?}, got {got:?}")]
    Dimension {
        what: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("weights file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn dim_err(what: impl Into<String>, expected: &[usize], got: &[usize]) -> EncoderError {
    EncoderError::Dimension {
        what: what.into(),
        expected: expected.to_vec(),
        got: got.to_vec(),
    }
}

fn expect_shape(what: &str, a: &[usize], expected: &[usize]) -> Result<(), EncoderError> {
    if a != expected {
        return Err(dim_err(what, expected, a));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTag {
    Right,
    Left,
    Global1,
    Global2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub tag: FeatureTag,
    /// `T x C`.
    pub data: Array2<f64>,
}

impl FeatureSequence {
    pub fn new(tag: FeatureTag, data: Array2<f64>) -> Result<Self, EncoderError> {
        if data.iter().any(|x| !x.is_finite()) {
            return Err(EncoderError::Invalid(format!("{tag:?} features contain non-finite entries")));
        }
        Ok(Self { tag, data })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }
}

/// Linear map `x W + b` applied row-wise, with `W` of shape `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    fn random(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound)),
            bias: Array1::from_shape_fn(fan_out, |_| rng.random_range(-0.1..0.1)),
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn out_dim(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

impl LayerNorm {
    fn identity(c: usize) -> Self {
        Self {
            gamma: Array1::ones(c),
            beta: Array1::zeros(c),
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            let mean = row.mean().unwrap_or(0.0);
            let var = row.mapv(|v| (v - mean).powi(2)).mean().unwrap_or(0.0);
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * inv);
            row *= &self.gamma;
            row += &self.beta;
        }
        out
    }
}

/// Multi-head attention. Queries come from a `C`-channel sequence, keys and
/// values from a `C_kv`-channel one; each head uses a contiguous `C/H` slice
/// of the projected channels.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub heads: usize,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

impl AttentionWeights {
    pub fn random(rng: &mut ChaCha8Rng, c: usize, c_kv: usize, heads: usize) -> Self {
        Self {
            heads,
            query: Linear::random(rng, c, c),
            key: Linear::random(rng, c_kv, c),
            value: Linear::random(rng, c_kv, c),
            output: Linear::random(rng, c, c),
        }
    }

    fn channels(&self) -> usize {
        self.query.in_dim()
    }

    fn validate(&self, what: &str) -> Result<(), EncoderError> {
        let c = self.channels();
        if self.heads == 0 || !c.is_multiple_of(self.heads) {
            return Err(EncoderError::Invalid(format!(
                "{what}: {c} channels are not divisible by {} heads",
                self.heads
            )));
        }
        let c_kv = self.key.in_dim();
        for (name, lin, i, o) in [
            ("query", &self.query, c, c),
            ("key", &self.key, c_kv, c),
            ("value", &self.value, c_kv, c),
            ("output", &self.output, c, c),
        ] {
            expect_shape(&format!("{what}.{name}.weight"), lin.weight.shape(), &[i, o])?;
            expect_shape(&format!("{what}.{name}.bias"), lin.bias.shape(), &[o])?;
        }
        Ok(())
    }
}

fn softmax_rows(mut scores: Array2<f64>) -> Array2<f64> {
    for mut row in scores.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    scores
}

/// Attention output (`T_q x C`) and one `T_q x T_kv` map per head.
fn multi_head_attention(
    queries: &ArrayView2<f64>,
    keys_values: &ArrayView2<f64>,
    w: &AttentionWeights,
) -> (Array2<f64>, Vec<Array2<f64>>) {
    let q = w.query.forward(queries);
    let k = w.key.forward(keys_values);
    let v = w.value.forward(keys_values);
    let d = w.channels() / w.heads;
    let scale = 1.0 / (d as f64).sqrt();
    let mut merged = Array2::zeros((queries.nrows(), w.channels()));
    let mut maps = Vec::with_capacity(w.heads);
    for h in 0..w.heads {
        let cols = s![.., h * d..(h + 1) * d];
        let attn = softmax_rows(q.slice(cols).dot(&k.slice(cols).t()) * scale);
        merged.slice_mut(cols).assign(&attn.dot(&v.slice(cols)));
        maps.push(attn);
    }
    (w.output.forward(&merged.view()), maps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhsaOutput {
    pub right: Array2<f64>,
    pub left: Array2<f64>,
    /// Per head, `2T x 2T`; rows and columns list right frames then left frames.
    pub attention: Vec<Array2<f64>>,
}

/// Self-attention over the time-concatenated `[right; left]` sequence, split
/// back into the two hands.
pub fn mhsa_forward(
    right: ArrayView2<f64>,
    left: ArrayView2<f64>,
    weights: &AttentionWeights,
) -> Result<MhsaOutput, EncoderError> {
    weights.validate("mhsa")?;
    let c = weights.channels();
    expect_shape("right features", right.shape(), &[right.nrows(), c])?;
    expect_shape("left features", left.shape(), &[right.nrows(), c])?;
    expect_shape("mhsa key input", &[weights.key.in_dim()], &[c])?;
    let t = right.nrows();
    let joined = concatenate(Axis(0), &[right, left]).expect("matching widths");
    let (out, attention) = multi_head_attention(&joined.view(), &joined.view(), weights);
    Ok(MhsaOutput {
        right: out.slice(s![..t, ..]).to_owned(),
        left: out.slice(s![t.., ..]).to_owned(),
        attention,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhcaOutput {
    pub output: Array2<f64>,
    /// Per head, `T x T` (hand frames by global frames).
    pub attention: Vec<Array2<f64>>,
}

/// Cross-attention with queries from the hand sequence and keys/values from
/// the global sequence.
pub fn mhca_forward(
    hand_seq: ArrayView2<f64>,
    global_seq: ArrayView2<f64>,
    weights: &AttentionWeights,
) -> Result<MhcaOutput, EncoderError> {
    weights.validate("mhca")?;
    let t = hand_seq.nrows();
    expect_shape("hand features", hand_seq.shape(), &[t, weights.channels()])?;
    expect_shape("global features", global_seq.shape(), &[t, weights.key.in_dim()])?;
    let (output, attention) = multi_head_attention(&hand_seq, &global_seq, weights);
    Ok(MhcaOutput { output, attention })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalBlockWeights {
    pub norm_self: LayerNorm,
    pub mhsa: AttentionWeights,
    pub norm_cross: LayerNorm,
    pub norm_global: LayerNorm,
    pub mhca_right: AttentionWeights,
    pub mhca_left: AttentionWeights,
    pub norm_ff: LayerNorm,
    pub ff_hidden: Linear,
    pub ff_out: Linear,
}

impl TemporalBlockWeights {
    pub fn random(rng: &mut ChaCha8Rng, c_in: usize, c_global: usize, c_out: usize, heads: usize) -> Self {
        Self {
            norm_self: LayerNorm::identity(c_in),
            mhsa: AttentionWeights::random(rng, c_in, c_in, heads),
            norm_cross: LayerNorm::identity(c_in),
            norm_global: LayerNorm::identity(c_global),
            mhca_right: AttentionWeights::random(rng, c_in, c_global, heads),
            mhca_left: AttentionWeights::random(rng, c_in, c_global, heads),
            norm_ff: LayerNorm::identity(c_in),
            ff_hidden: Linear::random(rng, c_in, c_in),
            ff_out: Linear::random(rng, c_in, c_out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.mhsa.channels()
    }

    pub fn global_dim(&self) -> usize {
        self.mhca_right.key.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.ff_out.out_dim()
    }

    fn validate(&self, what: &str) -> Result<(), EncoderError> {
        let (c, g, o) = (self.in_dim(), self.global_dim(), self.out_dim());
        self.mhsa.validate(&format!("{what}.mhsa"))?;
        self.mhca_right.validate(&format!("{what}.mhca_right"))?;
        self.mhca_left.validate(&format!("{what}.mhca_left"))?;
        expect_shape(&format!("{what}.mhsa.key"), &[self.mhsa.key.in_dim()], &[c])?;
        expect_shape(&format!("{what}.mhca channels"), &[self.mhca_right.channels(), self.mhca_left.channels()], &[c, c])?;
        expect_shape(&format!("{what}.mhca_left.key"), &[self.mhca_left.key.in_dim()], &[g])?;
        for (name, ln, n) in [
            ("norm_self", &self.norm_self, c),
            ("norm_cross", &self.norm_cross, c),
            ("norm_global", &self.norm_global, g),
            ("norm_ff", &self.norm_ff, c),
        ] {
            expect_shape(&format!("{what}.{name}.gamma"), ln.gamma.shape(), &[n])?;
            expect_shape(&format!("{what}.{name}.beta"), ln.beta.shape(), &[n])?;
        }
        expect_shape(&format!("{what}.ff_hidden.weight"), self.ff_hidden.weight.shape(), &[c, c])?;
        expect_shape(&format!("{what}.ff_hidden.bias"), self.ff_hidden.bias.shape(), &[c])?;
        expect_shape(&format!("{what}.ff_out.weight"), self.ff_out.weight.shape(), &[c, o])?;
        expect_shape(&format!("{what}.ff_out.bias"), self.ff_out.bias.shape(), &[o])?;
        if o >= c {
            return Err(EncoderError::Invalid(format!(
                "{what}: feed-forward output width {o} must be smaller than input width {c}"
            )));
        }
        Ok(())
    }
}

/// Sinusoidal encoding of frame index `t` over `c` channels.
pub fn positional_encoding(t_len: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((t_len, c), |(t, i)| {
        let freq = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / c as f64);
        let angle = t as f64 * freq;
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub block: usize,
    /// `mhsa`, `mhca_right` or `mhca_left`.
    pub stage: &'static str,
    pub head: usize,
    pub matrix: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutput {
    pub right: Array2<f64>,
    pub left: Array2<f64>,
    pub attention: Vec<AttentionMap>,
}

fn relu(x: Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

pub fn temporal_block_forward(
    right: ArrayView2<f64>,
    left: ArrayView2<f64>,
    global: ArrayView2<f64>,
    weights: &TemporalBlockWeights,
    positional: bool,
) -> Result<BlockOutput, EncoderError> {
    weights.validate("block")?;
    let (t, c) = (right.nrows(), weights.in_dim());
    expect_shape("right features", right.shape(), &[t, c])?;
    expect_shape("left features", left.shape(), &[t, c])?;
    expect_shape("global features", global.shape(), &[t, weights.global_dim()])?;

    let (mut r, mut l) = (right.to_owned(), left.to_owned());
    if positional {
        let pe = positional_encoding(t, c);
        r += &pe;
        l += &pe;
    }
    let sa = mhsa_forward(
        weights.norm_self.forward(&r.view()).view(),
        weights.norm_self.forward(&l.view()).view(),
        &weights.mhsa,
    )?;
    r += &sa.right;
    l += &sa.left;

    let g = weights.norm_global.forward(&global);
    let ca_r = mhca_forward(weights.norm_cross.forward(&r.view()).view(), g.view(), &weights.mhca_right)?;
    let ca_l = mhca_forward(weights.norm_cross.forward(&l.view()).view(), g.view(), &weights.mhca_left)?;
    r += &ca_r.output;
    l += &ca_l.output;

    let ff = |x: &Array2<f64>| {
        let h = relu(weights.ff_hidden.forward(&weights.norm_ff.forward(&x.view()).view()));
        weights.ff_out.forward(&h.view())
    };
    let mut attention = Vec::new();
    for (stage, maps) in [("mhsa", sa.attention), ("mhca_right", ca_r.attention), ("mhca_left", ca_l.attention)] {
        for (head, matrix) in maps.into_iter().enumerate() {
            attention.push(AttentionMap {
                block: 0,
                stage,
                head,
                matrix,
            });
        }
    }
    Ok(BlockOutput {
        right: ff(&r),
        left: ff(&l),
        attention,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Hand feature widths `C1 > C2 > C3`.
    pub dims: [usize; 3],
    /// Widths of the two global feature sequences.
    pub global_dims: [usize; 2],
    pub heads: usize,
    pub positional_encoding: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dims: [32, 16, 8],
            global_dims: [32, 16],
            heads: 4,
            positional_encoding: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderWeights {
    pub positional_encoding: bool,
    pub blocks: [TemporalBlockWeights; 2],
}

impl EncoderWeights {
    pub fn random(config: &EncoderConfig, seed: u64) -> Result<Self, EncoderError> {
        let [c1, c2, c3] = config.dims;
        if !(c1 > c2 && c2 > c3 && c3 > 0) {
            return Err(EncoderError::Invalid(format!(
                "encoder widths must strictly decrease, got {:?}",
                config.dims
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = Self {
            positional_encoding: config.positional_encoding,
            blocks: [
                TemporalBlockWeights::random(&mut rng, c1, config.global_dims[0], c2, config.heads),
                TemporalBlockWeights::random(&mut rng, c2, config.global_dims[1], c3, config.heads),
            ],
        };
        weights.validate()?;
        Ok(weights)
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        self.blocks[0].validate("block0")?;
        self.blocks[1].validate("block1")?;
        expect_shape("block1 input", &[self.blocks[1].in_dim()], &[self.blocks[0].out_dim()])
    }

    /// Makes the left-hand cross-attention of every block a copy of the right one.
    pub fn tie_cross_attention(&mut self) {
        for b in &mut self.blocks {
            b.mhca_left = b.mhca_right.clone();
        }
    }
}

/// The four per-frame feature sequences of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSet {
    pub right: Vec<Vec<f64>>,
    pub left: Vec<Vec<f64>>,
    pub global_1: Vec<Vec<f64>>,
    pub global_2: Vec<Vec<f64>>,
}

fn rows_to_array(tag: FeatureTag, rows: &[Vec<f64>]) -> Result<FeatureSequence, EncoderError> {
    let c = rows.first().map_or(0, Vec::len);
    if let Some((t, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != c) {
        return Err(dim_err(format!("{tag:?} features row {t}"), &[c], &[r.len()]));
    }
    let data = Array2::from_shape_vec((rows.len(), c), rows.concat()).expect("rectangular rows");
    FeatureSequence::new(tag, data)
}

fn array_to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl FeatureSet {
    /// Seeded standard-normal features matching `config` for `t_len` frames.
    pub fn random(config: &EncoderConfig, t_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = |c: usize| {
            let a = Array2::from_shape_fn((t_len, c), |_| rng.sample::<f64, _>(rand_distr::StandardNormal));
            array_to_rows(&a)
        };
        Self {
            right: gen(config.dims[0]),
            left: gen(config.dims[0]),
            global_1: gen(config.global_dims[0]),
            global_2: gen(config.global_dims[1]),
        }
    }

    pub fn sequences(&self) -> Result<[FeatureSequence; 4], EncoderError> {
        let seqs = [
            rows_to_array(FeatureTag::Right, &self.right)?,
            rows_to_array(FeatureTag::Left, &self.left)?,
            rows_to_array(FeatureTag::Global1, &self.global_1)?,
            rows_to_array(FeatureTag::Global2, &self.global_2)?,
        ];
        let t = seqs[0].len();
        for s in &seqs {
            expect_shape(&format!("{:?} frame count", s.tag), &[s.len()], &[t])?;
        }
        Ok(seqs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub right: Array2<f64>,
    pub left: Array2<f64>,
    pub attention: Vec<AttentionMap>,
}

/// Two stacked temporal blocks; block 1 attends to the first global sequence,
/// block 2 to the second.
pub fn encoder_forward(features: &[FeatureSequence; 4], weights: &EncoderWeights) -> Result<EncoderOutput, EncoderError> {
    weights.validate()?;
    let expected = [FeatureTag::Right, FeatureTag::Left, FeatureTag::Global1, FeatureTag::Global2];
    for (f, tag) in features.iter().zip(expected) {
        if f.tag != tag {
            return Err(EncoderError::Invalid(format!("expected {tag:?} features, found {:?}", f.tag)));
        }
    }
    let t = features[0].len();
    for f in features {
        expect_shape(&format!("{:?} frame count", f.tag), &[f.len()], &[t])?;
    }
    let mut right = features[0].data.clone();
    let mut left = features[1].data.clone();
    let mut attention = Vec::new();
    for (k, block) in weights.blocks.iter().enumerate() {
        let out = temporal_block_forward(
            right.view(),
            left.view(),
            features[2 + k].data.view(),
            block,
            weights.positional_encoding,
        )?;
        right = out.right;
        left = out.left;
        attention.extend(out.attention.into_iter().map(|m| AttentionMap { block: k, ..m }));
    }
    Ok(EncoderOutput { right, left, attention })
}

/// Comma-separated matrix under a `{prefix}0,{prefix}1,...` header row.
pub fn matrix_csv(m: &ArrayView2<f64>, column_prefix: &str) -> String {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("{column_prefix}{j}")).collect();
    let mut out = header.join(",") + "\n";
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.9}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDocument {
    format: String,
    version: u64,
    heads: usize,
    positional_encoding: bool,
    tensors: BTreeMap<String, Tensor>,
}

fn put_vec(map: &mut BTreeMap<String, Tensor>, name: String, v: &ArrayView1<f64>) {
    map.insert(
        name,
        Tensor {
            shape: vec![v.len()],
            data: v.to_vec(),
        },
    );
}

fn put_mat(map: &mut BTreeMap<String, Tensor>, name: String, m: &Array2<f64>) {
    map.insert(
        name,
        Tensor {
            shape: m.shape().to_vec(),
            data: m.iter().copied().collect(),
        },
    );
}

struct TensorReader(BTreeMap<String, Tensor>);

impl TensorReader {
    fn take(&mut self, name: &str, rank: usize) -> Result<Tensor, EncoderError> {
        let t = self
            .0
            .remove(name)
            .ok_or_else(|| EncoderError::Parse(format!("missing tensor {name}")))?;
        if t.shape.len() != rank || t.shape.iter().product::<usize>() != t.data.len() {
            return Err(EncoderError::Parse(format!(
                "tensor {name}: shape {:?} does not match {} values",
                t.shape,
                t.data.len()
            )));
        }
        Ok(t)
    }

    fn vec(&mut self, name: &str) -> Result<Array1<f64>, EncoderError> {
        Ok(Array1::from(self.take(name, 1)?.data))
    }

    fn mat(&mut self, name: &str) -> Result<Array2<f64>, EncoderError> {
        let t = self.take(name, 2)?;
        Ok(Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data).expect("checked length"))
    }

    fn linear(&mut self, name: &str) -> Result<Linear, EncoderError> {
        Ok(Linear {
            weight: self.mat(&format!("{name}.weight"))?,
            bias: self.vec(&format!("{name}.bias"))?,
        })
    }

    fn norm(&mut self, name: &str) -> Result<LayerNorm, EncoderError> {
        Ok(LayerNorm {
            gamma: self.vec(&format!("{name}.gamma"))?,
            beta: self.vec(&format!("{name}.beta"))?,
        })
    }

    fn attention(&mut self, name: &str, heads: usize) -> Result<AttentionWeights, EncoderError> {
        Ok(AttentionWeights {
            heads,
            query: self.linear(&format!("{name}.query"))?,
            key: self.linear(&format!("{name}.key"))?,
            value: self.linear(&format!("{name}.value"))?,
            output: self.linear(&format!("{name}.output"))?,
        })
    }

    fn block(&mut self, name: &str, heads: usize) -> Result<TemporalBlockWeights, EncoderError> {
        Ok(TemporalBlockWeights {
            norm_self: self.norm(&format!("{name}.norm_self"))?,
            mhsa: self.attention(&format!("{name}.mhsa"), heads)?,
            norm_cross: self.norm(&format!("{name}.norm_cross"))?,
            norm_global: self.norm(&format!("{name}.norm_global"))?,
            mhca_right: self.attention(&format!("{name}.mhca_right"), heads)?,
            mhca_left: self.attention(&format!("{name}.mhca_left"), heads)?,
            norm_ff: self.norm(&format!("{name}.norm_ff"))?,
            ff_hidden: self.linear(&format!("{name}.ff_hidden"))?,
            ff_out: self.linear(&format!("{name}.ff_out"))?,
        })
    }
}

impl EncoderWeights {
    fn tensors(&self) -> BTreeMap<String, Tensor> {
        let mut map = BTreeMap::new();
        let linear = |map: &mut BTreeMap<String, Tensor>, name: String, l: &Linear| {
            put_mat(map, format!("{name}.weight"), &l.weight);
            put_vec(map, format!("{name}.bias"), &l.bias.view());
        };
        for (k, b) in self.blocks.iter().enumerate() {
            let p = format!("block{k}");
            for (n, ln) in [
                ("norm_self", &b.norm_self),
                ("norm_cross", &b.norm_cross),
                ("norm_global", &b.norm_global),
                ("norm_ff", &b.norm_ff),
            ] {
                put_vec(&mut map, format!("{p}.{n}.gamma"), &ln.gamma.view());
                put_vec(&mut map, format!("{p}.{n}.beta"), &ln.beta.view());
            }
            for (n, a) in [("mhsa", &b.mhsa), ("mhca_right", &b.mhca_right), ("mhca_left", &b.mhca_left)] {
                linear(&mut map, format!("{p}.{n}.query"), &a.query);
                linear(&mut map, format!("{p}.{n}.key"), &a.key);
                linear(&mut map, format!("{p}.{n}.value"), &a.value);
                linear(&mut map, format!("{p}.{n}.output"), &a.output);
            }
            linear(&mut map, format!("{p}.ff_hidden"), &b.ff_hidden);
            linear(&mut map, format!("{p}.ff_out"), &b.ff_out);
        }
        map
    }

    pub fn to_json(&self) -> String {
        let doc = WeightsDocument {
            format: WEIGHTS_FORMAT.into(),
            version: 1,
            heads: self.blocks[0].mhsa.heads,
            positional_encoding: self.positional_encoding,
            tensors: self.tensors(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("weights serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EncoderError> {
        let doc: WeightsDocument = serde_json::from_str(text).map_err(|e| EncoderError::Parse(e.to_string()))?;
        if doc.format != WEIGHTS_FORMAT {
            return Err(EncoderError::Parse(format!("unexpected format {:?}", doc.format)));
        }
        let mut reader = TensorReader(doc.tensors);
        let blocks = [reader.block("block0", doc.heads)?, reader.block("block1", doc.heads)?];
        if let Some(extra) = reader.0.keys().next() {
            return Err(EncoderError::Parse(format!("unexpected tensor {extra}")));
        }
        let weights = Self {
            positional_encoding: doc.positional_encoding,
            blocks,
        };
        weights.validate()?;
        Ok(weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EncoderError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EncoderError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
