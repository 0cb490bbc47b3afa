//! Desk-scale dual encoder trained with a mixed contrastive objective.
//!
//! Text is featurized by hashing unigrams and bigrams into a fixed number
//! of buckets, then mapped affinely and normalized. Videos are precomputed
//! feature vectors under their own affine map. A projection head maps the
//! embedding of each item's alternative ("10k") caption into a space where
//! it is contrasted against both the ground-truth text and the video.
//!
//! ```text
//! L = itc(f_t, f_v) + alpha_t2t * nce(f_10k, f_gt) + alpha_proj * nce(f_10k, f_v)
//! ```
//!
//! where `f_t` is the ground-truth text for most items and the sampled
//! alternative caption for a fixed fraction `eta` of each batch.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::augment::{rewrite_for_level, CaptionPool, Provenance, ReadingLevel};
use crate::corpus::{full_paragraph, Dataset, EventSegment, Video};
use crate::embed::EmbeddingTable;
use crate::hash::Fnv1a;
use crate::math::{self, normalize_backward};
use crate::retrieval::{group_report, recall_from_ranks, GroupReport, Metrics, RetrievalError};
use crate::rng::{self, Rng};
use crate::textstats::tokenize;
use crate::CaptionKind;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    InvalidConfig(String),
    MissingPool(String),
    MissingFeatures(String),
    NonFiniteLoss { epoch: usize },
    Retrieval(RetrievalError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InvalidConfig(m) => write!(f, "invalid training config: {m}"),
            TrainError::MissingPool(id) => write!(f, "no caption pool for video {id:?}"),
            TrainError::MissingFeatures(id) => write!(f, "no video features for {id:?}"),
            TrainError::NonFiniteLoss { epoch } => write!(f, "loss became non-finite in epoch {epoch}"),
            TrainError::Retrieval(e) => write!(f, "evaluation failed: {e}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<RetrievalError> for TrainError {
    fn from(e: RetrievalError) -> Self {
        TrainError::Retrieval(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub hash_buckets: usize,
    pub embed: usize,
    pub video_feat: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            hash_buckets: 1 << 15,
            embed: 32,
            video_feat: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Fraction of each batch whose primary text is the sampled alternative
    /// caption.
    pub eta: f64,
    pub alpha_t2t: f64,
    pub alpha_proj: f64,
    /// Softmax temperature of every contrastive term. Not learned.
    pub tau: f64,
    pub lr: f64,
    pub batch_n: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Kinds the alternative caption is drawn from.
    pub allowed_kinds: Vec<CaptionKind>,
    pub dims: Dims,
    /// Hash adjacent-word pairs as well as single words.
    pub bigrams: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 0.75,
            alpha_t2t: 0.1,
            alpha_proj: 0.1,
            tau: 0.07,
            lr: 1e-3,
            batch_n: 32,
            epochs: 10,
            seed: 0,
            allowed_kinds: vec![
                CaptionKind::E,
                CaptionKind::I,
                CaptionKind::U,
                CaptionKind::Se,
                CaptionKind::Si,
                CaptionKind::Su,
            ],
            dims: Dims::default(),
            bigrams: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.eta) {
            return bad("eta must lie in [0, 1]");
        }
        if !(self.alpha_t2t >= 0.0 && self.alpha_proj >= 0.0) {
            return bad("loss weights must be non-negative");
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return bad("tau must be positive");
        }
        if self.batch_n < 2 {
            return bad("batch_n must be at least 2");
        }
        if self.allowed_kinds.is_empty() {
            return bad("allowed_kinds must not be empty");
        }
        if self.allowed_kinds.iter().any(|k| !CaptionKind::SAMPLEABLE.contains(k)) {
            return bad("allowed_kinds may not contain the full caption");
        }
        if self.dims.hash_buckets == 0 || self.dims.embed == 0 || self.dims.video_feat == 0 {
            return bad("dims must be positive");
        }
        Ok(())
    }

    /// Number of mixed slots in a batch of `n`, rounding halves up.
    pub fn mixed_count(&self, n: usize) -> usize {
        libm::floor(self.eta * n as f64 + 0.5) as usize
    }
}

/// `rows x cols` weight matrix (row-major) plus bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub rows: usize,
    pub cols: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Linear {
            rows,
            cols,
            weight: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    fn random(rows: usize, cols: usize, std: f64, bias_std: f64, rng: &mut Rng) -> Self {
        Linear {
            rows,
            cols,
            weight: (0..rows * cols).map(|_| std * rng::normal(rng)).collect(),
            bias: (0..rows).map(|_| bias_std * rng::normal(rng)).collect(),
        }
    }

    fn forward_dense(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.bias[r] + math::dot(&self.weight[r * self.cols..(r + 1) * self.cols], x))
            .collect()
    }

    fn forward_sparse(&self, x: &[(usize, f64)]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let row = &self.weight[r * self.cols..(r + 1) * self.cols];
                self.bias[r] + x.iter().map(|&(c, v)| row[c] * v).sum::<f64>()
            })
            .collect()
    }

    /// `W^T dz`
    fn backward_input(&self, dz: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &g) in dz.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(&self.weight[r * self.cols..(r + 1) * self.cols]) {
                *o += g * w;
            }
        }
        out
    }

    fn accumulate_dense(&mut self, dz: &[f64], x: &[f64]) {
        for (r, &g) in dz.iter().enumerate() {
            self.bias[r] += g;
            for (w, &xi) in self.weight[r * self.cols..(r + 1) * self.cols].iter_mut().zip(x) {
                *w += g * xi;
            }
        }
    }

    fn accumulate_sparse(&mut self, dz: &[f64], x: &[(usize, f64)]) {
        for (r, &g) in dz.iter().enumerate() {
            self.bias[r] += g;
            let row = &mut self.weight[r * self.cols..(r + 1) * self.cols];
            for &(c, v) in x {
                row[c] += g * v;
            }
        }
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// `embed x hash_buckets`
    pub text: Linear,
    /// `embed x video_feat`
    pub video: Linear,
    /// `embed x embed`
    pub proj: Linear,
}

impl ModelParams {
    pub fn init(dims: &Dims, rng: &mut Rng) -> Self {
        let d = dims.embed;
        ModelParams {
            text: Linear::random(d, dims.hash_buckets, 0.1, 0.01, rng),
            video: Linear::random(d, dims.video_feat, 0.1, 0.0, rng),
            proj: Linear::random(d, d, 1.0 / libm::sqrt(d as f64), 0.0, rng),
        }
    }

    pub fn zeros_like(other: &ModelParams) -> Self {
        ModelParams {
            text: Linear::zeros(other.text.rows, other.text.cols),
            video: Linear::zeros(other.video.rows, other.video.cols),
            proj: Linear::zeros(other.proj.rows, other.proj.cols),
        }
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        let [a, b] = self.text.tensors_mut();
        let [c, d] = self.video.tensors_mut();
        let [e, f] = self.proj.tensors_mut();
        [a, b, c, d, e, f]
    }

    pub fn is_finite(&self) -> bool {
        [&self.text, &self.video, &self.proj]
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    pub fn dims(&self) -> Dims {
        Dims {
            hash_buckets: self.text.cols,
            embed: self.text.rows,
            video_feat: self.video.cols,
        }
    }
}

/// Hashed bag of words (and optionally adjacent pairs), L2-normalized.
/// Entries are sorted by bucket.
pub fn featurize(tokens: &[String], buckets: usize, bigrams: bool) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    let bucket = |parts: &[&str]| {
        let mut h = Fnv1a::default();
        for (k, p) in parts.iter().enumerate() {
            if k > 0 {
                h.write(&[0x1f]);
            }
            h.write(p.as_bytes());
        }
        (h.finish() % buckets as u64) as usize
    };
    for t in tokens {
        *counts.entry(bucket(&[t])).or_insert(0.0) += 1.0;
    }
    if bigrams {
        for w in tokens.windows(2) {
            *counts.entry(bucket(&[&w[0], &w[1]])).or_insert(0.0) += 1.0;
        }
    }
    let norm = libm::sqrt(counts.values().map(|c| c * c).sum::<f64>());
    counts.into_iter().map(|(b, c)| (b, c / norm)).collect()
}

struct Encoded<X> {
    input: X,
    y: Vec<f64>,
    z_norm: f64,
}

fn finish(z: Vec<f64>) -> (Vec<f64>, f64) {
    let mut y = z;
    let n = math::normalize_in_place(&mut y);
    (y, n)
}

fn encode_text_cached(tokens: &[String], params: &ModelParams, bigrams: bool) -> Encoded<Vec<(usize, f64)>> {
    let x = featurize(tokens, params.text.cols, bigrams);
    let (y, z_norm) = finish(params.text.forward_sparse(&x));
    Encoded { input: x, y, z_norm }
}

fn encode_video_cached(features: &[f64], params: &ModelParams) -> Encoded<Vec<f64>> {
    let x = math::normalized(features);
    let (y, z_norm) = finish(params.video.forward_dense(&x));
    Encoded { input: x, y, z_norm }
}

/// Unit-length text embedding. With no tokens this is the direction of
/// the text bias.
pub fn encode_text(tokens: &[String], params: &ModelParams, bigrams: bool) -> Vec<f64> {
    encode_text_cached(tokens, params, bigrams).y
}

/// Unit-length video embedding.
pub fn encode_video(features: &[f64], params: &ModelParams) -> Vec<f64> {
    encode_video_cached(features, params).y
}

/// Bidirectional InfoNCE over matched rows of `a` and `b`, with gradients
/// with respect to both.
pub fn info_nce(a: &[Vec<f64>], b: &[Vec<f64>], tau: f64) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = a.len();
    assert_eq!(n, b.len());
    let d = a.first().map_or(0, Vec::len);
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            s[i * n + j] = math::dot(&a[i], &b[j]) / tau;
        }
    }
    let mut row_p = vec![0.0; n * n];
    let mut col_p = vec![0.0; n * n];
    let mut row_loss = 0.0;
    let mut col_loss = 0.0;
    for i in 0..n {
        let r = &s[i * n..(i + 1) * n];
        row_loss += math::log_sum_exp(r.iter().copied()) - r[i];
        math::softmax_into(r, &mut row_p[i * n..(i + 1) * n]);
    }
    let mut col = vec![0.0; n];
    let mut col_sm = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = s[i * n + j];
        }
        col_loss += math::log_sum_exp(col.iter().copied()) - col[j];
        math::softmax_into(&col, &mut col_sm);
        for i in 0..n {
            col_p[i * n + j] = col_sm[i];
        }
    }
    let loss = 0.5 * (row_loss / n as f64 + col_loss / n as f64);

    let scale = 0.5 / n as f64 / tau;
    let mut da = vec![vec![0.0; d]; n];
    let mut db = vec![vec![0.0; d]; n];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 2.0 } else { 0.0 };
            let g = scale * (row_p[i * n + j] + col_p[i * n + j] - delta);
            if g == 0.0 {
                continue;
            }
            for k in 0..d {
                da[i][k] += g * b[j][k];
                db[j][k] += g * a[i][k];
            }
        }
    }
    (loss, da, db)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub video_id: String,
    pub gt_tokens: Vec<String>,
    pub tenk_kind: CaptionKind,
    pub tenk_tokens: Vec<String>,
    pub video_features: Vec<f64>,
    /// Primary text is the alternative caption rather than the paragraph.
    pub mixed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub items: Vec<BatchItem>,
}

impl Batch {
    pub fn mixed_count(&self) -> usize {
        self.items.iter().filter(|i| i.mixed).count()
    }
}

/// One training video: its tokenized captions and features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub video_id: String,
    pub captions: BTreeMap<CaptionKind, Vec<String>>,
    pub features: Vec<f64>,
}

impl TrainExample {
    pub fn tokens(&self, kind: CaptionKind) -> &[String] {
        self.captions.get(&kind).map_or(&[], Vec::as_slice)
    }
}

/// Joins videos with their pools and features. Features are looked up by
/// `feature_ref` when present, otherwise by video id.
pub fn build_examples(
    dataset: &Dataset,
    pools: &[CaptionPool],
    features: &EmbeddingTable,
) -> Result<Vec<TrainExample>, TrainError> {
    let by_id: BTreeMap<&str, &CaptionPool> = pools.iter().map(|p| (p.video_id.as_str(), p)).collect();
    dataset
        .videos
        .iter()
        .map(|v| {
            let pool = by_id
                .get(v.video_id.as_str())
                .ok_or_else(|| TrainError::MissingPool(v.video_id.clone()))?;
            let key = v.feature_ref.as_deref().unwrap_or(&v.video_id);
            let feats = features
                .get(key)
                .ok_or_else(|| TrainError::MissingFeatures(v.video_id.clone()))?;
            let mut captions: BTreeMap<CaptionKind, Vec<String>> = pool
                .captions
                .iter()
                .map(|(&k, t)| (k, tokenize(t)))
                .collect();
            captions.insert(CaptionKind::F, tokenize(&full_paragraph(v)));
            Ok(TrainExample {
                video_id: v.video_id.clone(),
                captions,
                features: feats.iter().map(|&x| f64::from(x)).collect(),
            })
        })
        .collect()
}

/// Samples one alternative caption per item from `allowed_kinds` and marks
/// exactly `round(eta * n)` uniformly chosen items as mixed.
pub fn mix_batch(examples: &[&TrainExample], config: &TrainConfig, rng: &mut Rng) -> Result<Batch, TrainError> {
    if config.allowed_kinds.is_empty() {
        return Err(TrainError::InvalidConfig("allowed_kinds must not be empty".into()));
    }
    let n = examples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mixed = vec![false; n];
    for &k in order.iter().take(config.mixed_count(n)) {
        mixed[k] = true;
    }
    let mut items = Vec::with_capacity(n);
    for (ex, mixed) in examples.iter().zip(mixed) {
        let kind = config.allowed_kinds[rng.random_range(0..config.allowed_kinds.len())];
        let tenk = ex
            .captions
            .get(&kind)
            .ok_or_else(|| TrainError::MissingPool(ex.video_id.clone()))?;
        items.push(BatchItem {
            video_id: ex.video_id.clone(),
            gt_tokens: ex.tokens(CaptionKind::F).to_vec(),
            tenk_kind: kind,
            tenk_tokens: tenk.clone(),
            video_features: ex.features.clone(),
            mixed,
        });
    }
    Ok(Batch { items })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub itc: f64,
    pub t2t: f64,
    pub proj: f64,
}

fn add_scaled(acc: &mut [f64], g: &[f64], s: f64) {
    for (a, x) in acc.iter_mut().zip(g) {
        *a += s * x;
    }
}

/// The mixed objective and its gradient with respect to every parameter.
/// Terms with a zero weight are neither added nor differentiated.
pub fn combined_loss(batch: &Batch, params: &ModelParams, config: &TrainConfig) -> (LossParts, ModelParams) {
    let n = batch.items.len();
    let d = params.text.rows;
    let gt: Vec<_> = batch
        .items
        .iter()
        .map(|it| encode_text_cached(&it.gt_tokens, params, config.bigrams))
        .collect();
    let tenk: Vec<_> = batch
        .items
        .iter()
        .map(|it| encode_text_cached(&it.tenk_tokens, params, config.bigrams))
        .collect();
    let vid: Vec<_> = batch
        .items
        .iter()
        .map(|it| encode_video_cached(&it.video_features, params))
        .collect();
    let projected: Vec<(Vec<f64>, f64)> = tenk.iter().map(|t| finish(params.proj.forward_dense(&t.y))).collect();

    let f_t: Vec<Vec<f64>> = batch
        .items
        .iter()
        .enumerate()
        .map(|(i, it)| if it.mixed { tenk[i].y.clone() } else { gt[i].y.clone() })
        .collect();
    let f_gt: Vec<Vec<f64>> = gt.iter().map(|e| e.y.clone()).collect();
    let f_v: Vec<Vec<f64>> = vid.iter().map(|e| e.y.clone()).collect();
    let f_10k: Vec<Vec<f64>> = projected.iter().map(|p| p.0.clone()).collect();

    let (itc, d_ft, d_fv_itc) = info_nce(&f_t, &f_v, config.tau);
    let (t2t, d_10k_t2t, d_gt_t2t) = info_nce(&f_10k, &f_gt, config.tau);
    let (proj, d_10k_proj, d_fv_proj) = info_nce(&f_10k, &f_v, config.tau);

    let mut total = itc;
    if config.alpha_t2t != 0.0 {
        total += config.alpha_t2t * t2t;
    }
    if config.alpha_proj != 0.0 {
        total += config.alpha_proj * proj;
    }

    let mut dy_gt = vec![vec![0.0; d]; n];
    let mut dy_tenk = vec![vec![0.0; d]; n];
    let mut dy_v = d_fv_itc;
    let mut dy_10k = vec![vec![0.0; d]; n];
    for (i, it) in batch.items.iter().enumerate() {
        if it.mixed {
            add_scaled(&mut dy_tenk[i], &d_ft[i], 1.0);
        } else {
            add_scaled(&mut dy_gt[i], &d_ft[i], 1.0);
        }
        if config.alpha_t2t != 0.0 {
            add_scaled(&mut dy_10k[i], &d_10k_t2t[i], config.alpha_t2t);
            add_scaled(&mut dy_gt[i], &d_gt_t2t[i], config.alpha_t2t);
        }
        if config.alpha_proj != 0.0 {
            add_scaled(&mut dy_10k[i], &d_10k_proj[i], config.alpha_proj);
            add_scaled(&mut dy_v[i], &d_fv_proj[i], config.alpha_proj);
        }
    }

    let mut grads = ModelParams::zeros_like(params);
    let with_proj = config.alpha_t2t != 0.0 || config.alpha_proj != 0.0;
    for i in 0..n {
        if with_proj {
            let dz = normalize_backward(&projected[i].0, projected[i].1, &dy_10k[i]);
            grads.proj.accumulate_dense(&dz, &tenk[i].y);
            add_scaled(&mut dy_tenk[i], &params.proj.backward_input(&dz), 1.0);
        }
        let dz = normalize_backward(&gt[i].y, gt[i].z_norm, &dy_gt[i]);
        grads.text.accumulate_sparse(&dz, &gt[i].input);
        let dz = normalize_backward(&tenk[i].y, tenk[i].z_norm, &dy_tenk[i]);
        grads.text.accumulate_sparse(&dz, &tenk[i].input);
        let dz = normalize_backward(&vid[i].y, vid[i].z_norm, &dy_v[i]);
        grads.video.accumulate_dense(&dz, &vid[i].input);
    }

    (LossParts { total, itc, t2t, proj }, grads)
}

/// Adam with the usual defaults.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: ModelParams,
    v: ModelParams,
}

impl Adam {
    pub fn new(lr: f64, like: &ModelParams) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: ModelParams::zeros_like(like),
            v: ModelParams::zeros_like(like),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &mut ModelParams) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - libm::pow(b1, f64::from(self.step));
        let c2 = 1.0 - libm::pow(b2, f64::from(self.step));
        let lr = self.lr;
        let eps = self.eps;
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors_mut())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for k in 0..p.len() {
                let gk = g[k];
                let mk = b1 * m[k] + (1.0 - b1) * gk;
                let vk = b2 * v[k] + (1.0 - b2) * gk * gk;
                m[k] = mk;
                v[k] = vk;
                p[k] -= lr * (mk / c1) / (libm::sqrt(vk / c2) + eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub itc: f64,
    pub t2t: f64,
    pub proj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub seed: u64,
    /// Gradients of the text-to-text term flow into the ground-truth
    /// embedding as well as the projected one.
    pub t2t_grad_to_gt: bool,
    pub epochs: Vec<EpochStats>,
}

/// Trains from a fresh initialization. Deterministic for a given seed.
pub fn fit(examples: &[TrainExample], config: &TrainConfig) -> Result<(ModelParams, History), TrainError> {
    config.validate()?;
    if examples.len() < config.batch_n {
        return Err(TrainError::InvalidConfig(format!(
            "{} examples cannot fill a batch of {}",
            examples.len(),
            config.batch_n
        )));
    }
    if let Some(ex) = examples.iter().find(|e| e.features.len() != config.dims.video_feat) {
        return Err(TrainError::InvalidConfig(format!(
            "video {:?} has {} features, config expects {}",
            ex.video_id,
            ex.features.len(),
            config.dims.video_feat
        )));
    }
    let mut rng = rng::seeded(config.seed);
    let mut params = ModelParams::init(&config.dims, &mut rng);
    let mut adam = Adam::new(config.lr, &params);
    let mut history = History {
        seed: config.seed,
        t2t_grad_to_gt: true,
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut acc = LossParts::default();
        let mut steps = 0usize;
        for chunk in order.chunks_exact(config.batch_n) {
            let refs: Vec<&TrainExample> = chunk.iter().map(|&k| &examples[k]).collect();
            let batch = mix_batch(&refs, config, &mut rng)?;
            let (loss, mut grads) = combined_loss(&batch, &params, config);
            if !loss.total.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch });
            }
            adam.step(&mut params, &mut grads);
            acc.total += loss.total;
            acc.itc += loss.itc;
            acc.t2t += loss.t2t;
            acc.proj += loss.proj;
            steps += 1;
        }
        if !params.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        let s = steps as f64;
        history.epochs.push(EpochStats {
            epoch,
            loss: acc.total / s,
            itc: acc.itc / s,
            t2t: acc.t2t / s,
            proj: acc.proj / s,
        });
    }
    Ok((params, history))
}

/// Text-to-video retrieval over `examples` with every caption kind as a
/// query set, aggregated into caption groups.
pub fn evaluate(params: &ModelParams, examples: &[TrainExample], bigrams: bool) -> Result<GroupReport, TrainError> {
    let videos: Vec<Vec<f64>> = examples.iter().map(|e| encode_video(&e.features, params)).collect();
    let mut per_kind = BTreeMap::new();
    for kind in CaptionKind::ALL {
        let mut ranks = Vec::with_capacity(examples.len());
        for (q, ex) in examples.iter().enumerate() {
            let t = encode_text(ex.tokens(kind), params, bigrams);
            let scores: Vec<f64> = videos.iter().map(|v| math::dot(&t, v)).collect();
            let s = scores[q];
            let ahead = scores
                .iter()
                .enumerate()
                .filter(|&(k, &v)| v > s || (v == s && k < q))
                .count();
            ranks.push(ahead + 1);
        }
        per_kind.insert(
            kind,
            Metrics::from_recalls(
                recall_from_ranks(&ranks, 1),
                recall_from_ranks(&ranks, 5),
                recall_from_ranks(&ranks, 10),
            ),
        );
    }
    Ok(group_report(&per_kind)?)
}

/// Parameters of the synthetic topic/attribute corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub topics: usize,
    pub videos_per_topic: usize,
    /// Fresh videos per topic drawn from the same world for evaluation.
    pub eval_videos_per_topic: usize,
    /// Evaluation videos are ranked against galleries of this size.
    pub eval_gallery: usize,
    pub detail_vocab_per_topic: usize,
    /// One summary word per latent attribute.
    pub summary_vocab_per_topic: usize,
    pub attributes_per_video: usize,
    pub gt_words: usize,
    pub long_words: usize,
    pub events_per_video: usize,
    pub noise: f64,
    pub video_feat: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            topics: 10,
            videos_per_topic: 50,
            eval_videos_per_topic: 100,
            eval_gallery: 100,
            detail_vocab_per_topic: 48,
            summary_vocab_per_topic: 12,
            attributes_per_video: 4,
            gt_words: 40,
            long_words: 30,
            events_per_video: 4,
            noise: 0.02,
            video_feat: 128,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.topics == 0 || self.videos_per_topic == 0 || self.video_feat == 0 {
            return bad("topics, videos_per_topic and video_feat must be positive");
        }
        if self.summary_vocab_per_topic == 0
            || self.detail_vocab_per_topic < self.summary_vocab_per_topic
        {
            return bad("need at least one detail word per summary word");
        }
        if self.attributes_per_video == 0 || self.attributes_per_video > self.summary_vocab_per_topic {
            return bad("attributes_per_video must be in 1..=summary_vocab_per_topic");
        }
        if self.events_per_video < 2 || self.gt_words < self.events_per_video || self.long_words == 0 {
            return bad("need at least two events and one word per event");
        }
        if self.eval_videos_per_topic > 0 && self.eval_gallery < 2 {
            return bad("eval_gallery must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    pub pools: Vec<CaptionPool>,
    pub features: EmbeddingTable,
}

fn sentence(words: &[String]) -> String {
    let mut s = words.join(" ");
    s.push('.');
    s
}

/// Fixed latent structure shared by the training and evaluation draws.
struct World<'a> {
    spec: &'a SyntheticSpec,
    latent: usize,
    projection: Vec<f64>,
}

impl World<'_> {
    fn draw_details(&self, t: usize, attrs: &[usize], count: usize, rng: &mut Rng) -> Vec<String> {
        let n_attr = self.spec.summary_vocab_per_topic;
        (0..count)
            .map(|_| {
                // attribute a owns the detail words whose index is a mod n_attr
                let a = attrs[rng.random_range(0..attrs.len())];
                let per_attr = (self.spec.detail_vocab_per_topic - a).div_ceil(n_attr);
                format!("t{t}d{}", a + n_attr * rng.random_range(0..per_attr))
            })
            .collect()
    }

    fn video(&self, t: usize, video_id: String, rng: &mut Rng) -> (Video, CaptionPool, Vec<f64>) {
        let spec = self.spec;
        let n_attr = spec.summary_vocab_per_topic;
        let mut attrs: Vec<usize> = (0..n_attr).collect();
        attrs.shuffle(rng);
        attrs.truncate(spec.attributes_per_video);

        let gt = self.draw_details(t, &attrs, spec.gt_words, rng);
        let per_event = spec.gt_words / spec.events_per_video;
        let events = (0..spec.events_per_video)
            .map(|e| {
                let end = if e + 1 == spec.events_per_video { gt.len() } else { (e + 1) * per_event };
                EventSegment {
                    start_s: e as f64 * 10.0,
                    end_s: (e + 1) as f64 * 10.0,
                    caption: sentence(&gt[e * per_event..end]),
                }
            })
            .collect();
        let video = Video {
            video_id: video_id.clone(),
            duration_s: spec.events_per_video as f64 * 10.0,
            events,
            feature_ref: None,
        };

        let long = sentence(&self.draw_details(t, &attrs, spec.long_words, rng));
        let medium = sentence(&self.draw_details(t, &attrs, (spec.gt_words * 4 / 7).max(1), rng));
        let mut short_words: Vec<String> = attrs.iter().map(|a| format!("t{t}s{a}")).collect();
        short_words.shuffle(rng);
        let short = sentence(&short_words);

        let half = (spec.events_per_video / 2).max(1);
        let start = rng.random_range(0..=spec.events_per_video - half);
        let range = (start, start + half - 1);

        let levels = [ReadingLevel::Elementary, ReadingLevel::Intermediate, ReadingLevel::University];
        let mut captions = BTreeMap::new();
        captions.insert(CaptionKind::F, full_paragraph(&video));
        captions.insert(CaptionKind::S, short.clone());
        captions.insert(CaptionKind::M, medium);
        captions.insert(CaptionKind::L, long.clone());
        for (kind, lv) in [CaptionKind::E, CaptionKind::I, CaptionKind::U].into_iter().zip(levels) {
            captions.insert(kind, rewrite_for_level(&long, lv));
        }
        for (kind, lv) in [CaptionKind::Se, CaptionKind::Si, CaptionKind::Su].into_iter().zip(levels) {
            captions.insert(kind, rewrite_for_level(&short, lv));
        }
        captions.insert(CaptionKind::P, crate::corpus::event_range_text(&video, range.0, range.1));

        let mut z = vec![0.0; self.latent];
        z[t] = 1.0;
        let attr_weight = 1.0 / libm::sqrt(attrs.len() as f64);
        for &a in &attrs {
            z[spec.topics + t * n_attr + a] = attr_weight;
        }
        let mut feat: Vec<f64> = (0..spec.video_feat)
            .map(|r| {
                math::dot(&self.projection[r * self.latent..(r + 1) * self.latent], &z)
                    + spec.noise * rng::normal(rng)
            })
            .collect();
        math::normalize_in_place(&mut feat);

        let pool = CaptionPool {
            video_id,
            captions,
            partial_range: range,
            provenance: Provenance {
                backend_id: String::from("synthetic"),
                attempts: 0,
                prompt_hash: String::new(),
                model_name: None,
            },
        };
        (video, pool, feat)
    }

    fn corpus(&self, split: &str, prefix: &str, per_topic: usize, rng: &mut Rng) -> Result<SyntheticCorpus, TrainError> {
        let mut videos = Vec::new();
        let mut pools = Vec::new();
        let mut rows = Vec::new();
        for t in 0..self.spec.topics {
            for n in 0..per_topic {
                let (video, pool, feat) = self.video(t, format!("{prefix}{t:02}_{n:03}"), rng);
                rows.push((video.video_id.clone(), feat));
                videos.push(video);
                pools.push(pool);
            }
        }
        let features =
            EmbeddingTable::from_f64_rows(rows, false).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        Ok(SyntheticCorpus {
            dataset: Dataset {
                name: String::from("synthetic"),
                split: String::from(split),
                videos,
            },
            pools,
            features,
        })
    }
}

/// Topic/attribute corpus with a known answer, as a training split and a
/// held-out split drawn from the same world. Each video has a topic and a
/// handful of latent attributes; detail words describe attributes in the
/// paragraph, a disjoint summary vocabulary names them in short captions,
/// and the video features encode topic and attributes through a fixed
/// random projection plus Gaussian noise.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(SyntheticCorpus, SyntheticCorpus), TrainError> {
    spec.validate()?;
    let mut rng = rng::seeded(seed);
    let latent = spec.topics * (1 + spec.summary_vocab_per_topic);
    let proj_std = 1.0 / libm::sqrt(spec.video_feat as f64);
    let projection = (0..spec.video_feat * latent)
        .map(|_| proj_std * rng::normal(&mut rng))
        .collect();
    let world = World { spec, latent, projection };
    let train = world.corpus("train", "syn", spec.videos_per_topic, &mut rng)?;
    let mut held_rng = rng::substream(seed, "held-out");
    let held = world.corpus("test", "held", spec.eval_videos_per_topic, &mut held_rng)?;
    Ok((train, held))
}

/// Retrieval metrics averaged over galleries of `gallery` examples. The
/// galleries interleave positions so each one spans every topic of a
/// topic-major listing.
pub fn evaluate_galleries(
    params: &ModelParams,
    examples: &[TrainExample],
    gallery: usize,
    bigrams: bool,
) -> Result<GroupReport, TrainError> {
    let count = examples.len().div_ceil(gallery.max(1)).max(1);
    let mut per_kind: BTreeMap<CaptionKind, [f64; 3]> = BTreeMap::new();
    let mut total = 0usize;
    for g in 0..count {
        let part: Vec<TrainExample> = examples.iter().skip(g).step_by(count).cloned().collect();
        let report = evaluate(params, &part, bigrams)?;
        for (kind, m) in report.kinds {
            let acc = per_kind.entry(kind).or_insert([0.0; 3]);
            acc[0] += m.r1 * part.len() as f64;
            acc[1] += m.r5 * part.len() as f64;
            acc[2] += m.r10 * part.len() as f64;
        }
        total += part.len();
    }
    let n = total as f64;
    let kinds = per_kind
        .into_iter()
        .map(|(k, a)| (k, Metrics::from_recalls(a[0] / n, a[1] / n, a[2] / n)))
        .collect();
    Ok(group_report(&kinds)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub report: GroupReport,
    pub history: History,
}

/// Generates the synthetic world for `seed`, trains on its training split
/// and evaluates retrieval on the held-out split.
pub fn run_synthetic_experiment(
    spec: &SyntheticSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<ExperimentResult, TrainError> {
    let (train, held) = gen_synthetic(spec, seed)?;
    let train = build_examples(&train.dataset, &train.pools, &train.features)?;
    let held = build_examples(&held.dataset, &held.pools, &held.features)?;
    if held.is_empty() {
        return Err(TrainError::InvalidConfig("no held-out videos to evaluate".into()));
    }
    let mut cfg = config.clone();
    cfg.seed = seed;
    cfg.dims.video_feat = spec.video_feat;
    let (params, history) = fit(&train, &cfg)?;
    let report = evaluate_galleries(&params, &held, spec.eval_gallery, cfg.bigrams)?;
    Ok(ExperimentResult { report, history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub eta: f64,
    pub alpha_t2t: f64,
    pub alpha_proj: f64,
    pub kinds_label: String,
    pub allowed_kinds: Vec<CaptionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub cell: SweepCell,
    pub seeds: Vec<u64>,
    /// `None` when the cell trained successfully.
    pub failed: Option<String>,
    pub full: f64,
    pub all: f64,
    pub short: f64,
    pub long: f64,
}

/// The named sampling subsets of the type ablation.
pub fn kind_subset(simplification: bool, joint: bool, partial: bool) -> (String, Vec<CaptionKind>) {
    let mut label = Vec::new();
    let mut kinds = Vec::new();
    if simplification {
        label.push("simplification");
        kinds.extend([CaptionKind::E, CaptionKind::I, CaptionKind::U]);
    }
    if joint {
        label.push("joint");
        kinds.extend([CaptionKind::Se, CaptionKind::Si, CaptionKind::Su]);
    }
    if partial {
        label.push("partial");
        kinds.push(CaptionKind::P);
    }
    (label.join("+"), kinds)
}

/// Runs every cell over every seed and averages R@1 per group. A failing
/// cell is reported and the sweep moves on.
pub fn ablation_sweep(
    cells: &[SweepCell],
    base: &TrainConfig,
    spec: &SyntheticSpec,
    seeds: &[u64],
) -> Vec<SweepRow> {
    use crate::retrieval::Group;
    cells
        .iter()
        .map(|cell| {
            let mut cfg = base.clone();
            cfg.eta = cell.eta;
            cfg.alpha_t2t = cell.alpha_t2t;
            cfg.alpha_proj = cell.alpha_proj;
            cfg.allowed_kinds = cell.allowed_kinds.clone();
            if let Some(lr) = cell.lr {
                cfg.lr = lr;
            }
            let mut sums = [0.0; 4];
            let mut failed = None;
            for &seed in seeds {
                match run_synthetic_experiment(spec, &cfg, seed) {
                    Ok(res) => {
                        let g = &res.report.groups;
                        sums[0] += g[&Group::Full].r1;
                        sums[1] += g[&Group::All].r1;
                        sums[2] += g[&Group::Short].r1;
                        sums[3] += g[&Group::Long].r1;
                    }
                    Err(e) => {
                        failed = Some(format!("seed {seed}: {e}"));
                        break;
                    }
                }
            }
            let n = seeds.len().max(1) as f64;
            let mean = |k: usize| if failed.is_some() { 0.0 } else { sums[k] / n };
            SweepRow {
                cell: cell.clone(),
                seeds: seeds.to_vec(),
                full: mean(0),
                all: mean(1),
                short: mean(2),
                long: mean(3),
                failed,
            }
        })
        .collect()
}
