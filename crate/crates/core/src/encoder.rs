//! Gated graph-convolutional entity encoder trained with a margin loss.
//!
//! Both graphs are encoded with shared parameters as one block-diagonal
//! graph: rows `0..n_left` hold the first graph's entities and rows
//! `n_left..` the second graph's.
//!
//! Per layer, with `H` the current representation:
//!
//! ```text
//! agg  = A · (H W)            row-normalized neighbor mean
//! gate = sigmoid(H Wg + b)
//! H'   = gate ⊙ agg + (1 − gate) ⊙ H
//! ```
//!
//! Gradients are computed by hand and checked against finite differences
//! in the test suite.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kg::{Adjacency, AlignedPair, EntityId, FeatureMatrix, KgPair};

/// Hyperparameters of embedding training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub margin: f64,
    /// Negatives drawn per side for every positive pair.
    pub negatives: usize,
    pub dim: usize,
    pub layers: usize,
    /// Epochs per pseudo-labeling iteration.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            negatives: 125,
            dim: 300,
            layers: 2,
            epochs: 10,
            batch_size: 256,
            learning_rate: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if !(self.margin > 0.0) {
            return bad("margin must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives per positive must be at least 1");
        }
        if self.dim == 0 {
            return bad("embedding dimension must be positive");
        }
        if self.layers == 0 {
            return bad("encoder needs at least one layer");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.learning_rate >= 0.0) {
            return bad("learning rate must be non-negative");
        }
        Ok(())
    }
}

/// Parameters of one gated convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedLayer {
    pub transform: Array2<f64>,
    pub gate: Array2<f64>,
    pub gate_bias: Array1<f64>,
}

/// All trainable encoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub input_projection: Array2<f64>,
    pub layers: Vec<GatedLayer>,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = 1.0 / (rows as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

/// Draws parameters uniformly from `±1/sqrt(fan_in)`; gate biases start at 0.
pub fn init_params(cfg: &TrainConfig, feature_dim: usize, rng_seed: u64) -> Result<EncoderParams> {
    cfg.validate()?;
    if feature_dim == 0 {
        return Err(Error::InvalidConfig("feature dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let input_projection = uniform_matrix(&mut rng, feature_dim, cfg.dim);
    let layers = (0..cfg.layers)
        .map(|_| GatedLayer {
            transform: uniform_matrix(&mut rng, cfg.dim, cfg.dim),
            gate: uniform_matrix(&mut rng, cfg.dim, cfg.dim),
            gate_bias: Array1::zeros(cfg.dim),
        })
        .collect();
    Ok(EncoderParams {
        input_projection,
        layers,
    })
}

impl EncoderParams {
    pub fn dim(&self) -> usize {
        self.input_projection.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.input_projection.nrows()
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            input_projection: Array2::zeros(self.input_projection.raw_dim()),
            layers: self
                .layers
                .iter()
                .map(|l| GatedLayer {
                    transform: Array2::zeros(l.transform.raw_dim()),
                    gate: Array2::zeros(l.gate.raw_dim()),
                    gate_bias: Array1::zeros(l.gate_bias.raw_dim()),
                })
                .collect(),
        }
    }

    /// Flat views of every parameter tensor in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = vec![self.input_projection.as_slice().expect("standard layout")];
        for l in &self.layers {
            out.push(l.transform.as_slice().expect("standard layout"));
            out.push(l.gate.as_slice().expect("standard layout"));
            out.push(l.gate_bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.input_projection.as_slice_mut().expect("standard layout")];
        for l in &mut self.layers {
            out.push(l.transform.as_slice_mut().expect("standard layout"));
            out.push(l.gate.as_slice_mut().expect("standard layout"));
            out.push(l.gate_bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Sparse matrix in CSR layout.
#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn block_diagonal(blocks: &[&Adjacency]) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut base = 0;
        for adj in blocks {
            for e in 0..adj.num_rows() {
                let (n, w) = adj.row(e);
                cols.extend(n.iter().map(|c| c + base));
                vals.extend_from_slice(w);
                offsets.push(cols.len());
            }
            base += adj.num_rows();
        }
        Self { offsets, cols, vals }
    }

    fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    fn transpose(&self) -> Self {
        let n = self.rows();
        let mut counts = vec![0usize; n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; self.cols.len()];
        let mut vals = vec![0.0; self.vals.len()];
        for r in 0..n {
            for k in self.offsets[r]..self.offsets[r + 1] {
                let c = self.cols[k];
                cols[next[c]] = r;
                vals[next[c]] = self.vals[k];
                next[c] += 1;
            }
        }
        Self {
            offsets: counts,
            cols,
            vals,
        }
    }

    /// `self · dense`
    fn mul_dense(&self, dense: &Array2<f64>) -> Array2<f64> {
        let d = dense.ncols();
        let src = dense.as_slice().expect("standard layout");
        let mut out = Array2::<f64>::zeros((self.rows(), d));
        let dst = out.as_slice_mut().expect("standard layout");
        for r in 0..self.rows() {
            let row = &mut dst[r * d..(r + 1) * d];
            for k in self.offsets[r]..self.offsets[r + 1] {
                let c = self.cols[k];
                let w = self.vals[k];
                for (o, s) in row.iter_mut().zip(&src[c * d..(c + 1) * d]) {
                    *o += w * s;
                }
            }
        }
        out
    }
}

/// Stacked features and block-diagonal adjacency of a graph pair.
#[derive(Debug, Clone)]
pub struct GraphInput {
    features: Array2<f64>,
    adjacency: Csr,
    adjacency_t: Csr,
    n_left: usize,
}

impl GraphInput {
    pub fn new(
        features1: &FeatureMatrix,
        adjacency1: &Adjacency,
        features2: &FeatureMatrix,
        adjacency2: &Adjacency,
    ) -> Self {
        let features = ndarray::concatenate(
            Axis(0),
            &[features1.as_array().view(), features2.as_array().view()],
        )
        .expect("feature dimensions agree")
        .as_standard_layout()
        .into_owned();
        let adjacency = Csr::block_diagonal(&[adjacency1, adjacency2]);
        let adjacency_t = adjacency.transpose();
        Self {
            features,
            adjacency,
            adjacency_t,
            n_left: features1.num_rows(),
        }
    }

    pub fn from_pair(pair: &KgPair) -> Self {
        Self::new(
            &pair.features1,
            pair.g1.adjacency(),
            &pair.features2,
            pair.g2.adjacency(),
        )
    }

    pub fn num_entities(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.features.nrows() - self.n_left
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

/// One embedding per entity of both graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: Array2<f64>,
    n_left: usize,
}

impl EmbeddingTable {
    pub fn new(vectors: Array2<f64>, n_left: usize) -> Self {
        assert!(n_left <= vectors.nrows());
        Self {
            vectors: vectors.as_standard_layout().into_owned(),
            n_left,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.vectors.nrows() - self.n_left
    }

    pub fn left(&self, e: EntityId) -> &[f64] {
        self.row(e)
    }

    pub fn right(&self, e: EntityId) -> &[f64] {
        self.row(self.n_left + e)
    }

    fn row(&self, r: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors.as_slice().expect("standard layout")[r * d..(r + 1) * d]
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn left_block(&self) -> ndarray::ArrayView2<'_, f64> {
        self.vectors.slice(ndarray::s![..self.n_left, ..])
    }

    pub fn right_block(&self) -> ndarray::ArrayView2<'_, f64> {
        self.vectors.slice(ndarray::s![self.n_left.., ..])
    }

    /// L1 distance between a left entity and a right entity.
    pub fn distance(&self, left: EntityId, right: EntityId) -> f64 {
        l1(self.left(left), self.right(right))
    }
}

#[inline]
pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// L1 norm of the difference of two embeddings.
pub fn embedding_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

struct LayerCache {
    input: Array2<f64>,
    agg: Array2<f64>,
    gate: Array2<f64>,
}

/// Activations kept for the backward pass.
pub struct ForwardPass {
    caches: Vec<LayerCache>,
    output: Array2<f64>,
    n_left: usize,
}

impl ForwardPass {
    pub fn table(&self) -> EmbeddingTable {
        EmbeddingTable::new(self.output.clone(), self.n_left)
    }

    /// Gate activations of every layer.
    pub fn gates(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.caches.iter().map(|c| &c.gate)
    }
}

pub fn forward(params: &EncoderParams, graph: &GraphInput) -> ForwardPass {
    let mut h = graph.features.dot(&params.input_projection);
    let mut caches = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let transformed = h.dot(&layer.transform);
        let agg = graph.adjacency.mul_dense(&transformed);
        let mut gate = h.dot(&layer.gate);
        gate += &layer.gate_bias;
        gate.mapv_inplace(sigmoid);
        let mut next = &agg - &h;
        next *= &gate;
        next += &h;
        caches.push(LayerCache { input: h, agg, gate });
        h = next;
    }
    ForwardPass {
        caches,
        output: h,
        n_left: graph.n_left,
    }
}

/// Embeds every entity of both graphs.
pub fn encode(params: &EncoderParams, graph: &GraphInput) -> EmbeddingTable {
    forward(params, graph).table()
}

/// Backpropagates `d_output` (gradient w.r.t. the embedding table).
pub fn backward(
    params: &EncoderParams,
    graph: &GraphInput,
    pass: &ForwardPass,
    d_output: Array2<f64>,
) -> EncoderParams {
    let mut grads = params.zeros_like();
    let mut dh = d_output;
    for (l, layer) in params.layers.iter().enumerate().rev() {
        let cache = &pass.caches[l];
        let diff = &cache.agg - &cache.input;
        let d_gate_pre = {
            let mut g = &dh * &diff;
            g.zip_mut_with(&cache.gate, |v, &s| *v *= s * (1.0 - s));
            g
        };
        let d_agg = &dh * &cache.gate;
        let mut d_input = dh;
        d_input.zip_mut_with(&cache.gate, |v, &s| *v *= 1.0 - s);

        grads.layers[l].gate = cache.input.t().dot(&d_gate_pre);
        grads.layers[l].gate_bias = d_gate_pre.sum_axis(Axis(0));
        d_input += &d_gate_pre.dot(&layer.gate.t());

        let d_transformed = graph.adjacency_t.mul_dense(&d_agg);
        grads.layers[l].transform = cache.input.t().dot(&d_transformed);
        d_input += &d_transformed.dot(&layer.transform.t());
        dh = d_input;
    }
    grads.input_projection = graph.features.t().dot(&dh);
    grads
}

/// Hard negatives of one positive pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSet {
    pub positive: AlignedPair,
    /// Right entities paired with the positive's left entity.
    pub right: Vec<EntityId>,
    /// Left entities paired with the positive's right entity.
    pub left: Vec<EntityId>,
}

fn nearest<'a>(
    query: &[f64],
    candidates: usize,
    row: impl Fn(usize) -> &'a [f64],
    exclude: EntityId,
    k: usize,
) -> Vec<EntityId> {
    let mut scored: Vec<(f64, EntityId)> = (0..candidates)
        .filter(|&c| c != exclude)
        .map(|c| (l1(query, row(c)), c))
        .collect();
    let k = k.min(scored.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, EntityId), b: &(f64, EntityId)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, c)| c).collect()
}

/// For each positive `(i, j)`: the `k` entities of the second graph closest
/// to `i` (excluding `j`) and the `k` entities of the first graph closest to
/// `j` (excluding `i`). Ties go to the lower id.
pub fn sample_negatives(table: &EmbeddingTable, positives: &[AlignedPair], k: usize) -> Vec<NegativeSet> {
    let available = table.n_left().min(table.n_right()).saturating_sub(1);
    if k > available {
        log::warn!("requested {k} negatives but only {available} candidates exist; clamping");
    }
    positives
        .par_iter()
        .map(|p| NegativeSet {
            positive: *p,
            right: nearest(table.left(p.left), table.n_right(), |c| table.right(c), p.right, k),
            left: nearest(table.right(p.right), table.n_left(), |c| table.left(c), p.left, k),
        })
        .collect()
}

/// Sum of hinge terms `max(0, d(pos) − d(neg) + margin)`.
pub fn margin_loss(table: &EmbeddingTable, negatives: &[NegativeSet], margin: f64) -> f64 {
    let mut total = 0.0;
    for set in negatives {
        let p = set.positive;
        let pos = table.distance(p.left, p.right);
        for &r in &set.right {
            total += (pos - table.distance(p.left, r) + margin).max(0.0);
        }
        for &l in &set.left {
            total += (pos - table.distance(l, p.right) + margin).max(0.0);
        }
    }
    total
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Adds `scale · sign(a − b)` to `ga` and subtracts it from `gb`.
fn accumulate_l1_grad(grad: &mut [f64], d: usize, a: usize, b: usize, table: &[f64], scale: f64) {
    for k in 0..d {
        let s = scale * sign(table[a * d + k] - table[b * d + k]);
        grad[a * d + k] += s;
        grad[b * d + k] -= s;
    }
}

/// Loss and its gradient w.r.t. the embedding table. A hinge term exactly
/// at zero contributes no gradient.
pub fn margin_loss_with_grad(
    table: &EmbeddingTable,
    negatives: &[NegativeSet],
    margin: f64,
) -> (f64, Array2<f64>) {
    let d = table.dim();
    let n_left = table.n_left();
    let flat = table.vectors.as_slice().expect("standard layout");
    let mut grad = Array2::<f64>::zeros(table.vectors.raw_dim());
    let g = grad.as_slice_mut().expect("standard layout");
    let mut total = 0.0;
    for set in negatives {
        let p = set.positive;
        let (pl, pr) = (p.left, n_left + p.right);
        let pos = table.distance(p.left, p.right);
        let mut active = 0.0;
        for &r in &set.right {
            let term = pos - table.distance(p.left, r) + margin;
            if term > 0.0 {
                total += term;
                active += 1.0;
                accumulate_l1_grad(g, d, pl, n_left + r, flat, -1.0);
            }
        }
        for &l in &set.left {
            let term = pos - table.distance(l, p.right) + margin;
            if term > 0.0 {
                total += term;
                active += 1.0;
                accumulate_l1_grad(g, d, l, pr, flat, -1.0);
            }
        }
        if active > 0.0 {
            accumulate_l1_grad(g, d, pl, pr, flat, active);
        }
    }
    (total, grad)
}

/// Loss and parameter gradient for fixed negatives.
pub fn loss_and_gradient(
    params: &EncoderParams,
    graph: &GraphInput,
    negatives: &[NegativeSet],
    margin: f64,
) -> (f64, EncoderParams) {
    let pass = forward(params, graph);
    let table = EmbeddingTable::new(pass.output.clone(), graph.n_left);
    let (loss, d_table) = margin_loss_with_grad(&table, negatives, margin);
    (loss, backward(params, graph, &pass, d_table))
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &EncoderParams, learning_rate: f64) -> Self {
        let shapes: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut EncoderParams, grads: &EncoderParams) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

/// Losses observed while training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainStats {
    /// Summed batch losses of each epoch.
    pub epoch_losses: Vec<f64>,
    pub positives: usize,
}

impl TrainStats {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }

    /// Final epoch loss divided by the number of positives.
    pub fn mean_loss(&self) -> f64 {
        match (self.final_loss(), self.positives) {
            (Some(l), n) if n > 0 => l / n as f64,
            _ => 0.0,
        }
    }
}

/// One model: parameters, optimizer state and its own RNG stream.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    params: EncoderParams,
    optimizer: Adam,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, feature_dim: usize, rng_seed: u64) -> Result<Self> {
        let params = init_params(&cfg, feature_dim, rng_seed)?;
        Ok(Self::from_params(cfg, params, rng_seed))
    }

    pub fn from_params(cfg: TrainConfig, params: EncoderParams, rng_seed: u64) -> Self {
        let optimizer = Adam::new(&params, cfg.learning_rate);
        Self {
            cfg,
            params,
            optimizer,
            rng: ChaCha8Rng::seed_from_u64(rng_seed ^ 0x9e37_79b9_7f4a_7c15),
        }
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn encode(&self, graph: &GraphInput) -> EmbeddingTable {
        encode(&self.params, graph)
    }

    /// Runs the configured number of epochs of mini-batch Adam on the
    /// margin loss over `positives`. Negatives are resampled from the
    /// current embeddings at the start of every epoch.
    pub fn train_epochs(&mut self, graph: &GraphInput, positives: &[AlignedPair]) -> Result<TrainStats> {
        let mut stats = TrainStats {
            epoch_losses: Vec::with_capacity(self.cfg.epochs),
            positives: positives.len(),
        };
        if positives.is_empty() {
            return Err(Error::Empty("the training alignment set"));
        }
        let mut order: Vec<AlignedPair> = positives.to_vec();
        for epoch in 0..self.cfg.epochs {
            let mut pass = forward(&self.params, graph);
            let table = EmbeddingTable::new(pass.output.clone(), graph.n_left);
            let negatives = sample_negatives(&table, positives, self.cfg.negatives);
            let by_positive: std::collections::HashMap<AlignedPair, &NegativeSet> =
                negatives.iter().map(|n| (n.positive, n)).collect();
            order.shuffle(&mut self.rng);
            let mut epoch_loss = 0.0;
            let mut fresh = true;
            for batch in order.chunks(self.cfg.batch_size) {
                if !fresh {
                    pass = forward(&self.params, graph);
                }
                fresh = false;
                let batch_negs: Vec<NegativeSet> =
                    batch.iter().map(|p| by_positive[p].clone()).collect();
                let table = EmbeddingTable::new(std::mem::take(&mut pass.output), graph.n_left);
                let (loss, d_table) = margin_loss_with_grad(&table, &batch_negs, self.cfg.margin);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, loss });
                }
                epoch_loss += loss;
                let grads = backward(&self.params, graph, &pass, d_table);
                self.optimizer.step(&mut self.params, &grads);
            }
            log::debug!("epoch {epoch}: loss {epoch_loss:.6}");
            stats.epoch_losses.push(epoch_loss);
        }
        if !self.params.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: self.cfg.epochs,
                loss: f64::NAN,
            });
        }
        Ok(stats)
    }
}

/// Trains freshly supplied parameters on the pair's working set and
/// returns the updated parameters with the training statistics.
pub fn train_epochs(
    params: EncoderParams,
    pair: &KgPair,
    cfg: &TrainConfig,
    rng_seed: u64,
) -> Result<(EncoderParams, TrainStats)> {
    cfg.validate()?;
    let graph = GraphInput::from_pair(pair);
    let positives: Vec<AlignedPair> = pair.working().pairs().collect();
    let mut trainer = Trainer::from_params(cfg.clone(), params, rng_seed);
    let stats = trainer.train_epochs(&graph, &positives)?;
    Ok((trainer.params, stats))
}
