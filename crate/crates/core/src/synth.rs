//! Synthetic knowledge-graph pairs with known ground truth.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};

use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, FeatureMatrix, KgPair, KnowledgeGraph, Provenance, Triplet};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_entities: usize,
    pub n_relations: usize,
    /// Mean out-degree of each entity in the first graph.
    pub avg_degree: f64,
    /// Fraction of triplets dropped or rewired in the second graph, in `[0, 1)`.
    pub edge_perturbation: f64,
    pub feature_dim: usize,
    /// Standard deviation of Gaussian noise added to the second graph's features.
    pub feature_noise: f64,
    pub seed_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_entities: 500,
            n_relations: 20,
            avg_degree: 3.0,
            edge_perturbation: 0.1,
            feature_dim: 300,
            feature_noise: 0.1,
            seed_fraction: 0.3,
            rng_seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if self.n_entities < 2 {
            return bad("n_entities must be at least 2");
        }
        if self.n_relations == 0 {
            return bad("n_relations must be positive");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        if !(self.avg_degree >= 0.0) || self.avg_degree >= self.n_entities as f64 {
            return bad("avg_degree must lie in [0, n_entities)");
        }
        if !(0.0..1.0).contains(&self.edge_perturbation) {
            return bad("edge_perturbation must lie in [0, 1)");
        }
        if !(self.feature_noise >= 0.0) || !self.feature_noise.is_finite() {
            return bad("feature_noise must be a finite non-negative number");
        }
        if !(0.0..=1.0).contains(&self.seed_fraction) {
            return bad("seed_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Generates a pair of graphs and the bijection between them.
///
/// The second graph is an id-permuted copy of the first: each triplet is
/// independently perturbed with probability `edge_perturbation`, and a
/// perturbed triplet is dropped or has its tail rewired with equal odds.
/// Both graphs share the relation vocabulary.
pub fn generate_pair(cfg: &SynthConfig) -> Result<(KgPair, AlignmentSet)> {
    cfg.validate()?;
    let n = cfg.n_entities;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let geometric = Geometric::new(1.0 / (1.0 + cfg.avg_degree))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut triplets1 = Vec::new();
    for head in 0..n {
        let degree = geometric.sample(&mut rng);
        for _ in 0..degree {
            let mut tail = rng.random_range(0..n - 1);
            if tail >= head {
                tail += 1;
            }
            let relation = rng.random_range(0..cfg.n_relations);
            triplets1.push(Triplet::new(head, relation, tail));
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let mut triplets2 = Vec::with_capacity(triplets1.len());
    for t in &triplets1 {
        let mut tail = t.tail;
        if rng.random::<f64>() < cfg.edge_perturbation {
            if rng.random::<bool>() {
                continue;
            }
            tail = rng.random_range(0..n);
        }
        triplets2.push(Triplet::new(perm[t.head], t.relation, perm[tail]));
    }
    triplets2.shuffle(&mut rng);

    let standard = Normal::new(0.0, 1.0).expect("valid normal");
    let features1 = Array2::from_shape_simple_fn((n, cfg.feature_dim), || standard.sample(&mut rng));
    let mut features2 = Array2::zeros((n, cfg.feature_dim));
    let noise = Normal::new(0.0, cfg.feature_noise).expect("valid normal");
    for i in 0..n {
        for k in 0..cfg.feature_dim {
            let eps = if cfg.feature_noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            features2[[perm[i], k]] = features1[[i, k]] + eps;
        }
    }

    let truth = AlignmentSet::from_pairs((0..n).map(|i| (i, perm[i])), Provenance::Truth);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_seeds = (cfg.seed_fraction * n as f64).round() as usize;
    let seeds = AlignmentSet::from_pairs(order[..n_seeds].iter().map(|&i| (i, perm[i])), Provenance::Seed);
    let test = AlignmentSet::from_pairs(order[n_seeds..].iter().map(|&i| (i, perm[i])), Provenance::Truth);

    let g1 = KnowledgeGraph::from_triplets(n, cfg.n_relations, triplets1)?;
    let g2 = KnowledgeGraph::from_triplets(n, cfg.n_relations, triplets2)?;
    let pair = KgPair::new(
        g1,
        g2,
        FeatureMatrix::new(features1)?,
        FeatureMatrix::new(features2)?,
        seeds,
        test,
    )?;
    Ok((pair, truth))
}
