//! The iterative training loop: `M` independently initialized models are
//! trained on the working set, each proposes conflict-free pseudo-labels
//! through optimal transport, the proposals are ensembled and the result
//! is added to the working set.
//!
//! A threshold-based baseline with the same loop shape is provided for
//! comparing pseudo-label error composition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encoder::{EmbeddingTable, GraphInput, TrainConfig, TrainStats, Trainer};
use crate::error::{Error, Result};
use crate::eval::{decompose_errors, precision_recall_f1, rank_of, ErrorDecomposition, Metrics};
use crate::kg::{AlignedPair, AlignmentSet, EntityId, KgPair, Provenance};
use crate::neighborhood::{cost_over, NeighborhoodMatcher};
use crate::ot::{pseudo_label, solve_and_select, SinkhornConfig, SinkhornDiagnostics};

/// How the per-model pseudo-label sets are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleMode {
    /// Pairs proposed by every model.
    #[default]
    Intersection,
    /// Pairs proposed by more than half of the models, made one-to-one.
    Majority,
}

impl FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(Self::Intersection),
            "majority" => Ok(Self::Majority),
            other => Err(Error::InvalidConfig(format!("unknown ensemble mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Intersection => "intersection",
            Self::Majority => "majority",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UplConfig {
    /// Ensemble size `M`.
    pub models: usize,
    /// Pseudo-labeling iterations.
    pub iterations: usize,
    pub ensemble: EnsembleMode,
    /// Weight of the neighborhood match score in the transport cost.
    pub lambda: f64,
    pub train: TrainConfig,
    pub sinkhorn: SinkhornConfig,
    pub seed: u64,
}

impl Default for UplConfig {
    fn default() -> Self {
        Self {
            models: 3,
            iterations: 9,
            ensemble: EnsembleMode::Intersection,
            lambda: 10.0,
            train: TrainConfig::default(),
            sinkhorn: SinkhornConfig::default(),
            seed: 0,
        }
    }
}

impl UplConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models == 0 {
            return Err(Error::InvalidConfig("at least one model is required".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig("lambda must be non-negative".into()));
        }
        self.train.validate()?;
        self.sinkhorn.validate()
    }

    /// Per-model seeds derived from the master seed.
    pub fn model_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.models).map(|_| rng.random()).collect()
    }
}

/// Combines `M` pseudo-label sets. Majority mode resolves conflicts among
/// surviving pairs greedily by votes (descending), then left id, then
/// right id.
pub fn ensemble(sets: &[AlignmentSet], mode: EnsembleMode) -> AlignmentSet {
    let Some((first, rest)) = sets.split_first() else {
        return AlignmentSet::new();
    };
    match mode {
        EnsembleMode::Intersection => rest.iter().fold(first.clone(), |acc, s| acc.intersection(s)),
        EnsembleMode::Majority => {
            let mut votes: BTreeMap<AlignedPair, usize> = BTreeMap::new();
            for s in sets {
                for p in s.pairs() {
                    *votes.entry(p).or_default() += 1;
                }
            }
            let mut candidates: Vec<(AlignedPair, usize)> =
                votes.into_iter().filter(|(_, v)| 2 * v > sets.len()).collect();
            candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut lefts = BTreeSet::new();
            let mut rights = BTreeSet::new();
            let mut out = AlignmentSet::new();
            for (p, _) in candidates {
                if !lefts.contains(&p.left) && !rights.contains(&p.right) {
                    lefts.insert(p.left);
                    rights.insert(p.right);
                    out.insert(p, Provenance::Pseudo(0));
                }
            }
            out
        }
    }
}

/// What happened in one pseudo-labeling iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Working-set size after augmentation.
    pub working_size: usize,
    /// Pairs accepted this iteration.
    pub selected: usize,
    /// Pairs proposed by each model.
    pub model_sizes: Vec<usize>,
    /// Accepted pairs against the ground truth, when one was supplied.
    pub errors: Option<ErrorDecomposition>,
    /// Final-epoch loss per positive, averaged over models.
    pub mean_loss: f64,
    /// Test Hit@1 with the first model's embeddings after augmentation.
    pub hit_at_1: Option<f64>,
    pub sinkhorn: Vec<Option<SinkhornDiagnostics>>,
    /// Accepted pairs are a subset of every model's proposal.
    pub subset_of_every_model: bool,
    pub accepted: AlignmentSet,
    pub proposals: Vec<AlignmentSet>,
}

/// Per-iteration records plus final metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub strategy: String,
    pub records: Vec<IterationRecord>,
    pub final_metrics: Option<Metrics>,
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let models = self.records.iter().map(|r| r.model_sizes.len()).max().unwrap_or(0);
        let mut out = String::from("iteration,working_size,selected");
        for m in 1..=models {
            let _ = write!(out, ",model_{m}_selected");
        }
        out.push_str(",correct,conflicted,one_to_one,mean_loss,hit_at_1,sinkhorn_iterations,sinkhorn_violation\n");
        for r in &self.records {
            let _ = write!(out, "{},{},{}", r.iteration, r.working_size, r.selected);
            for m in 0..models {
                match r.model_sizes.get(m) {
                    Some(s) => {
                        let _ = write!(out, ",{s}");
                    }
                    None => out.push(','),
                }
            }
            match r.errors {
                Some(e) => {
                    let _ = write!(out, ",{},{},{}", e.correct, e.conflicted, e.one_to_one);
                }
                None => out.push_str(",,,"),
            }
            let _ = write!(out, ",{:.6}", r.mean_loss);
            match r.hit_at_1 {
                Some(h) => {
                    let _ = write!(out, ",{h:.6}");
                }
                None => out.push(','),
            }
            let diags: Vec<&SinkhornDiagnostics> = r.sinkhorn.iter().flatten().collect();
            if diags.is_empty() {
                out.push_str(",,");
            } else {
                let iters = diags.iter().map(|d| d.iterations).max().unwrap_or(0);
                let viol = diags.iter().map(|d| d.violation).fold(0.0, f64::max);
                let _ = write!(out, ",{iters},{viol:.3e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("strategy: {}\niterations run: {}\n", self.strategy, self.records.len());
        for r in &self.records {
            let _ = write!(
                out,
                "  iteration {:>2}: |S| = {:>6}, accepted {:>5} (per model {:?})",
                r.iteration, r.working_size, r.selected, r.model_sizes
            );
            if let Some(e) = r.errors {
                let _ = write!(
                    out,
                    ", correct {} / conflicted {} / one-to-one {}",
                    e.correct, e.conflicted, e.one_to_one
                );
            }
            if let Some(h) = r.hit_at_1 {
                let _ = write!(out, ", Hit@1 {h:.2}");
            }
            out.push('\n');
        }
        if let Some(m) = &self.final_metrics {
            out.push_str("final metrics:\n");
            for line in m.to_string().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        out
    }

    /// Total conflicted misalignments over all iterations.
    pub fn total_conflicted(&self) -> usize {
        self.records.iter().filter_map(|r| r.errors).map(|e| e.conflicted).sum()
    }
}

/// Rankings and OT-selected pairs for the test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Test left entities, ascending.
    pub queries: Vec<EntityId>,
    /// Candidate right entities (not consumed by seeds), ascending.
    pub candidates: Vec<EntityId>,
    /// For each query, candidates ordered by rectified cost then id.
    pub ranked: Vec<Vec<EntityId>>,
    /// Rank of the true counterpart of each test pair, in test order.
    pub ranks: Vec<usize>,
    pub selected: AlignmentSet,
    pub metrics: Option<Metrics>,
}

fn test_queries(pair: &KgPair) -> (Vec<EntityId>, Vec<EntityId>) {
    let queries: Vec<EntityId> = pair.test().lefts().into_iter().collect();
    let seed_rights = pair.seeds().rights();
    let candidates = (0..pair.g2.num_entities()).filter(|e| !seed_rights.contains(e)).collect();
    (queries, candidates)
}

fn ranks_from_cost(pair: &KgPair, queries: &[EntityId], candidates: &[EntityId], cost: &ndarray::Array2<f64>) -> Vec<usize> {
    let row_of: BTreeMap<EntityId, usize> = queries.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    pair.test()
        .pairs()
        .map(|p| {
            let row = cost.row(row_of[&p.left]);
            rank_of(row.as_slice().expect("standard layout"), candidates, p.right)
                .unwrap_or(candidates.len() + 1)
        })
        .collect()
}

/// Ranks of the true counterparts of the test pairs under the rectified
/// cost with `alignment` as the matching context.
pub fn rank_test_pairs(
    pair: &KgPair,
    table: &EmbeddingTable,
    matcher: &NeighborhoodMatcher,
    alignment: &AlignmentSet,
    lambda: f64,
) -> Result<Vec<usize>> {
    let (queries, candidates) = test_queries(pair);
    let cost = cost_over(table, matcher, alignment, &queries, &candidates, lambda)?;
    Ok(ranks_from_cost(pair, &queries, &candidates, cost.values()))
}

/// Ranks every candidate for each test query and selects pairs by OT over
/// test queries and candidates. `alignment` provides the neighborhood
/// matching context; for a set that is not one-to-one one counterpart per
/// left entity is used.
pub fn final_inference(
    pair: &KgPair,
    table: &EmbeddingTable,
    matcher: &NeighborhoodMatcher,
    alignment: &AlignmentSet,
    lambda: f64,
    cfg: &SinkhornConfig,
) -> Result<Inference> {
    let (queries, candidates) = test_queries(pair);
    if queries.is_empty() || candidates.is_empty() {
        return Ok(Inference {
            queries,
            candidates,
            ranked: Vec::new(),
            ranks: Vec::new(),
            selected: AlignmentSet::new(),
            metrics: None,
        });
    }
    let cost = cost_over(table, matcher, alignment, &queries, &candidates, lambda)?;
    let ranked = cost
        .values()
        .rows()
        .into_iter()
        .map(|row| {
            let mut order: Vec<(f64, EntityId)> = row.iter().copied().zip(candidates.iter().copied()).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.into_iter().map(|(_, e)| e).collect()
        })
        .collect();
    let ranks = ranks_from_cost(pair, &queries, &candidates, cost.values());
    let selected = solve_and_select(&cost, cfg)?.selected;
    let metrics = Some(Metrics::from_parts(&ranks, precision_recall_f1(&selected, pair.test())?)?);
    Ok(Inference {
        queries,
        candidates,
        ranked,
        ranks,
        selected,
        metrics,
    })
}

/// Output of a full run.
#[derive(Debug, Clone)]
pub struct UplRun {
    /// Embeddings of the first model.
    pub table: EmbeddingTable,
    /// Final working set.
    pub alignment: AlignmentSet,
    pub report: RunReport,
    pub inference: Inference,
}

struct ModelOutcome {
    stats: TrainStats,
    table: EmbeddingTable,
    labels: crate::ot::PseudoLabels,
}

fn train_and_label(
    trainer: &mut Trainer,
    graph: &GraphInput,
    positives: &[AlignedPair],
    pair: &KgPair,
    matcher: &NeighborhoodMatcher,
    cfg: &UplConfig,
) -> Result<ModelOutcome> {
    let stats = if positives.is_empty() {
        TrainStats::default()
    } else {
        trainer.train_epochs(graph, positives)?
    };
    let table = trainer.encode(graph);
    let labels = pseudo_label(pair, &table, matcher, cfg.lambda, &cfg.sinkhorn)?;
    Ok(ModelOutcome { stats, table, labels })
}

fn mean_loss(stats: &[&TrainStats]) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    stats.iter().map(|s| s.mean_loss()).sum::<f64>() / stats.len() as f64
}

/// Runs the ensembled OT pseudo-labeling loop.
///
/// Models persist across iterations. The loop stops after
/// `cfg.iterations`, when an iteration accepts nothing, or when either
/// unaligned set is exhausted. `truth`, when given, is used only for the
/// report's error decomposition.
pub fn run_upl(mut pair: KgPair, cfg: &UplConfig, truth: Option<&AlignmentSet>) -> Result<UplRun> {
    cfg.validate()?;
    let graph = GraphInput::from_pair(&pair);
    let matcher = NeighborhoodMatcher::new(&pair);
    let mut trainers = cfg
        .model_seeds()
        .into_iter()
        .map(|s| Trainer::new(cfg.train.clone(), pair.feature_dim(), s))
        .collect::<Result<Vec<_>>>()?;
    let mut report = RunReport {
        strategy: "upl".into(),
        ..RunReport::default()
    };
    let mut table = trainers[0].encode(&graph);

    for t in 1..=cfg.iterations {
        if pair.unaligned1().is_empty() || pair.unaligned2().is_empty() {
            break;
        }
        let positives: Vec<AlignedPair> = pair.working().pairs().collect();
        let snapshot = &pair;
        let outcomes = trainers
            .par_iter_mut()
            .map(|tr| train_and_label(tr, &graph, &positives, snapshot, &matcher, cfg))
            .collect::<Result<Vec<_>>>()?;

        let proposals: Vec<AlignmentSet> = outcomes.iter().map(|o| o.labels.selected.clone()).collect();
        let accepted = ensemble(&proposals, cfg.ensemble);
        let subset = proposals.iter().all(|p| accepted.is_subset(p));
        if cfg.ensemble == EnsembleMode::Intersection && !subset {
            return Err(Error::InvalidConfig("ensembled set escaped a model's proposal".into()));
        }
        if let Some((side, entity)) = accepted.first_conflict() {
            return Err(Error::SelectionConflict { side, entity });
        }
        pair.augment_seeds(&accepted, t)?;
        table = outcomes[0].table.clone();

        let hit_at_1 = if pair.test().is_empty() {
            None
        } else {
            let ranks = rank_test_pairs(&pair, &table, &matcher, pair.working(), cfg.lambda)?;
            Some(crate::eval::hit_at_k(&ranks, 1)?)
        };
        report.records.push(IterationRecord {
            iteration: t,
            working_size: pair.working().len(),
            selected: accepted.len(),
            model_sizes: proposals.iter().map(|p| p.len()).collect(),
            errors: truth.map(|tr| decompose_errors(&accepted, tr)),
            mean_loss: mean_loss(&outcomes.iter().map(|o| &o.stats).collect::<Vec<_>>()),
            hit_at_1,
            sinkhorn: outcomes.iter().map(|o| o.labels.diagnostics).collect(),
            subset_of_every_model: subset,
            accepted: accepted.clone(),
            proposals,
        });
        log::info!(
            "iteration {t}: accepted {} pseudo-labels, |S| = {}",
            accepted.len(),
            pair.working().len()
        );
        if accepted.is_empty() {
            break;
        }
    }

    let inference = final_inference(&pair, &table, &matcher, pair.working(), cfg.lambda, &cfg.sinkhorn)?;
    report.final_metrics = inference.metrics;
    Ok(UplRun {
        table,
        alignment: pair.working().clone(),
        report,
        inference,
    })
}

/// Threshold-based pseudo-labeling with a single model: every unaligned
/// cross pair closer than `threshold` is accepted, conflicts included.
/// Iterations continue while both unaligned sets are non-empty, so a zero
/// threshold reduces to supervised training on the seeds.
pub fn run_naive_baseline(
    pair: KgPair,
    cfg: &UplConfig,
    threshold: f64,
    truth: Option<&AlignmentSet>,
) -> Result<UplRun> {
    cfg.validate()?;
    if !(threshold >= 0.0) {
        return Err(Error::InvalidConfig("threshold must be non-negative".into()));
    }
    let graph = GraphInput::from_pair(&pair);
    let matcher = NeighborhoodMatcher::new(&pair);
    let seed = cfg.model_seeds()[0];
    let mut trainer = Trainer::new(cfg.train.clone(), pair.feature_dim(), seed)?;
    let mut working: AlignmentSet = pair.seeds().clone();
    let mut report = RunReport {
        strategy: "naive".into(),
        ..RunReport::default()
    };
    let mut table = trainer.encode(&graph);

    for t in 1..=cfg.iterations {
        let used_left = working.lefts();
        let used_right = working.rights();
        let unaligned1: Vec<EntityId> = (0..pair.g1.num_entities()).filter(|e| !used_left.contains(e)).collect();
        let unaligned2: Vec<EntityId> = (0..pair.g2.num_entities()).filter(|e| !used_right.contains(e)).collect();
        if unaligned1.is_empty() || unaligned2.is_empty() {
            break;
        }
        let positives: Vec<AlignedPair> = working.pairs().collect();
        let stats = if positives.is_empty() {
            TrainStats::default()
        } else {
            trainer.train_epochs(&graph, &positives)?
        };
        table = trainer.encode(&graph);
        let mut accepted = AlignmentSet::new();
        for &i in &unaligned1 {
            for &j in &unaligned2 {
                if table.distance(i, j) < threshold {
                    accepted.insert(AlignedPair::new(i, j), Provenance::Pseudo(t));
                }
            }
        }
        for p in accepted.pairs() {
            working.insert(p, Provenance::Pseudo(t));
        }
        let hit_at_1 = if pair.test().is_empty() {
            None
        } else {
            let ranks = rank_test_pairs(&pair, &table, &matcher, &working, cfg.lambda)?;
            Some(crate::eval::hit_at_k(&ranks, 1)?)
        };
        report.records.push(IterationRecord {
            iteration: t,
            working_size: working.len(),
            selected: accepted.len(),
            model_sizes: vec![accepted.len()],
            errors: truth.map(|tr| decompose_errors(&accepted, tr)),
            mean_loss: stats.mean_loss(),
            hit_at_1,
            sinkhorn: vec![None],
            subset_of_every_model: true,
            proposals: vec![accepted.clone()],
            accepted,
        });
    }

    let inference = final_inference(&pair, &table, &matcher, &working, cfg.lambda, &cfg.sinkhorn)?;
    report.final_metrics = inference.metrics;
    Ok(UplRun {
        table,
        alignment: working,
        report,
        inference,
    })
}
