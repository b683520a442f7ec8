//! Entity alignment between two knowledge graphs.
//!
//! A gated graph convolutional encoder maps entities of both graphs into a
//! shared space. Training alternates with pseudo-labeling: an entropic
//! optimal transport plan over a neighborhood-rectified cost selects
//! conflict-free pairs, several independently initialized models vote, and
//! the accepted pairs join the training set.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! - `generate_synthetic`: a synthetic graph pair with known alignment
//! - `sinkhorn_coupling`: solving a small transport problem
//! - `conflict_free_selection`: thresholding a coupling into pairs
//! - `neighborhood_matching`: match scores and the rectified cost
//! - `train_encoder`: supervised training on seed alignments
//! - `upl_pipeline`: the full iterative loop with ensembling
//! - `bias_analysis`: pseudo-label error composition against a baseline
//! - `metrics`: Hit@k, MRR and precision/recall/F1

pub mod cli;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod io;
pub mod kg;
pub mod neighborhood;
pub mod ot;
pub mod pipeline;
pub mod synth;

pub use encoder::{EmbeddingTable, GraphInput, TrainConfig, Trainer};
pub use error::{Error, Result};
pub use eval::{decompose_errors, hit_at_k, mrr, precision_recall_f1, ErrorDecomposition, Metrics};
pub use kg::{AlignedPair, AlignmentSet, EntityId, KgPair, KnowledgeGraph, Provenance};
pub use neighborhood::{rectified_cost, NeighborhoodMatcher};
pub use ot::{select_alignments, sinkhorn, CostMatrix, CouplingMatrix, SinkhornConfig};
pub use pipeline::{ensemble, run_naive_baseline, run_upl, EnsembleMode, UplConfig};
pub use synth::{generate_pair, SynthConfig};
