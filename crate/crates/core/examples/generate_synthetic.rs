//! Generate a small synthetic graph pair and write it in the on-disk
//! dataset format.
//!
//! ```text
//! cargo run --example generate_synthetic -- /tmp/toy
//! ```

use std::path::PathBuf;

use uplea::io::{self, DatasetPaths};
use uplea::{generate_pair, SynthConfig};

fn main() -> uplea::Result<()> {
    let cfg = SynthConfig {
        n_entities: 50,
        n_relations: 5,
        feature_dim: 16,
        ..SynthConfig::default()
    };
    let (pair, truth) = generate_pair(&cfg)?;

    println!("first graph:  {} entities, {} triplets", pair.g1.num_entities(), pair.g1.raw_triplets().len());
    println!("second graph: {} entities, {} triplets", pair.g2.num_entities(), pair.g2.raw_triplets().len());
    println!("seeds: {}, test: {}, truth: {}", pair.seeds().len(), pair.test().len(), truth.len());

    // features of an aligned pair differ only by the configured noise
    let p = truth.pairs().next().expect("non-empty truth");
    let gap = uplea::encoder::embedding_distance(pair.features1.row(p.left), pair.features2.row(p.right));
    println!("L1 gap between the features of ({}, {}): {gap:.3}", p.left, p.right);

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        std::fs::create_dir_all(&dir).map_err(|e| uplea::Error::Io { path: dir.clone(), source: e })?;
        io::write_dataset(&DatasetPaths::in_dir(&dir), &pair)?;
        io::write_alignments(&DatasetPaths::truth_in_dir(&dir), &truth, pair.g1.entities(), pair.g2.entities())?;
        println!("dataset written to {}", dir.display());
    }
    Ok(())
}
