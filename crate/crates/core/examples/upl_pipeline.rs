//! Full pipeline on a synthetic pair: iterative training with ensembled
//! optimal-transport pseudo-labels, then test-set metrics.
//!
//! ```text
//! cargo run --release --example upl_pipeline
//! ```

use std::time::Instant;

use uplea::{generate_pair, run_upl, SynthConfig, UplConfig};

fn main() -> uplea::Result<()> {
    let synth = SynthConfig::default();
    let (pair, truth) = generate_pair(&synth)?;
    println!(
        "{} entities per graph, {} seeds, {} test pairs",
        synth.n_entities,
        pair.seeds().len(),
        pair.test().len()
    );

    let cfg = UplConfig::default();
    let start = Instant::now();
    let run = run_upl(pair, &cfg, Some(&truth))?;
    print!("{}", run.report.summary());
    println!("elapsed: {:.1?}", start.elapsed());
    Ok(())
}
