//! Error composition of pseudo-labels: a distance-threshold strategy
//! against ensembled optimal-transport selection on the same data and
//! seed. Conflicted misalignments share an entity with another selected
//! pair; one-to-one misalignments are conflict-free but wrong.

use uplea::{generate_pair, run_naive_baseline, run_upl, SynthConfig, TrainConfig, UplConfig};

fn main() -> uplea::Result<()> {
    let (pair, truth) = generate_pair(&SynthConfig {
        n_entities: 300,
        feature_dim: 64,
        feature_noise: 0.8,
        ..SynthConfig::default()
    })?;
    let cfg = UplConfig {
        iterations: 4,
        train: TrainConfig {
            dim: 64,
            negatives: 25,
            epochs: 5,
            ..TrainConfig::default()
        },
        ..UplConfig::default()
    };

    let naive = run_naive_baseline(pair.clone(), &cfg, 9.0, Some(&truth))?;
    let upl = run_upl(pair, &cfg, Some(&truth))?;

    for (name, run) in [("naive", &naive), ("upl", &upl)] {
        println!("{name}:");
        println!("  iteration  accepted  correct  conflicted  one-to-one  Hit@1");
        for r in &run.report.records {
            let e = r.errors.expect("truth supplied");
            println!(
                "  {:>9}  {:>8}  {:>7}  {:>10}  {:>10}  {:>5.1}",
                r.iteration,
                r.selected,
                e.correct,
                e.conflicted,
                e.one_to_one,
                r.hit_at_1.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
