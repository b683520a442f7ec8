//! Supervised training of the gated graph encoder on seed alignments,
//! reporting the margin loss per epoch and test Hit@1 by L1 distance.

use uplea::encoder::{sample_negatives, margin_loss};
use uplea::eval::rank_of;
use uplea::{generate_pair, hit_at_k, GraphInput, SynthConfig, TrainConfig, Trainer};

fn main() -> uplea::Result<()> {
    let (pair, _) = generate_pair(&SynthConfig {
        n_entities: 200,
        feature_dim: 32,
        feature_noise: 1.0,
        ..SynthConfig::default()
    })?;
    let graph = GraphInput::from_pair(&pair);
    let cfg = TrainConfig {
        dim: 64,
        negatives: 10,
        epochs: 5,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(cfg.clone(), pair.feature_dim(), 7)?;
    let positives: Vec<_> = pair.seeds().pairs().collect();

    let hit = |t: &Trainer| -> uplea::Result<f64> {
        let table = t.encode(&graph);
        let candidates: Vec<usize> = (0..pair.g2.num_entities()).collect();
        let ranks: Vec<usize> = pair
            .test()
            .pairs()
            .map(|p| {
                let d: Vec<f64> = candidates.iter().map(|&c| table.distance(p.left, c)).collect();
                rank_of(&d, &candidates, p.right).expect("candidate present")
            })
            .collect();
        hit_at_k(&ranks, 1)
    };

    println!("before training: Hit@1 {:.1}", hit(&trainer)?);
    for round in 1..=4 {
        let stats = trainer.train_epochs(&graph, &positives)?;
        let table = trainer.encode(&graph);
        let loss = margin_loss(&table, &sample_negatives(&table, &positives, cfg.negatives), cfg.margin);
        println!(
            "round {round}: mean epoch loss {:.3}, total loss now {loss:.3}, Hit@1 {:.1}",
            stats.mean_loss(),
            hit(&trainer)?
        );
    }
    Ok(())
}
