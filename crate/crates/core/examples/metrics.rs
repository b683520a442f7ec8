//! Ranking and classification metrics and the pseudo-label error
//! decomposition.

use uplea::eval::{rank_of, Metrics};
use uplea::{decompose_errors, hit_at_k, mrr, precision_recall_f1, AlignmentSet, Provenance};

fn main() -> uplea::Result<()> {
    // scores for candidates [3, 4, 1]; lower is better, ties go to the lower id
    let scores = [0.5, 0.1, 0.5];
    let ids = [3, 4, 1];
    println!("rank of 1: {:?}, rank of 3: {:?}", rank_of(&scores, &ids, 1), rank_of(&scores, &ids, 3));

    let ranks = [1, 2, 1, 12];
    println!("Hit@1 {}  Hit@10 {}  MRR {:.4}", hit_at_k(&ranks, 1)?, hit_at_k(&ranks, 10)?, mrr(&ranks)?);

    let test = AlignmentSet::from_pairs((0..6).map(|i| (i, i)), Provenance::Truth);
    let pred = AlignmentSet::from_pairs([(0, 0), (1, 1), (2, 2), (3, 9)], Provenance::Pseudo(1));
    let c = precision_recall_f1(&pred, &test)?;
    println!("precision {}  recall {}  f1 {:.4}", c.precision, c.recall, c.f1);

    let selected = AlignmentSet::from_pairs([(0, 0), (1, 0), (2, 3), (4, 4)], Provenance::Pseudo(1));
    let d = decompose_errors(&selected, &test);
    println!("correct {}  conflicted {}  one-to-one {}", d.correct, d.conflicted, d.one_to_one);

    print!("{}", Metrics::from_parts(&ranks, c)?);
    Ok(())
}
