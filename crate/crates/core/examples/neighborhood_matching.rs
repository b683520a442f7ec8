//! Neighborhood match scores and the rectified transport cost
//! `distance − λ · score`.

use ndarray::array;
use uplea::encoder::EmbeddingTable;
use uplea::kg::{FeatureMatrix, Triplet};
use uplea::neighborhood::cost_over;
use uplea::{AlignmentSet, KgPair, KnowledgeGraph, NeighborhoodMatcher, Provenance};

fn main() -> uplea::Result<()> {
    // two small graphs with the same shape: 0 -r0-> 1, 0 -r1-> 2
    let edges = vec![Triplet::new(0, 0, 1), Triplet::new(0, 1, 2)];
    let g1 = KnowledgeGraph::from_triplets(3, 2, edges.clone())?;
    let g2 = KnowledgeGraph::from_triplets(3, 2, edges)?;
    let features = FeatureMatrix::new(ndarray::Array2::zeros((3, 2)))?;
    let seeds = AlignmentSet::from_pairs([(1, 1), (2, 2)], Provenance::Seed);
    let pair = KgPair::new(g1, g2, features.clone(), features, seeds, AlignmentSet::new())?;

    let matcher = NeighborhoodMatcher::new(&pair);
    let right_of = pair.working().right_of(3);
    for j in 0..3 {
        println!("score(0, {j}) = {:.4}", matcher.score(0, j, &right_of));
    }

    // rows 0..3 embed the first graph, rows 3..6 the second
    let table = EmbeddingTable::new(
        array![[0.0, 0.0], [5.0, 5.0], [9.0, 9.0], [1.0, 0.0], [5.0, 5.0], [9.0, 9.0]],
        3,
    );
    let cost = cost_over(&table, &matcher, pair.working(), &[0], &[0], 10.0)?;
    println!(
        "distance {:.2}, rectified cost {:.2}",
        table.distance(0, 0),
        cost.values()[[0, 0]]
    );
    Ok(())
}
