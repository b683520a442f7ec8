//! Turning a coupling into pseudo-labels: pairs whose mass exceeds
//! `1/(2·min(R, C))` are selected, and no two selected pairs share an
//! entity.

use ndarray::array;
use uplea::{select_alignments, sinkhorn, CostMatrix, CouplingMatrix, SinkhornConfig};

fn main() -> uplea::Result<()> {
    let diagonal = CouplingMatrix::from_values(array![[0.5, 0.0], [0.0, 0.5]])?;
    println!("diagonal plan selects {:?}", select_alignments(&diagonal)?.pairs().collect::<Vec<_>>());

    let uniform = CouplingMatrix::from_values(array![[0.25, 0.25], [0.25, 0.25]])?;
    println!("uniform plan selects {} pairs", select_alignments(&uniform)?.len());

    // rectangular problem: 3 unaligned entities on the left, 5 on the right,
    // with explicit entity ids
    let cost = CostMatrix::new(
        array![
            [0.0, 4.0, 4.0, 4.0, 4.0],
            [4.0, 4.0, 0.1, 4.0, 4.0],
            [4.0, 3.9, 4.0, 4.0, 3.9],
        ],
        vec![10, 11, 12],
        vec![20, 21, 22, 23, 24],
    )?;
    let out = sinkhorn(&cost, &SinkhornConfig::default())?;
    let selected = select_alignments(&out.coupling)?;
    println!("threshold {:.4}", out.coupling.selection_threshold());
    for p in selected.pairs() {
        println!("  ({}, {})", p.left, p.right);
    }
    println!("one-to-one: {}", selected.is_one_to_one());
    Ok(())
}
