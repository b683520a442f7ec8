//! Entropic optimal transport between two small sets with uniform
//! marginals. Smaller `beta` concentrates the plan on the cheapest
//! assignment.

use ndarray::array;
use uplea::{sinkhorn, CostMatrix, SinkhornConfig};

fn main() -> uplea::Result<()> {
    let cost = CostMatrix::from_values(array![
        [0.1, 2.0, 3.0],
        [2.0, 0.2, 1.5],
        [3.0, 1.4, 0.3],
    ])?;

    for beta in [2.0, 0.5, 0.05] {
        let cfg = SinkhornConfig {
            beta,
            ..SinkhornConfig::default()
        };
        let out = sinkhorn(&cost, &cfg)?;
        println!(
            "beta = {beta}: {} iterations, marginal violation {:.1e}",
            out.iterations, out.violation
        );
        for row in out.coupling.values().rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            println!("  [{}]", cells.join(", "));
        }
    }

    // the plan factors as diag(a) K diag(b) with K = exp(-(C - min C) / beta)
    let cfg = SinkhornConfig::default();
    let out = sinkhorn(&cost, &cfg)?;
    let min = cost.values().iter().copied().fold(f64::INFINITY, f64::min);
    let (i, j) = (1, 2);
    let rebuilt = (out.log_row_scaling[i] + out.log_col_scaling[j] - (cost.values()[[i, j]] - min) / cfg.beta).exp();
    println!("P[1,2] = {:.6}, rebuilt from scalings = {rebuilt:.6}", out.coupling.values()[[i, j]]);
    Ok(())
}
