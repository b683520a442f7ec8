//! Entropy-regularized optimal transport between the two unaligned entity
//! sets and the conflict-free selection of pseudo-labels from the coupling.
//!
//! Marginals are uniform: every row carries mass `1/R` and every column
//! `1/C`. A pair is selected when its coupling mass strictly exceeds
//! `1/(2·min(R, C))`. Because a row's mass is `1/R`, at most one entry per
//! row can exceed half of it, and likewise per column, so the selected set
//! is one-to-one for any feasible coupling.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::encoder::EmbeddingTable;
use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, EntityId, KgPair, Provenance};
use crate::neighborhood::{rectified_cost, NeighborhoodMatcher};

/// Dense transport costs with the entity ids of rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
    row_ids: Vec<EntityId>,
    col_ids: Vec<EntityId>,
}

impl CostMatrix {
    pub fn new(values: Array2<f64>, row_ids: Vec<EntityId>, col_ids: Vec<EntityId>) -> Result<Self> {
        if values.nrows() != row_ids.len() || values.ncols() != col_ids.len() {
            return Err(Error::InvalidConfig("cost matrix shape does not match its ids".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("cost matrix has non-finite entries".into()));
        }
        Ok(Self {
            values: values.as_standard_layout().into_owned(),
            row_ids,
            col_ids,
        })
    }

    /// Rows and columns identified by their positions.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        Self::new(values, (0..r).collect(), (0..c).collect())
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row_ids(&self) -> &[EntityId] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[EntityId] {
        &self.col_ids
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Same matrix with `delta` added to every entry.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        Self::new(&self.values + delta, self.row_ids.clone(), self.col_ids.clone())
    }
}

/// A transport plan over the same rows and columns as its cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    values: Array2<f64>,
    row_ids: Vec<EntityId>,
    col_ids: Vec<EntityId>,
}

impl CouplingMatrix {
    pub fn new(values: Array2<f64>, row_ids: Vec<EntityId>, col_ids: Vec<EntityId>) -> Result<Self> {
        if values.nrows() != row_ids.len() || values.ncols() != col_ids.len() {
            return Err(Error::InvalidConfig("coupling shape does not match its ids".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("coupling entries must be finite and non-negative".into()));
        }
        Ok(Self {
            values,
            row_ids,
            col_ids,
        })
    }

    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        Self::new(values, (0..r).collect(), (0..c).collect())
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row_ids(&self) -> &[EntityId] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[EntityId] {
        &self.col_ids
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Largest absolute deviation of any row or column sum from its
    /// uniform target.
    pub fn max_marginal_violation(&self) -> f64 {
        let (r, c) = self.shape();
        let row_target = 1.0 / r as f64;
        let col_target = 1.0 / c as f64;
        let rows = self
            .values
            .rows()
            .into_iter()
            .map(|row| (row.sum() - row_target).abs())
            .fold(0.0, f64::max);
        let cols = self
            .values
            .columns()
            .into_iter()
            .map(|col| (col.sum() - col_target).abs())
            .fold(0.0, f64::max);
        rows.max(cols)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.sum()
    }

    /// `1 / (2·min(R, C))`.
    pub fn selection_threshold(&self) -> f64 {
        let (r, c) = self.shape();
        1.0 / (2.0 * r.min(c) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornConfig {
    /// Entropic regularization strength.
    pub beta: f64,
    pub max_iterations: usize,
    /// Stop once the max marginal violation drops below this.
    pub tolerance: f64,
    /// Run the updates on log-scalings (stable for small `beta`).
    pub log_domain: bool,
    /// Convergence is checked every this many iterations.
    pub check_every: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            max_iterations: 500,
            tolerance: 1e-6,
            log_domain: true,
            check_every: 10,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be positive".into()));
        }
        if self.max_iterations == 0 || self.check_every == 0 {
            return Err(Error::InvalidConfig("iteration counts must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a Sinkhorn solve.
///
/// The plan factors as `P[i][j] = exp(log_row[i] + log_col[j]) · K[i][j]`
/// with kernel `K = exp(−(C − min C)/β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornOutput {
    pub coupling: CouplingMatrix,
    pub iterations: usize,
    pub violation: f64,
    pub converged: bool,
    pub log_row_scaling: Vec<f64>,
    pub log_col_scaling: Vec<f64>,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Solves the entropy-regularized transport problem with uniform marginals
/// by alternating row and column scaling.
pub fn sinkhorn(cost: &CostMatrix, cfg: &SinkhornConfig) -> Result<SinkhornOutput> {
    cfg.validate()?;
    let (r, c) = cost.shape();
    if r == 0 || c == 0 {
        return Err(Error::Empty("the cost matrix"));
    }
    let min = cost.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = cost.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (max - min) / cfg.beta;
    if !scale.is_finite() {
        return Err(Error::NonFiniteKernel {
            scale: max - min,
            beta: cfg.beta,
        });
    }
    // log kernel, shifted so its largest entry is 0
    let log_kernel: Vec<f64> = cost.values.iter().map(|v| -(v - min) / cfg.beta).collect();
    let (log_row, log_col, iterations, converged) = if cfg.log_domain {
        solve_log_domain(&log_kernel, r, c, cfg)
    } else {
        solve_scaling(&log_kernel, r, c, cfg, max - min)?
    };
    let mut values = Array2::<f64>::zeros((r, c));
    for i in 0..r {
        for j in 0..c {
            values[[i, j]] = (log_kernel[i * c + j] + log_row[i] + log_col[j]).exp();
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteKernel {
            scale: max - min,
            beta: cfg.beta,
        });
    }
    let coupling = CouplingMatrix::new(values, cost.row_ids.clone(), cost.col_ids.clone())?;
    let violation = coupling.max_marginal_violation();
    Ok(SinkhornOutput {
        coupling,
        iterations,
        violation,
        converged: converged || violation < cfg.tolerance,
        log_row_scaling: log_row,
        log_col_scaling: log_col,
    })
}

fn column_violation(log_kernel: &[f64], f: &[f64], g: &[f64], c: usize) -> f64 {
    let target = 1.0 / c as f64;
    let mut sums = vec![0.0; c];
    for (i, fi) in f.iter().enumerate() {
        let row = &log_kernel[i * c..(i + 1) * c];
        for ((s, k), gj) in sums.iter_mut().zip(row).zip(g) {
            *s += (k + fi + gj).exp();
        }
    }
    sums.iter().map(|s| (s - target).abs()).fold(0.0, f64::max)
}

fn solve_log_domain(log_kernel: &[f64], r: usize, c: usize, cfg: &SinkhornConfig) -> (Vec<f64>, Vec<f64>, usize, bool) {
    let log_mu = -(r as f64).ln();
    let log_nu = -(c as f64).ln();
    let mut transposed = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            transposed[j * r + i] = log_kernel[i * c + j];
        }
    }
    let mut f = vec![0.0; r];
    let mut g = vec![0.0; c];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        for (j, gj) in g.iter_mut().enumerate() {
            let col = &transposed[j * r..(j + 1) * r];
            *gj = log_nu - log_sum_exp(col.iter().zip(&f).map(|(k, fi)| k + fi));
        }
        for (i, fi) in f.iter_mut().enumerate() {
            let row = &log_kernel[i * c..(i + 1) * c];
            *fi = log_mu - log_sum_exp(row.iter().zip(&g).map(|(k, gj)| k + gj));
        }
        // rows are exact after the row update; only columns can be off
        if iterations % cfg.check_every == 0 && column_violation(log_kernel, &f, &g, c) < cfg.tolerance {
            converged = true;
            break;
        }
    }
    (f, g, iterations, converged)
}

fn solve_scaling(
    log_kernel: &[f64],
    r: usize,
    c: usize,
    cfg: &SinkhornConfig,
    spread: f64,
) -> Result<(Vec<f64>, Vec<f64>, usize, bool)> {
    let kernel: Vec<f64> = log_kernel.iter().map(|v| v.exp()).collect();
    let mu = 1.0 / r as f64;
    let nu = 1.0 / c as f64;
    let mut a = vec![mu; r];
    let mut b = vec![1.0; c];
    let mut iterations = 0;
    let mut converged = false;
    let fail = || Error::NonFiniteKernel {
        scale: spread,
        beta: cfg.beta,
    };
    while iterations < cfg.max_iterations {
        iterations += 1;
        let mut kta = vec![0.0; c];
        for (i, ai) in a.iter().enumerate() {
            for (s, k) in kta.iter_mut().zip(&kernel[i * c..(i + 1) * c]) {
                *s += k * ai;
            }
        }
        for (bj, s) in b.iter_mut().zip(&kta) {
            *bj = nu / s;
        }
        for (i, ai) in a.iter_mut().enumerate() {
            let s: f64 = kernel[i * c..(i + 1) * c].iter().zip(&b).map(|(k, bj)| k * bj).sum();
            *ai = mu / s;
        }
        if a.iter().chain(&b).any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(fail());
        }
        if iterations % cfg.check_every == 0 {
            let mut sums = vec![0.0; c];
            for (i, ai) in a.iter().enumerate() {
                for ((s, k), bj) in sums.iter_mut().zip(&kernel[i * c..(i + 1) * c]).zip(&b) {
                    *s += ai * k * bj;
                }
            }
            if sums.iter().map(|s| (s - nu).abs()).fold(0.0, f64::max) < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    Ok((
        a.iter().map(|v| v.ln()).collect(),
        b.iter().map(|v| v.ln()).collect(),
        iterations,
        converged,
    ))
}

/// Pairs whose coupling mass strictly exceeds `1/(2·min(R, C))`, mapped
/// back to entity ids. Entries within a relative `1e-9` of the threshold
/// count as equal to it, so mass that sits exactly on the threshold is not
/// selected through rounding.
///
/// The result is one-to-one for any coupling with exact uniform marginals;
/// a violation can only come from marginal error and is reported as
/// [`Error::SelectionConflict`].
const SELECTION_RTOL: f64 = 1e-9;

pub fn select_alignments(coupling: &CouplingMatrix) -> Result<AlignmentSet> {
    let threshold = coupling.selection_threshold() * (1.0 + SELECTION_RTOL);
    let mut selected = AlignmentSet::new();
    for ((i, j), &v) in coupling.values.indexed_iter() {
        if v > threshold {
            selected.insert((coupling.row_ids[i], coupling.col_ids[j]).into(), Provenance::Pseudo(0));
        }
    }
    if let Some((side, entity)) = selected.first_conflict() {
        return Err(Error::SelectionConflict { side, entity });
    }
    Ok(selected)
}

/// Solver diagnostics of one pseudo-labeling call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornDiagnostics {
    pub rows: usize,
    pub cols: usize,
    pub iterations: usize,
    pub violation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabels {
    pub selected: AlignmentSet,
    /// `None` when an unaligned set was empty and nothing was solved.
    pub diagnostics: Option<SinkhornDiagnostics>,
}

impl PseudoLabels {
    pub fn exhausted(&self) -> bool {
        self.diagnostics.is_none()
    }
}

/// Rectified cost, Sinkhorn, then threshold selection over the pair's
/// current unaligned sets.
pub fn pseudo_label(
    pair: &KgPair,
    table: &EmbeddingTable,
    matcher: &NeighborhoodMatcher,
    lambda: f64,
    cfg: &SinkhornConfig,
) -> Result<PseudoLabels> {
    let Some(cost) = rectified_cost(pair, table, matcher, lambda)? else {
        return Ok(PseudoLabels {
            selected: AlignmentSet::new(),
            diagnostics: None,
        });
    };
    solve_and_select(&cost, cfg)
}

/// Sinkhorn followed by threshold selection on an explicit cost matrix.
pub fn solve_and_select(cost: &CostMatrix, cfg: &SinkhornConfig) -> Result<PseudoLabels> {
    let out = sinkhorn(cost, cfg)?;
    if !out.converged {
        log::warn!(
            "sinkhorn stopped after {} iterations with marginal violation {:.3e}",
            out.iterations,
            out.violation
        );
    }
    let selected = select_alignments(&out.coupling)?;
    let (rows, cols) = cost.shape();
    Ok(PseudoLabels {
        selected,
        diagnostics: Some(SinkhornDiagnostics {
            rows,
            cols,
            iterations: out.iterations,
            violation: out.violation,
            converged: out.converged,
        }),
    })
}

/// Writes `"<rows> <cols>\n"` followed by row-major little-endian `f64`s.
pub fn write_matrix(path: &Path, values: &Array2<f64>) -> Result<()> {
    let (r, c) = values.dim();
    let mut buf = Vec::with_capacity(32 + 8 * r * c);
    let _ = writeln!(buf, "{r} {c}");
    for v in values.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(path, 1, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::parse(path, 1, "header is not UTF-8"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(path, 1, format!("invalid dimension `{t}`"))))
        .collect::<Result<_>>()?;
    let [r, c] = dims[..] else {
        return Err(Error::parse(path, 1, "header must be `<rows> <cols>`"));
    };
    let body = &bytes[newline + 1..];
    if body.len() != 8 * r * c {
        return Err(Error::parse(
            path,
            2,
            format!("expected {} bytes of data, found {}", 8 * r * c, body.len()),
        ));
    }
    let data = body
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().expect("8 bytes")))
        .collect();
    Ok(Array2::from_shape_vec((r, c), data).expect("shape"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn solve(c: Array2<f64>, beta: f64) -> SinkhornOutput {
        let cfg = SinkhornConfig {
            beta,
            ..SinkhornConfig::default()
        };
        sinkhorn(&CostMatrix::from_values(c).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn zero_cost_gives_uniform_coupling() {
        let out = solve(Array2::zeros((2, 2)), 0.5);
        for v in out.coupling.values() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn separated_costs_concentrate_on_the_diagonal() {
        let out = solve(array![[0.0, 10.0], [10.0, 0.0]], 0.5);
        let p = out.coupling.values();
        assert!((p[[0, 0]] - 0.5).abs() < 1e-8 && (p[[1, 1]] - 0.5).abs() < 1e-8);
        assert!(p[[0, 1]] <= 1e-8 && p[[1, 0]] <= 1e-8);
        // brute-force oracle: identity costs 0, swap costs 20
        let perms = [[0usize, 1], [1, 0]];
        let cost = |p: &[usize; 2]| -> f64 { [[0.0f64, 10.0], [10.0, 0.0]][0][p[0]] + [[0.0, 10.0], [10.0, 0.0]][1][p[1]] };
        let best = perms.iter().min_by(|a, b| cost(a).total_cmp(&cost(b))).unwrap();
        let sel = select_alignments(&out.coupling).unwrap();
        let expected: AlignmentSet = (0..2).map(|i| (i, best[i])).collect();
        assert_eq!(sel.pairs().collect::<Vec<_>>(), expected.pairs().collect::<Vec<_>>());
    }

    #[test]
    fn single_row_is_fully_determined() {
        let out = solve(array![[3.0, -7.5]], 0.5);
        let p = out.coupling.values();
        assert!((p[[0, 0]] - 0.5).abs() < 1e-12 && (p[[0, 1]] - 0.5).abs() < 1e-12);
        assert!(select_alignments(&out.coupling).unwrap().is_empty());
    }

    #[test]
    fn selection_examples() {
        let diag = CouplingMatrix::from_values(array![[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let sel = select_alignments(&diag).unwrap();
        assert_eq!(sel.pairs().collect::<Vec<_>>(), vec![(0, 0).into(), (1, 1).into()]);
        let uniform = CouplingMatrix::from_values(Array2::from_elem((2, 2), 0.25)).unwrap();
        assert!(select_alignments(&uniform).unwrap().is_empty());
    }

    #[test]
    fn selection_maps_back_to_entity_ids() {
        let p = CouplingMatrix::new(array![[0.0, 0.5], [0.5, 0.0]], vec![4, 9], vec![2, 3]).unwrap();
        let sel = select_alignments(&p).unwrap();
        assert_eq!(sel.pairs().collect::<Vec<_>>(), vec![(4, 3).into(), (9, 2).into()]);
    }

    #[test]
    fn infeasible_coupling_conflict_is_reported() {
        let p = CouplingMatrix::from_values(array![[0.4, 0.4], [0.1, 0.1]]).unwrap();
        assert!(matches!(select_alignments(&p), Err(Error::SelectionConflict { .. })));
    }

    #[test]
    fn plan_factors_through_the_kernel() {
        let c = array![[0.3, -1.2, 2.0], [1.1, 0.4, -0.5]];
        for log_domain in [true, false] {
            let cfg = SinkhornConfig {
                log_domain,
                ..SinkhornConfig::default()
            };
            let out = sinkhorn(&CostMatrix::from_values(c.clone()).unwrap(), &cfg).unwrap();
            assert!(out.converged);
            let min = c.iter().copied().fold(f64::INFINITY, f64::min);
            for ((i, j), p) in out.coupling.values().indexed_iter() {
                let k = (-(c[[i, j]] - min) / cfg.beta).exp();
                let expected = out.log_row_scaling[i].exp() * k * out.log_col_scaling[j].exp();
                assert!((p - expected).abs() <= 1e-12 * expected.max(1e-300));
            }
        }
    }

    #[test]
    fn log_and_scaling_paths_agree() {
        let c = array![[0.3, -1.2, 2.0, 0.0], [1.1, 0.4, -0.5, 0.9], [0.2, 0.2, 0.7, -0.3]];
        let mut cfg = SinkhornConfig::default();
        let a = sinkhorn(&CostMatrix::from_values(c.clone()).unwrap(), &cfg).unwrap();
        cfg.log_domain = false;
        let b = sinkhorn(&CostMatrix::from_values(c).unwrap(), &cfg).unwrap();
        for (x, y) in a.coupling.values().iter().zip(b.coupling.values()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn scaling_path_reports_underflow() {
        let cfg = SinkhornConfig {
            beta: 0.01,
            log_domain: false,
            ..SinkhornConfig::default()
        };
        let c = CostMatrix::from_values(array![[0.0, 0.0], [50.0, 50.0]]).unwrap();
        assert!(matches!(sinkhorn(&c, &cfg), Err(Error::NonFiniteKernel { .. })));
        let cfg = SinkhornConfig { log_domain: true, ..cfg };
        assert!(sinkhorn(&c, &cfg).unwrap().converged);
    }

    #[test]
    fn matrix_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = array![[1.5, -0.25, f64::MIN_POSITIVE], [3.0, 1e300, -0.0]];
        write_matrix(&path, &m).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"2 3\n"));
        assert_eq!(bytes.len(), 4 + 48);
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), m.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn truncated_matrix_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        fs::write(&path, b"2 2\n\x00\x00").unwrap();
        assert!(read_matrix(&path).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn costs() -> impl Strategy<Value = Array2<f64>> {
            (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
                proptest::collection::vec(-10.0f64..10.0, r * c)
                    .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
            })
        }

        proptest! {
            #[test]
            fn selection_is_one_to_one_and_bounded(c in costs(), beta in prop_oneof![Just(0.05), Just(0.5), Just(2.0)]) {
                let cfg = SinkhornConfig { beta, max_iterations: 5000, ..SinkhornConfig::default() };
                let out = sinkhorn(&CostMatrix::from_values(c.clone()).unwrap(), &cfg).unwrap();
                prop_assert!(out.coupling.values().iter().all(|&v| v >= 0.0));
                let sel = select_alignments(&out.coupling).unwrap();
                prop_assert!(sel.is_one_to_one());
                prop_assert!(sel.len() <= c.nrows().min(c.ncols()));
            }

            #[test]
            fn constant_shift_leaves_plan_unchanged(c in costs(), delta in -50.0f64..50.0) {
                let cfg = SinkhornConfig::default();
                let cost = CostMatrix::from_values(c).unwrap();
                let a = sinkhorn(&cost, &cfg).unwrap();
                let b = sinkhorn(&cost.shifted(delta).unwrap(), &cfg).unwrap();
                for (x, y) in a.coupling.values().iter().zip(b.coupling.values()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
                prop_assert_eq!(select_alignments(&a.coupling).unwrap(), select_alignments(&b.coupling).unwrap());
            }
        }
    }
}
