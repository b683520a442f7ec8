//! Tab-separated dataset files.
//!
//! - triplets: `head<TAB>relation<TAB>tail`
//! - alignments: `left<TAB>right`
//! - features / embeddings: `id<TAB>v1,v2,...,vn`
//!
//! Blank lines are ignored. Floats are written with the shortest
//! representation that parses back to the same value.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, FeatureMatrix, IdMap, KgPair, KnowledgeGraph, Provenance, Triplet};

/// Locations of the six dataset files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub triplets1: PathBuf,
    pub triplets2: PathBuf,
    pub seeds: PathBuf,
    pub test: PathBuf,
    pub features1: PathBuf,
    pub features2: PathBuf,
}

impl DatasetPaths {
    /// Conventional file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            triplets1: dir.join("triplets_1.tsv"),
            triplets2: dir.join("triplets_2.tsv"),
            seeds: dir.join("seeds.tsv"),
            test: dir.join("test.tsv"),
            features1: dir.join("features_1.tsv"),
            features2: dir.join("features_2.tsv"),
        }
    }

    /// Conventional truth file next to the dataset.
    pub fn truth_in_dir(dir: impl AsRef<Path>) -> PathBuf {
        dir.as_ref().join("truth.tsv")
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Path)> {
        [
            ("triplets1", self.triplets1.as_path()),
            ("triplets2", self.triplets2.as_path()),
            ("seeds", self.seeds.as_path()),
            ("test", self.test.as_path()),
            ("features1", self.features1.as_path()),
            ("features2", self.features2.as_path()),
        ]
        .into_iter()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn fields<'a>(path: &Path, line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != n || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::parse(
            path,
            line_no,
            format!("expected {n} tab-separated fields, found `{line}`"),
        ));
    }
    Ok(parts)
}

/// Raw labeled triplets of one file.
pub fn read_triplet_labels(path: &Path) -> Result<Vec<(String, String, String)>> {
    let text = read(path)?;
    lines(&text)
        .map(|(n, line)| {
            let f = fields(path, n, line, 3)?;
            Ok((f[0].to_owned(), f[1].to_owned(), f[2].to_owned()))
        })
        .collect()
}

/// Labeled pairs with their line numbers.
pub fn read_pair_labels(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let text = read(path)?;
    lines(&text)
        .map(|(n, line)| {
            let f = fields(path, n, line, 2)?;
            Ok((n, f[0].to_owned(), f[1].to_owned()))
        })
        .collect()
}

/// Labeled vectors with their line numbers; every row must share one
/// dimension.
pub fn read_vector_rows(path: &Path) -> Result<Vec<(usize, String, Vec<f64>)>> {
    let text = read(path)?;
    let mut rows: Vec<(usize, String, Vec<f64>)> = Vec::new();
    let mut dim: Option<usize> = None;
    for (n, line) in lines(&text) {
        let f = fields(path, n, line, 2)?;
        let values = f[1]
            .split(',')
            .map(|v| {
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(path, n, format!("invalid number `{v}`")))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::parse(path, n, format!("non-finite value `{v}`")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::DimensionMismatch {
                    path: path.to_owned(),
                    line: n,
                    expected: d,
                    found: values.len(),
                })
            }
            _ => {}
        }
        rows.push((n, f[0].to_owned(), values));
    }
    Ok(rows)
}

fn load_graph(
    triplets_path: &Path,
    features_path: &Path,
) -> Result<(KnowledgeGraph, FeatureMatrix)> {
    let raw = read_triplet_labels(triplets_path)?;
    let rows = read_vector_rows(features_path)?;
    let entities = IdMap::sorted(
        raw.iter()
            .flat_map(|(h, _, t)| [h.clone(), t.clone()])
            .chain(rows.iter().map(|(_, id, _)| id.clone())),
    );
    let relations = IdMap::sorted(raw.iter().map(|(_, r, _)| r.clone()));
    let triplets = raw
        .iter()
        .map(|(h, r, t)| {
            Triplet::new(
                entities.get(h).expect("registered"),
                relations.get(r).expect("registered"),
                entities.get(t).expect("registered"),
            )
        })
        .collect();
    let dim = rows.first().map_or(0, |r| r.2.len());
    let mut matrix = Array2::zeros((entities.len(), dim));
    let mut seen = vec![false; entities.len()];
    for (n, label, values) in &rows {
        let id = entities.get(label).expect("registered");
        if seen[id] {
            return Err(Error::parse(
                features_path,
                *n,
                format!("duplicate feature row for `{label}`"),
            ));
        }
        seen[id] = true;
        matrix.row_mut(id).assign(&ndarray::ArrayView1::from(values.as_slice()));
    }
    if let Some(id) = seen.iter().position(|s| !s) {
        return Err(Error::MissingFeatures {
            graph: "the graph",
            label: entities.label(id).to_owned(),
        });
    }
    let kg = KnowledgeGraph::new(entities, relations, triplets)?;
    Ok((kg, FeatureMatrix::new(matrix)?))
}

/// Resolves labeled pairs against two graphs' id maps.
pub fn read_alignment_file(
    path: &Path,
    left: &IdMap,
    right: &IdMap,
    provenance: Provenance,
    require_one_to_one: bool,
) -> Result<AlignmentSet> {
    let mut set = AlignmentSet::new();
    let mut lefts = HashSet::new();
    let mut rights = HashSet::new();
    for (n, l, r) in read_pair_labels(path)? {
        let li = left.get(&l).ok_or_else(|| Error::DanglingId {
            path: path.to_owned(),
            line: n,
            label: l.clone(),
            graph: "the first graph",
        })?;
        let ri = right.get(&r).ok_or_else(|| Error::DanglingId {
            path: path.to_owned(),
            line: n,
            label: r.clone(),
            graph: "the second graph",
        })?;
        if require_one_to_one {
            if !lefts.insert(li) {
                return Err(Error::DuplicateAlignment {
                    path: path.to_owned(),
                    line: n,
                    side: "left",
                    label: l,
                });
            }
            if !rights.insert(ri) {
                return Err(Error::DuplicateAlignment {
                    path: path.to_owned(),
                    line: n,
                    side: "right",
                    label: r,
                });
            }
        }
        set.insert((li, ri).into(), provenance);
    }
    Ok(set)
}

/// Loads and validates a dataset.
pub fn ingest_dataset(paths: &DatasetPaths) -> Result<KgPair> {
    let (g1, f1) = load_graph(&paths.triplets1, &paths.features1)
        .map_err(|e| name_graph(e, "the first graph"))?;
    let (g2, f2) = load_graph(&paths.triplets2, &paths.features2)
        .map_err(|e| name_graph(e, "the second graph"))?;
    if f1.dim() != f2.dim() {
        return Err(Error::DimensionMismatch {
            path: paths.features2.clone(),
            line: 1,
            expected: f1.dim(),
            found: f2.dim(),
        });
    }
    let seeds = read_alignment_file(&paths.seeds, g1.entities(), g2.entities(), Provenance::Seed, true)?;
    let test = read_alignment_file(&paths.test, g1.entities(), g2.entities(), Provenance::Truth, false)?;
    KgPair::new(g1, g2, f1, f2, seeds, test)
}

fn name_graph(e: Error, graph: &'static str) -> Error {
    match e {
        Error::MissingFeatures { label, .. } => Error::MissingFeatures { graph, label },
        other => other,
    }
}

fn write(path: &Path, text: String) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the raw (pre-dedup) triplets with original labels.
pub fn write_triplets(path: &Path, kg: &KnowledgeGraph) -> Result<()> {
    let mut out = String::new();
    for t in kg.raw_triplets() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            kg.entities().label(t.head),
            kg.relations().label(t.relation),
            kg.entities().label(t.tail)
        );
    }
    write(path, out)
}

pub fn write_alignments(path: &Path, set: &AlignmentSet, left: &IdMap, right: &IdMap) -> Result<()> {
    let mut out = String::new();
    for p in set.pairs() {
        let _ = writeln!(out, "{}\t{}", left.label(p.left), right.label(p.right));
    }
    write(path, out)
}

/// Writes one labeled row per matrix row.
pub fn write_vectors(path: &Path, labels: &IdMap, rows: ArrayView2<'_, f64>) -> Result<()> {
    let mut out = String::new();
    for (i, row) in rows.outer_iter().enumerate() {
        out.push_str(labels.label(i));
        out.push('\t');
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    write(path, out)
}

/// Writes all six dataset files of a pair.
pub fn write_dataset(paths: &DatasetPaths, pair: &KgPair) -> Result<()> {
    write_triplets(&paths.triplets1, &pair.g1)?;
    write_triplets(&paths.triplets2, &pair.g2)?;
    write_alignments(&paths.seeds, pair.seeds(), pair.g1.entities(), pair.g2.entities())?;
    write_alignments(&paths.test, pair.test(), pair.g1.entities(), pair.g2.entities())?;
    write_vectors(&paths.features1, pair.g1.entities(), pair.features1.as_array().view())?;
    write_vectors(&paths.features2, pair.g2.entities(), pair.features2.as_array().view())?;
    Ok(())
}

/// Reads a labeled vector file into an id map and a matrix.
pub fn read_vectors(path: &Path) -> Result<(IdMap, Array2<f64>)> {
    let rows = read_vector_rows(path)?;
    let mut seen = BTreeSet::new();
    for (n, label, _) in &rows {
        if !seen.insert(label.clone()) {
            return Err(Error::parse(path, *n, format!("duplicate row for `{label}`")));
        }
    }
    let labels = IdMap::from_labels(rows.iter().map(|r| r.1.clone()));
    let dim = rows.first().map_or(0, |r| r.2.len());
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, (_, _, v)) in rows.iter().enumerate() {
        m.row_mut(i).assign(&ndarray::ArrayView1::from(v.as_slice()));
    }
    Ok((labels, m))
}
