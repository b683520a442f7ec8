//! Knowledge-graph pairs, alignment sets and the working-set bookkeeping
//! used by the pseudo-labeling loop.
//!
//! Entities and relations are addressed by dense indices local to their
//! graph. Raw labels from input files are kept in an [`IdMap`] so that
//! results can be written back with the original identifiers.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Dense entity index within one graph.
pub type EntityId = usize;
/// Dense relation index within one graph.
pub type RelationId = usize;

/// Bidirectional map between raw file labels and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    /// Labels `"0"`, `"1"`, ... for `n` ids.
    pub fn sequential(n: usize) -> Self {
        Self::from_labels((0..n).map(|i| i.to_string()))
    }

    /// Builds a map assigning ids in iteration order. Duplicate labels keep
    /// their first id.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = IdMap::default();
        for label in labels {
            map.intern(label.into());
        }
        map
    }

    /// Sorted dense remap: numeric order when every label is an integer,
    /// lexicographic otherwise.
    pub fn sorted<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let unique: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        let mut ordered: Vec<String> = unique.into_iter().collect();
        if ordered.iter().all(|l| l.parse::<i64>().is_ok()) {
            ordered.sort_by_key(|l| l.parse::<i64>().unwrap_or_default());
        }
        Self::from_labels(ordered)
    }

    fn intern(&mut self, label: String) -> usize {
        if let Some(&id) = self.index.get(&label) {
            return id;
        }
        let id = self.labels.len();
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        id
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triplet {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// Row-normalized neighbor structure in compressed sparse row layout.
///
/// Every entity has a self-loop; relation types are ignored and parallel
/// edges collapse into one. Each row's weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<EntityId>,
    weights: Vec<f64>,
}

impl Adjacency {
    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Neighbors of `entity` in ascending id order, with their weights.
    pub fn row(&self, entity: EntityId) -> (&[EntityId], &[f64]) {
        let range = self.offsets[entity]..self.offsets[entity + 1];
        (&self.neighbors[range.clone()], &self.weights[range])
    }

    pub fn nnz(&self) -> usize {
        self.neighbors.len()
    }
}

/// Builds the undirected, self-looped, row-normalized adjacency of a graph.
pub fn build_adjacency(num_entities: usize, triplets: &[Triplet]) -> Adjacency {
    let mut sets: Vec<BTreeSet<EntityId>> = (0..num_entities).map(|e| BTreeSet::from([e])).collect();
    for t in triplets {
        sets[t.head].insert(t.tail);
        sets[t.tail].insert(t.head);
    }
    let mut offsets = Vec::with_capacity(num_entities + 1);
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for set in &sets {
        let w = 1.0 / set.len() as f64;
        neighbors.extend(set.iter().copied());
        weights.extend(std::iter::repeat_n(w, set.len()));
        offsets.push(neighbors.len());
    }
    Adjacency {
        offsets,
        neighbors,
        weights,
    }
}

/// An immutable knowledge graph.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: IdMap,
    relations: IdMap,
    raw_triplets: Vec<Triplet>,
    triplets: Vec<Triplet>,
    adjacency: Adjacency,
}

impl KnowledgeGraph {
    /// Builds a graph from labeled entities and relations. `raw_triplets`
    /// may contain duplicates; they are kept for frequency counting and
    /// removed from the deduplicated triplet list.
    pub fn new(entities: IdMap, relations: IdMap, raw_triplets: Vec<Triplet>) -> Result<Self> {
        for t in &raw_triplets {
            if t.head >= entities.len() || t.tail >= entities.len() {
                return Err(Error::InvalidConfig(format!(
                    "triplet {t:?} references an unregistered entity"
                )));
            }
            if t.relation >= relations.len() {
                return Err(Error::InvalidConfig(format!(
                    "triplet {t:?} references an unregistered relation"
                )));
            }
        }
        let triplets: Vec<Triplet> = raw_triplets
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let adjacency = build_adjacency(entities.len(), &triplets);
        Ok(Self {
            entities,
            relations,
            raw_triplets,
            triplets,
            adjacency,
        })
    }

    /// Graph with sequential labels.
    pub fn from_triplets(
        num_entities: usize,
        num_relations: usize,
        raw_triplets: Vec<Triplet>,
    ) -> Result<Self> {
        Self::new(
            IdMap::sequential(num_entities),
            IdMap::sequential(num_relations),
            raw_triplets,
        )
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entities(&self) -> &IdMap {
        &self.entities
    }

    pub fn relations(&self) -> &IdMap {
        &self.relations
    }

    /// Deduplicated triplets, sorted.
    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    /// Triplets as loaded, including duplicates.
    pub fn raw_triplets(&self) -> &[Triplet] {
        &self.raw_triplets
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }
}

/// One feature row per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("feature matrix has non-finite entries".into()));
        }
        Ok(Self { rows })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, entity: EntityId) -> ArrayView1<'_, f64> {
        self.rows.row(entity)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.rows
    }
}

/// Where an aligned pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Seed,
    /// Accepted pseudo-label from the given iteration (1-based).
    Pseudo(usize),
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignedPair {
    pub left: EntityId,
    pub right: EntityId,
}

impl AlignedPair {
    pub fn new(left: EntityId, right: EntityId) -> Self {
        Self { left, right }
    }
}

impl From<(EntityId, EntityId)> for AlignedPair {
    fn from((left, right): (EntityId, EntityId)) -> Self {
        Self { left, right }
    }
}

/// A set of cross-graph pairs, ordered by `(left, right)`.
///
/// The set itself does not enforce one-to-one correspondence; the working
/// set held by [`KgPair`] does.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    entries: BTreeMap<AlignedPair, Provenance>,
}

impl AlignmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, P>(pairs: I, provenance: Provenance) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<AlignedPair>,
    {
        let mut set = Self::new();
        for p in pairs {
            set.insert(p.into(), provenance);
        }
        set
    }

    /// Inserts a pair; an existing pair keeps its original provenance.
    pub fn insert(&mut self, pair: AlignedPair, provenance: Provenance) -> bool {
        if self.entries.contains_key(&pair) {
            return false;
        }
        self.entries.insert(pair, provenance);
        true
    }

    pub fn contains(&self, pair: &AlignedPair) -> bool {
        self.entries.contains_key(pair)
    }

    pub fn provenance(&self, pair: &AlignedPair) -> Option<Provenance> {
        self.entries.get(pair).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AlignedPair, &Provenance)> {
        self.entries.iter()
    }

    pub fn pairs(&self) -> impl Iterator<Item = AlignedPair> + '_ {
        self.entries.keys().copied()
    }

    pub fn lefts(&self) -> BTreeSet<EntityId> {
        self.pairs().map(|p| p.left).collect()
    }

    pub fn rights(&self) -> BTreeSet<EntityId> {
        self.pairs().map(|p| p.right).collect()
    }

    /// True when no two pairs share a left entity and no two share a right.
    pub fn is_one_to_one(&self) -> bool {
        self.lefts().len() == self.len() && self.rights().len() == self.len()
    }

    /// First entity reused on either side, if any.
    pub fn first_conflict(&self) -> Option<(&'static str, EntityId)> {
        let mut lefts = BTreeSet::new();
        let mut rights = BTreeSet::new();
        for p in self.pairs() {
            if !lefts.insert(p.left) {
                return Some(("left", p.left));
            }
            if !rights.insert(p.right) {
                return Some(("right", p.right));
            }
        }
        None
    }

    pub fn intersection(&self, other: &AlignmentSet) -> AlignmentSet {
        AlignmentSet {
            entries: self
                .entries
                .iter()
                .filter(|(p, _)| other.contains(p))
                .map(|(p, v)| (*p, *v))
                .collect(),
        }
    }

    pub fn union(&self, other: &AlignmentSet) -> AlignmentSet {
        let mut out = self.clone();
        for (p, v) in other.iter() {
            out.insert(*p, *v);
        }
        out
    }

    pub fn is_subset(&self, other: &AlignmentSet) -> bool {
        self.pairs().all(|p| other.contains(&p))
    }

    /// Left-to-right lookup table of length `n_left`. Later pairs overwrite
    /// earlier ones when the set is not one-to-one.
    pub fn right_of(&self, n_left: usize) -> Vec<Option<EntityId>> {
        let mut out = vec![None; n_left];
        for p in self.pairs() {
            if p.left < n_left {
                out[p.left] = Some(p.right);
            }
        }
        out
    }

    /// The same pairs with every side swapped.
    pub fn transposed(&self) -> AlignmentSet {
        AlignmentSet {
            entries: self
                .entries
                .iter()
                .map(|(p, v)| (AlignedPair::new(p.right, p.left), *v))
                .collect(),
        }
    }
}

impl FromIterator<(EntityId, EntityId)> for AlignmentSet {
    fn from_iter<T: IntoIterator<Item = (EntityId, EntityId)>>(iter: T) -> Self {
        AlignmentSet::from_pairs(iter, Provenance::Pseudo(0))
    }
}

/// Two graphs with their features, seed and test alignments, and the
/// working alignment set `S` grown by pseudo-labeling.
#[derive(Debug, Clone)]
pub struct KgPair {
    pub g1: KnowledgeGraph,
    pub g2: KnowledgeGraph,
    pub features1: FeatureMatrix,
    pub features2: FeatureMatrix,
    seeds: AlignmentSet,
    test: AlignmentSet,
    working: AlignmentSet,
    unaligned1: Vec<EntityId>,
    unaligned2: Vec<EntityId>,
}

impl KgPair {
    pub fn new(
        g1: KnowledgeGraph,
        g2: KnowledgeGraph,
        features1: FeatureMatrix,
        features2: FeatureMatrix,
        seeds: AlignmentSet,
        test: AlignmentSet,
    ) -> Result<Self> {
        if features1.num_rows() != g1.num_entities() || features2.num_rows() != g2.num_entities() {
            return Err(Error::InvalidConfig(
                "feature matrices must have exactly one row per entity".into(),
            ));
        }
        if features1.dim() != features2.dim() {
            return Err(Error::InvalidConfig(format!(
                "feature dimensions differ across graphs: {} vs {}",
                features1.dim(),
                features2.dim()
            )));
        }
        for p in seeds.pairs().chain(test.pairs()) {
            if p.left >= g1.num_entities() || p.right >= g2.num_entities() {
                return Err(Error::InvalidConfig(format!(
                    "alignment ({}, {}) is out of range",
                    p.left, p.right
                )));
            }
        }
        if let Some((side, entity)) = seeds.first_conflict() {
            return Err(Error::SelectionConflict { side, entity });
        }
        if let Some(p) = seeds.pairs().find(|p| test.contains(p)) {
            return Err(Error::InvalidConfig(format!(
                "pair ({}, {}) is in both seed and test alignments",
                p.left, p.right
            )));
        }
        let working = AlignmentSet::from_pairs(seeds.pairs(), Provenance::Seed);
        let mut pair = Self {
            g1,
            g2,
            features1,
            features2,
            seeds,
            test,
            working,
            unaligned1: Vec::new(),
            unaligned2: Vec::new(),
        };
        pair.recompute_unaligned();
        Ok(pair)
    }

    fn recompute_unaligned(&mut self) {
        let lefts = self.working.lefts();
        let rights = self.working.rights();
        self.unaligned1 = (0..self.g1.num_entities()).filter(|e| !lefts.contains(e)).collect();
        self.unaligned2 = (0..self.g2.num_entities()).filter(|e| !rights.contains(e)).collect();
    }

    /// Original seed alignments.
    pub fn seeds(&self) -> &AlignmentSet {
        &self.seeds
    }

    pub fn test(&self) -> &AlignmentSet {
        &self.test
    }

    /// Working set `S`: seeds plus accepted pseudo-labels.
    pub fn working(&self) -> &AlignmentSet {
        &self.working
    }

    pub fn unaligned1(&self) -> &[EntityId] {
        &self.unaligned1
    }

    pub fn unaligned2(&self) -> &[EntityId] {
        &self.unaligned2
    }

    /// Seeds plus test pairs.
    pub fn ground_truth(&self) -> AlignmentSet {
        AlignmentSet::from_pairs(self.seeds.pairs().chain(self.test.pairs()), Provenance::Truth)
    }

    /// Adds accepted pseudo-labels to the working set.
    ///
    /// Pairs already present are skipped. Any pair that reuses an entity of
    /// another working-set pair is rejected and nothing is modified.
    /// Returns the number of pairs added.
    pub fn augment_seeds(&mut self, new_pairs: &AlignmentSet, iteration: usize) -> Result<usize> {
        if let Some((side, entity)) = new_pairs.first_conflict() {
            return Err(Error::SelectionConflict { side, entity });
        }
        let by_left: HashMap<EntityId, EntityId> =
            self.working.pairs().map(|p| (p.left, p.right)).collect();
        let by_right: HashMap<EntityId, EntityId> =
            self.working.pairs().map(|p| (p.right, p.left)).collect();
        let mut fresh = Vec::new();
        for p in new_pairs.pairs() {
            if self.working.contains(&p) {
                continue;
            }
            if p.left >= self.g1.num_entities() || p.right >= self.g2.num_entities() {
                return Err(Error::InvalidConfig(format!(
                    "pair ({}, {}) is out of range",
                    p.left, p.right
                )));
            }
            if let Some(&r) = by_left.get(&p.left) {
                return Err(Error::AlignmentConflict {
                    left: p.left,
                    right: p.right,
                    other_left: p.left,
                    other_right: r,
                });
            }
            if let Some(&l) = by_right.get(&p.right) {
                return Err(Error::AlignmentConflict {
                    left: p.left,
                    right: p.right,
                    other_left: l,
                    other_right: p.right,
                });
            }
            fresh.push(p);
        }
        for p in &fresh {
            self.working.insert(*p, Provenance::Pseudo(iteration));
        }
        if !fresh.is_empty() {
            self.recompute_unaligned();
        }
        Ok(fresh.len())
    }

    /// Total entities across both graphs.
    pub fn num_entities(&self) -> usize {
        self.g1.num_entities() + self.g2.num_entities()
    }

    pub fn feature_dim(&self) -> usize {
        self.features1.dim()
    }
}
