//! Relational neighborhood matching and the rectified transport cost.
//!
//! Two entities score higher when they share more aligned
//! `(relation, neighbor)` tuples; rarely repeated tuples count more. The
//! score is subtracted from the embedding distance to form the cost fed to
//! optimal transport.

use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;

use crate::encoder::EmbeddingTable;
use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, EntityId, KgPair, KnowledgeGraph, RelationId};
use crate::ot::CostMatrix;

/// Per-entity counts of incident `(relation, neighbor)` tuples.
#[derive(Debug, Clone)]
pub struct TupleIndex {
    tuples: Vec<Vec<((RelationId, EntityId), u32)>>,
    lookup: Vec<HashMap<(RelationId, EntityId), u32>>,
    neighbor_counts: Vec<usize>,
}

impl TupleIndex {
    /// Counts every incidence in the raw (non-deduplicated) triplet list.
    /// A triplet `(h, r, t)` gives `h` the tuple `(r, t)` and `t` the tuple
    /// `(r, h)`.
    pub fn build(kg: &KnowledgeGraph) -> Self {
        let n = kg.num_entities();
        let mut lookup: Vec<HashMap<(RelationId, EntityId), u32>> = vec![HashMap::new(); n];
        for t in kg.raw_triplets() {
            *lookup[t.head].entry((t.relation, t.tail)).or_default() += 1;
            *lookup[t.tail].entry((t.relation, t.head)).or_default() += 1;
        }
        let tuples = lookup
            .iter()
            .map(|m| {
                let mut v: Vec<_> = m.iter().map(|(k, c)| (*k, *c)).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let neighbor_counts = lookup
            .iter()
            .map(|m| {
                let mut ns: Vec<EntityId> = m.keys().map(|k| k.1).collect();
                ns.sort_unstable();
                ns.dedup();
                ns.len()
            })
            .collect();
        Self {
            tuples,
            lookup,
            neighbor_counts,
        }
    }

    /// Sorted incident tuples of `entity` with their triplet counts.
    pub fn tuples(&self, entity: EntityId) -> &[((RelationId, EntityId), u32)] {
        &self.tuples[entity]
    }

    pub fn count(&self, entity: EntityId, relation: RelationId, neighbor: EntityId) -> Option<u32> {
        self.lookup[entity].get(&(relation, neighbor)).copied()
    }

    /// Reciprocal frequency of a tuple, `None` when absent.
    pub fn reciprocal(&self, entity: EntityId, relation: RelationId, neighbor: EntityId) -> Option<f64> {
        self.count(entity, relation, neighbor).map(|c| 1.0 / c as f64)
    }

    /// Number of distinct neighboring entities.
    pub fn num_neighbors(&self, entity: EntityId) -> usize {
        self.neighbor_counts[entity]
    }
}

/// Maps relations of the first graph onto relations of the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationCorrespondence {
    map: Vec<Option<RelationId>>,
}

impl RelationCorrespondence {
    pub fn from_map(map: Vec<Option<RelationId>>) -> Self {
        Self { map }
    }

    /// Relations with equal labels correspond.
    pub fn by_label(g1: &KnowledgeGraph, g2: &KnowledgeGraph) -> Self {
        Self {
            map: g1
                .relations()
                .labels()
                .iter()
                .map(|l| g2.relations().get(l))
                .collect(),
        }
    }

    /// Greedy map from co-occurrence: for every aligned pair `(a, b)` and
    /// every aligned neighbor pair `(x, y)` with `a -r1- x` and `b -r2- y`,
    /// `(r1, r2)` gains a vote. Each `r1` takes its most voted `r2`, ties to
    /// the lower id; relations with no votes stay unmapped.
    pub fn from_alignment(
        g1: &KnowledgeGraph,
        idx1: &TupleIndex,
        idx2: &TupleIndex,
        alignment: &AlignmentSet,
    ) -> Self {
        let right_of = alignment.right_of(g1.num_entities());
        let mut votes: Vec<HashMap<RelationId, u64>> = vec![HashMap::new(); g1.num_relations()];
        for p in alignment.pairs() {
            for &((r1, x), _) in idx1.tuples(p.left) {
                let Some(y) = right_of[x] else { continue };
                for &((r2, y2), _) in idx2.tuples(p.right) {
                    if y2 == y {
                        *votes[r1].entry(r2).or_default() += 1;
                    }
                }
            }
        }
        let map = votes
            .iter()
            .map(|v| {
                v.iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(r2, _)| *r2)
            })
            .collect();
        Self { map }
    }

    /// Label equality when both graphs share the same relation vocabulary,
    /// otherwise the co-occurrence map over `alignment`.
    pub fn infer(
        g1: &KnowledgeGraph,
        g2: &KnowledgeGraph,
        idx1: &TupleIndex,
        idx2: &TupleIndex,
        alignment: &AlignmentSet,
    ) -> Self {
        let mut l1: Vec<&String> = g1.relations().labels().iter().collect();
        let mut l2: Vec<&String> = g2.relations().labels().iter().collect();
        l1.sort();
        l2.sort();
        if l1 == l2 {
            Self::by_label(g1, g2)
        } else {
            Self::from_alignment(g1, idx1, idx2, alignment)
        }
    }

    pub fn get(&self, relation: RelationId) -> Option<RelationId> {
        self.map.get(relation).copied().flatten()
    }

    /// Inverse map (second graph onto first); collisions keep the lower id.
    pub fn inverse(&self, n_right_relations: usize) -> Self {
        let mut map = vec![None; n_right_relations];
        for (r1, r2) in self.map.iter().enumerate() {
            if let Some(r2) = r2 {
                if map[*r2].is_none() {
                    map[*r2] = Some(r1);
                }
            }
        }
        Self { map }
    }
}

/// Tuple indices of both graphs plus the relation correspondence.
#[derive(Debug, Clone)]
pub struct NeighborhoodMatcher {
    pub left: TupleIndex,
    pub right: TupleIndex,
    pub relations: RelationCorrespondence,
}

impl NeighborhoodMatcher {
    /// Builds both indices; the relation correspondence is inferred once
    /// from the pair's seed alignments.
    pub fn new(pair: &KgPair) -> Self {
        let left = TupleIndex::build(&pair.g1);
        let right = TupleIndex::build(&pair.g2);
        let relations = RelationCorrespondence::infer(&pair.g1, &pair.g2, &left, &right, pair.seeds());
        Self {
            left,
            right,
            relations,
        }
    }

    pub fn from_parts(left: TupleIndex, right: TupleIndex, relations: RelationCorrespondence) -> Self {
        Self {
            left,
            right,
            relations,
        }
    }

    /// Match score of `(e_i, e_j)` given the left-to-right lookup of the
    /// current alignment set.
    pub fn score(&self, e_i: EntityId, e_j: EntityId, right_of: &[Option<EntityId>]) -> f64 {
        let mut total = 0.0;
        for &((r, a), c1) in self.left.tuples(e_i) {
            let (Some(b), Some(r2)) = (right_of[a], self.relations.get(r)) else {
                continue;
            };
            if let Some(c2) = self.right.count(e_j, r2, b) {
                total += 1.0 / (c1 as f64 * c2 as f64);
            }
        }
        if total == 0.0 {
            return 0.0;
        }
        total / (self.left.num_neighbors(e_i) + self.right.num_neighbors(e_j)) as f64
    }

    /// Scores of every `rows × cols` pair.
    pub fn score_matrix(&self, rows: &[EntityId], cols: &[EntityId], alignment: &AlignmentSet) -> Array2<f64> {
        let n_left = self.left.tuples.len();
        let right_of = alignment.right_of(n_left);
        let data: Vec<f64> = rows
            .par_iter()
            .flat_map_iter(|&i| {
                let right_of = &right_of;
                cols.iter().map(move |&j| self.score(i, j, right_of))
            })
            .collect();
        Array2::from_shape_vec((rows.len(), cols.len()), data).expect("shape")
    }
}

/// `distance − λ · score` over arbitrary row and column entity lists.
pub fn cost_over(
    table: &EmbeddingTable,
    matcher: &NeighborhoodMatcher,
    alignment: &AlignmentSet,
    rows: &[EntityId],
    cols: &[EntityId],
    lambda: f64,
) -> Result<CostMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig("lambda must be non-negative".into()));
    }
    let right_of = alignment.right_of(table.n_left());
    let data: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|&i| {
            let right_of = &right_of;
            cols.iter().map(move |&j| {
                let d = table.distance(i, j);
                if lambda == 0.0 {
                    d
                } else {
                    d - lambda * matcher.score(i, j, right_of)
                }
            })
        })
        .collect();
    let values = Array2::from_shape_vec((rows.len(), cols.len()), data).expect("shape");
    CostMatrix::new(values, rows.to_vec(), cols.to_vec())
}

/// Rectified cost over the pair's current unaligned sets, using the working
/// set for neighborhood matching. `None` when either unaligned set is empty.
pub fn rectified_cost(
    pair: &KgPair,
    table: &EmbeddingTable,
    matcher: &NeighborhoodMatcher,
    lambda: f64,
) -> Result<Option<CostMatrix>> {
    if pair.unaligned1().is_empty() || pair.unaligned2().is_empty() {
        return Ok(None);
    }
    cost_over(table, matcher, pair.working(), pair.unaligned1(), pair.unaligned2(), lambda).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Provenance, Triplet};

    fn kg(n: usize, rels: usize, t: &[(usize, usize, usize)]) -> KnowledgeGraph {
        KnowledgeGraph::from_triplets(n, rels, t.iter().map(|&(h, r, t)| Triplet::new(h, r, t)).collect())
            .unwrap()
    }

    #[test]
    fn reciprocal_frequency_counts_raw_triplets() {
        let g = kg(3, 1, &[(0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 2)]);
        let idx = TupleIndex::build(&g);
        assert_eq!(idx.reciprocal(0, 0, 1), Some(0.25));
        assert_eq!(idx.reciprocal(0, 0, 2), Some(1.0));
        assert_eq!(idx.reciprocal(1, 0, 0), Some(0.25));
        assert_eq!(idx.num_neighbors(0), 2);
    }

    #[test]
    fn isolated_entity_has_no_tuples() {
        let g = kg(3, 1, &[(0, 0, 1)]);
        let idx = TupleIndex::build(&g);
        assert!(idx.tuples(2).is_empty());
        assert_eq!(idx.num_neighbors(2), 0);
    }

    fn matcher(g1: &KnowledgeGraph, g2: &KnowledgeGraph) -> NeighborhoodMatcher {
        NeighborhoodMatcher::from_parts(
            TupleIndex::build(g1),
            TupleIndex::build(g2),
            RelationCorrespondence::by_label(g1, g2),
        )
    }

    #[test]
    fn empty_match_scores_zero() {
        let g = kg(3, 1, &[(0, 0, 1), (0, 0, 2)]);
        let m = matcher(&g, &g);
        assert_eq!(m.score(0, 0, &AlignmentSet::new().right_of(3)), 0.0);
    }

    #[test]
    fn single_unit_match_over_two_plus_two_neighbors() {
        // e_i = 0 with neighbors {1, 2}; e_j = 0 with neighbors {1, 2}; only (1,1) aligned
        let g1 = kg(3, 2, &[(0, 0, 1), (0, 1, 2)]);
        let g2 = kg(3, 2, &[(0, 0, 1), (0, 1, 2)]);
        let m = matcher(&g1, &g2);
        let s = AlignmentSet::from_pairs([(1, 1)], Provenance::Seed);
        assert!((m.score(0, 0, &s.right_of(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn six_entity_fixture_matches_hand_enumeration() {
        // left: 0 -r0-> 1 (x2), 0 -r1-> 2, 0 -r0-> 3
        // right: 0 -r0-> 1, 0 -r1-> 2 (x3), 5 -r1-> 0
        let g1 = kg(6, 2, &[(0, 0, 1), (0, 0, 1), (0, 1, 2), (0, 0, 3)]);
        let g2 = kg(6, 2, &[(0, 0, 1), (0, 1, 2), (0, 1, 2), (0, 1, 2), (5, 1, 0)]);
        let m = matcher(&g1, &g2);
        let s = AlignmentSet::from_pairs([(1, 1), (2, 2), (3, 4)], Provenance::Seed);
        // tuples of left 0: (r0,1)x2, (r1,2)x1, (r0,3)x1
        // tuples of right 0: (r0,1)x1, (r1,2)x3, (r1,5)x1
        // M = {(r0,1): 1/2 * 1, (r1,2): 1 * 1/3}; (r0,3)->(r0,4) absent
        // |N(left 0)| = 3, |N(right 0)| = 3
        let mut enumerated = 0.0;
        for &((r, a), c1) in m.left.tuples(0) {
            for &((r2, b), c2) in m.right.tuples(0) {
                if r == r2 && s.contains(&(a, b).into()) {
                    enumerated += 1.0 / (c1 * c2) as f64;
                }
            }
        }
        let expected = (0.5 + 1.0 / 3.0) / 6.0;
        assert!((enumerated / 6.0 - expected).abs() < 1e-15);
        assert!((m.score(0, 0, &s.right_of(6)) - expected).abs() < 1e-15);
    }

    #[test]
    fn relation_map_from_alignment_votes() {
        // left uses relation "a", right uses relation "b" for the same edge
        let g1 = KnowledgeGraph::new(
            crate::kg::IdMap::sequential(3),
            crate::kg::IdMap::from_labels(["a"]),
            vec![Triplet::new(0, 0, 1), Triplet::new(0, 0, 2)],
        )
        .unwrap();
        let g2 = KnowledgeGraph::new(
            crate::kg::IdMap::sequential(3),
            crate::kg::IdMap::from_labels(["z", "b"]),
            vec![Triplet::new(0, 1, 1), Triplet::new(0, 0, 2)],
        )
        .unwrap();
        let i1 = TupleIndex::build(&g1);
        let i2 = TupleIndex::build(&g2);
        let s = AlignmentSet::from_pairs([(0, 0), (1, 1)], Provenance::Seed);
        let map = RelationCorrespondence::infer(&g1, &g2, &i1, &i2, &s);
        assert_eq!(map.get(0), Some(1));
    }

    #[test]
    fn rectified_cost_examples() {
        use crate::encoder::EmbeddingTable;
        use crate::kg::FeatureMatrix;
        let g1 = kg(2, 1, &[(0, 0, 1)]);
        let g2 = kg(2, 1, &[(0, 0, 1)]);
        let f = FeatureMatrix::new(Array2::zeros((2, 1))).unwrap();
        let pair = KgPair::new(g1.clone(), g2.clone(), f.clone(), f, AlignmentSet::new(), AlignmentSet::new()).unwrap();
        let table = EmbeddingTable::new(ndarray::array![[0.0], [1.0], [0.5], [3.0]], 2);
        let m = NeighborhoodMatcher::new(&pair);
        // empty S: cost equals the distance matrix for any lambda
        let c = rectified_cost(&pair, &table, &m, 10.0).unwrap().unwrap();
        assert_eq!(c.values(), &ndarray::array![[0.5, 3.0], [0.5, 2.0]]);
        let c0 = rectified_cost(&pair, &table, &m, 0.0).unwrap().unwrap();
        assert_eq!(c.values(), c0.values());
    }

    #[test]
    fn rectified_cost_subtracts_weighted_score() {
        use crate::encoder::EmbeddingTable;
        use crate::kg::FeatureMatrix;
        // left 0 has neighbors {1, 2}, right 0 has {1, 2, 3}; tuple (r0, 1)
        // occurs twice on each side, so s(0, 0) = (1/2 * 1/2) / (2 + 3) = 0.05
        let g1 = kg(3, 1, &[(0, 0, 1), (0, 0, 1), (0, 0, 2)]);
        let g2 = kg(4, 1, &[(0, 0, 1), (0, 0, 1), (0, 0, 2), (0, 0, 3)]);
        let pair = KgPair::new(
            g1,
            g2,
            FeatureMatrix::new(Array2::zeros((3, 1))).unwrap(),
            FeatureMatrix::new(Array2::zeros((4, 1))).unwrap(),
            AlignmentSet::from_pairs([(1, 1)], Provenance::Seed),
            AlignmentSet::new(),
        )
        .unwrap();
        let table = EmbeddingTable::new(
            ndarray::array![[0.0], [9.0], [5.0], [1.0], [9.0], [7.0], [8.0]],
            3,
        );
        let m = NeighborhoodMatcher::new(&pair);
        assert_eq!(pair.unaligned1(), &[0, 2]);
        assert_eq!(pair.unaligned2(), &[0, 2, 3]);
        let c = rectified_cost(&pair, &table, &m, 10.0).unwrap().unwrap();
        assert!((c.values()[[0, 0]] - 0.5).abs() < 1e-12);
        assert_eq!(c.values()[[1, 1]], 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph(n: usize) -> impl Strategy<Value = Vec<(usize, usize, usize)>> {
            proptest::collection::vec((0..n, 0..3usize, 0..n), 0..30)
        }

        proptest! {
            #[test]
            fn scores_nonnegative_monotone_and_transpose_symmetric(
                t1 in arb_graph(8),
                t2 in arb_graph(8),
                perm in Just((0..8usize).collect::<Vec<_>>()).prop_shuffle(),
                k in 0usize..8,
            ) {
                let g1 = kg(8, 3, &t1);
                let g2 = kg(8, 3, &t2);
                let m = matcher(&g1, &g2);
                let all: Vec<usize> = (0..8).collect();
                let small = AlignmentSet::from_pairs((0..k).map(|i| (i, perm[i])), Provenance::Seed);
                let big = AlignmentSet::from_pairs((0..=k.min(7)).map(|i| (i, perm[i])), Provenance::Seed);
                let s_small = m.score_matrix(&all, &all, &small);
                let s_big = m.score_matrix(&all, &all, &big);
                prop_assert!(s_small.iter().all(|&v| v >= 0.0));
                prop_assert!(s_small.iter().zip(s_big.iter()).all(|(a, b)| b >= a));
                let empty = m.score_matrix(&all, &all, &AlignmentSet::new());
                prop_assert!(empty.iter().all(|&v| v == 0.0));

                let swapped = matcher(&g2, &g1);
                let s_swapped = swapped.score_matrix(&all, &all, &small.transposed());
                for i in 0..8 {
                    for j in 0..8 {
                        prop_assert!((s_small[[i, j]] - s_swapped[[j, i]]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
