//! Distances between CGPANN individuals, each scaled to `[0, 1]`.
//!
//! - **GD** compares genes position by position: weights by normalized
//!   squared difference, and per-node sorted connection lists, derived
//!   activity flags and function genes by Hamming distance. The four
//!   normalized components are averaged.
//! - **GIDD** gives every active node a canonical structural identifier built
//!   recursively from the identifiers of its distinct inputs. Nodes with equal
//!   identifiers in both networks sit at the same place in the structure and
//!   are compared by weights and transfer function. Unmatched nodes cost 1.
//! - **PD** runs both networks on a sample set and compares the softmax
//!   outputs with a Frobenius norm scaled by its supremum `sqrt(2m)`.
//!
//! Per-genome work (sorting, identifiers, signatures) is done once by
//! [`DistanceKind::prepare`], so distance matrices and surrogate queries only
//! pay for the pairwise comparison.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

use crate::genome::{decode_active, phenotype_signature, FeatureMatrix, Genome, PhenotypeSignature};
use crate::linalg::squared_distance;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error("genomes were built from different configurations")]
    ConfigMismatch,
    #[error("phenotype signatures differ in shape: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("phenotypic distance needs a non-empty sample set")]
    EmptySampleSet,
    #[error("distance features were prepared for a different distance kind")]
    KindMismatch,
    #[error("distance matrix is not square, symmetric with zero diagonal")]
    NotADistanceMatrix,
}

/// Which distance to use. The phenotypic variant carries its sample set.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceKind {
    Genotypic,
    GenotypicId,
    Phenotypic(Arc<FeatureMatrix>),
}

impl DistanceKind {
    pub fn phenotypic(samples: FeatureMatrix) -> Result<Self, DistanceError> {
        if samples.n_rows() == 0 {
            return Err(DistanceError::EmptySampleSet);
        }
        Ok(DistanceKind::Phenotypic(Arc::new(samples)))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            DistanceKind::Genotypic => "gd",
            DistanceKind::GenotypicId => "gidd",
            DistanceKind::Phenotypic(_) => "pd",
        }
    }

    /// Precomputes everything the pairwise comparison needs.
    pub fn prepare(&self, genome: &Genome) -> Prepared {
        let features = match self {
            DistanceKind::Genotypic => Features::Genotypic(GenotypicFeatures::new(genome)),
            DistanceKind::GenotypicId => Features::Id(IdProfile::new(genome)),
            DistanceKind::Phenotypic(samples) => {
                Features::Phenotypic(phenotype_signature(genome, samples))
            }
        };
        Prepared {
            genome: genome.clone(),
            features,
        }
    }

    pub fn distance(&self, a: &Prepared, b: &Prepared) -> Result<f64, DistanceError> {
        if a.genome.config() != b.genome.config() {
            return Err(DistanceError::ConfigMismatch);
        }
        match (self, &a.features, &b.features) {
            (DistanceKind::Genotypic, Features::Genotypic(fa), Features::Genotypic(fb)) => {
                Ok(genotypic(&a.genome, fa, &b.genome, fb))
            }
            (DistanceKind::GenotypicId, Features::Id(pa), Features::Id(pb)) => {
                Ok(id_distance(&a.genome, pa, pb))
            }
            (DistanceKind::Phenotypic(_), Features::Phenotypic(sa), Features::Phenotypic(sb)) => {
                phenotypic_distance(sa, sb)
            }
            _ => Err(DistanceError::KindMismatch),
        }
    }

    /// Convenience wrapper preparing both genomes on the fly.
    pub fn between(&self, a: &Genome, b: &Genome) -> Result<f64, DistanceError> {
        self.distance(&self.prepare(a), &self.prepare(b))
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A genome together with its precomputed distance features.
#[derive(Debug, Clone)]
pub struct Prepared {
    genome: Genome,
    features: Features,
}

impl Prepared {
    pub fn genome(&self) -> &Genome {
        &self.genome
    }

    pub fn into_genome(self) -> Genome {
        self.genome
    }
}

#[derive(Debug, Clone)]
enum Features {
    Genotypic(GenotypicFeatures),
    Id(IdProfile),
    Phenotypic(PhenotypeSignature),
}

// ---------------------------------------------------------------------------
// GD
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct GenotypicFeatures {
    /// Connection genes sorted ascending within each node.
    sorted_connections: Vec<usize>,
    active: Vec<bool>,
}

impl GenotypicFeatures {
    fn new(genome: &Genome) -> Self {
        let arity = genome.config().arity();
        let mut sorted_connections = genome.connections().to_vec();
        for node in sorted_connections.chunks_exact_mut(arity) {
            node.sort_unstable();
        }
        GenotypicFeatures {
            sorted_connections,
            active: decode_active(genome).active,
        }
    }
}

fn hamming<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).map(|(x, y)| usize::from(x != y)).sum()
}

fn genotypic(a: &Genome, fa: &GenotypicFeatures, b: &Genome, fb: &GenotypicFeatures) -> f64 {
    let config = a.config();
    let n_weights = (config.n_nodes() * config.arity()) as f64;
    let n_nodes = config.n_nodes() as f64;
    let range = config.weight_range();

    let squared = squared_distance(a.weights(), b.weights());
    let d_w = squared / (n_weights * range * range);
    let d_i = hamming(&fa.sorted_connections, &fb.sorted_connections) as f64 / n_weights;
    let d_a = hamming(&fa.active, &fb.active) as f64 / n_nodes;
    let d_f = hamming(a.functions(), b.functions()) as f64 / n_nodes;
    (d_w + d_i + d_a + d_f) / 4.0
}

/// Genotypic distance (GD).
pub fn genotypic_distance(x: &Genome, y: &Genome) -> Result<f64, DistanceError> {
    DistanceKind::Genotypic.between(x, y)
}

// ---------------------------------------------------------------------------
// GIDD
// ---------------------------------------------------------------------------

/// Canonical structural identifier of an input or node.
///
/// A node's identifier is the sorted list of the identifiers of its distinct
/// connection targets together with the number of distinct targets, so two
/// nodes share an identifier exactly when the subgraphs feeding them have the
/// same shape.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Input(usize),
    Node {
        sources: Vec<Arc<NodeId>>,
        distinct: usize,
    },
}

/// Canonical identifier of the input or node at `address`.
pub fn node_canonical_id(genome: &Genome, address: usize) -> NodeId {
    let n_inputs = genome.config().n_inputs();
    assert!(address < genome.config().n_addresses(), "address out of range");
    let mut table: Vec<Arc<NodeId>> = (0..n_inputs).map(|j| Arc::new(NodeId::Input(j))).collect();
    let nodes_needed = (address + 1).saturating_sub(n_inputs);
    for j in 0..nodes_needed {
        let mut sources: Vec<Arc<NodeId>> = distinct_sources(genome.node(j).connections)
            .map(|c| table[c].clone())
            .collect();
        sources.sort();
        let distinct = sources.len();
        table.push(Arc::new(NodeId::Node { sources, distinct }));
    }
    (*table[address]).clone()
}

fn distinct_sources(connections: &[usize]) -> impl Iterator<Item = usize> + '_ {
    connections
        .iter()
        .enumerate()
        .filter(|&(k, c)| !connections[..k].contains(c))
        .map(|(_, &c)| c)
}

/// 128-bit digest of a [`NodeId`]. Built bottom-up with the same recursion,
/// so equal identifiers always give equal fingerprints; distinct identifiers
/// collide with negligible probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdFingerprint(u128);

const INPUT_TAG: u128 = 0x9e37_79b9_7f4a_7c15_f39c_c060_5ced_c834;
const NODE_TAG: u128 = 0x6a09_e667_f3bc_c908_b2fb_1366_ea95_7d3e;

fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^ (k >> 33)
}

fn absorb(state: u128, word: u128) -> u128 {
    let (s0, s1) = (state as u64, (state >> 64) as u64);
    let (w0, w1) = (word as u64, (word >> 64) as u64);
    let a = fmix64(s0 ^ fmix64(w0 ^ 0x243f_6a88_85a3_08d3) ^ w1.rotate_left(17));
    let b = fmix64(s1.wrapping_add(fmix64(w1 ^ 0x1319_8a2e_0370_7344)) ^ w0.rotate_left(29));
    ((b as u128) << 64) | a as u128
}

impl IdFingerprint {
    fn input(j: usize) -> Self {
        IdFingerprint(absorb(INPUT_TAG, j as u128))
    }

    fn node(sorted_sources: &[IdFingerprint]) -> Self {
        let mut h = absorb(NODE_TAG, sorted_sources.len() as u128);
        for s in sorted_sources {
            h = absorb(h, s.0);
        }
        IdFingerprint(h)
    }

    pub fn of(id: &NodeId) -> Self {
        match id {
            NodeId::Input(j) => IdFingerprint::input(*j),
            NodeId::Node { sources, .. } => {
                let mut fps: Vec<IdFingerprint> = sources.iter().map(|s| IdFingerprint::of(s)).collect();
                fps.sort_unstable();
                IdFingerprint::node(&fps)
            }
        }
    }
}

/// Fingerprints of every address of `genome` (inputs first).
pub fn id_fingerprints(genome: &Genome) -> Vec<IdFingerprint> {
    let config = genome.config();
    let mut fps: Vec<IdFingerprint> = (0..config.n_inputs()).map(IdFingerprint::input).collect();
    let mut scratch = Vec::with_capacity(config.arity());
    for node in genome.nodes() {
        scratch.clear();
        scratch.extend(distinct_sources(node.connections).map(|c| fps[c]));
        scratch.sort_unstable();
        fps.push(IdFingerprint::node(&scratch));
    }
    fps
}

#[derive(Debug, Clone)]
struct ActiveEntry {
    id: IdFingerprint,
    node: usize,
    function: usize,
}

/// Active nodes sorted by (identifier, node index), plus each node's
/// (source identifier, weight) pairs sorted lexicographically.
#[derive(Debug, Clone)]
struct IdProfile {
    entries: Vec<ActiveEntry>,
    /// `arity` pairs per entry, in entry order.
    inputs: Vec<(IdFingerprint, f64)>,
}

impl IdProfile {
    fn new(genome: &Genome) -> Self {
        let arity = genome.config().arity();
        let n_inputs = genome.config().n_inputs();
        let fps = id_fingerprints(genome);
        let graph = decode_active(genome);
        let mut entries: Vec<ActiveEntry> = graph
            .eval_order
            .iter()
            .map(|&j| ActiveEntry {
                id: fps[n_inputs + j],
                node: j,
                function: genome.node(j).function,
            })
            .collect();
        entries.sort_by(|a, b| a.id.cmp(&b.id).then(a.node.cmp(&b.node)));
        let mut inputs = Vec::with_capacity(entries.len() * arity);
        for e in &entries {
            let node = genome.node(e.node);
            let start = inputs.len();
            inputs.extend(node.connections.iter().zip(node.weights).map(|(&c, &w)| (fps[c], w)));
            inputs[start..].sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        }
        IdProfile { entries, inputs }
    }

    fn pairs(&self, entry: usize, arity: usize) -> &[(IdFingerprint, f64)] {
        &self.inputs[entry * arity..(entry + 1) * arity]
    }
}

fn id_distance(genome: &Genome, a: &IdProfile, b: &IdProfile) -> f64 {
    let config = genome.config();
    let arity = config.arity();
    let range = config.weight_range();
    let m = a.entries.len().max(b.entries.len());
    if m == 0 {
        return 0.0;
    }
    let mut matched = 0usize;
    let mut pair_sum = 0.0;
    let (mut i, mut j) = (0, 0);
    // Both entry lists are sorted by (id, node), so walking them in step pairs
    // nodes of each shared id in ascending node order.
    while i < a.entries.len() && j < b.entries.len() {
        match a.entries[i].id.cmp(&b.entries[j].id) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                let squared: f64 = a
                    .pairs(i, arity)
                    .iter()
                    .zip(b.pairs(j, arity))
                    .map(|(x, y)| (x.1 - y.1) * (x.1 - y.1))
                    .sum();
                let d_w = squared / (arity as f64 * range * range);
                let d_f = if a.entries[i].function == b.entries[j].function { 0.0 } else { 1.0 };
                pair_sum += 0.5 * d_w + 0.5 * d_f;
                matched += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (pair_sum + (m - matched) as f64) / m as f64
}

/// Genotypic ID distance (GIDD).
pub fn genotypic_id_distance(x: &Genome, y: &Genome) -> Result<f64, DistanceError> {
    DistanceKind::GenotypicId.between(x, y)
}

// ---------------------------------------------------------------------------
// PD
// ---------------------------------------------------------------------------

/// Phenotypic distance: `||P - P'||_F / sqrt(2m)`.
pub fn phenotypic_distance(a: &PhenotypeSignature, b: &PhenotypeSignature) -> Result<f64, DistanceError> {
    let left = (a.n_samples(), a.n_classes());
    let right = (b.n_samples(), b.n_classes());
    if left != right {
        return Err(DistanceError::ShapeMismatch { left, right });
    }
    if left.0 == 0 {
        return Err(DistanceError::EmptySampleSet);
    }
    let squared = squared_distance(a.as_slice(), b.as_slice());
    Ok(libm::sqrt(squared / (2.0 * left.0 as f64)).min(1.0))
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense symmetric distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn empty() -> Self {
        DistanceMatrix { n: 0, data: Vec::new() }
    }

    /// Validates squareness, symmetry, zero diagonal and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DistanceError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(DistanceError::NotADistanceMatrix);
            }
            data.extend_from_slice(row);
        }
        let m = DistanceMatrix { n, data };
        for i in 0..n {
            if m.get(i, i) != 0.0 {
                return Err(DistanceError::NotADistanceMatrix);
            }
            for j in 0..i {
                let d = m.get(i, j);
                if d != m.get(j, i) || !d.is_finite() || d < 0.0 {
                    return Err(DistanceError::NotADistanceMatrix);
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Appends a point given its distances to the existing points.
    pub fn push(&mut self, distances: &[f64]) {
        assert_eq!(distances.len(), self.n, "distance row length");
        let n = self.n + 1;
        let mut data = vec![0.0; n * n];
        for i in 0..self.n {
            data[i * n..i * n + self.n].copy_from_slice(self.row(i));
            data[i * n + self.n] = distances[i];
        }
        data[self.n * n..self.n * n + self.n].copy_from_slice(distances);
        self.n = n;
        self.data = data;
    }
}

/// Pairwise distances between prepared genomes.
pub fn prepared_distance_matrix(kind: &DistanceKind, prepared: &[Prepared]) -> Result<DistanceMatrix, DistanceError> {
    let n = prepared.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = kind.distance(&prepared[i], &prepared[j])?;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Pairwise distances between genomes under `kind`. Per-genome features
/// (including PD signatures) are computed once.
pub fn distance_matrix(genomes: &[Genome], kind: &DistanceKind) -> Result<DistanceMatrix, DistanceError> {
    let prepared: Vec<Prepared> = genomes.iter().map(|g| kind.prepare(g)).collect();
    prepared_distance_matrix(kind, &prepared)
}

/// Groups active nodes of `genome` by canonical identifier. Mostly useful for
/// inspection and debugging.
pub fn active_id_counts(genome: &Genome) -> BTreeMap<IdFingerprint, usize> {
    let n_inputs = genome.config().n_inputs();
    let fps = id_fingerprints(genome);
    let mut counts = BTreeMap::new();
    for j in decode_active(genome).eval_order {
        *counts.entry(fps[n_inputs + j]).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{GenomeConfig, GenomeParams, Node};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(n_nodes: usize, arity: usize) -> GenomeConfig {
        GenomeParams {
            n_nodes,
            arity,
            ..GenomeParams::default()
        }
        .build()
        .unwrap()
    }

    fn nodes_from(spec: &[(&[usize], &[f64], usize)]) -> Vec<Node> {
        spec.iter()
            .map(|(c, w, f)| Node {
                connections: c.to_vec(),
                weights: w.to_vec(),
                function: *f,
            })
            .collect()
    }

    #[test]
    fn identical_genomes_are_at_distance_zero() {
        let config = GenomeConfig::iris();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Genome::random(&config, &mut rng);
        assert_eq!(genotypic_distance(&g, &g).unwrap(), 0.0);
        assert_eq!(genotypic_id_distance(&g, &g).unwrap(), 0.0);
        let samples = FeatureMatrix::from_rows(4, [[0.1, 0.2, 0.3, 0.4], [0.9, 0.1, 0.5, 0.0]]);
        let pd = DistanceKind::phenotypic(samples).unwrap();
        assert_eq!(pd.between(&g, &g).unwrap(), 0.0);
    }

    #[test]
    fn gd_single_function_gene() {
        let config = GenomeConfig::iris();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Genome::random(&config, &mut rng);
        let mut b = a.clone();
        b.functions[7] = (b.functions[7] + 1) % 5;
        let d = genotypic_distance(&a, &b).unwrap();
        assert!((d - 0.00625).abs() < 1e-15, "{d}");
    }

    #[test]
    fn gd_maximal_disagreement_is_one() {
        // Two nodes, arity 2, 4 inputs. Node 0 may connect to {0..3}, node 1
        // to {0..4}. Sorted lists must differ positionwise, activity must
        // differ everywhere and weights sit at opposite bounds.
        let config = small_config(2, 2);
        let a = Genome::from_nodes(
            &config,
            nodes_from(&[(&[0, 1], &[-1.0, -1.0], 0), (&[0, 1], &[-1.0, -1.0], 0)]),
            vec![4, 4, 4],
        )
        .unwrap();
        // a: node 0 active, node 1 inactive.
        let b = Genome::from_nodes(
            &config,
            nodes_from(&[(&[2, 3], &[1.0, 1.0], 1), (&[2, 3], &[1.0, 1.0], 1)]),
            vec![5, 5, 5],
        )
        .unwrap();
        // b: node 1 active, node 0 inactive (node 1 only reads inputs).
        assert_eq!(a.active_graph().eval_order, vec![0]);
        assert_eq!(b.active_graph().eval_order, vec![1]);
        assert_eq!(genotypic_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn gd_ignores_connection_order_within_node() {
        let config = small_config(2, 3);
        let a = Genome::from_nodes(
            &config,
            nodes_from(&[(&[0, 1, 1], &[0.1, 0.2, 0.3], 0), (&[4, 2, 0], &[0.0; 3], 1)]),
            vec![5, 5, 5],
        )
        .unwrap();
        let b = Genome::from_nodes(
            &config,
            nodes_from(&[(&[1, 0, 1], &[0.1, 0.2, 0.3], 0), (&[0, 4, 2], &[0.0; 3], 1)]),
            vec![5, 5, 5],
        )
        .unwrap();
        assert_eq!(genotypic_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn node_ids_follow_distinct_sources() {
        let config = small_config(3, 5);
        let a = Genome::from_nodes(
            &config,
            nodes_from(&[
                (&[2, 2, 2, 2, 2], &[0.0; 5], 0),
                (&[0, 0, 1, 1, 1], &[0.0; 5], 0),
                (&[0, 1, 1, 1, 1], &[0.0; 5], 0),
            ]),
            vec![4, 5, 6],
        )
        .unwrap();
        let b = Genome::from_nodes(
            &config,
            nodes_from(&[
                (&[2, 2, 2, 2, 2], &[0.5; 5], 3),
                (&[0, 0, 0, 0, 0], &[0.0; 5], 0),
                (&[0, 1, 2, 3, 3], &[0.0; 5], 0),
            ]),
            vec![4, 5, 6],
        )
        .unwrap();
        let expected = NodeId::Node {
            sources: vec![Arc::new(NodeId::Input(2))],
            distinct: 1,
        };
        assert_eq!(node_canonical_id(&a, 4), expected);
        assert_eq!(node_canonical_id(&b, 4), expected);
        // {in0,in0,in1,in1,in1} and {in0,in1,in1,in1,in1} share an id.
        assert_eq!(node_canonical_id(&a, 5), node_canonical_id(&a, 6));
        // Distinct counts 2 vs 1.
        assert_ne!(node_canonical_id(&a, 5), node_canonical_id(&b, 5));
        assert_eq!(node_canonical_id(&a, 1), NodeId::Input(1));
    }

    #[test]
    fn fingerprints_agree_with_identifiers() {
        let config = small_config(12, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let genomes: Vec<Genome> = (0..20).map(|_| Genome::random(&config, &mut rng)).collect();
        let mut all = Vec::new();
        for g in &genomes {
            let fps = id_fingerprints(g);
            for (address, &fp) in fps.iter().enumerate() {
                all.push((node_canonical_id(g, address), fp));
            }
        }
        for (id_a, fp_a) in &all {
            assert_eq!(IdFingerprint::of(id_a), *fp_a);
            for (id_b, fp_b) in &all {
                assert_eq!(id_a == id_b, fp_a == fp_b);
            }
        }
    }

    #[test]
    fn gidd_disjoint_structures_are_at_distance_one() {
        let config = small_config(2, 2);
        let a = Genome::from_nodes(
            &config,
            nodes_from(&[(&[0, 0], &[0.1, 0.1], 0), (&[1, 1], &[0.1, 0.1], 0)]),
            vec![4, 5, 5],
        )
        .unwrap();
        let b = Genome::from_nodes(
            &config,
            nodes_from(&[(&[2, 2], &[0.1, 0.1], 0), (&[3, 3], &[0.1, 0.1], 0)]),
            vec![4, 5, 5],
        )
        .unwrap();
        assert_eq!(genotypic_id_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn gidd_single_function_difference_on_two_matched_nodes() {
        let config = small_config(2, 2);
        let nodes = |f| nodes_from(&[(&[0, 1], &[0.3, -0.2], 0), (&[4, 4], &[0.5, 0.5], f)]);
        let a = Genome::from_nodes(&config, nodes(0), vec![5, 5, 5]).unwrap();
        let b = Genome::from_nodes(&config, nodes(2), vec![5, 5, 5]).unwrap();
        assert_eq!(genotypic_id_distance(&a, &b).unwrap(), 0.25);
    }

    #[test]
    fn gidd_partial_match() {
        // a: nodes {0: in0, 1: in1}, both active. b: {0: in0, 1: in3}.
        // One matched pair with weight difference; one unmatched slot.
        let config = small_config(2, 1);
        let a = Genome::from_nodes(
            &config,
            nodes_from(&[(&[0], &[1.0], 0), (&[1], &[0.0], 0)]),
            vec![4, 5, 5],
        )
        .unwrap();
        let b = Genome::from_nodes(
            &config,
            nodes_from(&[(&[0], &[0.0], 0), (&[3], &[0.0], 0)]),
            vec![4, 5, 5],
        )
        .unwrap();
        // d_pair = 0.5 * (1^2 / (1 * 2^2)) = 0.125; (0.125 + 1) / 2
        assert!((genotypic_id_distance(&a, &b).unwrap() - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn gidd_of_empty_phenotypes_is_zero() {
        let config = small_config(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = Genome::random(&config, &mut rng);
        let mut b = Genome::random(&config, &mut rng);
        a.outputs = vec![0, 1, 2];
        b.outputs = vec![3, 3, 3];
        assert_eq!(genotypic_id_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn pd_opposite_one_hot_rows() {
        // Outputs pinned to inputs: logits are the features themselves.
        let config = GenomeConfig::iris();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = Genome::random(&config, &mut rng);
        let mut b = a.clone();
        a.outputs = vec![0, 1, 1];
        b.outputs = vec![1, 0, 1];
        // Huge logit gap gives one-hot rows (1,0,0) and (0,1,0).
        let samples = FeatureMatrix::from_rows(4, [[800.0, 0.0, 0.0, 0.0]; 6]);
        let kind = DistanceKind::phenotypic(samples).unwrap();
        let pa = kind.prepare(&a);
        let sig = match &pa.features {
            Features::Phenotypic(s) => s.clone(),
            _ => unreachable!(),
        };
        assert_eq!(sig.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(kind.distance(&pa, &kind.prepare(&b)).unwrap(), 1.0);
    }

    #[test]
    fn pd_rejects_shape_mismatch() {
        let config = GenomeConfig::iris();
        let g = Genome::random(&config, &mut ChaCha8Rng::seed_from_u64(6));
        let s1 = phenotype_signature(&g, &FeatureMatrix::from_rows(4, [[0.0; 4]; 2]));
        let s2 = phenotype_signature(&g, &FeatureMatrix::from_rows(4, [[0.0; 4]; 3]));
        assert!(matches!(phenotypic_distance(&s1, &s2), Err(DistanceError::ShapeMismatch { .. })));
        assert_eq!(
            DistanceKind::phenotypic(FeatureMatrix::new(4, Vec::new())),
            Err(DistanceError::EmptySampleSet)
        );
    }

    #[test]
    fn mismatched_configs_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Genome::random(&GenomeConfig::iris(), &mut rng);
        let b = Genome::random(&small_config(40, 4), &mut rng);
        assert_eq!(genotypic_distance(&a, &b), Err(DistanceError::ConfigMismatch));
        assert_eq!(genotypic_id_distance(&a, &b), Err(DistanceError::ConfigMismatch));
    }

    #[test]
    fn matrix_is_symmetric_and_consistent() {
        let config = GenomeConfig::iris();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let genomes: Vec<Genome> = (0..6).map(|_| Genome::random(&config, &mut rng)).collect();
        let samples = FeatureMatrix::from_rows(4, [[0.1, 0.2, 0.3, 0.4], [0.5, 0.5, 0.5, 0.5]]);
        for kind in [
            DistanceKind::Genotypic,
            DistanceKind::GenotypicId,
            DistanceKind::phenotypic(samples.clone()).unwrap(),
        ] {
            let d = distance_matrix(&genomes, &kind).unwrap();
            for i in 0..6 {
                assert_eq!(d.get(i, i), 0.0);
                for j in 0..6 {
                    assert_eq!(d.get(i, j), d.get(j, i));
                    assert_eq!(d.get(i, j), kind.between(&genomes[i], &genomes[j]).unwrap());
                }
            }
            let single = distance_matrix(&genomes[..1], &kind).unwrap();
            assert_eq!((single.len(), single.get(0, 0)), (1, 0.0));
        }
    }

    #[test]
    fn matrix_push_extends_symmetrically() {
        let mut m = DistanceMatrix::empty();
        m.push(&[]);
        m.push(&[0.5]);
        m.push(&[0.25, 0.75]);
        let expected =
            DistanceMatrix::from_rows(&[vec![0.0, 0.5, 0.25], vec![0.5, 0.0, 0.75], vec![0.25, 0.75, 0.0]]).unwrap();
        assert_eq!(m, expected);
        assert!(DistanceMatrix::from_rows(&[vec![0.0, 0.1], vec![0.2, 0.0]]).is_err());
    }
}
