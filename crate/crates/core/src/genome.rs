//! The CGPANN genotype and its phenotype.
//!
//! A genome is a fixed number of nodes laid out on a single row. Addresses
//! `0..n_inputs` name the network inputs and node `j` has address
//! `n_inputs + j`. Each node carries `arity` connection genes, one weight gene
//! per connection and a transfer-function gene. A node may connect to any
//! input or any preceding node, so the graph is feed-forward by construction.
//! Duplicate connections inside a node are allowed.
//!
//! Node activity is not stored. It is derived from output reachability by
//! [`decode_active`] whenever it is needed, so it is always consistent with
//! the connection and output genes.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node transfer function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "lowercase"))]
pub enum TransferFunction {
    Tanh,
    Softsign,
    Step,
    Sigmoid,
    Gauss,
}

impl TransferFunction {
    pub const ALL: [TransferFunction; 5] = [
        TransferFunction::Tanh,
        TransferFunction::Softsign,
        TransferFunction::Step,
        TransferFunction::Sigmoid,
        TransferFunction::Gauss,
    ];

    #[inline]
    pub fn apply(self, s: f64) -> f64 {
        match self {
            TransferFunction::Tanh => libm::tanh(s),
            TransferFunction::Softsign => s / (1.0 + s.abs()),
            TransferFunction::Step => {
                if s >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            TransferFunction::Sigmoid => 1.0 / (1.0 + libm::exp(-s)),
            TransferFunction::Gauss => libm::exp(-s * s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransferFunction::Tanh => "tanh",
            TransferFunction::Softsign => "softsign",
            TransferFunction::Step => "step",
            TransferFunction::Sigmoid => "sigmoid",
            TransferFunction::Gauss => "gauss",
        }
    }
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransferFunction {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransferFunction::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or(GenomeError::UnknownFunction)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenomeError {
    #[error("invalid genome configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unknown transfer function name")]
    UnknownFunction,
    #[error("node {node}: expected {expected} genes of each kind, found {found}")]
    NodeShape {
        node: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} nodes, found {found}")]
    NodeCount { expected: usize, found: usize },
    #[error("expected {expected} output genes, found {found}")]
    OutputCount { expected: usize, found: usize },
    #[error("node {node}: connection gene {address} must be below {limit}")]
    ConnectionOutOfRange {
        node: usize,
        address: usize,
        limit: usize,
    },
    #[error("node {node}: weight {weight} outside the configured range")]
    WeightOutOfRange { node: usize, weight: f64 },
    #[error("node {node}: function gene {function} outside the function set")]
    FunctionOutOfRange { node: usize, function: usize },
    #[error("output gene {address} must be below {limit}")]
    OutputOutOfRange { address: usize, limit: usize },
    #[error("expected {expected} gene values, found {found}")]
    GeneCount { expected: usize, found: usize },
    #[error("gene {index} must be a non-negative integer, found {value}")]
    NotAnAddress { index: usize, value: f64 },
}

/// Plain-data description of a [`GenomeConfig`].
///
/// `Default` gives the IRIS setup: 4 inputs, 3 outputs, 40 nodes of arity 5,
/// weights in `[-1, 1]` and all five transfer functions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct GenomeParams {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub n_nodes: usize,
    pub arity: usize,
    pub weight_low: f64,
    pub weight_high: f64,
    pub function_set: Vec<TransferFunction>,
}

impl Default for GenomeParams {
    fn default() -> Self {
        GenomeParams {
            n_inputs: 4,
            n_outputs: 3,
            n_nodes: 40,
            arity: 5,
            weight_low: -1.0,
            weight_high: 1.0,
            function_set: TransferFunction::ALL.to_vec(),
        }
    }
}

impl GenomeParams {
    pub fn build(self) -> Result<GenomeConfig, GenomeError> {
        if self.n_inputs == 0 {
            return Err(GenomeError::InvalidConfig("n_inputs must be at least 1"));
        }
        if self.n_outputs == 0 {
            return Err(GenomeError::InvalidConfig("n_outputs must be at least 1"));
        }
        if self.n_nodes == 0 {
            return Err(GenomeError::InvalidConfig("n_nodes must be at least 1"));
        }
        if self.arity == 0 {
            return Err(GenomeError::InvalidConfig("arity must be at least 1"));
        }
        if !(self.weight_low.is_finite() && self.weight_high.is_finite()) {
            return Err(GenomeError::InvalidConfig("weight bounds must be finite"));
        }
        if self.weight_low >= self.weight_high {
            return Err(GenomeError::InvalidConfig("weight_low must be below weight_high"));
        }
        if self.function_set.is_empty() {
            return Err(GenomeError::InvalidConfig("function set is empty"));
        }
        Ok(GenomeConfig(Arc::new(self)))
    }
}

/// Validated, cheaply clonable genome shape shared by every genome built from it.
#[derive(Clone, Debug)]
pub struct GenomeConfig(Arc<GenomeParams>);

impl PartialEq for GenomeConfig {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl GenomeConfig {
    /// The IRIS configuration (see [`GenomeParams::default`]).
    pub fn iris() -> Self {
        GenomeParams::default()
            .build()
            .expect("default parameters are valid")
    }

    pub fn params(&self) -> &GenomeParams {
        &self.0
    }

    #[inline]
    pub fn n_inputs(&self) -> usize {
        self.0.n_inputs
    }

    #[inline]
    pub fn n_outputs(&self) -> usize {
        self.0.n_outputs
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.0.n_nodes
    }

    #[inline]
    pub fn arity(&self) -> usize {
        self.0.arity
    }

    #[inline]
    pub fn weight_low(&self) -> f64 {
        self.0.weight_low
    }

    #[inline]
    pub fn weight_high(&self) -> f64 {
        self.0.weight_high
    }

    #[inline]
    pub fn weight_range(&self) -> f64 {
        self.0.weight_high - self.0.weight_low
    }

    pub fn function_set(&self) -> &[TransferFunction] {
        &self.0.function_set
    }

    /// Total number of addresses (inputs plus nodes).
    #[inline]
    pub fn n_addresses(&self) -> usize {
        self.0.n_inputs + self.0.n_nodes
    }

    /// Number of gene values in the flat encoding used by [`Genome::to_genes`].
    pub fn gene_count(&self) -> usize {
        self.n_nodes() * (2 * self.arity() + 1) + self.n_outputs()
    }

    #[inline]
    pub(crate) fn sample_connection<R: Rng + ?Sized>(&self, node: usize, rng: &mut R) -> usize {
        rng.random_range(0..self.n_inputs() + node)
    }

    #[inline]
    pub(crate) fn sample_weight<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.weight_low()..=self.weight_high())
    }

    #[inline]
    pub(crate) fn sample_function<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.function_set().len())
    }

    #[inline]
    pub(crate) fn sample_output<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.n_addresses())
    }
}

/// Owned node genes, used to assemble a genome from parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub connections: Vec<usize>,
    pub weights: Vec<f64>,
    pub function: usize,
}

/// Borrowed view of one node's genes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRef<'a> {
    pub connections: &'a [usize],
    pub weights: &'a [f64],
    pub function: usize,
}

/// A CGPANN individual. Genes are stored flat, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    config: GenomeConfig,
    pub(crate) connections: Vec<usize>,
    pub(crate) weights: Vec<f64>,
    pub(crate) functions: Vec<usize>,
    pub(crate) outputs: Vec<usize>,
}

impl Genome {
    /// Samples every gene uniformly from its legal range.
    pub fn random<R: Rng + ?Sized>(config: &GenomeConfig, rng: &mut R) -> Genome {
        let arity = config.arity();
        let n_nodes = config.n_nodes();
        let mut connections = Vec::with_capacity(n_nodes * arity);
        let mut weights = Vec::with_capacity(n_nodes * arity);
        let mut functions = Vec::with_capacity(n_nodes);
        for node in 0..n_nodes {
            for _ in 0..arity {
                connections.push(config.sample_connection(node, rng));
            }
            for _ in 0..arity {
                weights.push(config.sample_weight(rng));
            }
            functions.push(config.sample_function(rng));
        }
        let outputs = (0..config.n_outputs())
            .map(|_| config.sample_output(rng))
            .collect();
        Genome {
            config: config.clone(),
            connections,
            weights,
            functions,
            outputs,
        }
    }

    pub fn from_nodes(
        config: &GenomeConfig,
        nodes: Vec<Node>,
        outputs: Vec<usize>,
    ) -> Result<Genome, GenomeError> {
        if nodes.len() != config.n_nodes() {
            return Err(GenomeError::NodeCount {
                expected: config.n_nodes(),
                found: nodes.len(),
            });
        }
        let arity = config.arity();
        let mut genome = Genome {
            config: config.clone(),
            connections: Vec::with_capacity(nodes.len() * arity),
            weights: Vec::with_capacity(nodes.len() * arity),
            functions: Vec::with_capacity(nodes.len()),
            outputs,
        };
        for (j, node) in nodes.into_iter().enumerate() {
            for found in [node.connections.len(), node.weights.len()] {
                if found != arity {
                    return Err(GenomeError::NodeShape {
                        node: j,
                        expected: arity,
                        found,
                    });
                }
            }
            genome.connections.extend(node.connections);
            genome.weights.extend(node.weights);
            genome.functions.push(node.function);
        }
        genome.validate()?;
        Ok(genome)
    }

    /// Decodes the flat gene encoding: per node `arity` connection genes,
    /// `arity` weight genes and one function gene, followed by the output
    /// genes.
    pub fn from_genes(config: &GenomeConfig, genes: &[f64]) -> Result<Genome, GenomeError> {
        if genes.len() != config.gene_count() {
            return Err(GenomeError::GeneCount {
                expected: config.gene_count(),
                found: genes.len(),
            });
        }
        let address = |index: usize| -> Result<usize, GenomeError> {
            let value = genes[index];
            if value >= 0.0 && libm::trunc(value) == value && value < usize::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(GenomeError::NotAnAddress { index, value })
            }
        };
        let arity = config.arity();
        let stride = 2 * arity + 1;
        let mut nodes = Vec::with_capacity(config.n_nodes());
        for j in 0..config.n_nodes() {
            let base = j * stride;
            let connections = (base..base + arity)
                .map(address)
                .collect::<Result<Vec<_>, _>>()?;
            let weights = genes[base + arity..base + 2 * arity].to_vec();
            let function = address(base + 2 * arity)?;
            nodes.push(Node {
                connections,
                weights,
                function,
            });
        }
        let outputs = (config.n_nodes() * stride..genes.len())
            .map(address)
            .collect::<Result<Vec<_>, _>>()?;
        Genome::from_nodes(config, nodes, outputs)
    }

    pub fn to_genes(&self) -> Vec<f64> {
        let arity = self.config.arity();
        let mut genes = Vec::with_capacity(self.config.gene_count());
        for j in 0..self.config.n_nodes() {
            let node = self.node(j);
            genes.extend(node.connections.iter().map(|&c| c as f64));
            genes.extend_from_slice(node.weights);
            genes.push(node.function as f64);
        }
        debug_assert_eq!(genes.len(), self.config.n_nodes() * (2 * arity + 1));
        genes.extend(self.outputs.iter().map(|&o| o as f64));
        genes
    }

    /// Checks every structural invariant: gene counts, strictly feed-forward
    /// connections, weight bounds, function indices and output addresses.
    pub fn validate(&self) -> Result<(), GenomeError> {
        let config = &self.config;
        let arity = config.arity();
        if self.functions.len() != config.n_nodes() {
            return Err(GenomeError::NodeCount {
                expected: config.n_nodes(),
                found: self.functions.len(),
            });
        }
        if self.outputs.len() != config.n_outputs() {
            return Err(GenomeError::OutputCount {
                expected: config.n_outputs(),
                found: self.outputs.len(),
            });
        }
        for j in 0..config.n_nodes() {
            let node = self.node(j);
            let limit = config.n_inputs() + j;
            if let Some(&address) = node.connections.iter().find(|&&c| c >= limit) {
                return Err(GenomeError::ConnectionOutOfRange {
                    node: j,
                    address,
                    limit,
                });
            }
            if let Some(&weight) = node
                .weights
                .iter()
                .find(|w| !(config.weight_low()..=config.weight_high()).contains(*w))
            {
                return Err(GenomeError::WeightOutOfRange { node: j, weight });
            }
            if node.function >= config.function_set().len() {
                return Err(GenomeError::FunctionOutOfRange {
                    node: j,
                    function: node.function,
                });
            }
        }
        debug_assert_eq!(self.connections.len(), config.n_nodes() * arity);
        let limit = config.n_addresses();
        if let Some(&address) = self.outputs.iter().find(|&&o| o >= limit) {
            return Err(GenomeError::OutputOutOfRange { address, limit });
        }
        Ok(())
    }

    #[inline]
    pub fn config(&self) -> &GenomeConfig {
        &self.config
    }

    #[inline]
    pub fn node(&self, j: usize) -> NodeRef<'_> {
        let arity = self.config.arity();
        let genes = j * arity..(j + 1) * arity;
        NodeRef {
            connections: &self.connections[genes.clone()],
            weights: &self.weights[genes],
            function: self.functions[j],
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeRef<'_>> + '_ {
        (0..self.config.n_nodes()).map(move |j| self.node(j))
    }

    #[inline]
    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Raw weight genes in genome order (node-major).
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Raw connection genes in genome order (node-major).
    #[inline]
    pub fn connections(&self) -> &[usize] {
        &self.connections
    }

    #[inline]
    pub fn functions(&self) -> &[usize] {
        &self.functions
    }

    pub fn active_graph(&self) -> ActiveGraph {
        decode_active(self)
    }
}

/// Decoded active phenotype.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveGraph {
    /// One flag per node; inputs are not included.
    pub active: Vec<bool>,
    /// Active node indices in ascending order, which is a valid evaluation
    /// order because connections only point backwards.
    pub eval_order: Vec<usize>,
}

impl ActiveGraph {
    #[inline]
    pub fn is_active(&self, node: usize) -> bool {
        self.active[node]
    }

    #[inline]
    pub fn active_count(&self) -> usize {
        self.eval_order.len()
    }
}

/// Marks the nodes reachable by walking backwards from the output genes.
pub fn decode_active(genome: &Genome) -> ActiveGraph {
    let config = genome.config();
    let n_inputs = config.n_inputs();
    let mut active = vec![false; config.n_nodes()];
    for &o in genome.outputs() {
        if o >= n_inputs {
            active[o - n_inputs] = true;
        }
    }
    // Connections point strictly backwards, so one descending sweep reaches
    // every ancestor.
    for j in (0..config.n_nodes()).rev() {
        if !active[j] {
            continue;
        }
        for &c in genome.node(j).connections {
            if c >= n_inputs {
                active[c - n_inputs] = true;
            }
        }
    }
    let eval_order = (0..config.n_nodes()).filter(|&j| active[j]).collect();
    ActiveGraph { active, eval_order }
}

/// A genome paired with its decoded active graph, ready for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct Phenotype<'a> {
    genome: &'a Genome,
    graph: ActiveGraph,
}

impl<'a> Phenotype<'a> {
    pub fn new(genome: &'a Genome) -> Self {
        Phenotype {
            genome,
            graph: decode_active(genome),
        }
    }

    pub fn graph(&self) -> &ActiveGraph {
        &self.graph
    }

    /// Evaluates the network. `values` is scratch space and is resized to the
    /// address count; raw outputs are written to `out`.
    pub fn evaluate_into(&self, features: &[f64], values: &mut Vec<f64>, out: &mut [f64]) {
        let config = self.genome.config();
        let n_inputs = config.n_inputs();
        assert_eq!(features.len(), n_inputs, "feature vector length");
        assert_eq!(out.len(), config.n_outputs(), "output buffer length");
        values.clear();
        values.resize(config.n_addresses(), 0.0);
        values[..n_inputs].copy_from_slice(features);
        let functions = config.function_set();
        for &j in &self.graph.eval_order {
            let node = self.genome.node(j);
            let sum: f64 = node
                .connections
                .iter()
                .zip(node.weights)
                .map(|(&c, &w)| w * values[c])
                .sum();
            values[n_inputs + j] = functions[node.function].apply(sum);
        }
        for (o, &address) in out.iter_mut().zip(self.genome.outputs()) {
            *o = values[address];
        }
    }

    /// Evaluates every row of `samples` at once, writing raw outputs
    /// row-major into `out` (`n_rows * n_outputs`). `columns` is scratch
    /// space holding one value column per address. Results equal
    /// [`evaluate_into`](Self::evaluate_into) row by row.
    pub fn evaluate_batch(&self, samples: &FeatureMatrix, columns: &mut Vec<f64>, out: &mut [f64]) {
        let config = self.genome.config();
        let n_inputs = config.n_inputs();
        let n_outputs = config.n_outputs();
        let m = samples.n_rows();
        assert_eq!(samples.n_cols(), n_inputs, "sample width");
        assert_eq!(out.len(), m * n_outputs, "output buffer length");
        columns.clear();
        columns.resize(config.n_addresses() * m, 0.0);
        for (i, row) in samples.rows().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                columns[c * m + i] = v;
            }
        }
        let functions = config.function_set();
        for &j in &self.graph.eval_order {
            let node = self.genome.node(j);
            let (sources, rest) = columns.split_at_mut((n_inputs + j) * m);
            let dst = &mut rest[..m];
            for (&c, &w) in node.connections.iter().zip(node.weights) {
                for (d, &x) in dst.iter_mut().zip(&sources[c * m..(c + 1) * m]) {
                    *d += w * x;
                }
            }
            let f = functions[node.function];
            for d in dst.iter_mut() {
                *d = f.apply(*d);
            }
        }
        for (k, &address) in self.genome.outputs().iter().enumerate() {
            let column = &columns[address * m..(address + 1) * m];
            for (row, &v) in out.chunks_exact_mut(n_outputs).zip(column) {
                row[k] = v;
            }
        }
    }

    pub fn evaluate(&self, features: &[f64]) -> Vec<f64> {
        let mut values = Vec::new();
        let mut out = vec![0.0; self.genome.config().n_outputs()];
        self.evaluate_into(features, &mut values, &mut out);
        out
    }
}

/// Raw (unbounded) network outputs for one feature vector.
pub fn forward(genome: &Genome, features: &[f64]) -> Vec<f64> {
    Phenotype::new(genome).evaluate(features)
}

/// Max-shifted softmax, in place.
pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = libm::exp(*v - max);
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

pub fn softmax(raw: &[f64]) -> Vec<f64> {
    let mut p = raw.to_vec();
    softmax_in_place(&mut p);
    p
}

/// Row-major matrix of feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Panics if `data.len()` is not a multiple of `n_cols` or `n_cols` is 0.
    pub fn new(n_cols: usize, data: Vec<f64>) -> Self {
        assert!(n_cols > 0, "feature matrix needs at least one column");
        assert_eq!(data.len() % n_cols, 0, "ragged feature matrix");
        FeatureMatrix { n_cols, data }
    }

    pub fn from_rows<I, R>(n_cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), n_cols, "ragged feature matrix");
            data.extend_from_slice(row);
        }
        FeatureMatrix::new(n_cols, data)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.data.len() / self.n_cols
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Per-sample class probabilities of one network, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhenotypeSignature {
    n_classes: usize,
    probs: Vec<f64>,
}

impl PhenotypeSignature {
    pub fn n_samples(&self) -> usize {
        self.probs.len() / self.n_classes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// Softmax outputs of `genome` on every row of `samples`.
pub fn phenotype_signature(genome: &Genome, samples: &FeatureMatrix) -> PhenotypeSignature {
    let n_classes = genome.config().n_outputs();
    assert_eq!(samples.n_cols(), genome.config().n_inputs(), "sample width");
    let phenotype = Phenotype::new(genome);
    let mut probs = vec![0.0; samples.n_rows() * n_classes];
    phenotype.evaluate_batch(samples, &mut Vec::new(), &mut probs);
    for out in probs.chunks_exact_mut(n_classes) {
        softmax_in_place(out);
    }
    PhenotypeSignature { n_classes, probs }
}
