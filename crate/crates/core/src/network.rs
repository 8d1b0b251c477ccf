//! Network topology, diffusion weights and neighbourhood stacking.
//!
//! Node ids are 0-based in the API and 1-based in topology files and CSV output.
//! A node's closed neighbourhood always contains the node itself and is kept in
//! ascending id order; that order is the stacking order for observations and
//! noise blocks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{LinalgError, NetworkError};
use crate::linalg::{augment_covariance, is_positive_semidefinite, ComplexMatrix, ComplexVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    neighborhoods: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, NetworkError> {
        if node_count == 0 {
            return Err(NetworkError::Empty);
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for node in [a, b] {
                if node >= node_count {
                    return Err(NetworkError::UnknownNode { node, count: node_count });
                }
            }
            if a == b {
                return Err(NetworkError::SelfLoop(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighborhoods: Vec<Vec<usize>> = (0..node_count).map(|i| vec![i]).collect();
        for &(a, b) in &set {
            neighborhoods[a].push(b);
            neighborhoods[b].push(a);
        }
        for n in &mut neighborhoods {
            n.sort_unstable();
        }
        Ok(Self { node_count, edges: set, neighborhoods })
    }

    /// Nodes that do not communicate; every filter run on this topology is
    /// the non-cooperative counterpart of its diffusion version.
    pub fn isolated(node_count: usize) -> Result<Self, NetworkError> {
        Self::new(node_count, &[])
    }

    pub fn fully_connected(node_count: usize) -> Result<Self, NetworkError> {
        let edges: Vec<_> =
            (0..node_count).flat_map(|a| ((a + 1)..node_count).map(move |b| (a, b))).collect();
        Self::new(node_count, &edges)
    }

    pub fn line(node_count: usize) -> Result<Self, NetworkError> {
        let edges: Vec<_> = (1..node_count).map(|b| (b - 1, b)).collect();
        Self::new(node_count, &edges)
    }

    /// Five substations with edges 1-2, 1-3, 2-3, 3-4, 4-5 (1-based).
    pub fn default_five_node() -> Self {
        Self::new(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]).expect("static topology")
    }

    /// Parses one edge per line as two whitespace-separated 1-based node ids.
    /// Blank lines and lines starting with `#` are skipped. The node count is
    /// the largest id mentioned.
    pub fn parse(text: &str) -> Result<Self, NetworkError> {
        let mut edges = Vec::new();
        let mut max_id = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ids: Vec<&str> = line.split_whitespace().collect();
            if ids.len() != 2 {
                return Err(NetworkError::Parse {
                    line: idx + 1,
                    message: format!("expected two node ids, found {}", ids.len()),
                });
            }
            let mut pair = [0usize; 2];
            for (slot, tok) in pair.iter_mut().zip(&ids) {
                let id: usize = tok.parse().map_err(|_| NetworkError::Parse {
                    line: idx + 1,
                    message: format!("invalid node id {tok:?}"),
                })?;
                if id == 0 {
                    return Err(NetworkError::Parse {
                        line: idx + 1,
                        message: "node ids are 1-based".into(),
                    });
                }
                max_id = max_id.max(id);
                *slot = id - 1;
            }
            if pair[0] == pair[1] {
                return Err(NetworkError::Parse {
                    line: idx + 1,
                    message: format!("self-loop on node {}", pair[0] + 1),
                });
            }
            edges.push((pair[0], pair[1]));
        }
        Self::new(max_id, &edges)
    }

    pub fn from_file(path: &Path) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NetworkError::Parse { line: 0, message: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Closed neighbourhood of `node`, ascending.
    pub fn neighborhood(&self, node: usize) -> Result<&[usize], NetworkError> {
        self.neighborhoods
            .get(node)
            .map(Vec::as_slice)
            .ok_or(NetworkError::UnknownNode { node, count: self.node_count })
    }

    /// `|N_i|`, i.e. degree plus one.
    pub fn closed_degree(&self, node: usize) -> usize {
        self.neighborhoods[node].len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightRule {
    #[default]
    Uniform,
    Metropolis,
}

/// Column-stochastic diffusion weights `c[k, i]`: node `i` combines the
/// estimates of its neighbours `k` with these coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinationWeights {
    node_count: usize,
    values: Vec<f64>,
}

impl CombinationWeights {
    /// Weight that node `target` gives to the estimate of node `source`.
    pub fn weight(&self, source: usize, target: usize) -> f64 {
        self.values[source * self.node_count + target]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Custom weights; columns must be nonnegative, sum to one and vanish
    /// outside the closed neighbourhood.
    pub fn from_matrix(topology: &Topology, values: Vec<Vec<f64>>) -> Result<Self, NetworkError> {
        let n = topology.node_count();
        let mut flat = vec![0.0; n * n];
        for (k, row) in values.iter().enumerate().take(n) {
            for (i, &v) in row.iter().enumerate().take(n) {
                flat[k * n + i] = v;
            }
        }
        let w = Self { node_count: n, values: flat };
        w.validate(topology)?;
        Ok(w)
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), NetworkError> {
        for i in 0..self.node_count {
            let hood = topology.neighborhood(i)?;
            let mut sum = 0.0;
            for k in 0..self.node_count {
                let c = self.weight(k, i);
                let inside = hood.binary_search(&k).is_ok();
                if c < 0.0 || (!inside && c != 0.0) {
                    return Err(NetworkError::NotStochastic { node: i, sum: f64::NAN });
                }
                sum += c;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(NetworkError::NotStochastic { node: i, sum });
            }
        }
        Ok(())
    }
}

pub fn combination_weights(topology: &Topology, rule: WeightRule) -> CombinationWeights {
    let n = topology.node_count();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let hood = &topology.neighborhoods[i];
        match rule {
            WeightRule::Uniform => {
                let w = 1.0 / hood.len() as f64;
                for &k in hood {
                    values[k * n + i] = w;
                }
            }
            WeightRule::Metropolis => {
                let mut off_diagonal = 0.0;
                for &k in hood.iter().filter(|&&k| k != i) {
                    let w = 1.0 / topology.closed_degree(i).max(topology.closed_degree(k)) as f64;
                    values[k * n + i] = w;
                    off_diagonal += w;
                }
                values[i * n + i] = 1.0 - off_diagonal;
            }
        }
    }
    CombinationWeights { node_count: n, values }
}

/// Topology together with its diffusion weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub topology: Topology,
    pub weights: CombinationWeights,
}

impl Network {
    pub fn new(topology: Topology, rule: WeightRule) -> Self {
        let weights = combination_weights(&topology, rule);
        Self { topology, weights }
    }

    pub fn with_weights(topology: Topology, weights: CombinationWeights) -> Result<Self, NetworkError> {
        weights.validate(&topology)?;
        Ok(Self { topology, weights })
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct CrossBlock {
    covariance: ComplexMatrix,
    pseudo: ComplexMatrix,
}

/// Second-order statistics of the nodal observation noises: per-node
/// covariance `R_i` and pseudocovariance `U_i`, plus optional cross blocks
/// `R_ab = E{v_a v_b^H}` and `U_ab = E{v_a v_b^T}` between nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationNoise {
    covariance: Vec<ComplexMatrix>,
    pseudo: Vec<ComplexMatrix>,
    // keyed with a < b
    cross: BTreeMap<(usize, usize), CrossBlock>,
}

impl ObservationNoise {
    pub fn new(covariance: Vec<ComplexMatrix>, pseudo: Vec<ComplexMatrix>) -> Result<Self, NetworkError> {
        if covariance.is_empty() {
            return Err(NetworkError::Empty);
        }
        if covariance.len() != pseudo.len() {
            return Err(NetworkError::Linalg(LinalgError::DimensionMismatch {
                op: "observation noise",
                left: (covariance.len(), 1),
                right: (pseudo.len(), 1),
            }));
        }
        for (i, (r, u)) in covariance.iter().zip(&pseudo).enumerate() {
            let aug = augment_covariance(r, u)?;
            if !is_positive_semidefinite(&aug) {
                return Err(NetworkError::NotPsd { a: i, b: i });
            }
        }
        Ok(Self { covariance, pseudo, cross: BTreeMap::new() })
    }

    /// Same `(R, U)` at every node, no cross-correlation.
    pub fn uniform(
        node_count: usize,
        covariance: ComplexMatrix,
        pseudo: ComplexMatrix,
    ) -> Result<Self, NetworkError> {
        Self::new(vec![covariance; node_count], vec![pseudo; node_count])
    }

    /// Adds the cross blocks between nodes `a` and `b`, given in the `(a, b)`
    /// orientation.
    pub fn with_cross(
        mut self,
        a: usize,
        b: usize,
        covariance: ComplexMatrix,
        pseudo: ComplexMatrix,
    ) -> Result<Self, NetworkError> {
        let n = self.node_count();
        for node in [a, b] {
            if node >= n {
                return Err(NetworkError::UnknownNode { node, count: n });
            }
        }
        if a == b {
            return Err(NetworkError::SelfLoop(a));
        }
        let expected = (self.covariance[a].rows(), self.covariance[b].rows());
        for m in [&covariance, &pseudo] {
            if m.shape() != expected {
                return Err(NetworkError::Linalg(LinalgError::DimensionMismatch {
                    op: "cross block",
                    left: expected,
                    right: m.shape(),
                }));
            }
        }
        let block = if a < b {
            CrossBlock { covariance, pseudo }
        } else {
            CrossBlock { covariance: covariance.hermitian_transpose(), pseudo: pseudo.transpose() }
        };
        self.cross.insert((a.min(b), a.max(b)), block);
        Ok(self)
    }

    /// Cross-correlation `rho` between every pair of nodes with identical
    /// statistics: `R_ab = rho R`, `U_ab = rho U`.
    pub fn with_uniform_correlation(mut self, rho: f64) -> Result<Self, NetworkError> {
        if rho == 0.0 {
            return Ok(self);
        }
        let n = self.node_count();
        for a in 0..n {
            for b in (a + 1)..n {
                let r = self.covariance[a].scale(rho.into());
                let u = self.pseudo[a].scale(rho.into());
                self = self.with_cross(a, b, r, u)?;
            }
        }
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.covariance.len()
    }

    pub fn covariance(&self, node: usize) -> &ComplexMatrix {
        &self.covariance[node]
    }

    pub fn pseudo(&self, node: usize) -> &ComplexMatrix {
        &self.pseudo[node]
    }

    pub fn has_cross_terms(&self) -> bool {
        self.cross.values().any(|c| !c.covariance.is_zero() || !c.pseudo.is_zero())
    }

    pub fn is_circular(&self) -> bool {
        self.pseudo.iter().all(ComplexMatrix::is_zero) && self.cross.values().all(|c| c.pseudo.is_zero())
    }

    /// `(R_ab, U_ab)`; zero blocks when no correlation was declared.
    pub fn cross(&self, a: usize, b: usize) -> (ComplexMatrix, ComplexMatrix) {
        if a == b {
            return (self.covariance[a].clone(), self.pseudo[a].clone());
        }
        match self.cross.get(&(a.min(b), a.max(b))) {
            Some(block) if a < b => (block.covariance.clone(), block.pseudo.clone()),
            Some(block) => (block.covariance.hermitian_transpose(), block.pseudo.transpose()),
            None => {
                let shape = (self.covariance[a].rows(), self.covariance[b].rows());
                (ComplexMatrix::zeros(shape.0, shape.1), ComplexMatrix::zeros(shape.0, shape.1))
            }
        }
    }

    /// Augmented per-node covariance `R^a_i`.
    pub fn augmented(&self, node: usize) -> ComplexMatrix {
        augment_covariance(&self.covariance[node], &self.pseudo[node]).expect("validated at construction")
    }
}

/// Neighbourhood noise statistics in stacking order.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedNoise {
    pub covariance: ComplexMatrix,
    pub pseudo: ComplexMatrix,
    pub augmented: ComplexMatrix,
}

/// Assembles `R_i`, `U_i` (underlined, neighbourhood form) and their augmented
/// form for the given ordered node list.
pub fn stack_noise(noise: &ObservationNoise, nodes: &[usize]) -> Result<StackedNoise, NetworkError> {
    let stacked = assemble_noise(noise, nodes)?;
    // block-diagonal stacks of validated blocks are PSD already
    if noise.has_cross_terms() && !is_positive_semidefinite(&stacked.augmented) {
        return Err(find_violating_pair(noise, nodes));
    }
    Ok(stacked)
}

fn assemble_noise(noise: &ObservationNoise, nodes: &[usize]) -> Result<StackedNoise, NetworkError> {
    let dims: Vec<usize> = nodes.iter().map(|&k| noise.covariance(k).rows()).collect();
    let total: usize = dims.iter().sum();
    let mut covariance = ComplexMatrix::zeros(total, total);
    let mut pseudo = ComplexMatrix::zeros(total, total);
    let mut row = 0;
    for (a_idx, &a) in nodes.iter().enumerate() {
        let mut col = 0;
        for (b_idx, &b) in nodes.iter().enumerate() {
            let (r, u) = noise.cross(a, b);
            covariance.set_block(row, col, &r);
            pseudo.set_block(row, col, &u);
            col += dims[b_idx];
        }
        row += dims[a_idx];
    }
    let augmented = augment_covariance(&covariance, &pseudo)?;
    Ok(StackedNoise { covariance, pseudo, augmented })
}

fn find_violating_pair(noise: &ObservationNoise, nodes: &[usize]) -> NetworkError {
    for (ia, &a) in nodes.iter().enumerate() {
        for &b in &nodes[ia + 1..] {
            let pair = [a, b];
            let ok =
                assemble_noise(noise, &pair).map(|s| is_positive_semidefinite(&s.augmented)).unwrap_or(false);
            if !ok {
                return NetworkError::NotPsd { a, b };
            }
        }
    }
    let first = nodes.first().copied().unwrap_or(0);
    NetworkError::NotPsd { a: first, b: nodes.last().copied().unwrap_or(first) }
}

/// Stacked observation matrices of a neighbourhood.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedObservation {
    pub observation: ComplexMatrix,
    pub conjugate_observation: ComplexMatrix,
    /// `[[H, B], [conj(B), conj(H)]]`
    pub augmented: ComplexMatrix,
}

pub fn stack_observation_matrices(
    observation: &[&ComplexMatrix],
    conjugate_observation: &[&ComplexMatrix],
) -> Result<StackedObservation, NetworkError> {
    let h = ComplexMatrix::vstack(observation)?;
    let b = ComplexMatrix::vstack(conjugate_observation)?;
    if h.shape() != b.shape() {
        return Err(NetworkError::Linalg(LinalgError::DimensionMismatch {
            op: "stack_observation_matrices",
            left: h.shape(),
            right: b.shape(),
        }));
    }
    let augmented = ComplexMatrix::from_quadrants(&h, &b, &b.conjugate(), &h.conjugate())?;
    Ok(StackedObservation { observation: h, conjugate_observation: b, augmented })
}

/// Full neighbourhood stack for node `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodStack {
    pub nodes: Vec<usize>,
    pub observation: StackedObservation,
    pub noise: StackedNoise,
}

/// Stacks `(H_k, B_k)` and the noise blocks over the closed neighbourhood of
/// `node`, in ascending node order.
pub fn stack_neighborhood(
    topology: &Topology,
    observation: &[ComplexMatrix],
    conjugate_observation: &[ComplexMatrix],
    noise: &ObservationNoise,
    node: usize,
) -> Result<NeighborhoodStack, NetworkError> {
    let nodes = topology.neighborhood(node)?.to_vec();
    let state_dim = observation.get(node).map(ComplexMatrix::cols);
    for &k in &nodes {
        let (Some(h), Some(b)) = (observation.get(k), conjugate_observation.get(k)) else {
            return Err(NetworkError::UnknownNode { node: k, count: observation.len() });
        };
        if Some(h.cols()) != state_dim || h.shape() != b.shape() {
            return Err(NetworkError::Linalg(LinalgError::DimensionMismatch {
                op: "stack_neighborhood",
                left: (h.rows(), state_dim.unwrap_or(0)),
                right: h.shape(),
            }));
        }
    }
    let hs: Vec<&ComplexMatrix> = nodes.iter().map(|&k| &observation[k]).collect();
    let bs: Vec<&ComplexMatrix> = nodes.iter().map(|&k| &conjugate_observation[k]).collect();
    Ok(NeighborhoodStack {
        observation: stack_observation_matrices(&hs, &bs)?,
        noise: stack_noise(noise, &nodes)?,
        nodes,
    })
}

/// Concatenates node observations in the given order and returns both the
/// stacked vector and its augmented form.
pub fn stack_observations(
    observations: &[&ComplexVector],
) -> Result<(ComplexVector, ComplexVector), NetworkError> {
    if observations.is_empty() {
        return Err(NetworkError::Empty);
    }
    let stacked = ComplexVector::concat(observations)?;
    let augmented = ComplexVector::concat(&[&stacked, &stacked.conjugate()])?;
    Ok((stacked, augmented))
}

/// Like [`stack_observations`] but checks each node's observation length.
pub fn stack_neighborhood_observations(
    nodes: &[usize],
    observations: &[ComplexVector],
    expected_len: impl Fn(usize) -> usize,
) -> Result<(ComplexVector, ComplexVector), NetworkError> {
    let mut parts = Vec::with_capacity(nodes.len());
    for &k in nodes {
        let y =
            observations.get(k).ok_or(NetworkError::UnknownNode { node: k, count: observations.len() })?;
        let expected = expected_len(k);
        if y.len() != expected {
            return Err(NetworkError::ObservationLength { node: k, expected, actual: y.len() });
        }
        parts.push(y);
    }
    stack_observations(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex;

    fn real(v: f64) -> ComplexMatrix {
        ComplexMatrix::scalar(Complex::new(v, 0.0))
    }

    #[test]
    fn neighborhood_examples() {
        let line = Topology::line(5).unwrap();
        assert_eq!(line.neighborhood(2).unwrap(), &[1, 2, 3]);
        let iso = Topology::isolated(3).unwrap();
        assert_eq!(iso.neighborhood(1).unwrap(), &[1]);
        let full = Topology::fully_connected(5).unwrap();
        for i in 0..5 {
            assert_eq!(full.neighborhood(i).unwrap(), &[0, 1, 2, 3, 4]);
        }
        assert!(matches!(line.neighborhood(7), Err(NetworkError::UnknownNode { node: 7, count: 5 })));
    }

    #[test]
    fn topology_rejects_self_loops_and_unknown_nodes() {
        assert_eq!(Topology::new(3, &[(1, 1)]), Err(NetworkError::SelfLoop(1)));
        assert!(Topology::new(3, &[(0, 3)]).is_err());
        assert_eq!(Topology::new(0, &[]), Err(NetworkError::Empty));
    }

    #[test]
    fn neighborhoods_are_symmetric() {
        let t = Topology::default_five_node();
        for i in 0..5 {
            for &k in t.neighborhood(i).unwrap() {
                assert!(t.neighborhood(k).unwrap().contains(&i));
            }
        }
    }

    #[test]
    fn parse_topology_file() {
        let text = "# five node grid\n1 2\n1 3\n\n2 3\n3 4\n4 5\n";
        assert_eq!(Topology::parse(text).unwrap(), Topology::default_five_node());
        assert!(matches!(Topology::parse("1 2 3\n"), Err(NetworkError::Parse { line: 1, .. })));
        assert!(matches!(Topology::parse("# x\n0 1\n"), Err(NetworkError::Parse { line: 2, .. })));
        assert!(matches!(Topology::parse("2 2\n"), Err(NetworkError::Parse { line: 1, .. })));
    }

    #[test]
    fn uniform_weights() {
        let t = Topology::line(5).unwrap();
        let w = combination_weights(&t, WeightRule::Uniform);
        for k in 1..4 {
            assert_eq!(w.weight(k, 2), 1.0 / 3.0);
        }
        assert_eq!(w.weight(0, 2), 0.0);
    }

    #[test]
    fn metropolis_weights() {
        // node 0 has |N| = 3 (star centre 1 plus chain), build |N_i|=3, |N_k|=4
        let t = Topology::new(6, &[(0, 1), (0, 2), (1, 3), (1, 4)]).unwrap();
        assert_eq!(t.closed_degree(0), 3);
        assert_eq!(t.closed_degree(1), 4);
        let w = combination_weights(&t, WeightRule::Metropolis);
        assert_eq!(w.weight(1, 0), 0.25);
        assert!(w.weight(0, 0) >= 0.0);
        w.validate(&t).unwrap();
    }

    #[test]
    fn weight_columns_sum_to_one() {
        for t in [
            Topology::default_five_node(),
            Topology::line(7).unwrap(),
            Topology::isolated(3).unwrap(),
            Topology::fully_connected(4).unwrap(),
        ] {
            for rule in [WeightRule::Uniform, WeightRule::Metropolis] {
                let w = combination_weights(&t, rule);
                for i in 0..t.node_count() {
                    let s: f64 = (0..t.node_count()).map(|k| w.weight(k, i)).sum();
                    assert!((s - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn custom_weights_are_validated() {
        let t = Topology::line(2).unwrap();
        assert!(CombinationWeights::from_matrix(&t, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        assert!(CombinationWeights::from_matrix(&t, vec![vec![0.7, 0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn single_node_stack_is_passthrough() {
        let t = Topology::isolated(2).unwrap();
        let h = vec![real(2.0), real(3.0)];
        let b = vec![real(0.5), real(0.0)];
        let noise = ObservationNoise::new(vec![real(1.0), real(2.0)], vec![real(0.3), real(0.0)]).unwrap();
        let s = stack_neighborhood(&t, &h, &b, &noise, 0).unwrap();
        assert_eq!(s.nodes, vec![0]);
        assert_eq!(s.observation.observation, real(2.0));
        assert_eq!(s.observation.conjugate_observation, real(0.5));
        assert_eq!(s.noise.covariance, real(1.0));
        assert_eq!(s.noise.pseudo, real(0.3));
    }

    #[test]
    fn uncorrelated_pair_is_block_diagonal() {
        let t = Topology::line(2).unwrap();
        let h = vec![real(1.0), real(1.0)];
        let b = vec![real(0.0), real(0.0)];
        let noise = ObservationNoise::uniform(2, real(1.0), real(0.0)).unwrap();
        let s = stack_neighborhood(&t, &h, &b, &noise, 0).unwrap();
        assert_eq!(s.noise.covariance, ComplexMatrix::identity(2));
        assert_eq!(s.observation.augmented.shape(), (4, 2));
    }

    #[test]
    fn correlated_pair_eigenvalues() {
        let t = Topology::line(2).unwrap();
        let noise = ObservationNoise::uniform(2, real(1.0), real(0.0))
            .unwrap()
            .with_uniform_correlation(0.5)
            .unwrap();
        let s = stack_neighborhood(&t, &[real(1.0), real(1.0)], &[real(0.0), real(0.0)], &noise, 1).unwrap();
        let r = &s.noise.covariance;
        assert_eq!(r[(0, 1)], Complex::new(0.5, 0.0));
        // 2x2 symmetric [[a, c], [c, a]] has eigenvalues a +- c
        let (a, c) = (r[(0, 0)].re, r[(0, 1)].re);
        let mut eig = [a - c, a + c];
        eig.sort_by(f64::total_cmp);
        assert_eq!(eig, [0.5, 1.5]);
    }

    #[test]
    fn non_psd_cross_block_names_pair() {
        let t = Topology::line(3).unwrap();
        let noise = ObservationNoise::uniform(3, real(1.0), real(0.0))
            .unwrap()
            .with_cross(1, 2, real(1.5), real(0.0))
            .unwrap();
        let err = stack_neighborhood(
            &t,
            &[real(1.0), real(1.0), real(1.0)],
            &[real(0.0), real(0.0), real(0.0)],
            &noise,
            1,
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::NotPsd { a: 1, b: 2 });
    }

    #[test]
    fn cross_blocks_respect_orientation() {
        let r_ab = ComplexMatrix::scalar(Complex::new(0.2, 0.1));
        let u_ab = ComplexMatrix::scalar(Complex::new(0.05, -0.02));
        let noise = ObservationNoise::uniform(2, real(1.0), real(0.0))
            .unwrap()
            .with_cross(1, 0, r_ab.clone(), u_ab.clone())
            .unwrap();
        let (r10, u10) = noise.cross(1, 0);
        assert_eq!(r10, r_ab);
        assert_eq!(u10, u_ab);
        let (r01, _) = noise.cross(0, 1);
        assert_eq!(r01, r_ab.hermitian_transpose());
    }

    #[test]
    fn observation_stacking() {
        let a = ComplexVector::new(vec![Complex::new(1.0, 1.0)]).unwrap();
        let b = ComplexVector::new(vec![Complex::new(2.0, 0.0)]).unwrap();
        let (y, ya) = stack_observations(&[&a, &b]).unwrap();
        assert_eq!(y.as_slice(), &[Complex::new(1.0, 1.0), Complex::new(2.0, 0.0)]);
        assert_eq!(
            ya.as_slice(),
            &[
                Complex::new(1.0, 1.0),
                Complex::new(2.0, 0.0),
                Complex::new(1.0, -1.0),
                Complex::new(2.0, 0.0)
            ]
        );
        let (single, _) = stack_observations(&[&a]).unwrap();
        assert_eq!(single, a);
        assert_eq!(stack_observations(&[]), Err(NetworkError::Empty));
        let err = stack_neighborhood_observations(&[0, 1], &[a.clone(), b.clone()], |_| 2);
        assert!(matches!(err, Err(NetworkError::ObservationLength { node: 0, .. })));
    }
}
