//! Directed communication topology.
//!
//! Agents are indexed from 0. An edge `(from, to)` means agent `to`
//! receives information from agent `from`, so `from` is an in-neighbor of
//! `to` and appears in the sum agent `to` evaluates in its control law.
//! All functions here are pure over immutable graphs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::numlin::{Matrix, Vector};
use crate::real::Real;

/// Convergence tolerance for the consensus-weight power iteration.
pub const WEIGHT_ITER_TOL: f64 = 1e-12;
/// Iteration cap for the consensus-weight power iteration.
pub const WEIGHT_ITER_MAX: usize = 10_000;
/// Acceptable residual for the fixed-point property of the weights.
pub const WEIGHT_RESIDUAL_TOL: f64 = 1e-10;
/// Slack below zero tolerated in a computed weight entry.
pub const WEIGHT_NONNEG_SLACK: f64 = 1e-12;

/// Directed graph over `agent_count` agents, stored as per-agent sorted
/// in-neighbor lists plus the reverse adjacency for reachability walks.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedGraph {
    agent_count: usize,
    inputs: Vec<Vec<usize>>,
    outputs: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Build from an edge list of `(from, to)` pairs. Self-loops, duplicate
    /// edges, and out-of-range indices are rejected.
    pub fn new(agent_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if agent_count == 0 {
            return Err(Error::Dimension("graph needs at least one agent".into()));
        }
        let mut seen = BTreeSet::new();
        let mut inputs = vec![Vec::new(); agent_count];
        let mut outputs = vec![Vec::new(); agent_count];
        for &(from, to) in edges {
            if from >= agent_count || to >= agent_count {
                return Err(Error::OutOfRange(format!(
                    "edge ({from}, {to}) references an agent >= {agent_count}"
                )));
            }
            if from == to {
                return Err(Error::Domain(format!("self-loop on agent {from}")));
            }
            if !seen.insert((from, to)) {
                return Err(Error::Domain(format!("duplicate edge ({from}, {to})")));
            }
            inputs[to].push(from);
            outputs[from].push(to);
        }
        for list in inputs.iter_mut().chain(outputs.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            agent_count,
            inputs,
            outputs,
        })
    }

    /// Directed ring `0 -> 1 -> ... -> n-1 -> 0`, information flowing to
    /// the successor.
    pub fn directed_ring(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, if n == 1 { &[] } else { &edges }).expect("ring edges are valid")
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn edge_count(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum()
    }

    /// Edges as `(from, to)` pairs in sorted order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (from, tos) in self.outputs.iter().enumerate() {
            for &to in tos {
                out.push((from, to));
            }
        }
        out
    }

    /// Agents whose state agent `i` uses in its control law.
    pub fn in_neighbors(&self, i: usize) -> Result<&[usize]> {
        self.inputs
            .get(i)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::OutOfRange(format!("agent {i} >= {}", self.agent_count)))
    }

    /// In-degree `|N_i|`.
    pub fn in_degree(&self, i: usize) -> Result<usize> {
        Ok(self.in_neighbors(i)?.len())
    }

    /// Graph Laplacian: `l_ii` is the in-degree and `l_ij = -1` exactly when
    /// `j` is an in-neighbor of `i`. Row sums are exactly zero.
    pub fn laplacian<T: Real>(&self) -> Matrix<T> {
        let n = self.agent_count;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = T::from_usize(self.inputs[i].len()).expect("degree fits scalar");
            for &j in &self.inputs[i] {
                l[(i, j)] = -T::one();
            }
        }
        l
    }

    /// Agents from which every agent is reachable along information flow.
    /// Nonempty exactly when the graph has a directed spanning tree.
    pub fn spanning_tree_roots(&self) -> Vec<usize> {
        (0..self.agent_count)
            .filter(|&r| self.reach_count(r) == self.agent_count)
            .collect()
    }

    pub fn has_spanning_tree(&self) -> bool {
        (0..self.agent_count).any(|r| self.reach_count(r) == self.agent_count)
    }

    fn reach_count(&self, root: usize) -> usize {
        let mut visited = vec![false; self.agent_count];
        let mut stack = vec![root];
        visited[root] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.outputs[u] {
                if !visited[v] {
                    visited[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    }

    /// Row-stochastic averaging matrix: row `i` puts weight `1/(|N_i|+1)`
    /// on agent `i` and on each of its in-neighbors.
    ///
    /// The last nonzero entry of each row is set to one minus the running
    /// sum of the others, so plain left-to-right row sums are exactly one;
    /// that entry differs from `1/(|N_i|+1)` by at most one ulp.
    pub fn averaging_matrix<T: Real>(&self) -> Matrix<T> {
        let n = self.agent_count;
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            let w = T::one() / T::from_usize(self.inputs[i].len() + 1).expect("degree fits");
            let mut columns: Vec<usize> = self.inputs[i].clone();
            columns.push(i);
            columns.sort_unstable();
            let mut running = T::zero();
            for (idx, &j) in columns.iter().enumerate() {
                let value = if idx + 1 == columns.len() {
                    T::one() - running
                } else {
                    w
                };
                s[(i, j)] = value;
                running = running + value;
            }
        }
        s
    }

    /// Consensus weights: the left fixed vector of the averaging matrix.
    ///
    /// Computed by power iteration on the transpose; under the spanning-tree
    /// precondition the eigenvalue one is simple and strictly dominant, so
    /// the iteration converges without any general eigensolver.
    pub fn consensus_weights<T: Real>(&self) -> Result<ConsensusWeights<T>> {
        if !self.has_spanning_tree() {
            return Err(Error::NoSpanningTree);
        }
        let n = self.agent_count;
        let s_t = self.averaging_matrix::<T>().transpose();
        let uniform = T::one() / T::from_usize(n).expect("count fits");
        let mut xi = Vector::from_fn(n, |_| uniform);
        let step_tol = T::tol(WEIGHT_ITER_TOL);
        for _ in 0..WEIGHT_ITER_MAX {
            let mut next = s_t.mul_vec(&xi);
            let sum = next.iter().fold(T::zero(), |acc, &v| acc + v);
            next = next.scaled(T::one() / sum);
            let change = next.sub(&xi).max_abs();
            xi = next;
            if change <= step_tol {
                break;
            }
        }
        ConsensusWeights::new(xi, &s_t)
    }
}

/// Left fixed vector of the averaging matrix: nonnegative, sums to one,
/// and weights each agent's initial state in the consensus value.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusWeights<T> {
    xi: Vector<T>,
}

impl<T: Real> ConsensusWeights<T> {
    fn new(xi: Vector<T>, averaging_transpose: &Matrix<T>) -> Result<Self> {
        let slack = -T::tol(WEIGHT_NONNEG_SLACK);
        if xi.iter().any(|&v| v < slack) {
            return Err(Error::NoConvergence(
                "consensus weight iteration produced a negative entry".into(),
            ));
        }
        let sum = xi.iter().fold(T::zero(), |acc, &v| acc + v);
        if (sum - T::one()).abs() > T::tol(WEIGHT_RESIDUAL_TOL) {
            return Err(Error::NoConvergence(format!(
                "consensus weights sum to {sum}, expected 1"
            )));
        }
        let residual = averaging_transpose.mul_vec(&xi).sub(&xi).norm();
        if residual > T::tol(WEIGHT_RESIDUAL_TOL) {
            return Err(Error::NoConvergence(format!(
                "consensus weight fixed-point residual {residual} exceeds tolerance"
            )));
        }
        Ok(Self { xi })
    }

    pub fn xi(&self) -> &Vector<T> {
        &self.xi
    }
}
