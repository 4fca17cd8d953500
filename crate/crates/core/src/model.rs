//! Network model: graph, intrinsic frequencies, phase biases and couplings.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{BarrierFunction, CouplingError};
use crate::graph::{Digraph, GraphError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{field} has {got} entries, graph has {nodes} nodes")]
    Length { field: &'static str, got: usize, nodes: usize },
    #[error("phase bias of node {node} is {value}, expected a value in [-π, π)")]
    PhaseOutOfRange { node: usize, value: f64 },
    #[error("{field} of node {node} is not finite")]
    NotFinite { field: &'static str, node: usize },
    #[error("graph is not connected ({0} independent strongly connected components)")]
    NotConnected(usize),
}

/// `θ̇_i = ω_i + f_i(ν_i + φ_i)` with `ν_i = Σ_j α_ij (θ_j − θ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct NetworkModel {
    graph: Digraph,
    omega: Vec<f64>,
    phi: Vec<f64>,
    coupling: Vec<BarrierFunction>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    graph: Digraph,
    omega: Vec<f64>,
    phi: Vec<f64>,
    coupling: Vec<BarrierFunction>,
}

impl TryFrom<RawModel> for NetworkModel {
    type Error = ModelError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        NetworkModel::new(raw.graph, raw.omega, raw.phi, raw.coupling)
    }
}

impl From<NetworkModel> for RawModel {
    fn from(m: NetworkModel) -> Self {
        RawModel { graph: m.graph, omega: m.omega, phi: m.phi, coupling: m.coupling }
    }
}

impl NetworkModel {
    pub fn new(
        graph: Digraph,
        omega: Vec<f64>,
        phi: Vec<f64>,
        coupling: Vec<BarrierFunction>,
    ) -> Result<Self, ModelError> {
        let nodes = graph.node_count();
        for (field, got) in [("omega", omega.len()), ("phi", phi.len()), ("coupling", coupling.len())] {
            if got != nodes {
                return Err(ModelError::Length { field, got, nodes });
            }
        }
        for (i, (&w, &p)) in omega.iter().zip(&phi).enumerate() {
            if !w.is_finite() {
                return Err(ModelError::NotFinite { field: "omega", node: i + 1 });
            }
            if !(-PI..PI).contains(&p) {
                return Err(ModelError::PhaseOutOfRange { node: i + 1, value: p });
            }
        }
        let isccs = graph.independent_sccs().len();
        if isccs != 1 {
            return Err(ModelError::NotConnected(isccs));
        }
        Ok(NetworkModel { graph, omega, phi, coupling })
    }

    /// Same coupling function at every node.
    pub fn uniform(
        graph: Digraph,
        omega: Vec<f64>,
        phi: Vec<f64>,
        f: BarrierFunction,
    ) -> Result<Self, ModelError> {
        let n = graph.node_count();
        Self::new(graph, omega, phi, vec![f; n])
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn coupling(&self) -> &[BarrierFunction] {
        &self.coupling
    }

    pub fn with_omega(&self, omega: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(self.graph.clone(), omega, self.phi.clone(), self.coupling.clone())
    }

    pub fn with_phi(&self, phi: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(self.graph.clone(), self.omega.clone(), phi, self.coupling.clone())
    }

    pub fn with_coupling(&self, coupling: Vec<BarrierFunction>) -> Result<Self, ModelError> {
        Self::new(self.graph.clone(), self.omega.clone(), self.phi.clone(), coupling)
    }

    pub fn with_graph(&self, graph: Digraph) -> Result<Self, ModelError> {
        Self::new(graph, self.omega.clone(), self.phi.clone(), self.coupling.clone())
    }

    /// Coupling inputs `ν_i = Σ_j α_ij (θ_j − θ_i)`.
    pub fn nu(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.node_count())
            .map(|i| {
                self.graph
                    .in_edges0(i)
                    .iter()
                    .map(|&(j, w)| f64::from(w) * (theta[j] - theta[i]))
                    .sum()
            })
            .collect()
    }

    /// Coupling arguments `ν_i + φ_i`.
    pub fn coupling_args(&self, theta: &[f64]) -> Vec<f64> {
        let mut x = self.nu(theta);
        x.iter_mut().zip(&self.phi).for_each(|(v, p)| *v += p);
        x
    }

    /// Vector field of the network at `theta`.
    pub fn velocity(&self, theta: &[f64]) -> Result<Vec<f64>, CouplingError> {
        self.coupling_args(theta)
            .iter()
            .enumerate()
            .map(|(i, &x)| Ok(self.omega[i] + self.coupling[i].eval(x)?))
            .collect()
    }

    /// `max_i |ω̄ − ω_i − f_i(Σ_j α_ij Δ_ij + φ_i)|` for a candidate
    /// phase-locked solution.
    pub fn locking_residual(&self, omega_bar: f64, delta: &[f64]) -> Result<f64, CouplingError> {
        let v = self.velocity(delta)?;
        Ok(v.iter().map(|x| (omega_bar - x).abs()).fold(0.0, f64::max))
    }
}
