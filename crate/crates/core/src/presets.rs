//! Ready-made networks used by the command-line reproductions and tests.

use std::f64::consts::PI;

use crate::coupling::BarrierFunction;
use crate::design::{assign_by_gains, construct_multi_pattern_couplings, DesignError, TargetPattern};
use crate::graph::Digraph;
use crate::model::NetworkModel;

/// Tail height used when saturating the nine-node network.
pub const NINE_NODE_SATURATION_DELTA: f64 = 0.01;

/// Width parameter of the two-agent switching example.
pub const TWO_AGENT_EPS: f64 = 0.1;

/// Edges of the nine-node network: a two-node core {1, 2} driving a tree of
/// followers. The core weight 1 → 2 is given separately.
fn nine_node_graph(core_weight: u32) -> Digraph {
    Digraph::new(
        9,
        [
            (1, 2, core_weight),
            (2, 1, 1),
            (2, 3, 1),
            (2, 5, 1),
            (6, 4, 1),
            (2, 6, 1),
            (6, 7, 1),
            (7, 8, 1),
            (8, 9, 1),
        ],
    )
    .expect("static graph is valid")
}

/// Target pattern of the nine-node network: `ω̄ = 1` with the agents spread
/// roughly evenly around the circle.
pub fn nine_node_target() -> TargetPattern {
    TargetPattern::new(
        1.0,
        vec![
            0.0,
            -1.0 / 50.0,
            PI / 4.0,
            PI / 2.0,
            3.0 * PI / 4.0,
            PI + 1.0 / 50.0,
            5.0 * PI / 4.0 + 1.0 / 100.0,
            3.0 * PI / 2.0 + 1.0 / 50.0,
            7.0 * PI / 4.0 + 1.0 / 100.0,
        ],
    )
}

fn nine_node_omega() -> Vec<f64> {
    let mut omega = vec![2.0; 9];
    omega[0] = 0.0;
    omega
}

fn nine_node_phi(core: [f64; 2]) -> Vec<f64> {
    vec![core[0], core[1], 0.0, -PI + 0.01, 0.0, -PI + 0.01, -PI / 2.0, 0.0, 0.0]
}

/// Nine-node network with weight 2 on edge 1 → 2 and gains fitted to the
/// target; it has three distinct phase-locked patterns.
pub fn nine_node() -> Result<NetworkModel, DesignError> {
    let g = nine_node_graph(2);
    let phi = nine_node_phi([PI - 0.03, PI - 0.03]);
    let solution =
        assign_by_gains(&g, &nine_node_omega(), &phi, &BarrierFunction::prototype(), &nine_node_target())?;
    Ok(solution.model)
}

/// Variant with unit weights and small core biases; it has a single
/// phase-locked pattern.
pub fn nine_node_single_pattern() -> Result<NetworkModel, DesignError> {
    let g = nine_node_graph(1);
    let phi = nine_node_phi([1.0 / 25.0, -1.0 / 25.0]);
    let solution =
        assign_by_gains(&g, &nine_node_omega(), &phi, &BarrierFunction::prototype(), &nine_node_target())?;
    Ok(solution.model)
}

/// [`nine_node`] with the prototype cut to `(−200 − δ, 40 + δ)` before the
/// gains are applied, so only frequencies near the target are reachable.
pub fn nine_node_saturated() -> Result<NetworkModel, DesignError> {
    let base = nine_node()?;
    let delta = NINE_NODE_SATURATION_DELTA;
    let cut = BarrierFunction::prototype().saturate(-200.0 - delta, 40.0 + delta, delta)?;
    let g = base.graph();
    let target = nine_node_target();
    let proto = BarrierFunction::prototype();
    let coupling = (1..=9)
        .map(|i| {
            let arg = target.coupling_arg(g, i, base.phi()[i - 1]);
            let gain = (target.omega_bar - base.omega()[i - 1]) / proto.eval(arg)?;
            Ok(BarrierFunction::scaled(gain, cut.clone())?)
        })
        .collect::<Result<Vec<_>, DesignError>>()?;
    Ok(base.with_coupling(coupling)?)
}

/// Initial phases of agent 1 for the three nine-node runs (others start at 0).
pub const NINE_NODE_INITIAL_PHASES: [f64; 3] = [PI, 0.0, -PI / 2.0];

pub fn nine_node_initial_state(theta1: f64) -> Vec<f64> {
    let mut theta = vec![0.0; 9];
    theta[0] = theta1;
    theta
}

/// Two mutually coupled agents with two phase-locked patterns: one near a
/// cell boundary (`ω̄ = 2`, offset `π/2 − eps`) and one in the middle of its
/// cell (`ω̄ = 1`, offset `π`).
pub fn two_agent(eps: f64) -> Result<NetworkModel, DesignError> {
    let g = Digraph::unweighted(2, [(1, 2), (2, 1)])?;
    let t = (PI / 4.0).tan();
    let f1 = BarrierFunction::shifted_scaled_tan_half(1.0, t, ((PI - eps) / 2.0).tan() + t, 1.0)?;
    let f2 = BarrierFunction::shifted_scaled_tan_half(1.0, t, (eps / 2.0).tan() + t, -1.0)?;
    Ok(NetworkModel::new(g, vec![0.0, 2.0], vec![PI / 2.0, PI / 2.0], vec![f1, f2])?)
}

/// Directed three-ring with couplings fitted to two rotating patterns:
/// `ω̄ = −1` with offsets `(0, 2π/3, 4π/3)` and `ω̄ = 1` with
/// `(0, 4π/3, 2π/3)`.
pub fn three_ring() -> Result<NetworkModel, DesignError> {
    let g = Digraph::unweighted(3, [(2, 1), (3, 2), (1, 3)])?;
    let t24 = (PI / 24.0).tan();
    let t12 = (PI / 12.0).tan();
    let d12 = (7.0 * PI / 24.0).tan() + t24;
    let f1 = BarrierFunction::shifted_scaled_tan_half(2.0, t24, d12, 1.0)?;
    let f2 = BarrierFunction::shifted_scaled_tan_half(2.0, t24, d12, -1.0)?;
    let f3 = BarrierFunction::shifted_scaled_tan_half(2.0, t12, (5.0 * PI / 12.0).tan() - t12, -1.0)?;
    Ok(NetworkModel::new(
        g,
        vec![-2.0, 0.0, 2.0],
        vec![-3.0 * PI / 4.0, -3.0 * PI / 4.0, PI / 2.0],
        vec![f1, f2, f3],
    )?)
}

pub fn three_ring_patterns() -> [TargetPattern; 2] {
    [
        TargetPattern::new(-1.0, vec![0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]),
        TargetPattern::new(1.0, vec![0.0, 4.0 * PI / 3.0, 2.0 * PI / 3.0]),
    ]
}

/// Hub 1 broadcasting to agents `2..=n`, with agent 2 feeding back to the hub.
pub fn star_graph(n: usize) -> Result<Digraph, DesignError> {
    let edges = (2..=n).map(|i| (1, i)).chain([(2, 1)]);
    Ok(Digraph::unweighted(n, edges)?)
}

/// Synchronized (`ω̄ = 1`, all offsets 0) and balanced (`ω̄ = 0`, offsets
/// `2(i−1)π/n`) patterns of the star.
pub fn star_patterns(n: usize) -> [TargetPattern; 2] {
    let balanced = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    [TargetPattern::new(1.0, vec![0.0; n]), TargetPattern::new(0.0, balanced)]
}

/// Star network whose couplings realize both [`star_patterns`].
pub fn star(n: usize) -> Result<NetworkModel, DesignError> {
    let g = star_graph(n)?;
    let lean = (n as f64 - 1.0) * PI / n as f64;
    let phi: Vec<f64> = (1..=n)
        .map(|i| if i == 1 || 2 * (i - 1) > n { lean } else { 0.0 })
        .collect();
    let omega = vec![0.0; n];
    let coupling = construct_multi_pattern_couplings(&g, &phi, &omega, &star_patterns(n))?;
    Ok(NetworkModel::new(g, omega, phi, coupling)?)
}

/// Initial states of the two star runs: agents spread evenly (agent 2 at 0),
/// and all agents at 0 except agent 2 at `2π/n`.
pub fn star_initial_states(n: usize) -> [Vec<f64>; 2] {
    let mut spread: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    spread[1] = 0.0;
    let mut nudged = vec![0.0; n];
    nudged[1] = 2.0 * PI / n as f64;
    [spread, nudged]
}

/// Nine-node graph with a three-node core {1, 2, 3} and its target offsets,
/// used to exercise candidate-edge designation and subgraph selection.
pub fn subgraph_example() -> (Digraph, TargetPattern) {
    let g = Digraph::unweighted(
        9,
        [
            (1, 2),
            (2, 1),
            (2, 3),
            (3, 1),
            (2, 5),
            (3, 5),
            (5, 4),
            (6, 4),
            (2, 6),
            (1, 6),
            (6, 7),
            (8, 7),
            (7, 8),
            (8, 9),
            (9, 8),
        ],
    )
    .expect("static graph is valid");
    let target = TargetPattern::new(
        1.0,
        vec![
            0.0,
            -1.0 / 50.0,
            PI / 4.0,
            PI / 2.0,
            3.0 * PI / 4.0,
            PI + 1.0 / 100.0,
            5.0 * PI / 4.0 + 1.0 / 100.0,
            3.0 * PI / 2.0,
            7.0 * PI / 4.0,
        ],
    );
    (g, target)
}

/// Spanning tree rooted at node 1 with unit weights and zero biases.
pub fn tree() -> Result<NetworkModel, DesignError> {
    let g = Digraph::unweighted(5, [(1, 2), (1, 3), (3, 4), (3, 5)])?;
    Ok(NetworkModel::uniform(
        g,
        vec![1.0, 1.5, 0.5, 2.0, 1.0],
        vec![0.0; 5],
        BarrierFunction::prototype(),
    )?)
}

/// Directed ring `1 → 2 → … → n → 1` with unit weights and the prototype.
pub fn ring(n: usize, omega: Vec<f64>, phi: Vec<f64>) -> Result<NetworkModel, DesignError> {
    let g = Digraph::unweighted(n, (1..=n).map(|i| (i, i % n + 1)))?;
    Ok(NetworkModel::uniform(g, omega, phi, BarrierFunction::prototype())?)
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 7] =
    ["nine-node", "nine-node-single", "nine-node-saturated", "two-agent", "three-ring", "star9", "tree"];

pub fn by_name(name: &str) -> Option<Result<NetworkModel, DesignError>> {
    Some(match name {
        "nine-node" => nine_node(),
        "nine-node-single" => nine_node_single_pattern(),
        "nine-node-saturated" => nine_node_saturated(),
        "two-agent" => two_agent(TWO_AGENT_EPS),
        "three-ring" => three_ring(),
        "star9" => star(9),
        "tree" => tree(),
        _ => return None,
    })
}
