//! Synthesis of networks that realize prescribed phase-locked patterns.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap;
use crate::coupling::{BarrierFunction, CouplingError};
use crate::graph::{Digraph, GraphError};
use crate::model::{ModelError, NetworkModel};
use crate::pattern::{CentralPattern, PartitionAtlas, PatternAnalyzer, PatternError, SequenceIndex, DEFAULT_BUDGET};

/// Default upper bound for the integer weight search.
pub const DEFAULT_MAX_ALPHA: u32 = 1000;

/// Two frequencies closer than this count as equal.
pub const FREQUENCY_TIE_TOL: f64 = 1e-12;

/// Required agreement of coupling arguments at tied frequencies.
pub const ARGUMENT_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("sign condition fails at nodes {0:?}")]
    SignMismatch(Vec<usize>),
    #[error("no weight in 1..={max_alpha} gives the required sign at node {node} (edge from {neighbor})")]
    BoundExhausted { node: usize, neighbor: usize, max_alpha: u32 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("pattern ordering is not preserved at node {node}")]
    InfeasibleOrdering { node: usize },
    #[error("no margin separates the kept pattern from {0} alternative(s)")]
    CannotSeparate(usize),
    #[error("target has {got} phases, graph has {expected} nodes")]
    Length { got: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// A pattern to be assigned: common frequency and offsets (`Δ_1 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetPattern {
    pub omega_bar: f64,
    pub delta: Vec<f64>,
}

impl TargetPattern {
    pub fn new(omega_bar: f64, delta: Vec<f64>) -> Self {
        TargetPattern { omega_bar, delta }
    }

    /// Difference `Δ_src − Δ_dst` reduced to `[-π, π)`.
    pub fn edge_difference(&self, src: usize, dst: usize) -> f64 {
        wrap(self.delta[src - 1] - self.delta[dst - 1])
    }

    /// `Σ_j α_ij Δ_ij + φ_i` for node `i` (1-based).
    pub fn coupling_arg(&self, g: &Digraph, node: usize, phi: f64) -> f64 {
        g.in_neighbors(node)
            .map(|(j, w)| f64::from(w) * self.edge_difference(j, node))
            .sum::<f64>()
            + phi
    }

    fn check(&self, g: &Digraph) -> Result<(), DesignError> {
        if self.delta.len() != g.node_count() {
            return Err(DesignError::Length { got: self.delta.len(), expected: g.node_count() });
        }
        Ok(())
    }
}

impl From<&CentralPattern> for TargetPattern {
    fn from(p: &CentralPattern) -> Self {
        TargetPattern { omega_bar: p.omega_bar, delta: p.delta.clone() }
    }
}

/// What a design procedure chose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum DesignChoice {
    PhaseBiases(Vec<f64>),
    Gains(Vec<f64>),
    Weights(Vec<(usize, usize, u32)>),
    Couplings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub chosen: DesignChoice,
    pub model: NetworkModel,
    /// Per-node `|ω̄ − ω_i − f_i(Σ_j α_ij Δ_ij + φ_i)|` at the target.
    pub certificate: Vec<f64>,
}

impl DesignSolution {
    pub fn max_residual(&self) -> f64 {
        self.certificate.iter().copied().fold(0.0, f64::max)
    }
}

fn certificate(m: &NetworkModel, target: &TargetPattern) -> Result<Vec<f64>, DesignError> {
    let g = m.graph();
    (1..=g.node_count())
        .map(|i| {
            let arg = target.coupling_arg(g, i, m.phi()[i - 1]);
            let f = m.coupling()[i - 1].eval(arg)?;
            Ok((target.omega_bar - m.omega()[i - 1] - f).abs())
        })
        .collect()
}

/// Chooses phase biases so that `target` is a phase-locked solution.
pub fn assign_by_phase_bias(
    g: &Digraph,
    omega: &[f64],
    coupling: &[BarrierFunction],
    target: &TargetPattern,
) -> Result<DesignSolution, DesignError> {
    target.check(g)?;
    let mut phi = Vec::with_capacity(g.node_count());
    for i in 1..=g.node_count() {
        let s = coupling[i - 1].inverse(target.omega_bar - omega[i - 1])?;
        phi.push(wrap(s - target.coupling_arg(g, i, 0.0)));
    }
    let model = NetworkModel::new(g.clone(), omega.to_vec(), phi.clone(), coupling.to_vec())?;
    let certificate = certificate(&model, target)?;
    Ok(DesignSolution { chosen: DesignChoice::PhaseBiases(phi), model, certificate })
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Nodes where `sgn f̄(Σ α_ij Δ_ij + φ_i) ≠ sgn(ω̄ − ω_i)`.
pub fn sign_violations(
    g: &Digraph,
    omega: &[f64],
    phi: &[f64],
    prototype: &BarrierFunction,
    target: &TargetPattern,
) -> Result<Vec<usize>, DesignError> {
    target.check(g)?;
    let mut bad = Vec::new();
    for i in 1..=g.node_count() {
        let value = prototype.eval(target.coupling_arg(g, i, phi[i - 1]))?;
        if sign(value) != sign(target.omega_bar - omega[i - 1]) {
            bad.push(i);
        }
    }
    Ok(bad)
}

/// Chooses positive gains `g_i` with `f_i = g_i·f̄`.
pub fn assign_by_gains(
    g: &Digraph,
    omega: &[f64],
    phi: &[f64],
    prototype: &BarrierFunction,
    target: &TargetPattern,
) -> Result<DesignSolution, DesignError> {
    let bad = sign_violations(g, omega, phi, prototype, target)?;
    if !bad.is_empty() {
        return Err(DesignError::SignMismatch(bad));
    }
    let mut gains = Vec::with_capacity(g.node_count());
    for i in 1..=g.node_count() {
        let value = prototype.eval(target.coupling_arg(g, i, phi[i - 1]))?;
        let need = target.omega_bar - omega[i - 1];
        gains.push(if value == 0.0 { 1.0 } else { need / value });
    }
    let coupling = gains
        .iter()
        .map(|&k| BarrierFunction::scaled(k, prototype.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let model = NetworkModel::new(g.clone(), omega.to_vec(), phi.to_vec(), coupling)?;
    let certificate = certificate(&model, target)?;
    Ok(DesignSolution { chosen: DesignChoice::Gains(gains), model, certificate })
}

/// Smallest `α ∈ 1..=max_alpha` with `sgn f̄(α·Δ_ij + bias) = target_sign`.
///
/// `bias` is `φ_i` plus the contribution of any other in-edges of node `i`.
/// `node` and `neighbor` only label the error.
#[allow(clippy::too_many_arguments)]
pub fn search_weights_for_sign(
    node: usize,
    neighbor: usize,
    delta_ij: f64,
    bias: f64,
    prototype: &BarrierFunction,
    target_sign: i8,
    max_alpha: u32,
) -> Result<u32, DesignError> {
    if target_sign == 0 {
        return Err(DesignError::Infeasible(format!(
            "node {node}: exact zero coupling cannot be targeted through weights alone"
        )));
    }
    for alpha in 1..=max_alpha {
        let arg = f64::from(alpha) * delta_ij + bias;
        if let Ok(v) = prototype.eval(arg) {
            if sign(v) == target_sign.signum() {
                return Ok(alpha);
            }
        }
    }
    Err(DesignError::BoundExhausted { node, neighbor, max_alpha })
}

/// Whether `x` is within `1e-9` of a fraction with denominator at most 64.
fn looks_rational(x: f64) -> bool {
    (1..=64).any(|q| {
        let p = (x * f64::from(q)).round();
        (x - p / f64::from(q)).abs() <= 1e-9
    })
}

/// Edges whose phase difference over `2π` does not look rational.
pub fn irrational_edges(g: &Digraph, target: &TargetPattern) -> Vec<(usize, usize)> {
    g.edges()
        .iter()
        .filter(|e| !looks_rational(target.edge_difference(e.src, e.dst) / (2.0 * PI)))
        .map(|e| (e.src, e.dst))
        .collect()
}

/// One irrational in-edge per node (the one with the smallest source).
pub fn designate_candidate_edges(g: &Digraph, target: &TargetPattern) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (src, dst) in irrational_edges(g, target) {
        match out.iter_mut().find(|e| e.1 == dst) {
            Some(e) if src < e.0 => e.0 = src,
            Some(_) => {}
            None => out.push((src, dst)),
        }
    }
    out.sort_by_key(|&(s, d)| (d, s));
    out
}

/// Adjusts integer weights so the sign condition for gain assignment holds.
///
/// For every node whose current coupling has the wrong sign, the weight of
/// its designated candidate in-edge is searched with the others fixed.
pub fn design_weights(
    g: &Digraph,
    omega: &[f64],
    phi: &[f64],
    prototype: &BarrierFunction,
    target: &TargetPattern,
    candidates: &[(usize, usize)],
    max_alpha: u32,
) -> Result<Digraph, DesignError> {
    target.check(g)?;
    let mut updates = Vec::new();
    for i in sign_violations(g, omega, phi, prototype, target)? {
        let want = sign(target.omega_bar - omega[i - 1]);
        let Some(&(j, _)) = candidates.iter().find(|e| e.1 == i) else {
            return Err(DesignError::Infeasible(format!("node {i} has no candidate in-edge")));
        };
        let others: f64 = g
            .in_neighbors(i)
            .filter(|&(k, _)| k != j)
            .map(|(k, w)| f64::from(w) * target.edge_difference(k, i))
            .sum();
        let alpha = search_weights_for_sign(
            i,
            j,
            target.edge_difference(j, i),
            phi[i - 1] + others,
            prototype,
            want,
            max_alpha,
        )?;
        updates.push((j, i, alpha));
    }
    Ok(g.with_weights(&updates)?)
}

/// Weight search followed by gain assignment.
pub fn assign_by_weights_and_gains(
    g: &Digraph,
    omega: &[f64],
    phi: &[f64],
    prototype: &BarrierFunction,
    target: &TargetPattern,
    max_alpha: u32,
) -> Result<DesignSolution, DesignError> {
    let candidates = designate_candidate_edges(g, target);
    let weighted = design_weights(g, omega, phi, prototype, target, &candidates, max_alpha)?;
    assign_by_gains(&weighted, omega, phi, prototype, target)
}

/// Grows `(V, required)` into a connected spanning subgraph of `g`.
///
/// Stage one connects the edges inside the graph's independent strongly
/// connected component `S`; stage two connects everything else, rooted at
/// the component containing `S`. Each stage repeatedly adds the smallest
/// edge of `g` from the reached set into an unreached independent
/// component of the current subgraph. When no such edge exists the
/// shortest path of `g` edges to one is added instead.
pub fn minimal_edge_subgraph(g: &Digraph, required: &[(usize, usize)]) -> Result<Digraph, DesignError> {
    let isccs = g.independent_sccs();
    if isccs.len() != 1 {
        return Err(GraphError::NotConnected(isccs.len()).into());
    }
    let s_nodes: BTreeSet<usize> = isccs[0].iter().copied().collect();
    let mut chosen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(src, dst) in required {
        if g.weight(src, dst).is_none() {
            return Err(DesignError::Infeasible(format!("required edge ({src}, {dst}) is not in the graph")));
        }
        chosen.insert((src, dst));
    }
    let all: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.src, e.dst)).collect();

    // stage one: inside S
    let inner_all: Vec<(usize, usize)> =
        all.iter().copied().filter(|(a, b)| s_nodes.contains(a) && s_nodes.contains(b)).collect();
    let inner_chosen: BTreeSet<(usize, usize)> =
        chosen.iter().copied().filter(|(a, b)| s_nodes.contains(a) && s_nodes.contains(b)).collect();
    let nodes: Vec<usize> = s_nodes.iter().copied().collect();
    let added = connect(&nodes, &inner_chosen, &inner_all, None);
    chosen.extend(added);

    // stage two: everything, rooted at the component holding S
    let nodes: Vec<usize> = (1..=g.node_count()).collect();
    let added = connect(&nodes, &chosen, &all, Some(&s_nodes));
    chosen.extend(added);

    let edges = chosen.iter().map(|&(s, d)| (s, d, g.weight(s, d).unwrap_or(1)));
    Ok(Digraph::new(g.node_count(), edges)?)
}

/// Edges to add so that `(nodes, current)` has one independent component.
fn connect(
    nodes: &[usize],
    current: &BTreeSet<(usize, usize)>,
    available: &[(usize, usize)],
    forced_root: Option<&BTreeSet<usize>>,
) -> Vec<(usize, usize)> {
    let index = |v: usize| nodes.iter().position(|&x| x == v);
    let local = |edges: &BTreeSet<(usize, usize)>| {
        Digraph::unweighted(
            nodes.len(),
            edges.iter().filter_map(|&(s, d)| Some((index(s)? + 1, index(d)? + 1))),
        )
        .ok()
    };
    let Some(h) = local(current) else { return Vec::new() };
    let comps: Vec<Vec<usize>> = h
        .independent_sccs()
        .into_iter()
        .map(|c| c.into_iter().map(|v| nodes[v - 1]).collect())
        .collect();
    let roots: Vec<usize> = match forced_root {
        // after stage one S lies inside exactly one independent component
        Some(r) => comps.iter().position(|c| c.iter().any(|v| r.contains(v))).into_iter().collect(),
        None => (0..comps.len()).collect(),
    };
    let mut best: Option<(bool, Vec<(usize, usize)>)> = None;
    for root in roots {
        let (clean, added) = grow_from(nodes, current, available, &comps, root);
        if clean {
            return added;
        }
        if best.is_none() {
            best = Some((clean, added));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

fn reach(from: &BTreeSet<usize>, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<usize> {
    let mut seen = from.clone();
    let mut queue: VecDeque<usize> = from.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &(s, d) in edges.range((v, 0)..(v + 1, 0)) {
            debug_assert_eq!(s, v);
            if seen.insert(d) {
                queue.push_back(d);
            }
        }
    }
    seen
}

/// Returns whether only direct edges were needed, and the added edges.
fn grow_from(
    nodes: &[usize],
    current: &BTreeSet<(usize, usize)>,
    available: &[(usize, usize)],
    comps: &[Vec<usize>],
    root: usize,
) -> (bool, Vec<(usize, usize)>) {
    let node_set: BTreeSet<usize> = nodes.iter().copied().collect();
    let mut edges = current.clone();
    let mut added = Vec::new();
    let mut clean = true;
    let mut reached = reach(&comps[root].iter().copied().collect(), &edges);
    loop {
        let pending: Vec<&Vec<usize>> =
            comps.iter().filter(|c| !c.iter().any(|v| reached.contains(v))).collect();
        if pending.is_empty() {
            break;
        }
        let targets: BTreeSet<usize> = pending.iter().flat_map(|c| c.iter().copied()).collect();
        let direct = available
            .iter()
            .filter(|(s, d)| reached.contains(s) && targets.contains(d))
            .min()
            .copied();
        let path = match direct {
            Some(e) => vec![e],
            None => {
                clean = false;
                match shortest_path(&reached, &targets, available, &node_set) {
                    Some(p) => p,
                    None => break,
                }
            }
        };
        for e in path {
            edges.insert(e);
            added.push(e);
        }
        reached = reach(&reached, &edges);
    }
    (clean, added)
}

fn shortest_path(
    from: &BTreeSet<usize>,
    to: &BTreeSet<usize>,
    available: &[(usize, usize)],
    nodes: &BTreeSet<usize>,
) -> Option<Vec<(usize, usize)>> {
    let mut parent: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    let mut seen = from.clone();
    let mut queue: VecDeque<usize> = from.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &(s, d) in available.iter().filter(|e| e.0 == v) {
            if !nodes.contains(&d) || !seen.insert(d) {
                continue;
            }
            parent.insert(d, (s, d));
            if to.contains(&d) {
                let mut path = vec![(s, d)];
                let mut cur = s;
                while let Some(&e) = parent.get(&cur) {
                    path.push(e);
                    cur = e.0;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(d);
        }
    }
    None
}

/// Outcome of the ordering test for assigning several patterns at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPatternReport {
    pub feasible: bool,
    /// Pattern indices sorted by frequency.
    pub order: Vec<usize>,
    /// `arguments[i][k]`: reduced coupling argument of node `i+1` in pattern `k`.
    pub arguments: Vec<Vec<f64>>,
    /// Nodes where the ordering fails.
    pub violations: Vec<usize>,
}

/// Checks that at every node the reduced coupling arguments of the patterns
/// are ordered like their frequencies, with ties preserved.
pub fn multi_pattern_feasible(
    g: &Digraph,
    phi: &[f64],
    patterns: &[TargetPattern],
) -> Result<MultiPatternReport, DesignError> {
    for p in patterns {
        p.check(g)?;
    }
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.sort_by(|&a, &b| patterns[a].omega_bar.total_cmp(&patterns[b].omega_bar));
    let arguments: Vec<Vec<f64>> = (1..=g.node_count())
        .map(|i| patterns.iter().map(|p| wrap(p.coupling_arg(g, i, phi[i - 1]))).collect())
        .collect();
    let mut violations = Vec::new();
    for (i, args) in arguments.iter().enumerate() {
        let ok = order.iter().enumerate().all(|(a, &k)| {
            order[a + 1..].iter().all(|&l| {
                let (wk, wl) = (patterns[k].omega_bar, patterns[l].omega_bar);
                if (wl - wk).abs() <= FREQUENCY_TIE_TOL {
                    (args[l] - args[k]).abs() <= ARGUMENT_TIE_TOL
                } else {
                    args[k] < args[l]
                }
            })
        });
        if !ok {
            violations.push(i + 1);
        }
    }
    Ok(MultiPatternReport { feasible: violations.is_empty(), order, arguments, violations })
}

/// Per-node couplings passing through `(argument, ω̄^k − ω_i)` for every
/// pattern: a gain for one point, a fitted `a·tan(s/2) + b` for two, and a
/// monotone piecewise cubic for more.
pub fn construct_multi_pattern_couplings(
    g: &Digraph,
    phi: &[f64],
    omega: &[f64],
    patterns: &[TargetPattern],
) -> Result<Vec<BarrierFunction>, DesignError> {
    let report = multi_pattern_feasible(g, phi, patterns)?;
    if let Some(&node) = report.violations.first() {
        return Err(DesignError::InfeasibleOrdering { node });
    }
    let mut out = Vec::with_capacity(g.node_count());
    for (i, args) in report.arguments.iter().enumerate() {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for &k in &report.order {
            let point = (args[k], patterns[k].omega_bar - omega[i]);
            match points.last() {
                Some(last) if (point.1 - last.1).abs() <= FREQUENCY_TIE_TOL => {}
                _ => points.push(point),
            }
        }
        let f = match points.as_slice() {
            [] => BarrierFunction::prototype(),
            [(s, y)] => {
                let t = (s / 2.0).tan();
                if sign(t) == sign(*y) && t != 0.0 {
                    BarrierFunction::tan_half(y / t, 0.0)?
                } else {
                    BarrierFunction::tan_half(1.0, y - t)?
                }
            }
            [(s1, y1), (s2, y2)] => {
                let (t1, t2) = ((s1 / 2.0).tan(), (s2 / 2.0).tan());
                let a = (y2 - y1) / (t2 - t1);
                BarrierFunction::tan_half(a, y1 - a * t1)?
            }
            _ => BarrierFunction::monotone_piecewise(points)?,
        };
        out.push(f);
    }
    Ok(out)
}

/// Result of cutting the couplings to isolate one pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub model: NetworkModel,
    pub kept: SequenceIndex,
    pub excluded: Vec<SequenceIndex>,
    pub retained: Vec<SequenceIndex>,
}

/// Classes of `atlas` whose frequency some node of `m` cannot realize
/// because `ω̄ − ω_i` falls outside the range of `f_i`.
pub fn excluded_classes(m: &NetworkModel, atlas: &PartitionAtlas) -> Vec<SequenceIndex> {
    atlas
        .classes
        .iter()
        .filter(|c| match &c.pattern {
            Some(p) => m.coupling().iter().zip(m.omega()).any(|(f, w)| {
                let (lo, hi) = f.range();
                let y = p.omega_bar - w;
                !(y > lo && y < hi)
            }),
            None => true,
        })
        .map(|c| c.id.clone())
        .collect()
}

/// Saturates every coupling to `(ω̄ − ω_i − margin, ω̄ − ω_i + margin)`
/// around the kept pattern, with tails of height `margin·10⁻³`.
pub fn saturate_for_uniqueness(
    m: &NetworkModel,
    keep: &TargetPattern,
    margin: f64,
) -> Result<SaturationReport, DesignError> {
    if !(margin > 0.0) {
        return Err(DesignError::Infeasible(format!("margin must be positive, got {margin}")));
    }
    let analyzer = PatternAnalyzer::new(m)?;
    let atlas = analyzer.enumerate_classes(DEFAULT_BUDGET)?;
    let probe = CentralPattern {
        omega_bar: keep.omega_bar,
        delta: keep.delta.iter().map(|&d| crate::angle::wrap_positive(d - keep.delta[0])).collect(),
        delta_lifted: keep.delta.clone(),
        delta_edges: Vec::new(),
        sequence: SequenceIndex::zeros(m.node_count()),
        class_id: SequenceIndex::zeros(m.node_count()),
        residual: 0.0,
    };
    let kept = atlas
        .classes
        .iter()
        .find(|c| c.pattern.as_ref().is_some_and(|p| p.matches(&probe, 1e-6, 1e-5)))
        .map(|c| c.id.clone())
        .ok_or_else(|| DesignError::Infeasible("kept pattern is not a central pattern of the model".into()))?;
    let delta = margin * 1e-3;
    let coupling = m
        .coupling()
        .iter()
        .zip(m.omega())
        .map(|(f, w)| {
            let y = keep.omega_bar - w;
            f.saturate(y - margin, y + margin, delta)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let model = m.with_coupling(coupling)?;
    let excluded = excluded_classes(&model, &atlas);
    let retained: Vec<SequenceIndex> = atlas
        .classes
        .iter()
        .map(|c| c.id.clone())
        .filter(|id| !excluded.contains(id) && *id != kept)
        .collect();
    let alternatives = atlas.classes.len() - 1;
    if alternatives > 0 && retained.len() == alternatives {
        return Err(DesignError::CannotSeparate(alternatives));
    }
    Ok(SaturationReport { model, kept, excluded, retained })
}
