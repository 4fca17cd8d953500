//! Randomized self-check of the pattern solver.

use barrier_cpg::pattern::{PatternAnalyzer, SequenceIndex};
use barrier_cpg::{BarrierFunction, Digraph, NetworkModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::run::budget;

/// Random connected model with up to `max_nodes` agents and weighted
/// in-degrees of at most 3.
pub fn random_model(rng: &mut ChaCha8Rng, max_nodes: usize) -> NetworkModel {
    use std::f64::consts::PI;
    let n = rng.random_range(2..=max_nodes);
    let mut edges: Vec<(usize, usize, u32)> = Vec::new();
    let mut degree = vec![0u32; n + 1];
    // random spanning tree rooted at node 1 keeps the graph connected
    for v in 2..=n {
        let parent = rng.random_range(1..v);
        edges.push((parent, v, 1));
        degree[v] += 1;
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let (s, d) = (rng.random_range(1..=n), rng.random_range(1..=n));
        let w = rng.random_range(1..=2);
        if s == d || degree[d] + w > 3 || edges.iter().any(|e| e.0 == s && e.1 == d) {
            continue;
        }
        degree[d] += w;
        edges.push((s, d, w));
    }
    let g = Digraph::new(n, edges).expect("generated graph is valid");
    let omega = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let phi = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
    let coupling = (0..n)
        .map(|_| BarrierFunction::tan_half(rng.random_range(0.3..2.0), rng.random_range(-0.5..0.5)).expect("valid gain"))
        .collect();
    NetworkModel::new(g, omega, phi, coupling).expect("generated model is valid")
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub cases: usize,
    pub patterns: usize,
    pub max_residual: f64,
    pub equivalence_mismatches: usize,
}

pub fn run(seed: u64, cases: usize) -> anyhow::Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport { seed, cases, patterns: 0, max_residual: 0.0, equivalence_mismatches: 0 };
    for _ in 0..cases {
        let m = random_model(&mut rng, 5);
        let a = PatternAnalyzer::new(&m)?;
        let atlas = a.enumerate_classes(budget()?)?;
        let cells: Vec<&SequenceIndex> = atlas.admissible.iter().collect();
        let pats = cells.iter().map(|n| a.solve_pattern(n)).collect::<Result<Vec<_>, _>>()?;
        for p in &pats {
            report.patterns += 1;
            report.max_residual = report.max_residual.max(m.locking_residual(p.omega_bar, &p.delta)?);
        }
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                if a.equivalent(cells[i], cells[j]) != pats[i].matches(&pats[j], 1e-9, 1e-8) {
                    report.equivalence_mismatches += 1;
                }
            }
        }
    }
    Ok(report)
}
