//! Feasibility of a torus cell as a small linear program.

use std::f64::consts::PI;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::model::NetworkModel;
use crate::pattern::SequenceIndex;

/// Finds `θ ∈ [−π+ε, π−ε]^N` with every coupling argument inside the
/// `ε`-shrunk band of cell `n`, or `None` if the box is infeasible.
pub(crate) fn torus_witness(m: &NetworkModel, n: &SequenceIndex, eps: f64) -> Option<Vec<f64>> {
    let count = m.node_count();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..count).map(|_| lp.add_var(0.0, (-PI + eps, PI - eps))).collect();
    let g = m.graph();
    for i in 0..count {
        let incoming = g.in_edges0(i);
        if incoming.is_empty() {
            // ν_i = 0: the band condition is a constant
            let x = m.phi()[i] - 2.0 * PI * n.0[i] as f64;
            if !(x >= -PI + eps && x <= PI - eps) {
                return None;
            }
            continue;
        }
        let degree: f64 = incoming.iter().map(|&(_, w)| f64::from(w)).sum();
        let mut expr: Vec<(minilp::Variable, f64)> =
            incoming.iter().map(|&(j, w)| (vars[j], f64::from(w))).collect();
        expr.push((vars[i], -degree));
        let shift = m.phi()[i] - 2.0 * PI * n.0[i] as f64;
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, PI - eps - shift);
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, -PI + eps - shift);
    }
    let solution = lp.solve().ok()?;
    Some(vars.iter().map(|v| *solution.var_value(*v)).collect())
}
