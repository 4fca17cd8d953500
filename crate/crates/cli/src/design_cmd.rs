//! `design` requests.

use std::fs;
use std::path::Path;

use barrier_cpg::design::{
    assign_by_gains, assign_by_phase_bias, assign_by_weights_and_gains, construct_multi_pattern_couplings,
    designate_candidate_edges, minimal_edge_subgraph, multi_pattern_feasible, saturate_for_uniqueness,
    DesignSolution, MultiPatternReport, TargetPattern, DEFAULT_MAX_ALPHA,
};
use barrier_cpg::{BarrierFunction, Digraph, NetworkModel, SequenceIndex};
use serde::{Deserialize, Serialize};

use crate::run::write_json;
use crate::scenario::{check_version, schema_err};

fn prototype() -> BarrierFunction {
    BarrierFunction::prototype()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignRequest {
    PhaseBias {
        graph: Digraph,
        omega: Vec<f64>,
        coupling: Vec<BarrierFunction>,
        target: TargetPattern,
    },
    Gains {
        graph: Digraph,
        omega: Vec<f64>,
        phi: Vec<f64>,
        #[serde(default = "prototype")]
        prototype: BarrierFunction,
        target: TargetPattern,
    },
    Weights {
        graph: Digraph,
        omega: Vec<f64>,
        phi: Vec<f64>,
        #[serde(default = "prototype")]
        prototype: BarrierFunction,
        target: TargetPattern,
        #[serde(default)]
        max_alpha: Option<u32>,
    },
    MultiPattern {
        graph: Digraph,
        omega: Vec<f64>,
        phi: Vec<f64>,
        patterns: Vec<TargetPattern>,
    },
    Saturate {
        model: NetworkModel,
        keep: TargetPattern,
        margin: f64,
    },
    Subgraph {
        graph: Digraph,
        #[serde(default)]
        target: Option<TargetPattern>,
        #[serde(default)]
        required: Option<Vec<(usize, usize)>>,
    },
}

#[derive(Debug, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum DesignReport {
    PhaseBias { solution: DesignSolution },
    Gains { solution: DesignSolution },
    Weights { solution: DesignSolution },
    MultiPattern { ordering: MultiPatternReport, residuals: Vec<Vec<f64>> },
    Saturate { kept: SequenceIndex, excluded: Vec<SequenceIndex>, retained: Vec<SequenceIndex> },
    Subgraph { required: Vec<(usize, usize)>, edges: Vec<(usize, usize)> },
}

pub fn parse(text: &str) -> anyhow::Result<DesignRequest> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| schema_err(e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| schema_err("design request must be a JSON object"))?;
    let version = obj
        .remove("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| schema_err("missing integer schema_version"))?;
    check_version(u32::try_from(version).unwrap_or(u32::MAX))?;
    serde_json::from_value(value).map_err(|e| schema_err(e.to_string()))
}

fn report_solution(out: &Path, s: &DesignSolution) -> anyhow::Result<()> {
    write_json(&out.join("model.json"), &s.model)?;
    println!("max certificate residual: {:.3e}", s.max_residual());
    Ok(())
}

/// Executes a request file and writes `model.json` (or `subgraph.json`)
/// and `design_report.json` into `out`.
pub fn run(request: &Path, out: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(request).map_err(|e| schema_err(format!("cannot read {}: {e}", request.display())))?;
    let report = match parse(&text)? {
        DesignRequest::PhaseBias { graph, omega, coupling, target } => {
            let solution = assign_by_phase_bias(&graph, &omega, &coupling, &target)?;
            report_solution(out, &solution)?;
            DesignReport::PhaseBias { solution }
        }
        DesignRequest::Gains { graph, omega, phi, prototype, target } => {
            let solution = assign_by_gains(&graph, &omega, &phi, &prototype, &target)?;
            report_solution(out, &solution)?;
            DesignReport::Gains { solution }
        }
        DesignRequest::Weights { graph, omega, phi, prototype, target, max_alpha } => {
            let solution = assign_by_weights_and_gains(
                &graph,
                &omega,
                &phi,
                &prototype,
                &target,
                max_alpha.unwrap_or(DEFAULT_MAX_ALPHA),
            )?;
            report_solution(out, &solution)?;
            DesignReport::Weights { solution }
        }
        DesignRequest::MultiPattern { graph, omega, phi, patterns } => {
            let ordering = multi_pattern_feasible(&graph, &phi, &patterns)?;
            let coupling = construct_multi_pattern_couplings(&graph, &phi, &omega, &patterns)?;
            let model = NetworkModel::new(graph, omega, phi, coupling)?;
            let residuals = patterns
                .iter()
                .map(|p| {
                    (1..=model.node_count())
                        .map(|i| {
                            let arg = p.coupling_arg(model.graph(), i, model.phi()[i - 1]);
                            Ok((p.omega_bar - model.omega()[i - 1] - model.coupling()[i - 1].eval(arg)?).abs())
                        })
                        .collect::<anyhow::Result<Vec<f64>>>()
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            write_json(&out.join("model.json"), &model)?;
            println!("fitted {} couplings through {} patterns", model.node_count(), patterns.len());
            DesignReport::MultiPattern { ordering, residuals }
        }
        DesignRequest::Saturate { model, keep, margin } => {
            let r = saturate_for_uniqueness(&model, &keep, margin)?;
            write_json(&out.join("model.json"), &r.model)?;
            println!("kept class {}, excluded {} class(es), retained {}", r.kept, r.excluded.len(), r.retained.len());
            DesignReport::Saturate { kept: r.kept, excluded: r.excluded, retained: r.retained }
        }
        DesignRequest::Subgraph { graph, target, required } => {
            let required = match (required, target) {
                (Some(r), _) => r,
                (None, Some(t)) => designate_candidate_edges(&graph, &t),
                (None, None) => Vec::new(),
            };
            let sub = minimal_edge_subgraph(&graph, &required)?;
            write_json(&out.join("subgraph.json"), &sub)?;
            let edges: Vec<(usize, usize)> = sub.edges().iter().map(|e| (e.src, e.dst)).collect();
            println!(
                "subgraph edges: {}",
                edges.iter().map(|(a, b)| format!("{a}→{b}")).collect::<Vec<_>>().join(" ")
            );
            DesignReport::Subgraph { required, edges }
        }
    };
    write_json(&out.join("design_report.json"), &report)
}
