//! Built-in reproduction targets.

use std::f64::consts::PI;
use std::path::Path;
use std::thread;

use anyhow::anyhow;
use barrier_cpg::design::{designate_candidate_edges, minimal_edge_subgraph};
use barrier_cpg::presets;
use barrier_cpg::simulation::{KickSchedule, PersistentKick};
use barrier_cpg::NetworkModel;
use serde::Serialize;

use crate::run::{self, Prepared, RunSettings, RunSummary};
use crate::scenario::{RunSpec, Scenario};

pub const TARGETS: [&str; 7] = ["fig1", "fig3", "fig4a", "fig4b", "fig5", "fig6", "fig7"];

/// Kick train applied to agent 2 of the two-agent network.
pub fn two_agent_kicks() -> KickSchedule {
    KickSchedule {
        impulses: Vec::new(),
        persistent: Some(PersistentKick { node: 2, amplitude: 0.3, period: 1.0, start: 1.0, stop: Some(30.0) }),
    }
}

fn run(label: &str, theta0: Vec<f64>) -> RunSpec {
    RunSpec { label: label.to_string(), theta0, kicks: KickSchedule::none() }
}

fn nine_node_runs() -> Vec<RunSpec> {
    ["theta1_pi", "theta1_0", "theta1_minus_half_pi"]
        .iter()
        .zip(presets::NINE_NODE_INITIAL_PHASES)
        .map(|(label, t1)| run(label, presets::nine_node_initial_state(t1)))
        .collect()
}

/// Scenario behind a simulation target, with its default horizon and tolerance.
pub fn scenario(target: &str) -> anyhow::Result<Scenario> {
    let s = match target {
        "fig3" => Scenario::inline("nine-node", presets::nine_node()?, nine_node_runs(), 600.0, 1e-10),
        "fig4a" => Scenario::inline("nine-node-single", presets::nine_node_single_pattern()?, nine_node_runs(), 600.0, 1e-10),
        "fig4b" => Scenario::inline("nine-node-saturated", presets::nine_node_saturated()?, nine_node_runs(), 600.0, 1e-10),
        "fig5" => {
            let m = presets::two_agent(presets::TWO_AGENT_EPS)?;
            let starts = [("origin", vec![0.0, 0.0]), ("theta1_3pi_4", vec![3.0 * PI / 4.0, 0.0])];
            let mut runs: Vec<RunSpec> = starts.iter().map(|(l, t)| run(l, t.clone())).collect();
            runs.extend(starts.iter().map(|(l, t)| RunSpec {
                label: format!("{l}_kicked"),
                theta0: t.clone(),
                kicks: two_agent_kicks(),
            }));
            Scenario::inline("two-agent", m, runs, 60.0, 1e-10)
        }
        "fig6" => Scenario::inline(
            "three-ring",
            presets::three_ring()?,
            vec![run("zero", vec![0.0; 3]), run("theta3_minus_pi_3", vec![0.0, 0.0, -PI / 3.0])],
            60.0,
            1e-10,
        ),
        "fig7" => {
            let [spread, nudged] = presets::star_initial_states(9);
            Scenario::inline("star9", presets::star(9)?, vec![run("spread", spread), run("nudged", nudged)], 500.0, 1e-10)
        }
        other => return Err(anyhow!("no simulation scenario for target {other:?}")),
    };
    Ok(s)
}

#[derive(Debug, Serialize)]
pub struct FigureReport {
    pub target: String,
    pub model: String,
    pub n_patterns: usize,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Serialize)]
pub struct SubgraphReport {
    pub designated: Vec<(usize, usize)>,
    pub edges: Vec<(usize, usize)>,
}

pub struct Overrides {
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
}

fn simulate(target: &str, out: &Path, o: &Overrides) -> anyhow::Result<FigureReport> {
    let sc = scenario(target)?;
    let model: NetworkModel = match &sc.model {
        crate::scenario::ModelSource::Inline(m) => (**m).clone(),
        crate::scenario::ModelSource::File { .. } => unreachable!("built-in scenarios are inline"),
    };
    let prepared = Prepared::new(&model)?;
    let settings = RunSettings {
        t_end: o.t_end.or(sc.t_end).unwrap_or(100.0),
        tol: o.tol.or(sc.tol).unwrap_or(1e-9),
        window: sc.window,
    };
    let results = run::run_all(&prepared, &sc.runs, &settings)?;
    let dir = out.join(target);
    run::write_runs(&dir, target, &results)?;
    let report = FigureReport {
        target: target.to_string(),
        model: sc.name.clone().unwrap_or_default(),
        n_patterns: prepared.atlas.n_patterns,
        runs: results.into_iter().map(|(s, _)| s).collect(),
    };
    run::write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}

fn subgraph(out: &Path) -> anyhow::Result<SubgraphReport> {
    let (g, target) = presets::subgraph_example();
    let designated = designate_candidate_edges(&g, &target);
    let sub = minimal_edge_subgraph(&g, &designated)?;
    let report = SubgraphReport { designated, edges: sub.edges().iter().map(|e| (e.src, e.dst)).collect() };
    let dir = out.join("fig1");
    run::write_json(&dir.join("subgraph.json"), &sub)?;
    run::write_json(&dir.join("summary.json"), &report)?;
    Ok(report)
}

fn print_report(r: &FigureReport) {
    println!("[{}] {} (N^P = {})", r.target, r.model, r.n_patterns);
    for s in &r.runs {
        run::print_run(s);
    }
}

pub fn reproduce(target: &str, out: &Path, o: &Overrides) -> anyhow::Result<()> {
    match target {
        "fig1" => {
            let r = subgraph(out)?;
            let fmt = |e: &[(usize, usize)]| e.iter().map(|(a, b)| format!("{a}→{b}")).collect::<Vec<_>>().join(" ");
            println!("[fig1] designated edges: {}", fmt(&r.designated));
            println!("[fig1] subgraph edges:   {}", fmt(&r.edges));
            Ok(())
        }
        "all" => {
            let results: Vec<anyhow::Result<()>> = thread::scope(|scope| {
                let handles: Vec<_> = TARGETS
                    .iter()
                    .map(|t| {
                        scope.spawn(move || -> anyhow::Result<Option<FigureReport>> {
                            if *t == "fig1" {
                                subgraph(out)?;
                                Ok(None)
                            } else {
                                simulate(t, out, o).map(Some)
                            }
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .zip(TARGETS)
                    .map(|(h, t)| {
                        let r = h.join().expect("reproduction thread panicked")?;
                        match r {
                            Some(report) => print_report(&report),
                            None => println!("[{t}] written"),
                        }
                        Ok(())
                    })
                    .collect()
            });
            results.into_iter().collect()
        }
        t if TARGETS.contains(&t) => {
            print_report(&simulate(t, out, o)?);
            Ok(())
        }
        other => Err(crate::scenario::schema_err(format!("unknown target {other:?}"))),
    }
}
