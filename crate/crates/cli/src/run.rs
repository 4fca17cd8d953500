//! Running scenarios and summarizing the results.

use std::fs;
use std::path::Path;
use std::thread;

use anyhow::Context;
use barrier_cpg::angle::circular_distance;
use barrier_cpg::pattern::{PatternAnalyzer, DEFAULT_BUDGET};
use barrier_cpg::simulation::{
    default_window, detect_pattern, integrate, verify_bounded_input, verify_invariance, BoundedInputReport,
    DetectedPattern, InvarianceReport, KickSchedule,
};
use barrier_cpg::{NetworkModel, PartitionAtlas, SequenceIndex, Trajectory};
use serde::Serialize;

use crate::scenario::{schema_err, RunSpec};
use crate::svg;

/// Frequency tolerance used to declare convergence.
pub const DETECT_TOL: f64 = 1e-6;

/// Enumeration cap, overridable through `BARRIER_CPG_BUDGET`.
pub fn budget() -> anyhow::Result<u64> {
    match std::env::var("BARRIER_CPG_BUDGET") {
        Ok(v) => v.trim().parse().map_err(|_| schema_err(format!("BARRIER_CPG_BUDGET must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticMatch {
    pub class_id: SequenceIndex,
    pub omega_bar: f64,
    pub delta: Vec<f64>,
    pub omega_error: f64,
    /// Largest circular distance between detected and analytic offsets.
    pub delta_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub theta0: Vec<f64>,
    pub t_end: f64,
    pub tol: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "is_no_kicks")]
    pub kicks: KickSchedule,
    /// Class of the initial state.
    pub initial_class: Option<SequenceIndex>,
    pub detected: DetectedPattern,
    /// Class of the final state.
    pub final_class: Option<SequenceIndex>,
    /// Analytic pattern of the final class, when it has one.
    pub analytic: Option<AnalyticMatch>,
    pub invariance: Option<InvarianceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance_error: Option<String>,
    pub bounded_input: BoundedInputReport,
}

fn is_no_kicks(k: &KickSchedule) -> bool {
    *k == KickSchedule::default()
}

/// Model together with its pattern atlas.
pub struct Prepared<'a> {
    pub model: &'a NetworkModel,
    pub analyzer: PatternAnalyzer<'a>,
    pub atlas: PartitionAtlas,
}

impl<'a> Prepared<'a> {
    pub fn new(model: &'a NetworkModel) -> anyhow::Result<Self> {
        let analyzer = PatternAnalyzer::new(model)?;
        let atlas = analyzer.enumerate_classes(budget()?)?;
        Ok(Self { model, analyzer, atlas })
    }

    /// Id of the class containing cell `n`.
    pub fn class_of(&self, n: &SequenceIndex) -> Option<SequenceIndex> {
        self.atlas
            .classes
            .iter()
            .find(|c| c.members.iter().any(|s| s == n || self.analyzer.equivalent(s, n)))
            .map(|c| c.id.clone())
    }

    pub fn classify(&self, theta: &[f64]) -> Option<SequenceIndex> {
        self.analyzer.classify_state(theta).ok().and_then(|n| self.class_of(&n))
    }
}

pub struct RunSettings {
    pub t_end: f64,
    pub tol: f64,
    pub window: Option<f64>,
}

pub fn run_one(p: &Prepared<'_>, spec: &RunSpec, s: &RunSettings) -> anyhow::Result<(RunSummary, Trajectory)> {
    let tr = integrate(p.model, &spec.theta0, s.t_end, &spec.kicks, s.tol)
        .with_context(|| format!("run {:?}", spec.label))?;
    let window = s.window.unwrap_or_else(|| default_window(&tr));
    let detected = detect_pattern(&tr, p.model, window, DETECT_TOL);
    let final_class = detected.class.as_ref().and_then(|n| p.class_of(n));
    let analytic = final_class.as_ref().and_then(|id| {
        let class = p.atlas.classes.iter().find(|c| &c.id == id)?;
        let pat = class.pattern.as_ref()?;
        Some(AnalyticMatch {
            class_id: id.clone(),
            omega_bar: pat.omega_bar,
            delta: pat.delta.clone(),
            omega_error: (pat.omega_bar - detected.omega_bar_est).abs(),
            delta_error: pat
                .delta
                .iter()
                .zip(&detected.delta_est)
                .map(|(a, b)| circular_distance(*a, *b))
                .fold(0.0, f64::max),
        })
    });
    let (invariance, invariance_error) = match verify_invariance(&tr, p.model) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = RunSummary {
        label: spec.label.clone(),
        theta0: spec.theta0.clone(),
        t_end: s.t_end,
        tol: s.tol,
        samples: tr.len(),
        kicks: spec.kicks.clone(),
        initial_class: p.classify(&spec.theta0),
        detected,
        final_class,
        analytic,
        invariance,
        invariance_error,
        bounded_input: verify_bounded_input(&tr),
    };
    Ok((summary, tr))
}

/// Runs every spec on its own thread; results keep the input order.
pub fn run_all(p: &Prepared<'_>, specs: &[RunSpec], s: &RunSettings) -> anyhow::Result<Vec<(RunSummary, Trajectory)>> {
    thread::scope(|scope| {
        let handles: Vec<_> = specs.iter().map(|spec| scope.spawn(move || run_one(p, spec, s))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

/// Writes `<label>.csv` and `<label>.svg` for every run.
pub fn write_runs(dir: &Path, title: &str, runs: &[(RunSummary, Trajectory)]) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (summary, tr) in runs {
        let csv = dir.join(format!("{}.csv", summary.label));
        let file = fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
        tr.write_csv(std::io::BufWriter::new(file))?;
        let plot = svg::phase_differences(tr, &format!("{title}: {}", summary.label));
        fs::write(dir.join(format!("{}.svg", summary.label)), plot)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn print_run(s: &RunSummary) {
    let class = s.final_class.as_ref().map_or("-".to_string(), |c| c.to_string());
    let errs = s
        .analytic
        .as_ref()
        .map_or(String::new(), |a| format!("  |Δω̄| = {:.1e}  |ΔΔ| = {:.1e}", a.omega_error, a.delta_error));
    println!(
        "{:<20} converged = {:<5}  ω̄ ≈ {:>12.8}  class {}{}",
        s.label, s.detected.converged, s.detected.omega_bar_est, class, errs
    );
}
