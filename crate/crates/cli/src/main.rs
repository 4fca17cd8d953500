use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use barrier_cpg::{presets, DesignError, NetworkModel, PatternError, SimulationError};
use clap::{Parser, Subcommand};

mod check;
mod design_cmd;
mod figures;
mod run;
mod scenario;
mod svg;

use run::{Prepared, RunSettings};
use scenario::{schema_err, SchemaError};

#[derive(Parser)]
#[command(name = "barrier-cpg", version, about = "Phase-locked pattern analysis, design and simulation")]
struct Cli {
    /// Integration tolerance (overrides the scenario).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Simulation horizon (overrides the scenario).
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the pattern classes of a model.
    Analyze(Input),
    /// Integrate every run of a scenario.
    Simulate(Input),
    /// Solve a design request.
    Design { request: PathBuf },
    /// Regenerate a built-in figure target, or `all`.
    Reproduce { target: String },
    /// Report the class of an initial state.
    Classify {
        #[command(flatten)]
        input: Input,
        /// Comma-separated phases; defaults to every run's initial state.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// List or export built-in models.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Randomized plug-back and equivalence self-check.
    Check {
        #[arg(long, default_value_t = 50)]
        cases: usize,
    },
}

#[derive(clap::Args)]
struct Input {
    /// Scenario or model JSON file.
    path: Option<PathBuf>,
    /// Built-in model name instead of a file.
    #[arg(long, conflicts_with = "path")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Write a built-in model as a scenario file.
    Export {
        name: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Resolved {
    name: String,
    model: NetworkModel,
    runs: Vec<scenario::RunSpec>,
    t_end: Option<f64>,
    tol: Option<f64>,
    window: Option<f64>,
}

fn preset(name: &str) -> anyhow::Result<NetworkModel> {
    let m = presets::by_name(name).ok_or_else(|| {
        schema_err(format!("unknown preset {name:?}; available: {}", presets::NAMES.join(", ")))
    })??;
    Ok(m)
}

/// Accepts a scenario file, a bare model file or a preset name.
fn resolve(input: &Input) -> anyhow::Result<Resolved> {
    match (&input.path, &input.preset) {
        (_, Some(name)) => Ok(Resolved {
            name: name.clone(),
            model: preset(name)?,
            runs: Vec::new(),
            t_end: None,
            tol: None,
            window: None,
        }),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| schema_err(format!("cannot read {}: {e}", path.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| schema_err(format!("{}: {e}", path.display())))?;
            let stem = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
            if value.get("schema_version").is_some() {
                let l = scenario::load(path)?;
                Ok(Resolved {
                    name: l.scenario.name.clone().unwrap_or(stem),
                    model: l.model,
                    runs: l.scenario.runs,
                    t_end: l.scenario.t_end,
                    tol: l.scenario.tol,
                    window: l.scenario.window,
                })
            } else {
                let model: NetworkModel =
                    serde_json::from_value(value).map_err(|e| schema_err(format!("{}: {e}", path.display())))?;
                Ok(Resolved { name: stem, model, runs: Vec::new(), t_end: None, tol: None, window: None })
            }
        }
        (None, None) => Err(schema_err("give a scenario path or --preset NAME")),
    }
}

fn analyze(cli: &Cli, input: &Input) -> anyhow::Result<()> {
    let r = resolve(input)?;
    let p = Prepared::new(&r.model)?;
    let atlas = &p.atlas;
    println!("{}: N = {}, ζ = {:?}", r.name, r.model.node_count(), atlas.zeta);
    println!("admissible cells: {}, candidates scanned: {}", atlas.admissible.len(), atlas.candidates);
    println!("N^P = {}", atlas.n_patterns);
    println!("{:<24} {:>8} {:>14}  offsets", "class", "members", "ω̄");
    for c in &atlas.classes {
        match &c.pattern {
            Some(pat) => {
                let d: Vec<String> = pat.delta.iter().map(|x| format!("{x:.6}")).collect();
                println!("{:<24} {:>8} {:>14.9}  [{}]", c.id.to_string(), c.members.len(), pat.omega_bar, d.join(", "));
            }
            None => println!(
                "{:<24} {:>8} {:>14}  {}",
                c.id.to_string(),
                c.members.len(),
                "-",
                c.unrealized.as_deref().unwrap_or("unrealized")
            ),
        }
    }
    let path = cli.out_dir.join(&r.name).join("atlas.json");
    run::write_json(&path, atlas)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(cli: &Cli, input: &Input) -> anyhow::Result<()> {
    let r = resolve(input)?;
    if r.runs.is_empty() {
        return Err(schema_err("scenario has no runs"));
    }
    let p = Prepared::new(&r.model)?;
    let settings = RunSettings {
        t_end: cli.t_end.or(r.t_end).unwrap_or(100.0),
        tol: cli.tol.or(r.tol).unwrap_or(1e-9),
        window: r.window,
    };
    if !(settings.t_end > 0.0 && settings.tol > 0.0) {
        return Err(schema_err("t_end and tol must be positive"));
    }
    let results = run::run_all(&p, &r.runs, &settings)?;
    let dir = cli.out_dir.join(&r.name);
    run::write_runs(&dir, &r.name, &results)?;
    println!("[{}] N^P = {}", r.name, p.atlas.n_patterns);
    for (s, _) in &results {
        run::print_run(s);
    }
    let summaries: Vec<_> = results.into_iter().map(|(s, _)| s).collect();
    run::write_json(&dir.join("summary.json"), &summaries)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn classify(input: &Input, theta: Option<&[f64]>) -> anyhow::Result<()> {
    let r = resolve(input)?;
    let p = Prepared::new(&r.model)?;
    let states: Vec<(String, Vec<f64>)> = match theta {
        Some(t) => vec![("theta".into(), t.to_vec())],
        None => r.runs.iter().map(|s| (s.label.clone(), s.theta0.clone())).collect(),
    };
    if states.is_empty() {
        return Err(schema_err("no state to classify; pass --theta"));
    }
    for (label, t) in states {
        if t.len() != r.model.node_count() {
            return Err(schema_err(format!("{label}: {} phases for {} nodes", t.len(), r.model.node_count())));
        }
        let cell = p.analyzer.classify_state(&t)?;
        let class = p.class_of(&cell);
        let pattern = class
            .as_ref()
            .and_then(|id| p.atlas.classes.iter().find(|c| &c.id == id))
            .and_then(|c| c.pattern.as_ref());
        match pattern {
            Some(pat) => println!("{label}: cell {cell}, class {}, ω̄ = {:.9}", class.unwrap_or(cell.clone()), pat.omega_bar),
            None => println!("{label}: cell {cell}, no realizable pattern"),
        }
    }
    Ok(())
}

fn export(name: &str, output: Option<&Path>, cli: &Cli) -> anyhow::Result<()> {
    let sc = match figures::TARGETS.iter().find_map(|t| figures::scenario(t).ok().filter(|s| s.name.as_deref() == Some(name))) {
        Some(s) => s,
        None => {
            let m = preset(name)?;
            let start = scenario::RunSpec {
                label: "zero".into(),
                theta0: vec![0.0; m.node_count()],
                kicks: Default::default(),
            };
            scenario::Scenario::inline(name, m, vec![start], 100.0, 1e-9)
        }
    };
    let path = output.map_or_else(|| cli.out_dir.join(format!("{name}.json")), Path::to_path_buf);
    run::write_json(&path, &sc)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Analyze(input) => analyze(cli, input),
        Command::Simulate(input) => simulate(cli, input),
        Command::Design { request } => design_cmd::run(request, &cli.out_dir),
        Command::Reproduce { target } => {
            figures::reproduce(target, &cli.out_dir, &figures::Overrides { t_end: cli.t_end, tol: cli.tol })
        }
        Command::Classify { input, theta } => classify(input, theta.as_deref()),
        Command::Preset { action: PresetAction::List } => {
            for name in presets::NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Preset { action: PresetAction::Export { name, output } } => export(name, output.as_deref(), cli),
        Command::Check { cases } => {
            let report = check::run(cli.seed, *cases)?;
            println!(
                "{} models, {} patterns, max residual {:.2e}, equivalence mismatches {}",
                report.cases, report.patterns, report.max_residual, report.equivalence_mismatches
            );
            run::write_json(&cli.out_dir.join("check.json"), &report)?;
            if report.equivalence_mismatches > 0 || report.max_residual > 1e-8 {
                anyhow::bail!("self-check failed");
            }
            Ok(())
        }
    }
}

fn budget_exceeded(e: &PatternError) -> bool {
    matches!(e, PatternError::BudgetExceeded { .. })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<SchemaError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<PatternError>() {
            if budget_exceeded(e) {
                return 3;
            }
        }
        if let Some(e) = cause.downcast_ref::<DesignError>() {
            return match e {
                DesignError::Pattern(p) if budget_exceeded(p) => 3,
                _ => 5,
            };
        }
        if let Some(e) = cause.downcast_ref::<SimulationError>() {
            match e {
                SimulationError::Pattern(p) if budget_exceeded(p) => return 3,
                SimulationError::PoleApproach { .. } | SimulationError::OnPole { .. } => return 4,
                _ => {}
            }
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            if e.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli).context("barrier-cpg failed") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
