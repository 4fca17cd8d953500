//! Integration of the network flow in lifted coordinates, with impulsive
//! kicks, convergence detection and post-run checks.
//!
//! States are never reduced modulo `2π` while integrating. A barrier guard
//! rejects any step whose stage states would carry a non-saturated coupling
//! argument out of its cell or within [`POLE_GUARD`] of a pole.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{wrap, wrap_positive};
use crate::coupling::CouplingError;
use crate::model::NetworkModel;
use crate::pattern::{PatternAnalyzer, PatternError, SequenceIndex};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Closest a guarded coupling argument may come to a pole.
pub const POLE_GUARD: f64 = 1e-7;
/// Guard-driven rejections below this step size abort the run.
pub const MIN_STEP: f64 = 1e-14;
pub const DEFAULT_MAX_STEP: f64 = 0.05;
pub const DEFAULT_MAX_STEPS: usize = 5_000_000;
/// Final coupling arguments this close to a cell boundary are flagged.
pub const NEAR_BOUNDARY: f64 = 1e-3;
/// Shortest interval used to estimate an instantaneous frequency.
pub const FREQUENCY_SPACING: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("expected {expected} phases, got {got}")]
    Length { got: usize, expected: usize },
    #[error("invalid kick schedule: {0}")]
    Schedule(String),
    #[error("invalid time span: {0}")]
    TimeSpan(String),
    #[error("coupling argument of node {node} is within {} of a pole at t = {time}", POLE_GUARD)]
    OnPole { time: f64, node: usize },
    #[error("barrier guard shrank the step below {} at t = {time}", MIN_STEP)]
    PoleApproach { time: f64 },
    #[error("step limit of {limit} reached at t = {time}")]
    StepLimit { time: f64, limit: usize },
    #[error("cell invariance violated at sample {sample} (node {node}, margin {margin})")]
    InvarianceViolated { sample: usize, node: usize, margin: f64 },
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// A single instantaneous shift of one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impulse {
    pub time: f64,
    pub node: usize,
    pub shift: f64,
}

/// A periodic train of equal impulses on one node, firing at
/// `start, start + period, …` while the time is below `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistentKick {
    pub node: usize,
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickSchedule {
    #[serde(default)]
    pub impulses: Vec<Impulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persistent: Option<PersistentKick>,
}

impl KickSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, node_count: usize) -> Result<(), SimulationError> {
        let bad = |msg: String| Err(SimulationError::Schedule(msg));
        for pair in self.impulses.windows(2) {
            if pair[1].time <= pair[0].time {
                return bad(format!("impulse times must increase ({} after {})", pair[1].time, pair[0].time));
            }
        }
        for k in &self.impulses {
            if !k.time.is_finite() || !k.shift.is_finite() {
                return bad(format!("impulse at {} has a non-finite time or shift", k.time));
            }
            if k.node == 0 || k.node > node_count {
                return bad(format!("impulse node {} out of range", k.node));
            }
        }
        if let Some(p) = &self.persistent {
            if p.node == 0 || p.node > node_count {
                return bad(format!("persistent node {} out of range", p.node));
            }
            if !(p.period > 0.0 && p.period.is_finite()) {
                return bad(format!("period must be positive, got {}", p.period));
            }
            if !p.amplitude.is_finite() || !p.start.is_finite() || p.stop.is_some_and(|s| !s.is_finite()) {
                return bad("persistent kick has non-finite parameters".into());
            }
        }
        Ok(())
    }

    /// All jumps up to and including `t_end`, merged by time.
    fn jumps(&self, t_end: f64, node_count: usize) -> Vec<(f64, Vec<f64>)> {
        let mut raw: Vec<(f64, usize, f64)> =
            self.impulses.iter().filter(|k| k.time <= t_end).map(|k| (k.time, k.node, k.shift)).collect();
        if let Some(p) = &self.persistent {
            let stop = p.stop.unwrap_or(f64::INFINITY);
            let mut k = 0u64;
            loop {
                let t = p.start + p.period * k as f64;
                if t >= stop || t > t_end {
                    break;
                }
                raw.push((t, p.node, p.amplitude));
                k += 1;
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
        for (t, node, shift) in raw {
            match out.last_mut() {
                Some((last, jump)) if *last == t => jump[node - 1] += shift,
                _ => {
                    let mut jump = vec![0.0; node_count];
                    jump[node - 1] = shift;
                    out.push((t, jump));
                }
            }
        }
        out
    }
}

/// A jump applied during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickEvent {
    pub time: f64,
    pub shift: Vec<f64>,
    /// Index of the first sample after the jump.
    pub sample: usize,
}

/// Samples of a run. Each kick produces two samples at the same time, one
/// before and one after the jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub nu_args: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub events: Vec<KickEvent>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    /// Sample ranges of the kick-free pieces of the run.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut starts: Vec<usize> = vec![0];
        starts.extend(self.events.iter().map(|e| e.sample).filter(|&s| s > 0));
        starts.dedup();
        let mut out = Vec::with_capacity(starts.len());
        for (k, &s) in starts.iter().enumerate() {
            let end = starts.get(k + 1).copied().unwrap_or(self.len());
            if end > s {
                out.push(s..end);
            }
        }
        out
    }

    /// Writes `t, theta_1…theta_N, nu_1…nu_N, u_1…u_N` rows, where `nu_i`
    /// is the coupling argument and `u_i` the coupling input.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        for prefix in ["theta", "nu", "u"] {
            header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k].to_string()];
            for block in [&self.states[k], &self.nu_args[k], &self.inputs[k]] {
                row.extend(block.iter().map(f64::to_string));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Relative and absolute error tolerance.
    pub tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_step: DEFAULT_MAX_STEP, max_steps: DEFAULT_MAX_STEPS }
    }
}

impl SimOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Integrates from `theta0` over `[0, t_end]` with default step limits.
pub fn integrate(
    m: &NetworkModel,
    theta0: &[f64],
    t_end: f64,
    kicks: &KickSchedule,
    tol: f64,
) -> Result<Trajectory, SimulationError> {
    integrate_with(m, theta0, t_end, kicks, &SimOptions::with_tol(tol))
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Vector field restricted to the current cell of the guarded nodes.
struct GuardedField<'a> {
    m: &'a NetworkModel,
    guarded: Vec<bool>,
    cell: Vec<f64>,
}

impl GuardedField<'_> {
    /// Sets the cell from `theta`; fails if a guarded node starts on a pole.
    fn enter(&mut self, theta: &[f64], time: f64) -> Result<(), SimulationError> {
        for (i, x) in self.m.coupling_args(theta).into_iter().enumerate() {
            let k = ((x + PI) / TAU).floor();
            let r = x - TAU * k;
            if self.guarded[i] && (r + PI < POLE_GUARD || PI - r < POLE_GUARD) {
                return Err(SimulationError::OnPole { time, node: i + 1 });
            }
            self.cell[i] = k;
        }
        Ok(())
    }

    /// `None` when a guarded argument leaves its band.
    fn eval(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let args = self.m.coupling_args(theta);
        let mut out = Vec::with_capacity(args.len());
        for (i, x) in args.into_iter().enumerate() {
            if self.guarded[i] {
                let r = x - TAU * self.cell[i];
                if !(r > -PI + POLE_GUARD && r < PI - POLE_GUARD) {
                    return None;
                }
            }
            out.push(self.m.omega()[i] + self.m.coupling()[i].eval(x).ok()?);
        }
        Some(out)
    }
}

pub fn integrate_with(
    m: &NetworkModel,
    theta0: &[f64],
    t_end: f64,
    kicks: &KickSchedule,
    opts: &SimOptions,
) -> Result<Trajectory, SimulationError> {
    let n = m.node_count();
    if theta0.len() != n {
        return Err(SimulationError::Length { got: theta0.len(), expected: n });
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SimulationError::TimeSpan(format!("t_end must be finite and non-negative, got {t_end}")));
    }
    if !(opts.tol > 0.0) {
        return Err(SimulationError::TimeSpan(format!("tolerance must be positive, got {}", opts.tol)));
    }
    kicks.validate(n)?;
    let mut field = GuardedField {
        m,
        guarded: m.coupling().iter().map(|f| !f.is_saturated()).collect(),
        cell: vec![0.0; n],
    };
    let mut tr = Trajectory { times: Vec::new(), states: Vec::new(), nu_args: Vec::new(), inputs: Vec::new(), events: Vec::new() };
    let record = |tr: &mut Trajectory, t: f64, y: &[f64]| -> Result<(), SimulationError> {
        let args = m.coupling_args(y);
        let inputs =
            args.iter().zip(m.coupling()).map(|(&x, f)| f.eval(x)).collect::<Result<Vec<_>, _>>()?;
        tr.times.push(t);
        tr.states.push(y.to_vec());
        tr.nu_args.push(args);
        tr.inputs.push(inputs);
        Ok(())
    };

    let mut y = theta0.to_vec();
    let mut t = 0.0;
    let mut h = opts.max_step.min(1e-3);
    let mut steps = 0usize;
    let jumps = kicks.jumps(t_end, n);
    let mut next_jump = 0;
    field.enter(&y, t)?;
    record(&mut tr, t, &y)?;
    loop {
        while next_jump < jumps.len() && jumps[next_jump].0 <= t {
            let (time, shift) = &jumps[next_jump];
            y.iter_mut().zip(shift).for_each(|(a, b)| *a += b);
            field.enter(&y, *time)?;
            tr.events.push(KickEvent { time: *time, shift: shift.clone(), sample: tr.len() });
            record(&mut tr, t, &y)?;
            next_jump += 1;
        }
        if t >= t_end {
            break;
        }
        let stop = jumps.get(next_jump).map_or(t_end, |j| j.0.min(t_end));
        integrate_segment(&field, &mut y, &mut t, stop, &mut h, &mut steps, opts, &mut |t, y| record(&mut tr, t, y))?;
    }
    Ok(tr)
}

#[allow(clippy::too_many_arguments)]
fn integrate_segment(
    field: &GuardedField<'_>,
    y: &mut Vec<f64>,
    t: &mut f64,
    stop: f64,
    h: &mut f64,
    steps: &mut usize,
    opts: &SimOptions,
    record: &mut dyn FnMut(f64, &[f64]) -> Result<(), SimulationError>,
) -> Result<(), SimulationError> {
    let n = y.len();
    // the flow only sees phase differences, so integrate relative to a moving
    // common offset to keep the error scale independent of elapsed time
    let mut offset = y[0];
    let mut z: Vec<f64> = y.iter().map(|v| v - offset).collect();
    let mut lifted = vec![0.0; n];
    let mut k: [Vec<f64>; 7] = Default::default();
    k[0] = field.eval(&z).ok_or(SimulationError::PoleApproach { time: *t })?;
    let mut stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    while *t < stop {
        if *steps >= opts.max_steps {
            return Err(SimulationError::StepLimit { time: *t, limit: opts.max_steps });
        }
        *steps += 1;
        let remaining = stop - *t;
        let last = *h >= remaining;
        let step = if last { remaining } else { *h };
        // stages; a guard failure rejects the step outright
        let mut guarded_out = false;
        for s in 1..7 {
            for i in 0..n {
                let acc: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
                stage[i] = z[i] + step * acc;
            }
            match field.eval(&stage) {
                Some(v) => k[s] = v,
                None => {
                    guarded_out = true;
                    break;
                }
            }
        }
        if guarded_out {
            *h = step / 2.0;
            if *h < MIN_STEP {
                return Err(SimulationError::PoleApproach { time: *t });
            }
            continue;
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            y5[i] = z[i] + step * hi;
            let scale = opts.tol + opts.tol * z[i].abs().max(y5[i].abs());
            err = err.max((step * (hi - lo) / scale).abs());
        }
        if err <= 1.0 {
            *t = if last { stop } else { *t + step };
            std::mem::swap(&mut z, &mut y5);
            k[0] = std::mem::take(&mut k[6]);
            if z[0].abs() > TAU {
                let shift = z[0];
                offset += shift;
                z.iter_mut().for_each(|v| *v -= shift);
            }
            lifted.iter_mut().zip(&z).for_each(|(l, v)| *l = v + offset);
            record(*t, &lifted)?;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last || grow < 1.0 {
                *h = (step * grow).min(opts.max_step);
            }
        } else {
            *h = (step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)).max(step * 0.1);
            // error-driven retries stay at the floor; the step limit bounds them
            *h = h.max(MIN_STEP);
        }
    }
    y.iter_mut().zip(&z).for_each(|(l, v)| *l = v + offset);
    Ok(())
}

/// Phase-locked behaviour estimated from the tail of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedPattern {
    pub omega_bar_est: f64,
    /// `θ_i − θ_1` at the final sample, in `[0, 2π)`.
    pub delta_est: Vec<f64>,
    /// Cell of the final reduced state, `None` if it sits on a boundary.
    pub class: Option<SequenceIndex>,
    pub converged: bool,
    /// Largest frequency spread or edge-difference drift over the window.
    pub residual: f64,
    /// True when a final coupling argument lies within [`NEAR_BOUNDARY`]
    /// of a cell boundary.
    pub near_boundary: bool,
    pub window: f64,
}

/// Default detection window: 10 time units or 10% of the run.
pub fn default_window(tr: &Trajectory) -> f64 {
    let span = tr.times.last().copied().unwrap_or(0.0) - tr.times.first().copied().unwrap_or(0.0);
    (0.1 * span).max(10.0)
}

/// Checks whether the last kick-free `window` of the run is phase locked.
pub fn detect_pattern(tr: &Trajectory, m: &NetworkModel, window: f64, tol: f64) -> DetectedPattern {
    let n = m.node_count();
    let last = tr.len().saturating_sub(1);
    let seg = tr.segments().pop().unwrap_or(0..tr.len());
    let t_end = tr.times.get(last).copied().unwrap_or(0.0);
    let usable = t_end - tr.times.get(seg.start).copied().unwrap_or(t_end) >= window && window > 0.0;
    let first = seg.clone().find(|&k| tr.times[k] >= t_end - window).unwrap_or(seg.start);
    let y_end = tr.final_state();
    let span = t_end - tr.times.get(first).copied().unwrap_or(t_end);
    let omega_bar_est = if span > 0.0 {
        (0..n).map(|i| (y_end[i] - tr.states[first][i]) / span).sum::<f64>() / n as f64
    } else {
        f64::NAN
    };
    let delta_est: Vec<f64> = (0..n).map(|i| wrap_positive(y_end[i] - y_end[0])).collect();

    let mut residual = 0.0f64;
    let edges: Vec<(usize, usize)> = m.graph().edges().iter().map(|e| (e.src - 1, e.dst - 1)).collect();
    let diff = |k: usize, (a, b): (usize, usize)| tr.states[k][a] - tr.states[k][b];
    let mut anchor = first;
    for k in first..=last.max(first) {
        if k >= tr.len() {
            break;
        }
        // instantaneous frequencies from samples of the flow spaced at least
        // FREQUENCY_SPACING apart, so clipped final steps add no round-off
        let dt = tr.times[k] - tr.times[anchor];
        if dt >= FREQUENCY_SPACING {
            let (lo, hi) = (0..n)
                .map(|i| (tr.states[k][i] - tr.states[anchor][i]) / dt)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            residual = residual.max(hi - lo);
            anchor = k;
        }
        for &e in &edges {
            residual = residual.max(wrap(diff(k, e) - diff(last, e)).abs());
        }
    }
    if !residual.is_finite() {
        residual = f64::INFINITY;
    }
    let analyzer = PatternAnalyzer::new(m).ok();
    let class = analyzer.as_ref().and_then(|a| a.classify_state(y_end).ok());
    let near_boundary = m
        .coupling_args(&y_end.iter().map(|&x| wrap(x)).collect::<Vec<_>>())
        .iter()
        .any(|&x| PI - wrap(x).abs() < NEAR_BOUNDARY);
    DetectedPattern {
        omega_bar_est,
        delta_est,
        class,
        converged: usable && residual < tol,
        residual,
        near_boundary,
        window,
    }
}

/// Result of [`verify_invariance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// Smallest distance of a guarded coupling argument to its cell boundary.
    pub min_margin: f64,
    /// Largest change of `Σ_{i∈S} ζ_i ν_i` within a segment.
    pub conservation_drift: f64,
    /// Cell at the start of each kick-free segment.
    pub segment_cells: Vec<SequenceIndex>,
}

/// Checks that every kick-free segment keeps each non-saturated coupling
/// argument inside the cell it started in.
pub fn verify_invariance(tr: &Trajectory, m: &NetworkModel) -> Result<InvarianceReport, SimulationError> {
    let lnv = m.graph().left_null_vector().map_err(PatternError::from)?;
    let guarded: Vec<bool> = m.coupling().iter().map(|f| !f.is_saturated()).collect();
    let mut min_margin = PI;
    let mut drift = 0.0f64;
    let mut cells = Vec::new();
    let weighted = |k: usize| -> f64 {
        lnv.iscc_nodes
            .iter()
            .map(|&v| lnv.zeta[v - 1] as f64 * (tr.nu_args[k][v - 1] - m.phi()[v - 1]))
            .sum()
    };
    for seg in tr.segments() {
        let cell: Vec<i64> = tr.nu_args[seg.start].iter().map(|&x| ((x + PI) / TAU).floor() as i64).collect();
        let base = weighted(seg.start);
        for k in seg.clone() {
            for i in (0..m.node_count()).filter(|&i| guarded[i]) {
                let r = tr.nu_args[k][i] - TAU * cell[i] as f64;
                let margin = PI - r.abs();
                if margin <= 0.0 {
                    return Err(SimulationError::InvarianceViolated { sample: k, node: i + 1, margin });
                }
                min_margin = min_margin.min(margin);
            }
            drift = drift.max((weighted(k) - base).abs());
        }
        cells.push(SequenceIndex(cell));
    }
    Ok(InvarianceReport { min_margin, conservation_drift: drift, segment_cells: cells })
}

/// Result of [`verify_bounded_input`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedInputReport {
    pub max_abs: f64,
    pub per_node: Vec<f64>,
    pub finite: bool,
}

pub fn verify_bounded_input(tr: &Trajectory) -> BoundedInputReport {
    let n = tr.inputs.first().map_or(0, Vec::len);
    let mut per_node = vec![0.0f64; n];
    for row in &tr.inputs {
        for (p, u) in per_node.iter_mut().zip(row) {
            *p = p.max(u.abs());
        }
    }
    let max_abs = per_node.iter().copied().fold(0.0, f64::max);
    BoundedInputReport { max_abs, finite: max_abs.is_finite(), per_node }
}

/// Result of [`linearization_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    /// `max_i |(J·1)_i|`.
    pub row_sum_max: f64,
    /// Eigenvalues as `(re, im)`, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Largest real part after removing the eigenvalue closest to zero.
    pub max_nontrivial_real: f64,
    /// Off-diagonal entries of `J` are all non-negative.
    pub metzler: bool,
}

/// Jacobian `J = −diag(f_i'(ν_i + φ_i))·L` of the flow at `theta`.
pub fn jacobian(m: &NetworkModel, theta: &[f64]) -> Result<DMatrix<f64>, SimulationError> {
    let n = m.node_count();
    if theta.len() != n {
        return Err(SimulationError::Length { got: theta.len(), expected: n });
    }
    let args = m.coupling_args(theta);
    let mut j = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = m.coupling()[i].derivative(args[i])?;
        for &(src, w) in m.graph().in_edges0(i) {
            let a = d * f64::from(w);
            j[(i, src)] += a;
            j[(i, i)] -= a;
        }
    }
    Ok(j)
}

pub fn linearization_check(m: &NetworkModel, theta: &[f64]) -> Result<LinearizationReport, SimulationError> {
    let j = jacobian(m, theta)?;
    let n = j.nrows();
    let row_sum_max = j.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
    let metzler = (0..n).all(|a| (0..n).all(|b| a == b || j[(a, b)] >= 0.0));
    let mut eig: Vec<(f64, f64)> = j.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    eig.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let zero = eig
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.hypot(a.1 .1).total_cmp(&b.1 .0.hypot(b.1 .1)))
        .map(|(k, _)| k);
    let max_nontrivial_real = eig
        .iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != zero)
        .map(|(_, z)| z.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LinearizationReport { row_sum_max, eigenvalues: eig, max_nontrivial_real, metzler })
}
