//! Phase-locked ("central") patterns: cell classification, admissibility of
//! cell indices, the common-frequency equation, the formation solve, and
//! the equivalence classes that make up the pattern atlas.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{wrap, wrap_positive};
use crate::coupling::CouplingError;
use crate::exact::{self, rationalize};
use crate::graph::{GraphError, GroundedSolver, LeftNullVector};
use crate::model::NetworkModel;

/// Default cap on the number of candidate cell indices enumerated.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Reduced coupling arguments closer than this to `±π` are on a cell boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

const PHASE_RATIONAL_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("coupling argument of node {node} is on a cell boundary ({arg})")]
    OnBoundary { node: usize, arg: f64 },
    #[error("no common frequency: {0}")]
    NoSolution(String),
    #[error("saturated coupling of node {node} cannot realize the required input")]
    SaturationEscape { node: usize },
    #[error("frequency and formation solves disagree (weighted residual {0:e})")]
    Inconsistent(f64),
    #[error("enumeration needs {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: u128, budget: u64 },
    #[error("vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
}

/// Integer cell index `{n_i}`: coupling argument `i` lies in the band
/// `(2n_iπ − π, 2n_iπ + π)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequenceIndex(pub Vec<i64>);

impl SequenceIndex {
    pub fn zeros(n: usize) -> Self {
        SequenceIndex(vec![0; n])
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SequenceIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDifference {
    pub src: usize,
    pub dst: usize,
    /// `Δ_src − Δ_dst` reduced to `[-π, π)`.
    pub value: f64,
}

/// A phase-locked solution: every agent rotates at `omega_bar` and the
/// phase offsets relative to agent 1 are constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralPattern {
    pub omega_bar: f64,
    /// Offsets `Δ_i` in `[0, 2π)`, `Δ_1 = 0`.
    pub delta: Vec<f64>,
    /// The offsets as solved in the cell's lifted coordinates.
    pub delta_lifted: Vec<f64>,
    pub delta_edges: Vec<EdgeDifference>,
    /// The cell index the pattern was solved from.
    pub sequence: SequenceIndex,
    /// Smallest member of the equivalence class.
    pub class_id: SequenceIndex,
    /// Largest deviation from exact phase locking over all nodes.
    pub residual: f64,
}

impl CentralPattern {
    /// True if both patterns have the same frequency and the same offsets
    /// modulo `2π`, within the given tolerances.
    pub fn matches(&self, other: &CentralPattern, freq_tol: f64, angle_tol: f64) -> bool {
        (self.omega_bar - other.omega_bar).abs() <= freq_tol
            && self
                .delta
                .iter()
                .zip(&other.delta)
                .all(|(a, b)| wrap(a - b).abs() <= angle_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternClass {
    pub id: SequenceIndex,
    pub members: Vec<SequenceIndex>,
    /// `None` when the class has no realizable pattern (saturated couplings).
    pub pattern: Option<CentralPattern>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unrealized: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionAtlas {
    pub zeta: Vec<i64>,
    pub iscc: Vec<usize>,
    /// Follower coordinates were fixed to zero because every follower has
    /// a single unit-weight in-edge.
    pub followers_fixed: bool,
    pub candidates: u128,
    pub admissible: Vec<SequenceIndex>,
    pub classes: Vec<PatternClass>,
    pub n_patterns: usize,
}

impl PartitionAtlas {
    pub fn class_of(&self, n: &SequenceIndex) -> Option<&PatternClass> {
        self.classes.iter().find(|c| c.members.contains(n))
    }
}

/// Integers allowed for `n_S = Σ_i ζ_i n_i`: the open interval
/// `(φ_S/2π − ζ_S/2, φ_S/2π + ζ_S/2)` with `φ_S = Σ_i ζ_i φ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsInterval {
    pub lower: f64,
    pub upper: f64,
    pub first: i64,
    pub last: i64,
    pub count: u64,
    pub zeta_sum: i64,
}

/// Precomputed graph data for repeated queries against one model.
pub struct PatternAnalyzer<'a> {
    model: &'a NetworkModel,
    lnv: LeftNullVector,
    solver: GroundedSolver,
    cols: Vec<usize>,
    rows: Vec<usize>,
    inverse: Vec<Vec<f64>>,
    // 2·(φ_S / 2π) as an exact rational: Σ ζ_i φ_i / π
    phase_sum: BigRational,
    degrees: Vec<i64>,
}

impl<'a> PatternAnalyzer<'a> {
    pub fn new(model: &'a NetworkModel) -> Result<Self, PatternError> {
        let g = model.graph();
        let lnv = g.left_null_vector()?;
        let solver = GroundedSolver::new(g, 1)?;
        let (cols, rows, inv) = solver.inverse();
        let inverse = inv
            .iter()
            .map(|row| row.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
            .collect();
        let phase_sum = lnv
            .zeta
            .iter()
            .zip(model.phi())
            .filter(|(z, _)| **z != 0)
            .map(|(&z, &p)| exact::int(z) * rationalize(p / PI, PHASE_RATIONAL_TOL))
            .fold(exact::int(0), |a, b| a + b);
        let degrees = (1..=g.node_count()).map(|i| g.in_degree(i) as i64).collect();
        Ok(PatternAnalyzer {
            model,
            lnv,
            cols: cols.to_vec(),
            rows: rows.to_vec(),
            solver,
            inverse,
            phase_sum,
            degrees,
        })
    }

    pub fn model(&self) -> &NetworkModel {
        self.model
    }

    pub fn left_null_vector(&self) -> &LeftNullVector {
        &self.lnv
    }

    /// Weighted in-degrees `d_i`; `|n_i| ≤ d_i` for every nonempty cell.
    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    fn check_len(&self, len: usize) -> Result<(), PatternError> {
        let expected = self.model.node_count();
        if len == expected {
            Ok(())
        } else {
            Err(PatternError::Length { got: len, expected })
        }
    }

    /// Cell index of a state after reducing each phase to `[-π, π)`.
    pub fn classify_state(&self, theta: &[f64]) -> Result<SequenceIndex, PatternError> {
        self.check_len(theta.len())?;
        let reduced: Vec<f64> = theta.iter().map(|&t| wrap(t)).collect();
        self.lifted_cell(&reduced)
    }

    /// Cell index of a lifted state (no reduction of the phases).
    pub fn lifted_cell(&self, theta: &[f64]) -> Result<SequenceIndex, PatternError> {
        self.check_len(theta.len())?;
        let args = self.model.coupling_args(theta);
        let mut n = Vec::with_capacity(args.len());
        for (i, &x) in args.iter().enumerate() {
            let k = ((x + PI) / TAU).floor();
            let r = x - TAU * k;
            if r + PI < BOUNDARY_TOL || PI - r < BOUNDARY_TOL {
                return Err(PatternError::OnBoundary { node: i + 1, arg: x });
            }
            n.push(k as i64);
        }
        Ok(SequenceIndex(n))
    }

    fn ns_admissible(&self, ns: i64) -> bool {
        // −ζ_S < 2 n_S − Σ ζ_i φ_i / π < ζ_S
        let zs = exact::int(self.lnv.sum());
        let v = exact::int(2 * ns) - &self.phase_sum;
        -zs.clone() < v && v < zs
    }

    /// Whether the lifted cell of `n` is nonempty, decided exactly.
    pub fn admissible_extended(&self, n: &SequenceIndex) -> bool {
        if n.len() != self.model.node_count() {
            return false;
        }
        if n.0.iter().zip(&self.degrees).any(|(v, d)| v.abs() > *d) {
            return false;
        }
        self.ns_admissible(self.lnv.dot_i64(&n.0))
    }

    /// Whether some state on the torus, kept `eps` away from every cell
    /// boundary and from `±π`, lies in the cell of `n`.
    pub fn admissible_torus(&self, n: &SequenceIndex, eps: f64) -> bool {
        self.torus_witness(n, eps).is_some()
    }

    /// A state witnessing [`PatternAnalyzer::admissible_torus`].
    pub fn torus_witness(&self, n: &SequenceIndex, eps: f64) -> Option<Vec<f64>> {
        if !self.admissible_extended(n) {
            return None;
        }
        crate::lp::torus_witness(self.model, n, eps)
    }

    pub fn ns_interval(&self) -> NsInterval {
        let zs = self.lnv.sum();
        let two = exact::int(2);
        let lower = (&self.phase_sum - exact::int(zs)) / &two;
        let upper = (&self.phase_sum + exact::int(zs)) / &two;
        let first = lower.floor().to_integer().to_i64().unwrap_or(i64::MIN) + 1;
        let last = upper.ceil().to_integer().to_i64().unwrap_or(i64::MAX) - 1;
        NsInterval {
            lower: lower.to_f64().unwrap_or(f64::NAN),
            upper: upper.to_f64().unwrap_or(f64::NAN),
            first,
            last,
            count: if last >= first { (last - first + 1) as u64 } else { 0 },
            zeta_sum: zs,
        }
    }

    /// `F(ω̄) = Σ_{i∈S} ζ_i (f_i⁻¹(ω̄ − ω_i) + 2n_iπ − φ_i)`; saturated
    /// inverses are clamped to `±π` outside their range.
    pub fn frequency_function(&self, n: &SequenceIndex, omega_bar: f64) -> f64 {
        let m = self.model;
        // n enters only through the integer n_S, so equivalent cells give
        // bit-identical values
        let n_s = self.lnv.dot_i64(&n.0);
        let smooth: f64 = self
            .lnv
            .iscc_nodes
            .iter()
            .map(|&v| {
                let i = v - 1;
                let z = self.lnv.zeta[i] as f64;
                let s = m.coupling()[i].inverse_clamped(omega_bar - m.omega()[i]);
                z * (s - m.phi()[i])
            })
            .sum();
        smooth + TAU * n_s as f64
    }

    /// Unique root of the frequency function for an admissible `n`.
    pub fn solve_common_frequency(&self, n: &SequenceIndex) -> Result<f64, PatternError> {
        self.check_len(n.len())?;
        if !self.admissible_extended(n) {
            return Err(PatternError::NoSolution(format!("cell {n} is not admissible")));
        }
        let m = self.model;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut lo_node, mut hi_node) = (self.lnv.iscc_nodes[0], self.lnv.iscc_nodes[0]);
        for &v in &self.lnv.iscc_nodes {
            let (a, b) = m.coupling()[v - 1].range();
            let w = m.omega()[v - 1];
            if w + a > lo {
                lo = w + a;
                lo_node = v;
            }
            if w + b < hi {
                hi = w + b;
                hi_node = v;
            }
        }
        if !(lo < hi) {
            return Err(PatternError::SaturationEscape { node: lo_node });
        }
        let zs = self.lnv.sum() as f64;
        let mut center: f64 = self
            .lnv
            .iscc_nodes
            .iter()
            .map(|&v| self.lnv.zeta[v - 1] as f64 * m.omega()[v - 1])
            .sum::<f64>()
            / zs;
        if lo.is_finite() && hi.is_finite() {
            center = 0.5 * (lo + hi);
        } else if lo.is_finite() {
            center = center.max(lo);
        } else if hi.is_finite() {
            center = center.min(hi);
        }
        let f = |w: f64| self.frequency_function(n, w);
        let cap = 2f64.powi(60);
        let mut a = lo;
        if !a.is_finite() {
            let mut width = 1.0;
            a = center - width;
            while f(a) >= 0.0 {
                width *= 2.0;
                if width > cap {
                    return Err(PatternError::NoSolution("no sign change below".into()));
                }
                a = center - width;
            }
        } else if f(a) >= 0.0 {
            return Err(PatternError::SaturationEscape { node: lo_node });
        }
        let mut b = hi;
        if !b.is_finite() {
            let mut width = 1.0;
            b = center + width;
            while f(b) <= 0.0 {
                width *= 2.0;
                if width > cap {
                    return Err(PatternError::NoSolution("no sign change above".into()));
                }
                b = center + width;
            }
        } else if f(b) <= 0.0 {
            return Err(PatternError::SaturationEscape { node: hi_node });
        }
        let (mut fa, mut fb) = (f(a), f(b));
        loop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return Ok(mid);
            }
            if fm < 0.0 {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
        }
        Ok(if fa.abs() <= fb.abs() { a } else { b })
    }

    /// Offsets of the pattern in cell `n` rotating at `omega_bar`.
    pub fn solve_formation(
        &self,
        n: &SequenceIndex,
        omega_bar: f64,
    ) -> Result<CentralPattern, PatternError> {
        self.check_len(n.len())?;
        let m = self.model;
        let count = m.node_count();
        let mut rhs = Vec::with_capacity(count);
        for i in 0..count {
            let s = m.coupling()[i]
                .inverse(omega_bar - m.omega()[i])
                .map_err(|_| PatternError::SaturationEscape { node: i + 1 })?;
            rhs.push(s + TAU * n.0[i] as f64 - m.phi()[i]);
        }
        let zeta = &self.lnv.zeta;
        let weighted: f64 = zeta.iter().zip(&rhs).map(|(&z, r)| z as f64 * r).sum();
        if weighted.abs() > CONSISTENCY_TOL {
            return Err(PatternError::Inconsistent(weighted));
        }
        let norm: f64 = zeta.iter().map(|&z| (z * z) as f64).sum();
        for (r, &z) in rhs.iter_mut().zip(zeta) {
            *r -= weighted * z as f64 / norm;
        }
        let mut lifted = vec![0.0; count];
        for (k, &col) in self.cols.iter().enumerate() {
            lifted[col] = self
                .rows
                .iter()
                .enumerate()
                .map(|(l, &row)| self.inverse[k][l] * rhs[row])
                .sum();
        }
        let args = m.coupling_args(&lifted);
        for (i, &x) in args.iter().enumerate() {
            if (x - TAU * n.0[i] as f64).abs() >= PI + CONSISTENCY_TOL {
                return Err(PatternError::Inconsistent(x - TAU * n.0[i] as f64));
            }
        }
        let residual = m.locking_residual(omega_bar, &lifted)?;
        let delta_edges = m
            .graph()
            .edges()
            .iter()
            .map(|e| EdgeDifference {
                src: e.src,
                dst: e.dst,
                value: wrap(lifted[e.src - 1] - lifted[e.dst - 1]),
            })
            .collect();
        let delta = lifted.iter().map(|&d| wrap_positive(d - lifted[0])).collect();
        Ok(CentralPattern {
            omega_bar,
            delta,
            delta_lifted: lifted,
            delta_edges,
            sequence: n.clone(),
            class_id: n.clone(),
            residual,
        })
    }

    /// Frequency and formation for cell `n`.
    pub fn solve_pattern(&self, n: &SequenceIndex) -> Result<CentralPattern, PatternError> {
        let w = self.solve_common_frequency(n)?;
        self.solve_formation(n, w)
    }

    /// Whether two admissible cells lead to the same pattern: equal
    /// weighted sums on the iSCC and an integral grounded solution of
    /// `−L x = n¹ − n²`.
    pub fn equivalent(&self, n1: &SequenceIndex, n2: &SequenceIndex) -> bool {
        if n1.len() != n2.len() || n1.len() != self.model.node_count() {
            return false;
        }
        if self.lnv.dot_i64(&n1.0) != self.lnv.dot_i64(&n2.0) {
            return false;
        }
        let diff: Vec<i64> = n1.0.iter().zip(&n2.0).map(|(a, b)| a - b).collect();
        self.solver.integer_solution(&diff).is_some()
    }

    /// True when every node outside the iSCC has exactly one in-edge of
    /// weight one; follower coordinates can then be fixed to zero.
    pub fn followers_fixable(&self) -> bool {
        let g = self.model.graph();
        (0..g.node_count())
            .filter(|&i| self.lnv.zeta[i] == 0)
            .all(|i| matches!(g.in_edges0(i), [(_, 1)]))
    }

    /// Enumerates admissible cells, groups them into equivalence classes and
    /// solves one pattern per class.
    pub fn enumerate_classes(&self, budget: u64) -> Result<PartitionAtlas, PatternError> {
        let count = self.model.node_count();
        let fixed = self.followers_fixable();
        let coords: Vec<usize> =
            (0..count).filter(|&i| !fixed || self.lnv.zeta[i] != 0).collect();
        let candidates = coords
            .iter()
            .map(|&i| (2 * self.degrees[i] + 1) as u128)
            .fold(1u128, |a, b| a.saturating_mul(b));
        if candidates > u128::from(budget) {
            return Err(PatternError::BudgetExceeded { candidates, budget });
        }
        let mut n = vec![0i64; count];
        for &i in &coords {
            n[i] = -self.degrees[i];
        }
        let mut admissible = Vec::new();
        let mut classes: Vec<(SequenceIndex, Vec<SequenceIndex>)> = Vec::new();
        let mut by_sum: HashMap<i64, Vec<usize>> = HashMap::new();
        'outer: loop {
            let ns = self.lnv.dot_i64(&n);
            if self.ns_admissible(ns) {
                let seq = SequenceIndex(n.clone());
                let group = by_sum.entry(ns).or_default();
                match group.iter().find(|&&c| self.equivalent(&classes[c].0, &seq)) {
                    Some(&c) => classes[c].1.push(seq.clone()),
                    None => {
                        group.push(classes.len());
                        classes.push((seq.clone(), vec![seq.clone()]));
                    }
                }
                admissible.push(seq);
            }
            // odometer: last coordinate varies fastest, giving lexicographic order
            for &i in coords.iter().rev() {
                if n[i] < self.degrees[i] {
                    n[i] += 1;
                    continue 'outer;
                }
                n[i] = -self.degrees[i];
            }
            break;
        }
        let mut freq_cache: HashMap<i64, Result<f64, PatternError>> = HashMap::new();
        let classes: Vec<PatternClass> = classes
            .into_iter()
            .map(|(id, members)| {
                let ns = self.lnv.dot_i64(&id.0);
                let w = freq_cache
                    .entry(ns)
                    .or_insert_with(|| self.solve_common_frequency(&id))
                    .clone();
                let solved = w.and_then(|w| self.solve_formation(&id, w));
                let (pattern, unrealized) = match solved {
                    Ok(p) => (Some(p), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                PatternClass { id, members, pattern, unrealized }
            })
            .collect();
        Ok(PartitionAtlas {
            zeta: self.lnv.zeta.clone(),
            iscc: self.lnv.iscc_nodes.clone(),
            followers_fixed: fixed,
            candidates,
            n_patterns: classes.len(),
            admissible,
            classes,
        })
    }
}

/// Cell index of `theta` after reducing it to `[-π, π)^N`.
pub fn classify_state(m: &NetworkModel, theta: &[f64]) -> Result<SequenceIndex, PatternError> {
    PatternAnalyzer::new(m)?.classify_state(theta)
}

pub fn admissible_extended(m: &NetworkModel, n: &SequenceIndex) -> Result<bool, PatternError> {
    Ok(PatternAnalyzer::new(m)?.admissible_extended(n))
}

pub fn admissible_torus(m: &NetworkModel, n: &SequenceIndex, eps: f64) -> Result<bool, PatternError> {
    Ok(PatternAnalyzer::new(m)?.admissible_torus(n, eps))
}

pub fn solve_common_frequency(m: &NetworkModel, n: &SequenceIndex) -> Result<f64, PatternError> {
    PatternAnalyzer::new(m)?.solve_common_frequency(n)
}

pub fn solve_formation(
    m: &NetworkModel,
    n: &SequenceIndex,
    omega_bar: f64,
) -> Result<CentralPattern, PatternError> {
    PatternAnalyzer::new(m)?.solve_formation(n, omega_bar)
}

pub fn equivalent(m: &NetworkModel, n1: &SequenceIndex, n2: &SequenceIndex) -> Result<bool, PatternError> {
    Ok(PatternAnalyzer::new(m)?.equivalent(n1, n2))
}

pub fn enumerate_classes(m: &NetworkModel) -> Result<PartitionAtlas, PatternError> {
    PatternAnalyzer::new(m)?.enumerate_classes(DEFAULT_BUDGET)
}

pub fn ns_interval(m: &NetworkModel) -> Result<NsInterval, PatternError> {
    Ok(PatternAnalyzer::new(m)?.ns_interval())
}
