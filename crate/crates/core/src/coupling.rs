//! Monotone barrier coupling functions on the circle.
//!
//! Every function is evaluated at the representative of its argument in
//! `[-π, π)`. Non-saturated variants blow up at `±π`; arguments closer than
//! [`POLE_TOL`] to the pole are rejected instead of returning huge values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap;

/// Reduced arguments within this distance of `±π` count as hitting a pole.
pub const POLE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("argument {0} lies on the barrier pole")]
    PoleHit(f64),
    #[error("value {y} is outside the range ({lower}, {upper})")]
    OutOfRange { y: f64, lower: f64, upper: f64 },
    #[error("invalid saturation bounds: {0}")]
    BadBounds(String),
    #[error("invalid coupling parameters: {0}")]
    InvalidParameter(String),
}

/// Strictly increasing coupling function on `(-π, π)`, extended 2π-periodically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BarrierSpec", into = "BarrierSpec")]
pub struct BarrierFunction {
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    TanHalf { gain: f64, offset: f64 },
    Scaled { scale: f64, prototype: Box<BarrierFunction> },
    Shifted { scale: f64, shift: f64, divisor: f64, bias: f64 },
    Saturated(Saturation),
    Piecewise(Piecewise),
}

#[derive(Debug, Clone, PartialEq)]
struct Saturation {
    inner: Box<BarrierFunction>,
    lower: f64,
    upper: f64,
    delta: f64,
    // inner(core_lo) = lower + delta, inner(core_hi) = upper - delta
    core_lo: f64,
    core_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Piecewise {
    knots: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

/// Serialized form of [`BarrierFunction`], tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSpec {
    /// `gain·tan(s/2) + offset`
    TanHalf { gain: f64, offset: f64 },
    /// `scale·prototype(s)`
    ScaledPrototype { scale: f64, prototype: Box<BarrierSpec> },
    /// `scale·(tan(s/2) + shift)/divisor + bias`
    ShiftedScaledTanHalf { scale: f64, shift: f64, divisor: f64, bias: f64 },
    /// `inner` cut to the open range `(lower, upper)`
    Saturated { inner: Box<BarrierSpec>, lower: f64, upper: f64, delta: f64 },
    /// Monotone cubic through `[s, y]` knots with tan-half tails.
    MonotonePiecewise { knots: Vec<[f64; 2]> },
}

impl TryFrom<BarrierSpec> for BarrierFunction {
    type Error = CouplingError;

    fn try_from(spec: BarrierSpec) -> Result<Self, Self::Error> {
        match spec {
            BarrierSpec::TanHalf { gain, offset } => BarrierFunction::tan_half(gain, offset),
            BarrierSpec::ScaledPrototype { scale, prototype } => {
                BarrierFunction::scaled(scale, BarrierFunction::try_from(*prototype)?)
            }
            BarrierSpec::ShiftedScaledTanHalf { scale, shift, divisor, bias } => {
                BarrierFunction::shifted_scaled_tan_half(scale, shift, divisor, bias)
            }
            BarrierSpec::Saturated { inner, lower, upper, delta } => {
                BarrierFunction::try_from(*inner)?.saturate(lower, upper, delta)
            }
            BarrierSpec::MonotonePiecewise { knots } => {
                BarrierFunction::monotone_piecewise(knots.iter().map(|k| (k[0], k[1])).collect())
            }
        }
    }
}

impl From<BarrierFunction> for BarrierSpec {
    fn from(f: BarrierFunction) -> Self {
        BarrierSpec::from(&f)
    }
}

impl From<&BarrierFunction> for BarrierSpec {
    fn from(f: &BarrierFunction) -> Self {
        match &f.repr {
            Repr::TanHalf { gain, offset } => BarrierSpec::TanHalf { gain: *gain, offset: *offset },
            Repr::Scaled { scale, prototype } => BarrierSpec::ScaledPrototype {
                scale: *scale,
                prototype: Box::new(BarrierSpec::from(prototype.as_ref())),
            },
            Repr::Shifted { scale, shift, divisor, bias } => BarrierSpec::ShiftedScaledTanHalf {
                scale: *scale,
                shift: *shift,
                divisor: *divisor,
                bias: *bias,
            },
            Repr::Saturated(sat) => BarrierSpec::Saturated {
                inner: Box::new(BarrierSpec::from(sat.inner.as_ref())),
                lower: sat.lower,
                upper: sat.upper,
                delta: sat.delta,
            },
            Repr::Piecewise(p) => BarrierSpec::MonotonePiecewise {
                knots: p.knots.iter().map(|&(s, y)| [s, y]).collect(),
            },
        }
    }
}

fn finite(name: &str, v: f64) -> Result<(), CouplingError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CouplingError::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl BarrierFunction {
    /// `gain·tan(s/2) + offset`, `gain > 0`.
    pub fn tan_half(gain: f64, offset: f64) -> Result<Self, CouplingError> {
        finite("gain", gain)?;
        finite("offset", offset)?;
        if gain <= 0.0 {
            return Err(CouplingError::InvalidParameter(format!("gain must be positive, got {gain}")));
        }
        Ok(BarrierFunction { repr: Repr::TanHalf { gain, offset } })
    }

    /// The unit prototype `tan(s/2)`.
    pub fn prototype() -> Self {
        BarrierFunction { repr: Repr::TanHalf { gain: 1.0, offset: 0.0 } }
    }

    /// `scale·prototype(s)`, `scale > 0`.
    pub fn scaled(scale: f64, prototype: BarrierFunction) -> Result<Self, CouplingError> {
        finite("scale", scale)?;
        if scale <= 0.0 {
            return Err(CouplingError::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        Ok(BarrierFunction { repr: Repr::Scaled { scale, prototype: Box::new(prototype) } })
    }

    /// `scale·(tan(s/2) + shift)/divisor + bias`, requires `scale/divisor > 0`.
    pub fn shifted_scaled_tan_half(
        scale: f64,
        shift: f64,
        divisor: f64,
        bias: f64,
    ) -> Result<Self, CouplingError> {
        for (name, v) in [("scale", scale), ("shift", shift), ("divisor", divisor), ("bias", bias)] {
            finite(name, v)?;
        }
        if !(scale / divisor > 0.0) || !(scale / divisor).is_finite() {
            return Err(CouplingError::InvalidParameter(format!(
                "scale/divisor must be positive and finite, got {scale}/{divisor}"
            )));
        }
        Ok(BarrierFunction { repr: Repr::Shifted { scale, shift, divisor, bias } })
    }

    /// Interpolates strictly increasing `(s, y)` knots inside `(-π, π)` with a
    /// shape-preserving cubic and grafts tan-half barrier tails outside.
    pub fn monotone_piecewise(knots: Vec<(f64, f64)>) -> Result<Self, CouplingError> {
        if knots.len() < 2 {
            return Err(CouplingError::InvalidParameter("need at least two knots".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(CouplingError::InvalidParameter(format!(
                    "knots must be strictly increasing in both coordinates: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        for &(s, y) in &knots {
            finite("knot value", y)?;
            if !(s > -PI + POLE_TOL && s < PI - POLE_TOL) {
                return Err(CouplingError::InvalidParameter(format!("knot abscissa {s} outside (-π, π)")));
            }
        }
        let slopes = pchip_slopes(&knots);
        Ok(BarrierFunction { repr: Repr::Piecewise(Piecewise { knots, slopes }) })
    }

    /// Cuts the barrier so the range becomes `(lower, upper)`. The result
    /// agrees with `self` wherever `self` takes values in
    /// `[lower + delta, upper - delta]` and uses linear-in-angle tails of
    /// height `delta` towards `±π`.
    pub fn saturate(&self, lower: f64, upper: f64, delta: f64) -> Result<Self, CouplingError> {
        if self.is_saturated() {
            return Err(CouplingError::BadBounds("function is already saturated".into()));
        }
        if !(lower.is_finite() && upper.is_finite() && delta.is_finite()) {
            return Err(CouplingError::BadBounds("bounds must be finite".into()));
        }
        if !(delta > 0.0) || !(lower + delta < upper - delta) {
            return Err(CouplingError::BadBounds(format!(
                "need delta > 0 and lower + delta < upper - delta, got ({lower}, {upper}, {delta})"
            )));
        }
        let core_lo = self.inverse(lower + delta)?;
        let core_hi = self.inverse(upper - delta)?;
        if !(core_lo < core_hi) || core_lo <= -PI || core_hi >= PI {
            return Err(CouplingError::BadBounds("saturation core interval is empty".into()));
        }
        Ok(BarrierFunction {
            repr: Repr::Saturated(Saturation {
                inner: Box::new(self.clone()),
                lower,
                upper,
                delta,
                core_lo,
                core_hi,
            }),
        })
    }

    /// True if the function has finite range (no barrier pole).
    pub fn is_saturated(&self) -> bool {
        match &self.repr {
            Repr::Saturated(_) => true,
            Repr::Scaled { prototype, .. } => prototype.is_saturated(),
            _ => false,
        }
    }

    /// Open range of the function; infinite for barrier variants.
    pub fn range(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Saturated(s) => (s.lower, s.upper),
            Repr::Scaled { scale, prototype } => {
                let (lo, hi) = prototype.range();
                (scale * lo, scale * hi)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check_pole(&self, s: f64) -> Result<f64, CouplingError> {
        if !s.is_finite() {
            return Err(CouplingError::PoleHit(s));
        }
        let r = wrap(s);
        if !self.is_saturated() && (r + PI <= POLE_TOL || PI - r <= POLE_TOL) {
            return Err(CouplingError::PoleHit(s));
        }
        Ok(r)
    }

    /// Value at the representative of `s` in `[-π, π)`.
    pub fn eval(&self, s: f64) -> Result<f64, CouplingError> {
        let r = self.check_pole(s)?;
        Ok(self.eval_reduced(r))
    }

    /// `df/ds` at the representative of `s`; strictly positive.
    pub fn derivative(&self, s: f64) -> Result<f64, CouplingError> {
        let r = self.check_pole(s)?;
        Ok(self.derivative_reduced(r))
    }

    fn eval_reduced(&self, r: f64) -> f64 {
        match &self.repr {
            Repr::TanHalf { gain, offset } => gain * (r / 2.0).tan() + offset,
            Repr::Scaled { scale, prototype } => scale * prototype.eval_reduced(r),
            Repr::Shifted { scale, shift, divisor, bias } => {
                scale * ((r / 2.0).tan() + shift) / divisor + bias
            }
            Repr::Saturated(sat) => {
                if r > sat.core_hi {
                    sat.upper - sat.delta * (PI - r) / (PI - sat.core_hi)
                } else if r < sat.core_lo {
                    sat.lower + sat.delta * (r + PI) / (sat.core_lo + PI)
                } else {
                    sat.inner.eval_reduced(r)
                }
            }
            Repr::Piecewise(p) => p.eval(r),
        }
    }

    fn derivative_reduced(&self, r: f64) -> f64 {
        match &self.repr {
            Repr::TanHalf { gain, .. } => gain / (1.0 + r.cos()),
            Repr::Scaled { scale, prototype } => scale * prototype.derivative_reduced(r),
            Repr::Shifted { scale, divisor, .. } => scale / divisor / (1.0 + r.cos()),
            Repr::Saturated(sat) => {
                if r > sat.core_hi {
                    sat.delta / (PI - sat.core_hi)
                } else if r < sat.core_lo {
                    sat.delta / (sat.core_lo + PI)
                } else {
                    sat.inner.derivative_reduced(r)
                }
            }
            Repr::Piecewise(p) => p.derivative(r),
        }
    }

    /// The unique `s ∈ (-π, π)` with `f(s) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64, CouplingError> {
        if !y.is_finite() {
            let (lower, upper) = self.range();
            return Err(CouplingError::OutOfRange { y, lower, upper });
        }
        match &self.repr {
            Repr::TanHalf { gain, offset } => Ok(2.0 * ((y - offset) / gain).atan()),
            Repr::Scaled { scale, prototype } => prototype.inverse(y / scale).map_err(|e| match e {
                CouplingError::OutOfRange { .. } => {
                    let (lower, upper) = self.range();
                    CouplingError::OutOfRange { y, lower, upper }
                }
                other => other,
            }),
            Repr::Shifted { scale, shift, divisor, bias } => {
                Ok(2.0 * ((y - bias) * divisor / scale - shift).atan())
            }
            Repr::Saturated(sat) => {
                if !(y > sat.lower && y < sat.upper) {
                    return Err(CouplingError::OutOfRange { y, lower: sat.lower, upper: sat.upper });
                }
                if y > sat.upper - sat.delta {
                    Ok(PI - (sat.upper - y) * (PI - sat.core_hi) / sat.delta)
                } else if y < sat.lower + sat.delta {
                    Ok(-PI + (y - sat.lower) * (sat.core_lo + PI) / sat.delta)
                } else {
                    sat.inner.inverse(y)
                }
            }
            Repr::Piecewise(p) => Ok(p.inverse(y)),
        }
    }

    /// Value with the inverse clamped to the closure of the range: values
    /// at or beyond the saturation limits map to `±π`.
    pub(crate) fn inverse_clamped(&self, y: f64) -> f64 {
        let (lo, hi) = self.range();
        if y <= lo {
            -PI
        } else if y >= hi {
            PI
        } else {
            self.inverse(y).unwrap_or(if y > 0.0 { PI } else { -PI })
        }
    }
}

/// Fritsch–Butland slopes: weighted harmonic means of adjacent secants in
/// the interior, adjacent secants at the ends.
fn pchip_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let d: Vec<f64> = knots.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for k in 1..n - 1 {
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
    }
    m
}

impl Piecewise {
    fn tail_gain(&self, k: usize) -> f64 {
        let c = (self.knots[k].0 / 2.0).cos();
        2.0 * self.slopes[k] * c * c
    }

    fn segment(&self, r: f64) -> usize {
        // index k with knots[k].0 <= r < knots[k+1].0, clamped to valid segments
        let idx = self.knots.partition_point(|&(s, _)| s <= r);
        idx.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn hermite(&self, k: usize, r: f64) -> (f64, f64) {
        let (s0, y0) = self.knots[k];
        let (s1, y1) = self.knots[k + 1];
        let h = s1 - s0;
        let t = (r - s0) / h;
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let slope = (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1;
        (value, slope)
    }

    fn eval(&self, r: f64) -> f64 {
        let last = self.knots.len() - 1;
        let (s0, y0) = self.knots[0];
        let (sl, yl) = self.knots[last];
        if r < s0 {
            y0 + self.tail_gain(0) * ((r / 2.0).tan() - (s0 / 2.0).tan())
        } else if r > sl {
            yl + self.tail_gain(last) * ((r / 2.0).tan() - (sl / 2.0).tan())
        } else {
            self.hermite(self.segment(r), r).0
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        let last = self.knots.len() - 1;
        if r < self.knots[0].0 {
            self.tail_gain(0) / (1.0 + r.cos())
        } else if r > self.knots[last].0 {
            self.tail_gain(last) / (1.0 + r.cos())
        } else {
            self.hermite(self.segment(r), r).1
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        let last = self.knots.len() - 1;
        let (s0, y0) = self.knots[0];
        let (sl, yl) = self.knots[last];
        if y < y0 {
            return 2.0 * ((s0 / 2.0).tan() + (y - y0) / self.tail_gain(0)).atan();
        }
        if y > yl {
            return 2.0 * ((sl / 2.0).tan() + (y - yl) / self.tail_gain(last)).atan();
        }
        let k = self
            .knots
            .partition_point(|&(_, v)| v <= y)
            .saturating_sub(1)
            .min(last - 1);
        if y == self.knots[k].1 {
            return self.knots[k].0;
        }
        if y == self.knots[k + 1].1 {
            return self.knots[k + 1].0;
        }
        let (mut lo, mut hi) = (self.knots[k].0, self.knots[k + 1].0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.hermite(k, mid).0 < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
