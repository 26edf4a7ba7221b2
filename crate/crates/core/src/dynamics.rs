//! Exact propagation of the oscillator-in-a-wagon system.
//!
//! With `x_h` the oscillator displacement relative to the wagon and `x_w` the
//! wagon position, the equations of motion under wagon acceleration
//! `a(t) = u·a_max` are
//!
//! ```text
//! ẍ_h = −Ω² x_h − a(t)      ẍ_w = a(t)
//! ```
//!
//! For constant `u` and `Ω > 0`, `x_h + i·v_h/Ω` rotates clockwise with
//! angular velocity `Ω` about the point `−u·a_max/Ω²`. Propagation is done in
//! closed form segment by segment; there is no ODE integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::TransportParams;

/// Oscillator and wagon state at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub x_h: f64,
    pub v_h: f64,
    pub x_w: f64,
    pub v_w: f64,
}

impl PhaseState {
    /// Everything at rest at the origin, `t = 0`.
    pub const ORIGIN: PhaseState = PhaseState {
        t: 0.0,
        x_h: 0.0,
        v_h: 0.0,
        x_w: 0.0,
        v_w: 0.0,
    };

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x_h.is_finite()
            && self.v_h.is_finite()
            && self.x_w.is_finite()
            && self.v_w.is_finite()
    }
}

/// One constant-control piece: duration, acceleration sign and frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub u: i8,
    pub omega: f64,
}

impl Segment {
    pub fn new(duration: f64, u: i8, omega: f64) -> Self {
        Segment { duration, u, omega }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::invalid(format!(
                "segment duration must be finite and >= 0, got {}",
                self.duration
            )));
        }
        if self.u != 1 && self.u != -1 {
            return Err(Error::invalid(format!("segment u must be +1 or -1, got {}", self.u)));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::invalid(format!(
                "segment omega must be finite and >= 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// A bang-bang schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub a_max: f64,
    pub segments: Vec<Segment>,
}

impl Protocol {
    pub fn new(a_max: f64, segments: Vec<Segment>) -> Self {
        Protocol { a_max, segments }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_max.is_finite() && self.a_max > 0.0) {
            return Err(Error::invalid(format!("a_max must be > 0, got {}", self.a_max)));
        }
        self.segments.iter().try_for_each(Segment::validate)
    }

    /// Start time of every segment after the first, i.e. the instants at
    /// which `u` or `Ω` may change.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.segments.len().saturating_sub(1));
        for (i, s) in self.segments.iter().enumerate() {
            t += s.duration;
            if i + 1 < self.segments.len() {
                out.push(t);
            }
        }
        out
    }

    /// Exact state at time `t` (clamped to the protocol span), starting from
    /// `initial` at time `initial.t`.
    pub fn state_at(&self, initial: &PhaseState, t: f64) -> PhaseState {
        let mut state = *initial;
        let mut remaining = t - initial.t;
        for seg in &self.segments {
            if remaining <= 0.0 {
                break;
            }
            let dt = remaining.min(seg.duration);
            state = advance(&state, dt, seg.u, seg.omega, self.a_max);
            remaining -= dt;
        }
        state
    }

    /// Index of the segment active at offset `t` from the protocol start;
    /// at a boundary the later segment is returned.
    pub fn segment_index_at(&self, t: f64) -> Option<usize> {
        let mut end = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            end += s.duration;
            if t < end {
                return Some(i);
            }
        }
        self.segments.len().checked_sub(1)
    }

    /// Merges neighbouring segments with identical control and drops empty
    /// ones.
    pub fn compacted(&self) -> Protocol {
        let mut segments: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in self.segments.iter().filter(|s| s.duration > 0.0) {
            match segments.last_mut() {
                Some(last) if last.u == s.u && last.omega == s.omega => last.duration += s.duration,
                _ => segments.push(*s),
            }
        }
        Protocol::new(self.a_max, segments)
    }
}

/// Sampled trajectory; `final_state` is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    #[serde(rename = "final")]
    pub final_state: PhaseState,
}

/// Boundary-condition residuals at the end of a transport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub residual_xh: f64,
    pub residual_vh: f64,
    pub residual_vw: f64,
    pub residual_distance: f64,
    pub passed: bool,
}

impl BoundaryReport {
    pub fn max_abs(&self) -> f64 {
        self.residual_xh
            .abs()
            .max(self.residual_vh.abs())
            .max(self.residual_vw.abs())
            .max(self.residual_distance.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityExtrema {
    pub min: f64,
    pub max: f64,
    pub goes_negative: bool,
}

// Closed-form step; `dt` may be negative.
//
// For Ω > 0 this is the clockwise rotation of z = (x_h − c) + i·v_h/Ω about
// c = −u·a/Ω², written so that small Ω does not cancel catastrophically:
//   x' = x cos + (v/Ω) sin − u·a·2 sin²(Ωdt/2)/Ω²
//   v' = −Ω x sin + v cos − u·a sin/Ω
pub(crate) fn advance(s: &PhaseState, dt: f64, u: i8, omega: f64, a_max: f64) -> PhaseState {
    let a = f64::from(u) * a_max;
    let (x_h, v_h) = if omega > 0.0 {
        let th = omega * dt;
        let (sn, cs) = th.sin_cos();
        let half = (0.5 * th).sin();
        let x = s.x_h * cs + s.v_h * sn / omega - a * 2.0 * half * half / (omega * omega);
        let v = -omega * s.x_h * sn + s.v_h * cs - a * sn / omega;
        (x, v)
    } else {
        (s.x_h + s.v_h * dt - 0.5 * a * dt * dt, s.v_h - a * dt)
    };
    PhaseState {
        t: s.t + dt,
        x_h,
        v_h,
        x_w: s.x_w + s.v_w * dt + 0.5 * a * dt * dt,
        v_w: s.v_w + a * dt,
    }
}

/// Propagates `state` exactly through one segment.
pub fn propagate_segment(state: &PhaseState, seg: &Segment, a_max: f64) -> Result<PhaseState> {
    if !state.is_finite() {
        return Err(Error::invalid("non-finite phase state"));
    }
    if !(a_max.is_finite() && a_max > 0.0) {
        return Err(Error::invalid(format!("a_max must be > 0, got {a_max}")));
    }
    seg.validate()?;
    if seg.duration == 0.0 {
        return Ok(*state);
    }
    Ok(advance(state, seg.duration, seg.u, seg.omega, a_max))
}

/// Runs the whole protocol from `initial`.
///
/// Samples lie on the grid `initial.t + k·sample_step` together with every
/// segment boundary; each sample is propagated from its segment start, so
/// sampling does not accumulate error.
pub fn simulate(protocol: &Protocol, initial: &PhaseState, sample_step: f64) -> Result<Trajectory> {
    if !(sample_step.is_finite() && sample_step > 0.0) {
        return Err(Error::invalid(format!("sample_step must be > 0, got {sample_step}")));
    }
    if !initial.is_finite() {
        return Err(Error::invalid("non-finite initial state"));
    }
    protocol.validate()?;

    let t0 = initial.t;
    let mut samples = vec![*initial];
    let mut start = *initial;
    let mut k: u64 = 1;
    for seg in &protocol.segments {
        if seg.duration == 0.0 {
            continue;
        }
        let end_t = start.t + seg.duration;
        loop {
            let tk = t0 + k as f64 * sample_step;
            if tk >= end_t {
                break;
            }
            if tk > start.t {
                samples.push(advance(&start, tk - start.t, seg.u, seg.omega, protocol.a_max));
            }
            k += 1;
        }
        let mut end = advance(&start, seg.duration, seg.u, seg.omega, protocol.a_max);
        end.t = end_t;
        if end.t > samples.last().map_or(f64::NEG_INFINITY, |s| s.t) {
            samples.push(end);
        }
        start = end;
    }
    Ok(Trajectory {
        samples,
        final_state: start,
    })
}

/// Compares `final_state` against rest at distance `d` from a start at the
/// origin. Passes when every residual is within `tol·max(1, |d|)`.
pub fn boundary_residual(final_state: &PhaseState, d: f64, tol: f64) -> BoundaryReport {
    let mut r = BoundaryReport {
        residual_xh: final_state.x_h,
        residual_vh: final_state.v_h,
        residual_vw: final_state.v_w,
        residual_distance: final_state.x_w - d,
        passed: false,
    };
    let limit = tol * d.abs().max(1.0);
    r.passed = r.max_abs() <= limit;
    r
}

/// Wagon velocity extrema over a protocol started at rest. `v_w` is
/// piecewise linear, so the segment boundaries suffice. Values within
/// `1e-12·a_max·T` of zero count as zero.
pub fn wagon_velocity_extrema(protocol: &Protocol) -> VelocityExtrema {
    let scale = protocol.a_max * protocol.total_duration();
    let eps = 1e-12 * scale;
    let mut v = 0.0f64;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for s in &protocol.segments {
        v += f64::from(s.u) * protocol.a_max * s.duration;
        let vv = if v.abs() <= eps { 0.0 } else { v };
        lo = lo.min(vv);
        hi = hi.max(vv);
    }
    VelocityExtrema {
        min: lo,
        max: hi,
        goes_negative: lo < 0.0,
    }
}

/// Units in which the distance is 1 and `a_max` is 1: `d0 = d`,
/// `Ω0 = √(a_max/d)`, `τ = Ω0·t`, `ω = Ω/Ω0`. Then `τ_abs = 2` and
/// `ω_res = 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub d0: f64,
    pub omega0: f64,
}

impl Scaling {
    pub fn new(d: f64, a_max: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid(format!("d must be > 0, got {d}")));
        }
        if !(a_max.is_finite() && a_max > 0.0) {
            return Err(Error::invalid(format!("a_max must be > 0, got {a_max}")));
        }
        Ok(Scaling {
            d0: d,
            omega0: (a_max / d).sqrt(),
        })
    }

    pub fn a_max(&self) -> f64 {
        self.d0 * self.omega0 * self.omega0
    }

    pub fn time_to_scaled(&self, t: f64) -> f64 {
        t * self.omega0
    }
    pub fn time_from_scaled(&self, tau: f64) -> f64 {
        tau / self.omega0
    }
    pub fn freq_to_scaled(&self, omega: f64) -> f64 {
        omega / self.omega0
    }
    pub fn freq_from_scaled(&self, w: f64) -> f64 {
        w * self.omega0
    }

    pub fn state_to_scaled(&self, s: &PhaseState) -> PhaseState {
        let v0 = self.d0 * self.omega0;
        PhaseState {
            t: s.t * self.omega0,
            x_h: s.x_h / self.d0,
            v_h: s.v_h / v0,
            x_w: s.x_w / self.d0,
            v_w: s.v_w / v0,
        }
    }

    pub fn state_from_scaled(&self, s: &PhaseState) -> PhaseState {
        let v0 = self.d0 * self.omega0;
        PhaseState {
            t: s.t / self.omega0,
            x_h: s.x_h * self.d0,
            v_h: s.v_h * v0,
            x_w: s.x_w * self.d0,
            v_w: s.v_w * v0,
        }
    }

    /// Scaled protocols have `a_max = 1`.
    pub fn protocol_to_scaled(&self, p: &Protocol) -> Protocol {
        Protocol {
            a_max: p.a_max / self.a_max(),
            segments: p
                .segments
                .iter()
                .map(|s| Segment::new(s.duration * self.omega0, s.u, s.omega / self.omega0))
                .collect(),
        }
    }

    pub fn protocol_from_scaled(&self, p: &Protocol) -> Protocol {
        Protocol {
            a_max: p.a_max * self.a_max(),
            segments: p
                .segments
                .iter()
                .map(|s| Segment::new(s.duration / self.omega0, s.u, s.omega * self.omega0))
                .collect(),
        }
    }
}

/// A fixed-frequency problem in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledProblem {
    pub scaling: Scaling,
    /// Scaled oscillator frequency `Ω/Ω0`.
    pub omega: f64,
}

impl ScaledProblem {
    pub const TAU_ABS: f64 = 2.0;
    pub const OMEGA_RES: f64 = 2.0 * std::f64::consts::PI;
}

pub fn to_scaled(params: &TransportParams) -> Result<ScaledProblem> {
    params.validate()?;
    let scaling = Scaling::new(params.d, params.a_max)?;
    Ok(ScaledProblem {
        scaling,
        omega: scaling.freq_to_scaled(params.omega),
    })
}

pub fn from_scaled(p: &ScaledProblem) -> TransportParams {
    TransportParams {
        d: p.scaling.d0,
        a_max: p.scaling.a_max(),
        omega: p.scaling.freq_from_scaled(p.omega),
    }
}
