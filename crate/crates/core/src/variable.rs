//! Optimal transport when the frequency can be switched inside a band.
//!
//! Everything here is in scaled units: distance 1, `a_max = 1`, so
//! `τ_abs = 2` and `ω_res = 2π`. The optimum keeps the symmetric
//! acceleration pattern of the fixed case (switch offset `τ1` about the
//! midpoint) and switches `ω` between `ω−` and `ω+` at the zeros of `p2`,
//! which are spaced by `π/ω±` outward from the midpoint. The number of
//! `ω` intervals per half is the [`SequenceKind`].
//!
//! For each kind, `ξ1(0) = 0` gives `cos(ω+ τ1) = rhs(τ_f)`, and the
//! distance condition is `1 = ¼τ_f² − 2τ1²`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Protocol, Segment};
use crate::error::{Error, Result};
use crate::fixed;
use crate::roots;

/// `rhs(τ_f = 2)` at or above `1 − TABS_TOL` puts a band in the `τ_abs`
/// region.
pub const TABS_TOL: f64 = 1e-12;

const SCAN_POINTS: usize = 4096;
const TAU_ABS: f64 = 2.0;
const OMEGA_RES: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub omega_minus: f64,
    pub omega_plus: f64,
}

impl Band {
    pub fn new(omega_minus: f64, omega_plus: f64) -> Self {
        Band {
            omega_minus,
            omega_plus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, p) = (self.omega_minus, self.omega_plus);
        if !(m.is_finite() && p.is_finite() && m >= 0.0 && p > 0.0 && m <= p) {
            return Err(Error::invalid(format!(
                "band must satisfy 0 <= omega_minus <= omega_plus, omega_plus > 0; got [{m}, {p}]"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, other: &Band) -> bool {
        self.omega_minus <= other.omega_minus && other.omega_plus <= self.omega_plus
    }

    /// `π/ω−`, infinite for `ω− = 0`.
    fn half_period_minus(&self) -> f64 {
        if self.omega_minus == 0.0 {
            f64::INFINITY
        } else {
            PI / self.omega_minus
        }
    }

    fn half_period_plus(&self) -> f64 {
        PI / self.omega_plus
    }

    fn ratio_sq(&self) -> f64 {
        let r = self.omega_plus / self.omega_minus;
        r * r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SequenceKind {
    /// `ω+` throughout.
    SinglePlus,
    /// `ω−ω+ | ω+ω−`.
    TwoInterval,
    /// `ω+ω−ω+ | ω+ω−ω+`.
    ThreeInterval,
    /// `ω−ω+ω−ω+ | ω+ω−ω+ω−`.
    FourInterval,
}

impl SequenceKind {
    pub const ALL: [SequenceKind; 4] = [
        SequenceKind::SinglePlus,
        SequenceKind::TwoInterval,
        SequenceKind::ThreeInterval,
        SequenceKind::FourInterval,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SequenceKind::SinglePlus => "SinglePlus",
            SequenceKind::TwoInterval => "TwoInterval",
            SequenceKind::ThreeInterval => "ThreeInterval",
            SequenceKind::FourInterval => "FourInterval",
        }
    }

    pub fn intervals_per_half(&self) -> usize {
        *self as usize + 1
    }

    /// Half-open window `(lo, hi]` for `τ_f/2` in which this kind applies.
    pub fn window(&self, band: &Band) -> (f64, f64) {
        let hp = band.half_period_plus();
        let hm = band.half_period_minus();
        match self {
            SequenceKind::SinglePlus => (0.0, hp),
            SequenceKind::TwoInterval => (hp, hp + hm),
            SequenceKind::ThreeInterval => (hp + hm, 2.0 * hp + hm),
            SequenceKind::FourInterval => (2.0 * hp + hm, 2.0 * hp + 2.0 * hm),
        }
    }

    fn in_window(&self, band: &Band, half: f64) -> bool {
        let (lo, hi) = self.window(band);
        match self {
            SequenceKind::SinglePlus => half > 0.0 && half <= hi,
            _ => half > lo && half <= hi,
        }
    }

    /// The kind whose window contains `τ_f/2 = half`.
    pub fn for_half(band: &Band, half: f64) -> Option<SequenceKind> {
        Self::ALL.into_iter().find(|k| k.in_window(band, half))
    }

    /// Left-half `ω` intervals from `−τ_f/2` to `0` as `(ω, duration)`.
    fn left_intervals(&self, band: &Band, half: f64) -> Vec<(f64, f64)> {
        let (wm, wp) = (band.omega_minus, band.omega_plus);
        let hp = band.half_period_plus();
        let hm = band.half_period_minus();
        match self {
            SequenceKind::SinglePlus => vec![(wp, half)],
            SequenceKind::TwoInterval => vec![(wm, half - hp), (wp, hp)],
            SequenceKind::ThreeInterval => vec![(wp, half - hp - hm), (wm, hm), (wp, hp)],
            SequenceKind::FourInterval => {
                vec![(wm, half - 2.0 * hp - hm), (wp, hp), (wm, hm), (wp, hp)]
            }
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionClass {
    /// The band contains a multiple of `ω_res`.
    Resonant,
    /// Only `ω+` is used.
    SinglePlus,
    Interior(SequenceKind),
    /// `τ_abs` is reachable through a sub-band; the protocol is not unique.
    TAbsRegion,
}

impl RegionClass {
    pub fn label(&self) -> &'static str {
        match self {
            RegionClass::Resonant => "Resonant",
            RegionClass::SinglePlus => "SinglePlus",
            RegionClass::Interior(_) => "Interior",
            RegionClass::TAbsRegion => "TAbsRegion",
        }
    }
}

impl fmt::Display for RegionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionClass::Interior(k) => write!(f, "Interior({k})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSolution {
    pub band: Band,
    pub tau_f: f64,
    pub tau1: f64,
    pub region: RegionClass,
    pub sequence: SequenceKind,
    /// The band actually used by the protocol; differs from `band` only in
    /// the `τ_abs` region and for resonant bands.
    pub sub_band: Band,
    /// Scaled protocol (`a_max = 1`).
    pub protocol: Protocol,
}

// sin(x)/x
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Right-hand side of `cos(ω+ τ1) = rhs` for the given kind. Does not check
/// the window.
fn rhs_unchecked(band: &Band, tau_f: f64, kind: SequenceKind) -> f64 {
    let (wm, wp) = (band.omega_minus, band.omega_plus);
    let half = 0.5 * tau_f;
    let hp = band.half_period_plus();
    match kind {
        SequenceKind::SinglePlus => {
            let c = (0.25 * wp * tau_f).cos();
            c * c
        }
        SequenceKind::TwoInterval => {
            let delta = half - hp;
            let s = 0.5 * wp * delta * sinc(0.5 * wm * delta);
            s * s
        }
        SequenceKind::ThreeInterval => {
            let delta = half - hp - band.half_period_minus();
            let s = (0.5 * wp * delta).sin();
            band.ratio_sq() - s * s
        }
        SequenceKind::FourInterval => {
            let delta = half - 2.0 * hp - band.half_period_minus();
            let s = (0.5 * wm * delta).sin();
            let r2 = band.ratio_sq();
            r2 - 1.0 + r2 * s * s
        }
    }
}

/// `cos(ω+ τ1)` for `kind` at `τ_f`, checking the window.
pub fn sequence_rhs(band: &Band, tau_f: f64, kind: SequenceKind) -> Result<f64> {
    band.validate()?;
    let half = 0.5 * tau_f;
    if !kind.in_window(band, half) {
        let (lo, hi) = kind.window(band);
        return Err(Error::OutsideWindow {
            kind: kind.name(),
            half,
            lo,
            hi,
        });
    }
    if kind != SequenceKind::SinglePlus && band.omega_minus == 0.0 && kind != SequenceKind::TwoInterval {
        return Err(Error::OutsideWindow {
            kind: kind.name(),
            half,
            lo: f64::INFINITY,
            hi: f64::INFINITY,
        });
    }
    Ok(rhs_unchecked(band, tau_f, kind))
}

/// Switch offset `τ1 ∈ [0, π/(2ω+)]` for the given kind at `τ_f`;
/// `None` when `rhs > 1`, which signals that `τ_abs` is within reach.
pub fn tau1_for_sequence(band: &Band, tau_f: f64, kind: SequenceKind) -> Result<Option<f64>> {
    let rhs = sequence_rhs(band, tau_f, kind)?;
    Ok(tau1_from_rhs(rhs, band.omega_plus))
}

fn tau1_from_rhs(rhs: f64, wp: f64) -> Option<f64> {
    (rhs <= 1.0).then(|| rhs.max(0.0).acos() / wp)
}

/// Time at which the two-interval `τ1` reaches zero:
/// `τ_opt/2 = π/ω+ + 2·asin(ω−/ω+)/ω−`.
pub fn tau_opt(band: &Band) -> Result<f64> {
    band.validate()?;
    let r = band.omega_minus / band.omega_plus;
    let asin_over = if r < 1e-8 { 1.0 + r * r / 6.0 } else { r.asin() / r };
    Ok(2.0 * (PI + 2.0 * asin_over) / band.omega_plus)
}

fn d0_gap(tau_f: f64, tau1: f64) -> f64 {
    0.25 * tau_f * tau_f - 2.0 * tau1 * tau1 - 1.0
}

fn gap_for(band: &Band, tau_f: f64, kind: SequenceKind) -> Option<f64> {
    let rhs = rhs_unchecked(band, tau_f, kind);
    tau1_from_rhs(rhs, band.omega_plus).map(|t1| d0_gap(tau_f, t1))
}

/// Smallest resonance `2πn` inside the band, if any.
fn resonance_in(band: &Band) -> Option<f64> {
    let n = (band.omega_minus / OMEGA_RES).ceil().max(1.0);
    let w = n * OMEGA_RES;
    (w <= band.omega_plus).then_some(w)
}

/// `rhs` at `τ_f = 2` using the kind whose window contains 1.
fn tabs_rhs(band: &Band) -> Option<(SequenceKind, f64)> {
    let kind = SequenceKind::for_half(band, 1.0)?;
    Some((kind, rhs_unchecked(band, TAU_ABS, kind)))
}

fn is_tabs(band: &Band) -> bool {
    matches!(tabs_rhs(band), Some((_, r)) if r >= 1.0 - TABS_TOL)
}

const JUNCTION_TOL: f64 = 1e-12;

/// Solves the distance condition within one kind's window.
fn solve_kind(band: &Band, kind: SequenceKind) -> Option<(f64, f64)> {
    let (lo_half, hi_half) = kind.window(band);
    if !lo_half.is_finite() {
        return None;
    }
    let tol = roots::ABS_TOL;
    let tau = match kind {
        SequenceKind::SinglePlus => return None,
        SequenceKind::TwoInterval => {
            // ¼τ² − 2τ1² increases from the window start to τ_opt, where τ1 = 0.
            let lo = (2.0 * lo_half).max(TAU_ABS);
            let hi = tau_opt(band).ok()?.min(2.0 * hi_half);
            if hi <= lo {
                return None;
            }
            // rounding can push rhs a hair above 1 at τ_opt itself
            let g = |t: f64| gap_for(band, t, kind).unwrap_or_else(|| d0_gap(t, 0.0));
            let (glo, ghi) = (g(lo), g(hi));
            if glo > 0.0 && glo <= JUNCTION_TOL {
                // the root sits on the junction with SinglePlus
                lo
            } else if glo > 0.0 || ghi.is_nan() || ghi < 0.0 {
                return None;
            } else {
                roots::bisect(g, lo, hi, tol).ok()?
            }
        }
        _ => {
            let lo = (2.0 * lo_half).max(TAU_ABS);
            let hi = 2.0 * hi_half;
            if hi <= lo {
                return None;
            }
            roots::first_root_scan(|t| gap_for(band, t, kind), lo, hi, SCAN_POINTS, tol)?
        }
    };
    let tau1 = tau1_from_rhs(rhs_unchecked(band, tau, kind), band.omega_plus)?;
    Some((tau, tau1))
}

struct Analysis {
    region: RegionClass,
    sequence: SequenceKind,
    tau_f: f64,
    tau1: f64,
    sub_band: Band,
}

fn analyze(band: &Band) -> Result<Analysis> {
    band.validate()?;
    if let Some(w) = resonance_in(band) {
        return Ok(Analysis {
            region: RegionClass::Resonant,
            sequence: SequenceKind::SinglePlus,
            tau_f: TAU_ABS,
            tau1: 0.0,
            sub_band: Band::new(w, w),
        });
    }
    if band.omega_minus > OMEGA_RES && band.omega_plus < 2.0 * OMEGA_RES {
        // handled below
    } else if band.omega_minus > OMEGA_RES {
        return Err(Error::UnsupportedWindow {
            omega_minus: band.omega_minus,
            omega_plus: band.omega_plus,
        });
    }

    if is_tabs(band) {
        let sub = arc_subband_unchecked(band);
        let kind = SequenceKind::for_half(&sub, 1.0).unwrap_or(SequenceKind::TwoInterval);
        return Ok(Analysis {
            region: RegionClass::TAbsRegion,
            sequence: kind,
            tau_f: TAU_ABS,
            tau1: 0.0,
            sub_band: sub,
        });
    }

    let (tf, t1, _) = fixed::solve_scaled(band.omega_plus)?;
    // the two solutions coincide on the window edge; rounding may land
    // either side of it
    if 0.5 * tf <= band.half_period_plus() * (1.0 + JUNCTION_TOL) {
        return Ok(Analysis {
            region: RegionClass::SinglePlus,
            sequence: SequenceKind::SinglePlus,
            tau_f: tf,
            tau1: t1,
            sub_band: *band,
        });
    }

    for kind in &SequenceKind::ALL[1..] {
        if let Some((tau_f, tau1)) = solve_kind(band, *kind) {
            return Ok(Analysis {
                region: RegionClass::Interior(*kind),
                sequence: *kind,
                tau_f,
                tau1,
                sub_band: *band,
            });
        }
    }
    Err(Error::NoRoot(format!(
        "no sequence up to FourInterval solves band [{}, {}]",
        band.omega_minus, band.omega_plus
    )))
}

/// Region of the band.
pub fn classify(band: &Band) -> Result<RegionClass> {
    analyze(band).map(|a| a.region)
}

/// Scaled protocol for the given kind, `τ_f` and `τ1`.
pub fn variable_protocol(band: &Band, kind: SequenceKind, tau_f: f64, tau1: f64) -> Protocol {
    let half = 0.5 * tau_f;
    let mut left: Vec<Segment> = Vec::new();
    let mut t = -half;
    for (w, dur) in kind.left_intervals(band, half) {
        let dur = dur.max(0.0);
        let end = t + dur;
        if end <= -tau1 || tau1 == 0.0 && end <= 0.0 && t < 0.0 && end < 0.0 {
            left.push(Segment::new(dur, 1, w));
        } else if t >= -tau1 {
            left.push(Segment::new(dur, -1, w));
        } else {
            left.push(Segment::new(-tau1 - t, 1, w));
            left.push(Segment::new(end + tau1, -1, w));
        }
        t = end;
    }
    let right: Vec<Segment> = left
        .iter()
        .rev()
        .map(|s| Segment::new(s.duration, -s.u, s.omega))
        .collect();
    left.extend(right);
    Protocol::new(1.0, left).compacted()
}

/// Time-optimal transport for a frequency band.
pub fn solve_variable(band: &Band) -> Result<VariableSolution> {
    let a = analyze(band)?;
    let protocol = match a.region {
        RegionClass::Resonant | RegionClass::SinglePlus => {
            let w = a.sub_band.omega_plus;
            fixed::fixed_protocol(a.tau_f, a.tau1, w, 1.0)
        }
        _ => variable_protocol(&a.sub_band, a.sequence, a.tau_f, a.tau1),
    };
    Ok(VariableSolution {
        band: *band,
        tau_f: a.tau_f,
        tau1: a.tau1,
        region: a.region,
        sequence: a.sequence,
        sub_band: a.sub_band,
        protocol,
    })
}

/// Admissible `ω+` range for `kind` at `τ_f = 2`, given `ω−`.
fn boundary_range(omega_minus: f64, kind: SequenceKind) -> Option<(f64, f64)> {
    let m = omega_minus;
    let big = 64.0 * OMEGA_RES;
    // 1 − π/ω− (≤ 0 means π/ω− ≥ 1 and the window never ends)
    let q1 = if m > 0.0 { 1.0 - PI / m } else { f64::NEG_INFINITY };
    let q2 = if m > 0.0 { 1.0 - 2.0 * PI / m } else { f64::NEG_INFINITY };
    let (lo, hi) = match kind {
        SequenceKind::SinglePlus => return None,
        SequenceKind::TwoInterval => (m.max(PI), if q1 > 0.0 { PI / q1 } else { big }),
        SequenceKind::ThreeInterval => {
            if q1 <= 0.0 {
                return None;
            }
            ((PI / q1).max(m), 2.0 * PI / q1)
        }
        SequenceKind::FourInterval => {
            if q1 <= 0.0 {
                return None;
            }
            ((2.0 * PI / q1).max(m), if q2 > 0.0 { 2.0 * PI / q2 } else { big })
        }
    };
    Some((lo, hi.min(big)))
}

/// Lower edge of the `τ_abs` region: the smallest `ω+` in the kind's range
/// at which `rhs(τ_f = 2) = 1`.
pub fn boundary_curve(omega_minus: f64, kind: SequenceKind) -> Result<f64> {
    if !(omega_minus.is_finite() && omega_minus >= 0.0) {
        return Err(Error::invalid(format!("omega_minus must be >= 0, got {omega_minus}")));
    }
    let no_root = || {
        Error::NoRoot(format!(
            "{kind} boundary curve has no point at omega_minus = {omega_minus}"
        ))
    };
    let (lo, hi) = boundary_range(omega_minus, kind).ok_or_else(no_root)?;
    let f = |wp: f64| rhs_unchecked(&Band::new(omega_minus, wp), TAU_ABS, kind) - 1.0;
    if hi - lo <= 1e-12 * hi {
        return if f(hi).abs() <= 1e-9 { Ok(hi) } else { Err(no_root()) };
    }
    if f(lo).abs() <= 1e-12 {
        return Ok(lo);
    }
    roots::first_root_scan(|wp| Some(f(wp)), lo, hi, SCAN_POINTS, roots::ABS_TOL)
        .ok_or_else(no_root)
}

/// `(kind, rhs)` with the kind chosen by the window containing `τ_f/2 = 1`.
fn unified_tabs_rhs(omega_minus: f64, omega_plus: f64) -> f64 {
    tabs_rhs(&Band::new(omega_minus, omega_plus)).map_or(f64::NEG_INFINITY, |(_, r)| r)
}

fn arc_subband_unchecked(band: &Band) -> Band {
    let m = band.omega_minus;
    if unified_tabs_rhs(m, band.omega_plus) - 1.0 <= TABS_TOL {
        return *band;
    }
    let floor = m.max(PI);
    let n = SCAN_POINTS;
    let step = (band.omega_plus - floor) / n as f64;
    let mut above = band.omega_plus;
    for i in 1..=n {
        let wp = if i == n { floor } else { band.omega_plus - step * i as f64 };
        if unified_tabs_rhs(m, wp) < 1.0 {
            let (_, hi) = roots::bisect_predicate(
                |x| unified_tabs_rhs(m, x) >= 1.0,
                wp,
                above,
                200,
            );
            return Band::new(m, hi);
        }
        above = wp;
    }
    Band::new(m, floor)
}

/// Canonical `τ_abs` sub-band: keep `ω−`, lower `ω+` onto the boundary
/// curve. Resonant bands give the degenerate band at the resonance.
pub fn arc_subband(band: &Band) -> Result<Band> {
    band.validate()?;
    if let Some(w) = resonance_in(band) {
        return Ok(Band::new(w, w));
    }
    if !is_tabs(band) {
        return Err(Error::NotInTAbsRegion);
    }
    Ok(arc_subband_unchecked(band))
}

/// Points of the boundary arc reachable inside `band`: raising `ω̂−` from
/// `ω−` and taking the canonical `ω̂+` for each, while the band stays in
/// the `τ_abs` region. Every point yields `τ_abs`.
pub fn tabs_arc(band: &Band, samples: usize) -> Result<Vec<Band>> {
    arc_subband(band)?;
    let mut out = Vec::new();
    let n = samples.max(2);
    for i in 0..n {
        let m = band.omega_minus + (band.omega_plus - band.omega_minus) * i as f64 / (n - 1) as f64;
        let b = Band::new(m, band.omega_plus);
        if resonance_in(&b).is_none() && !is_tabs(&b) {
            break;
        }
        out.push(arc_subband(&b)?);
    }
    Ok(out)
}

// Three/Four junction condition: τ_f/2 = 2π/ω+ + π/ω−, where the
// three-interval rhs is (ω+/ω−)² − 1.
fn separator_gap(omega_minus: f64, omega_plus: f64) -> Option<f64> {
    let half = 2.0 * PI / omega_plus + PI / omega_minus;
    let r = omega_plus / omega_minus;
    tau1_from_rhs(r * r - 1.0, omega_plus).map(|t1| d0_gap(2.0 * half, t1))
}

/// `ω+` on the curve separating three- and four-interval optima at the
/// given `ω−`, for `2π ≤ ω− ≤ ω+ ≤ 4π`.
pub fn sequence_separator(omega_minus: f64) -> Result<f64> {
    if !(omega_minus.is_finite() && omega_minus > 0.0) {
        return Err(Error::invalid(format!("omega_minus must be > 0, got {omega_minus}")));
    }
    let lo = omega_minus;
    let hi = (2f64.sqrt() * omega_minus).min(2.0 * OMEGA_RES);
    if hi < lo {
        return Err(Error::NoRoot("empty separator range".into()));
    }
    roots::first_root_scan(|wp| separator_gap(omega_minus, wp), lo, hi, SCAN_POINTS, roots::ABS_TOL)
        .ok_or_else(|| Error::NoRoot(format!("no separator point at omega_minus = {omega_minus}")))
}

/// End points of the separator: on the `τ_abs` boundary (`τ1 = 0`,
/// `ω+ = √2 ω−`) and on the diagonal (`ω− = ω+`).
pub fn separator_endpoints() -> Result<(Band, f64)> {
    // τ1 = 0 end: 2π/(√2 ω−) + π/ω− = 1
    let s2 = 2f64.sqrt();
    let wm = roots::bisect(
        |m| 2.0 * PI / (s2 * m) + PI / m - 1.0,
        OMEGA_RES,
        2.0 * OMEGA_RES,
        roots::ABS_TOL,
    )?;
    let wd = roots::bisect(|w| separator_gap(w, w).unwrap_or(f64::NAN), OMEGA_RES, 2.0 * OMEGA_RES, roots::ABS_TOL)?;
    Ok((Band::new(wm, s2 * wm), wd))
}

/// Samples of the separator between its end points.
pub fn sequence_separator_curve(samples: usize) -> Result<Vec<Band>> {
    let (b, wd) = separator_endpoints()?;
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let m = b.omega_minus + (wd - b.omega_minus) * i as f64 / (n - 1) as f64;
            let p = if i == 0 {
                b.omega_plus
            } else if i == n - 1 {
                wd
            } else {
                sequence_separator(m)?
            };
            Ok(Band::new(m, p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub tau_f: f64,
    pub tau1: f64,
    pub region: RegionClass,
    pub sequence: SequenceKind,
}

/// Solves every band `(ω−, ω+)` of the grid product with `ω− ≤ ω+`.
/// Rows come in grid order (ω− outer).
pub fn sweep_surface(minus_grid: &[f64], plus_grid: &[f64]) -> Result<Vec<SurfaceRow>> {
    let cells: Vec<Band> = minus_grid
        .iter()
        .flat_map(|&m| plus_grid.iter().filter(move |&&p| m <= p).map(move |&p| Band::new(m, p)))
        .collect();
    cells
        .par_iter()
        .map(|b| {
            let s = solve_variable(b)?;
            Ok(SurfaceRow {
                omega_minus: b.omega_minus,
                omega_plus: b.omega_plus,
                tau_f: s.tau_f,
                tau1: s.tau1,
                region: s.region,
                sequence: s.sequence,
            })
        })
        .collect()
}

/// Complex oscillator states at the `ω` switches of the left half.
///
/// Starting at rest at `−τ_f/2`, each entry is `ξ1 + i·ξ̇1/ω` at the end of
/// an `ω` interval, in the convention of that interval (`ω = 0` intervals
/// store `ξ1 + i·ξ̇1`). The last entry is the midpoint state; at a valid
/// solution it is purely imaginary, `i·λ/ω+`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaChain {
    pub etas: Vec<Complex64>,
    /// `ξ̇1(0)`.
    pub lambda: f64,
}

impl EtaChain {
    pub fn build(band: &Band, kind: SequenceKind, tau_f: f64, tau1: f64) -> Self {
        let half = 0.5 * tau_f;
        // (ξ1, ξ̇1) carried across switches
        let (mut x, mut v) = (0.0f64, 0.0f64);
        let mut t = -half;
        let mut etas = Vec::new();
        for (w, dur) in kind.left_intervals(band, half) {
            let end = t + dur.max(0.0);
            let cut = (-tau1).clamp(t, end);
            for (a, b, u) in [(t, cut, 1.0), (cut, end, -1.0)] {
                let dt = b - a;
                if dt <= 0.0 {
                    continue;
                }
                if w > 0.0 {
                    // clockwise rotation about c = −u/ω²
                    let c = -u / (w * w);
                    let z = Complex64::new(x - c, v / w) * Complex64::from_polar(1.0, -w * dt);
                    x = c + z.re;
                    v = w * z.im;
                } else {
                    x += v * dt - 0.5 * u * dt * dt;
                    v -= u * dt;
                }
            }
            let scale = if w > 0.0 { w } else { 1.0 };
            etas.push(Complex64::new(x, v / scale));
            t = end;
        }
        EtaChain { etas, lambda: v }
    }

    /// `ξ1(0)`; zero at a valid solution.
    pub fn midpoint_displacement(&self) -> f64 {
        self.etas.last().map_or(0.0, |e| e.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{boundary_residual, simulate, PhaseState};
    use approx::assert_relative_eq;

    const S2: f64 = std::f64::consts::SQRT_2;

    fn closes(sol: &VariableSolution) -> bool {
        let tr = simulate(&sol.protocol, &PhaseState::ORIGIN, 0.05).unwrap();
        boundary_residual(&tr.final_state, 1.0, 1e-9).passed
    }

    #[test]
    fn all_kinds_reduce_to_fixed_on_diagonal() {
        for w in [1.0, 2.5, 4.0, 5.9, 7.0, 9.5, 12.0] {
            let b = Band::new(w, w);
            for kind in SequenceKind::ALL {
                let (lo, hi) = kind.window(&b);
                for j in 1..10 {
                    let half = lo + (hi - lo) * j as f64 / 10.0;
                    let tf = 2.0 * half;
                    let c = (0.25 * w * tf).cos();
                    assert_relative_eq!(rhs_unchecked(&b, tf, kind), c * c, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn rhs_continuous_across_windows() {
        let b = Band::new(3.3, 5.1);
        for (k1, k2) in [
            (SequenceKind::SinglePlus, SequenceKind::TwoInterval),
            (SequenceKind::TwoInterval, SequenceKind::ThreeInterval),
            (SequenceKind::ThreeInterval, SequenceKind::FourInterval),
        ] {
            let edge = 2.0 * k1.window(&b).1;
            assert_relative_eq!(rhs_unchecked(&b, edge, k1), rhs_unchecked(&b, edge, k2), epsilon = 1e-12);
        }
    }

    #[test]
    fn window_errors() {
        let b = Band::new(1.0, 2.0);
        assert!(matches!(
            tau1_for_sequence(&b, 100.0, SequenceKind::TwoInterval),
            Err(Error::OutsideWindow { .. })
        ));
        assert!(tau1_for_sequence(&Band::new(0.0, 2.0), 10.0, SequenceKind::ThreeInterval).is_err());
    }

    #[test]
    fn example3_values() {
        let wp = 5.0 * PI / 3.0;
        let b = Band::new(0.5 * wp, wp);
        assert_relative_eq!(tau_opt(&b).unwrap(), 10.0 * PI / 3.0 / wp, max_relative = 1e-12);
        let t1 = tau1_for_sequence(&b, tau_opt(&b).unwrap(), SequenceKind::TwoInterval).unwrap().unwrap();
        assert!(t1 < 1e-7);
        // SinglePlus at ω+τ_f = 10π/3
        let b = Band::new(0.5, 1.0);
        let t1 = tau1_for_sequence(&b, 10.0 * PI / 3.0, SequenceKind::SinglePlus);
        assert!(t1.is_err());
        let t1 = rhs_unchecked(&b, 10.0 * PI / 3.0, SequenceKind::SinglePlus).acos();
        assert_relative_eq!(t1, 0.75f64.acos(), max_relative = 1e-12);
    }

    #[test]
    fn tau_opt_limits() {
        assert_relative_eq!(tau_opt(&Band::new(3.0, 3.0)).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(tau_opt(&Band::new(0.0, 3.0)).unwrap(), (2.0 * PI + 4.0) / 3.0, max_relative = 1e-14);
        assert_relative_eq!(
            tau_opt(&Band::new(1e-9, 3.0)).unwrap(),
            (2.0 * PI + 4.0) / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn single_plus_threshold() {
        let s = solve_variable(&Band::new(0.0, PI / S2)).unwrap();
        assert_eq!(s.region, RegionClass::SinglePlus);
        assert_relative_eq!(s.tau_f, 2.0 * S2, max_relative = 1e-10);
        assert_relative_eq!(s.tau1, S2 / 2.0, max_relative = 1e-9);
        assert_eq!(classify(&Band::new(0.0, 0.5)).unwrap(), RegionClass::SinglePlus);
        let s = solve_variable(&Band::new(0.0, PI / S2 + 1e-3)).unwrap();
        assert_eq!(s.region, RegionClass::Interior(SequenceKind::TwoInterval));
        assert!(closes(&s));
    }

    #[test]
    fn example3_band_reaches_tabs() {
        let s = solve_variable(&Band::new(5.0 * PI / 6.0, 5.0 * PI / 3.0)).unwrap();
        assert_relative_eq!(s.tau_f, 2.0, epsilon = 1e-9);
        assert!(s.tau1 < 1e-9);
        assert!(closes(&s));
    }

    #[test]
    fn omega_abs_onset() {
        assert_eq!(classify(&Band::new(0.0, PI + 2.0 + 1e-6)).unwrap(), RegionClass::TAbsRegion);
        assert_eq!(
            classify(&Band::new(0.0, PI + 2.0 - 1e-6)).unwrap(),
            RegionClass::Interior(SequenceKind::TwoInterval)
        );
        let s = solve_variable(&Band::new(0.0, PI + 2.0)).unwrap();
        assert_eq!(s.tau_f, 2.0);
        assert!(closes(&s));
        assert_relative_eq!(boundary_curve(0.0, SequenceKind::TwoInterval).unwrap(), PI + 2.0, max_relative = 1e-12);
        assert_relative_eq!(boundary_curve(1e-6, SequenceKind::TwoInterval).unwrap(), PI + 2.0, max_relative = 1e-6);
    }

    #[test]
    fn resonant_bands() {
        let b = Band::new(2.0 * PI - 0.01, 2.0 * PI + 0.01);
        assert_eq!(classify(&b).unwrap(), RegionClass::Resonant);
        assert_eq!(arc_subband(&b).unwrap(), Band::new(2.0 * PI, 2.0 * PI));
        let s = solve_variable(&b).unwrap();
        assert_eq!(s.tau_f, 2.0);
        assert!(closes(&s));
        assert!(classify(&Band::new(13.0, 13.5)).is_err());
    }

    #[test]
    fn boundary_curve_landmarks() {
        assert_relative_eq!(boundary_curve(2.0 * PI, SequenceKind::TwoInterval).unwrap(), 2.0 * PI, max_relative = 1e-12);
        let wm = (0.5 + 0.5 * S2) * 2.0 * PI;
        let wp = (1.0 + 0.5 * S2) * 2.0 * PI;
        assert_relative_eq!(boundary_curve(wm, SequenceKind::ThreeInterval).unwrap(), wp, max_relative = 1e-9);
        assert_relative_eq!(boundary_curve(wm, SequenceKind::FourInterval).unwrap(), wp, max_relative = 1e-9);
        for m in [0.5, 1.5, 3.0, 4.5, 6.0] {
            let wp = boundary_curve(m, SequenceKind::TwoInterval).unwrap();
            let s = solve_variable(&Band::new(m, wp)).unwrap();
            assert_eq!(s.tau_f, 2.0);
            assert!(s.tau1 <= 1e-8);
            assert!(closes(&s), "m = {m}");
        }
    }

    #[test]
    fn arc_subband_examples() {
        let b = Band::new(0.0, 2.0 * PI * 0.9);
        assert_relative_eq!(arc_subband(&b).unwrap().omega_plus, PI + 2.0, max_relative = 1e-10);
        let b = Band::new(0.55 * 2.0 * PI, 0.95 * 2.0 * PI);
        let sub = arc_subband(&b).unwrap();
        assert!(b.contains(&sub));
        let s = solve_variable(&sub).unwrap();
        assert_eq!(s.tau_f, 2.0);
        assert!(closes(&s));
        let arc = tabs_arc(&b, 8).unwrap();
        assert!(arc.len() >= 2);
        for p in &arc {
            assert!(b.contains(p));
            assert!(closes(&solve_variable(p).unwrap()));
        }
        assert!(arc_subband(&Band::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn separator_landmarks() {
        let (b, wd) = separator_endpoints().unwrap();
        assert_relative_eq!(b.omega_minus, (0.5 + 0.5 * S2) * 2.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(b.omega_plus, (1.0 + 0.5 * S2) * 2.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(wd, 0.25 * 34f64.sqrt() * 2.0 * PI, max_relative = 1e-12);
        let curve = sequence_separator_curve(9).unwrap();
        assert!(curve.windows(2).all(|w| w[1].omega_plus < w[0].omega_plus));
    }

    #[test]
    fn interior_solutions_close_and_satisfy_distance() {
        for (m, p) in [(0.0, 3.0), (1.0, 4.0), (0.0, 4.0), (2.5 * PI, 3.0 * PI), (2.2 * PI, 2.4 * PI), (6.5, 6.9), (7.0, 7.6), (3.0, 3.5)] {
            let s = solve_variable(&Band::new(m, p)).unwrap();
            assert!(s.tau_f >= 2.0);
            if let RegionClass::Interior(kind) = s.region {
                let (lo, hi) = kind.window(&s.band);
                assert!(0.5 * s.tau_f > lo && 0.5 * s.tau_f <= hi);
                assert!(d0_gap(s.tau_f, s.tau1).abs() < 1e-10);
                let chain = EtaChain::build(&s.band, kind, s.tau_f, s.tau1);
                assert!(chain.midpoint_displacement().abs() < 1e-9, "{chain:?}");
            }
            assert!(closes(&s), "band ({m}, {p}): {s:?}");
        }
        let s = solve_variable(&Band::new(0.0, 4.0)).unwrap();
        assert_relative_eq!(s.tau_f, 2.1726, epsilon = 1e-4);
        let s = solve_variable(&Band::new(2.5 * PI, 3.0 * PI)).unwrap();
        assert_eq!(s.sequence, SequenceKind::ThreeInterval);
    }

    #[test]
    fn sweep_surface_rows() {
        let g: Vec<f64> = (0..6).map(|k| k as f64 * 1.2).collect();
        let rows = sweep_surface(&g, &g[1..]).unwrap();
        assert!(rows.iter().all(|r| r.tau_f >= 2.0 && r.omega_minus <= r.omega_plus));
        assert_eq!(rows.len(), 20);
    }
}
