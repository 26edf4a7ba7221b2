//! Optimal transport at a fixed oscillator frequency.
//!
//! The optimal protocol is bang-bang and symmetric about `t_f/2`:
//! accelerate for `t_f/2 − t1`, decelerate for `t1`, accelerate for `t1`,
//! decelerate for the rest. `t1` follows from `t_f` by
//! `cos(Ω t1) = cos²(Ω t_f/4)` on `0 ≤ Ω t1 ≤ π/2`, and `t_f` from the
//! distance `d = ¼ a t_f² − 2 a t1²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Protocol, Scaling, Segment};
use crate::error::{Error, Result};
use crate::roots;

/// Frequencies below this multiple of `Ω_res` are refused.
pub const MIN_OMEGA_RATIO: f64 = 1e-12;
/// `|Ω t_f − 4πn|` below this counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

const MONOTONE_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    pub d: f64,
    pub a_max: f64,
    pub omega: f64,
}

impl TransportParams {
    pub fn new(d: f64, a_max: f64, omega: f64) -> Self {
        TransportParams { d, a_max, omega }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d", self.d), ("a_max", self.a_max), ("omega", self.omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSolution {
    pub params: TransportParams,
    pub t_f: f64,
    pub t1: f64,
    pub resonant: bool,
    pub protocol: Protocol,
    pub t_abs: f64,
    pub omega_res: f64,
}

impl FixedSolution {
    pub fn scaling(&self) -> Scaling {
        Scaling::new(self.params.d, self.params.a_max).expect("validated params")
    }

    pub fn tau_f(&self) -> f64 {
        self.scaling().time_to_scaled(self.t_f)
    }

    pub fn tau1(&self) -> f64 {
        self.scaling().time_to_scaled(self.t1)
    }

    /// Scaled frequency `Ω/Ω0`.
    pub fn omega_scaled(&self) -> f64 {
        self.scaling().freq_to_scaled(self.params.omega)
    }

    /// The protocol in scaled units (`a_max = 1`, distance 1).
    pub fn scaled_protocol(&self) -> Protocol {
        self.scaling().protocol_to_scaled(&self.protocol)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Transport time without oscillator: `2√(d/a_max)`.
pub fn t_abs(d: f64, a_max: f64) -> Result<f64> {
    positive("d", d)?;
    positive("a_max", a_max)?;
    Ok(2.0 * (d / a_max).sqrt())
}

/// Lowest frequency at which `T_abs` is achievable: `√(4π² a_max/d)`.
pub fn omega_res(d: f64, a_max: f64) -> Result<f64> {
    positive("d", d)?;
    positive("a_max", a_max)?;
    Ok(2.0 * PI * (a_max / d).sqrt())
}

// Ω t1 as a function of θ = Ω t_f/4. Equivalent to acos(cos²θ) but written
// via 1 − cos x = 2 sin²(x/2) so that it stays accurate near t1 = 0.
pub(crate) fn switch_angle(theta: f64) -> f64 {
    let s = theta.sin().abs() * std::f64::consts::FRAC_1_SQRT_2;
    2.0 * s.min(1.0).asin()
}

/// `t1` with `cos(Ω t1) = cos²(Ω t_f/4)` and `0 ≤ Ω t1 ≤ π/2`.
pub fn switch_offset(t_f: f64, omega: f64) -> Result<f64> {
    positive("t_f", t_f)?;
    positive("omega", omega)?;
    Ok(switch_angle(0.25 * omega * t_f) / omega)
}

/// Distance covered by the optimal protocol of duration `t_f`.
pub fn distance_for_time(t_f: f64, omega: f64, a_max: f64) -> Result<f64> {
    positive("a_max", a_max)?;
    let t1 = switch_offset(t_f, omega)?;
    Ok(a_max * (0.25 * t_f * t_f - 2.0 * t1 * t1))
}

/// Scaled residual `¼τ² − 2τ1² − 1` at scaled frequency `w`.
fn scaled_gap(tau: f64, w: f64) -> f64 {
    let tau1 = switch_angle(0.25 * w * tau) / w;
    0.25 * tau * tau - 2.0 * tau1 * tau1 - 1.0
}

/// Nearest `n ≥ 1` with `|w·2 − 4πn| < RESONANCE_TOL`, if any.
fn resonance_index(w: f64) -> Option<u64> {
    let n = (w / (2.0 * PI)).round();
    (n >= 1.0 && (2.0 * w - 4.0 * PI * n).abs() < RESONANCE_TOL).then_some(n as u64)
}

/// Scaled optimal `(τ_f, τ1, resonant)` for scaled frequency `w`
/// (distance 1, `a_max` 1).
pub(crate) fn solve_scaled(w: f64) -> Result<(f64, f64, bool)> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::invalid(format!("omega must be finite and > 0, got {w}")));
    }
    let w_res = 2.0 * PI;
    if w < MIN_OMEGA_RATIO * w_res {
        return Err(Error::FrequencyTooSmall {
            omega: w,
            limit: MIN_OMEGA_RATIO * w_res,
        });
    }
    if resonance_index(w).is_some() {
        return Ok((2.0, 0.0, true));
    }

    let lo: f64 = 2.0;
    let asym = asymptotic_scaled(w, 6.0);
    let mut hi = (1.01 * lo).max(1.2 * asym);
    let mut doublings = 0;
    while scaled_gap(hi, w) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 || !hi.is_finite() {
            return Err(Error::BracketFailure(format!(
                "no upper bracket for omega = {w} (scaled)"
            )));
        }
    }

    // The distance must increase along the bracket for the root to be unique.
    let mut prev = scaled_gap(lo, w);
    for i in 1..=MONOTONE_GRID {
        let t = lo + (hi - lo) * i as f64 / MONOTONE_GRID as f64;
        let g = scaled_gap(t, w);
        if g < prev {
            return Err(Error::NonMonotone { at: t });
        }
        prev = g;
    }

    let tau_f = roots::bisect(|t| scaled_gap(t, w), lo, hi, roots::ABS_TOL * lo)?;
    let tau1 = switch_angle(0.25 * w * tau_f) / w;
    Ok((tau_f, tau1, false))
}

/// Symmetric four-segment protocol (two segments when `t1 = 0`).
pub fn fixed_protocol(t_f: f64, t1: f64, omega: f64, a_max: f64) -> Protocol {
    let half = 0.5 * t_f;
    let segments = if t1 == 0.0 {
        vec![Segment::new(half, 1, omega), Segment::new(half, -1, omega)]
    } else {
        vec![
            Segment::new(half - t1, 1, omega),
            Segment::new(t1, -1, omega),
            Segment::new(t1, 1, omega),
            Segment::new(half - t1, -1, omega),
        ]
    };
    Protocol::new(a_max, segments)
}

/// Time-optimal transport for a fixed frequency.
pub fn solve_fixed(params: &TransportParams) -> Result<FixedSolution> {
    params.validate()?;
    let sc = Scaling::new(params.d, params.a_max)?;
    let w = sc.freq_to_scaled(params.omega);
    let (tau_f, tau1, resonant) = solve_scaled(w).map_err(|e| match e {
        Error::FrequencyTooSmall { omega, limit } => Error::FrequencyTooSmall {
            omega: sc.freq_from_scaled(omega),
            limit: sc.freq_from_scaled(limit),
        },
        other => other,
    })?;
    let t_f = sc.time_from_scaled(tau_f);
    let t1 = sc.time_from_scaled(tau1);
    Ok(FixedSolution {
        params: *params,
        t_f,
        t1,
        resonant,
        protocol: fixed_protocol(t_f, t1, params.omega, params.a_max),
        t_abs: t_abs(params.d, params.a_max)?,
        omega_res: omega_res(params.d, params.a_max)?,
    })
}

/// Whether the optimal wagon temporarily moves backwards.
///
/// The wagon velocity at `t_f/2` is `a(t_f/2 − 2t1)`, negative exactly when
/// `t1 > t_f/4`, i.e. when `Ω t_f < 2π`. With `d = π²a/(2Ω²)` at
/// `Ω t_f = 2π` this is `Ω² < Ω_res²/8`.
pub fn goes_backwards(params: &TransportParams) -> Result<bool> {
    params.validate()?;
    let wr = omega_res(params.d, params.a_max)?;
    Ok(params.omega * params.omega < 0.125 * wr * wr)
}

fn asymptotic_scaled(w: f64, coefficient: f64) -> f64 {
    2.0 * (coefficient / (PI * PI)).powf(0.25) * (w / (2.0 * PI)).powf(-0.5)
}

/// Small-frequency approximation
/// `t_f ≈ T_abs·(c/π²)^{1/4}·(Ω/Ω_res)^{−1/2}`; `c = 6` is the leading
/// term of the expansion, `c = 5.3` an empirical fit.
pub fn asymptotic_tf(params: &TransportParams, coefficient: f64) -> Result<f64> {
    params.validate()?;
    positive("coefficient", coefficient)?;
    let ta = t_abs(params.d, params.a_max)?;
    let wr = omega_res(params.d, params.a_max)?;
    Ok(ta * (coefficient / (PI * PI)).powf(0.25) * (params.omega / wr).powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedSweepRow {
    /// `d` for distance sweeps, `Ω` for frequency sweeps.
    pub abscissa: f64,
    /// `d/d_Ω` resp. `Ω/Ω_res`.
    pub scaled_abscissa: f64,
    pub t_f: f64,
    pub t_abs: f64,
    pub t1: f64,
    pub resonant: bool,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    grid.iter().try_for_each(|&v| positive(name, v))
}

/// Optimal time over a grid of distances; `d_Ω = 4π² a_max/Ω²`.
pub fn sweep_distance(omega: f64, a_max: f64, d_grid: &[f64]) -> Result<Vec<FixedSweepRow>> {
    positive("omega", omega)?;
    positive("a_max", a_max)?;
    check_grid("d", d_grid)?;
    let d_omega = 4.0 * PI * PI * a_max / (omega * omega);
    d_grid
        .par_iter()
        .map(|&d| {
            let s = solve_fixed(&TransportParams::new(d, a_max, omega))?;
            Ok(FixedSweepRow {
                abscissa: d,
                scaled_abscissa: d / d_omega,
                t_f: s.t_f,
                t_abs: s.t_abs,
                t1: s.t1,
                resonant: s.resonant,
            })
        })
        .collect()
}

/// Optimal time over a grid of frequencies.
pub fn sweep_omega(d: f64, a_max: f64, omega_grid: &[f64]) -> Result<Vec<FixedSweepRow>> {
    positive("d", d)?;
    positive("a_max", a_max)?;
    check_grid("omega", omega_grid)?;
    let wr = omega_res(d, a_max)?;
    omega_grid
        .par_iter()
        .map(|&omega| {
            let s = solve_fixed(&TransportParams::new(d, a_max, omega))?;
            Ok(FixedSweepRow {
                abscissa: omega,
                scaled_abscissa: omega / wr,
                t_f: s.t_f,
                t_abs: s.t_abs,
                t1: s.t1,
                resonant: s.resonant,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{boundary_residual, simulate, wagon_velocity_extrema, PhaseState};
    use approx::assert_relative_eq;

    #[test]
    fn t_abs_and_omega_res() {
        assert_eq!(t_abs(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(t_abs(4.0, 1.0).unwrap(), 4.0);
        assert_eq!(t_abs(1.0, 4.0).unwrap(), 1.0);
        assert_relative_eq!(omega_res(1.0, 1.0).unwrap(), 2.0 * PI);
        assert_relative_eq!(omega_res(4.0 * PI * PI, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(t_abs(0.0, 1.0).is_err());
        assert!(omega_res(1.0, -2.0).is_err());
    }

    #[test]
    fn d_omega_units() {
        // distance-sweep unit: at Ω = 1, d_Ω = 4π², which is where Ω_res(d) = Ω.
        let d = 4.0 * PI * PI;
        assert_relative_eq!(omega_res(d, 1.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn switch_offset_examples() {
        assert!(switch_offset(4.0 * PI, 1.0).unwrap() < 1e-15);
        assert_relative_eq!(
            switch_offset(10.0 * PI / 3.0, 1.0).unwrap(),
            0.75f64.acos(),
            max_relative = 1e-14
        );
        let t1 = switch_offset(3.41 * PI, 1.0).unwrap();
        assert!((t1 / PI - 0.205).abs() < 0.205 * 0.01);
        // principal branch for a range of arguments
        for k in 0..200 {
            let tf = 0.05 + 0.1 * k as f64;
            let t1 = switch_offset(tf, 1.0).unwrap();
            assert!((0.0..=PI / 2.0 + 1e-15).contains(&t1));
            let c = (0.25 * tf).cos();
            assert_relative_eq!(t1.cos(), c * c, epsilon = 1e-14);
        }
    }

    #[test]
    fn distance_examples() {
        let tf = 4.0 * PI / 3.0;
        assert_relative_eq!(distance_for_time(tf, 3.0, 2.0).unwrap(), 0.25 * 2.0 * tf * tf, max_relative = 1e-15);
        let d = distance_for_time(3.41 * PI, 1.0, 1.0).unwrap();
        assert!((d / (2.82 * PI * PI) - 1.0).abs() < 0.01);
        let w = 1.7;
        assert_relative_eq!(
            distance_for_time(2.0 * PI / w, w, 1.0).unwrap(),
            PI * PI / (2.0 * w * w),
            max_relative = 1e-14
        );
    }

    #[test]
    fn reference_instance() {
        let s = solve_fixed(&TransportParams::new(2.82 * PI * PI, 1.0, 1.0)).unwrap();
        assert!((s.t_f / (3.41 * PI) - 1.0).abs() < 0.01, "t_f = {}", s.t_f / PI);
        assert!((s.t1 / (0.205 * PI) - 1.0).abs() < 0.01, "t1 = {}", s.t1 / PI);
        assert!(!s.resonant);
        assert_eq!(s.protocol.segments.len(), 4);
        let tr = simulate(&s.protocol, &PhaseState::ORIGIN, 0.01).unwrap();
        assert!(boundary_residual(&tr.final_state, s.params.d, 1e-9).passed);
    }

    #[test]
    fn resonant_instance() {
        let s = solve_fixed(&TransportParams::new(1.0, 1.0, 2.0 * PI)).unwrap();
        assert_eq!((s.t_f, s.t1, s.resonant), (2.0, 0.0, true));
        assert_eq!(s.protocol.segments.len(), 2);
        let s = solve_fixed(&TransportParams::new(4.0 * 4.0 * PI * PI, 1.0, 1.0)).unwrap();
        assert!(s.resonant);
        assert_relative_eq!(s.t_f, s.t_abs, max_relative = 1e-12);
    }

    #[test]
    fn refuses_tiny_frequency() {
        let e = solve_fixed(&TransportParams::new(1.0, 1.0, 1e-13)).unwrap_err();
        assert!(matches!(e, Error::FrequencyTooSmall { .. }));
        assert!(solve_fixed(&TransportParams::new(1.0, 1.0, 1e-9)).is_ok());
    }

    #[test]
    fn round_trip_over_range() {
        for k in 1..60 {
            let w = 0.3 * k as f64;
            for tf in [2.1, 3.0, 5.5, 11.0] {
                let d = distance_for_time(tf, w, 1.0).unwrap();
                if (w * tf / (4.0 * PI)).fract().abs() < 1e-6 {
                    continue;
                }
                let s = solve_fixed(&TransportParams::new(d, 1.0, w)).unwrap();
                assert_relative_eq!(s.t_f, tf, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn backwards_matches_velocity() {
        let wr = 2.0 * PI;
        for k in 1..100 {
            let r = 0.01 * k as f64;
            if (r - 0.125f64.sqrt()).abs() < 1e-6 {
                continue;
            }
            let p = TransportParams::new(1.0, 1.0, r * wr);
            let s = solve_fixed(&p).unwrap();
            assert_eq!(
                goes_backwards(&p).unwrap(),
                wagon_velocity_extrema(&s.protocol).goes_negative,
                "ratio {r}"
            );
        }
        assert!(goes_backwards(&TransportParams::new(1.0, 1.0, 0.3 * wr)).unwrap());
        assert!(!goes_backwards(&TransportParams::new(1.0, 1.0, 0.6 * wr)).unwrap());
        assert!(!goes_backwards(&TransportParams::new(1.0, 1.0, wr)).unwrap());
    }

    #[test]
    fn asymptotic_values() {
        let p = TransportParams::new(1.0, 1.0, 2.0 * PI);
        assert_relative_eq!(asymptotic_tf(&p, 6.0).unwrap() / 2.0, (6.0 / (PI * PI)).powf(0.25));
        let p = TransportParams::new(1.0, 1.0, 2.0 * PI * 1e-5);
        let ratio = asymptotic_tf(&p, 6.0).unwrap() / solve_fixed(&p).unwrap().t_f;
        assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn sweeps() {
        let rows = sweep_distance(1.0, 1.0, &[4.0 * PI * PI, 16.0 * PI * PI, 8.0 * PI * PI]).unwrap();
        assert_relative_eq!(rows[0].t_f / rows[0].t_abs, 1.0, max_relative = 1e-9);
        assert_relative_eq!(rows[1].t_f / rows[1].t_abs, 1.0, max_relative = 1e-9);
        assert!(rows[2].t_f > rows[2].t_abs);
        assert_relative_eq!(rows[2].scaled_abscissa, 2.0, max_relative = 1e-14);

        let grid: Vec<f64> = (1..=50).map(|k| 2.0 * PI * k as f64 / 50.0).collect();
        let rows = sweep_omega(1.0, 1.0, &grid).unwrap();
        assert!(rows.windows(2).all(|w| w[1].t_f < w[0].t_f));
        assert_relative_eq!(rows[49].t_f, 2.0);
        assert!(sweep_omega(1.0, 1.0, &[-1.0]).is_err());
    }
}
