//! Numerical certification against the maximum principle.
//!
//! Scaled state `ξ = (x_h, v_h, x_w, v_w)`, time `τ ∈ [−τ_f/2, τ_f/2]`,
//! controls `u = ±1` and `u1 = ω²`. The control Hamiltonian is
//!
//! ```text
//! H_c = −ξ4 + p1 ξ2 + p2(−ω² ξ1 − u) + p3 ξ4 + p4 u
//! ```
//!
//! so `p̈2 = −ω² p2`, `p1 = −ṗ2`, `p3 = c3` and `p4 = (1 − c3)τ + c4`.
//! `u = sign(p4 − p2)`, and `ω = ω+` where `p2 ξ1 < 0`, `ω−` where it is
//! positive. With `A = c4 = 0` and `B = −1`, `p2` starts as `−sin(ω+ τ)`
//! about the midpoint and is continued differentiably through the
//! protocol's own frequency intervals.

use serde::{Deserialize, Serialize};

use crate::dynamics::{advance, boundary_residual, BoundaryReport, PhaseState, Protocol};
use crate::error::{Error, Result};
use crate::fixed::FixedSolution;
use crate::variable::{Band, RegionClass, VariableSolution};

/// Tolerance for switching-function zeros, `p2·ξ1` at frequency switches
/// and Hamiltonian drift.
pub const PMP_TOL: f64 = 1e-8;
/// Boundary closure tolerance included in the report.
pub const CLOSURE_TOL: f64 = 1e-9;
/// Uniform samples per protocol, on top of every switch instant.
pub const SAMPLES: usize = 10_000;

// Below this |p4 − p2| (or |p2 ξ1|) a sample is treated as a zero.
const ZERO_BAND: f64 = 1e-9;

/// `p2 = a·cos(ωτ) + b·sin(ωτ)` on `[start, end]` (`p2 = a + b·τ` when
/// `ω = 0`), with `τ` measured from the protocol midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointPiece {
    pub start: f64,
    pub end: f64,
    pub omega: f64,
    pub a: f64,
    pub b: f64,
}

impl AdjointPiece {
    fn p2(&self, tau: f64) -> f64 {
        if self.omega > 0.0 {
            let (s, c) = (self.omega * tau).sin_cos();
            self.a * c + self.b * s
        } else {
            self.a + self.b * tau
        }
    }

    fn p2_dot(&self, tau: f64) -> f64 {
        if self.omega > 0.0 {
            let (s, c) = (self.omega * tau).sin_cos();
            self.omega * (self.b * c - self.a * s)
        } else {
            self.b
        }
    }

    fn from_values(start: f64, end: f64, omega: f64, at: f64, p2: f64, p2_dot: f64) -> Self {
        let (a, b) = if omega > 0.0 {
            let (s, c) = (omega * at).sin_cos();
            let q = p2_dot / omega;
            (p2 * c - q * s, p2 * s + q * c)
        } else {
            (p2 - p2_dot * at, p2_dot)
        };
        AdjointPiece {
            start,
            end,
            omega,
            a,
            b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointSolution {
    /// Coefficients of `p2` on the interval around the midpoint.
    pub a: f64,
    pub b: f64,
    pub c3: f64,
    pub c4: f64,
    /// Half the protocol duration; `τ = s − half` for protocol time `s`.
    pub half: f64,
    pub pieces: Vec<AdjointPiece>,
}

impl AdjointSolution {
    fn piece(&self, tau: f64) -> Option<&AdjointPiece> {
        self.pieces
            .iter()
            .find(|p| tau >= p.start && tau <= p.end)
            .or_else(|| self.pieces.last().filter(|p| tau > p.end))
            .or_else(|| self.pieces.first().filter(|p| tau < p.start))
    }

    pub fn p2(&self, tau: f64) -> f64 {
        self.piece(tau).map_or(0.0, |p| p.p2(tau))
    }

    pub fn p1(&self, tau: f64) -> f64 {
        -self.piece(tau).map_or(0.0, |p| p.p2_dot(tau))
    }

    pub fn p4(&self, tau: f64) -> f64 {
        (1.0 - self.c3) * tau + self.c4
    }

    /// `p4 − p2`; `u = +1` where positive.
    pub fn switching_function(&self, tau: f64) -> f64 {
        self.p4(tau) - self.p2(tau)
    }

    /// `H_c` for state `x` under controls `u`, `ω` at time `τ`.
    pub fn hamiltonian(&self, tau: f64, x: &PhaseState, u: f64, omega: f64) -> f64 {
        -x.v_w + self.p1(tau) * x.v_h + self.p2(tau) * (-omega * omega * x.x_h - u)
            + self.c3 * x.v_w
            + self.p4(tau) * u
    }
}

/// Outcome of the checks. `passed` requires zero violations and every
/// residual within tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub switching_sign_violations: usize,
    /// Largest `|p4 − p2|` at a `u` switch.
    pub max_switch_residual: f64,
    pub max_hamiltonian_deviation: f64,
    /// `|p2·ξ1|` at each frequency switch.
    pub omega_switch_residuals: Vec<f64>,
    pub omega_sign_violations: usize,
    pub boundary: BoundaryReport,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingCheck {
    pub violations: usize,
    pub max_switch_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaCheck {
    pub residuals: Vec<f64>,
    pub sign_violations: usize,
}

impl OmegaCheck {
    pub fn passed(&self) -> bool {
        self.sign_violations == 0 && self.residuals.iter().all(|r| *r <= PMP_TOL)
    }
}

// Frequency runs of the protocol as (τ_start, τ_end, ω).
fn omega_runs(protocol: &Protocol) -> Vec<(f64, f64, f64)> {
    let half = 0.5 * protocol.total_duration();
    let mut runs: Vec<(f64, f64, f64)> = Vec::new();
    let mut s = 0.0;
    for seg in protocol.segments.iter().filter(|g| g.duration > 0.0) {
        let (a, b) = (s - half, s + seg.duration - half);
        match runs.last_mut() {
            Some(r) if r.2 == seg.omega => r.1 = b,
            _ => runs.push((a, b, seg.omega)),
        }
        s += seg.duration;
    }
    runs
}

// p2 with p2(0) = 0, ṗ2(0) = b·ω(0), continued through the frequency runs.
fn build_pieces(protocol: &Protocol, b: f64) -> Result<Vec<AdjointPiece>> {
    let runs = omega_runs(protocol);
    let mid = runs
        .iter()
        .position(|r| r.0 <= 0.0 && 0.0 <= r.1)
        .ok_or_else(|| Error::InconsistentAdjoint("empty protocol".into()))?;
    let (s0, e0, w0) = runs[mid];
    let scale = if w0 > 0.0 { w0 } else { 1.0 };
    let mut pieces = vec![AdjointPiece::from_values(s0, e0, w0, 0.0, 0.0, b * scale); runs.len()];
    for i in mid + 1..runs.len() {
        let prev = pieces[i - 1];
        let (s, e, w) = runs[i];
        pieces[i] = AdjointPiece::from_values(s, e, w, s, prev.p2(s), prev.p2_dot(s));
    }
    for i in (0..mid).rev() {
        let next = pieces[i + 1];
        let (s, e, w) = runs[i];
        pieces[i] = AdjointPiece::from_values(s, e, w, e, next.p2(e), next.p2_dot(e));
    }
    Ok(pieces)
}

/// Fits the adjoint to a scaled protocol with switch offset `tau1`:
/// `B = −1`, `c4 = 0`, and `c3` so that `p4 = p2` at `τ = τ1`.
pub fn fit_adjoint(protocol: &Protocol, tau1: f64) -> Result<AdjointSolution> {
    if !(tau1.is_finite() && tau1 > 0.0) {
        return Err(Error::InconsistentAdjoint(format!("tau1 must be > 0, got {tau1}")));
    }
    let pieces = build_pieces(protocol, -1.0)?;
    let mut adj = AdjointSolution {
        a: 0.0,
        b: -1.0,
        c3: 0.0,
        c4: 0.0,
        half: 0.5 * protocol.total_duration(),
        pieces,
    };
    adj.c3 = 1.0 - adj.p2(tau1) / tau1;
    Ok(adj)
}

/// Adjoint for a fixed-frequency solution. Resonant solutions switch once,
/// at the midpoint; there `c3 = 1 + 2ω` keeps `p4 − p2` of one sign on each
/// side.
pub fn fit_adjoint_fixed(solution: &FixedSolution) -> Result<AdjointSolution> {
    let protocol = solution.scaled_protocol();
    let tau1 = solution.tau1();
    if solution.resonant {
        let w = solution.omega_scaled();
        let mut adj = fit_adjoint(&protocol, 1.0)?;
        adj.c3 = 1.0 + 2.0 * w;
        return Ok(adj);
    }
    if tau1 <= 0.0 {
        return Err(Error::InconsistentAdjoint(
            "t1 = 0 but Omega*t_f is not a multiple of 4*pi".into(),
        ));
    }
    fit_adjoint(&protocol, tau1)
}

/// Adjoint for a variable-frequency solution. In the `τ_abs` region and at
/// resonance the trivial branch `p2 ≡ 0`, `p4 = −τ` applies.
pub fn fit_adjoint_variable(solution: &VariableSolution) -> Result<AdjointSolution> {
    match solution.region {
        RegionClass::TAbsRegion | RegionClass::Resonant => {
            let half = 0.5 * solution.protocol.total_duration();
            let runs = omega_runs(&solution.protocol);
            Ok(AdjointSolution {
                a: 0.0,
                b: 0.0,
                c3: 2.0,
                c4: 0.0,
                half,
                pieces: runs
                    .into_iter()
                    .map(|(s, e, w)| AdjointPiece { start: s, end: e, omega: w, a: 0.0, b: 0.0 })
                    .collect(),
            })
        }
        _ => fit_adjoint(&solution.protocol, solution.tau1),
    }
}

// Walks the protocol, calling `f(τ, state, u, ω)` at every segment start and
// end and at uniform interior samples. States are exact.
fn walk<F: FnMut(f64, &PhaseState, f64, f64, bool)>(protocol: &Protocol, samples: usize, mut f: F) {
    let total = protocol.total_duration();
    if total <= 0.0 {
        return;
    }
    let half = 0.5 * total;
    let step = total / samples as f64;
    let mut start = PhaseState::ORIGIN;
    let mut k = 1usize;
    for seg in protocol.segments.iter().filter(|g| g.duration > 0.0) {
        let (u, w) = (f64::from(seg.u), seg.omega);
        f(start.t - half, &start, u, w, true);
        let end_t = start.t + seg.duration;
        while (k as f64) * step < end_t {
            let s = k as f64 * step;
            if s > start.t {
                let x = advance(&start, s - start.t, seg.u, w, protocol.a_max);
                f(s - half, &x, u, w, false);
            }
            k += 1;
        }
        let end = advance(&start, seg.duration, seg.u, w, protocol.a_max);
        f(end_t - half, &end, u, w, true);
        start = end;
    }
}

/// Switching law for `u`: `sign(p4 − p2) = u` away from switches, a zero of
/// `p4 − p2` at every switch and a sign change across it.
pub fn verify_switching(protocol: &Protocol, adjoint: &AdjointSolution) -> SwitchingCheck {
    let mut violations = 0usize;
    walk(protocol, SAMPLES, |tau, _, u, _, _| {
        let sf = adjoint.switching_function(tau);
        if sf.abs() > ZERO_BAND && sf.signum() != u {
            violations += 1;
        }
    });

    let half = 0.5 * protocol.total_duration();
    let delta = 1e-6 * half.max(1.0);
    let mut max_res = 0.0f64;
    let mut s = 0.0;
    let segs: Vec<_> = protocol.segments.iter().filter(|g| g.duration > 0.0).collect();
    for pair in segs.windows(2) {
        s += pair[0].duration;
        if pair[0].u == pair[1].u {
            continue;
        }
        let tau = s - half;
        let r = adjoint.switching_function(tau).abs();
        max_res = max_res.max(r);
        if r > PMP_TOL {
            violations += 1;
        }
        let (before, after) = (
            adjoint.switching_function(tau - delta),
            adjoint.switching_function(tau + delta),
        );
        if before.signum() == after.signum() {
            violations += 1;
        }
    }
    SwitchingCheck {
        violations,
        max_switch_residual: max_res,
    }
}

/// Largest `|H_c(τ) − H_c(−τ_f/2)|` along the exact trajectory, evaluated on
/// both sides of every switch.
pub fn verify_hamiltonian_constant(protocol: &Protocol, adjoint: &AdjointSolution) -> f64 {
    let mut h0: Option<f64> = None;
    let mut dev = 0.0f64;
    walk(protocol, SAMPLES, |tau, x, u, w, _| {
        let h = adjoint.hamiltonian(tau, x, u, w);
        let base = *h0.get_or_insert(h);
        dev = dev.max((h - base).abs());
    });
    dev
}

/// Switching law for the frequency: `ω = ω+` where `p2 ξ1 < 0` and `ω−`
/// where positive, `p2 ξ1 = 0` at each frequency switch and no switch at the
/// midpoint.
pub fn verify_omega_switching(protocol: &Protocol, band: &Band, adjoint: &AdjointSolution) -> OmegaCheck {
    let mut sign_violations = 0usize;
    let mut residuals = Vec::new();
    if band.omega_minus == band.omega_plus {
        return OmegaCheck {
            residuals,
            sign_violations,
        };
    }
    let mut prev_w: Option<f64> = None;
    walk(protocol, SAMPLES, |tau, x, _, w, boundary| {
        let q = adjoint.p2(tau) * x.x_h;
        if boundary {
            if let Some(pw) = prev_w {
                if pw != w {
                    residuals.push(q.abs());
                    if tau.abs() < 1e-12 {
                        sign_violations += 1;
                    }
                }
            }
            prev_w = Some(w);
            return;
        }
        if q.abs() <= ZERO_BAND {
            return;
        }
        let want = if q < 0.0 { band.omega_plus } else { band.omega_minus };
        if w != want {
            sign_violations += 1;
        }
    });
    OmegaCheck {
        residuals,
        sign_violations,
    }
}

fn report(
    protocol: &Protocol,
    adjoint: &AdjointSolution,
    omega: Option<OmegaCheck>,
) -> VerificationReport {
    let sw = verify_switching(protocol, adjoint);
    let h = verify_hamiltonian_constant(protocol, adjoint);
    let fin = protocol.state_at(&PhaseState::ORIGIN, protocol.total_duration());
    let boundary = boundary_residual(&fin, 1.0, CLOSURE_TOL);
    let om = omega.unwrap_or(OmegaCheck {
        residuals: Vec::new(),
        sign_violations: 0,
    });
    let passed = sw.violations == 0
        && sw.max_switch_residual <= PMP_TOL
        && h < PMP_TOL
        && om.passed()
        && boundary.passed;
    VerificationReport {
        switching_sign_violations: sw.violations,
        max_switch_residual: sw.max_switch_residual,
        max_hamiltonian_deviation: h,
        omega_switch_residuals: om.residuals,
        omega_sign_violations: om.sign_violations,
        boundary,
        passed,
    }
}

/// Checks a scaled fixed-frequency protocol against a given adjoint.
pub fn check_fixed(protocol: &Protocol, adjoint: &AdjointSolution) -> VerificationReport {
    report(protocol, adjoint, None)
}

/// Checks a scaled variable-frequency protocol against a given adjoint.
pub fn check_variable(protocol: &Protocol, band: &Band, adjoint: &AdjointSolution) -> VerificationReport {
    let om = verify_omega_switching(protocol, band, adjoint);
    report(protocol, adjoint, Some(om))
}

/// Fits the adjoint to the solution and runs every check.
pub fn certify_fixed(solution: &FixedSolution) -> Result<VerificationReport> {
    let adj = fit_adjoint_fixed(solution)?;
    Ok(check_fixed(&solution.scaled_protocol(), &adj))
}

pub fn certify_variable(solution: &VariableSolution) -> Result<VerificationReport> {
    let adj = fit_adjoint_variable(solution)?;
    let band = match solution.region {
        RegionClass::TAbsRegion | RegionClass::Resonant => {
            // no restriction on ω when p2 ≡ 0
            Band::new(solution.sub_band.omega_plus, solution.sub_band.omega_plus)
        }
        _ => solution.sub_band,
    };
    Ok(check_variable(&solution.protocol, &band, &adj))
}
