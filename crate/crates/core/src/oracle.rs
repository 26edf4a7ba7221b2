//! Brute-force optimality checks.
//!
//! The oracle does not use any of the analytic formulas. It simulates
//! candidate bang-bang protocols exactly and searches switch times on a grid,
//! asking for the smallest total time at which a candidate reaches distance 1
//! (scaled units) with everything at rest. Families:
//!
//! * symmetric: `u` odd about the midpoint with `m` switches per half; only
//!   `ξ1(mid) = 0` is needed, the wagon conditions follow from symmetry.
//! * asymmetric: `k` switches anywhere. `v_w(T) = 0` fixes the last switch,
//!   `x_w(T) = 1` the one before (monotone, bisection) and the oscillator
//!   leaves a two-dimensional residual over `(T, s_{k−2})`, solved from grid
//!   local minima by Newton steps.
//! * frequency patterns (variable runs): symmetric `u` with one switch per
//!   half, and `ω` alternating between the band edges over intervals whose
//!   lengths are searched, both with `ω+` and with `ω−` at the midpoint.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{advance, boundary_residual, PhaseState, Protocol, Scaling, Segment};
use crate::error::{Error, Result};
use crate::fixed::{solve_fixed, TransportParams};
use crate::variable::{solve_variable, Band, SequenceKind};

/// Boundary tolerance for accepted candidates (scaled).
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// The search horizon starts at `2·τ_abs` and doubles up to this (scaled).
pub const HORIZON_CAP: f64 = 64.0;

const TAU_ABS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Fixed runs: switches of `u`. Variable runs: switches of `ω`.
    pub max_switches: usize,
    /// Grid step in scaled time.
    pub grid_resolution: f64,
    /// Bisection halvings / Newton steps / coordinate passes after the grid.
    pub refine_iterations: usize,
    pub allow_asymmetric: bool,
    pub omega_patterns: Vec<SequenceKind>,
    /// Drop the oscillator conditions (a bare wagon).
    pub ignore_oscillator: bool,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            max_switches: 4,
            grid_resolution: 1e-2,
            refine_iterations: 60,
            allow_asymmetric: true,
            omega_patterns: SequenceKind::ALL.to_vec(),
            ignore_oscillator: false,
        }
    }
}

impl SearchSpec {
    /// Defaults for variable-frequency runs (six frequency switches).
    pub fn variable_default() -> Self {
        SearchSpec {
            max_switches: 6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_resolution.is_finite() && self.grid_resolution > 0.0) {
            return Err(Error::invalid(format!(
                "grid_resolution must be > 0, got {}",
                self.grid_resolution
            )));
        }
        if self.max_switches == 0 || self.max_switches > 6 {
            return Err(Error::invalid(format!(
                "max_switches must be in 1..=6, got {}",
                self.max_switches
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub family: String,
    pub best_t_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_t_f: f64,
    pub best_protocol: Protocol,
    pub analytic_t_f: f64,
    /// `best_t_f − analytic_t_f`.
    pub margin: f64,
    pub best_family: String,
    pub families: Vec<FamilyOutcome>,
    /// Variable runs: whether an `ω−`-centred pattern beat every
    /// `ω+`-centred one by more than the grid tolerance.
    pub reversed_wins: bool,
}

impl OracleResult {
    pub fn relative_margin(&self) -> f64 {
        self.margin / self.analytic_t_f
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    dur: f64,
    u: i8,
    w: f64,
}

fn run(pieces: &[Piece]) -> PhaseState {
    let mut s = PhaseState::ORIGIN;
    for p in pieces {
        if p.dur > 0.0 {
            s = advance(&s, p.dur, p.u, p.w, 1.0);
        }
    }
    s
}

// Wagon only: (x_w, v_w) after the pieces.
fn run_wagon(pieces: &[Piece]) -> (f64, f64) {
    let (mut x, mut v) = (0.0, 0.0);
    for p in pieces {
        let a = f64::from(p.u);
        x += v * p.dur + 0.5 * a * p.dur * p.dur;
        v += a * p.dur;
    }
    (x, v)
}

fn to_protocol(pieces: &[Piece]) -> Protocol {
    Protocol::new(
        1.0,
        pieces
            .iter()
            .filter(|p| p.dur > 0.0)
            .map(|p| Segment::new(p.dur, p.u, p.w))
            .collect(),
    )
    .compacted()
}

fn closes(pieces: &[Piece], ignore_oscillator: bool) -> bool {
    let f = run(pieces);
    if ignore_oscillator {
        (f.x_w - 1.0).abs() <= FEASIBILITY_TOL && f.v_w.abs() <= FEASIBILITY_TOL
    } else {
        boundary_residual(&f, 1.0, FEASIBILITY_TOL).passed
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    t: f64,
    pieces: Vec<Piece>,
    family: String,
}

fn key(c: &Candidate) -> (f64, Vec<f64>) {
    (c.t, c.pieces.iter().map(|p| p.dur).collect())
}

// Total order on (t, durations) so parallel reductions are deterministic.
fn cmp_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    let (ka, kb) = (key(a), key(b));
    ka.0.total_cmp(&kb.0).then_with(|| {
        for (x, y) in ka.1.iter().zip(&kb.1) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        ka.1.len().cmp(&kb.1.len())
    })
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if cmp_candidates(&x, &y) == Ordering::Greater { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

// Symmetric protocol from its left half: mirrored in time with u negated.
fn mirror(left: &[Piece]) -> Vec<Piece> {
    let mut all = left.to_vec();
    all.extend(left.iter().rev().map(|p| Piece { dur: p.dur, u: -p.u, w: p.w }));
    all
}

// Left half of duration h with u = +1 then −1 after −tau1, over the given
// outward ω intervals (innermost first).
fn left_half(h: f64, tau1: f64, omegas_outward: &[(f64, f64)]) -> Vec<Piece> {
    // inward order with absolute start times
    let mut ivs: Vec<(f64, f64, f64)> = Vec::new();
    let mut end = 0.0;
    for (k, &(w, len)) in omegas_outward.iter().enumerate() {
        let last = k + 1 == omegas_outward.len();
        let start = if last { -h } else { (end - len).max(-h) };
        ivs.push((start, end, w));
        end = start;
        if end <= -h {
            break;
        }
    }
    ivs.reverse();
    let cut = -tau1;
    let mut out = Vec::with_capacity(ivs.len() + 1);
    for (a, b, w) in ivs {
        if b <= cut {
            out.push(Piece { dur: b - a, u: 1, w });
        } else if a >= cut {
            out.push(Piece { dur: b - a, u: -1, w });
        } else {
            out.push(Piece { dur: cut - a, u: 1, w });
            out.push(Piece { dur: b - cut, u: -1, w });
        }
    }
    out
}

// τ1 with 2·x_w(mid) = 1 for the half `h`, by bisection on the simulated
// wagon (distance decreases in τ1).
fn tau1_for_distance(h: f64) -> Option<f64> {
    if h < 1.0 {
        return None;
    }
    let dist = |t1: f64| {
        let (x, _) = run_wagon(&[Piece { dur: h - t1, u: 1, w: 0.0 }, Piece { dur: t1, u: -1, w: 0.0 }]);
        2.0 * x - 1.0
    };
    let (mut lo, mut hi) = (0.0, h);
    if dist(lo) <= 0.0 {
        return Some(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dist(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

// ξ1 at the midpoint for the symmetric one-switch-per-half protocol.
fn midpoint_residual(h: f64, omegas_outward: &[(f64, f64)]) -> Option<(f64, Vec<Piece>)> {
    let tau1 = tau1_for_distance(h)?;
    let left = left_half(h, tau1, omegas_outward);
    let x = run(&left).x_h;
    Some((x, left))
}

// First h ≥ 1 with a sign change of the midpoint residual, on a grid of
// `step`, refined by `iters` halvings.
fn first_feasible_half(
    omegas_outward: &[(f64, f64)],
    h_max: f64,
    step: f64,
    iters: usize,
    ignore_oscillator: bool,
) -> Option<(f64, Vec<Piece>)> {
    let f = |h: f64| -> Option<(f64, Vec<Piece>)> {
        let (x, left) = midpoint_residual(h, omegas_outward)?;
        Some((if ignore_oscillator { 0.0 } else { x }, left))
    };
    let (x0, left0) = f(1.0)?;
    if x0.abs() <= 1e-13 {
        return Some((1.0, left0));
    }
    let n = ((h_max - 1.0) / step).ceil() as usize;
    let mut prev = (1.0, x0);
    for i in 1..=n {
        let h = (1.0 + step * i as f64).min(h_max);
        let (x, _) = f(h)?;
        if x == 0.0 || x.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (prev.0, h);
            let mut flo = prev.1;
            for _ in 0..iters {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let (fm, _) = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let h_star = 0.5 * (lo + hi);
            let (_, left) = f(h_star)?;
            return Some((h_star, left));
        }
        prev = (h, x);
    }
    None
}

fn symmetric_one_switch(w: f64, spec: &SearchSpec, h_max: f64) -> Option<Candidate> {
    let (h, left) = first_feasible_half(
        &[(w, f64::INFINITY)],
        h_max,
        0.5 * spec.grid_resolution,
        spec.refine_iterations,
        spec.ignore_oscillator,
    )?;
    let pieces = mirror(&left);
    closes(&pieces, spec.ignore_oscillator).then(|| Candidate {
        t: 2.0 * h,
        pieces,
        family: "symmetric-1".into(),
    })
}

// Left half u: +, −, + with switches at −a > −b (a > b > 0), then the
// midpoint switch; the inner switch b follows from the distance.
fn symmetric_two_switch(w: f64, spec: &SearchSpec, h_max: f64) -> Option<Candidate> {
    let step = 0.5 * spec.grid_resolution;
    let build = |h: f64, a: f64, b: f64| {
        vec![
            Piece { dur: h - a, u: 1, w },
            Piece { dur: a - b, u: -1, w },
            Piece { dur: b, u: 1, w },
        ]
    };
    // inner switch from the distance: 2·x_w(mid) = 1, x_w increasing in b
    let inner = |h: f64, a: f64| -> Option<f64> {
        let g = |b: f64| 2.0 * run_wagon(&build(h, a, b)).0 - 1.0;
        if g(0.0) > 0.0 || g(a) < 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (0.0, a);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let resid = |h: f64, a: f64| -> Option<f64> {
        let b = inner(h, a)?;
        Some(if spec.ignore_oscillator { 0.0 } else { run(&build(h, a, b)).x_h })
    };
    // a sign change in a over the grid means a feasible protocol at h
    let feasible_at = |h: f64| -> Option<f64> {
        let n = ((h / step).ceil() as usize).max(8);
        let mut prev: Option<(f64, f64)> = None;
        for i in 1..n {
            let a = h * i as f64 / n as f64;
            if let Some(r) = resid(h, a) {
                if r == 0.0 {
                    return Some(a);
                }
                if let Some((pa, pr)) = prev {
                    if pr.signum() != r.signum() {
                        let (mut lo, mut hi, mut flo) = (pa, a, pr);
                        for _ in 0..80 {
                            let m = 0.5 * (lo + hi);
                            let Some(fm) = resid(h, m) else { break };
                            if fm.signum() == flo.signum() {
                                lo = m;
                                flo = fm;
                            } else {
                                hi = m;
                            }
                        }
                        return Some(0.5 * (lo + hi));
                    }
                }
                prev = Some((a, r));
            } else {
                prev = None;
            }
        }
        None
    };
    let n = ((h_max - 1.0) / step).ceil() as usize;
    let hs: Vec<f64> = (0..=n).map(|i| (1.0 + step * i as f64).min(h_max)).collect();
    let first = hs.par_iter().position_first(|&h| feasible_at(h).is_some())?;
    let (mut lo, mut hi) = (if first == 0 { 1.0 } else { hs[first - 1] }, hs[first]);
    if first > 0 {
        for _ in 0..spec.refine_iterations.min(60) {
            let m = 0.5 * (lo + hi);
            if feasible_at(m).is_some() {
                hi = m;
            } else {
                lo = m;
            }
        }
    }
    let h = hi;
    let a = feasible_at(h)?;
    let b = inner(h, a)?;
    let pieces = mirror(&build(h, a, b));
    closes(&pieces, spec.ignore_oscillator).then(|| Candidate {
        t: 2.0 * h,
        pieces,
        family: "symmetric-2".into(),
    })
}

// Asymmetric protocol with k switches s_1 < … < s_k in (0, T), u = +1 first.
// `free` holds s_1..s_{k−2}; returns the full switch list or None.
fn asym_switches(k: usize, t: f64, free: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(free.len() + 2, k);
    let mut s: Vec<f64> = free.to_vec();
    if s.windows(2).any(|p| p[1] < p[0]) || s.first().is_some_and(|&x| x < 0.0) {
        return None;
    }
    let prev = s.last().copied().unwrap_or(0.0);
    // v_w(T) = 0 fixes the gap c = s_k − s_{k−1}.
    let pieces_for = |s_all: &[f64]| -> Vec<Piece> {
        let mut out = Vec::with_capacity(k + 1);
        let mut t0 = 0.0;
        for (i, &si) in s_all.iter().chain(std::iter::once(&t)).enumerate() {
            out.push(Piece { dur: si - t0, u: if i % 2 == 0 { 1 } else { -1 }, w: 0.0 });
            t0 = si;
        }
        out
    };
    let mut probe = s.clone();
    probe.push(prev);
    probe.push(prev);
    let v0 = run_wagon(&pieces_for(&probe)).1;
    // dv_w(T)/ds_k = 2(−1)^{k−1}
    let sign_k = if k % 2 == 1 { 1.0 } else { -1.0 };
    let c = -v0 / (2.0 * sign_k);
    if c < 0.0 || prev + c > t {
        return None;
    }
    // x_w(T) is monotone in s_{k−1} ∈ [prev, T − c]
    let xw = |sk1: f64| {
        let mut all = s.clone();
        all.push(sk1);
        all.push(sk1 + c);
        run_wagon(&pieces_for(&all)).0 - 1.0
    };
    let (mut lo, mut hi) = (prev, t - c);
    let (flo, fhi) = (xw(lo), xw(hi));
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return None;
    }
    let up = fhi > flo;
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if (xw(m) < 0.0) == up {
            lo = m;
        } else {
            hi = m;
        }
    }
    let sk1 = 0.5 * (lo + hi);
    s.push(sk1);
    s.push(sk1 + c);
    Some(s)
}

fn asym_pieces(t: f64, switches: &[f64], w: f64) -> Vec<Piece> {
    let mut out = Vec::with_capacity(switches.len() + 1);
    let mut t0 = 0.0;
    for (i, &si) in switches.iter().chain(std::iter::once(&t)).enumerate() {
        out.push(Piece { dur: (si - t0).max(0.0), u: if i % 2 == 0 { 1 } else { -1 }, w });
        t0 = si;
    }
    out
}

// Oscillator residual (ξ1, ξ̇1/ω) at T.
fn asym_residual(k: usize, t: f64, free: &[f64], w: f64) -> Option<[f64; 2]> {
    let s = asym_switches(k, t, free)?;
    let f = run(&asym_pieces(t, &s, w));
    Some([f.x_h, f.v_h / w])
}

// Newton on (T, s_{k−2}) with the other free switches held.
fn asym_newton(k: usize, mut t: f64, mut free: Vec<f64>, w: f64, iters: usize) -> Option<(f64, Vec<f64>)> {
    let j = free.len() - 1;
    let eps = 1e-7;
    for _ in 0..iters {
        let r = asym_residual(k, t, &free, w)?;
        let norm = r[0].hypot(r[1]);
        if norm < 1e-13 {
            break;
        }
        let mut fp = free.clone();
        fp[j] += eps;
        let rt = asym_residual(k, t + eps, &free, w)?;
        let rs = asym_residual(k, t, &fp, w)?;
        let (a, b) = ((rt[0] - r[0]) / eps, (rs[0] - r[0]) / eps);
        let (c, d) = ((rt[1] - r[1]) / eps, (rs[1] - r[1]) / eps);
        let det = a * d - b * c;
        if det.abs() < 1e-14 {
            return None;
        }
        let dt = (d * r[0] - b * r[1]) / det;
        let ds = (-c * r[0] + a * r[1]) / det;
        t -= dt;
        free[j] -= ds;
    }
    Some((t, free))
}

fn asymmetric(k: usize, w: f64, spec: &SearchSpec, h_max: f64) -> Option<Candidate> {
    let t_max = 2.0 * h_max;
    if k == 1 {
        let pieces = vec![Piece { dur: 1.0, u: 1, w }, Piece { dur: 1.0, u: -1, w }];
        return closes(&pieces, spec.ignore_oscillator).then(|| Candidate {
            t: TAU_ABS,
            pieces,
            family: "asymmetric-1".into(),
        });
    }
    if spec.ignore_oscillator {
        return None;
    }
    // k = 4 adds an outer grid over s_1 at a coarser step
    let outer: Vec<Vec<f64>> = if k == 4 {
        let st = 4.0 * spec.grid_resolution;
        let n = (t_max / st).ceil() as usize;
        (0..n).map(|i| vec![st * i as f64]).collect()
    } else {
        vec![vec![]]
    };
    let step = if k == 4 { 2.0 * spec.grid_resolution } else { spec.grid_resolution };
    let nt = ((t_max - TAU_ABS) / step).ceil() as usize + 1;
    let iters = spec.refine_iterations.clamp(1, 60);

    outer
        .par_iter()
        .map(|prefix| {
            let ts: Vec<f64> = (0..nt).map(|i| TAU_ABS + step * i as f64).collect();
            let ns = (t_max / step).ceil() as usize + 1;
            let grid: Vec<Vec<f64>> = ts
                .iter()
                .map(|&t| {
                    (0..ns)
                        .map(|j| {
                            let mut free = prefix.clone();
                            free.push(step * j as f64);
                            asym_residual(k, t, &free, w).map_or(f64::INFINITY, |r| r[0].hypot(r[1]))
                        })
                        .collect()
                })
                .collect();
            let mut best: Option<Candidate> = None;
            for i in 0..nt {
                for j in 0..ns {
                    let v = grid[i][j];
                    if !v.is_finite() {
                        continue;
                    }
                    let mut is_min = true;
                    'nb: for di in -1i64..=1 {
                        for dj in -1i64..=1 {
                            if di == 0 && dj == 0 {
                                continue;
                            }
                            let (ii, jj) = (i as i64 + di, j as i64 + dj);
                            if ii < 0 || jj < 0 || ii >= nt as i64 || jj >= ns as i64 {
                                continue;
                            }
                            if grid[ii as usize][jj as usize] < v {
                                is_min = false;
                                break 'nb;
                            }
                        }
                    }
                    if !is_min {
                        continue;
                    }
                    let mut free = prefix.clone();
                    free.push(step * j as f64);
                    let Some((t, free)) = asym_newton(k, ts[i], free, w, iters) else { continue };
                    if !(t >= TAU_ABS - 1e-9 && t <= t_max) {
                        continue;
                    }
                    let Some(s) = asym_switches(k, t, &free) else { continue };
                    let pieces = asym_pieces(t, &s, w);
                    if !closes(&pieces, false) {
                        continue;
                    }
                    best = better(best, Some(Candidate { t, pieces, family: format!("asymmetric-{k}") }));
                }
            }
            best
        })
        .reduce(|| None, better)
}

fn fixed_families(w: f64, spec: &SearchSpec, h_max: f64) -> Vec<(String, Option<Candidate>)> {
    let mut out = vec![("symmetric-1".to_string(), symmetric_one_switch(w, spec, h_max))];
    if spec.max_switches >= 5 {
        out.push(("symmetric-2".to_string(), symmetric_two_switch(w, spec, h_max)));
    }
    if spec.allow_asymmetric {
        for k in [1usize, 3, 4] {
            if k <= spec.max_switches {
                out.push((format!("asymmetric-{k}"), asymmetric(k, w, spec, h_max)));
            }
        }
    }
    out
}

/// Smallest transport time found by brute force for a fixed frequency.
pub fn search_fixed(params: &TransportParams, spec: &SearchSpec) -> Result<OracleResult> {
    spec.validate()?;
    params.validate()?;
    let sc = Scaling::new(params.d, params.a_max)?;
    let w = sc.freq_to_scaled(params.omega);
    let analytic = solve_fixed(params)?.t_f;
    let mut h_max = TAU_ABS;
    loop {
        let fams = fixed_families(w, spec, h_max);
        let best = fams.iter().map(|(_, c)| c.clone()).fold(None, better);
        if let Some(b) = best {
            let best_t_f = sc.time_from_scaled(b.t);
            return Ok(OracleResult {
                best_t_f,
                best_protocol: sc.protocol_from_scaled(&to_protocol(&b.pieces)),
                analytic_t_f: analytic,
                margin: best_t_f - analytic,
                best_family: b.family,
                families: fams
                    .into_iter()
                    .map(|(f, c)| FamilyOutcome { family: f, best_t_f: c.map(|c| sc.time_from_scaled(c.t)) })
                    .collect(),
                reversed_wins: false,
            });
        }
        if 2.0 * h_max >= HORIZON_CAP {
            return Err(Error::OracleInfeasible {
                horizon: sc.time_from_scaled(2.0 * h_max),
            });
        }
        h_max *= 2.0;
    }
}

// Outward ω sequence for n intervals per half.
fn outward_omegas(band: &Band, n: usize, reversed: bool, lens: &[f64]) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let plus = (i % 2 == 0) != reversed;
            let w = if plus { band.omega_plus } else { band.omega_minus };
            (w, lens.get(i).copied().unwrap_or(f64::INFINITY))
        })
        .collect()
}

fn pattern_search(
    band: &Band,
    n: usize,
    reversed: bool,
    spec: &SearchSpec,
    h_max: f64,
) -> Option<Candidate> {
    let name = format!("{}{}", if reversed { "reversed-" } else { "" }, SequenceKind::ALL[n - 1].name());
    let dims = n - 1;
    let step = 0.5 * spec.grid_resolution;
    let eval = |lens: &[f64], iters: usize| {
        let om = outward_omegas(band, n, reversed, lens);
        first_feasible_half(&om, h_max, step, iters, false)
    };
    if dims == 0 {
        let (h, left) = eval(&[], spec.refine_iterations)?;
        let pieces = mirror(&left);
        return closes(&pieces, false).then_some(Candidate { t: 2.0 * h, pieces, family: name });
    }
    let l_max = |i: usize| {
        let w = outward_omegas(band, n, reversed, &[])[i].0;
        if w > 0.0 {
            (2.0 * std::f64::consts::PI / w).min(h_max)
        } else {
            h_max
        }
    };
    let per_dim = match dims {
        1 => 400,
        2 => 48,
        _ => 20,
    };
    let axes: Vec<Vec<f64>> = (0..dims)
        .map(|i| {
            let m = l_max(i);
            let cnt = ((m / spec.grid_resolution).ceil() as usize).clamp(2, per_dim);
            (0..=cnt).map(|j| m * j as f64 / cnt as f64).collect()
        })
        .collect();
    let mut cells: Vec<Vec<f64>> = vec![vec![]];
    for ax in &axes {
        cells = cells
            .into_iter()
            .flat_map(|c| ax.iter().map(move |&x| {
                let mut c2 = c.clone();
                c2.push(x);
                c2
            }))
            .collect();
    }
    // coarse pass with light refinement, then the best few refined
    let coarse: Vec<(f64, Vec<f64>)> = cells
        .par_iter()
        .filter_map(|lens| eval(lens, 20).map(|(h, _)| (h, lens.clone())))
        .collect();
    let mut ranked = coarse;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)));
    ranked.truncate(4);
    let refined: Vec<Option<Candidate>> = ranked
        .par_iter()
        .map(|(h0, lens0)| {
            let mut lens = lens0.clone();
            let mut h = *h0;
            let mut delta: Vec<f64> = axes.iter().map(|a| a[1] - a[0]).collect();
            for _ in 0..spec.refine_iterations.min(40) {
                let mut improved = false;
                for i in 0..dims {
                    for sgn in [-1.0, 1.0] {
                        let mut trial = lens.clone();
                        trial[i] = (trial[i] + sgn * delta[i]).max(0.0);
                        if let Some((ht, _)) = eval(&trial, 40) {
                            if ht < h - 1e-15 {
                                h = ht;
                                lens = trial;
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    delta.iter_mut().for_each(|d| *d *= 0.5);
                }
            }
            let (h, left) = eval(&lens, spec.refine_iterations)?;
            let pieces = mirror(&left);
            closes(&pieces, false).then(|| Candidate { t: 2.0 * h, pieces, family: name.clone() })
        })
        .collect();
    refined.into_iter().fold(None, better)
}

/// Smallest scaled transport time found by brute force for a band, over the
/// requested frequency patterns in both orientations.
pub fn search_variable(band: &Band, spec: &SearchSpec) -> Result<OracleResult> {
    spec.validate()?;
    band.validate()?;
    let analytic = solve_variable(band)?.tau_f;
    let mut h_max = TAU_ABS;
    loop {
        let mut fams: Vec<(String, bool, Option<Candidate>)> = Vec::new();
        for kind in &spec.omega_patterns {
            let n = kind.intervals_per_half();
            if 2 * (n - 1) > spec.max_switches {
                continue;
            }
            for reversed in [false, true] {
                let c = pattern_search(band, n, reversed, spec, h_max);
                let name = format!("{}{}", if reversed { "reversed-" } else { "" }, kind.name());
                fams.push((name, reversed, c));
            }
        }
        let best_normal = fams.iter().filter(|f| !f.1).map(|f| f.2.clone()).fold(None, better);
        let best_rev = fams.iter().filter(|f| f.1).map(|f| f.2.clone()).fold(None, better);
        let tol = spec.grid_resolution;
        let reversed_wins = match (&best_normal, &best_rev) {
            (Some(n), Some(r)) => r.t < n.t - tol * 1e-3,
            (None, Some(_)) => true,
            _ => false,
        };
        if let Some(b) = better(best_normal, best_rev) {
            return Ok(OracleResult {
                best_t_f: b.t,
                best_protocol: to_protocol(&b.pieces),
                analytic_t_f: analytic,
                margin: b.t - analytic,
                best_family: b.family,
                families: fams
                    .into_iter()
                    .map(|(f, _, c)| FamilyOutcome { family: f, best_t_f: c.map(|c| c.t) })
                    .collect(),
                reversed_wins,
            });
        }
        if 2.0 * h_max >= HORIZON_CAP {
            return Err(Error::OracleInfeasible { horizon: 2.0 * h_max });
        }
        h_max *= 2.0;
    }
}

/// Switch patterns excluded by the optimality argument for a fixed
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternFamily {
    /// Two or three switches before the midpoint with `u(0−) = −1` ordering
    /// and a last deceleration longer than `π/(2ω)`: must carry less
    /// distance than the optimum at the same `τ_f`.
    NegBMultiSwitch,
    /// `u(0−) = +1`, switches at `−τ2 < −τ1 < 0` with
    /// `τ1 ∈ (π, 3π/2)/ω` and `τ2 − τ1 < π/(2ω)`: cannot bring the
    /// oscillator to rest.
    PosBTwoSwitchShortGap,
    /// The optimal family itself; reproduces the optimal distance.
    SingleSwitchSymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub family: PatternFamily,
    /// Scaled time at which the family was probed.
    pub tau_f: f64,
    /// Scaled optimal distance (1).
    pub analytic_distance: f64,
    /// Largest scaled distance among feasible family members, if any.
    pub best_distance: Option<f64>,
    /// Smallest `|ξ1(mid)|` over the family grid.
    pub residual_floor: f64,
    pub samples: usize,
    /// The family behaves as the optimality argument says.
    pub confirmed: bool,
}

// Symmetric protocol distance and midpoint residual for a left-half u
// pattern given by its switch times (ascending, in (−h, 0)), starting +1.
fn sym_eval(h: f64, switches: &[f64], w: f64) -> (f64, f64) {
    let mut left = Vec::with_capacity(switches.len() + 1);
    let mut t0 = -h;
    for (i, &s) in switches.iter().chain(std::iter::once(&0.0)).enumerate() {
        left.push(Piece { dur: (s - t0).max(0.0), u: if i % 2 == 0 { 1 } else { -1 }, w });
        t0 = s;
    }
    let f = run(&left);
    (2.0 * f.x_w, f.x_h)
}

/// Probes one excluded (or the optimal) pattern family at the optimal
/// scaled `τ_f` of `params`.
pub fn falsify_switch_patterns(params: &TransportParams, family: PatternFamily) -> Result<FalsificationReport> {
    let sol = solve_fixed(params)?;
    let w = sol.omega_scaled();
    let tau_f = sol.tau_f();
    let h = 0.5 * tau_f;
    let pi = std::f64::consts::PI;
    let grid = 160usize;
    let mut samples = 0usize;
    let mut floor = f64::INFINITY;
    let mut best: Option<f64> = None;

    // roots of the midpoint residual along s ∈ (lo, hi) with the other
    // switches given by `make`
    let mut scan_roots = |lo: f64, hi: f64, make: &dyn Fn(f64) -> Vec<f64>, n: usize| {
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=n {
            let s = lo + (hi - lo) * i as f64 / n as f64;
            let sw = make(s);
            let (_, x) = sym_eval(h, &sw, w);
            samples += 1;
            floor = floor.min(x.abs());
            if let Some((ps, px)) = prev {
                if px.signum() != x.signum() {
                    let (mut a, mut b, mut fa) = (ps, s, px);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        let (_, xm) = sym_eval(h, &make(m), w);
                        if xm.signum() == fa.signum() {
                            a = m;
                            fa = xm;
                        } else {
                            b = m;
                        }
                    }
                    let (dist, _) = sym_eval(h, &make(0.5 * (a + b)), w);
                    best = Some(best.map_or(dist, |d: f64| d.max(dist)));
                }
            }
            prev = Some((s, x));
        }
    };

    match family {
        PatternFamily::SingleSwitchSymmetric => {
            // left half +, − with the switch at −τ1
            scan_roots(-h, 0.0, &|s| vec![s], 20 * grid);
        }
        PatternFamily::NegBMultiSwitch => {
            // three switches (ends with −): −a < −b < −c, last deceleration c > π/(2ω)
            let cmin = pi / (2.0 * w);
            for j in 1..grid {
                let c = cmin + (h - cmin) * j as f64 / grid as f64;
                for i in 1..grid {
                    let b = c + (h - c) * i as f64 / grid as f64;
                    scan_roots(-h, -b, &|a| vec![a, -b, -c], grid);
                }
            }
            // two switches (ends with +), the deceleration between them > π/(2ω)
            for i in 1..grid {
                let b = h * i as f64 / grid as f64;
                let lo = -h;
                let hi = -b - cmin;
                if hi > lo {
                    scan_roots(lo, hi, &|a| vec![a, -b], grid);
                }
            }
        }
        PatternFamily::PosBTwoSwitchShortGap => {
            // u(0−) = +1: left half +, −, + with switches at −τ2 < −τ1
            let (t1_lo, t1_hi) = (pi / w, 1.5 * pi / w);
            let gap_lo = 0.1 / w;
            let gap_hi = 0.5 * pi / w;
            for i in 1..grid {
                let t1 = t1_lo + (t1_hi - t1_lo) * i as f64 / grid as f64;
                for j in 0..=grid {
                    let gap = gap_lo + (gap_hi - gap_lo) * j as f64 / grid as f64;
                    let t2 = t1 + gap;
                    if t2 >= h {
                        continue;
                    }
                    let (dist, x) = sym_eval(h, &[-t2, -t1], w);
                    samples += 1;
                    floor = floor.min(x.abs());
                    if x.abs() <= FEASIBILITY_TOL {
                        best = Some(best.map_or(dist, |d: f64| d.max(dist)));
                    }
                }
            }
        }
    }

    let confirmed = match family {
        PatternFamily::SingleSwitchSymmetric => best.is_some_and(|d| (d - 1.0).abs() < 1e-9),
        PatternFamily::NegBMultiSwitch => best.is_none_or(|d| d < 1.0 - 1e-9),
        PatternFamily::PosBTwoSwitchShortGap => best.is_none() && floor > 100.0 * FEASIBILITY_TOL,
    };
    Ok(FalsificationReport {
        family,
        tau_f,
        analytic_distance: 1.0,
        best_distance: best,
        residual_floor: floor,
        samples,
        confirmed,
    })
}
