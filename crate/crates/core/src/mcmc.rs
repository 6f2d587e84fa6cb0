//! Strauss process samplers on the unit square: Metropolis–Hastings for a
//! fixed number of points and reversible-jump birth/death for the
//! unconditional process. Also the Poisson log-density.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pointproc::{IntensitySpec, PointPattern, Window};
use crate::rng::RngStream;
use crate::special::ln_factorial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraussParams {
    pub beta: f64,
    pub gamma: f64,
    pub r: f64,
}

impl StraussParams {
    pub fn new(beta: f64, gamma: f64, r: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be finite and >= 0, got {beta}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(format!("the Strauss process needs 0 <= gamma <= 1, got {gamma}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("interaction radius must be positive, got {r}")));
        }
        Ok(Self { beta, gamma, r })
    }

    /// Unnormalized `ln(β^n γ^s)`.
    pub fn log_density(&self, n: usize, s: u64) -> f64 {
        let t = if s == 0 { 0.0 } else { s as f64 * self.gamma.ln() };
        let b = if n == 0 { 0.0 } else { n as f64 * self.beta.ln() };
        b + t
    }
}

fn close(a: [f64; 2], b: [f64; 2], r: f64) -> bool {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy < r * r
}

/// Number of pairs `i < j` with `‖xᵢ − xⱼ‖ < r` (strict).
pub fn numpairs(points: &[[f64; 2]], r: f64) -> u64 {
    let mut s = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if close(points[i], points[j], r) {
                s += 1;
            }
        }
    }
    s
}

/// Number of points other than `skip` within distance `< r` of `p`.
fn neighbours(points: &[[f64; 2]], skip: Option<usize>, p: [f64; 2], r: f64) -> u64 {
    points
        .iter()
        .enumerate()
        .filter(|&(k, q)| Some(k) != skip && close(p, *q, r))
        .count() as u64
}

/// `min{γ^{s_y − s_x}, 1}`.
pub fn mh_acceptance(s_x: u64, s_y: u64, gamma: f64) -> f64 {
    if s_y <= s_x {
        1.0
    } else {
        gamma.powi((s_y - s_x) as i32).min(1.0)
    }
}

fn gamma_pow(gamma: f64, ds: i64) -> f64 {
    if ds == 0 {
        1.0
    } else {
        gamma.powi(ds as i32)
    }
}

/// Birth ratio `β·γ^{s_y − s_x} / n(y)`.
pub fn birth_ratio(params: &StraussParams, s_x: u64, s_y: u64, n_y: usize) -> f64 {
    params.beta * gamma_pow(params.gamma, s_y as i64 - s_x as i64) / n_y as f64
}

/// Death ratio `γ^{s_y − s_x}·n(x) / β`.
pub fn death_ratio(params: &StraussParams, s_x: u64, s_y: u64, n_x: usize) -> f64 {
    gamma_pow(params.gamma, s_y as i64 - s_x as i64) * n_x as f64 / params.beta
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub points: Vec<[f64; 2]>,
    /// Always equal to `numpairs(points, r)`.
    pub cached_s: u64,
    pub step_index: u64,
    pub accepted: u64,
}

impl ChainState {
    pub fn new(points: Vec<[f64; 2]>, r: f64) -> Self {
        let cached_s = numpairs(&points, r);
        Self { points, cached_s, step_index: 0, accepted: 0 }
    }

    /// `n` iid uniform points on the unit square.
    pub fn uniform(n: usize, r: f64, rng: &mut RngStream) -> Self {
        let w = Window::unit();
        Self::new((0..n).map(|_| w.uniform_point(rng)).collect(), r)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    fn check(&self, r: f64) {
        debug_assert_eq!(self.cached_s, numpairs(&self.points, r));
    }
}

/// Single-site random-walk move; returns whether it was accepted.
pub fn mh_step(state: &mut ChainState, params: &StraussParams, sigma: f64, rng: &mut RngStream) -> bool {
    state.step_index += 1;
    if state.points.is_empty() {
        return false;
    }
    let j = rng.index(state.n());
    let old = state.points[j];
    let y = [old[0] + sigma * rng.std_normal(), old[1] + sigma * rng.std_normal()];
    if !(0.0..=1.0).contains(&y[0]) || !(0.0..=1.0).contains(&y[1]) {
        return false;
    }
    let before = neighbours(&state.points, Some(j), old, params.r);
    let after = neighbours(&state.points, Some(j), y, params.r);
    let s_y = state.cached_s - before + after;
    let a = mh_acceptance(state.cached_s, s_y, params.gamma);
    let accept = a >= 1.0 || rng.uniform() < a;
    if accept {
        state.points[j] = y;
        state.cached_s = s_y;
        state.accepted += 1;
    }
    state.check(params.r);
    accept
}

/// Birth (probability ½) or death move; returns whether it was accepted.
pub fn rj_step(state: &mut ChainState, params: &StraussParams, rng: &mut RngStream) -> bool {
    state.step_index += 1;
    let w = Window::unit();
    let accept = if rng.uniform() < 0.5 {
        let p = w.uniform_point(rng);
        let s_y = state.cached_s + neighbours(&state.points, None, p, params.r);
        let a = birth_ratio(params, state.cached_s, s_y, state.n() + 1);
        let ok = a >= 1.0 || rng.uniform() < a;
        if ok {
            state.points.push(p);
            state.cached_s = s_y;
        }
        ok
    } else {
        if state.points.is_empty() {
            return false;
        }
        let j = rng.index(state.n());
        let s_y = state.cached_s - neighbours(&state.points, Some(j), state.points[j], params.r);
        let a = death_ratio(params, state.cached_s, s_y, state.n());
        let ok = a >= 1.0 || rng.uniform() < a;
        if ok {
            state.points.swap_remove(j);
            state.cached_s = s_y;
        }
        ok
    };
    if accept {
        state.accepted += 1;
    }
    state.check(params.r);
    accept
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: u64,
    pub n: usize,
    pub s: u64,
}

#[derive(Debug, Clone)]
pub struct StraussRun {
    /// One row per step, after the step.
    pub trace: Vec<TraceRow>,
    pub final_state: ChainState,
    pub acceptance_rate: f64,
}

impl StraussRun {
    pub fn pattern(&self) -> PointPattern {
        PointPattern {
            points: self.final_state.points.clone(),
            window: Window::unit(),
            marks: None,
            extends_beyond_window: false,
        }
    }

    /// The trace with the first `fraction` of steps removed.
    pub fn after_burn_in(&self, fraction: f64) -> &[TraceRow] {
        let k = ((self.trace.len() as f64) * fraction.clamp(0.0, 1.0)).floor() as usize;
        &self.trace[k..]
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        write_trace_csv(&self.trace, w)
    }
}

/// Trace CSV with header `step,n,s`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut w: W) -> Result<()> {
    writeln!(w, "step,n,s")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.step, r.n, r.s)?;
    }
    Ok(())
}

fn run_chain<F: FnMut(&mut ChainState, &mut RngStream) -> bool>(
    mut state: ChainState,
    steps: usize,
    rng: &mut RngStream,
    mut step: F,
) -> StraussRun {
    let mut trace = Vec::with_capacity(steps);
    let start = state.accepted;
    for _ in 0..steps {
        step(&mut state, rng);
        trace.push(TraceRow { step: state.step_index, n: state.n(), s: state.cached_s });
    }
    let acceptance_rate = if steps == 0 { 0.0 } else { (state.accepted - start) as f64 / steps as f64 };
    StraussRun { trace, final_state: state, acceptance_rate }
}

/// Metropolis–Hastings chain for the Strauss process with exactly `n` points,
/// started from a uniform configuration.
pub fn run_conditional_strauss(
    n: usize,
    params: &StraussParams,
    sigma: f64,
    steps: usize,
    rng: &mut RngStream,
) -> Result<StraussRun> {
    if n == 0 {
        return Err(invalid("the conditional sampler needs at least one point"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("proposal sigma must be positive, got {sigma}")));
    }
    let init = ChainState::uniform(n, params.r, rng);
    Ok(run_chain(init, steps, rng, |s, g| mh_step(s, params, sigma, g)))
}

/// Reversible-jump chain for the unconditional Strauss process.
pub fn run_rj_strauss(
    params: &StraussParams,
    initial: Vec<[f64; 2]>,
    steps: usize,
    rng: &mut RngStream,
) -> Result<StraussRun> {
    if params.beta == 0.0 {
        return Err(invalid("the birth-death sampler needs beta > 0"));
    }
    if initial.iter().any(|p| !Window::unit().contains(*p)) {
        return Err(invalid("initial points must lie in the unit square"));
    }
    let init = ChainState::new(initial, params.r);
    Ok(run_chain(init, steps, rng, |s, g| rj_step(s, params, g)))
}

/// `ln f(x) = −μ(E) − ln n! + Σ ln λ(xᵢ)` for a Poisson process on the
/// pattern's window.
pub fn poisson_density(pattern: &PointPattern, intensity: &IntensitySpec) -> f64 {
    let mu = intensity.mean_measure(&pattern.window);
    let sum: f64 = pattern.points.iter().map(|p| intensity.eval(p[0], p[1]).ln()).sum();
    -mu - ln_factorial(pattern.len() as u64) + sum
}
