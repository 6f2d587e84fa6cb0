//! Lévy processes by truncated Lévy–Itô decomposition, with the gamma process
//! as the worked instance, and gamma Lévy sheets on a lattice.
//!
//! The `ε`-truncated path is
//! `X_t^{(ε)} = tμ + σW_t + Σ_{jumps > ε} ΔX − t∫_ε^1 x ν(dx)`,
//! where the compensator integral is signed (it is added back when `ε > 1`).
//! With this convention refining `ε_old → ε_new` always adds the jumps in
//! `(ε_new, ε_old]` and subtracts `t∫_{ε_new}^{ε_old} x ν(dx)`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid2D};
use crate::quad::integrate;
use crate::rng::RngStream;

/// Relative tolerance for all Lévy-measure integrals.
pub const QUAD_TOLERANCE: f64 = 1e-10;

/// Draws jump sizes from a Lévy measure restricted to a band.
pub trait JumpSampler: Send + Sync {
    /// `ν((lo, hi])`.
    fn mass(&self) -> f64;
    fn sample(&self, rng: &mut RngStream) -> f64;
}

/// A Lévy measure on `(0, ∞)` given by its density.
pub trait LevyMeasure: Send + Sync {
    fn density(&self, x: f64) -> f64;

    /// `ν((a, b])`.
    fn mass(&self, a: f64, b: f64) -> f64 {
        integrate(|x| self.density(x), a, b, QUAD_TOLERANCE)
    }

    fn tail_mass(&self, eps: f64) -> f64 {
        self.mass(eps, f64::INFINITY)
    }

    /// `∫_a^b x ν(dx)`.
    fn partial_mean(&self, a: f64, b: f64) -> f64 {
        integrate(|x| x * self.density(x), a, b, QUAD_TOLERANCE)
    }

    /// `∫_a^b x² ν(dx)`.
    fn second_moment(&self, a: f64, b: f64) -> f64 {
        integrate(|x| x * x * self.density(x), a, b, QUAD_TOLERANCE)
    }

    fn jump_sampler(&self, lo: f64, hi: f64) -> Result<Box<dyn JumpSampler>>;

    /// Checks `∫ min{1, x²} ν(dx) < ∞`.
    fn validate(&self) -> Result<()> {
        let v = self.second_moment(0.0, 1.0) + self.mass(1.0, f64::INFINITY);
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("integral of min(1, x^2) against the measure is {v}")))
        }
    }
}

/// The zero measure (no jumps).
#[derive(Debug, Clone, Copy)]
pub struct NoJumps;

impl LevyMeasure for NoJumps {
    fn density(&self, _: f64) -> f64 {
        0.0
    }

    fn mass(&self, _: f64, _: f64) -> f64 {
        0.0
    }

    fn partial_mean(&self, _: f64, _: f64) -> f64 {
        0.0
    }

    fn second_moment(&self, _: f64, _: f64) -> f64 {
        0.0
    }

    fn jump_sampler(&self, lo: f64, hi: f64) -> Result<Box<dyn JumpSampler>> {
        Err(Error::EmptyBand { lo, hi })
    }
}

/// Gamma-process Lévy measure `ν(dx) = α e^{−x}/x dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLevyMeasure {
    pub alpha: f64,
}

impl GammaLevyMeasure {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("gamma process needs alpha > 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    /// Drift `μ = ∫_0^1 x ν(dx) = α(1 − e^{−1})` that makes the
    /// untruncated process a pure-jump subordinator.
    pub fn drift(&self) -> f64 {
        self.alpha * (1.0 - (-1.0f64).exp())
    }
}

impl LevyMeasure for GammaLevyMeasure {
    fn density(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.alpha * (-x).exp() / x
        } else {
            0.0
        }
    }

    fn jump_sampler(&self, lo: f64, hi: f64) -> Result<Box<dyn JumpSampler>> {
        Ok(Box::new(GammaBandSampler::new(self.alpha, lo, hi)?))
    }
}

/// Sampler for `e^{−x}/x` on `(lo, hi]`. The band is cut into dyadic
/// sub-bands `(a, 2a]` (the last one possibly shorter or infinite); a
/// sub-band is picked by mass, then `x` is drawn from the truncated
/// exponential on it and accepted with probability `a/x`, which is at least
/// ½ on bounded sub-bands and about 0.6 on `(1, ∞)`.
#[derive(Debug, Clone)]
pub struct GammaBandSampler {
    edges: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    mass: f64,
}

impl GammaBandSampler {
    pub fn new(alpha: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) {
            if hi == lo {
                return Err(Error::EmptyBand { lo, hi });
            }
            return Err(invalid(format!("band needs 0 <= lo < hi, got ({lo}, {hi}]")));
        }
        if lo == 0.0 {
            return Err(Error::InvalidMeasure("the gamma measure has infinite mass near 0".into()));
        }
        let m = GammaLevyMeasure::new(alpha)?;
        let mut edges = Vec::new();
        let mut a = lo;
        // past 1 the envelope e^{-x} on an unbounded band still accepts about 60%
        while a < hi {
            let b = if a >= 1.0 && hi.is_infinite() { hi } else { (2.0 * a).min(hi) };
            edges.push((a, b));
            a = b;
        }
        let mut cumulative = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        for &(a, b) in &edges {
            acc += m.mass(a, b);
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::EmptyBand { lo, hi });
        }
        Ok(Self { edges, cumulative, mass: acc })
    }

    fn truncated_exponential(a: f64, b: f64, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        if b.is_infinite() {
            a - (1.0 - u).ln()
        } else {
            let span = -(-(b - a)).exp_m1();
            let x = a - (1.0 - u * span).ln();
            x.clamp(a, b)
        }
    }
}

impl JumpSampler for GammaBandSampler {
    fn mass(&self) -> f64 {
        self.mass
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let target = rng.uniform() * self.mass;
        let k = self.cumulative.partition_point(|&c| c <= target).min(self.edges.len() - 1);
        let (a, b) = self.edges[k];
        loop {
            let x = Self::truncated_exponential(a, b, rng);
            if x > a && rng.uniform() * x <= a {
                return x;
            }
        }
    }
}

impl fmt::Debug for dyn JumpSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JumpSampler(mass = {})", self.mass())
    }
}

/// `Σ_{k ≤ N} ΔX_k` with `N ~ Poi(rate·t)`.
pub fn sample_compound_poisson<J>(rate: f64, mut jump: J, t: f64, rng: &mut RngStream) -> Result<f64>
where
    J: FnMut(&mut RngStream) -> f64,
{
    if !(rate >= 0.0 && t >= 0.0) {
        return Err(invalid("rate and horizon must be >= 0"));
    }
    let n = rng.poisson(rate * t)?;
    Ok((0..n).map(|_| jump(rng)).sum())
}

/// Triplet `(μ, σ, ν)` and truncation level `ε`.
#[derive(Clone)]
pub struct LevyPathSpec {
    pub mu: f64,
    pub sigma: f64,
    pub measure: Arc<dyn LevyMeasure>,
    pub epsilon: f64,
}

impl fmt::Debug for LevyPathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyPathSpec")
            .field("mu", &self.mu)
            .field("sigma", &self.sigma)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl LevyPathSpec {
    /// Gamma process with the drift that makes it a subordinator.
    pub fn gamma(alpha: f64, epsilon: f64) -> Result<Self> {
        let m = GammaLevyMeasure::new(alpha)?;
        let spec = Self { mu: m.drift(), sigma: 0.0, measure: Arc::new(m), epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("truncation level must be positive, got {}", self.epsilon)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite() && self.mu.is_finite()) {
            return Err(invalid("drift must be finite and sigma >= 0"));
        }
        self.measure.validate()
    }

    /// Compensator rate `∫_ε^1 x ν(dx)` (negative when `ε > 1`).
    pub fn compensator(&self) -> f64 {
        signed_partial_mean(self.measure.as_ref(), self.epsilon, 1.0)
    }

    /// Exact mean and variance of `X_t^{(ε)}`.
    pub fn moments(&self, t: f64) -> (f64, f64) {
        let m = self.measure.as_ref();
        let mean = t * (self.mu - self.compensator() + m.partial_mean(self.epsilon, f64::INFINITY));
        let var = t * (self.sigma * self.sigma + m.second_moment(self.epsilon, f64::INFINITY));
        (mean, var)
    }
}

fn signed_partial_mean(m: &dyn LevyMeasure, a: f64, b: f64) -> f64 {
    if a <= b {
        m.partial_mean(a, b)
    } else {
        -m.partial_mean(b, a)
    }
}

/// Path values at `times` together with the truncation level used.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub epsilon: f64,
}

impl LevyPath {
    /// CSV with header `t,x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x")?;
        for (t, x) in self.times.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", t, x)?;
        }
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() || !(times[0] >= 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times must be nonempty, start at >= 0 and increase strictly"));
    }
    let horizon = *times.last().unwrap();
    if !horizon.is_finite() {
        return Err(invalid("times must be finite"));
    }
    Ok(horizon)
}

/// Adds the jumps of `ν` restricted to `(lo, hi]` over `[0, T]` to `values`.
fn add_band_jumps(
    measure: &dyn LevyMeasure,
    lo: f64,
    hi: f64,
    times: &[f64],
    values: &mut [f64],
    rng: &mut RngStream,
) -> Result<()> {
    let mass = measure.mass(lo, hi);
    if !(mass > 0.0) {
        return Ok(());
    }
    if !mass.is_finite() {
        return Err(Error::InvalidMeasure(format!("band ({lo}, {hi}] has infinite mass")));
    }
    let horizon = *times.last().unwrap();
    let sampler = measure.jump_sampler(lo, hi)?;
    let n = rng.poisson(mass * horizon)?;
    for _ in 0..n {
        let tau = rng.uniform() * horizon;
        let size = sampler.sample(rng);
        let first = times.partition_point(|&t| t < tau);
        for v in &mut values[first..] {
            *v += size;
        }
    }
    Ok(())
}

/// The `ε`-truncated path at `times`.
pub fn sample_levy_path(spec: &LevyPathSpec, times: &[f64], rng: &mut RngStream) -> Result<LevyPath> {
    spec.validate()?;
    check_times(times)?;
    let comp = spec.compensator();
    let mut values: Vec<f64> = times.iter().map(|&t| t * (spec.mu - comp)).collect();
    if spec.sigma > 0.0 {
        let w = crate::fractional::sample_wiener_path(times, rng)?;
        for (v, wv) in values.iter_mut().zip(w) {
            *v += spec.sigma * wv;
        }
    }
    add_band_jumps(spec.measure.as_ref(), spec.epsilon, f64::INFINITY, times, &mut values, rng)?;
    Ok(LevyPath { times: times.to_vec(), values, epsilon: spec.epsilon })
}

/// Lowers the truncation level of `path` from `path.epsilon` to
/// `epsilon_new`.
pub fn refine_path(path: &LevyPath, spec: &LevyPathSpec, epsilon_new: f64, rng: &mut RngStream) -> Result<LevyPath> {
    if !(epsilon_new > 0.0 && epsilon_new < path.epsilon) {
        return Err(invalid(format!(
            "new truncation level must lie in (0, {}), got {epsilon_new}",
            path.epsilon
        )));
    }
    let m = spec.measure.as_ref();
    let comp = m.partial_mean(epsilon_new, path.epsilon);
    let mut values: Vec<f64> = path.times.iter().zip(&path.values).map(|(&t, &v)| v - t * comp).collect();
    add_band_jumps(m, epsilon_new, path.epsilon, &path.times, &mut values, rng)?;
    Ok(LevyPath { times: path.times.clone(), values, epsilon: epsilon_new })
}

/// Kernel `κ_t(x)` of a Lévy sheet.
pub trait SheetKernel: Send + Sync {
    fn eval(&self, t: [f64; 2], x: [f64; 2]) -> f64;
    /// Radius outside of which `κ_t(x) = 0`, if any.
    fn support_radius(&self) -> Option<f64>;
}

/// `κ_t(x) = (r² − ‖x − t‖²)₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscKernel {
    pub r: f64,
}

impl SheetKernel for DiscKernel {
    fn eval(&self, t: [f64; 2], x: [f64; 2]) -> f64 {
        let d2 = (x[0] - t[0]).powi(2) + (x[1] - t[1]).powi(2);
        (self.r * self.r - d2).max(0.0)
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.r)
    }
}

/// The zero kernel.
#[derive(Debug, Clone, Copy)]
pub struct ZeroKernel;

impl SheetKernel for ZeroKernel {
    fn eval(&self, _: [f64; 2], _: [f64; 2]) -> f64 {
        0.0
    }

    fn support_radius(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Cells `Λ(△ᵢⱼ) ~ Gamma(α/n², β)` (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCell {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone)]
pub struct LevySheetSpec {
    pub n: usize,
    pub kernel: Arc<dyn SheetKernel>,
    pub cell: GammaCell,
}

impl fmt::Debug for LevySheetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevySheetSpec").field("n", &self.n).field("cell", &self.cell).finish()
    }
}

impl LevySheetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("lattice resolution must be at least 1"));
        }
        if !(self.cell.alpha > 0.0 && self.cell.beta > 0.0) {
            return Err(invalid("gamma cells need alpha, beta > 0"));
        }
        Ok(())
    }

    /// `Σ κ_t(i/n, j/n)·α/(βn²)`.
    pub fn expectation(&self, t: [f64; 2]) -> f64 {
        let n = self.n;
        let w = self.cell.alpha / (self.cell.beta * (n * n) as f64);
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += self.kernel.eval(t, [i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        s * w
    }
}

/// Independent gamma cell masses on the `n × n` lattice, row-major.
pub fn sample_gamma_cells(spec: &LevySheetSpec, rng: &mut RngStream) -> Result<Array2<f64>> {
    spec.validate()?;
    let n = spec.n;
    let shape = spec.cell.alpha / (n * n) as f64;
    let mut cells = Array2::zeros((n, n));
    for v in cells.iter_mut() {
        *v = rng.gamma(shape, spec.cell.beta)?;
    }
    Ok(cells)
}

/// `X_t = Σ κ_t(i/n, j/n)·Λ(△ᵢⱼ)` for fixed cells at one location.
pub fn sheet_value(spec: &LevySheetSpec, cells: &Array2<f64>, t: [f64; 2]) -> f64 {
    let n = spec.n;
    let nf = n as f64;
    let (i0, i1, j0, j1) = match spec.kernel.support_radius() {
        Some(r) => {
            let lo = |c: f64| (((c - r) * nf).floor().max(0.0)) as usize;
            let hi = |c: f64| ((((c + r) * nf).ceil() + 1.0).max(0.0) as usize).min(n);
            (lo(t[0]), hi(t[0]), lo(t[1]), hi(t[1]))
        }
        None => (0, n, 0, n),
    };
    let mut s = 0.0;
    for j in j0..j1 {
        for i in i0..i1 {
            let k = spec.kernel.eval(t, [i as f64 / nf, j as f64 / nf]);
            if k != 0.0 {
                s += k * cells[[j, i]];
            }
        }
    }
    s
}

/// Sheet on the evaluation grid `{(i/m, j/m) : 0 ≤ i, j < m}`, all points
/// sharing one draw of the cells.
pub fn sample_gamma_sheet(spec: &LevySheetSpec, m: usize, rng: &mut RngStream) -> Result<Field> {
    if m == 0 {
        return Err(invalid("evaluation grid must have at least one point"));
    }
    let cells = sample_gamma_cells(spec, rng)?;
    let h = 1.0 / m as f64;
    let values = Array2::from_shape_fn((m, m), |(j, i)| sheet_value(spec, &cells, [i as f64 * h, j as f64 * h]));
    Field::new(Grid2D::new(m, m, h, h, (0.0, 0.0))?, values)
}
