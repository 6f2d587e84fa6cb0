//! Direct point-process generators on rectangular windows: Poisson by
//! inversion and by thinning, independent marks, Hawkes branching, Neyman–Scott
//! clusters, Cox and shot-noise Cox processes.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::rng::RngStream;

/// Side of the midpoint rule used for `μ(E)` of callable intensities.
pub const MEAN_MEASURE_QUAD_SIDE: usize = 256;
/// Side of the probe grid used to spot-check intensity bounds.
pub const BOUND_PROBE_SIDE: usize = 64;
/// Hawkes generation stops with an error beyond this many points.
pub const HAWKES_POINT_CAP: usize = 1_000_000;
/// Thomas centres are drawn on the window dilated by this many `σ`.
pub const THOMAS_MARGIN_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Window {
    pub fn new(lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        let ok = (0..2).all(|k| lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]);
        if !ok {
            return Err(invalid(format!("window needs lower < upper, got {lower:?} and {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit() -> Self {
        Self { lower: [0.0, 0.0], upper: [1.0, 1.0] }
    }

    pub fn width(&self) -> f64 {
        self.upper[0] - self.lower[0]
    }

    pub fn height(&self) -> f64 {
        self.upper[1] - self.lower[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|k| p[k] >= self.lower[k] && p[k] <= self.upper[k])
    }

    pub fn dilate(&self, margin: f64) -> Self {
        Self {
            lower: [self.lower[0] - margin, self.lower[1] - margin],
            upper: [self.upper[0] + margin, self.upper[1] + margin],
        }
    }

    pub fn uniform_point(&self, rng: &mut RngStream) -> [f64; 2] {
        [
            rng.uniform_in(self.lower[0], self.upper[0]),
            rng.uniform_in(self.lower[1], self.upper[1]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    pub points: Vec<[f64; 2]>,
    pub window: Window,
    pub marks: Option<Vec<f64>>,
    /// Set by generators whose output may contain points outside `window`.
    pub extends_beyond_window: bool,
}

impl PointPattern {
    pub fn empty(window: Window) -> Self {
        Self { points: Vec::new(), window, marks: None, extends_beyond_window: false }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count_in(&self, w: &Window) -> usize {
        self.points.iter().filter(|p| w.contains(**p)).count()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.marks {
            if m.len() != self.points.len() {
                return Err(invalid(format!("{} marks for {} points", m.len(), self.points.len())));
            }
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        if !self.extends_beyond_window && self.points.iter().any(|p| !self.window.contains(*p)) {
            return Err(invalid("point outside window in a pattern not flagged as extending beyond it"));
        }
        Ok(())
    }

    /// CSV with header `x,y` or `x,y,mark`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.marks {
            Some(marks) => {
                writeln!(w, "x,y,mark")?;
                for (p, m) in self.points.iter().zip(marks) {
                    writeln!(w, "{:.16e},{:.16e},{:.16e}", p[0], p[1], m)?;
                }
            }
            None => {
                writeln!(w, "x,y")?;
                for p in &self.points {
                    writeln!(w, "{:.16e},{:.16e}", p[0], p[1])?;
                }
            }
        }
        Ok(())
    }

    /// Reads the CSV written by [`PointPattern::write_csv`]. The window is not
    /// stored in the file and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, window: Window) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty point file".into()))??;
        let marked = match header.trim() {
            "x,y" => false,
            "x,y,mark" => true,
            h => return Err(Error::Format(format!("unexpected header {h:?}"))),
        };
        let mut points = Vec::new();
        let mut marks = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", k + 2)))?;
            if vals.len() != if marked { 3 } else { 2 } {
                return Err(Error::Format(format!("line {}: wrong number of columns", k + 2)));
            }
            points.push([vals[0], vals[1]]);
            if marked {
                marks.push(vals[2]);
            }
        }
        let extends = points.iter().any(|p| !window.contains(*p));
        Ok(Self { points, window, marks: marked.then_some(marks), extends_beyond_window: extends })
    }
}

pub type IntensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type IntensityMapping = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Intensity function `λ` of a Poisson process.
#[derive(Clone)]
pub enum IntensitySpec {
    Homogeneous(f64),
    /// `max` is the caller's upper bound on the window.
    Callable { f: IntensityFn, max: f64 },
    /// `λ(x) = mapping(field value of the cell containing x)`. Cells are
    /// half-open `[i·dx, (i+1)·dx)`; locations past the last cell use the
    /// last cell.
    FieldDriven { field: Arc<Field>, mapping: IntensityMapping },
}

impl fmt::Debug for IntensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntensitySpec::Homogeneous(l) => write!(f, "Homogeneous({l})"),
            IntensitySpec::Callable { max, .. } => write!(f, "Callable {{ max: {max} }}"),
            IntensitySpec::FieldDriven { field, .. } => {
                write!(f, "FieldDriven {{ {}x{} }}", field.grid.nx, field.grid.ny)
            }
        }
    }
}

impl IntensitySpec {
    pub fn callable<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F, max: f64) -> Self {
        IntensitySpec::Callable { f: Arc::new(f), max }
    }

    pub fn field_driven<M: Fn(f64) -> f64 + Send + Sync + 'static>(field: Field, mapping: M) -> Self {
        IntensitySpec::FieldDriven { field: Arc::new(field), mapping: Arc::new(mapping) }
    }

    fn cell_of(field: &Field, x: f64, y: f64) -> (usize, usize) {
        let g = &field.grid;
        let i = ((x - g.origin.0) / g.dx).floor().clamp(0.0, (g.nx - 1) as f64) as usize;
        let j = ((y - g.origin.1) / g.dy).floor().clamp(0.0, (g.ny - 1) as f64) as usize;
        (j, i)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            IntensitySpec::Homogeneous(l) => *l,
            IntensitySpec::Callable { f, .. } => f(x, y),
            IntensitySpec::FieldDriven { field, mapping } => {
                let (j, i) = Self::cell_of(field, x, y);
                mapping(field.values[[j, i]])
            }
        }
    }

    /// Upper bound `λ_max` used for rejection and thinning.
    pub fn bound(&self) -> f64 {
        match self {
            IntensitySpec::Homogeneous(l) => *l,
            IntensitySpec::Callable { max, .. } => *max,
            IntensitySpec::FieldDriven { field, mapping } => {
                field.values.iter().map(|&v| mapping(v)).fold(0.0, f64::max)
            }
        }
    }

    /// Checks `λ ≥ 0` and `λ ≤ bound` on a probe grid covering the window.
    pub fn check(&self, window: &Window) -> Result<()> {
        let bound = self.bound();
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(invalid(format!("intensity bound must be finite and >= 0, got {bound}")));
        }
        let k = BOUND_PROBE_SIDE;
        for a in 0..k {
            for b in 0..k {
                let x = window.lower[0] + window.width() * a as f64 / (k - 1) as f64;
                let y = window.lower[1] + window.height() * b as f64 / (k - 1) as f64;
                let v = self.eval(x, y);
                if !(v >= 0.0) {
                    return Err(invalid(format!("intensity is negative or NaN at ({x}, {y}): {v}")));
                }
                if v > bound * (1.0 + 1e-12) {
                    return Err(Error::BoundViolated { x, y, value: v, bound });
                }
            }
        }
        Ok(())
    }

    /// `μ(window) = ∫ λ`. Exact for homogeneous and field-driven intensities;
    /// midpoint rule on a 256×256 grid for callables.
    pub fn mean_measure(&self, window: &Window) -> f64 {
        match self {
            IntensitySpec::Homogeneous(l) => l * window.area(),
            IntensitySpec::Callable { f, .. } => {
                let k = MEAN_MEASURE_QUAD_SIDE;
                let (hx, hy) = (window.width() / k as f64, window.height() / k as f64);
                let mut s = 0.0;
                for b in 0..k {
                    let y = window.lower[1] + (b as f64 + 0.5) * hy;
                    for a in 0..k {
                        s += f(window.lower[0] + (a as f64 + 0.5) * hx, y);
                    }
                }
                s * hx * hy
            }
            IntensitySpec::FieldDriven { field, mapping } => {
                let g = &field.grid;
                let overlap = |lo: f64, hi: f64, a: f64, b: f64| (hi.min(b) - lo.max(a)).max(0.0);
                let mut s = 0.0;
                for j in 0..g.ny {
                    let y0 = g.origin.1 + j as f64 * g.dy;
                    // the last cell extends to cover everything past it
                    let y1 = if j + 1 == g.ny { f64::INFINITY } else { y0 + g.dy };
                    let y0 = if j == 0 { f64::NEG_INFINITY } else { y0 };
                    let oy = overlap(window.lower[1], window.upper[1], y0, y1);
                    if oy == 0.0 {
                        continue;
                    }
                    for i in 0..g.nx {
                        let x0 = g.origin.0 + i as f64 * g.dx;
                        let x1 = if i + 1 == g.nx { f64::INFINITY } else { x0 + g.dx };
                        let x0 = if i == 0 { f64::NEG_INFINITY } else { x0 };
                        s += mapping(field.values[[j, i]]) * oy * overlap(window.lower[0], window.upper[0], x0, x1);
                    }
                }
                s
            }
        }
    }
}

/// Rejection draw from the density `λ/μ(E)` under the envelope `λ_max`:
/// accept `x` when `U·λ_max ≤ λ(x)`.
fn draw_from_intensity(intensity: &IntensitySpec, window: &Window, lmax: f64, rng: &mut RngStream) -> Result<[f64; 2]> {
    loop {
        let p = window.uniform_point(rng);
        let v = intensity.eval(p[0], p[1]);
        if v > lmax * (1.0 + 1e-12) {
            return Err(Error::BoundViolated { x: p[0], y: p[1], value: v, bound: lmax });
        }
        if rng.uniform() * lmax <= v {
            return Ok(p);
        }
    }
}

/// Draws `N ~ Poi(μ(E))`, then `N` iid locations with density `λ/μ(E)`.
pub fn sample_poisson_inversion(intensity: &IntensitySpec, window: &Window, rng: &mut RngStream) -> Result<PointPattern> {
    intensity.check(window)?;
    let lmax = intensity.bound();
    let mu = intensity.mean_measure(window);
    let mut out = PointPattern::empty(*window);
    if lmax == 0.0 || mu <= 0.0 {
        return Ok(out);
    }
    let n = rng.poisson(mu)?;
    if let IntensitySpec::Homogeneous(_) = intensity {
        out.points = (0..n).map(|_| window.uniform_point(rng)).collect();
        return Ok(out);
    }
    for _ in 0..n {
        out.points.push(draw_from_intensity(intensity, window, lmax, rng)?);
    }
    Ok(out)
}

/// Homogeneous proposals at rate `λ_max`, each kept with probability
/// `λ(x)/λ_max`.
pub fn sample_poisson_thinning(intensity: &IntensitySpec, window: &Window, rng: &mut RngStream) -> Result<PointPattern> {
    intensity.check(window)?;
    let lmax = intensity.bound();
    let mut out = PointPattern::empty(*window);
    if lmax == 0.0 {
        return Ok(out);
    }
    let n = rng.poisson(lmax * window.area())?;
    for _ in 0..n {
        let p = window.uniform_point(rng);
        let v = intensity.eval(p[0], p[1]);
        if v > lmax * (1.0 + 1e-12) {
            return Err(Error::BoundViolated { x: p[0], y: p[1], value: v, bound: lmax });
        }
        if rng.uniform() * lmax < v {
            out.points.push(p);
        }
    }
    Ok(out)
}

/// Distribution of independent marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MarkDistribution {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    /// Gamma with the given shape and rate.
    Gamma { shape: f64, rate: f64 },
}

impl MarkDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarkDistribution::Constant(c) if c.is_finite() => Ok(()),
            MarkDistribution::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo <= hi => Ok(()),
            MarkDistribution::Gamma { shape, rate } if shape > 0.0 && rate > 0.0 => Ok(()),
            m => Err(invalid(format!("invalid mark distribution {m:?}"))),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarkDistribution::Constant(c) => c,
            MarkDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            MarkDistribution::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        match *self {
            MarkDistribution::Constant(c) => Ok(c),
            MarkDistribution::Uniform { lo, hi } => Ok(rng.uniform_in(lo, hi)),
            MarkDistribution::Gamma { shape, rate } => rng.gamma(shape, rate),
        }
    }
}

/// Poisson points (by inversion) with iid marks.
pub fn sample_marked_poisson(
    intensity: &IntensitySpec,
    window: &Window,
    marks: &MarkDistribution,
    rng: &mut RngStream,
) -> Result<PointPattern> {
    marks.validate()?;
    let mut p = sample_poisson_inversion(intensity, window, rng)?;
    let m = (0..p.len()).map(|_| marks.sample(rng)).collect::<Result<Vec<_>>>()?;
    p.marks = Some(m);
    Ok(p)
}

/// Cluster process output: all points plus the generating centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRealization {
    pub pattern: PointPattern,
    pub centers: Vec<[f64; 2]>,
    /// Per-centre random weights (shot-noise processes only).
    pub center_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    /// Intensity of the immigrant (generation-0) points.
    pub center_intensity: f64,
    /// Mean number of children per point.
    pub alpha: f64,
    /// Standard deviation of the Gaussian displacement.
    pub sigma: f64,
}

impl HawkesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_intensity >= 0.0 && self.center_intensity.is_finite()) {
            return Err(invalid("centre intensity must be finite and >= 0"));
        }
        if !(self.alpha >= 0.0) {
            return Err(invalid("mean offspring count must be >= 0"));
        }
        if self.alpha >= 1.0 {
            return Err(Error::Supercritical(self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma must be positive"));
        }
        Ok(())
    }
}

/// Hawkes branching process: homogeneous immigrants, each point spawning
/// `Poi(α)` children displaced by `N(0, σ²I)`, until extinction. All
/// generations are returned, including points outside the window.
pub fn sample_hawkes(params: &HawkesParams, window: &Window, rng: &mut RngStream) -> Result<ClusterRealization> {
    params.validate()?;
    let mut centre_rng = rng.split(0);
    let n = centre_rng.poisson(params.center_intensity * window.area())?;
    let centers: Vec<[f64; 2]> = (0..n).map(|_| window.uniform_point(&mut centre_rng)).collect();
    hawkes_from_centers(params, window, &centers, rng)
}

/// Hawkes descendants of fixed immigrants. Centre `k` and its whole family
/// use the stream `rng.split(k + 1)`, so families do not share randomness.
pub fn hawkes_from_centers(
    params: &HawkesParams,
    window: &Window,
    centers: &[[f64; 2]],
    rng: &RngStream,
) -> Result<ClusterRealization> {
    params.validate()?;
    let mut points = Vec::new();
    for (k, &c) in centers.iter().enumerate() {
        let mut fam = rng.split(k as u64 + 1);
        let start = points.len();
        points.push(c);
        // breadth-first over the family tree
        let mut next = start;
        while next < points.len() {
            let parent: [f64; 2] = points[next];
            next += 1;
            let kids = fam.poisson(params.alpha)?;
            for _ in 0..kids {
                if points.len() >= HAWKES_POINT_CAP {
                    return Err(Error::TooManyPoints(HAWKES_POINT_CAP));
                }
                points.push([
                    parent[0] + params.sigma * fam.std_normal(),
                    parent[1] + params.sigma * fam.std_normal(),
                ]);
            }
        }
    }
    Ok(ClusterRealization {
        pattern: PointPattern { points, window: *window, marks: None, extends_beyond_window: true },
        centers: centers.to_vec(),
        center_weights: None,
    })
}

/// Offspring displacement law of a cluster process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClusterKernel {
    /// Uniform on the disc of radius `r`.
    MaternBall { r: f64 },
    /// Isotropic Gaussian with standard deviation `sigma`.
    ThomasGauss { sigma: f64 },
}

impl ClusterKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ClusterKernel::MaternBall { r } if r > 0.0 && r.is_finite() => Ok(()),
            ClusterKernel::ThomasGauss { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            k => Err(invalid(format!("invalid cluster kernel {k:?}"))),
        }
    }

    /// Dilation of the window on which centres are drawn.
    pub fn margin(&self) -> f64 {
        match *self {
            ClusterKernel::MaternBall { r } => r,
            ClusterKernel::ThomasGauss { sigma } => THOMAS_MARGIN_SIGMAS * sigma,
        }
    }

    pub fn displace(&self, c: [f64; 2], rng: &mut RngStream) -> [f64; 2] {
        match *self {
            ClusterKernel::MaternBall { r } => {
                let rad = r * rng.uniform().sqrt();
                let ang = 2.0 * PI * rng.uniform();
                [c[0] + rad * ang.cos(), c[1] + rad * ang.sin()]
            }
            ClusterKernel::ThomasGauss { sigma } => {
                [c[0] + sigma * rng.std_normal(), c[1] + sigma * rng.std_normal()]
            }
        }
    }

    /// Density `k(c, x)` of the displacement `x − c`.
    pub fn density(&self, d: [f64; 2]) -> f64 {
        let d2 = d[0] * d[0] + d[1] * d[1];
        match *self {
            ClusterKernel::MaternBall { r } => {
                if d2 <= r * r {
                    1.0 / (PI * r * r)
                } else {
                    0.0
                }
            }
            ClusterKernel::ThomasGauss { sigma } => {
                (-d2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
            }
        }
    }
}

/// Neyman–Scott process: centres `~ Poi(κ)` on the dilated window, `Poi(α)`
/// offspring per centre from `kernel`. Centres are not part of the pattern;
/// offspring outside the window are kept.
pub fn sample_neyman_scott(
    kappa: f64,
    alpha: f64,
    kernel: &ClusterKernel,
    window: &Window,
    rng: &mut RngStream,
) -> Result<ClusterRealization> {
    if !(kappa >= 0.0 && kappa.is_finite() && alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("kappa and alpha must be finite and >= 0, got {kappa}, {alpha}")));
    }
    kernel.validate()?;
    let ext = window.dilate(kernel.margin());
    let mut centre_rng = rng.split(0);
    let n = centre_rng.poisson(kappa * ext.area())?;
    let centers: Vec<[f64; 2]> = (0..n).map(|_| ext.uniform_point(&mut centre_rng)).collect();
    neyman_scott_from_centers(alpha, kernel, window, &centers, rng)
}

/// Offspring of fixed centres; centre `k` uses `rng.split(k + 1)`.
pub fn neyman_scott_from_centers(
    alpha: f64,
    kernel: &ClusterKernel,
    window: &Window,
    centers: &[[f64; 2]],
    rng: &RngStream,
) -> Result<ClusterRealization> {
    kernel.validate()?;
    let mut points = Vec::new();
    for (k, &c) in centers.iter().enumerate() {
        let mut fam = rng.split(k as u64 + 1);
        let kids = fam.poisson(alpha)?;
        for _ in 0..kids {
            points.push(kernel.displace(c, &mut fam));
        }
    }
    Ok(ClusterRealization {
        pattern: PointPattern { points, window: *window, marks: None, extends_beyond_window: true },
        centers: centers.to_vec(),
        center_weights: None,
    })
}

/// A Cox realization with the intensity it was drawn from.
#[derive(Debug, Clone)]
pub struct CoxRealization {
    pub pattern: PointPattern,
    pub intensity: IntensitySpec,
}

/// Draws an intensity from `sampler` (stream `rng.split(0)`), then a Poisson
/// process given it by thinning (stream `rng.split(1)`).
pub fn sample_cox<F>(sampler: F, window: &Window, rng: &mut RngStream) -> Result<CoxRealization>
where
    F: FnOnce(&mut RngStream) -> Result<IntensitySpec>,
{
    let intensity = sampler(&mut rng.split(0))?;
    let pattern = sample_poisson_thinning(&intensity, window, &mut rng.split(1))?;
    Ok(CoxRealization { pattern, intensity })
}

/// Shot-noise Cox process: centres `~ Poi(K)` on the window dilated by the
/// kernel margin, weights `γⱼ` from `weights`, `Nⱼ ~ Poi(γⱼ)` points from the
/// kernel around each centre; only points inside the window are returned.
pub fn sample_shot_noise_cox(
    center_intensity: f64,
    weights: &MarkDistribution,
    kernel: &ClusterKernel,
    window: &Window,
    rng: &mut RngStream,
) -> Result<ClusterRealization> {
    if !(center_intensity >= 0.0 && center_intensity.is_finite()) {
        return Err(invalid(format!("centre intensity must be finite and >= 0, got {center_intensity}")));
    }
    weights.validate()?;
    kernel.validate()?;
    let ext = window.dilate(kernel.margin());
    let mut centre_rng = rng.split(0);
    let n = centre_rng.poisson(center_intensity * ext.area())?;
    let centers: Vec<[f64; 2]> = (0..n).map(|_| ext.uniform_point(&mut centre_rng)).collect();
    let mut gammas = Vec::with_capacity(centers.len());
    for _ in 0..centers.len() {
        let g = weights.sample(&mut centre_rng)?;
        if !(g >= 0.0) {
            return Err(invalid(format!("shot-noise weights must be >= 0, got {g}")));
        }
        gammas.push(g);
    }
    let mut points = Vec::new();
    for (k, (&c, &g)) in centers.iter().zip(&gammas).enumerate() {
        let mut fam = rng.split(k as u64 + 1);
        let kids = fam.poisson(g)?;
        for _ in 0..kids {
            let p = kernel.displace(c, &mut fam);
            if window.contains(p) {
                points.push(p);
            }
        }
    }
    Ok(ClusterRealization {
        pattern: PointPattern { points, window: *window, marks: None, extends_beyond_window: false },
        centers,
        center_weights: Some(gammas),
    })
}

/// Centre intensity `K = β·λ^{−α}/α` and weight law `Gamma(α, λ)` of the
/// shot-noise G process.
pub fn shot_noise_g(alpha: f64, beta: f64, lambda: f64) -> Result<(f64, MarkDistribution)> {
    if !(alpha > 0.0 && beta > 0.0 && lambda > 0.0) {
        return Err(invalid("shot-noise G needs alpha, beta, lambda > 0"));
    }
    Ok((beta * lambda.powf(-alpha) / alpha, MarkDistribution::Gamma { shape: alpha, rate: lambda }))
}
