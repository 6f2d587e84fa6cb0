//! Wiener processes, fractional Brownian motion, fractional Wiener sheets and
//! fractional Brownian fields, all by exact circulant embedding.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::circulant::{plan_embedding_reflected, EmbeddingPlan, EIGEN_TOLERANCE};
use crate::dense::{MatrixKind, MvnSampler, MvnSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::{fgn_cov, stein_psi, Field, Grid2D, MaskedField, SteinConstants};
pub use crate::grid::{pillow_bridge_cov, PillowBridge};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstParam {
    h: f64,
}

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(invalid(format!("Hurst parameter must lie in (0,1), got {h}")));
        }
        Ok(Self { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Roughness `α = 2H`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.h
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("need at least one time"));
    }
    if !(times[0] >= 0.0) {
        return Err(invalid("times must start at or after 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("times must be finite and strictly increasing"));
    }
    Ok(())
}

/// `W` at each of `times`, with `W_0 = 0` implied before the first time.
pub fn sample_wiener_path(times: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    check_times(times)?;
    let mut prev = 0.0;
    let mut w = 0.0;
    Ok(times
        .iter()
        .map(|&t| {
            w += (t - prev).sqrt() * rng.std_normal();
            prev = t;
            w
        })
        .collect())
}

/// `X_t = μt + Σ^{1/2}·W_t` for a `d`-dimensional standard Wiener process;
/// row `k` of the result is `X` at `times[k]`.
pub fn sample_brownian_motion_d(
    mu: &[f64],
    sigma_sqrt: &Array2<f64>,
    times: &[f64],
    rng: &mut RngStream,
) -> Result<Array2<f64>> {
    let d = mu.len();
    if d == 0 || sigma_sqrt.dim() != (d, d) {
        return Err(invalid(format!("drift has dimension {d} but the root is {:?}", sigma_sqrt.dim())));
    }
    check_times(times)?;
    let mut w = Array2::zeros((times.len(), d));
    for c in 0..d {
        let path = sample_wiener_path(times, rng)?;
        w.column_mut(c).assign(&Array1::from(path));
    }
    let mut x = w.dot(&sigma_sqrt.t());
    for (k, &t) in times.iter().enumerate() {
        for c in 0..d {
            x[[k, c]] += mu[c] * t;
        }
    }
    Ok(x)
}

/// Circulant spectrum of `n` fGn increments, reusable across paths.
#[derive(Clone)]
pub struct FbmPlan {
    pub n: usize,
    pub hurst: HurstParam,
    pub eigenvalues: Vec<f64>,
    sqrt_eigen: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FbmPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FbmPlan").field("n", &self.n).field("hurst", &self.hurst).finish()
    }
}

/// Eigenvalues `real(fft(c))/(2n)` of the circulant with first row
/// `c = (r₀, …, r_n, r_{n−1}, …, r₁)`, `r_k` the fGn autocovariance.
pub fn plan_fbm(n: usize, hurst: HurstParam) -> Result<FbmPlan> {
    if n == 0 {
        return Err(invalid("fBm needs at least one step"));
    }
    let alpha = hurst.alpha();
    let len = 2 * n;
    let mut row: Vec<Complex64> = (0..len)
        .map(|k| Complex64::new(fgn_cov(k.min(len - k) as f64, alpha), 0.0))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(len);
    fft.process(&mut row);
    let mut eigenvalues: Vec<f64> = row.iter().map(|v| v.re / len as f64).collect();
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EIGEN_TOLERANCE {
        return Err(Error::EmbeddingInfeasible { min });
    }
    for v in &mut eigenvalues {
        *v = v.max(0.0);
    }
    Ok(FbmPlan {
        n,
        hurst,
        sqrt_eigen: eigenvalues.iter().map(|v| v.sqrt()).collect(),
        eigenvalues,
        fft,
    })
}

impl FbmPlan {
    /// The `n` fGn increments `Re/Im(fft(√λ ⊙ Z))[0..n]` for given noise.
    pub fn increments(&self, noise: &[Complex64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if noise.len() != 2 * self.n {
            return Err(invalid(format!("noise must have length {}", 2 * self.n)));
        }
        let mut w: Vec<Complex64> = noise.iter().zip(&self.sqrt_eigen).map(|(z, s)| z * s).collect();
        self.fft.process(&mut w);
        Ok((w[..self.n].iter().map(|v| v.re).collect(), w[..self.n].iter().map(|v| v.im).collect()))
    }

    /// Paths on `{0, 1/n, …, 1}` (length `n + 1`, starting at 0) for given noise.
    pub fn synthesize(&self, noise: &[Complex64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (a, b) = self.increments(noise)?;
        let scale = (self.n as f64).powf(-self.hurst.h());
        let path = |inc: Vec<f64>| {
            let mut out = Vec::with_capacity(self.n + 1);
            let mut acc = 0.0;
            out.push(0.0);
            for x in inc {
                acc += x;
                out.push(scale * acc);
            }
            out
        };
        Ok((path(a), path(b)))
    }

    /// Two independent fBm paths.
    pub fn sample_pair(&self, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
        let noise: Vec<Complex64> = (0..2 * self.n)
            .map(|_| {
                let (a, b) = rng.complex_std_normal();
                Complex64::new(a, b)
            })
            .collect();
        self.synthesize(&noise).expect("noise length matches")
    }
}

/// One fBm path on `{0, 1/n, …, 1}`.
pub fn sample_fbm(n: usize, hurst: HurstParam, rng: &mut RngStream) -> Result<Vec<f64>> {
    Ok(plan_fbm(n, hurst)?.sample_pair(rng).0)
}

/// Embedding of the separable 2D fGn covariance for an `n × n` block of
/// increments.
pub fn plan_fgn_sheet(n: usize, hurst: HurstParam) -> Result<EmbeddingPlan> {
    if n == 0 {
        return Err(invalid("sheet needs at least one cell"));
    }
    let alpha = hurst.alpha();
    // n + 1 points give a 2n × 2n reflected circulant holding lags 0..=n
    let grid = Grid2D::square(n + 1)?;
    plan_embedding_reflected(grid, &|hx, hy| fgn_cov(hx, alpha) * fgn_cov(hy, alpha))
}

fn sheet_from_increments(x: &Field, n: usize, h: f64) -> Result<Field> {
    let scale = (n as f64).powf(-2.0 * h);
    let mut w = Array2::zeros((n + 1, n + 1));
    for j in 0..n {
        let mut row = 0.0;
        for i in 0..n {
            row += x.values[[j, i]];
            w[[j + 1, i + 1]] = w[[j, i + 1]] + row;
        }
    }
    w.mapv_inplace(|v: f64| v * scale);
    let h = 1.0 / n as f64;
    Field::new(Grid2D::new(n + 1, n + 1, h, h, (0.0, 0.0))?, w)
}

/// Two independent fractional Wiener sheets on `{0, 1/n, …, 1}²`
/// (`(n+1) × (n+1)` values, zero on the axes).
pub fn sample_fractional_wiener_sheet_pair(plan: &EmbeddingPlan, hurst: HurstParam, rng: &mut RngStream) -> Result<(Field, Field)> {
    let n = plan.grid.nx - 1;
    let (a, b) = crate::circulant::sample_embedded(plan, rng)?;
    Ok((sheet_from_increments(&a, n, hurst.h())?, sheet_from_increments(&b, n, hurst.h())?))
}

pub fn sample_fractional_wiener_sheet(n: usize, hurst: HurstParam, rng: &mut RngStream) -> Result<Field> {
    let plan = plan_fgn_sheet(n, hurst)?;
    Ok(sample_fractional_wiener_sheet_pair(&plan, hurst, rng)?.0)
}

/// Embedding plan for the fractional Brownian field on an `m × n` grid over
/// `[0, R]²`.
#[derive(Debug, Clone)]
pub struct FbfPlan {
    pub hurst: HurstParam,
    pub constants: SteinConstants,
    pub embedding: EmbeddingPlan,
}

pub fn plan_fbf(m: usize, n: usize, hurst: HurstParam) -> Result<FbfPlan> {
    if m < 2 || n < 2 {
        return Err(invalid("the fractional Brownian field needs at least 2 points per axis"));
    }
    let alpha = hurst.alpha();
    let constants = SteinConstants::for_alpha(alpha)?;
    let r = constants.r;
    let grid = Grid2D::new(n, m, r / (n - 1) as f64, r / (m - 1) as f64, (0.0, 0.0))?;
    let embedding = plan_embedding_reflected(grid, &|hx, hy| stein_psi(hx.hypot(hy), &constants, alpha))?;
    Ok(FbfPlan { hurst, constants, embedding })
}

impl FbfPlan {
    /// `X̃_t = X̆_t − X̆_0 + √(2c₂)·(t₁Z₁ + t₂Z₂)` on the quarter disk
    /// `‖t‖ ≤ 1`, given the stationary field `X̆` and the pair `(Z₁, Z₂)`.
    pub fn correct(&self, stationary: &Field, z: (f64, f64)) -> Result<MaskedField> {
        let g = stationary.grid;
        let x0 = stationary.values[[0, 0]];
        let k = (2.0 * self.constants.c2).sqrt();
        let mut values = Array2::zeros((g.ny, g.nx));
        let mut mask = Array2::zeros((g.ny, g.nx));
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (t1, t2) = g.point(j, i);
                if t1.hypot(t2) <= 1.0 + 1e-12 {
                    values[[j, i]] = stationary.values[[j, i]] - x0 + k * (t1 * z.0 + t2 * z.1);
                    mask[[j, i]] = 1;
                }
            }
        }
        Ok(MaskedField { field: Field::new(g, values)?, mask })
    }

    /// Two independent fields from one embedding draw.
    pub fn sample_pair(&self, rng: &mut RngStream) -> Result<(MaskedField, MaskedField)> {
        let (a, b) = crate::circulant::sample_embedded(&self.embedding, rng)?;
        let za = (rng.std_normal(), rng.std_normal());
        let zb = (rng.std_normal(), rng.std_normal());
        Ok((self.correct(&a, za)?, self.correct(&b, zb)?))
    }
}

pub fn sample_fbf(m: usize, n: usize, hurst: HurstParam, rng: &mut RngStream) -> Result<(MaskedField, MaskedField)> {
    plan_fbf(m, n, hurst)?.sample_pair(rng)
}

/// Covariance of the fractional Brownian field, `‖s‖^α + ‖t‖^α − ‖s−t‖^α`.
pub fn fbf_cov(s: [f64; 2], t: [f64; 2], alpha: f64) -> f64 {
    let n = |p: [f64; 2]| p[0].hypot(p[1]).powf(alpha);
    n(s) + n(t) - n([s[0] - t[0], s[1] - t[1]])
}

/// Wiener pillow or bridge on the interior grid `{(i/(n+1), j/(n+1))}`,
/// `i, j = 1..n`, by dense Cholesky.
pub fn sample_pillow_bridge(variant: PillowBridge, n: usize, rng: &mut RngStream) -> Result<Field> {
    let h = 1.0 / (n + 1) as f64;
    let grid = Grid2D::new(n, n, h, h, (h, h))?;
    let pts: Vec<[f64; 2]> = (0..n * n).map(|k| {
        let (x, y) = grid.point(k / n, k % n);
        [x, y]
    }).collect();
    let mut cov = Array2::zeros((n * n, n * n));
    for a in 0..n * n {
        for b in 0..=a {
            let c = pillow_bridge_cov(variant, &pts[a], &pts[b], 2)?;
            cov[[a, b]] = c;
            cov[[b, a]] = c;
        }
    }
    let spec = MvnSpec::new(Array1::zeros(n * n), cov, MatrixKind::Covariance)?;
    let x = MvnSampler::new(&spec)?.sample(rng);
    Field::new(grid, Array2::from_shape_vec((n, n), x.to_vec()).expect("n*n values"))
}
