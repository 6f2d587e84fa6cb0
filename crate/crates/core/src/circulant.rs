//! Exact FFT sampling of stationary Gaussian fields: the torus sampler and
//! block-circulant embedding of a rectangular grid.
//!
//! FFT convention: [`fft2`] is the unnormalized forward transform
//! `out[p,q] = Σ in[j,k]·exp(−2πi(jp/M + kq/N))`. Every scaling is applied
//! explicitly by the caller.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array1, Array2};
pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::Serialize;

use crate::dense::{MatrixKind, MvnSampler, MvnSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::{torus_distance, CovarianceModel, Field, Grid2D};
use crate::rng::RngStream;

/// Absolute floor for the embedding eigenvalues; anything in
/// `[−EIGEN_TOLERANCE, 0)` is clipped to zero.
pub const EIGEN_TOLERANCE: f64 = 1e-15;

/// Cached row and column transforms for a fixed `rows × cols` shape.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft2({}x{}, {:?})", self.rows, self.cols, self.row_fft.fft_direction())
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize, direction: FftDirection) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fft: planner.plan_fft(cols, direction),
            col_fft: planner.plan_fft(rows, direction),
        }
    }

    pub fn process(&self, a: &mut Array2<Complex64>) {
        assert_eq!(a.dim(), (self.rows, self.cols), "array shape does not match the FFT plan");
        if a.is_empty() {
            return;
        }
        let (r, c) = (self.rows, self.cols);
        let data = a.as_slice_mut().expect("standard layout");
        self.row_fft.process(data);
        let mut t = vec![Complex64::default(); r * c];
        for j in 0..r {
            for i in 0..c {
                t[i * r + j] = data[j * c + i];
            }
        }
        self.col_fft.process(&mut t);
        for i in 0..c {
            for j in 0..r {
                data[j * c + i] = t[i * r + j];
            }
        }
    }
}

fn standard(a: &Array2<Complex64>) -> Array2<Complex64> {
    if a.is_standard_layout() {
        a.clone()
    } else {
        a.as_standard_layout().to_owned()
    }
}

/// Unnormalized forward 2D DFT.
pub fn fft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = standard(a);
    Fft2::new(a.nrows(), a.ncols(), FftDirection::Forward).process(&mut out);
    out
}

/// Inverse of [`fft2`]: the conjugate transform divided by `MN`.
pub fn ifft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = standard(a);
    Fft2::new(a.nrows(), a.ncols(), FftDirection::Inverse).process(&mut out);
    let scale = 1.0 / a.len() as f64;
    out.mapv_inplace(|v| v * scale);
    out
}

fn real_fft2(a: &Array2<f64>) -> Array2<f64> {
    fft2(&a.mapv(|v| Complex64::new(v, 0.0))).mapv(|v| v.re)
}

/// Clips eigenvalues in `[−tol, 0)` to zero and returns how many were
/// clipped, or an error if any lies below `−tol`.
fn clip_eigenvalues(values: &mut Array2<f64>, tol: f64) -> Result<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::EmbeddingInfeasible { min });
    }
    let mut count = 0;
    values.mapv_inplace(|v| {
        if v < 0.0 {
            count += 1;
            0.0
        } else {
            v
        }
    });
    Ok(count)
}

fn complex_noise(rows: usize, cols: usize, rng: &mut RngStream) -> Array2<Complex64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        let (a, b) = rng.complex_std_normal();
        Complex64::new(a, b)
    })
}

/// Precomputed spectrum for the `n × n` unit-torus sampler.
#[derive(Debug, Clone)]
pub struct TorusPlan {
    pub n: usize,
    pub gamma: Array2<f64>,
    pub clip_count: usize,
    sqrt_gamma: Array2<f64>,
    fft: Fft2,
}

/// Spectrum of the covariance `ρ(‖s − t‖_T)` on the grid `{(i/n, j/n)}`.
/// Only stationary lag models are accepted; `TorusExp` is the intended one.
pub fn plan_torus(n: usize, model: &CovarianceModel) -> Result<TorusPlan> {
    if n == 0 {
        return Err(invalid("torus size must be at least 1"));
    }
    if !matches!(model, CovarianceModel::TorusExp { .. }) {
        return Err(invalid("the torus sampler takes a TorusExp model"));
    }
    model.validate()?;
    let h = 1.0 / n as f64;
    let mut g = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            // the model applies the torus norm to the lag itself
            debug_assert!(torus_distance([0.0, 0.0], [i as f64 * h, j as f64 * h]).is_ok());
            g[[j, i]] = model.eval_lag([i as f64 * h, j as f64 * h])?;
        }
    }
    plan_torus_from_base(g)
}

/// Torus plan from an explicit first row `G` of the block-circulant covariance.
pub fn plan_torus_from_base(g: Array2<f64>) -> Result<TorusPlan> {
    let n = g.nrows();
    if n == 0 || g.ncols() != n {
        return Err(invalid(format!("torus base must be square and nonempty, got {:?}", g.dim())));
    }
    let mut gamma = real_fft2(&g);
    let max = gamma.iter().copied().fold(0.0f64, f64::max);
    let clip_count = clip_eigenvalues(&mut gamma, EIGEN_TOLERANCE * max)?;
    Ok(TorusPlan {
        n,
        sqrt_gamma: gamma.mapv(f64::sqrt),
        gamma,
        clip_count,
        fft: Fft2::new(n, n, FftDirection::Forward),
    })
}

impl TorusPlan {
    pub fn grid(&self) -> Grid2D {
        Grid2D::unit_torus(self.n).expect("n >= 1")
    }

    /// `Re(fft2(√Γ ⊙ Z)) / n` for given complex noise `Z`.
    pub fn synthesize(&self, noise: &Array2<Complex64>) -> Result<Field> {
        if noise.dim() != (self.n, self.n) {
            return Err(invalid(format!("noise must be {}x{}", self.n, self.n)));
        }
        let mut w = standard(noise);
        w.zip_mut_with(&self.sqrt_gamma, |z, s| *z *= *s);
        self.fft.process(&mut w);
        let inv = 1.0 / self.n as f64;
        Field::new(self.grid(), w.mapv(|v| v.re * inv))
    }
}

pub fn sample_torus(plan: &TorusPlan, rng: &mut RngStream) -> Result<Field> {
    plan.synthesize(&complex_noise(plan.n, plan.n, rng))
}

/// How the target grid is wrapped into a circulant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EmbeddingKind {
    /// `(2m−1) × (2n−1)` base with signed lags.
    Minimal,
    /// Even extension of size `2(m−1) × 2(n−1)`; requires `ρ` symmetric in
    /// each coordinate separately.
    Reflected,
}

/// Spectrum of a block-circulant embedding, reusable across realizations.
#[derive(Debug, Clone)]
pub struct EmbeddingPlan {
    pub grid: Grid2D,
    pub kind: EmbeddingKind,
    pub base_row_matrix: Array2<f64>,
    pub eigenvalues: Array2<f64>,
    pub clip_count: usize,
    sqrt_eigen: Array2<f64>,
    fft: Fft2,
}

fn signed_lag(idx: usize, keep: usize, period: usize) -> f64 {
    if idx < keep {
        idx as f64
    } else {
        idx as f64 - period as f64
    }
}

/// Minimal embedding of `grid` for the lag covariance `rho(hx, hy)`.
pub fn plan_embedding(grid: Grid2D, rho: &dyn Fn(f64, f64) -> f64) -> Result<EmbeddingPlan> {
    plan_embedding_padded(grid, rho, 1.0)
}

/// Embedding into a circulant built for a grid enlarged by `padding ≥ 1` per
/// axis (side `⌈f·n⌉`, base `2⌈f·n⌉ − 1`); the original `m × n` block is
/// extracted when sampling.
pub fn plan_embedding_padded(grid: Grid2D, rho: &dyn Fn(f64, f64) -> f64, padding: f64) -> Result<EmbeddingPlan> {
    if !(padding >= 1.0 && padding.is_finite()) {
        return Err(invalid(format!("padding factor must be >= 1, got {padding}")));
    }
    let n = (grid.nx as f64 * padding).ceil() as usize;
    let m = (grid.ny as f64 * padding).ceil() as usize;
    let (rows, cols) = (2 * m - 1, 2 * n - 1);
    let mut base = Array2::zeros((rows, cols));
    for p in 0..rows {
        let hy = signed_lag(p, m, rows) * grid.dy;
        for c in 0..cols {
            base[[p, c]] = rho(signed_lag(c, n, cols) * grid.dx, hy);
        }
    }
    finish_plan(grid, EmbeddingKind::Minimal, base)
}

/// Reflected (even) embedding, for covariances with `ρ(±hx, ±hy)` equal.
pub fn plan_embedding_reflected(grid: Grid2D, rho: &dyn Fn(f64, f64) -> f64) -> Result<EmbeddingPlan> {
    if grid.nx < 2 || grid.ny < 2 {
        return Err(invalid("reflected embedding needs at least 2 points per axis"));
    }
    let (rows, cols) = (2 * (grid.ny - 1), 2 * (grid.nx - 1));
    let mut base = Array2::zeros((rows, cols));
    for p in 0..rows {
        let hy = p.min(rows - p) as f64 * grid.dy;
        for c in 0..cols {
            base[[p, c]] = rho(c.min(cols - c) as f64 * grid.dx, hy);
        }
    }
    finish_plan(grid, EmbeddingKind::Reflected, base)
}

fn finish_plan(grid: Grid2D, kind: EmbeddingKind, base: Array2<f64>) -> Result<EmbeddingPlan> {
    if base.iter().any(|v| !v.is_finite()) {
        return Err(invalid("covariance returned a non-finite value"));
    }
    let (rows, cols) = base.dim();
    let mut eigenvalues = real_fft2(&base) / (rows * cols) as f64;
    let clip_count = clip_eigenvalues(&mut eigenvalues, EIGEN_TOLERANCE)?;
    Ok(EmbeddingPlan {
        grid,
        kind,
        sqrt_eigen: eigenvalues.mapv(f64::sqrt),
        base_row_matrix: base,
        eigenvalues,
        clip_count,
        fft: Fft2::new(rows, cols, FftDirection::Forward),
    })
}

impl EmbeddingPlan {
    /// Side of the (square-blocked) circulant: `rows · cols`.
    pub fn circulant_dim(&self) -> usize {
        self.base_row_matrix.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The deterministic map `Z ↦ fft2(√λ ⊙ Z)` restricted to the target
    /// block; returns the real and imaginary parts as two fields.
    pub fn synthesize(&self, noise: &Array2<Complex64>) -> Result<(Field, Field)> {
        if noise.dim() != self.base_row_matrix.dim() {
            return Err(invalid(format!("noise must be {:?}", self.base_row_matrix.dim())));
        }
        let mut w = standard(noise);
        w.zip_mut_with(&self.sqrt_eigen, |z, s| *z *= *s);
        self.fft.process(&mut w);
        let (ny, nx) = (self.grid.ny, self.grid.nx);
        let block = w.slice(ndarray::s![..ny, ..nx]);
        Ok((
            Field::new(self.grid, block.mapv(|v| v.re))?,
            Field::new(self.grid, block.mapv(|v| v.im))?,
        ))
    }
}

/// Two independent realizations from one draw of complex noise.
pub fn sample_embedded(plan: &EmbeddingPlan, rng: &mut RngStream) -> Result<(Field, Field)> {
    let (r, c) = plan.base_row_matrix.dim();
    plan.synthesize(&complex_noise(r, c, rng))
}

/// Dense covariance `Ω` of the grid points under `rho`, points in row-major
/// order.
pub fn dense_covariance(grid: &Grid2D, rho: &dyn Fn(f64, f64) -> f64) -> Array2<f64> {
    let n = grid.len();
    let mut omega = Array2::zeros((n, n));
    for a in 0..n {
        let (ja, ia) = (a / grid.nx, a % grid.nx);
        for b in 0..n {
            let (jb, ib) = (b / grid.nx, b % grid.nx);
            let hx = (ib as f64 - ia as f64) * grid.dx;
            let hy = (jb as f64 - ja as f64) * grid.dy;
            omega[[a, b]] = rho(hx, hy);
        }
    }
    omega
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n_per_axis: usize,
    pub points: usize,
    pub circulant_secs: f64,
    pub dense_secs: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of circulant time against the number of points `N = n²`.
    pub circulant_slope_points: f64,
    pub circulant_slope_axis: f64,
    pub dense_slope_points: Option<f64>,
    pub dense_slope_axis: Option<f64>,
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn best_of<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..reps {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Times plan+sample for the circulant sampler and factor+sample for dense
/// Cholesky on `n × n` grids of the exponential covariance
/// `exp(−‖h‖/(n/8))`. Dense timings are taken only for `n² ≤ dense_limit`.
pub fn benchmark_scaling(sizes: &[usize], dense_limit: usize, seed: u64) -> Result<ScalingReport> {
    if sizes.len() < 2 {
        return Err(invalid("need at least two sizes to fit a slope"));
    }
    let mut rows = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        if n < 2 {
            return Err(invalid("benchmark sizes must be at least 2"));
        }
        let grid = Grid2D::square(n)?;
        let range = n as f64 / 8.0;
        let rho = move |hx: f64, hy: f64| (-hx.hypot(hy) / range).exp();
        let mut rng = RngStream::new(seed, k as u64);
        let reps = if n <= 64 { 5 } else { 1 };
        let circulant_secs = best_of(reps, || {
            let plan = plan_embedding(grid, &rho)?;
            sample_embedded(&plan, &mut rng)?;
            Ok(())
        })?;
        let dense_secs = if n * n <= dense_limit {
            let omega = dense_covariance(&grid, &rho);
            let reps = if n * n <= 1024 { 3 } else { 1 };
            Some(best_of(reps, || {
                let spec = MvnSpec::new(Array1::zeros(n * n), omega.clone(), MatrixKind::Covariance)?;
                MvnSampler::new(&spec)?.sample(&mut rng);
                Ok(())
            })?)
        } else {
            None
        };
        rows.push(ScalingRow { n_per_axis: n, points: n * n, circulant_secs, dense_secs });
    }
    let pts: Vec<f64> = rows.iter().map(|r| r.points as f64).collect();
    let axis: Vec<f64> = rows.iter().map(|r| r.n_per_axis as f64).collect();
    let circ: Vec<f64> = rows.iter().map(|r| r.circulant_secs).collect();
    let dense_rows: Vec<&ScalingRow> = rows.iter().filter(|r| r.dense_secs.is_some()).collect();
    let (dense_slope_points, dense_slope_axis) = if dense_rows.len() >= 2 {
        let p: Vec<f64> = dense_rows.iter().map(|r| r.points as f64).collect();
        let a: Vec<f64> = dense_rows.iter().map(|r| r.n_per_axis as f64).collect();
        let t: Vec<f64> = dense_rows.iter().map(|r| r.dense_secs.unwrap()).collect();
        (Some(log_log_slope(&p, &t)), Some(log_log_slope(&a, &t)))
    } else {
        (None, None)
    };
    Ok(ScalingReport {
        circulant_slope_points: log_log_slope(&pts, &circ),
        circulant_slope_axis: log_log_slope(&axis, &circ),
        dense_slope_points,
        dense_slope_axis,
        rows,
    })
}
