//! Gaussian Markov random fields on square lattices: banded precision
//! matrices, band Cholesky and sampling from the precision factor.
//!
//! Sites are numbered row-major, `k = j·m + i`, so 4-neighbour precisions
//! have bandwidth `m`.

use ndarray::{Array1, Array2};

use crate::dense::PIVOT_TOLERANCE;
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid2D};
use crate::rng::RngStream;

/// Symmetric band matrix storing the lower band `j ∈ [i−p, i]` of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    p: usize,
    /// `bands[i·(p+1) + (j − i + p)]` holds entry `(i, j)`.
    bands: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, bands: vec![0.0; n * (p + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.p
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        (i - j <= self.p).then(|| i * (self.p + 1) + (j + self.p - i))
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.bands[s])
    }

    /// Sets `(i, j)` and, by symmetry, `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        match self.slot(i, j) {
            Some(s) => {
                self.bands[s] = v;
                Ok(())
            }
            None => Err(invalid(format!("entry ({i}, {j}) lies outside bandwidth {}", self.p))),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| self.get(i, j))
    }

    /// Lower-triangular dense view (for factors).
    pub fn lower_to_dense(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| if j <= i { self.get(i, j) } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGmrfSpec {
    pub m: usize,
    pub diag_value: f64,
    pub neighbor_value: f64,
}

impl LatticeGmrfSpec {
    pub fn new(m: usize, diag_value: f64, neighbor_value: f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("lattice side must be at least 1"));
        }
        if !diag_value.is_finite() || !neighbor_value.is_finite() {
            return Err(invalid("precision entries must be finite"));
        }
        Ok(Self { m, diag_value, neighbor_value })
    }
}

/// Precision with `diag_value` on the diagonal and `neighbor_value` between
/// 4-neighbours; edges are truncated, not wrapped.
pub fn build_lattice_precision(spec: &LatticeGmrfSpec) -> BandMatrix {
    let m = spec.m;
    let mut q = BandMatrix::zeros(m * m, m);
    for j in 0..m {
        for i in 0..m {
            let k = j * m + i;
            q.set(k, k, spec.diag_value).expect("diagonal is in band");
            if i + 1 < m {
                q.set(k + 1, k, spec.neighbor_value).expect("in band");
            }
            if j + 1 < m {
                q.set(k + m, k, spec.neighbor_value).expect("in band");
            }
        }
    }
    q
}

/// Lower band factor `D` with `D·Dᵀ = M`.
pub fn band_cholesky(a: &BandMatrix) -> Result<BandMatrix> {
    let (n, p) = (a.n, a.p);
    let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0f64, f64::max);
    let tol = PIVOT_TOLERANCE * max_diag;
    let w = p + 1;
    let mut l = BandMatrix::zeros(n, p);
    for i in 0..n {
        let lo = i.saturating_sub(p);
        for j in lo..=i {
            // Σ_{k ∈ [max(lo, j−p), j)} L[i,k]·L[j,k]
            let k0 = lo.max(j.saturating_sub(p));
            let mut s = a.get(i, j);
            for k in k0..j {
                s -= l.bands[i * w + (k + p - i)] * l.bands[j * w + (k + p - j)];
            }
            if i == j {
                if !(s > tol) || max_diag <= 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                }
                l.bands[i * w + p] = s.sqrt();
            } else {
                l.bands[i * w + (j + p - i)] = s / l.bands[j * w + p];
            }
        }
    }
    Ok(l)
}

/// Solves `Dᵀ·y = z` by back substitution inside the band.
#[allow(clippy::needless_range_loop)]
pub fn band_back_substitute(d: &BandMatrix, z: &[f64]) -> Vec<f64> {
    let (n, p, w) = (d.n, d.p, d.p + 1);
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..(i + p + 1).min(n) {
            // Dᵀ[i,k] = D[k,i]
            s -= d.bands[k * w + (i + p - k)] * y[k];
        }
        y[i] = s / d.bands[i * w + p];
    }
    y
}

/// Sampler holding the band factor of a lattice precision.
#[derive(Debug, Clone)]
pub struct GmrfSampler {
    spec: LatticeGmrfSpec,
    factor: BandMatrix,
}

impl GmrfSampler {
    pub fn new(spec: LatticeGmrfSpec) -> Result<Self> {
        let factor = band_cholesky(&build_lattice_precision(&spec))?;
        Ok(Self { spec, factor })
    }

    pub fn factor(&self) -> &BandMatrix {
        &self.factor
    }

    /// One draw of `N(mean, Λ⁻¹)` as an `m × m` field; `mean` is row-major
    /// of length `m²`.
    pub fn sample(&self, mean: &Array1<f64>, rng: &mut RngStream) -> Result<Field> {
        let m = self.spec.m;
        if mean.len() != m * m {
            return Err(invalid(format!("mean has length {}, expected {}", mean.len(), m * m)));
        }
        let z: Vec<f64> = (0..m * m).map(|_| rng.std_normal()).collect();
        let y = band_back_substitute(&self.factor, &z);
        let values = Array2::from_shape_fn((m, m), |(j, i)| mean[j * m + i] + y[j * m + i]);
        Field::new(Grid2D::square(m)?, values)
    }
}

pub fn sample_gmrf(spec: &LatticeGmrfSpec, mean: &Array1<f64>, rng: &mut RngStream) -> Result<Field> {
    GmrfSampler::new(*spec)?.sample(mean, rng)
}
