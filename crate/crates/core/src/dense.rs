//! Direct multivariate normal sampling by dense Cholesky factorization, from
//! either a covariance or a precision matrix, plus the disc moving-average
//! smoother.
//!
//! The dense path costs O(n³) and is limited to `n ≤ MAX_DENSE_DIM`; it also
//! serves as the reference against which the FFT samplers are checked.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid2D};
use crate::rng::RngStream;

/// Largest dimension accepted by [`MvnSpec`].
pub const MAX_DENSE_DIM: usize = 4096;

/// Pivots must exceed this fraction of the largest diagonal entry.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Covariance,
    Precision,
}

#[derive(Debug, Clone)]
pub struct MvnSpec {
    pub mean: Array1<f64>,
    pub matrix: Array2<f64>,
    pub kind: MatrixKind,
}

impl MvnSpec {
    pub fn new(mean: Array1<f64>, matrix: Array2<f64>, kind: MatrixKind) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if n > MAX_DENSE_DIM {
            return Err(invalid(format!(
                "dense sampling is limited to n <= {MAX_DENSE_DIM} (got {n}); use the circulant embedding sampler for large stationary grids"
            )));
        }
        if matrix.dim() != (n, n) {
            return Err(invalid(format!("matrix is {:?}, expected {n}x{n}", matrix.dim())));
        }
        check_symmetric(matrix.view())?;
        Ok(Self { mean, matrix, kind })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn check_symmetric(m: ArrayView2<'_, f64>) -> Result<()> {
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * scale {
                return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Lower Cholesky factor `L` with `L·Lᵀ = M`. Only the lower triangle of `m`
/// is read.
pub fn cholesky_lower(m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(invalid("Cholesky needs a square matrix"));
    }
    let max_diag = (0..n).map(|i| m[[i, i]]).fold(0.0f64, f64::max);
    let tol = PIVOT_TOLERANCE * max_diag;
    // contiguous row-major working copy of L
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            let s = m[[i, j]] - dot;
            if i == j {
                if !(s > tol) || max_diag <= 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(Array2::from_shape_vec((n, n), l).expect("shape matches"))
}

/// Sampler that factorizes once and reuses the factor for every draw.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: Array1<f64>,
    factor: Array2<f64>,
    kind: MatrixKind,
}

impl MvnSampler {
    pub fn new(spec: &MvnSpec) -> Result<Self> {
        Ok(Self {
            mean: spec.mean.clone(),
            factor: cholesky_lower(spec.matrix.view())?,
            kind: spec.kind,
        })
    }

    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    pub fn sample(&self, rng: &mut RngStream) -> Array1<f64> {
        let n = self.mean.len();
        let z: Vec<f64> = (0..n).map(|_| rng.std_normal()).collect();
        let y = match self.kind {
            // X = μ + L Z
            MatrixKind::Covariance => (0..n)
                .map(|i| {
                    let row = self.factor.row(i);
                    (0..=i).map(|k| row[k] * z[k]).sum()
                })
                .collect(),
            // solve Dᵀ Y = Z
            MatrixKind::Precision => solve_upper_transposed(&self.factor, &z),
        };
        &self.mean + &Array1::from(y)
    }
}

/// Solves `Lᵀ y = z` for lower-triangular `L` by back substitution.
pub(crate) fn solve_upper_transposed(l: &Array2<f64>, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// One draw of `N(μ, Σ)` via `X = μ + L·Z`.
pub fn sample_mvn_cov(spec: &MvnSpec, rng: &mut RngStream) -> Result<Array1<f64>> {
    if spec.kind != MatrixKind::Covariance {
        return Err(invalid("sample_mvn_cov needs a covariance specification"));
    }
    Ok(MvnSampler::new(spec)?.sample(rng))
}

/// One draw of `N(μ, Λ⁻¹)` via `Λ = D·Dᵀ`, `Dᵀ·Y = Z`, `X = μ + Y`.
pub fn sample_mvn_prec(spec: &MvnSpec, rng: &mut RngStream) -> Result<Array1<f64>> {
    if spec.kind != MatrixKind::Precision {
        return Err(invalid("sample_mvn_prec needs a precision specification"));
    }
    Ok(MvnSampler::new(spec)?.sample(rng))
}

/// `ℜ(B·Z) = B₁Z₁ − B₂Z₂` for a complex square root `B = B₁ + iB₂` of the
/// covariance (`B·B* = Σ`).
pub fn sample_complex_sqrt(b_re: ArrayView2<'_, f64>, b_im: ArrayView2<'_, f64>, rng: &mut RngStream) -> Result<Array1<f64>> {
    let n = b_re.nrows();
    if b_re.ncols() != n || b_im.dim() != (n, n) {
        return Err(invalid(format!(
            "complex square root parts must be square and equal in size, got {:?} and {:?}",
            b_re.dim(),
            b_im.dim()
        )));
    }
    let mut z1 = Array1::zeros(n);
    let mut z2 = Array1::zeros(n);
    for k in 0..n {
        let (a, b) = rng.complex_std_normal();
        z1[k] = a;
        z2[k] = b;
    }
    Ok(b_re.dot(&z1) - b_im.dot(&z2))
}

/// Integer offsets `(u, v)` with `u² + v² ≤ r²`.
pub fn disc_mask(r: f64) -> Vec<(isize, isize)> {
    let reach = r.floor() as isize;
    let r2 = r * r;
    let mut out = Vec::new();
    for v in -reach..=reach {
        for u in -reach..=reach {
            if (u * u + v * v) as f64 <= r2 {
                out.push((u, v));
            }
        }
    }
    out
}

/// Averages `noise` over the disc of radius `r` (in index units) around each
/// cell. The output covers only the interior where the whole disc fits, so it
/// shrinks by `⌊r⌋` cells on every side.
pub fn moving_average_field(noise: &Field, r: f64) -> Result<Field> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be nonnegative, got {r}")));
    }
    let reach = r.floor() as usize;
    let g = noise.grid;
    if 2 * reach + 1 > g.nx.min(g.ny) {
        return Err(invalid(format!(
            "radius {r} is larger than half the {}x{} grid",
            g.nx, g.ny
        )));
    }
    let mask = disc_mask(r);
    let inv = 1.0 / mask.len() as f64;
    let (ox, oy) = (g.nx - 2 * reach, g.ny - 2 * reach);
    let mut out = Array2::zeros((oy, ox));
    for j in 0..oy {
        for i in 0..ox {
            let (cj, ci) = ((j + reach) as isize, (i + reach) as isize);
            let sum: f64 = mask
                .iter()
                .map(|&(u, v)| noise.values[[(cj + v) as usize, (ci + u) as usize]])
                .sum();
            out[[j, i]] = sum * inv;
        }
    }
    let grid = Grid2D::new(
        ox,
        oy,
        g.dx,
        g.dy,
        (g.origin.0 + reach as f64 * g.dx, g.origin.1 + reach as f64 * g.dy),
    )?;
    Field::new(grid, out)
}

/// White noise on an `n × n` unit grid followed by [`moving_average_field`].
pub fn sample_moving_average(n: usize, r: f64, rng: &mut RngStream) -> Result<Field> {
    let grid = Grid2D::square(n)?;
    let values = Array2::from_shape_simple_fn((n, n), || rng.std_normal());
    moving_average_field(&Field::new(grid, values)?, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn frob(a: &Array2<f64>) -> f64 {
        a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn random_spd(n: usize, rng: &mut RngStream) -> Array2<f64> {
        let a = Array2::from_shape_simple_fn((n, n), || rng.std_normal());
        a.dot(&a.t()) + Array2::<f64>::eye(n)
    }

    #[test]
    fn cholesky_small_cases() {
        let l = cholesky_lower(Array2::<f64>::eye(4).view()).unwrap();
        assert_eq!(l, Array2::<f64>::eye(4));
        let m = array![[1.0, 0.5], [0.5, 1.0]];
        let l = cholesky_lower(m.view()).unwrap();
        assert!((l[[0, 0]] - 1.0).abs() < 1e-15);
        assert_eq!(l[[0, 1]], 0.0);
        assert!((l[[1, 0]] - 0.5).abs() < 1e-15);
        assert!((l[[1, 1]] - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = RngStream::new(5, 0);
        for n in [1, 2, 7, 20, 64] {
            let m = random_spd(n, &mut rng);
            let l = cholesky_lower(m.view()).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    assert_eq!(l[[i, j]], 0.0);
                }
            }
            let err = frob(&(l.dot(&l.t()) - &m)) / frob(&m);
            assert!(err < 1e-10, "n={n} err={err}");
        }
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let m = array![[1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]];
        match cholesky_lower(m.view()) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("expected failure, got {other:?}"),
        }
        let singular = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(cholesky_lower(singular.view()), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn spec_validation() {
        let asym = array![[1.0, 0.1], [0.2, 1.0]];
        assert!(MvnSpec::new(Array1::zeros(2), asym, MatrixKind::Covariance).is_err());
        assert!(MvnSpec::new(Array1::zeros(0), Array2::zeros((0, 0)), MatrixKind::Covariance).is_err());
        assert!(MvnSpec::new(Array1::zeros(3), Array2::eye(2), MatrixKind::Covariance).is_err());
        let big = MAX_DENSE_DIM + 1;
        let err = MvnSpec::new(Array1::zeros(big), Array2::zeros((1, 1)), MatrixKind::Covariance).unwrap_err();
        assert!(err.to_string().contains("circulant"));
    }

    #[test]
    fn identity_covariance_gives_iid_normals() {
        let spec = MvnSpec::new(Array1::zeros(3), Array2::eye(3), MatrixKind::Covariance).unwrap();
        let s = MvnSampler::new(&spec).unwrap();
        let mut rng = RngStream::new(1, 0);
        let n = 10_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let x = s.sample(&mut rng);
            for k in 0..3 {
                sums[k] += x[k];
            }
        }
        for m in sums {
            assert!((m / n as f64).abs() < 3.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn scaled_and_shifted_scalar() {
        let spec = MvnSpec::new(array![7.0], array![[4.0]], MatrixKind::Covariance).unwrap();
        let s = MvnSampler::new(&spec).unwrap();
        let mut rng = RngStream::new(2, 0);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)[0]).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - 7.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        assert!((v - 4.0).abs() < 3.0 * 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn correlated_pair_correlation() {
        let rho = 0.9;
        let spec = MvnSpec::new(Array1::zeros(2), array![[1.0, rho], [rho, 1.0]], MatrixKind::Covariance).unwrap();
        let s = MvnSampler::new(&spec).unwrap();
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = s.sample(&mut rng);
            sxy += x[0] * x[1];
            sxx += x[0] * x[0];
            syy += x[1] * x[1];
        }
        let r = sxy / (sxx * syy).sqrt();
        // Fisher-z: se(z) = 1/sqrt(n-3); se(r) ≈ (1-ρ²)/sqrt(n)
        assert!((r - rho).abs() < 0.01, "r={r}");
    }

    #[test]
    fn precision_diagonal() {
        let spec = MvnSpec::new(Array1::zeros(1), array![[4.0]], MatrixKind::Precision).unwrap();
        let s = MvnSampler::new(&spec).unwrap();
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let v = (0..n).map(|_| s.sample(&mut rng)[0].powi(2)).sum::<f64>() / n as f64;
        assert!((v - 0.25).abs() < 3.0 * 0.25 * (2.0 / n as f64).sqrt());
        assert!(sample_mvn_cov(&spec, &mut rng).is_err());
    }

    #[test]
    fn identity_precision_matches_identity_covariance_path() {
        // Λ = I: both routes draw Z and return it unchanged
        let cov = MvnSpec::new(Array1::zeros(5), Array2::eye(5), MatrixKind::Covariance).unwrap();
        let prec = MvnSpec::new(Array1::zeros(5), Array2::eye(5), MatrixKind::Precision).unwrap();
        let a = sample_mvn_cov(&cov, &mut RngStream::new(8, 1)).unwrap();
        let b = sample_mvn_prec(&prec, &mut RngStream::new(8, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn complex_root_cases() {
        // B_im = 0 coincides with the real factor
        let m = array![[2.0, 0.3], [0.3, 1.0]];
        let l = cholesky_lower(m.view()).unwrap();
        let zero = Array2::zeros((2, 2));
        let mut r1 = RngStream::new(6, 0);
        let mut r2 = RngStream::new(6, 0);
        let x = sample_complex_sqrt(l.view(), zero.view(), &mut r1).unwrap();
        let (z1a, _) = r2.complex_std_normal();
        let (z1b, _) = r2.complex_std_normal();
        let expect = l.dot(&array![z1a, z1b]);
        assert!((&x - &expect).iter().all(|d| d.abs() < 1e-15));

        // n = 1, B = i → X = −Z₂
        let mut r1 = RngStream::new(7, 0);
        let mut r2 = RngStream::new(7, 0);
        let x = sample_complex_sqrt(array![[0.0]].view(), array![[1.0]].view(), &mut r1).unwrap();
        let (_, z2) = r2.complex_std_normal();
        assert_eq!(x[0], -z2);

        assert!(sample_complex_sqrt(Array2::eye(2).view(), Array2::eye(3).view(), &mut r1).is_err());
    }

    #[test]
    fn complex_root_half_identity_has_identity_covariance() {
        let h = 0.5f64.sqrt();
        let b = Array2::<f64>::eye(3) * h;
        let mut rng = RngStream::new(9, 0);
        let n = 100_000;
        let mut c = Array2::<f64>::zeros((3, 3));
        for _ in 0..n {
            let x = sample_complex_sqrt(b.view(), b.view(), &mut rng).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    c[[i, j]] += x[i] * x[j];
                }
            }
        }
        c /= n as f64;
        let se_diag = (2.0 / n as f64).sqrt();
        let se_off = (1.0 / n as f64).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let (target, se) = if i == j { (1.0, se_diag) } else { (0.0, se_off) };
                assert!((c[[i, j]] - target).abs() < 3.0 * se, "({i},{j}) = {}", c[[i, j]]);
            }
        }
    }

    #[test]
    fn disc_mask_count() {
        assert_eq!(disc_mask(6.0).len(), 113);
        assert_eq!(disc_mask(0.0).len(), 1);
        let brute = (-6i32..=6).flat_map(|u| (-6i32..=6).map(move |v| (u, v))).filter(|(u, v)| u * u + v * v <= 36).count();
        assert_eq!(brute, 113);
    }

    #[test]
    fn moving_average_properties() {
        let grid = Grid2D::square(20).unwrap();
        let c = Field::new(grid, Array2::from_elem((20, 20), 3.25)).unwrap();
        let out = moving_average_field(&c, 4.0).unwrap();
        assert_eq!(out.values.dim(), (12, 12));
        assert!(out.values.iter().all(|&v| (v - 3.25).abs() < 1e-12));
        assert_eq!(out.grid.origin, (4.0, 4.0));

        let mut rng = RngStream::new(10, 0);
        let noise = Field::new(grid, Array2::from_shape_simple_fn((20, 20), || rng.std_normal())).unwrap();
        let id = moving_average_field(&noise, 0.0).unwrap();
        assert_eq!(id.values, noise.values);

        let a = 2.5;
        let scaled = Field::new(grid, noise.values.mapv(|v| a * v)).unwrap();
        let lhs = moving_average_field(&scaled, 3.0).unwrap();
        let rhs = moving_average_field(&noise, 3.0).unwrap();
        for (x, y) in lhs.values.iter().zip(rhs.values.iter()) {
            assert!((x - a * y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        assert!(moving_average_field(&noise, 10.0).is_err());
        assert!(moving_average_field(&noise, 9.5).is_ok());
    }
}
