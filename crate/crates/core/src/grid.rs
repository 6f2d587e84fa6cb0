//! Grid geometry, sampled fields, the torus metric and the named covariance
//! models shared by the generators.
//!
//! Indexing convention: a [`Field`] stores its values in an `ny × nx` array,
//! row-major, so `values[[j, i]]` is the sample at
//! `(origin.0 + i·dx, origin.1 + j·dy)`. Row `j` is the y-index.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: (f64, f64),
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: (f64, f64)) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid(format!("grid must have at least one point, got {nx}x{ny}")));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(invalid(format!("grid spacings must be positive, got dx={dx}, dy={dy}")));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(invalid("grid origin must be finite"));
        }
        Ok(Self { nx, ny, dx, dy, origin })
    }

    /// `n × n` grid with unit spacing at the origin.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0, (0.0, 0.0))
    }

    /// The `{(i/n, j/n)}` grid on the unit torus.
    pub fn unit_torus(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0 / n as f64, 1.0 / n as f64, (0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of grid point `(j, i)`.
    pub fn point(&self, j: usize, i: usize) -> (f64, f64) {
        (self.origin.0 + i as f64 * self.dx, self.origin.1 + j as f64 * self.dy)
    }
}

/// Real-valued samples on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid2D,
    pub values: Array2<f64>,
}

impl Field {
    pub fn new(grid: Grid2D, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.ny, grid.nx) {
            return Err(invalid(format!(
                "field values are {:?} but grid is {}x{} (ny x nx)",
                values.dim(),
                grid.ny,
                grid.nx
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.ny, grid.nx)),
        }
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[[j, i]]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// A field with a per-cell validity mask (`0` = outside the region of interest).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedField {
    pub field: Field,
    pub mask: Array2<u8>,
}

const BINARY_MAGIC: &[u8; 4] = b"SPGF";
const BINARY_VERSION: u16 = 1;

fn write_header<W: Write>(w: &mut W, g: &Grid2D) -> Result<()> {
    let dim = |n: usize| u32::try_from(n).map_err(|_| invalid(format!("grid side {n} exceeds u32")));
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&dim(g.nx)?.to_le_bytes())?;
    w.write_all(&dim(g.ny)?.to_le_bytes())?;
    for v in [g.dx, g.dy, g.origin.0, g.origin.1] {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("grid binary is truncated".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_header<R: Read>(r: &mut R) -> Result<Grid2D> {
    if &read_array::<4, _>(r)? != BINARY_MAGIC {
        return Err(Error::Format("missing SPGF magic".into()));
    }
    let version = u16::from_le_bytes(read_array(r)?);
    if version != BINARY_VERSION {
        return Err(Error::Format(format!("unsupported grid binary version {version}")));
    }
    let nx = u32::from_le_bytes(read_array(r)?) as usize;
    let ny = u32::from_le_bytes(read_array(r)?) as usize;
    let dx = read_f64(r)?;
    let dy = read_f64(r)?;
    let ox = read_f64(r)?;
    let oy = read_f64(r)?;
    Grid2D::new(nx, ny, dx, dy, (ox, oy)).map_err(|e| Error::Format(e.to_string()))
}

impl Field {
    /// Writes the `SPGF` grid binary: magic, `u16` version, `u32` nx and ny,
    /// `f64` dx, dy, origin, then the values row-major, all little-endian.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, &self.grid)?;
        let mut buf = Vec::with_capacity(8 * self.grid.len());
        for v in self.values.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let grid = read_header(r)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(read_f64(r)?);
        }
        let values = Array2::from_shape_vec((grid.ny, grid.nx), values).expect("shape matches grid");
        Field::new(grid, values).map_err(|e| Error::Format(e.to_string()))
    }
}

impl MaskedField {
    pub fn new(field: Field, mask: Array2<u8>) -> Result<Self> {
        if mask.dim() != field.values.dim() {
            return Err(invalid("mask and field shapes differ"));
        }
        Ok(Self { field, mask })
    }

    /// Grid binary followed by `ny·nx` mask bytes.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        self.field.write_binary(w)?;
        w.write_all(&self.mask.iter().copied().collect::<Vec<u8>>())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let field = Field::read_binary(r)?;
        let mut mask = vec![0u8; field.grid.len()];
        r.read_exact(&mut mask)
            .map_err(|_| Error::Format("mask bytes are truncated".into()))?;
        let mask = Array2::from_shape_vec(field.values.dim(), mask).expect("shape matches grid");
        Ok(Self { field, mask })
    }
}

fn wrap_unit(h: f64) -> f64 {
    let a = h.abs().rem_euclid(1.0);
    a.min(1.0 - a)
}

/// Euclidean distance on the unit torus `[0,1)²`.
pub fn torus_distance(s: [f64; 2], t: [f64; 2]) -> Result<f64> {
    for &c in s.iter().chain(t.iter()) {
        if !(0.0..1.0).contains(&c) {
            return Err(invalid(format!("torus coordinates must lie in [0,1), got {c}")));
        }
    }
    Ok(torus_norm([s[0] - t[0], s[1] - t[1]]))
}

/// Torus norm of a lag vector; lags are reduced modulo 1 per axis.
pub fn torus_norm(h: [f64; 2]) -> f64 {
    let a = wrap_unit(h[0]);
    let b = wrap_unit(h[1]);
    (a * a + b * b).sqrt()
}

/// Table-driven constants of the compactly supported intrinsic embedding
/// `ψ` used for fractional Brownian fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinConstants {
    pub r: f64,
    pub beta: f64,
    pub c2: f64,
    pub c0: f64,
}

impl SteinConstants {
    /// Constants guaranteeing a nonnegative circulant embedding for
    /// roughness `alpha ∈ (0, 2)`.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid(format!("roughness alpha must lie in (0,2), got {alpha}")));
        }
        if alpha <= 1.5 {
            let c2 = alpha / 2.0;
            Ok(Self { r: 1.0, beta: 0.0, c2, c0: 1.0 - c2 })
        } else {
            let r = 2.0f64;
            let beta = alpha * (2.0 - alpha) / (3.0 * r * (r * r - 1.0));
            let c2 = (alpha - beta * (r - 1.0).powi(2) * (r + 2.0)) / 2.0;
            let c0 = beta * (r - 1.0).powi(3) + 1.0 - c2;
            Ok(Self { r, beta, c2, c0 })
        }
    }

    fn consistent_with(&self, alpha: f64) -> bool {
        match Self::for_alpha(alpha) {
            Ok(expected) => {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
                close(self.r, expected.r)
                    && close(self.beta, expected.beta)
                    && close(self.c2, expected.c2)
                    && close(self.c0, expected.c0)
            }
            Err(_) => false,
        }
    }
}

/// `ψ(‖h‖)`: `c0 + c2‖h‖² − ‖h‖^α` inside the unit ball, `β(R−‖h‖)³/‖h‖`
/// on `[1, R]`, zero beyond.
pub fn stein_psi(h_norm: f64, k: &SteinConstants, alpha: f64) -> f64 {
    if h_norm <= 1.0 {
        k.c0 + k.c2 * h_norm * h_norm - h_norm.powf(alpha)
    } else if h_norm <= k.r {
        k.beta * (k.r - h_norm).powi(3) / h_norm
    } else {
        0.0
    }
}

/// fGn autocovariance `½(|k+1|^α − 2|k|^α + |k−1|^α)`.
pub fn fgn_cov(k: f64, alpha: f64) -> f64 {
    let k = k.abs();
    0.5 * ((k + 1.0).powf(alpha) - 2.0 * k.powf(alpha) + (k - 1.0).abs().powf(alpha))
}

/// Argument to [`CovarianceModel::eval`]: stationary models take a lag,
/// nonstationary ones a pair of locations.
#[derive(Debug, Clone, Copy)]
pub enum CovArg<'a> {
    Scalar(f64),
    Lag([f64; 2]),
    Pair(&'a [f64], &'a [f64]),
}

/// The closed set of covariance models used by the generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CovarianceModel {
    /// `exp(−c‖h‖_T^α)` on the unit torus.
    TorusExp { c: f64, alpha: f64 },
    /// Anisotropic hole-effect model with fixed ranges 50 and 15.
    Wavy,
    FgnCov1D { alpha: f64 },
    /// Separable product of two 1D fGn covariances.
    FgnCov2D { alpha: f64 },
    /// Fractional Brownian field, `‖s‖^α + ‖t‖^α − ‖s−t‖^α`.
    FbfCov { alpha: f64 },
    SteinPsi { alpha: f64, constants: SteinConstants },
    /// `Π(min(tᵢ,sᵢ) − tᵢsᵢ)` on `[0,1]^d`.
    WienerPillow { d: usize },
    /// `Π min(tᵢ,sᵢ) − Π tᵢsᵢ` on `[0,1]^d`.
    WienerBridge { d: usize },
}

impl CovarianceModel {
    pub const WAVY_RANGE_X: f64 = 50.0;
    pub const WAVY_RANGE_Y: f64 = 15.0;

    pub fn torus_exp(c: f64, alpha: f64) -> Result<Self> {
        let m = CovarianceModel::TorusExp { c, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn stein_psi(alpha: f64) -> Result<Self> {
        Ok(CovarianceModel::SteinPsi { alpha, constants: SteinConstants::for_alpha(alpha)? })
    }

    pub fn validate(&self) -> Result<()> {
        use CovarianceModel::*;
        match *self {
            TorusExp { c, alpha } => {
                if !(c > 0.0 && c.is_finite()) || !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(invalid(format!("TorusExp needs c > 0 and 0 < alpha <= 2, got c={c}, alpha={alpha}")));
                }
            }
            Wavy => {}
            FgnCov1D { alpha } | FgnCov2D { alpha } | FbfCov { alpha } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(invalid(format!("roughness alpha must lie in (0,2), got {alpha}")));
                }
            }
            SteinPsi { alpha, constants } => {
                if !constants.consistent_with(alpha) {
                    return Err(invalid(format!("Stein constants {constants:?} do not match alpha={alpha}")));
                }
            }
            WienerPillow { d } | WienerBridge { d } => {
                if d == 0 {
                    return Err(invalid("dimension must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(
            self,
            CovarianceModel::FbfCov { .. } | CovarianceModel::WienerPillow { .. } | CovarianceModel::WienerBridge { .. }
        )
    }

    pub fn eval(&self, arg: CovArg<'_>) -> Result<f64> {
        use CovarianceModel::*;
        self.validate()?;
        match (*self, arg) {
            (FgnCov1D { alpha }, CovArg::Scalar(k)) => Ok(fgn_cov(k, alpha)),
            (FgnCov1D { .. }, _) => Err(invalid("FgnCov1D takes a scalar lag")),
            (TorusExp { c, alpha }, CovArg::Lag(h)) => Ok((-c * torus_norm(h).powf(alpha)).exp()),
            (Wavy, CovArg::Lag([h1, h2])) => {
                let (a, b) = (Self::WAVY_RANGE_X, Self::WAVY_RANGE_Y);
                let q = h1 * h1 / (a * a) + h2 * h2 / (b * b);
                Ok((1.0 - h1 * h1 / (a * a) - h1 * h2 / (a * b) - h2 * h2 / (b * b)) * (-q).exp())
            }
            (FgnCov2D { alpha }, CovArg::Lag([k, l])) => Ok(fgn_cov(k, alpha) * fgn_cov(l, alpha)),
            (SteinPsi { alpha, constants }, CovArg::Lag([h1, h2])) => {
                Ok(stein_psi(h1.hypot(h2), &constants, alpha))
            }
            (TorusExp { .. } | Wavy | FgnCov2D { .. } | SteinPsi { .. }, _) => {
                Err(invalid("stationary 2D models take a 2D lag"))
            }
            (FbfCov { alpha }, CovArg::Pair(s, t)) => {
                if s.len() != 2 || t.len() != 2 {
                    return Err(invalid("FbfCov takes a pair of 2D points"));
                }
                let ns = s[0].hypot(s[1]);
                let nt = t[0].hypot(t[1]);
                let nd = (s[0] - t[0]).hypot(s[1] - t[1]);
                Ok(ns.powf(alpha) + nt.powf(alpha) - nd.powf(alpha))
            }
            (WienerPillow { d }, CovArg::Pair(s, t)) => pillow_bridge_cov(PillowBridge::Pillow, s, t, d),
            (WienerBridge { d }, CovArg::Pair(s, t)) => pillow_bridge_cov(PillowBridge::Bridge, s, t, d),
            (FbfCov { .. } | WienerPillow { .. } | WienerBridge { .. }, _) => {
                Err(invalid("nonstationary models take a pair of locations, not a lag"))
            }
        }
    }

    /// Shorthand for 2D stationary models.
    pub fn eval_lag(&self, h: [f64; 2]) -> Result<f64> {
        self.eval(CovArg::Lag(h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PillowBridge {
    Pillow,
    Bridge,
}

/// Covariance of the Wiener pillow or Wiener bridge on `[0,1]^d`.
pub fn pillow_bridge_cov(variant: PillowBridge, s: &[f64], t: &[f64], d: usize) -> Result<f64> {
    if s.len() != d || t.len() != d {
        return Err(invalid(format!("expected points of dimension {d}")));
    }
    if s.iter().chain(t).any(|&c| !(0.0..=1.0).contains(&c)) {
        return Err(invalid("pillow/bridge coordinates must lie in [0,1]"));
    }
    let pairs = s.iter().zip(t);
    Ok(match variant {
        PillowBridge::Pillow => pairs.map(|(&a, &b)| a.min(b) - a * b).product(),
        PillowBridge::Bridge => {
            let mins: f64 = pairs.clone().map(|(&a, &b)| a.min(b)).product();
            let prods: f64 = pairs.map(|(&a, &b)| a * b).product();
            mins - prods
        }
    })
}
