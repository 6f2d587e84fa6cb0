//! Statistical checks shared by the test suites and the `validate`
//! subcommand: moment reports, covariance-at-lag estimates, dispersion and
//! homogeneity tests, batch means, and brute-force oracles.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::Field;
use crate::rng::RngStream;
use crate::special::chi_square_sf;

/// Default `|z|` threshold.
pub const Z_THRESHOLD: f64 = 3.0;
/// Threshold for covariance surfaces, which test many entries at once.
pub const Z_THRESHOLD_COV: f64 = 4.0;
/// Number of batches for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub z_score: f64,
    pub pass: bool,
    pub threshold: f64,
}

impl MomentReport {
    pub fn new(name: impl Into<String>, estimate: f64, std_error: f64, target: f64, threshold: f64) -> Result<Self> {
        if !(std_error > 0.0 && std_error.is_finite()) {
            return Err(Error::InsufficientData(format!("standard error must be positive and finite, got {std_error}")));
        }
        let z_score = (estimate - target) / std_error;
        Ok(Self {
            name: name.into(),
            estimate,
            std_error,
            target,
            z_score,
            pass: z_score.abs() <= threshold,
            threshold,
        })
    }

    /// Report of the sample mean of iid `samples` against `target`.
    pub fn from_samples(name: impl Into<String>, samples: &[f64], target: f64, threshold: f64) -> Result<Self> {
        let (m, se) = mean_se(samples)?;
        Self::new(name, m, se, target, threshold)
    }
}

impl fmt::Display for MomentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: estimate {:.6} target {:.6} se {:.3e} z {:+.2} (|z| <= {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.estimate,
            self.target,
            self.std_error,
            self.z_score,
            self.threshold
        )
    }
}

/// Mean and standard error of iid samples.
pub fn mean_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((m, (v / n).sqrt()))
}

/// Sample variance and its standard error (from the fourth central moment).
pub fn variance_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 4 {
        return Err(Error::InsufficientData("need at least four samples".into()));
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    Ok((v, ((m4 - v * v * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()))
}

/// Mean of a serially dependent sequence with a batch-means standard error.
pub fn batch_means(xs: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || xs.len() < 2 * batches {
        return Err(Error::InsufficientData(format!("{} values cannot form {batches} batches", xs.len())));
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let (_, se) = mean_se(&means)?;
    let used = &xs[..batches * size];
    Ok((used.iter().sum::<f64>() / used.len() as f64, se))
}

/// Report on `m₁ − m₂` for two independent estimates.
pub fn two_sample_z(name: impl Into<String>, a: (f64, f64), b: (f64, f64), threshold: f64) -> Result<MomentReport> {
    MomentReport::new(name, a.0 - b.0, a.1.hypot(b.1), 0.0, threshold)
}

/// Average of `X[p]·X[p+lag]` over positions and realizations; the standard
/// error comes from the spread of the per-realization averages.
pub fn empirical_cov_at_lag(
    name: impl Into<String>,
    realizations: &[Field],
    lag: (isize, isize),
    target: f64,
    subtract_mean: bool,
    threshold: f64,
) -> Result<MomentReport> {
    if realizations.len() < 100 {
        return Err(Error::InsufficientData(format!("need at least 100 realizations, got {}", realizations.len())));
    }
    let (ny, nx) = realizations[0].values.dim();
    let (di, dj) = lag;
    if di.unsigned_abs() >= nx || dj.unsigned_abs() >= ny {
        return Err(invalid(format!("lag {lag:?} does not fit a {nx}x{ny} grid")));
    }
    let per: Vec<f64> = realizations
        .iter()
        .map(|f| {
            let mean = if subtract_mean { f.values.mean().unwrap_or(0.0) } else { 0.0 };
            let mut s = 0.0;
            let mut c = 0usize;
            for j in 0..ny as isize {
                let j2 = j + dj;
                if j2 < 0 || j2 >= ny as isize {
                    continue;
                }
                for i in 0..nx as isize {
                    let i2 = i + di;
                    if i2 < 0 || i2 >= nx as isize {
                        continue;
                    }
                    s += (f.values[[j as usize, i as usize]] - mean) * (f.values[[j2 as usize, i2 as usize]] - mean);
                    c += 1;
                }
            }
            s / c as f64
        })
        .collect();
    MomentReport::from_samples(name, &per, target, threshold)
}

/// Variance-to-mean ratio of counts with target 1 and the large-sample
/// standard error `√(2/(N−1))` of a Poisson sample.
pub fn dispersion_test(name: impl Into<String>, counts: &[u64], threshold: f64) -> Result<MomentReport> {
    if counts.len() < 1000 {
        return Err(Error::InsufficientData(format!("need at least 1000 counts, got {}", counts.len())));
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::InsufficientData("all counts are zero".into()));
    }
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    MomentReport::new(name, v / m, (2.0 / (n - 1.0)).sqrt(), 1.0, threshold)
}

/// Monte Carlo `P(‖U − V‖ < r)` for independent uniforms on the unit square,
/// with its standard error.
pub fn pair_probability_oracle(r: f64, n_samples: usize, rng: &mut RngStream) -> (f64, f64) {
    if r <= 0.0 {
        return (0.0, 0.0);
    }
    if r >= std::f64::consts::SQRT_2 {
        return (1.0, 0.0);
    }
    let r2 = r * r;
    let mut hits = 0u64;
    for _ in 0..n_samples {
        let dx = rng.uniform() - rng.uniform();
        let dy = rng.uniform() - rng.uniform();
        if dx * dx + dy * dy < r2 {
            hits += 1;
        }
    }
    let p = hits as f64 / n_samples as f64;
    (p, (p * (1.0 - p) / n_samples as f64).sqrt())
}

/// Closed form of the same probability for `0 ≤ r ≤ 1`:
/// `πr² − 8r³/3 + r⁴/2`.
pub fn pair_probability_exact(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(invalid(format!("closed form holds for 0 <= r <= 1, got {r}")));
    }
    Ok(std::f64::consts::PI * r * r - 8.0 * r.powi(3) / 3.0 + r.powi(4) / 2.0)
}

/// Chi-square test that the rows of a contingency table share one
/// distribution. Columns whose total is zero are dropped. Returns
/// `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_homogeneity(table: &[Vec<u64>]) -> Result<(f64, f64, f64)> {
    if table.len() < 2 || table.iter().any(|r| r.len() != table[0].len()) {
        return Err(invalid("need at least two rows of equal length"));
    }
    let cols: Vec<usize> = (0..table[0].len()).filter(|&c| table.iter().any(|r| r[c] > 0)).collect();
    if cols.len() < 2 {
        return Err(Error::InsufficientData("need at least two nonempty categories".into()));
    }
    let row_tot: Vec<f64> = table.iter().map(|r| cols.iter().map(|&c| r[c] as f64).sum()).collect();
    let col_tot: Vec<f64> = cols.iter().map(|&c| table.iter().map(|r| r[c] as f64).sum()).collect();
    let total: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    for (ri, r) in table.iter().enumerate() {
        for (k, &c) in cols.iter().enumerate() {
            let e = row_tot[ri] * col_tot[k] / total;
            stat += (r[c] as f64 - e).powi(2) / e;
        }
    }
    let dof = ((table.len() - 1) * (cols.len() - 1)) as f64;
    Ok((stat, dof, chi_square_sf(stat, dof)))
}

/// Bins two integer samples into shared categories so that each has an
/// expected count of at least `min_expected` under pooling; returns the
/// two-row contingency table.
pub fn pooled_count_table(a: &[u64], b: &[u64], min_expected: f64) -> Vec<Vec<u64>> {
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut hist = vec![[0u64; 2]; max + 1];
    for &x in a {
        hist[x as usize][0] += 1;
    }
    for &x in b {
        hist[x as usize][1] += 1;
    }
    let mut rows = vec![Vec::new(), Vec::new()];
    let mut acc = [0u64; 2];
    for h in hist {
        acc[0] += h[0];
        acc[1] += h[1];
        if (acc[0] + acc[1]) as f64 / 2.0 >= min_expected {
            rows[0].push(acc[0]);
            rows[1].push(acc[1]);
            acc = [0, 0];
        }
    }
    if acc[0] + acc[1] > 0 {
        for (row, extra) in rows.iter_mut().zip(acc) {
            match row.last_mut() {
                Some(x) => *x += extra,
                None => row.push(extra),
            }
        }
    }
    rows
}

/// A named collection of reports. `info` entries are printed but do not
/// affect [`ValidationReport::all_pass`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub suite: String,
    pub reports: Vec<MomentReport>,
    pub info: Vec<MomentReport>,
}

impl ValidationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self { suite: suite.into(), reports: Vec::new(), info: Vec::new() }
    }

    pub fn push(&mut self, r: MomentReport) {
        self.reports.push(r);
    }

    pub fn push_info(&mut self, r: MomentReport) {
        self.info.push(r);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.reports.extend(other.reports);
        self.info.extend(other.info);
    }

    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        for r in &self.info {
            s.push_str(&format!(
                "INFO {}: estimate {:.6} reference {:.6} se {:.3e} z {:+.2}\n",
                r.name, r.estimate, r.target, r.std_error, r.z_score
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use ndarray::Array2;

    #[test]
    fn report_fields() {
        let r = MomentReport::new("x", 1.2, 0.1, 1.0, 3.0).unwrap();
        assert!((r.z_score - 2.0).abs() < 1e-12);
        assert!(r.pass);
        let r = MomentReport::new("x", 1.5, 0.1, 1.0, 3.0).unwrap();
        assert!(!r.pass);
        assert!(r.to_string().starts_with("FAIL x"));
        assert!(MomentReport::new("x", 1.0, 0.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn batch_means_on_iid_matches_plain_se() {
        let mut rng = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..50_000).map(|_| rng.std_normal()).collect();
        let (m1, se1) = mean_se(&xs).unwrap();
        let (m2, se2) = batch_means(&xs, 50).unwrap();
        assert!((m1 - m2).abs() < 1e-12);
        assert!((se2 / se1 - 1.0).abs() < 0.35);
        assert!(batch_means(&xs[..10], 50).is_err());
    }

    #[test]
    fn batch_means_inflates_for_correlated_chain() {
        let mut rng = RngStream::new(2, 0);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                x = 0.95 * x + rng.std_normal();
                x
            })
            .collect();
        let (_, naive) = mean_se(&xs).unwrap();
        let (_, bm) = batch_means(&xs, 50).unwrap();
        // the AR(1) inflation factor is sqrt((1+φ)/(1−φ)) ≈ 6.2
        assert!(bm / naive > 4.0, "{}", bm / naive);
    }

    #[test]
    fn white_noise_cov_at_lag() {
        let mut rng = RngStream::new(3, 0);
        let grid = Grid2D::square(8).unwrap();
        let fields: Vec<Field> = (0..400)
            .map(|_| Field::new(grid, Array2::from_shape_simple_fn((8, 8), || rng.std_normal())).unwrap())
            .collect();
        let r = empirical_cov_at_lag("lag1", &fields, (1, 0), 0.0, false, 3.0).unwrap();
        assert!(r.pass, "{r}");
        let r = empirical_cov_at_lag("lag0", &fields, (0, 0), 1.0, false, 3.0).unwrap();
        assert!(r.pass, "{r}");
        assert!(empirical_cov_at_lag("x", &fields[..50], (0, 0), 1.0, false, 3.0).is_err());
        assert!(empirical_cov_at_lag("x", &fields, (8, 0), 1.0, false, 3.0).is_err());
    }

    #[test]
    fn dispersion_cases() {
        let mut rng = RngStream::new(4, 0);
        let counts: Vec<u64> = (0..5000).map(|_| rng.poisson(50.0).unwrap()).collect();
        let r = dispersion_test("poi", &counts, 3.0).unwrap();
        assert!(r.pass, "{r}");
        assert!(dispersion_test("z", &vec![0; 2000], 3.0).is_err());
        assert!(dispersion_test("z", &counts[..100], 3.0).is_err());
    }

    #[test]
    fn pair_probability() {
        let mut rng = RngStream::new(5, 0);
        assert_eq!(pair_probability_oracle(0.0, 10, &mut rng).0, 0.0);
        assert_eq!(pair_probability_oracle(1.5, 10, &mut rng).0, 1.0);
        let (p, se) = pair_probability_oracle(0.2, 1_000_000, &mut rng);
        let exact = pair_probability_exact(0.2).unwrap();
        assert!((p - exact).abs() < 4.0 * se);
        assert!((exact - 0.105_131).abs() < 1e-6);
        // r = 1: π − 8/3 + 1/2
        assert!((pair_probability_exact(1.0).unwrap() - (std::f64::consts::PI - 8.0 / 3.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn chi_square_homogeneity_cases() {
        let same = vec![vec![100, 200, 300], vec![100, 200, 300]];
        let (stat, dof, p) = chi_square_homogeneity(&same).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(dof, 2.0);
        assert!((p - 1.0).abs() < 1e-12);
        let diff = vec![vec![300, 200, 100], vec![100, 200, 300]];
        assert!(chi_square_homogeneity(&diff).unwrap().2 < 1e-10);
        let t = pooled_count_table(&[0, 1, 1, 2, 5, 5, 5], &[1, 1, 2, 2, 5, 9], 2.0);
        assert_eq!(t[0].iter().sum::<u64>(), 7);
        assert_eq!(t[1].iter().sum::<u64>(), 6);
    }

    #[test]
    fn report_json() {
        let mut v = ValidationReport::new("demo");
        v.push(MomentReport::new("a", 1.0, 0.5, 1.0, 3.0).unwrap());
        let js: serde_json::Value = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(js["reports"][0]["name"], "a");
        assert_eq!(js["reports"][0]["pass"], true);
        assert!(v.to_text().starts_with("PASS a"));
    }
}
