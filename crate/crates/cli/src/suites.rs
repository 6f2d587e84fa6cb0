//! Statistical validation suites. Each check takes its sample sizes so the
//! same code runs at desk scale from `validate` and at full scale from the
//! acceptance target.

use nalgebra::DMatrix;
use spatial_sim::circulant::{plan_torus, sample_torus};
use spatial_sim::fractional::{fbf_cov, plan_fbf, plan_fbm, HurstParam};
use spatial_sim::gmrf::{build_lattice_precision, GmrfSampler, LatticeGmrfSpec};
use spatial_sim::levy::{
    refine_path, sample_gamma_cells, sample_levy_path, sheet_value, DiscKernel, GammaCell, LevyPathSpec, LevySheetSpec,
};
use spatial_sim::mcmc::{run_conditional_strauss, run_rj_strauss, StraussParams};
use spatial_sim::pointproc::{sample_hawkes, sample_poisson_inversion, sample_poisson_thinning, HawkesParams, IntensitySpec, Window};
use spatial_sim::validate::{
    batch_means, dispersion_test, empirical_cov_at_lag, mean_se, pair_probability_oracle, two_sample_z, variance_se,
    MomentReport, ValidationReport, DEFAULT_BATCHES, Z_THRESHOLD, Z_THRESHOLD_COV,
};
use spatial_sim::{CovarianceModel, Result, RngStream};

use crate::CliError;

pub const SUITES: [&str; 9] = ["circulant", "gmrf", "poisson", "hawkes", "strauss", "fbm", "fbf", "levy", "sheet"];

/// Runs a named suite (or `all`) at desk scale.
pub fn run_suite(name: &str, seed: u64) -> std::result::Result<ValidationReport, CliError> {
    let names: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(CliError::Usage(format!("unknown suite {s:?}; expected one of {} or all", SUITES.join(", ")))),
    };
    let mut out = ValidationReport::new(name);
    for (k, &s) in names.iter().enumerate() {
        let rng = RngStream::new(seed, 1000 + k as u64);
        let r = match s {
            "circulant" => torus_covariance(32, 400, rng),
            "gmrf" => gmrf_covariance(3, 2.0, -0.5, 20_000, rng),
            "poisson" => poisson_mean(2000, rng),
            "hawkes" => hawkes_mean(1000, rng),
            "strauss" => strauss_pair_oracle(200_000, 1_000_000, rng.split(8)).and_then(|mut r| {
                r.extend(strauss_rj_poisson(100_000, rng.split(9))?);
                Ok(r)
            }),
            "fbm" => fbm_law(1024, 2000, rng),
            "fbf" => fbf_covariance(33, 2000, rng),
            "levy" => levy_path_moments(2000, rng),
            "sheet" => sheet_expectation(100, 2000, rng),
            _ => unreachable!(),
        }?;
        out.extend(r);
    }
    Ok(out)
}

fn gather<T>(runs: usize, rng: RngStream, mut f: impl FnMut(&mut RngStream) -> Result<T>) -> Result<Vec<T>> {
    (0..runs as u64).map(|k| f(&mut rng.split(k))).collect()
}

/// Torus field `exp(−8‖h‖)` on an `n×n` grid: covariance at a few lags.
pub fn torus_covariance(n: usize, realizations: usize, rng: RngStream) -> Result<ValidationReport> {
    let model = CovarianceModel::torus_exp(8.0, 1.0)?;
    let plan = plan_torus(n, &model)?;
    let fields = gather(realizations, rng, |r| sample_torus(&plan, r))?;
    let mut rep = ValidationReport::new("circulant");
    for lag in [(0isize, 0isize), (1, 0), (0, 2), (3, 1)] {
        let target = model.eval_lag([lag.0 as f64 / n as f64, lag.1 as f64 / n as f64])?;
        let name = format!("torus cov lag {lag:?}");
        rep.push(empirical_cov_at_lag(name, &fields, lag, target, false, Z_THRESHOLD_COV)?);
    }
    Ok(rep)
}

/// Every entry of the empirical covariance of an `m×m` lattice GMRF against
/// the inverse of its dense precision.
pub fn gmrf_covariance(m: usize, diag: f64, neighbor: f64, samples: usize, rng: RngStream) -> Result<ValidationReport> {
    let spec = LatticeGmrfSpec::new(m, diag, neighbor)?;
    let dense = build_lattice_precision(&spec).to_dense();
    let n = m * m;
    let sigma = DMatrix::from_fn(n, n, |i, j| dense[[i, j]])
        .try_inverse()
        .expect("a positive definite precision is invertible");
    let sampler = GmrfSampler::new(spec)?;
    let zero = vec![0.0; n].into();
    let draws: Vec<Vec<f64>> = gather(samples, rng, |r| Ok(sampler.sample(&zero, r)?.values.iter().copied().collect()))?;
    let mut rep = ValidationReport::new("gmrf");
    for a in 0..n {
        for b in a..n {
            let prods: Vec<f64> = draws.iter().map(|x| x[a] * x[b]).collect();
            rep.push(MomentReport::from_samples(format!("gmrf cov ({a},{b})"), &prods, sigma[(a, b)], Z_THRESHOLD)?);
        }
    }
    Ok(rep)
}

fn quadratic_intensity() -> IntensitySpec {
    IntensitySpec::callable(|x, y| 300.0 * (x * x + y * y), 600.0)
}

fn as_f64(c: &[u64]) -> Vec<f64> {
    c.iter().map(|&v| v as f64).collect()
}

/// Counts of `λ = 300(x²+y²)` on the unit square by inversion and thinning.
pub fn poisson_mean(runs: usize, rng: RngStream) -> Result<ValidationReport> {
    let lam = quadratic_intensity();
    let w = Window::unit();
    let mu = lam.mean_measure(&w);
    let inv = gather(runs, rng.split(0), |r| Ok(sample_poisson_inversion(&lam, &w, r)?.len() as u64))?;
    let thin = gather(runs, rng.split(1), |r| Ok(sample_poisson_thinning(&lam, &w, r)?.len() as u64))?;
    let mut rep = ValidationReport::new("poisson");
    // Poisson standard error √(μ/runs)
    let se = (mu / runs as f64).sqrt();
    let (mi, _) = mean_se(&as_f64(&inv))?;
    let (mt, _) = mean_se(&as_f64(&thin))?;
    rep.push(MomentReport::new("poisson mean (inversion)", mi, se, 200.0, Z_THRESHOLD)?);
    rep.push(MomentReport::new("poisson mean (thinning)", mt, se, 200.0, Z_THRESHOLD)?);
    rep.push(two_sample_z("inversion - thinning", mean_se(&as_f64(&inv))?, mean_se(&as_f64(&thin))?, Z_THRESHOLD)?);
    if runs >= 1000 {
        rep.push(dispersion_test("poisson dispersion (inversion)", &inv, Z_THRESHOLD)?);
        rep.push(dispersion_test("poisson dispersion (thinning)", &thin, Z_THRESHOLD)?);
    }
    Ok(rep)
}

/// Total Hawkes points for `λ=30, α=0.9`; expected `λ/(1−α) = 300`.
pub fn hawkes_mean(runs: usize, rng: RngStream) -> Result<ValidationReport> {
    let p = HawkesParams { center_intensity: 30.0, alpha: 0.9, sigma: 0.03 };
    let w = Window::unit();
    let totals = gather(runs, rng, |r| Ok(sample_hawkes(&p, &w, r)?.pattern.len() as u64))?;
    let (m, se) = batch_means(&as_f64(&totals), DEFAULT_BATCHES)?;
    let mut rep = ValidationReport::new("hawkes");
    rep.push(MomentReport::new("hawkes mean total", m, se, 300.0, Z_THRESHOLD)?);
    if runs >= 1000 {
        rep.push_info(dispersion_test("hawkes dispersion (clustering, > 1)", &totals, Z_THRESHOLD)?);
    }
    Ok(rep)
}

/// Two-point conditional Strauss chain (`γ=0.1, r=0.2`): long-run
/// `P(s=1) = γq/(γq+1−q)` with `q` from the Monte Carlo pair oracle.
pub fn strauss_pair_oracle(steps: usize, oracle_samples: usize, rng: RngStream) -> Result<ValidationReport> {
    let (gamma, r) = (0.1, 0.2);
    let (q, q_se) = pair_probability_oracle(r, oracle_samples, &mut rng.split(0));
    let denom = gamma * q + 1.0 - q;
    let target = gamma * q / denom;
    let params = StraussParams::new(1.0, gamma, r)?;
    let run = run_conditional_strauss(2, &params, 0.15, steps, &mut rng.split(1))?;
    let s: Vec<f64> = run.after_burn_in(0.05).iter().map(|t| t.s as f64).collect();
    let (m, se) = batch_means(&s, DEFAULT_BATCHES)?;
    // oracle error carried through d target/dq = γ/denom²
    let se = se.hypot(gamma / (denom * denom) * q_se);
    let mut rep = ValidationReport::new("strauss");
    rep.push(MomentReport::new("strauss two-point P(s=1)", m, se, target, Z_THRESHOLD)?);
    Ok(rep)
}

/// Birth-death chain with `γ=1, β=40` is Poisson(40) in the count; also
/// reports the (informational) count dispersion under repulsion.
pub fn strauss_rj_poisson(steps: usize, rng: RngStream) -> Result<ValidationReport> {
    let params = StraussParams::new(40.0, 1.0, 0.05)?;
    let run = run_rj_strauss(&params, Vec::new(), steps, &mut rng.split(0))?;
    let n: Vec<f64> = run.after_burn_in(0.1).iter().map(|t| t.n as f64).collect();
    let (m, se) = batch_means(&n, DEFAULT_BATCHES)?;
    let mut rep = ValidationReport::new("strauss");
    rep.push(MomentReport::new("strauss rj mean n (gamma=1)", m, se, 40.0, Z_THRESHOLD)?);
    // independent repulsive runs, one count each
    let rep_params = StraussParams::new(100.0, 0.1, 0.1)?;
    let counts = gather(1000, rng.split(1), |r| Ok(run_rj_strauss(&rep_params, Vec::new(), 3000, r)?.final_state.n() as u64))?;
    rep.push_info(dispersion_test("strauss dispersion (repulsion, < 1)", &counts, Z_THRESHOLD)?);
    Ok(rep)
}

/// Delta-method standard error of `mean(a)/mean(b)` over paired samples.
fn ratio_se(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let (ma, _) = mean_se(a)?;
    let (mb, _) = mean_se(b)?;
    let r = ma / mb;
    let resid: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - r * y).collect();
    let (_, se) = mean_se(&resid)?;
    Ok((r, se / mb))
}

/// `Var W₁ = 1` and `Var W_{1/2} / Var W₁ = 2^{−2H}` for `H ∈ {0.3, 0.5, 0.9}`.
pub fn fbm_law(n: usize, paths: usize, rng: RngStream) -> Result<ValidationReport> {
    let mut rep = ValidationReport::new("fbm");
    for (k, h) in [0.3, 0.5, 0.9].into_iter().enumerate() {
        let plan = plan_fbm(n, HurstParam::new(h)?)?;
        let mut r = rng.split(k as u64);
        let (mut w1, mut wh) = (Vec::with_capacity(paths), Vec::with_capacity(paths));
        while w1.len() < paths {
            let (a, b) = plan.sample_pair(&mut r);
            for p in [a, b].into_iter().take(paths - w1.len()) {
                w1.push(p[n] * p[n]);
                wh.push(p[n / 2] * p[n / 2]);
            }
        }
        rep.push(MomentReport::from_samples(format!("fbm H={h} Var W1"), &w1, 1.0, Z_THRESHOLD)?);
        let (ratio, se) = ratio_se(&wh, &w1)?;
        rep.push(MomentReport::new(format!("fbm H={h} Var ratio"), ratio, se, 0.5f64.powf(2.0 * h), Z_THRESHOLD)?);
    }
    Ok(rep)
}

/// Three in-disk pairs of an `m×m` fBf grid with `H=0.8`. Positions are
/// chosen as fractions of the radius so any odd `m ≥ 9` works.
pub fn fbf_covariance(m: usize, realizations: usize, rng: RngStream) -> Result<ValidationReport> {
    let hp = HurstParam::new(0.8)?;
    let plan = plan_fbf(m, m, hp)?;
    let g = plan.embedding.grid;
    let q = (m - 1) / 4;
    let pairs = [((q, q), (q, q)), ((q / 2, 3 * q / 2), (3 * q / 2, q / 2)), ((0, 5 * q / 4), (3 * q / 4, 3 * q / 4))];
    let mut prods = vec![Vec::with_capacity(realizations); pairs.len()];
    let mut r = rng;
    while prods[0].len() < realizations {
        let (a, b) = plan.sample_pair(&mut r)?;
        for f in [a, b].into_iter().take(realizations - prods[0].len()) {
            for (k, &((ja, ia), (jb, ib))) in pairs.iter().enumerate() {
                prods[k].push(f.field.values[[ja, ia]] * f.field.values[[jb, ib]]);
            }
        }
    }
    let mut rep = ValidationReport::new("fbf");
    for (k, &((ja, ia), (jb, ib))) in pairs.iter().enumerate() {
        let (sx, sy) = g.point(ja, ia);
        let (tx, ty) = g.point(jb, ib);
        let target = fbf_cov([sx, sy], [tx, ty], hp.alpha());
        let name = format!("fbf cov ({sx:.3},{sy:.3})x({tx:.3},{ty:.3})");
        rep.push(MomentReport::from_samples(name, &prods[k], target, Z_THRESHOLD_COV)?);
    }
    Ok(rep)
}

fn endpoints(spec: &LevyPathSpec, runs: usize, rng: RngStream) -> Result<Vec<f64>> {
    gather(runs, rng, |r| Ok(*sample_levy_path(spec, &[0.5, 1.0], r)?.values.last().expect("two times")))
}

/// Gamma subordinator `α=10, ε=10⁻³`: moments, refinement from `ε=0.1`, and
/// agreement with sums of exact gamma increments.
pub fn levy_path_moments(paths: usize, rng: RngStream) -> Result<ValidationReport> {
    let (alpha, eps, coarse_eps) = (10.0, 1e-3, 0.1);
    let spec = LevyPathSpec::gamma(alpha, eps)?;
    let coarse = LevyPathSpec::gamma(alpha, coarse_eps)?;
    let direct = endpoints(&spec, paths, rng.split(0))?;
    let mut rep = ValidationReport::new("levy");
    rep.push(MomentReport::from_samples("levy mean X1", &direct, alpha * (-eps).exp(), Z_THRESHOLD)?);
    let (v, vse) = variance_se(&direct)?;
    rep.push(MomentReport::new("levy var X1", v, vse, spec.moments(1.0).1, Z_THRESHOLD)?);
    let refined = gather(paths, rng.split(1), |r| {
        let p = sample_levy_path(&coarse, &[0.5, 1.0], r)?;
        Ok(*refine_path(&p, &coarse, eps, r)?.values.last().expect("two times"))
    })?;
    rep.push(two_sample_z("levy refined - direct mean", mean_se(&refined)?, mean_se(&direct)?, Z_THRESHOLD)?);
    rep.push(two_sample_z("levy refined - direct var", variance_se(&refined)?, variance_se(&direct)?, Z_THRESHOLD)?);
    // X₁ as α independent Gamma(1, 1) increments of length 1/α
    let oracle = gather(paths, rng.split(2), |r| Ok((0..alpha as usize).map(|_| r.exponential()).sum::<f64>()))?;
    rep.push(two_sample_z("levy direct - gamma increments mean", mean_se(&direct)?, mean_se(&oracle)?, Z_THRESHOLD)?);
    Ok(rep)
}

/// Gamma sheet with `κ = (r²−d²)₊, r=0.05, α=β=100` at the centre of an
/// `n×n` lattice against the directly summed expectation.
pub fn sheet_expectation(n: usize, draws: usize, rng: RngStream) -> Result<ValidationReport> {
    let r = 0.05;
    let spec = LevySheetSpec { n, kernel: std::sync::Arc::new(DiscKernel { r }), cell: GammaCell { alpha: 100.0, beta: 100.0 } };
    let t = [0.5, 0.5];
    let mut target = 0.0;
    for j in 0..n {
        for i in 0..n {
            let d2 = (i as f64 / n as f64 - t[0]).powi(2) + (j as f64 / n as f64 - t[1]).powi(2);
            target += (r * r - d2).max(0.0);
        }
    }
    target *= spec.cell.alpha / (spec.cell.beta * (n * n) as f64);
    let xs = gather(draws, rng, |g| Ok(sheet_value(&spec, &sample_gamma_cells(&spec, g)?, t)))?;
    let mut rep = ValidationReport::new("sheet");
    rep.push(MomentReport::from_samples("sheet centre mean", &xs, target, Z_THRESHOLD)?);
    Ok(rep)
}
