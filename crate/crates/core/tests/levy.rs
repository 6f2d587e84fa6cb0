use std::sync::Arc;

use spatial_sim::levy::{
    refine_path, sample_gamma_cells, sample_levy_path, sheet_value, DiscKernel, GammaCell, GammaLevyMeasure,
    LevyMeasure, LevyPathSpec, LevySheetSpec,
};
use spatial_sim::validate::{mean_se, two_sample_z, variance_se, MomentReport, Z_THRESHOLD};
use spatial_sim::RngStream;

const ALPHA: f64 = 10.0;

// closed forms for ν(dx) = α e^{−x}/x with the subordinator drift
fn exact_mean(alpha: f64) -> f64 {
    alpha
}

fn exact_var(alpha: f64, eps: f64) -> f64 {
    alpha * (1.0 + eps) * (-eps).exp()
}

/// Gamma process at `t = 1` from independent `Gamma(α·dt, 1)` increments;
/// with `α·dt = 1` every increment is a unit exponential.
fn oracle_endpoint(alpha: usize, rng: &mut RngStream) -> f64 {
    (0..alpha).map(|_| rng.exponential()).sum()
}

fn endpoints(spec: &LevyPathSpec, runs: usize, seed: u64) -> Vec<f64> {
    let root = RngStream::new(seed, 0);
    (0..runs as u64)
        .map(|k| *sample_levy_path(spec, &[0.5, 1.0], &mut root.split(k)).unwrap().values.last().unwrap())
        .collect()
}

#[test]
fn quadrature_moments_match_closed_forms() {
    for eps in [1e-4, 1e-3, 0.1, 0.9, 2.0] {
        let spec = LevyPathSpec::gamma(ALPHA, eps).unwrap();
        let (m, v) = spec.moments(1.0);
        assert!((m - exact_mean(ALPHA)).abs() < 1e-8 * ALPHA, "eps {eps}: {m}");
        assert!((v - exact_var(ALPHA, eps)).abs() < 1e-8 * ALPHA, "eps {eps}: {v}");
        let nu = GammaLevyMeasure::new(ALPHA).unwrap();
        // tail mass is the exponential integral α·E₁(ε)
        let e1 = nu.tail_mass(eps) / ALPHA;
        let series = -0.577_215_664_901_532_9 - eps.ln()
            + (1..40).map(|k| -(-eps).powi(k) / (k as f64 * (1..=k).map(|j| j as f64).product::<f64>())).sum::<f64>();
        assert!((e1 - series).abs() < 1e-9 * series.abs(), "eps {eps}: {e1} vs {series}");
    }
}

#[test]
fn truncated_path_moments() {
    let eps = 1e-3;
    let spec = LevyPathSpec::gamma(ALPHA, eps).unwrap();
    let xs = endpoints(&spec, 4000, 71);
    let r = MomentReport::from_samples("mean", &xs, ALPHA * (-eps).exp(), Z_THRESHOLD).unwrap();
    assert!(r.pass, "{r}");
    let r = MomentReport::from_samples("mean exact", &xs, exact_mean(ALPHA), Z_THRESHOLD).unwrap();
    assert!(r.pass, "{r}");
    let (v, se) = variance_se(&xs).unwrap();
    let r = MomentReport::new("var", v, se, spec.moments(1.0).1, Z_THRESHOLD).unwrap();
    assert!(r.pass, "{r}");
}

#[test]
fn refinement_matches_direct_generation() {
    let (e1, e2) = (0.1, 1e-3);
    let coarse = LevyPathSpec::gamma(ALPHA, e1).unwrap();
    let fine = LevyPathSpec::gamma(ALPHA, e2).unwrap();
    let root = RngStream::new(72, 0);
    let refined: Vec<f64> = (0..4000)
        .map(|k| {
            let mut rng = root.split(k);
            let p = sample_levy_path(&coarse, &[0.5, 1.0], &mut rng).unwrap();
            let q = refine_path(&p, &coarse, e2, &mut rng).unwrap();
            assert_eq!(q.epsilon, e2);
            *q.values.last().unwrap()
        })
        .collect();
    let direct = endpoints(&fine, 4000, 73);
    let z = two_sample_z("mean", mean_se(&refined).unwrap(), mean_se(&direct).unwrap(), Z_THRESHOLD).unwrap();
    assert!(z.pass, "{z}");
    let z = two_sample_z("var", variance_se(&refined).unwrap(), variance_se(&direct).unwrap(), Z_THRESHOLD).unwrap();
    assert!(z.pass, "{z}");
}

#[test]
fn truncated_paths_agree_with_gamma_increment_oracle() {
    let spec = LevyPathSpec::gamma(ALPHA, 1e-3).unwrap();
    let xs = endpoints(&spec, 4000, 74);
    let mut rng = RngStream::new(75, 0);
    let oracle: Vec<f64> = (0..4000).map(|_| oracle_endpoint(ALPHA as usize, &mut rng)).collect();
    let z = two_sample_z("oracle", mean_se(&xs).unwrap(), mean_se(&oracle).unwrap(), Z_THRESHOLD).unwrap();
    assert!(z.pass, "{z}");
}

#[test]
fn path_csv_layout() {
    let spec = LevyPathSpec::gamma(2.0, 0.01).unwrap();
    let p = sample_levy_path(&spec, &[0.25, 0.5, 1.0], &mut RngStream::new(76, 0)).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x");
    assert_eq!(lines.len(), 4);
    for (line, (t, x)) in lines[1..].iter().zip(p.times.iter().zip(&p.values)) {
        let mut f = line.split(',').map(|s| s.parse::<f64>().unwrap());
        assert_eq!(f.next().unwrap(), *t);
        assert_eq!(f.next().unwrap(), *x);
    }
}

#[test]
fn sheet_centre_expectation() {
    let (n, r) = (100usize, 0.05);
    let spec = LevySheetSpec {
        n,
        kernel: Arc::new(DiscKernel { r }),
        cell: GammaCell { alpha: 100.0, beta: 100.0 },
    };
    let t = [0.5, 0.5];
    // Σ κ_t(i/n, j/n) · α/(βn²), summed directly
    let mut oracle = 0.0;
    for j in 0..n {
        for i in 0..n {
            let d2 = (i as f64 / n as f64 - 0.5).powi(2) + (j as f64 / n as f64 - 0.5).powi(2);
            oracle += (r * r - d2).max(0.0);
        }
    }
    oracle /= (n * n) as f64;
    assert!((spec.expectation(t) - oracle).abs() < 1e-15);
    let mut rng = RngStream::new(77, 0);
    let xs: Vec<f64> = (0..2000)
        .map(|_| sheet_value(&spec, &sample_gamma_cells(&spec, &mut rng).unwrap(), t))
        .collect();
    let rep = MomentReport::from_samples("centre", &xs, oracle, Z_THRESHOLD).unwrap();
    assert!(rep.pass, "{rep}");
}

#[test]
fn sheet_value_pruning_matches_full_sum() {
    let n = 40;
    let spec = LevySheetSpec { n, kernel: Arc::new(DiscKernel { r: 0.1 }), cell: GammaCell { alpha: 5.0, beta: 2.0 } };
    let cells = sample_gamma_cells(&spec, &mut RngStream::new(78, 0)).unwrap();
    for t in [[0.0, 0.0], [0.5, 0.31], [0.99, 0.02], [1.0, 1.0]] {
        let mut full = 0.0;
        for j in 0..n {
            for i in 0..n {
                let d2 = (i as f64 / n as f64 - t[0]).powi(2) + (j as f64 / n as f64 - t[1]).powi(2);
                full += (0.01 - d2).max(0.0) * cells[[j, i]];
            }
        }
        assert!((sheet_value(&spec, &cells, t) - full).abs() < 1e-14, "{t:?}");
    }
}
