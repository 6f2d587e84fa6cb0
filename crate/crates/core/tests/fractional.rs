use ndarray::Array2;
use spatial_sim::circulant::{Complex64, EmbeddingPlan};
use spatial_sim::fractional::{
    fbf_cov, plan_fbf, plan_fbm, plan_fgn_sheet, sample_brownian_motion_d, sample_fractional_wiener_sheet_pair,
    sample_pillow_bridge, sample_wiener_path, HurstParam, PillowBridge,
};
use spatial_sim::grid::{stein_psi, SteinConstants};
use spatial_sim::validate::{mean_se, variance_se, MomentReport, Z_THRESHOLD, Z_THRESHOLD_COV};
use spatial_sim::RngStream;

fn fbm_cov(s: f64, t: f64, h: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (s - t).abs().powf(2.0 * h))
}

fn fgn(k: f64, h: f64) -> f64 {
    let a = 2.0 * h;
    0.5 * ((k + 1.0).abs().powf(a) - 2.0 * k.abs().powf(a) + (k - 1.0).abs().powf(a))
}

/// Second-moment ratio `E[a]/E[b]` with a delta-method standard error.
fn ratio_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, _) = mean_se(a).unwrap();
    let (mb, _) = mean_se(b).unwrap();
    let r = ma / mb;
    let resid: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - r * y).collect();
    let (_, se) = mean_se(&resid).unwrap();
    (r, se / mb)
}

fn propagated_cov(plan: &EmbeddingPlan) -> Array2<f64> {
    let (rows, cols) = plan.base_row_matrix.dim();
    let n = plan.grid.len();
    let mut cov = Array2::zeros((n, n));
    for k in 0..rows * cols {
        for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let mut z = Array2::from_elem((rows, cols), Complex64::new(0.0, 0.0));
            z[[k / cols, k % cols]] = unit;
            let col: Vec<f64> = plan.synthesize(&z).unwrap().0.values.iter().copied().collect();
            for a in 0..n {
                for b in 0..n {
                    cov[[a, b]] += col[a] * col[b];
                }
            }
        }
    }
    cov
}

#[test]
fn fbm_linear_map_gives_exact_covariance() {
    let n = 16;
    for h in [0.2, 0.5, 0.75, 0.95] {
        let plan = plan_fbm(n, HurstParam::new(h).unwrap()).unwrap();
        let mut cov = Array2::<f64>::zeros((n + 1, n + 1));
        for k in 0..2 * n {
            for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut z = vec![Complex64::new(0.0, 0.0); 2 * n];
                z[k] = unit;
                let (path, _) = plan.synthesize(&z).unwrap();
                for a in 0..=n {
                    for b in 0..=n {
                        cov[[a, b]] += path[a] * path[b];
                    }
                }
            }
        }
        for a in 0..=n {
            for b in 0..=n {
                let target = fbm_cov(a as f64 / n as f64, b as f64 / n as f64, h);
                assert!((cov[[a, b]] - target).abs() < 1e-10, "H={h} ({a},{b}) {} vs {target}", cov[[a, b]]);
            }
        }
    }
}

#[test]
fn fbm_variance_and_self_similarity() {
    let n = 1024;
    for h in [0.3, 0.5, 0.9] {
        let plan = plan_fbm(n, HurstParam::new(h).unwrap()).unwrap();
        let mut rng = RngStream::new(61, (h * 10.0) as u64);
        let mut w1 = Vec::new();
        let mut whalf = Vec::new();
        for _ in 0..2000 {
            let (a, b) = plan.sample_pair(&mut rng);
            for p in [a, b] {
                assert_eq!(p.len(), n + 1);
                assert_eq!(p[0], 0.0);
                w1.push(p[n] * p[n]);
                whalf.push(p[n / 2] * p[n / 2]);
            }
        }
        let r = MomentReport::from_samples("Var W1", &w1, 1.0, Z_THRESHOLD).unwrap();
        assert!(r.pass, "H={h} {r}");
        let (ratio, se) = ratio_se(&whalf, &w1);
        let r = MomentReport::new("ratio", ratio, se, 0.5f64.powf(2.0 * h), Z_THRESHOLD).unwrap();
        assert!(r.pass, "H={h} {r}");
    }
}

#[test]
fn fgn_sheet_linear_map_is_separable_fgn() {
    let n = 5;
    let h = 0.7;
    let plan = plan_fgn_sheet(n, HurstParam::new(h).unwrap()).unwrap();
    let cov = propagated_cov(&plan);
    let side = n + 1;
    for a in 0..side * side {
        for b in 0..side * side {
            let dx = (a % side) as f64 - (b % side) as f64;
            let dy = (a / side) as f64 - (b / side) as f64;
            assert!((cov[[a, b]] - fgn(dx, h) * fgn(dy, h)).abs() < 1e-10);
        }
    }
}

#[test]
fn sheet_variance_is_product_of_fbm_variances() {
    let n = 32;
    let h = HurstParam::new(0.7).unwrap();
    let plan = plan_fgn_sheet(n, h).unwrap();
    let mut rng = RngStream::new(62, 0);
    let mut corner = Vec::new();
    let mut mid = Vec::new();
    for _ in 0..1500 {
        let (a, b) = sample_fractional_wiener_sheet_pair(&plan, h, &mut rng).unwrap();
        for f in [a, b] {
            assert_eq!(f.values.dim(), (n + 1, n + 1));
            assert!(f.values.row(0).iter().all(|&v| v == 0.0));
            assert!(f.values.column(0).iter().all(|&v| v == 0.0));
            corner.push(f.values[[n, n]].powi(2));
            mid.push(f.values[[n / 2, n]].powi(2));
        }
    }
    let r = MomentReport::from_samples("W(1,1)", &corner, 1.0, Z_THRESHOLD).unwrap();
    assert!(r.pass, "{r}");
    let r = MomentReport::from_samples("W(1,1/2)", &mid, 0.5f64.powf(1.4), Z_THRESHOLD).unwrap();
    assert!(r.pass, "{r}");
}

#[test]
fn fbf_linear_map_gives_exact_covariance_on_quarter_disk() {
    for h in [0.4, 0.8] {
        let hp = HurstParam::new(h).unwrap();
        let alpha = hp.alpha();
        let plan = plan_fbf(9, 9, hp).unwrap();
        let c = propagated_cov(&plan.embedding);
        let g = plan.embedding.grid;
        let pts: Vec<[f64; 2]> = (0..g.len()).map(|k| {
            let (x, y) = g.point(k / g.nx, k % g.nx);
            [x, y]
        }).collect();
        let c2 = plan.constants.c2;
        let inside: Vec<usize> = (0..g.len()).filter(|&k| pts[k][0].hypot(pts[k][1]) <= 1.0 + 1e-12).collect();
        for &a in &inside {
            for &b in &inside {
                let (s, t) = (pts[a], pts[b]);
                if (s[0] - t[0]).hypot(s[1] - t[1]) > 1.0 {
                    continue;
                }
                let cov = c[[a, b]] - c[[a, 0]] - c[[0, b]] + c[[0, 0]] + 2.0 * c2 * (s[0] * t[0] + s[1] * t[1]);
                let target = fbf_cov(s, t, alpha);
                assert!((cov - target).abs() < 1e-8, "H={h} {s:?} {t:?}: {cov} vs {target}");
            }
        }
    }
}

#[test]
fn fbf_sample_covariance_at_fixed_pairs() {
    let hp = HurstParam::new(0.8).unwrap();
    let plan = plan_fbf(33, 33, hp).unwrap();
    let g = plan.embedding.grid;
    // grid spacing is R/32 = 1/16
    let pairs = [((8, 8), (8, 8)), ((4, 12), (12, 4)), ((0, 10), (6, 6))];
    let mut prods = vec![Vec::new(); pairs.len()];
    let mut rng = RngStream::new(63, 0);
    for _ in 0..2000 {
        let (a, b) = plan.sample_pair(&mut rng).unwrap();
        for f in [a, b] {
            assert_eq!(f.field.values[[0, 0]], 0.0);
            for (k, &((ja, ia), (jb, ib))) in pairs.iter().enumerate() {
                assert_eq!(f.mask[[ja, ia]], 1);
                prods[k].push(f.field.values[[ja, ia]] * f.field.values[[jb, ib]]);
            }
        }
    }
    for (k, &((ja, ia), (jb, ib))) in pairs.iter().enumerate() {
        let (sx, sy) = g.point(ja, ia);
        let (tx, ty) = g.point(jb, ib);
        let target = fbf_cov([sx, sy], [tx, ty], 1.6);
        let r = MomentReport::from_samples(format!("pair {k}"), &prods[k], target, Z_THRESHOLD_COV).unwrap();
        assert!(r.pass, "{r}");
    }
}

#[test]
fn stein_psi_is_continuous_at_the_knots() {
    for alpha in [0.2, 0.8, 1.0, 1.5, 1.6, 1.9] {
        let k = SteinConstants::for_alpha(alpha).unwrap();
        let d = 1e-13;
        assert!((stein_psi(1.0 - d, &k, alpha) - stein_psi(1.0 + d, &k, alpha)).abs() < 1e-10, "alpha {alpha}");
        assert!(stein_psi(k.r - d, &k, alpha).abs() < 1e-10);
        assert_eq!(stein_psi(k.r + d, &k, alpha), 0.0);
    }
}

#[test]
fn wiener_and_brownian_moments() {
    let mut rng = RngStream::new(64, 0);
    let times = [0.25, 1.0, 2.5];
    let mut last = Vec::new();
    for _ in 0..20_000 {
        last.push(sample_wiener_path(&times, &mut rng).unwrap()[2]);
    }
    let (v, se) = variance_se(&last).unwrap();
    assert!(MomentReport::new("var", v, se, 2.5, Z_THRESHOLD).unwrap().pass);
    let root = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.5, 2.0]).unwrap();
    let mut x0 = Vec::new();
    let mut x1 = Vec::new();
    let mut cross = Vec::new();
    for _ in 0..20_000 {
        let x = sample_brownian_motion_d(&[1.0, -1.0], &root, &[2.0], &mut rng).unwrap();
        x0.push(x[[0, 0]]);
        x1.push(x[[0, 1]]);
        cross.push((x[[0, 0]] - 2.0) * (x[[0, 1]] + 2.0));
    }
    // Σ = L Lᵀ = [[1, 0.5], [0.5, 4.25]], times t = 2
    assert!(MomentReport::from_samples("m0", &x0, 2.0, Z_THRESHOLD).unwrap().pass);
    assert!(MomentReport::from_samples("m1", &x1, -2.0, Z_THRESHOLD).unwrap().pass);
    let r = MomentReport::from_samples("c01", &cross, 1.0, Z_THRESHOLD).unwrap();
    assert!(r.pass, "{r}");
}

#[test]
fn pillow_and_bridge_centre_variance() {
    let mut rng = RngStream::new(65, 0);
    for (variant, target) in [(PillowBridge::Pillow, 0.0625), (PillowBridge::Bridge, 0.1875)] {
        let xs: Vec<f64> = (0..10_000)
            .map(|_| sample_pillow_bridge(variant, 3, &mut rng).unwrap().values[[1, 1]].powi(2))
            .collect();
        let r = MomentReport::from_samples("centre", &xs, target, Z_THRESHOLD).unwrap();
        assert!(r.pass, "{variant:?} {r}");
    }
}
