//! Library results checked against independent reference computations.

use rand::Rng;
use wgrowth::calibration::link_count_matrix;
use wgrowth::dist::DistributionModel;
use wgrowth::stats::{ad_test, ks_test, mantel_test, mantel_test_exhaustive, poisson_chi_square, SquareMatrix};
use wgrowth::weights::{assign_initial_weights, evolve_weights};
use wgrowth::{generate, rng, GrowthConfig, WeightModel};

fn eq4_pdf(v: f64, g: f64) -> f64 {
    let s = (g * g + 2.0 * v).sqrt();
    2.0 * v / (s * (g.abs() + s).powi(2))
}

/// Composite trapezoid rule on a log-stretched grid from `-inf` (tail
/// handled through the exact `g^-3` asymptote) to `x`.
fn eq4_cdf_trapezoid(v: f64, x: f64) -> f64 {
    let lo = -1e4 * v.sqrt().max(1.0);
    // ∫_{-∞}^{lo} P ≈ ∫ v/|g|^3 dg = v / (2 lo²)
    let tail = v / (2.0 * lo * lo);
    let n = 400_000;
    let a = lo.abs().ln();
    let mut acc = 0.0;
    // substitution g = -exp(u) on the far-left part, uniform grid near the body
    let split = -10.0 * v.sqrt();
    let upper = x.min(split);
    if upper > lo {
        let ua = (-upper).ln();
        let h = (a - ua) / n as f64;
        for i in 0..=n {
            let u = ua + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * eq4_pdf(v, -u.exp()) * u.exp() * h;
        }
    }
    if x > split {
        let h = (x - split) / n as f64;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * eq4_pdf(v, split + i as f64 * h) * h;
        }
    }
    tail + acc
}

#[test]
fn eq4_cdf_matches_quadrature() {
    for v in [0.1, 0.3658, 1.0, 2.0] {
        let m = DistributionModel::Eq4 { vg: v };
        for x in [-30.0, -2.0, -0.3, 0.0, 0.4, 1.5, 25.0] {
            let want = eq4_cdf_trapezoid(v, x);
            let got = m.cdf(x).unwrap();
            assert!((got - want).abs() < 1e-7, "v={v} x={x}: {got} vs {want}");
        }
    }
}

fn brute_ks(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for &xi in x {
        let at = x.iter().filter(|&&v| v <= xi).count() as f64 / n;
        let below = x.iter().filter(|&&v| v < xi).count() as f64 / n;
        d = d.max((at - cdf(xi)).abs()).max((below - cdf(xi)).abs());
    }
    d
}

fn brute_ad(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mut acc = 0.0;
    for (k, &v) in s.iter().enumerate() {
        let i = (k + 1) as f64;
        let f = cdf(v);
        acc += (2.0 * i - 1.0) * f.ln() + (2.0 * n as f64 + 1.0 - 2.0 * i) * (1.0 - f).ln();
    }
    -(n as f64) - acc / n as f64
}

#[test]
fn ks_and_ad_match_brute_force() {
    let mut r = rng::stream(2024);
    for trial in 0..100 {
        let n = r.random_range(1..=20);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let model = DistributionModel::Laplace { location: r.random_range(-1.0..1.0), scale: r.random_range(0.5..2.0) };
        let cdf = |v: f64| model.cdf(v).unwrap();
        let ks = ks_test(&x, cdf).unwrap().statistic_raw;
        assert!((ks - brute_ks(&x, cdf)).abs() <= 1e-12, "trial {trial}");
        let ad = ad_test(&x, cdf).unwrap().statistic_raw;
        let want = brute_ad(&x, cdf);
        assert!((ad - want).abs() <= 1e-12 * want.abs().max(1.0), "trial {trial}: {ad} vs {want}");
    }
    let single = ad_test(&[0.0], |_| 0.5).unwrap().statistic_raw;
    assert!((single - (-1.0 + 2.0 * 2f64.ln())).abs() <= 1e-15);
}

fn pearson_upper(a: &SquareMatrix, b: &SquareMatrix, perm: &[usize]) -> f64 {
    let n = a.dim();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            xs.push(a.get(i, j));
            ys.push(b.get(perm[i], perm[j]));
        }
    }
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn random_sym(n: usize, r: &mut impl Rng) -> SquareMatrix {
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = r.random();
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

#[test]
fn exhaustive_mantel_matches_enumeration() {
    let mut r = rng::stream(5);
    for _ in 0..10 {
        let a = random_sym(5, &mut r);
        let b = random_sym(5, &mut r);
        let ident: Vec<usize> = (0..5).collect();
        let r0 = pearson_upper(&a, &b, &ident);
        let perms = all_perms(5);
        let hits = perms.iter().filter(|p| pearson_upper(&a, &b, p) >= r0 - 1e-12).count();
        let rep = mantel_test_exhaustive(&a, &b).unwrap();
        assert!((rep.r - r0).abs() < 1e-12);
        assert_eq!(rep.p, hits as f64 / 120.0);
    }
}

#[test]
fn sampled_mantel_agrees_with_exhaustive_on_4x4() {
    let mut r = rng::stream(77);
    let a = random_sym(4, &mut r);
    let b = random_sym(4, &mut r);
    let exact = mantel_test_exhaustive(&a, &b).unwrap().p;
    let sampled = mantel_test(&a, &b, 20_000, &mut rng::stream(1)).unwrap().p;
    // binomial sd at 20k permutations is below 0.0036
    assert!((sampled - exact).abs() < 0.015, "{sampled} vs {exact}");
}

#[test]
fn chi_square_by_hand() {
    // λ = 1 with 100 observations: bins {0}, {1}, {2}, {3+} once pooled to ≥ 5 expected
    let mut v = vec![0u64; 37];
    v.extend(vec![1; 37]);
    v.extend(vec![2; 18]);
    v.extend(vec![3; 8]);
    let rep = poisson_chi_square(&v, 1.0).unwrap();
    let e = (-1f64).exp();
    let p = [e, e, e / 2.0, 1.0 - 2.5 * e];
    let obs = [37.0, 37.0, 18.0, 8.0];
    let want: f64 = obs.iter().zip(p).map(|(o, q)| (o - 100.0 * q).powi(2) / (100.0 * q)).sum();
    assert_eq!(rep.bin_starts, vec![0, 1, 2, 3]);
    assert!((rep.statistic - want).abs() < 1e-9, "{} vs {want}", rep.statistic);
    assert_eq!(rep.dof, 3);
}

#[test]
fn handshake_and_node_accounting() {
    for (a, b, n0, m) in [(0.0, 0.0, 5, 3000), (0.3, 0.5, 1, 2000), (1.0, 0.0, 1, 500), (0.1, 1.0, 20, 4000)] {
        let g = generate(&GrowthConfig::new(a, b, n0, m, 9)).unwrap();
        let deg = g.degree_sequence(false);
        assert_eq!(deg.iter().sum::<u64>(), 2 * m as u64);
        assert_eq!(g.self_loops.len(), n0);
        let touched = (n0..g.node_count).all(|v| deg[v] > 0);
        assert!(touched, "every entrant has a link");
        assert_eq!(link_count_matrix(&g, g.node_count + 3).unwrap().upper_sum(), m as f64);
    }
}

#[test]
fn strengths_are_twice_the_weight_total() {
    let g = generate(&GrowthConfig::new(0.2, 0.0, 10, 5000, 4)).unwrap();
    let model = WeightModel::new(0.0, 1.0, 0.0, 0.1).unwrap();
    let mut r = rng::stream(4);
    let p = evolve_weights(&assign_initial_weights(&g, &model, &mut r).unwrap(), &model, 3, &mut r).unwrap();
    for t in 0..p.periods() {
        let w: f64 = p.weights(t).unwrap().iter().sum();
        let s: f64 = p.node_strength(t).unwrap().iter().sum();
        assert!((s - 2.0 * w).abs() <= 1e-9 * s);
    }
}

#[test]
fn lognormal_weights_have_the_predicted_moments() {
    let g = generate(&GrowthConfig::new(0.0, 0.0, 100, 20_000, 1)).unwrap();
    let model = WeightModel::new(0.0, 0.0, 0.01, 0.1).unwrap();
    let mut r = rng::stream(8);
    let p = evolve_weights(&assign_initial_weights(&g, &model, &mut r).unwrap(), &model, 100, &mut r).unwrap();
    let lw: Vec<f64> = p.weights(100).unwrap().iter().map(|w| w.ln()).collect();
    let n = lw.len() as f64;
    let mean = lw.iter().sum::<f64>() / n;
    let var = lw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // sums of 100 N(0.01, 0.1²) shocks: N(1, 1); sampling error of the mean ≈ 0.007
    assert!((mean - 1.0).abs() < 0.03, "{mean}");
    assert!((var - 1.0).abs() < 0.05, "{var}");
}
