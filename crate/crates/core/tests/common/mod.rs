#![allow(dead_code)]

use finsler_core::metric::{Family, FinslerMetric, MetricSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn euclidean() -> FinslerMetric {
    FinslerMetric::euclidean(2)
}

pub fn diag49() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Riemannian, 2)
            .coefficient("a11", "4")
            .coefficient("a22", "9")
            .named("diag(4,9)"),
    )
    .unwrap()
}

pub fn conformal() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Riemannian, 2)
            .coefficient("a11", "exp(2*x1)")
            .coefficient("a22", "exp(2*x1)")
            .named("conformal"),
    )
    .unwrap()
}

pub fn skew_riemannian() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Riemannian, 2)
            .coefficient("a11", "2 + x2^2")
            .coefficient("a12", "0.5*sin(x1)")
            .coefficient("a22", "1 + 0.3*x1^2")
            .named("skew riemannian"),
    )
    .unwrap()
}

pub fn sphere3() -> FinslerMetric {
    let c = "4/(1 + x1^2 + x2^2 + x3^2)^2";
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Riemannian, 3)
            .coefficient("a11", c)
            .coefficient("a22", c)
            .coefficient("a33", c)
            .named("round 3-sphere chart"),
    )
    .unwrap()
}

pub fn randers_constant() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Randers, 2)
            .coefficient("b1", "0.5")
            .named("randers b=(0.5,0)"),
    )
    .unwrap()
}

pub fn randers_witness() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Randers, 2)
            .coefficient("b1", "0.3*x2")
            .named("randers b1=0.3*x2"),
    )
    .unwrap()
}

pub fn randers3() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Randers, 3)
            .coefficient("a11", "1 + 0.2*x2^2")
            .coefficient("a33", "exp(0.3*x1)")
            .coefficient("b1", "0.2*x2")
            .coefficient("b2", "0.1*x3")
            .coefficient("b3", "0.05")
            .named("randers 3d"),
    )
    .unwrap()
}

pub fn dsl_quartic() -> FinslerMetric {
    FinslerMetric::instantiate(
        &MetricSpec::new(Family::Dsl, 2)
            .coefficient("F", "sqrt(sqrt(y1^4 + y2^4 + (1 + 0.2*x1^2)*y1^2*y2^2) + 0.5*(y1^2 + y2^2))")
            .named("quartic dsl"),
    )
    .unwrap()
}

/// Every metric used across the suites.
pub fn all_metrics() -> Vec<FinslerMetric> {
    vec![
        euclidean(),
        diag49(),
        conformal(),
        skew_riemannian(),
        sphere3(),
        randers_constant(),
        randers_witness(),
        randers3(),
        dsl_quartic(),
    ]
}

pub fn name(m: &FinslerMetric) -> String {
    m.spec().name.clone().unwrap_or_else(|| "euclidean".into())
}

/// Seeded `(x, y)` probes with `x ∈ [−0.5, 0.5]ⁿ` and `y` a normal sample.
pub fn random_probes(n: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if y.iter().map(|c| c * c).sum::<f64>() < 0.01 {
                y[0] = 1.0;
            }
            (x, y)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
