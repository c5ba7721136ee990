//! The interpolating family `g_t = (1−t)ϖ g + tχ h` and its invariance tests.
//!
//! The gauges are 0-homogeneous, so they are stored per sphere direction `u`.
//! With `g_xt = g_t`, the indicatrix of `F_t` in radial gauge carries node
//! weight `w (g_t[u,u])^{−n/2} √det g_t`.

use serde::Serialize;

use crate::averaging::Measure;
use crate::error::{Error, Result};
use crate::expr::{homogeneity_residual, probe_directions, HomogeneityCheck};
use crate::indicatrix::{pairwise_sum, par_nodes, SphereGrid};
use crate::metric::{min_eigenvalue, FinslerMetric};
use crate::tensor::{self, i2, i3, Symmetry, TensorTable};

/// Gauges must stay in this range.
pub const GAUGE_BOUNDS: [f64; 2] = [1e-6, 1e6];

/// x-offset for the volume probes around `x`.
pub const SHEN_PROBE_STEP: f64 = 1e-3;

/// How the two gauge functions are iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GaugeVariant {
    /// `χ = ϖ` throughout.
    #[default]
    Coupled,
    /// `χ` and `ϖ` updated in turn (Gauss–Seidel), each from its own formula.
    Independent,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaugeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub variant: GaugeVariant,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions {
            tol: 1e-10,
            max_iter: 50,
            variant: GaugeVariant::Coupled,
        }
    }
}

/// Relaxation of the log-gauge update. The plain update `c ← Φ(c)` scales
/// `c` by `c^{−n/2}`, which oscillates for `n = 2`; `2/(n+2)` lands on the
/// fixed point in one step for the coupled variant.
pub fn relaxation(n: usize) -> f64 {
    2.0 / (n as f64 + 2.0)
}

#[derive(Debug, Clone)]
struct NodeData {
    u: Vec<f64>,
    w: f64,
    g: Vec<f64>,
    sqrt_det_g: f64,
    f: f64,
    df: Vec<f64>,
}

/// Gauges at one `(x, t)` with iteration diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct HomotopyState {
    pub t: f64,
    pub x: Vec<f64>,
    pub variant: GaugeVariant,
    pub relaxation: f64,
    /// `h_ij(x)` the family is built around.
    pub h: Vec<f64>,
    /// `vol(I_x)`.
    pub volume: f64,
    /// `vol(I_xt)`.
    pub volume_t: f64,
    pub chi: Vec<f64>,
    pub varpi: Vec<f64>,
    pub gauge_range: [f64; 2],
    pub iterations: usize,
    pub final_update: f64,
    pub converged: bool,
    pub tol: f64,
    #[serde(skip)]
    nodes: Vec<NodeData>,
}

fn blend(t: f64, varpi: f64, g: &[f64], chi: f64, h: &[f64]) -> Vec<f64> {
    g.iter().zip(h).map(|(a, b)| (1.0 - t) * varpi * a + t * chi * b).collect()
}

fn quad(m: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += m[i2(n, i, j)] * y[i] * y[j];
        }
    }
    s
}

fn sqrt_det_pd(m: &[f64], n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = tensor::determinant(m, n);
    if !(d > 0.0) || m[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            x: x.to_vec(),
            y: y.to_vec(),
            min_eigenvalue: min_eigenvalue(m, n),
        });
    }
    Ok(d.sqrt())
}

/// `(node weights on I_xt, √det g_t per node)`.
fn weights_t(n: usize, x: &[f64], t: f64, nodes: &[NodeData], h: &[f64], chi: &[f64], varpi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut weights = Vec::with_capacity(nodes.len());
    let mut dets = Vec::with_capacity(nodes.len());
    for (a, node) in nodes.iter().enumerate() {
        let gt = blend(t, varpi[a], &node.g, chi[a], h);
        let sd = sqrt_det_pd(&gt, n, x, &node.u).map_err(|e| Error::at_node(a, "interpolated tensor", e))?;
        let q = quad(&gt, &node.u);
        weights.push(node.w * q.powf(-0.5 * n as f64) * sd);
        dets.push(sd);
    }
    Ok((weights, dets))
}

fn gather(metric: &FinslerMetric, measure: &Measure, x: &[f64], grid: &SphereGrid) -> Result<Vec<NodeData>> {
    let n = metric.dimension();
    if grid.dimension != n {
        return Err(Error::Argument(format!(
            "grid dimension {} does not match metric dimension {n}",
            grid.dimension
        )));
    }
    par_nodes(grid.len(), "homotopy node", |a| {
        let u = &grid.directions[a];
        let g = metric.fundamental_raw(x, u)?;
        let sqrt_det_g = sqrt_det_pd(&g, n, x, u)?;
        let (f, df) = measure.value_and_x_gradient(metric, x, u)?;
        Ok(NodeData {
            u: u.clone(),
            w: grid.weights[a],
            g,
            sqrt_det_g,
            f,
            df,
        })
    })
}

/// `⟨f M_a⟩` over node weights.
fn weighted_matrix(n: usize, weights: &[f64], mats: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let vol = pairwise_sum(weights);
    let mut out = vec![0.0; n * n];
    for k in 0..n * n {
        let terms: Vec<f64> = (0..weights.len()).map(|a| weights[a] * f[a] * mats[a][k]).collect();
        out[k] = pairwise_sum(&terms) / vol;
    }
    out
}

fn averaged_h(n: usize, nodes: &[NodeData]) -> Vec<f64> {
    let weights: Vec<f64> = nodes
        .iter()
        .map(|d| d.w * quad(&d.g, &d.u).powf(-0.5 * n as f64) * d.sqrt_det_g)
        .collect();
    let mats: Vec<Vec<f64>> = nodes.iter().map(|d| d.g.clone()).collect();
    let f: Vec<f64> = nodes.iter().map(|d| d.f).collect();
    weighted_matrix(n, &weights, &mats, &f)
}

fn solve_with(
    n: usize,
    x: &[f64],
    t: f64,
    nodes: Vec<NodeData>,
    h: Vec<f64>,
    options: &GaugeOptions,
) -> Result<HomotopyState> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Argument(format!("t = {t} is outside [0, 1]")));
    }
    let count = nodes.len();
    let ones = vec![1.0; count];
    let (w0, _) = weights_t(n, x, 0.0, &nodes, &h, &ones, &ones)?;
    let volume = pairwise_sum(&w0);
    let omega = relaxation(n);
    let mut chi = ones.clone();
    let mut varpi = ones;
    let mut iterations = 0;
    let mut final_update = f64::INFINITY;

    // Φ_a = (vol_t/vol) √det g(ū) / √det g_t(ū), ū the radial projection of y.
    let target = |chi: &[f64], varpi: &[f64]| -> Result<Vec<f64>> {
        let (wt, dets) = weights_t(n, x, t, &nodes, &h, chi, varpi)?;
        let ratio = pairwise_sum(&wt) / volume;
        Ok(nodes.iter().zip(&dets).map(|(d, sd)| ratio * d.sqrt_det_g / sd).collect())
    };
    let relax = |old: f64, phi: f64| (old.ln() * (1.0 - omega) + phi.ln() * omega).exp();
    let check_bounds = |vals: &[f64], name: &str| -> Result<()> {
        if let Some((a, v)) = vals
            .iter()
            .enumerate()
            .find(|(_, v)| !(GAUGE_BOUNDS[0]..=GAUGE_BOUNDS[1]).contains(*v))
        {
            return Err(Error::Numerical(format!(
                "gauge {name} = {v:e} at node {a} left [{:e}, {:e}] at t = {t}",
                GAUGE_BOUNDS[0], GAUGE_BOUNDS[1]
            )));
        }
        Ok(())
    };

    while iterations < options.max_iter {
        iterations += 1;
        let mut update = 0.0f64;
        match options.variant {
            GaugeVariant::Coupled => {
                let phi = target(&chi, &varpi)?;
                for a in 0..count {
                    let c = relax(chi[a], phi[a]);
                    update = update.max((c - chi[a]).abs());
                    chi[a] = c;
                    varpi[a] = c;
                }
            }
            GaugeVariant::Independent => {
                let phi = target(&chi, &varpi)?;
                for a in 0..count {
                    let c = relax(chi[a], phi[a]);
                    update = update.max((c - chi[a]).abs());
                    chi[a] = c;
                }
                let phi = target(&chi, &varpi)?;
                for a in 0..count {
                    let c = relax(varpi[a], phi[a]);
                    update = update.max((c - varpi[a]).abs());
                    varpi[a] = c;
                }
            }
        }
        check_bounds(&chi, "chi")?;
        check_bounds(&varpi, "varpi")?;
        final_update = update;
        if update < options.tol {
            break;
        }
    }
    let (wt, _) = weights_t(n, x, t, &nodes, &h, &chi, &varpi)?;
    let lo = chi.iter().chain(&varpi).copied().fold(f64::INFINITY, f64::min);
    let hi = chi.iter().chain(&varpi).copied().fold(0.0, f64::max);
    Ok(HomotopyState {
        t,
        x: x.to_vec(),
        variant: options.variant,
        relaxation: omega,
        h,
        volume,
        volume_t: pairwise_sum(&wt),
        chi,
        varpi,
        gauge_range: [lo, hi],
        iterations,
        final_update,
        converged: final_update < options.tol,
        tol: options.tol,
        nodes,
    })
}

/// Solves the gauge equations at `(x, t)` on the sphere grid, starting from `χ = ϖ = 1`.
///
/// An unconverged run is returned with `converged = false`; use
/// [`HomotopyState::ensure_converged`] to turn it into an error.
pub fn solve_gauges(
    metric: &FinslerMetric,
    measure: &Measure,
    x: &[f64],
    t: f64,
    grid: &SphereGrid,
    options: &GaugeOptions,
) -> Result<HomotopyState> {
    let n = metric.dimension();
    let nodes = gather(metric, measure, x, grid)?;
    let h = averaged_h(n, &nodes);
    solve_with(n, x, t, nodes, h, options)
}

impl HomotopyState {
    pub fn dimension(&self) -> usize {
        self.x.len()
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
                last_update: self.final_update,
            })
        }
    }

    /// Node weights of `I_xt`.
    fn weights(&self) -> Result<Vec<f64>> {
        Ok(weights_t(self.dimension(), &self.x, self.t, &self.nodes, &self.h, &self.chi, &self.varpi)?.0)
    }

    fn node_tensors(&self) -> Vec<Vec<f64>> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(a, d)| blend(self.t, self.varpi[a], &d.g, self.chi[a], &self.h))
            .collect()
    }

    /// `⟨f g_t⟩` over `I_xt`.
    pub fn averaged_tensor(&self) -> Result<Vec<f64>> {
        let f: Vec<f64> = self.nodes.iter().map(|d| d.f).collect();
        Ok(weighted_matrix(self.dimension(), &self.weights()?, &self.node_tensors(), &f))
    }

    /// The converged gauge at an arbitrary direction, from the fixed-point
    /// relation `c^{(n+2)/2} = (vol_t/vol) √det g / √det G`, `G = (1−t)g + t h`.
    pub fn gauge_at(&self, metric: &FinslerMetric, y: &[f64]) -> Result<f64> {
        self.ensure_converged()?;
        let n = self.dimension();
        let g = metric.fundamental_raw(&self.x, y)?;
        let big = blend(self.t, 1.0, &g, 1.0, &self.h);
        let k = self.volume_t / self.volume * sqrt_det_pd(&g, n, &self.x, y)? / sqrt_det_pd(&big, n, &self.x, y)?;
        Ok(k.powf(relaxation(n)))
    }

    /// `F_t(x, y) = √(g_t(x, y)[y, y])`.
    pub fn finsler_t(&self, metric: &FinslerMetric, y: &[f64]) -> Result<f64> {
        let gt = interpolated_tensor(self, metric, y)?;
        Ok(quad(&gt.components, y).sqrt())
    }

    /// 1-homogeneity of `F_t` over seeded probe directions.
    pub fn homogeneity(&self, metric: &FinslerMetric, tolerance: f64) -> Result<HomogeneityCheck> {
        let dirs = probe_directions(self.dimension(), 16, 0x5eed);
        let max_residual = homogeneity_residual(|y| self.finsler_t(metric, y), 1, &dirs)?;
        Ok(HomogeneityCheck {
            passed: max_residual <= tolerance,
            max_residual,
            tolerance,
        })
    }

    /// `f^k_ij(t) = ½ ⟨h_t^ks (∂_i f g_t,sj + ∂_j f g_t,is − ∂_s f g_t,ij)⟩_t` with `h_t = ⟨f g_t⟩_t`.
    pub fn f_term(&self) -> Result<Vec<f64>> {
        let n = self.dimension();
        let weights = self.weights()?;
        let mats = self.node_tensors();
        let ht = self.averaged_tensor()?;
        let hinv = tensor::invert(&ht, n)?;
        let vol = pairwise_sum(&weights);
        let mut out = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let terms: Vec<f64> = self
                        .nodes
                        .iter()
                        .zip(&mats)
                        .zip(&weights)
                        .map(|((d, gt), w)| {
                            let s: f64 = (0..n)
                                .map(|s| {
                                    hinv[i2(n, k, s)]
                                        * (d.df[i] * gt[i2(n, s, j)] + d.df[j] * gt[i2(n, i, s)]
                                            - d.df[s] * gt[i2(n, i, j)])
                                })
                                .sum();
                            0.5 * w * s
                        })
                        .collect();
                    out[i3(n, k, i, j)] = pairwise_sum(&terms) / vol;
                }
            }
        }
        Ok(out)
    }
}

/// `^t g_ij(x, y) = (1−t)ϖ g_ij + tχ h_ij`. Refuses unconverged states.
pub fn interpolated_tensor(state: &HomotopyState, metric: &FinslerMetric, y: &[f64]) -> Result<TensorTable> {
    let c = state.gauge_at(metric, y)?;
    let g = metric.fundamental_raw(&state.x, y)?;
    let comps = blend(state.t, c, &g, c, &state.h);
    Ok(TensorTable::new("g_t", (0, 2), Symmetry::SymmetricLower, &state.x, y, comps))
}

/// `vol(I_zt)` and `det g_zt` in the first grid direction at a probe `z` near `x`.
#[derive(Debug, Clone, Serialize)]
pub struct ShenProbe {
    pub x: Vec<f64>,
    pub volume_t: f64,
    pub det_g_t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShenSideData {
    pub step: f64,
    pub probes: Vec<ShenProbe>,
    /// `(max − min)/mean` of `vol(I_zt)` over the probes.
    pub volume_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceRow {
    pub t: f64,
    pub iterations: usize,
    pub final_update: f64,
    pub converged: bool,
    pub gauge_range: [f64; 2],
    pub volume_t: f64,
    /// `max |⟨g_t⟩_f − h|`.
    pub metric_deviation: f64,
    pub f_term: Vec<f64>,
    /// `max |f-term(t) − f-term(0)|`.
    pub f_term_drift: f64,
    pub homogeneity_residual: f64,
    pub shen: ShenSideData,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub x: Vec<f64>,
    pub measure: String,
    pub variant: GaugeVariant,
    pub h: Vec<f64>,
    pub volume: f64,
    pub rows: Vec<InvarianceRow>,
    pub max_metric_deviation: f64,
    pub max_f_term_drift: f64,
    pub all_converged: bool,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn shen_side_data(
    metric: &FinslerMetric,
    measure: &Measure,
    x: &[f64],
    t: f64,
    grid: &SphereGrid,
    options: &GaugeOptions,
) -> Result<ShenSideData> {
    let n = metric.dimension();
    let mut points = vec![x.to_vec()];
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut z = x.to_vec();
            z[k] += sign * SHEN_PROBE_STEP;
            points.push(z);
        }
    }
    let mut probes = Vec::with_capacity(points.len());
    for z in points {
        let state = solve_gauges(metric, measure, &z, t, grid, options)?;
        let u = &grid.directions[0];
        let det_g_t = if state.converged {
            tensor::determinant(&interpolated_tensor(&state, metric, u)?.components, n)
        } else {
            f64::NAN
        };
        probes.push(ShenProbe {
            x: z,
            volume_t: state.volume_t,
            det_g_t,
        });
    }
    let vols: Vec<f64> = probes.iter().map(|p| p.volume_t).collect();
    let lo = vols.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vols.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = vols.iter().sum::<f64>() / vols.len() as f64;
    Ok(ShenSideData {
        step: SHEN_PROBE_STEP,
        probes,
        volume_spread: (hi - lo) / mean,
    })
}

/// Per-t deviations of `⟨g_t⟩_f` from `h` and of the f-term from its `t = 0` value.
pub fn invariance_report(
    metric: &FinslerMetric,
    measure: &Measure,
    x: &[f64],
    t_list: &[f64],
    grid: &SphereGrid,
    options: &GaugeOptions,
) -> Result<InvarianceReport> {
    let n = metric.dimension();
    let nodes = gather(metric, measure, x, grid)?;
    let h = averaged_h(n, &nodes);
    let base = solve_with(n, x, 0.0, nodes.clone(), h.clone(), options)?;
    let f_term_0 = base.f_term()?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let state = solve_with(n, x, t, nodes.clone(), h.clone(), options)?;
        let (metric_deviation, f_term, f_term_drift, homogeneity_residual) = if state.converged {
            let avg = state.averaged_tensor()?;
            let ft = state.f_term()?;
            let drift = max_abs_diff(&ft, &f_term_0);
            let hom = state.homogeneity(metric, 1e-10)?.max_residual;
            (max_abs_diff(&avg, &h), ft, drift, hom)
        } else {
            (f64::NAN, vec![f64::NAN; n * n * n], f64::NAN, f64::NAN)
        };
        rows.push(InvarianceRow {
            t,
            iterations: state.iterations,
            final_update: state.final_update,
            converged: state.converged,
            gauge_range: state.gauge_range,
            volume_t: state.volume_t,
            metric_deviation,
            f_term,
            f_term_drift,
            homogeneity_residual,
            shen: shen_side_data(metric, measure, x, t, grid, options)?,
        });
    }
    let fold = |v: Vec<f64>| v.into_iter().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(InvarianceReport {
        x: x.to_vec(),
        measure: measure.source(),
        variant: options.variant,
        volume: base.volume,
        h,
        max_metric_deviation: fold(rows.iter().map(|r| r.metric_deviation).collect()),
        max_f_term_drift: fold(rows.iter().map(|r| r.f_term_drift).collect()),
        all_converged: rows.iter().all(|r| r.converged),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{averaged_metric, levi_civita_decomposed};
    use crate::metric::{Family, MetricSpec};

    fn conformal() -> FinslerMetric {
        FinslerMetric::instantiate(
            &MetricSpec::new(Family::Riemannian, 2)
                .coefficient("a11", "exp(2*x1)")
                .coefficient("a22", "exp(2*x1)"),
        )
        .unwrap()
    }

    fn randers(b1: &str) -> FinslerMetric {
        FinslerMetric::instantiate(&MetricSpec::new(Family::Randers, 2).coefficient("b1", b1)).unwrap()
    }

    #[test]
    fn endpoint_gauges_are_one() {
        let grid = SphereGrid::build(2, 128).unwrap();
        for m in [conformal(), randers("0.3*x2")] {
            let s = solve_gauges(&m, &Measure::unit(), &[0.3, 0.4], 0.0, &grid, &GaugeOptions::default()).unwrap();
            assert!(s.converged && s.iterations <= 2);
            assert!(s.chi.iter().chain(&s.varpi).all(|&c| c == 1.0));
            let y = [0.3, -0.7];
            let gt = interpolated_tensor(&s, &m, &y).unwrap();
            assert_eq!(gt.components, m.fundamental_raw(&[0.3, 0.4], &y).unwrap());
        }
    }

    #[test]
    fn state_h_matches_averaging_module() {
        let grid = SphereGrid::build(2, 256).unwrap();
        let m = randers("0.3*x2");
        let f = Measure::parse(&m, "1 + 0.5*y1^2").unwrap();
        let s = solve_gauges(&m, &f, &[0.3, 0.4], 0.5, &grid, &GaugeOptions::default()).unwrap();
        let h = averaged_metric(&m, &f, &[0.3, 0.4], &grid).unwrap();
        assert!(max_abs_diff(&s.h, &h.h) < 1e-12);
        assert!((s.volume - h.volume).abs() < 1e-12);
    }

    #[test]
    fn riemannian_family_is_invariant() {
        let grid = SphereGrid::build(2, 128).unwrap();
        let r = invariance_report(&conformal(), &Measure::unit(), &[0.3, 0.1], &[0.0, 0.25, 0.5, 0.75, 1.0], &grid, &GaugeOptions::default()).unwrap();
        assert!(r.all_converged);
        assert!(r.max_metric_deviation < 1e-12, "{}", r.max_metric_deviation);
        assert!(r.max_f_term_drift < 1e-15);
    }

    #[test]
    fn riemannian_f_term_is_t_independent() {
        let m = conformal();
        let f = Measure::parse(&m, "exp(0.4*x1)*(1 + 0.5*y1^2)").unwrap();
        let grid = SphereGrid::build(2, 128).unwrap();
        let r = invariance_report(&m, &f, &[0.3, 0.1], &[0.25, 0.5, 1.0], &grid, &GaugeOptions::default()).unwrap();
        assert!(r.max_f_term_drift < 1e-12, "{}", r.max_f_term_drift);
        // The t = 0 f-term is the averaging module's f-term.
        let dec = levi_civita_decomposed(&m, &f, &[0.3, 0.1], &grid).unwrap();
        let base = solve_gauges(&m, &f, &[0.3, 0.1], 0.0, &grid, &GaugeOptions::default()).unwrap();
        assert!(max_abs_diff(&base.f_term().unwrap(), &dec.f_term) < 1e-12);
    }

    #[test]
    fn randers_coupled_converges_and_is_homogeneous() {
        let m = randers("0.5");
        let grid = SphereGrid::build(2, 256).unwrap();
        let s = solve_gauges(&m, &Measure::unit(), &[0.0, 0.0], 0.5, &grid, &GaugeOptions::default()).unwrap();
        assert!(s.converged && s.iterations <= 3, "{} {}", s.iterations, s.final_update);
        assert!(s.gauge_range[0] > 0.5 && s.gauge_range[1] < 2.0);
        assert!(s.homogeneity(&m, 1e-12).unwrap().passed);
        // Grid gauges agree with the closed form.
        for (a, u) in grid.directions.iter().enumerate().step_by(17) {
            assert!((s.gauge_at(&m, u).unwrap() - s.chi[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_variant_reaches_the_coupled_fixed_point() {
        let m = randers("0.3*x2");
        let grid = SphereGrid::build(2, 128).unwrap();
        let opts = GaugeOptions {
            variant: GaugeVariant::Independent,
            max_iter: 200,
            ..GaugeOptions::default()
        };
        let a = solve_gauges(&m, &Measure::unit(), &[0.3, 0.4], 0.5, &grid, &opts).unwrap();
        let b = solve_gauges(&m, &Measure::unit(), &[0.3, 0.4], 0.5, &grid, &GaugeOptions::default()).unwrap();
        assert!(a.converged, "{} {}", a.iterations, a.final_update);
        assert!(max_abs_diff(&a.chi, &b.chi) < 1e-8);
        assert!(max_abs_diff(&a.varpi, &b.chi) < 1e-8);
    }

    #[test]
    fn unconverged_state_is_refused() {
        let m = randers("0.5");
        let grid = SphereGrid::build(2, 64).unwrap();
        let opts = GaugeOptions {
            max_iter: 1,
            tol: 0.0,
            ..GaugeOptions::default()
        };
        let s = solve_gauges(&m, &Measure::unit(), &[0.0, 0.0], 0.5, &grid, &opts).unwrap();
        assert!(!s.converged);
        assert!(matches!(interpolated_tensor(&s, &m, &[1.0, 0.0]), Err(Error::NonConvergence { .. })));
        assert!(solve_gauges(&m, &Measure::unit(), &[0.0, 0.0], 1.5, &grid, &opts).is_err());
    }
}
