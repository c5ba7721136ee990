//! Pointwise tensors of the Chern connection along the slit tangent bundle.
//!
//! Index conventions: a table with `up` contravariant and `down` covariant
//! slots stores its components row-major with the upper slots first, so
//! `Γ^i_jk` lives at `(i·n + j)·n + k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::metric::{min_eigenvalue, FinslerMetric};

#[inline]
pub(crate) fn i2(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

#[inline]
pub(crate) fn i3(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

#[inline]
pub(crate) fn i4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    None,
    /// Symmetric in every covariant slot.
    SymmetricLower,
    /// Symmetric in the last two covariant slots.
    SymmetricLastTwo,
    /// Antisymmetric in the last two covariant slots.
    AntisymmetricLastTwo,
    /// Symmetric in both contravariant slots.
    SymmetricUpper,
}

/// Dense components of a tensor at one point of the slit tangent bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorTable {
    pub name: &'static str,
    pub dimension: usize,
    pub up: usize,
    pub down: usize,
    pub symmetry: Symmetry,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub components: Vec<f64>,
}

impl TensorTable {
    pub fn new(
        name: &'static str,
        (up, down): (usize, usize),
        symmetry: Symmetry,
        x: &[f64],
        y: &[f64],
        components: Vec<f64>,
    ) -> Self {
        let n = x.len();
        debug_assert_eq!(components.len(), n.pow((up + down) as u32));
        TensorTable {
            name,
            dimension: n,
            up,
            down,
            symmetry,
            x: x.to_vec(),
            y: y.to_vec(),
            components,
        }
    }

    pub fn rank(&self) -> usize {
        self.up + self.down
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.rank(), "index rank mismatch for {}", self.name);
        let flat = index.iter().fold(0, |acc, &i| acc * self.dimension + i);
        self.components[flat]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_diff(&self, other: &TensorTable) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest violation of the declared symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dimension;
        let rank = self.rank();
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; rank];
        let swaps: Vec<(usize, usize, f64)> = match self.symmetry {
            Symmetry::None => return 0.0,
            Symmetry::SymmetricLower => (self.up..rank)
                .flat_map(|a| (a + 1..rank).map(move |b| (a, b, 1.0)))
                .collect(),
            Symmetry::SymmetricLastTwo => vec![(rank - 2, rank - 1, 1.0)],
            Symmetry::AntisymmetricLastTwo => vec![(rank - 2, rank - 1, -1.0)],
            Symmetry::SymmetricUpper => vec![(0, 1, 1.0)],
        };
        for flat in 0..self.components.len() {
            let mut r = flat;
            for slot in (0..rank).rev() {
                idx[slot] = r % n;
                r /= n;
            }
            for &(a, b, sign) in &swaps {
                let mut t = idx.clone();
                t.swap(a, b);
                let v = self.get(&t);
                worst = worst.max((self.components[flat] - sign * v).abs());
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Generic pipeline

/// `g`, `A`, `γ`, `N`, `Γ` at one point over any scalar.
#[derive(Debug, Clone)]
pub(crate) struct Connection<S> {
    pub n: usize,
    pub f: S,
    pub g: Vec<S>,
    pub ginv: Vec<S>,
    /// `∂g_ij/∂y^k`.
    pub dgy: Vec<S>,
    /// `∂g_ij/∂x^k`.
    pub dgx: Vec<S>,
    pub cartan: Vec<S>,
    pub gamma: Vec<S>,
    pub nonlinear: Vec<S>,
    pub chern: Vec<S>,
}

/// Gauss–Jordan inverse with partial pivoting on the leading values.
pub(crate) fn invert<S: Scalar>(m: &[S], n: usize) -> Result<Vec<S>> {
    let mut a = m.to_vec();
    let one = m[0].lift(1.0);
    let zero = m[0].lift(0.0);
    let mut inv: Vec<S> = (0..n * n)
        .map(|k| if k / n == k % n { one.clone() } else { zero.clone() })
        .collect();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.value().abs()));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| {
                a[p * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[q * n + col].value().abs())
            })
            .expect("non-empty range");
        if !(a[pivot * n + col].value().abs() > 1e-14 * scale.max(1e-300)) {
            return Err(Error::Singular(format!("{n}×{n} matrix with pivot column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = a[col * n + col].recip();
        for k in 0..n {
            a[col * n + k] = a[col * n + k].clone() * p.clone();
            inv[col * n + k] = inv[col * n + k].clone() * p.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * n + col].clone();
            for k in 0..n {
                a[r * n + k] = a[r * n + k].clone() - factor.clone() * a[col * n + k].clone();
                inv[r * n + k] = inv[r * n + k].clone() - factor.clone() * inv[col * n + k].clone();
            }
        }
    }
    Ok(inv)
}

/// Determinant by elimination over any scalar.
pub(crate) fn determinant<S: Scalar>(m: &[S], n: usize) -> S {
    let mut a = m.to_vec();
    let mut det = m[0].lift(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| {
                a[p * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[q * n + col].value().abs())
            })
            .expect("non-empty range");
        if a[pivot * n + col].value() == 0.0 {
            return m[0].lift(0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col].clone();
        det = det * p.clone();
        let pinv = p.recip();
        for r in col + 1..n {
            let factor = a[r * n + col].clone() * pinv.clone();
            for k in col..n {
                a[r * n + k] = a[r * n + k].clone() - factor.clone() * a[col * n + k].clone();
            }
        }
    }
    det
}

fn sum<S: Scalar>(template: &S, terms: impl Iterator<Item = S>) -> S {
    terms.fold(template.lift(0.0), |acc, t| acc + t)
}

impl<S: Scalar> Connection<S> {
    /// Runs `g → A → γ → N → Γ` from `F`, `y`, `g` and its first derivatives.
    pub fn assemble(n: usize, f: S, y: Vec<S>, g: Vec<S>, dgy: Vec<S>, dgx: Vec<S>) -> Result<Self> {
        let t = f.lift(0.0);
        let ginv = invert(&g, n)?;
        let half_f = f.scale(0.5);
        let cartan: Vec<S> = dgy.iter().map(|d| half_f.clone() * d.clone()).collect();

        // γ^i_jk = ½ g^is (∂_k g_sj − ∂_s g_jk + ∂_j g_sk)
        let mut lower = vec![t.clone(); n * n * n];
        for s in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = (dgx[i3(n, s, j, k)].clone() - dgx[i3(n, j, k, s)].clone()
                        + dgx[i3(n, s, k, j)].clone())
                    .scale(0.5);
                    lower[i3(n, s, j, k)] = v.clone();
                    lower[i3(n, s, k, j)] = v;
                }
            }
        }
        let gamma = raise_first(&ginv, &lower, n, &t);
        let cartan_up = raise_first(&ginv, &cartan, n, &t);

        // N^i_j = γ^i_jk y^k − A^i_jk γ^k_rs y^r y^s / F
        let mut gyy = vec![t.clone(); n];
        for k in 0..n {
            gyy[k] = sum(
                &t,
                (0..n).flat_map(|r| {
                    let gamma = &gamma;
                    let y = &y;
                    (0..n).map(move |s| gamma[i3(n, k, r, s)].clone() * y[r].clone() * y[s].clone())
                }),
            );
        }
        let finv = f.recip();
        let mut nonlinear = vec![t.clone(); n * n];
        for i in 0..n {
            for j in 0..n {
                let first = sum(&t, (0..n).map(|k| gamma[i3(n, i, j, k)].clone() * y[k].clone()));
                let corr = sum(&t, (0..n).map(|k| cartan_up[i3(n, i, j, k)].clone() * gyy[k].clone()));
                nonlinear[i2(n, i, j)] = first - corr * finv.clone();
            }
        }

        // Γ^l_jk = γ^l_jk − g^li (A_ijs N^s_k − A_jks N^s_i + A_kis N^s_j) / F
        let mut an = vec![t.clone(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    an[i3(n, i, j, k)] =
                        sum(&t, (0..n).map(|s| cartan[i3(n, i, j, s)].clone() * nonlinear[i2(n, s, k)].clone()));
                }
            }
        }
        let mut bracket = vec![t.clone(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = (an[i3(n, i, j, k)].clone() - an[i3(n, j, k, i)].clone() + an[i3(n, k, i, j)].clone())
                        * finv.clone();
                    bracket[i3(n, i, j, k)] = v.clone();
                    bracket[i3(n, i, k, j)] = v;
                }
            }
        }
        let correction = raise_first(&ginv, &bracket, n, &t);
        let chern = gamma
            .iter()
            .zip(&correction)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();

        Ok(Connection {
            n,
            f,
            g,
            ginv,
            dgy,
            dgx,
            cartan,
            gamma,
            nonlinear,
            chern,
        })
    }
}

/// `T^i_jk = m^il T_ljk`.
fn raise_first<S: Scalar>(m: &[S], t3: &[S], n: usize, zero: &S) -> Vec<S> {
    let mut out = vec![zero.clone(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[i3(n, i, j, k)] = sum(zero, (0..n).map(|l| m[i2(n, i, l)].clone() * t3[i3(n, l, j, k)].clone()));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Derivative extraction from the F² jet

/// Multi-index over `(x, y)` with the given x- and y-slot counts.
fn multi(n: usize, xs: &[usize], ys: &[usize]) -> Vec<u8> {
    let mut a = vec![0u8; 2 * n];
    for &i in xs {
        a[i] += 1;
    }
    for &i in ys {
        a[n + i] += 1;
    }
    a
}

fn connection_from_f2(n: usize, f2: &Jet, y: &[f64]) -> Result<Connection<f64>> {
    let d = |xs: &[usize], ys: &[usize]| 0.5 * f2.derivative_unchecked(&multi(n, xs, ys));
    let mut g = vec![0.0; n * n];
    let mut dgy = vec![0.0; n * n * n];
    let mut dgx = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            g[i2(n, i, j)] = d(&[], &[i, j]);
            for k in 0..n {
                dgy[i3(n, i, j, k)] = d(&[], &[i, j, k]);
                dgx[i3(n, i, j, k)] = d(&[k], &[i, j]);
            }
        }
    }
    let f = checked_f(f2.value())?;
    Connection::assemble(n, f, y.to_vec(), g, dgy, dgx)
}

fn checked_f(f2: f64) -> Result<f64> {
    if !(f2 > 0.0) {
        return Err(Error::InvalidMetric(format!("F² = {f2} is not positive")));
    }
    Ok(f2.sqrt())
}

/// First-order jet in `(x, y)` of `½ ∂^α F²`, read off an order-4 jet.
fn first_order(n: usize, f2: &Jet, xs: &[usize], ys: &[usize]) -> Jet {
    let base = multi(n, xs, ys);
    let mut coeffs = Vec::with_capacity(2 * n + 1);
    coeffs.push(0.5 * f2.derivative_unchecked(&base));
    for v in 0..2 * n {
        let mut a = base.clone();
        a[v] += 1;
        coeffs.push(0.5 * f2.derivative_unchecked(&a));
    }
    Jet::from_coefficients(2 * n, 1, coeffs).expect("layout length matches")
}

fn connection_jets(n: usize, f2: &Jet, x: &[f64], y: &[f64]) -> Result<Connection<Jet>> {
    let mut g = Vec::with_capacity(n * n);
    let mut dgy = Vec::with_capacity(n * n * n);
    let mut dgx = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            g.push(first_order(n, f2, &[], &[i, j]));
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                dgy.push(first_order(n, f2, &[], &[i, j, k]));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                dgx.push(first_order(n, f2, &[k], &[i, j]));
            }
        }
    }
    checked_f(f2.value())?;
    let f = f2.truncate(1).sqrt();
    let point: Vec<f64> = x.iter().chain(y).copied().collect();
    let vars = Jet::seed(&point, 1)?;
    let yj = vars[n..].to_vec();
    Connection::assemble(n, f, yj, g, dgy, dgx)
}

// ---------------------------------------------------------------------------
// Public API

/// Fundamental tensor, Cartan tensor and connection coefficients at `(x, y)`.
#[derive(Debug, Clone, Serialize)]
pub struct ChernData {
    pub f: f64,
    pub g: TensorTable,
    pub g_inv: TensorTable,
    pub cartan: TensorTable,
    pub gamma: TensorTable,
    pub nonlinear: TensorTable,
    pub chern: TensorTable,
}

impl ChernData {
    fn from_connection(c: &Connection<f64>, x: &[f64], y: &[f64]) -> Self {
        ChernData {
            f: c.f,
            g: TensorTable::new("g", (0, 2), Symmetry::SymmetricLower, x, y, c.g.clone()),
            g_inv: TensorTable::new("g_inv", (2, 0), Symmetry::SymmetricUpper, x, y, c.ginv.clone()),
            cartan: TensorTable::new("A", (0, 3), Symmetry::SymmetricLower, x, y, c.cartan.clone()),
            gamma: TensorTable::new("gamma", (1, 2), Symmetry::SymmetricLastTwo, x, y, c.gamma.clone()),
            nonlinear: TensorTable::new("N", (1, 1), Symmetry::None, x, y, c.nonlinear.clone()),
            chern: TensorTable::new("Gamma", (1, 2), Symmetry::SymmetricLastTwo, x, y, c.chern.clone()),
        }
    }
}

fn check_pd(metric: &FinslerMetric, x: &[f64], y: &[f64], g: &[f64]) -> Result<()> {
    let n = metric.dimension();
    let ev = min_eigenvalue(g, n);
    if !(ev > 0.0) {
        return Err(Error::NotPositiveDefinite {
            x: x.to_vec(),
            y: y.to_vec(),
            min_eigenvalue: ev,
        });
    }
    Ok(())
}

/// `g_ij = ½ ∂²F²/∂y^i∂y^j`.
pub fn fundamental_tensor(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<TensorTable> {
    let g = metric.fundamental_raw(x, y)?;
    check_pd(metric, x, y, &g)?;
    Ok(TensorTable::new("g", (0, 2), Symmetry::SymmetricLower, x, y, g))
}

/// `A_ijk = (F/2) ∂g_ij/∂y^k`.
pub fn cartan_tensor(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<TensorTable> {
    let n = metric.dimension();
    let jet = metric.f2_jet_y(x, y, 3)?;
    let f = checked_f(jet.value())?;
    let mut a = vec![0.0; n * n * n];
    let mut alpha = vec![0u8; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                alpha.iter_mut().for_each(|v| *v = 0);
                alpha[i] += 1;
                alpha[j] += 1;
                alpha[k] += 1;
                a[i3(n, i, j, k)] = 0.25 * f * jet.derivative_unchecked(&alpha);
            }
        }
    }
    Ok(TensorTable::new("A", (0, 3), Symmetry::SymmetricLower, x, y, a))
}

pub(crate) fn connection(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Connection<f64>> {
    let f2 = metric.f2_jet(x, y, 3)?;
    connection_from_f2(metric.dimension(), &f2, y)
}

pub fn formal_christoffel(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<TensorTable> {
    Ok(chern_coefficients(metric, x, y)?.gamma)
}

pub fn nonlinear_connection(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<TensorTable> {
    Ok(chern_coefficients(metric, x, y)?.nonlinear)
}

/// Chern connection coefficients in closed form from `γ`, `A` and `N`.
pub fn chern_coefficients(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<ChernData> {
    let c = connection(metric, x, y)?;
    check_pd(metric, x, y, &c.g)?;
    Ok(ChernData::from_connection(&c, x, y))
}

/// Residuals of the torsion-free and almost-compatibility equations.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct StructureResiduals {
    pub torsion: f64,
    pub horizontal: f64,
    pub vertical: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.torsion.max(self.horizontal).max(self.vertical)
    }
}

/// Checks `data` against derivatives of `g` recomputed from the metric.
pub fn verify_structure_equations(
    data: &ChernData,
    metric: &FinslerMetric,
    x: &[f64],
    y: &[f64],
) -> Result<StructureResiduals> {
    let n = metric.dimension();
    let fresh = connection(metric, x, y)?;
    let gam = &data.chern.components;
    let g = &data.g.components;
    let nl = &data.nonlinear.components;
    let mut torsion = 0.0f64;
    let mut horizontal = 0.0f64;
    let mut vertical = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                torsion = torsion.max((gam[i3(n, i, j, k)] - gam[i3(n, i, k, j)]).abs());
                let delta = fresh.dgx[i3(n, i, j, k)]
                    - (0..n).map(|s| nl[i2(n, s, k)] * fresh.dgy[i3(n, i, j, s)]).sum::<f64>();
                let rhs: f64 = (0..n)
                    .map(|l| g[i2(n, l, j)] * gam[i3(n, l, i, k)] + g[i2(n, i, l)] * gam[i3(n, l, j, k)])
                    .sum();
                horizontal = horizontal.max((delta - rhs).abs());
                vertical = vertical
                    .max((data.f * fresh.dgy[i3(n, i, j, k)] - 2.0 * data.cartan.components[i3(n, i, j, k)]).abs());
            }
        }
    }
    Ok(StructureResiduals {
        torsion,
        horizontal,
        vertical,
    })
}

/// `δφ/δx^j = ∂φ/∂x^j − N^i_j ∂φ/∂y^i` for `φ` given over first-order `(x, y)` jets.
pub fn horizontal_derivative<F>(metric: &FinslerMetric, x: &[f64], y: &[f64], phi: F) -> Result<Vec<f64>>
where
    F: Fn(&[Jet], &[Jet]) -> Result<Jet>,
{
    let n = metric.dimension();
    let c = connection(metric, x, y)?;
    let point: Vec<f64> = x.iter().chain(y).copied().collect();
    let vars = Jet::seed(&point, 1)?;
    let v = phi(&vars[..n], &vars[n..])?;
    let grad: Vec<f64> = (0..2 * n).map(|k| jet_partial(&v, k)).collect();
    Ok((0..n)
        .map(|j| grad[j] - (0..n).map(|i| c.nonlinear[i2(n, i, j)] * grad[n + i]).sum::<f64>())
        .collect())
}

#[inline]
fn jet_partial(j: &Jet, var: usize) -> f64 {
    if j.order() == 0 {
        0.0
    } else {
        j.coefficients()[1 + var]
    }
}

/// Everything at `(x, y)` including the derivative data needed for
/// curvatures and the Landsberg tensor.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub(crate) base: Connection<f64>,
    pub(crate) jets: Connection<Jet>,
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(|j| j.value()).collect()
}

impl Geometry {
    pub fn at(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Self> {
        let n = metric.dimension();
        let f2 = metric.f2_jet(x, y, 4)?;
        let jets = connection_jets(n, &f2, x, y)?;
        let base = Connection {
            n,
            f: jets.f.value(),
            g: values(&jets.g),
            ginv: values(&jets.ginv),
            dgy: values(&jets.dgy),
            dgx: values(&jets.dgx),
            cartan: values(&jets.cartan),
            gamma: values(&jets.gamma),
            nonlinear: values(&jets.nonlinear),
            chern: values(&jets.chern),
        };
        check_pd(metric, x, y, &base.g)?;
        Ok(Geometry {
            x: x.to_vec(),
            y: y.to_vec(),
            base,
            jets,
        })
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn f(&self) -> f64 {
        self.base.f
    }

    pub fn chern_data(&self) -> ChernData {
        ChernData::from_connection(&self.base, &self.x, &self.y)
    }

    fn dx(&self, q: &Jet, s: usize) -> f64 {
        jet_partial(q, s)
    }

    fn dy(&self, q: &Jet, s: usize) -> f64 {
        jet_partial(q, self.n() + s)
    }

    /// `δq/δx^s` for a quantity carried as a first-order jet.
    fn delta(&self, q: &Jet, s: usize) -> f64 {
        let n = self.n();
        self.dx(q, s) - (0..n).map(|m| self.base.nonlinear[i2(n, m, s)] * self.dy(q, m)).sum::<f64>()
    }

    /// `∂Γ^i_jk/∂y^l` at `[i][j][k][l]`.
    pub(crate) fn chern_dy(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[i4(n, i, j, k, l)] = self.dy(&self.jets.chern[i3(n, i, j, k)], l);
                    }
                }
            }
        }
        out
    }

    /// `∂N^k_j/∂y^l` at `[k][j][l]`.
    pub(crate) fn nonlinear_dy(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n * n];
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out[i3(n, k, j, l)] = self.dy(&self.jets.nonlinear[i2(n, k, j)], l);
                }
            }
        }
        out
    }

    /// hh-curvature `R^i_jkl = δΓ^i_jl/δx^k − δΓ^i_jk/δx^l + Γ^i_hk Γ^h_jl − Γ^i_hl Γ^h_jk`.
    pub fn hh_curvature(&self) -> TensorTable {
        let n = self.n();
        let gam = &self.base.chern;
        let mut r = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let quad: f64 = (0..n)
                            .map(|h| gam[i3(n, i, h, k)] * gam[i3(n, h, j, l)] - gam[i3(n, i, h, l)] * gam[i3(n, h, j, k)])
                            .sum();
                        r[i4(n, i, j, k, l)] = self.delta(&self.jets.chern[i3(n, i, j, l)], k)
                            - self.delta(&self.jets.chern[i3(n, i, j, k)], l)
                            + quad;
                    }
                }
            }
        }
        TensorTable::new("R", (1, 3), Symmetry::AntisymmetricLastTwo, &self.x, &self.y, r)
    }

    /// hv-curvature `P^i_jkl = −F ∂Γ^i_jk/∂y^l`.
    pub fn hv_curvature(&self) -> TensorTable {
        let f = self.f();
        let p = self.chern_dy().into_iter().map(|v| -f * v).collect();
        TensorTable::new("P", (1, 3), Symmetry::None, &self.x, &self.y, p)
    }

    /// Landsberg tensor `Ȧ_ijk = A_ijk|s y^s / F`.
    pub fn landsberg(&self) -> TensorTable {
        let n = self.n();
        let a = &self.base.cartan;
        let gam = &self.base.chern;
        let f = self.f();
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for s in 0..n {
                        let mut v = self.delta(&self.jets.cartan[i3(n, i, j, k)], s);
                        for l in 0..n {
                            v -= a[i3(n, l, j, k)] * gam[i3(n, l, i, s)]
                                + a[i3(n, i, l, k)] * gam[i3(n, l, j, s)]
                                + a[i3(n, i, j, l)] * gam[i3(n, l, k, s)];
                        }
                        acc += v * self.y[s];
                    }
                    out[i3(n, i, j, k)] = acc / f;
                }
            }
        }
        TensorTable::new("A_dot", (0, 3), Symmetry::SymmetricLower, &self.x, &self.y, out)
    }

    /// `J_k = g^ij Ȧ_ijk` and `tr Ȧ^k = g^kl J_l`.
    pub fn landsberg_trace(&self, adot: &TensorTable) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let ginv = &self.base.ginv;
        let lower: Vec<f64> = (0..n)
            .map(|k| {
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| ginv[i2(n, i, j)] * adot.components[i3(n, i, j, k)])
                    .sum()
            })
            .collect();
        let upper = (0..n)
            .map(|k| (0..n).map(|l| ginv[i2(n, k, l)] * lower[l]).sum())
            .collect();
        (lower, upper)
    }
}

/// Sign `σ` in `l_i P^i_jkl = σ Ȧ_jkl` with `l_i = g_is y^s / F`.
pub const LANDSBERG_SIGN: f64 = 1.0;

impl Geometry {
    /// `l_i P^i_jkl`, the flag component of the hv-curvature.
    pub fn flag_hv_curvature(&self, p: &TensorTable) -> TensorTable {
        let n = self.n();
        let g = &self.base.g;
        let f = self.f();
        let l: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|s| g[i2(n, i, s)] * self.y[s]).sum::<f64>() / f)
            .collect();
        let mut out = vec![0.0; n * n * n];
        for j in 0..n {
            for k in 0..n {
                for m in 0..n {
                    out[i3(n, j, k, m)] = (0..n).map(|i| l[i] * p.components[i4(n, i, j, k, m)]).sum();
                }
            }
        }
        TensorTable::new("lP", (0, 3), Symmetry::SymmetricLower, &self.x, &self.y, out)
    }
}

/// `R` and `P` at `(x, y)`.
pub fn curvatures(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<(TensorTable, TensorTable)> {
    let geo = Geometry::at(metric, x, y)?;
    Ok((geo.hh_curvature(), geo.hv_curvature()))
}

/// Landsberg tensor and its trace (index raised).
pub fn landsberg_tensor(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<(TensorTable, Vec<f64>)> {
    let geo = Geometry::at(metric, x, y)?;
    let adot = geo.landsberg();
    let (_, upper) = geo.landsberg_trace(&adot);
    Ok((adot, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::fd_oracle;
    use crate::metric::{Family, MetricSpec};
    use approx::assert_abs_diff_eq;

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

    fn sphere() -> FinslerMetric {
        FinslerMetric::instantiate(
            &MetricSpec::new(Family::Riemannian, 2)
                .coefficient("a11", "4/(1 + x1^2 + x2^2)^2")
                .coefficient("a22", "4/(1 + x1^2 + x2^2)^2"),
        )
        .unwrap()
    }

    #[test]
    fn euclidean_is_flat_everywhere() {
        let m = FinslerMetric::euclidean(3);
        let d = chern_coefficients(&m, &[0.1, 0.2, 0.3], &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(d.g.components, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.chern.max_abs(), 0.0);
        assert_eq!(d.nonlinear.max_abs(), 0.0);
        let r = verify_structure_equations(&d, &m, &[0.1, 0.2, 0.3], &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn conformal_christoffel_by_hand() {
        let m = conformal();
        let d = chern_coefficients(&m, &[0.4, -0.2], &[0.3, 0.9]).unwrap();
        let gam = &d.gamma;
        let expect = |i, j, k| match (i, j, k) {
            (0, 0, 0) => 1.0,
            (0, 1, 1) => -1.0,
            (1, 0, 1) | (1, 1, 0) => 1.0,
            _ => 0.0,
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_abs_diff_eq!(gam.get(&[i, j, k]), expect(i, j, k), epsilon = 1e-13);
                    assert_abs_diff_eq!(d.chern.get(&[i, j, k]), expect(i, j, k), epsilon = 1e-13);
                }
            }
        }
        assert!(d.cartan.max_abs() < 1e-14);
    }

    #[test]
    fn randers_fundamental_tensor_matches_fd_hessian() {
        let m = randers("0.5");
        let y = [0.0, 1.0];
        let g = fundamental_tensor(&m, &[0.0, 0.0], &y).unwrap();
        let f2 = |v: &[f64]| {
            let f = m.f(&[0.0, 0.0], v).unwrap();
            f * f
        };
        for (idx, alpha) in [(0usize, [2u8, 0u8]), (1, [1, 1]), (3, [0, 2])] {
            let fd = 0.5 * fd_oracle(f2, &y, &alpha, 1e-3);
            assert_abs_diff_eq!(g.components[idx], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn randers_cartan_matches_fd() {
        let m = randers("0.5");
        let y = [0.0, 1.0];
        let a = cartan_tensor(&m, &[0.0, 0.0], &y).unwrap();
        let g11 = |v: &[f64]| m.fundamental_raw(&[0.0, 0.0], v).unwrap()[0];
        let fd = 0.5 * m.f(&[0.0, 0.0], &y).unwrap() * fd_oracle(g11, &y, &[1, 0], 1e-3);
        assert_abs_diff_eq!(a.get(&[0, 0, 0]), fd, epsilon = 1e-5);
        assert!(a.symmetry_residual() < 1e-12);
        // Euler: y^k A_ijk = 0.
        for i in 0..2 {
            for j in 0..2 {
                let c: f64 = (0..2).map(|k| a.get(&[i, j, k]) * y[k]).sum();
                assert_abs_diff_eq!(c, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn x_independent_randers_has_no_connection() {
        let m = randers("0.5");
        let geo = Geometry::at(&m, &[0.2, 0.1], &[0.7, -0.4]).unwrap();
        let d = geo.chern_data();
        assert_eq!(d.gamma.max_abs(), 0.0);
        assert_eq!(d.chern.max_abs(), 0.0);
        assert_eq!(geo.landsberg().max_abs(), 0.0);
        assert!(d.cartan.max_abs() > 0.01);
    }

    #[test]
    fn non_berwald_randers_structure_and_landsberg() {
        let m = randers("0.3*x2");
        let x = [0.5, 0.2];
        let y = [0.6, 0.8];
        let d = chern_coefficients(&m, &x, &y).unwrap();
        let r = verify_structure_equations(&d, &m, &x, &y).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
        assert!(d.chern.symmetry_residual() < 1e-14);
        let (adot, _) = landsberg_tensor(&m, &x, &y).unwrap();
        assert!(adot.max_abs() > 1e-3);
        assert!(adot.symmetry_residual() < 1e-12);
    }

    #[test]
    fn corrupted_chern_detected() {
        let m = conformal();
        let (x, y) = ([0.1, 0.3], [1.0, 0.5]);
        let mut d = chern_coefficients(&m, &x, &y).unwrap();
        d.chern.components[1] += 0.1;
        let r = verify_structure_equations(&d, &m, &x, &y).unwrap();
        assert!(r.horizontal >= 0.05);
    }

    #[test]
    fn nonlinear_matches_fd_reassembly() {
        let m = randers("0.3*x2");
        let x = [0.5, 0.2];
        let y = [0.3, -0.9];
        let d = chern_coefficients(&m, &x, &y).unwrap();
        let n = 2;
        let pt: Vec<f64> = x.iter().chain(&y).copied().collect();
        let f2 = |p: &[f64]| {
            let f = m.f(&p[..2], &p[2..]).unwrap();
            f * f
        };
        let h = 1e-2;
        let deriv = |xs: &[usize], ys: &[usize]| 0.5 * fd_oracle(f2, &pt, &multi(n, xs, ys), h);
        let mut g = vec![0.0; 4];
        let mut dgy = vec![0.0; 8];
        let mut dgx = vec![0.0; 8];
        for i in 0..2 {
            for j in 0..2 {
                g[i2(n, i, j)] = deriv(&[], &[i, j]);
                for k in 0..2 {
                    dgy[i3(n, i, j, k)] = deriv(&[], &[i, j, k]);
                    dgx[i3(n, i, j, k)] = deriv(&[k], &[i, j]);
                }
            }
        }
        let f = m.f(&x, &y).unwrap();
        let c = Connection::assemble(n, f, y.to_vec(), g, dgy, dgx).unwrap();
        for (a, b) in c.nonlinear.iter().zip(&d.nonlinear.components) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn spray_preserves_f_squared() {
        for m in [conformal(), randers("0.3*x2")] {
            let d = horizontal_derivative(&m, &[0.2, -0.1], &[0.4, 0.7], |x, y| m.finsler_squared(x, y)).unwrap();
            for v in d {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
        }
        let e = FinslerMetric::euclidean(2);
        let d = horizontal_derivative(&e, &[0.0, 0.0], &[1.0, 0.0], |_, y| Ok(y[0].clone())).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn round_sphere_has_unit_curvature() {
        let m = sphere();
        let x = [0.3, -0.4];
        let geo = Geometry::at(&m, &x, &[0.2, 1.0]).unwrap();
        let r = geo.hh_curvature();
        let g = &geo.base.g;
        // g(R(∂1, ∂2)∂2, ∂1) = K (g11 g22 − g12²) with K = 1.
        let lhs: f64 = (0..2).map(|i| g[i2(2, 0, i)] * r.get(&[i, 1, 0, 1])).sum();
        assert_abs_diff_eq!(lhs, g[0] * g[3] - g[1] * g[2], epsilon = 1e-10);
        assert!(r.symmetry_residual() < 1e-12);
        assert!(geo.hv_curvature().max_abs() < 1e-12);
    }

    #[test]
    fn conformal_plane_is_flat() {
        let geo = Geometry::at(&conformal(), &[0.7, 0.1], &[1.0, 2.0]).unwrap();
        assert!(geo.hh_curvature().max_abs() < 1e-12);
        assert!(geo.landsberg().max_abs() < 1e-12);
    }

    #[test]
    fn zero_homogeneity_of_tables() {
        let m = randers("0.3*x2");
        let x = [0.5, 0.2];
        let a = Geometry::at(&m, &x, &[0.6, 0.8]).unwrap();
        let b = Geometry::at(&m, &x, &[1.2, 1.6]).unwrap();
        let close = |p: &TensorTable, q: &TensorTable| assert!(p.max_diff(q) < 1e-10, "{}", p.name);
        let (da, db) = (a.chern_data(), b.chern_data());
        close(&da.g, &db.g);
        close(&da.cartan, &db.cartan);
        close(&da.gamma, &db.gamma);
        close(&da.chern, &db.chern);
        close(&a.hv_curvature(), &b.hv_curvature());
        close(&a.landsberg(), &b.landsberg());
    }

    #[test]
    fn flag_hv_curvature_is_landsberg_with_frozen_sign() {
        let m = randers("0.3*x2");
        for (x, y) in [([0.5, 0.2], [0.6, 0.8]), ([-0.3, 0.4], [-1.0, 0.2])] {
            let geo = Geometry::at(&m, &x, &y).unwrap();
            let lp = geo.flag_hv_curvature(&geo.hv_curvature());
            let adot = geo.landsberg();
            assert!(adot.max_abs() > 1e-3);
            for (a, b) in lp.components.iter().zip(&adot.components) {
                assert_abs_diff_eq!(*a, LANDSBERG_SIGN * b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn generic_inverse_and_determinant() {
        let m = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = invert(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m[i * 3 + k] * inv[k * 3 + j]).sum();
                assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(determinant(&m, 3), 21.29, epsilon = 1e-12);
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_err());
    }
}
