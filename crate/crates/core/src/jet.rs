//! Truncated multivariate Taylor arithmetic (forward mode, higher order).
//!
//! A [`Jet`] in `d` variables truncated at total order `k` stores one
//! coefficient per multi-index `α` with `|α| ≤ k`; the coefficient is
//! `∂^α f / α!`. Multi-indices are kept in graded lexicographic order, so a
//! lower-order layout of the same dimension is a prefix of a higher one and
//! truncation is a slice.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::JetError;

/// Highest total order a jet may carry.
pub const MAX_ORDER: usize = 4;

/// Multi-index bookkeeping shared by all jets of one `(dim, order)`.
pub struct Layout {
    dim: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    degrees: Vec<u8>,
    lookup: HashMap<Vec<u8>, usize>,
    factorials: Vec<f64>,
    products: Vec<(u32, u32, u32)>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("len", &self.indices.len())
            .finish()
    }
}

fn push_degree(dim: usize, remaining: u8, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        prefix.push(first);
        push_degree(dim, remaining - first, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(dim: usize, order: usize) -> Self {
        let mut indices = Vec::new();
        for degree in 0..=order as u8 {
            push_degree(dim, degree, &mut Vec::with_capacity(dim), &mut indices);
        }
        let degrees: Vec<u8> = indices.iter().map(|a| a.iter().sum()).collect();
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let factorials = indices
            .iter()
            .map(|a| a.iter().map(|&m| factorial(m as usize)).product())
            .collect();
        let mut products = Vec::new();
        let mut scratch = vec![0u8; dim];
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if (degrees[i] + degrees[j]) as usize > order {
                    // Later j only grow in degree.
                    if degrees[j] as usize > order - degrees[i] as usize {
                        break;
                    }
                    continue;
                }
                for v in 0..dim {
                    scratch[v] = a[v] + b[v];
                }
                products.push((i as u32, j as u32, lookup[&scratch] as u32));
            }
        }
        Layout {
            dim,
            order,
            indices,
            degrees,
            lookup,
            factorials,
            products,
        }
    }

    /// Shared layout for `(dim, order)`.
    pub fn get(dim: usize, order: usize) -> Arc<Layout> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("layout cache poisoned");
        guard
            .entry((dim, order))
            .or_insert_with(|| Arc::new(Layout::build(dim, order)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Multi-indices in storage order.
    pub fn indices(&self) -> &[Vec<u8>] {
        &self.indices
    }

    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of coefficients whose multi-index has degree `≤ order`.
    fn prefix_len(&self, order: usize) -> usize {
        self.degrees.partition_point(|&d| (d as usize) <= order)
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

/// Truncated Taylor expansion of a function of `dim` variables.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.layout.dim == other.layout.dim
            && self.layout.order == other.layout.order
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Self {
        let layout = Layout::get(dim, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// The coordinate function `v_i` expanded at `value`.
    pub fn variable(dim: usize, order: usize, index: usize, value: f64) -> Self {
        let mut jet = Self::constant(dim, order, value);
        if order >= 1 {
            // Degree-one block is ordered e_0, e_1, ...
            jet.coeffs[1 + index] = 1.0;
        }
        jet
    }

    /// One jet per coordinate, all sharing a `(values.len(), order)` layout.
    pub fn seed(values: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        if values.is_empty() {
            return Err(JetError::EmptySeed);
        }
        if order > MAX_ORDER {
            return Err(JetError::OrderTooHigh {
                requested: order,
                max: MAX_ORDER,
            });
        }
        let d = values.len();
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(d, order, i, v))
            .collect())
    }

    /// Builds a jet from raw Taylor coefficients in layout order.
    pub fn from_coefficients(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        let layout = Layout::get(dim, order);
        if coeffs.len() != layout.len() {
            return Err(JetError::LengthMismatch {
                expected: layout.len(),
                found: coeffs.len(),
            });
        }
        Ok(Jet { layout, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficients (`∂^α f / α!`) in layout order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Raw Taylor coefficient at `alpha`.
    pub fn coefficient(&self, alpha: &[u8]) -> Result<f64, JetError> {
        self.check_index(alpha)?;
        Ok(self.coeffs[self.layout.lookup[alpha]])
    }

    /// Partial derivative `∂^α f` (coefficient times `α!`).
    pub fn extract(&self, alpha: &[u8]) -> Result<f64, JetError> {
        self.check_index(alpha)?;
        let i = self.layout.lookup[alpha];
        Ok(self.coeffs[i] * self.layout.factorials[i])
    }

    /// Like [`Jet::extract`] but for indices known to be valid.
    pub(crate) fn derivative_unchecked(&self, alpha: &[u8]) -> f64 {
        let i = self.layout.lookup[alpha];
        self.coeffs[i] * self.layout.factorials[i]
    }

    fn check_index(&self, alpha: &[u8]) -> Result<(), JetError> {
        if alpha.len() != self.layout.dim {
            return Err(JetError::DimensionMismatch {
                expected: self.layout.dim,
                found: alpha.len(),
            });
        }
        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
        if degree > self.layout.order {
            return Err(JetError::IndexBeyondOrder {
                degree,
                order: self.layout.order,
            });
        }
        Ok(())
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.layout.order {
            return self.clone();
        }
        let layout = Layout::get(self.layout.dim, order);
        let keep = self.layout.prefix_len(order);
        Jet {
            layout,
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    /// A constant jet with the same layout.
    pub fn lift(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    fn is_constant_shape(&self) -> bool {
        self.layout.order == 0
    }

    /// Brings two operands to a common layout: constants broadcast, and
    /// orders truncate to the smaller one.
    fn align(a: &Jet, b: &Jet) -> (Jet, Jet) {
        if Arc::ptr_eq(&a.layout, &b.layout) {
            return (a.clone(), b.clone());
        }
        if b.is_constant_shape() {
            return (a.clone(), a.lift(b.value()));
        }
        if a.is_constant_shape() {
            return (b.lift(a.value()), b.clone());
        }
        assert_eq!(
            a.layout.dim, b.layout.dim,
            "jet dimension mismatch: {} vs {}",
            a.layout.dim, b.layout.dim
        );
        let order = a.layout.order.min(b.layout.order);
        (a.truncate(order), b.truncate(order))
    }

    fn zip_with(a: &Jet, b: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        if Arc::ptr_eq(&a.layout, &b.layout) {
            let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| f(*x, *y)).collect();
            return Jet {
                layout: a.layout.clone(),
                coeffs,
            };
        }
        let (a, b) = Jet::align(a, b);
        Jet::zip_with(&a, &b, f)
    }

    fn product(a: &Jet, b: &Jet) -> Jet {
        if !Arc::ptr_eq(&a.layout, &b.layout) {
            if b.is_constant_shape() {
                return a.scale(b.value());
            }
            if a.is_constant_shape() {
                return b.scale(a.value());
            }
            let (a, b) = Jet::align(a, b);
            return Jet::product(&a, &b);
        }
        let mut coeffs = vec![0.0; a.coeffs.len()];
        for &(i, j, k) in &a.layout.products {
            coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
        Jet {
            layout: a.layout.clone(),
            coeffs,
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    /// `Σ_m taylor[m] (self − self₀)^m`, truncated.
    ///
    /// `taylor[m]` must be `φ^(m)(self₀)/m!` for the composed function `φ`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let k = self.layout.order;
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = self.lift(taylor.get(k).copied().unwrap_or(0.0));
        for m in (0..k).rev() {
            acc = Jet::product(&acc, &delta);
            acc.coeffs[0] += taylor[m];
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let k = self.layout.order;
        let taylor: Vec<f64> = (0..=k)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign / a.powi(m as i32 + 1)
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let taylor: Vec<f64> = (0..=self.layout.order).map(|m| e / factorial(m)).collect();
        self.compose(&taylor)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let taylor: Vec<f64> = (0..=self.layout.order)
            .map(|m| {
                if m == 0 {
                    a.ln()
                } else {
                    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (m as f64 * a.powi(m as i32))
                }
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let (s, c) = a.sin_cos();
        let cycle = [s, c, -s, -c];
        let taylor: Vec<f64> = (0..=self.layout.order)
            .map(|m| cycle[m % 4] / factorial(m))
            .collect();
        self.compose(&taylor)
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let (s, c) = a.sin_cos();
        let cycle = [c, -s, -c, s];
        let taylor: Vec<f64> = (0..=self.layout.order)
            .map(|m| cycle[m % 4] / factorial(m))
            .collect();
        self.compose(&taylor)
    }

    /// Real power with a constant exponent.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut binom = 1.0;
        let taylor: Vec<f64> = (0..=self.layout.order)
            .map(|m| {
                if m > 0 {
                    binom *= (p - (m as f64 - 1.0)) / m as f64;
                }
                if binom == 0.0 {
                    0.0
                } else {
                    binom * pow_real(a, p - m as f64)
                }
            })
            .collect();
        self.compose(&taylor)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    /// `|self|`, using the sign of the value; not smooth at zero.
    pub fn abs(&self) -> Jet {
        if self.value() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

/// `a^e`, taking the integer path when `e` is integral so negative bases work.
fn pow_real(a: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet::zip_with(&self, &rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet::zip_with(&self, &rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        Jet::product(&self, &rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        if rhs.is_constant_shape() {
            return self.scale(1.0 / rhs.value());
        }
        Jet::product(&self, &rhs.recip())
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for c in &mut self.coeffs {
            *c = -*c;
        }
        self
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet::zip_with(self, rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet::zip_with(self, rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Jet::product(self, rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

/// Anything the expression evaluator and tensor pipeline can run on.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn value(&self) -> f64;
    /// A constant of the same shape as `self`.
    fn lift(&self, c: f64) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn abs(&self) -> Self;
    fn recip(&self) -> Self;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn powf(&self, p: f64) -> Self {
        pow_real(*self, p)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn lift(&self, c: f64) -> Self {
        Jet::lift(self, c)
    }
    fn scale(&self, c: f64) -> Self {
        Jet::scale(self, c)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn powf(&self, p: f64) -> Self {
        Jet::powf(self, p)
    }
    fn abs(&self) -> Self {
        Jet::abs(self)
    }
    fn recip(&self) -> Self {
        Jet::recip(self)
    }
}

/// Central finite-difference estimate of `∂^α f` at `point`, with one
/// Richardson halving. Supports `|α| ≤ 3`.
///
/// The stencil is the tensor product of per-variable central stencils, each
/// accurate to `O(step²)`; Richardson lifts the result to `O(step⁴)`.
pub fn fd_oracle<F>(f: F, point: &[f64], alpha: &[u8], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(point.len(), alpha.len(), "multi-index dimension mismatch");
    let degree: usize = alpha.iter().map(|&a| a as usize).sum();
    assert!(degree <= 3, "fd_oracle supports total order ≤ 3");
    let coarse = central_stencil(&f, point, alpha, step);
    let fine = central_stencil(&f, point, alpha, 0.5 * step);
    (4.0 * fine - coarse) / 3.0
}

/// Offsets (in units of the step) and weights of the 1-D central stencil for
/// an `order`-th derivative.
fn stencil_1d(order: u8) -> &'static [(f64, f64)] {
    match order {
        0 => &[(0.0, 1.0)],
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        _ => unreachable!("order checked by caller"),
    }
}

fn central_stencil<F>(f: &F, point: &[f64], alpha: &[u8], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let stencils: Vec<&[(f64, f64)]> = alpha.iter().map(|&a| stencil_1d(a)).collect();
    let degree: i32 = alpha.iter().map(|&a| a as i32).sum();
    let mut counters = vec![0usize; point.len()];
    let mut probe = point.to_vec();
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        for (v, s) in stencils.iter().enumerate() {
            let (offset, w) = s[counters[v]];
            probe[v] = point[v] + offset * h;
            weight *= w;
        }
        total += weight * f(&probe);
        // Odometer over the stencil product.
        let mut v = 0;
        loop {
            if v == point.len() {
                return total / h.powi(degree);
            }
            counters[v] += 1;
            if counters[v] < stencils[v].len() {
                break;
            }
            counters[v] = 0;
            v += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_identity_derivative() {
        let x = &Jet::seed(&[2.0], 1).unwrap()[0];
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.extract(&[1]).unwrap(), 1.0);
    }

    #[test]
    fn seed_product_mixed_partial() {
        let v = Jet::seed(&[1.0, 2.0], 2).unwrap();
        let p = &v[0] * &v[1];
        assert_eq!(p.extract(&[1, 1]).unwrap(), 1.0);
        assert_eq!(p.extract(&[2, 0]).unwrap(), 0.0);
        assert_eq!(p.value(), 2.0);
    }

    #[test]
    fn sin_taylor_coefficients_at_zero() {
        let x = &Jet::seed(&[0.0], 3).unwrap()[0];
        let s = x.sin();
        let expected = [0.0, 1.0, 0.0, -1.0 / 6.0];
        for (c, e) in s.coefficients().iter().zip(expected) {
            assert!((c - e).abs() < 1e-15, "{c} vs {e}");
        }
    }

    #[test]
    fn sqrt_of_norm_squared() {
        let v = Jet::seed(&[3.0, 4.0], 2).unwrap();
        let r = (&v[0] * &v[0] + &v[1] * &v[1]).sqrt();
        assert!((r.value() - 5.0).abs() < 1e-14);
        assert!((r.extract(&[1, 0]).unwrap() - 0.6).abs() < 1e-14);
        assert!((r.extract(&[0, 1]).unwrap() - 0.8).abs() < 1e-14);
        // ∂²|y|/∂y1² = y2²/|y|³
        assert!((r.extract(&[2, 0]).unwrap() - 16.0 / 125.0).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_identity() {
        let x = Jet::seed(&[7.0], 3).unwrap().remove(0);
        let one = x.clone() * x.recip();
        assert!((one.value() - 1.0).abs() < 1e-15);
        for c in &one.coefficients()[1..] {
            assert!(c.abs() < 1e-15);
        }
    }

    #[test]
    fn exp_log_inverse() {
        let v = Jet::seed(&[0.7, 1.3], 3).unwrap();
        let j = &v[0] * &v[0] + v[1].clone() + v[0].lift(0.5);
        let back = j.ln().exp();
        for (a, b) in back.coefficients().iter().zip(j.coefficients()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn extract_second_derivative_of_square() {
        let x = Jet::seed(&[1.7], 2).unwrap().remove(0);
        let sq = &x * &x;
        assert_eq!(sq.extract(&[2]).unwrap(), 2.0);
    }

    #[test]
    fn extract_beyond_order_is_error() {
        let x = Jet::seed(&[1.0], 2).unwrap().remove(0);
        assert!(matches!(
            x.extract(&[3]),
            Err(JetError::IndexBeyondOrder { degree: 3, order: 2 })
        ));
    }

    #[test]
    fn order_above_maximum_rejected() {
        assert!(Jet::seed(&[1.0], MAX_ORDER + 1).is_err());
    }

    #[test]
    fn mixed_orders_truncate_to_minimum() {
        let a = Jet::variable(2, 3, 0, 1.0);
        let b = Jet::variable(2, 1, 1, 2.0);
        let c = a * b;
        assert_eq!(c.order(), 1);
        assert_eq!(c.value(), 2.0);
    }

    #[test]
    fn truncation_is_prefix() {
        let v = Jet::seed(&[0.3, 0.4], 4).unwrap();
        let j = (&v[0] * &v[1]).exp();
        let t = j.truncate(2);
        assert_eq!(t.coefficients(), &j.coefficients()[..t.coefficients().len()]);
        assert_eq!(t.layout().len(), 6);
    }

    #[test]
    fn layout_sizes_match_binomials() {
        // C(d + k, k)
        assert_eq!(Layout::get(4, 4).len(), 70);
        assert_eq!(Layout::get(6, 3).len(), 84);
        assert_eq!(Layout::get(1, 0).len(), 1);
    }

    #[test]
    fn fd_gradient_of_norm() {
        let norm = |p: &[f64]| (p[0] * p[0] + p[1] * p[1]).sqrt();
        let gx = fd_oracle(norm, &[3.0, 4.0], &[1, 0], 1e-3);
        let gy = fd_oracle(norm, &[3.0, 4.0], &[0, 1], 1e-3);
        assert!((gx - 0.6).abs() < 1e-8);
        assert!((gy - 0.8).abs() < 1e-8);
    }

    #[test]
    fn fd_second_derivative_of_cube() {
        let d2 = fd_oracle(|p: &[f64]| p[0].powi(3), &[2.0], &[2], 1e-3);
        assert!((d2 - 12.0).abs() < 1e-6);
    }

    #[test]
    fn fd_third_mixed_matches_analytic() {
        // ∂³(x² y)/∂x²∂y = 2
        let d = fd_oracle(|p: &[f64]| p[0] * p[0] * p[1], &[0.4, -1.2], &[2, 1], 1e-2);
        assert!((d - 2.0).abs() < 1e-7);
    }

    #[test]
    fn powf_integer_exponent_on_negative_base() {
        let x = Jet::seed(&[-2.0], 3).unwrap().remove(0);
        let c = x.powf(3.0);
        assert_eq!(c.value(), -8.0);
        assert!((c.extract(&[1]).unwrap() - 12.0).abs() < 1e-12);
        assert!((c.extract(&[2]).unwrap() + 12.0).abs() < 1e-12);
        assert!((c.extract(&[3]).unwrap() - 6.0).abs() < 1e-12);
    }
}
