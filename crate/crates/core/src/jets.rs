//! Truncated bivariate Taylor arithmetic and the immersion maps evaluated with it.
//!
//! A [`Jet`] stores the Taylor coefficients of a complex scalar function of the two
//! real surface parameters (x, y) up to total degree 3. Coefficients are indexed by
//! monomial, so mixed partials are symmetric by construction.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientSpace;
use crate::error::{HslError, Result};

pub const MAX_ORDER: u8 = 3;
const N_COEFFS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Monomials x^i y^j in storage order (graded, then by increasing power of y).
const MONOMIALS: [(usize, usize); N_COEFFS] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

#[inline]
const fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

#[inline]
const fn len_for(order: u8) -> usize {
    let k = order as usize;
    (k + 1) * (k + 2) / 2
}

const FACTORIAL: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

/// Truncated Taylor expansion of a complex function of (x, y).
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    coeffs: [Complex64; N_COEFFS],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &&self.coeffs[..len_for(self.order)])
            .finish()
    }
}

impl Jet {
    pub fn constant(value: Complex64, order: u8) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut coeffs = [ZERO; N_COEFFS];
        coeffs[0] = value;
        Jet { order, coeffs }
    }

    pub fn real(value: f64, order: u8) -> Self {
        Self::constant(Complex64::new(value, 0.0), order)
    }

    /// Seed for the parameter `x` expanded at `x0`.
    pub fn var_x(x0: f64, order: u8) -> Self {
        let mut j = Self::real(x0, order);
        if order > 0 {
            j.coeffs[index(1, 0)] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Seed for the parameter `y` expanded at `y0`.
    pub fn var_y(y0: f64, order: u8) -> Self {
        let mut j = Self::real(y0, order);
        if order > 0 {
            j.coeffs[index(0, 1)] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of x^i y^j (zero above the truncation order).
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        if i + j > self.order as usize {
            ZERO
        } else {
            self.coeffs[index(i, j)]
        }
    }

    /// The partial derivative ∂ₓ^i ∂ᵧ^j at the expansion point.
    pub fn partial(&self, i: usize, j: usize) -> Complex64 {
        assert!(
            i + j <= self.order as usize,
            "partial of degree {} from a jet of order {}",
            i + j,
            self.order
        );
        self.coeffs[index(i, j)] * (FACTORIAL[i] * FACTORIAL[j])
    }

    /// Jet of ∂/∂x (axis 0) or ∂/∂y (axis 1); the order drops by one.
    pub fn deriv(&self, axis: usize) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut coeffs = [ZERO; N_COEFFS];
        for (k, &(i, j)) in MONOMIALS.iter().enumerate().take(len_for(order)) {
            coeffs[k] = if axis == 0 {
                self.coeffs[index(i + 1, j)] * (i + 1) as f64
            } else {
                self.coeffs[index(i, j + 1)] * (j + 1) as f64
            };
        }
        Jet { order, coeffs }
    }

    pub fn truncate(&self, order: u8) -> Self {
        let order = order.min(self.order);
        let mut coeffs = [ZERO; N_COEFFS];
        coeffs[..len_for(order)].copy_from_slice(&self.coeffs[..len_for(order)]);
        Jet { order, coeffs }
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut out = *self;
        for c in out.coeffs.iter_mut().take(len_for(self.order)) {
            *c = f(*c);
        }
        out
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    /// Real part, as a jet with vanishing imaginary coefficients.
    pub fn re(&self) -> Self {
        self.map(|c| Complex64::new(c.re, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|c| c * s)
    }

    /// g ∘ self, given g and its first three derivatives at the value of `self`.
    pub fn compose(&self, derivs: [Complex64; 4]) -> Self {
        let mut delta = *self;
        delta.coeffs[0] = ZERO;
        let mut out = Jet::constant(derivs[0], self.order);
        let mut power = Jet::real(1.0, self.order);
        for (n, d) in derivs.iter().enumerate().skip(1).take(self.order as usize) {
            power = power * delta;
            out += power.scale(*d / FACTORIAL[n]);
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    /// exp(i·self).
    pub fn exp_i(&self) -> Self {
        self.scale(Complex64::new(0.0, 1.0)).exp()
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.value().sin(), self.value().cos());
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.value().sin(), self.value().cos());
        self.compose([c, -s, -c, s])
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([s, c, s, c])
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose([c, s, c, s])
    }

    /// Square root of a jet whose value is a positive real.
    pub fn sqrt(&self) -> Self {
        let v = self.value();
        debug_assert!(v.re > 0.0 && v.im == 0.0, "sqrt of non-positive jet {v}");
        let r = v.sqrt();
        self.compose([r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v)])
    }

    pub fn recip(&self) -> Self {
        let v = self.value();
        debug_assert!(v.norm() > 0.0, "reciprocal of a vanishing jet");
        let r = v.inv();
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Jet::real(1.0, self.order), |acc, _| acc * *self)
    }

    /// Largest coefficient modulus, used in tests and diagnostics.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs[..len_for(self.order)]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut coeffs = [ZERO; N_COEFFS];
        for k in 0..len_for(order) {
            coeffs[k] = self.coeffs[k] + rhs.coeffs[k];
        }
        Jet { order, coeffs }
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order) as usize;
        let n = len_for(order as u8);
        let mut coeffs = [ZERO; N_COEFFS];
        for a in 0..n {
            let (ai, aj) = MONOMIALS[a];
            if self.coeffs[a] == ZERO {
                continue;
            }
            for b in 0..n {
                let (bi, bj) = MONOMIALS[b];
                if ai + aj + bi + bj > order {
                    continue;
                }
                coeffs[index(ai + bi, aj + bj)] += self.coeffs[a] * rhs.coeffs[b];
            }
        }
        Jet {
            order: order as u8,
            coeffs,
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale_re(rhs)
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Complex64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

/// Σ ε_k u_k conj(v_k) over jet-valued lift components.
pub fn pair(u: &[Jet], v: &[Jet], weights: &[f64]) -> Jet {
    debug_assert_eq!(u.len(), v.len());
    let mut acc: Option<Jet> = None;
    for ((a, b), w) in u.iter().zip(v).zip(weights) {
        let term = (*a * b.conj()) * *w;
        acc = Some(match acc {
            None => term,
            Some(s) => s + term,
        });
    }
    acc.expect("empty lift vector")
}

/// Axis-aligned parameter rectangle [x0, x1] × [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn square(half: f64) -> Self {
        Rect::new(-half, half, -half, half)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.x0, self.x1, self.y0, self.y1)
    }
}

/// Rule mapping seeded parameter jets (x, y) to jet-valued lift components.
pub type Formula = dyn Fn(&Jet, &Jet) -> Vec<Jet> + Send + Sync;

/// Rule producing lift-component jets of a requested order at a parameter point.
pub type PointRule = dyn Fn(f64, f64, u8) -> Vec<Jet> + Send + Sync;

#[derive(Clone)]
enum Source {
    Formula(Arc<Formula>),
    Point(Arc<PointRule>),
}

/// A parametrized immersion of a rectangle into C² or into a lift space.
#[derive(Clone)]
pub struct ImmersionMap {
    ambient: AmbientSpace,
    domain: Rect,
    periodic: [bool; 2],
    max_order: u8,
    source: Source,
}

impl fmt::Debug for ImmersionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionMap")
            .field("ambient", &self.ambient)
            .field("domain", &self.domain)
            .field("periodic", &self.periodic)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

impl ImmersionMap {
    pub fn new(
        ambient: AmbientSpace,
        domain: Rect,
        periodic: [bool; 2],
        formula: impl Fn(&Jet, &Jet) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        ImmersionMap {
            ambient,
            domain,
            periodic,
            max_order: MAX_ORDER,
            source: Source::Formula(Arc::new(formula)),
        }
    }

    /// A map whose rule works directly from the point and requested order,
    /// supporting jets only up to `max_order`.
    pub fn from_point_rule(
        ambient: AmbientSpace,
        domain: Rect,
        periodic: [bool; 2],
        max_order: u8,
        rule: impl Fn(f64, f64, u8) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        ImmersionMap {
            ambient,
            domain,
            periodic,
            max_order: max_order.min(MAX_ORDER),
            source: Source::Point(Arc::new(rule)),
        }
    }

    pub fn ambient(&self) -> AmbientSpace {
        self.ambient
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn max_order(&self) -> u8 {
        self.max_order
    }

    pub fn with_domain(mut self, domain: Rect) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_periodic(mut self, periodic: [bool; 2]) -> Self {
        self.periodic = periodic;
        self
    }

    /// Evaluate without the domain check. Used by finite-difference oracles whose
    /// stencils may step just outside the domain.
    pub fn eval_raw(&self, x: f64, y: f64, order: u8) -> Vec<Jet> {
        match &self.source {
            Source::Formula(f) => f(&Jet::var_x(x, order), &Jet::var_y(y, order)),
            Source::Point(rule) => rule(x, y, order),
        }
    }

    fn check_domain(&self, x: f64, y: f64) -> Result<()> {
        let d = &self.domain;
        let x_ok = self.periodic[0] || (d.x0..=d.x1).contains(&x);
        let y_ok = self.periodic[1] || (d.y0..=d.y1).contains(&y);
        if x_ok && y_ok && x.is_finite() && y.is_finite() {
            Ok(())
        } else {
            Err(HslError::OutOfDomain { x, y })
        }
    }
}

/// Value and all partials up to `order` of every lift component at (x, y).
pub fn eval_jet(map: &ImmersionMap, x: f64, y: f64, order: u8) -> Result<Vec<Jet>> {
    if order > map.max_order {
        return Err(HslError::Unsupported(format!(
            "jet order {order} (this map supports up to {})",
            map.max_order
        )));
    }
    map.check_domain(x, y)?;
    Ok(map.eval_raw(x, y, order))
}

/// 1-D central stencils (offsets in units of h, weights) for derivatives 0..=3.
fn central_stencil(k: usize) -> &'static [(f64, f64)] {
    match k {
        0 => &[(0.0, 1.0)],
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        _ => unreachable!(),
    }
}

fn central_difference(map: &ImmersionMap, x: f64, y: f64, i: usize, j: usize, h: f64) -> Vec<Complex64> {
    let dim = map.ambient.lift_dim();
    let mut acc = vec![ZERO; dim];
    for &(ox, wx) in central_stencil(i) {
        for &(oy, wy) in central_stencil(j) {
            let vals = map.eval_raw(x + ox * h, y + oy * h, 0);
            for (a, v) in acc.iter_mut().zip(vals) {
                *a += v.value() * (wx * wy);
            }
        }
    }
    let norm = h.powi((i + j) as i32);
    acc.into_iter().map(|a| a / norm).collect()
}

/// Max deviation between jet partials of degree 1..=`order` and central finite
/// differences, Richardson-extrapolated from steps h and h/2.
pub fn fd_crosscheck(map: &ImmersionMap, x: f64, y: f64, order: u8, h: f64) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&h) {
        return Err(HslError::bad_parameter(
            "1e-6 ≤ h ≤ 1e-2",
            format!("finite-difference step {h} out of range"),
        ));
    }
    let jets = eval_jet(map, x, y, order)?;
    let mut worst: f64 = 0.0;
    for &(i, j) in MONOMIALS.iter().take(len_for(order)).skip(1) {
        let coarse = central_difference(map, x, y, i, j, h);
        let fine = central_difference(map, x, y, i, j, h / 2.0);
        for (k, jet) in jets.iter().enumerate() {
            let extrapolated = (fine[k] * 4.0 - coarse[k]) / 3.0;
            worst = worst.max((jet.partial(i, j) - extrapolated).norm());
        }
    }
    Ok(worst)
}
