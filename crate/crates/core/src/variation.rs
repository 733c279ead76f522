//! First variation of area under compactly supported Hamiltonian deformations
//! of surfaces in C².
//!
//! The deformation field of a Hamiltonian f is V = J∇f. Stationarity is then
//! certified directly from the area functional, independently of the curvature
//! machinery in [`crate::surface`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientKind, I};
use crate::error::{HslError, Result};
use crate::jets::{eval_jet, pair, ImmersionMap, Jet, Rect};

pub const DEFAULT_QUADRATURE_ORDER: usize = 8;
pub const DEFAULT_CELLS: usize = 20;
pub const DEFAULT_STEP: f64 = 1e-3;

/// s·exp(-1/(1 - t²)) with t = |p - p₀|/ρ inside the disc, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpFunction {
    pub fn new(center: [f64; 2], radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(HslError::bad_parameter("ρ > 0", format!("bump radius {radius}")));
        }
        if !amplitude.is_finite() || !center.iter().all(|c| c.is_finite()) {
            return Err(HslError::bad_parameter(
                "finite bump",
                "bump center and amplitude must be finite",
            ));
        }
        Ok(BumpFunction {
            center,
            radius,
            amplitude,
        })
    }

    /// Bounding box of the support.
    pub fn support(&self) -> Rect {
        let [x, y] = self.center;
        let r = self.radius;
        Rect::new(x - r, x + r, y - r, y + r)
    }

    pub fn same_with_amplitude(&self, amplitude: f64) -> Self {
        BumpFunction { amplitude, ..*self }
    }

    /// Jet of the bump at (x, y) up to `order`.
    pub fn jet(&self, x: f64, y: f64, order: u8) -> Jet {
        let dx = Jet::var_x(x - self.center[0], order);
        let dy = Jet::var_y(y - self.center[1], order);
        let q = (dx * dx + dy * dy) * (1.0 / (self.radius * self.radius));
        if q.value().re >= 1.0 {
            // flat to all orders at the edge of the support
            return Jet::real(0.0, order);
        }
        let inside = (-q + 1.0).recip();
        (-inside).exp() * self.amplitude
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y, 0).value().re
    }
}

fn require_flat(map: &ImmersionMap) -> Result<()> {
    if map.ambient().kind() != AmbientKind::FlatC2 {
        return Err(HslError::Unsupported(format!(
            "Hamiltonian deformations are implemented in flat C² only, not {}",
            map.ambient()
        )));
    }
    Ok(())
}

fn require_support_inside(map: &ImmersionMap, f: &BumpFunction) -> Result<()> {
    let s = f.support();
    let d = map.domain();
    let x_ok = map.periodic()[0] || (s.x0 > d.x0 && s.x1 < d.x1);
    let y_ok = map.periodic()[1] || (s.y0 > d.y0 && s.y1 < d.y1);
    if x_ok && y_ok {
        Ok(())
    } else {
        Err(HslError::bad_parameter(
            "support(f) ⊂ interior(domain)",
            format!("bump support {s} leaves the domain {d}"),
        ))
    }
}

/// F_t = F + t·J dF(∇f), with ∇f the gradient of f in the induced metric.
/// The deformed map supports one jet order less than `map`.
pub fn hamiltonian_deform(map: &ImmersionMap, f: &BumpFunction, t: f64) -> Result<ImmersionMap> {
    require_flat(map)?;
    require_support_inside(map, f)?;
    if t == 0.0 {
        return Ok(map.clone());
    }
    let base = map.clone();
    let bump = *f;
    let max_order = map.max_order().saturating_sub(1);
    let weights = map.ambient().signature().weights();
    Ok(ImmersionMap::from_point_rule(
        map.ambient(),
        map.domain(),
        map.periodic(),
        max_order,
        move |x, y, order| {
            let up = order + 1;
            let pos = base.eval_raw(x, y, up);
            let d: [Vec<Jet>; 2] = [
                pos.iter().map(|c| c.deriv(0)).collect(),
                pos.iter().map(|c| c.deriv(1)).collect(),
            ];
            let fj = bump.jet(x, y, up);
            let df = [fj.deriv(0), fj.deriv(1)];
            let g11 = pair(&d[0], &d[0], weights).re();
            let g12 = pair(&d[0], &d[1], weights).re();
            let g22 = pair(&d[1], &d[1], weights).re();
            let inv_det = (g11 * g22 - g12 * g12).recip();
            // gradient components ∇f = v^i ∂ᵢ
            let v1 = (g22 * df[0] - g12 * df[1]) * inv_det;
            let v2 = (g11 * df[1] - g12 * df[0]) * inv_det;
            pos.iter()
                .zip(d[0].iter().zip(&d[1]))
                .map(|(p, (a, b))| p.truncate(order) + (*a * v1 + *b * v2).scale(I * t))
                .collect()
        },
    ))
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature order must be positive");
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// ∫∫ √det g dx dy over `region`, with an order-`order` Gauss–Legendre rule on each
/// of `cells` × `cells` sub-rectangles.
pub fn area_with_cells(map: &ImmersionMap, region: &Rect, order: usize, cells: usize) -> Result<f64> {
    if cells == 0 {
        return Err(HslError::bad_parameter("cells ≥ 1", "empty quadrature partition"));
    }
    let rule = gauss_legendre(order);
    let weights = map.ambient().signature().weights();
    let (hx, hy) = (region.width() / cells as f64, region.height() / cells as f64);
    let per_cell: Vec<Result<f64>> = (0..cells * cells)
        .into_par_iter()
        .map(|c| {
            let (ci, cj) = (c % cells, c / cells);
            let (x0, y0) = (region.x0 + ci as f64 * hx, region.y0 + cj as f64 * hy);
            let mut terms = Vec::with_capacity(rule.len() * rule.len());
            for &(u, wu) in &rule {
                for &(v, wv) in &rule {
                    let x = x0 + 0.5 * hx * (u + 1.0);
                    let y = y0 + 0.5 * hy * (v + 1.0);
                    let jets = eval_jet(map, x, y, 1)?;
                    let d0: Vec<Jet> = jets.iter().map(|c| c.deriv(0)).collect();
                    let d1: Vec<Jet> = jets.iter().map(|c| c.deriv(1)).collect();
                    let g11 = pair(&d0, &d0, weights).value().re;
                    let g12 = pair(&d0, &d1, weights).value().re;
                    let g22 = pair(&d1, &d1, weights).value().re;
                    terms.push(wu * wv * (g11 * g22 - g12 * g12).max(0.0).sqrt());
                }
            }
            Ok(pairwise_sum(&terms) * 0.25 * hx * hy)
        })
        .collect();
    let per_cell = per_cell.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&per_cell))
}

pub fn area(map: &ImmersionMap, region: &Rect, order: usize) -> Result<f64> {
    area_with_cells(map, region, order, DEFAULT_CELLS)
}

/// Quadrature settings for [`first_variation_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSettings {
    pub order: usize,
    pub cells: usize,
}

impl Default for VariationSettings {
    fn default() -> Self {
        VariationSettings {
            order: DEFAULT_QUADRATURE_ORDER,
            cells: DEFAULT_CELLS,
        }
    }
}

/// d/dt area(F_t) at t = 0 by central differences at h and h/2, Richardson-combined.
pub fn first_variation(map: &ImmersionMap, f: &BumpFunction, h: f64) -> Result<f64> {
    first_variation_with(map, f, h, VariationSettings::default())
}

pub fn first_variation_with(
    map: &ImmersionMap,
    f: &BumpFunction,
    h: f64,
    settings: VariationSettings,
) -> Result<f64> {
    if !(1e-5..=1e-2).contains(&h) {
        return Err(HslError::bad_parameter(
            "1e-5 ≤ h ≤ 1e-2",
            format!("variation step {h} out of range"),
        ));
    }
    let region = f.support();
    let central = |step: f64| -> Result<f64> {
        let plus = area_with_cells(
            &hamiltonian_deform(map, f, step)?,
            &region,
            settings.order,
            settings.cells,
        )?;
        let minus = area_with_cells(
            &hamiltonian_deform(map, f, -step)?,
            &region,
            settings.order,
            settings.cells,
        )?;
        Ok((plus - minus) / (2.0 * step))
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `n` reproducible bumps inside `domain`: radius between 15% and 30% of the
/// shorter side, amplitude in [0.5, 1].
pub fn seeded_bumps(domain: &Rect, n: usize, seed: u64) -> Vec<BumpFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = domain.width().min(domain.height());
    (0..n)
        .map(|_| {
            let radius = side * rng.gen_range(0.15..0.30);
            let margin = radius * 1.05;
            let x = rng.gen_range(domain.x0 + margin..domain.x1 - margin);
            let y = rng.gen_range(domain.y0 + margin..domain.y1 - margin);
            BumpFunction {
                center: [x, y],
                radius,
                amplitude: rng.gen_range(0.5..=1.0),
            }
        })
        .collect()
}

/// Per-bump first variations of one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub entry: String,
    pub seed: u64,
    pub bumps: Vec<BumpFunction>,
    pub first_variation: Vec<f64>,
    pub max_abs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Pass threshold for |first variation| of a stationary surface.
pub const VARIATION_TOL: f64 = 1e-6;

pub fn variation_report(
    entry: &str,
    map: &ImmersionMap,
    n: usize,
    seed: u64,
    settings: VariationSettings,
) -> Result<VariationReport> {
    require_flat(map)?;
    let bumps = seeded_bumps(&map.domain(), n, seed);
    let values = bumps
        .iter()
        .map(|b| first_variation_with(map, b, DEFAULT_STEP, settings))
        .collect::<Result<Vec<_>>>()?;
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(VariationReport {
        entry: entry.into(),
        seed,
        bumps,
        first_variation: values,
        max_abs,
        tolerance: VARIATION_TOL,
        pass: max_abs < VARIATION_TOL,
    })
}
