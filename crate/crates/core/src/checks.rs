//! Named pass/fail checks over a sample grid.
//!
//! Every check reduces a nodal field to a sup-residual in grid index order, so the
//! reported value and its location are reproducible run to run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogEntry, Params};
use crate::error::{HslError, Result};
use crate::jets::Rect;
use crate::surface::{bochner_residuals, GeometryField, Grid, PointGeometry, MIN_INTERIOR};

/// Smallest grid accepted by [`run_checks`]: the Laplacian needs a two-node margin.
pub const MIN_GRID: usize = MIN_INTERIOR + 4;

/// Checks built from third derivatives through the Christoffel symbols (∇A, the
/// two curvature routes) carry this factor on top of the algebraic tolerance.
pub const THIRD_ORDER_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Strict,
    Default,
    Sweep,
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileName::Strict => "strict",
            ProfileName::Default => "default",
            ProfileName::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    pub name: ProfileName,
    /// Pointwise identities evaluated exactly from jets.
    pub algebraic_tol: f64,
    /// Quantities that go through grid finite differences.
    pub fd_tol: f64,
    /// Sphere / quadric constraint of lifts.
    pub constraint_tol: f64,
}

impl ToleranceProfile {
    pub const STRICT: ToleranceProfile = ToleranceProfile {
        name: ProfileName::Strict,
        algebraic_tol: 1e-10,
        fd_tol: 1e-6,
        constraint_tol: 1e-12,
    };
    pub const DEFAULT: ToleranceProfile = ToleranceProfile {
        name: ProfileName::Default,
        algebraic_tol: 1e-8,
        fd_tol: 1e-5,
        constraint_tol: 1e-10,
    };
    pub const SWEEP: ToleranceProfile = ToleranceProfile {
        name: ProfileName::Sweep,
        algebraic_tol: 1e-6,
        fd_tol: 1e-4,
        constraint_tol: 1e-8,
    };

    pub fn named(name: ProfileName) -> Self {
        match name {
            ProfileName::Strict => Self::STRICT,
            ProfileName::Default => Self::DEFAULT,
            ProfileName::Sweep => Self::SWEEP,
        }
    }
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl FromStr for ToleranceProfile {
    type Err = HslError;

    fn from_str(s: &str) -> Result<Self> {
        let name = match s.trim().to_ascii_lowercase().as_str() {
            "strict" => ProfileName::Strict,
            "default" => ProfileName::Default,
            "sweep" => ProfileName::Sweep,
            other => {
                return Err(HslError::bad_parameter(
                    "profile ∈ {strict, default, sweep}",
                    format!("unknown tolerance profile '{other}'"),
                ))
            }
        };
        Ok(Self::named(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Largest residual over the samples. Signed for the one-sided `wintgen` check.
    pub sup_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Parameter point where the residual is attained, when it is a nodal maximum.
    pub argmax_point: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub entry: String,
    pub params: Params,
    pub grid: GridSpec,
    pub profile: ProfileName,
    pub checks: Vec<CheckResult>,
    pub overall_pass: bool,
    /// Filled in only when timing is requested, so reports stay reproducible.
    pub wall_ms: Option<u64>,
    pub seed: Option<u64>,
}

impl CheckReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Largest |value| and the first node attaining it.
fn sup_abs<'a>(
    points: &'a [PointGeometry],
    values: impl Iterator<Item = Option<f64>> + 'a,
) -> (f64, Option<[f64; 2]>) {
    sup_signed(points, values.map(|v| v.map(f64::abs)))
}

/// Largest value (NaN counting as +∞) and the first node attaining it.
fn sup_signed<'a>(
    points: &'a [PointGeometry],
    values: impl Iterator<Item = Option<f64>> + 'a,
) -> (f64, Option<[f64; 2]>) {
    let mut best: Option<(f64, [f64; 2])> = None;
    for (p, v) in points.iter().zip(values) {
        let Some(v) = v else { continue };
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, [p.x, p.y]));
        }
    }
    match best {
        Some((v, at)) => (v, Some(at)),
        None => (0.0, None),
    }
}

fn stddev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

struct Collector {
    checks: Vec<CheckResult>,
}

impl Collector {
    fn push(&mut self, name: &str, (sup, at): (f64, Option<[f64; 2]>), tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            sup_residual: sup,
            tolerance,
            pass: sup < tolerance,
            argmax_point: at,
        });
    }
}

/// Evaluate the geometry of `entry` on an nx × ny grid (over `domain`, or the
/// entry's default window) and run every check.
pub fn run_checks(
    entry: &CatalogEntry,
    nx: usize,
    ny: usize,
    domain: Option<Rect>,
    profile: &ToleranceProfile,
) -> Result<CheckReport> {
    if nx < MIN_GRID || ny < MIN_GRID {
        return Err(HslError::GridTooCoarse {
            nx,
            ny,
            min: MIN_GRID,
        });
    }
    let domain = domain.unwrap_or_else(|| entry.default_domain());
    let grid = Grid::new(nx, ny, domain)?;
    let field = GeometryField::compute(&entry.immersion, grid)?;
    checks_on_field(entry, &field, profile)
}

/// The check suite on an already computed field.
pub fn checks_on_field(
    entry: &CatalogEntry,
    field: &GeometryField,
    profile: &ToleranceProfile,
) -> Result<CheckReport> {
    let pts = &field.points;
    let alg = profile.algebraic_tol;
    let third = alg * THIRD_ORDER_FACTOR;
    let c = entry.ambient.c();
    let mut out = Collector { checks: Vec::new() };
    let each = |f: fn(&PointGeometry) -> f64| pts.iter().map(move |p| Some(f(p)));

    out.push(
        "lift_constraint",
        sup_abs(pts, each(|p| p.residuals.constraint)),
        profile.constraint_tol,
    );
    out.push(
        "horizontality",
        sup_abs(pts, each(|p| p.residuals.horizontality)),
        alg,
    );
    out.push("lagrangian", sup_abs(pts, each(|p| p.residuals.lagrangian)), alg);
    out.push(
        "cubic_symmetry",
        sup_abs(pts, each(|p| p.residuals.cubic_asymmetry)),
        alg,
    );
    out.push(
        "frame_consistency",
        sup_abs(
            pts,
            each(|p| p.residuals.trace_mismatch.max(p.residuals.projection_mismatch)),
        ),
        alg,
    );
    out.push(
        "hamiltonian_stationary",
        sup_abs(pts, each(|p| p.delta_alpha)),
        alg,
    );
    out.push("maslov_closed", sup_abs(pts, each(|p| p.d_alpha)), alg);
    out.push(
        "parallel_h",
        sup_abs(pts, each(|p| p.normal.nabla_perp_h_norm)),
        alg,
    );
    let abs_h: Vec<f64> = pts.iter().map(PointGeometry::abs_h).collect();
    out.push("constant_h", (stddev(&abs_h), None), alg);
    out.push("parallel_a", sup_abs(pts, each(|p| p.normal.nabla_a_norm)), third);
    out.push(
        "gauss_equation",
        sup_abs(pts, each(|p| p.k_intrinsic - p.k_gauss)),
        third,
    );
    // Ric = K g on a surface, so Ric(JH, ·) = K α_H.
    out.push(
        "ricci_jh",
        sup_abs(
            pts,
            each(|p| p.k_intrinsic * p.maslov.alpha[0].hypot(p.maslov.alpha[1])),
        ),
        alg,
    );
    let k: Vec<f64> = pts.iter().map(|p| p.k_intrinsic).collect();
    let grad_k = field.gradient(&k);
    // JH = -c^l ∂ₗ
    out.push(
        "dk_jh",
        sup_abs(
            pts,
            pts.iter().zip(&grad_k).map(|(p, dk)| {
                let cc = p.mean.components;
                Some(cc[0] * dk[0] + cc[1] * dk[1])
            }),
        ),
        profile.fd_tol,
    );
    out.push(
        "wintgen",
        sup_signed(
            pts,
            pts.iter()
                .map(|p| Some(p.k_intrinsic + p.normal.rho_n - c - p.abs_h_sq() / 4.0)),
        ),
        alg,
    );
    let bochner = bochner_residuals(field)?;
    out.push(
        "bochner",
        sup_abs(pts, bochner.stationary.iter().copied()),
        profile.fd_tol,
    );
    let sup_k = sup_abs(pts, each(|p| p.k_intrinsic)).0;
    let sup_h = abs_h.iter().copied().fold(0.0, f64::max);
    out.push("flat_or_minimal", (sup_k.min(sup_h), None), alg);

    let expected = entry.expected;
    if expected.flat {
        out.push("flat", sup_abs(pts, each(|p| p.k_intrinsic)), third);
    }
    if expected.minimal {
        out.push("minimal", sup_abs(pts, each(PointGeometry::abs_h)), alg);
    }
    if let Some(h0) = expected.closed_form_h {
        out.push(
            "closed_form_h",
            sup_abs(pts, abs_h.iter().map(|h| Some(h - h0))),
            alg,
        );
    }

    let overall_pass = out.checks.iter().all(|c| c.pass);
    Ok(CheckReport {
        entry: entry.id.clone(),
        params: entry.params.clone(),
        grid: GridSpec {
            nx: field.grid.nx,
            ny: field.grid.ny,
            domain: field.grid.domain,
        },
        profile: profile.name,
        checks: out.checks,
        overall_pass,
        wall_ms: None,
        seed: None,
    })
}

/// |∫ K dA| over one fundamental domain of a doubly periodic entry, by the
/// periodic trapezoidal rule on an n × n grid.
pub fn gauss_bonnet_flat(entry: &CatalogEntry, n: usize) -> Result<f64> {
    if entry.periodic() != [true, true] {
        return Err(HslError::Unsupported(format!(
            "Gauss–Bonnet quadrature needs a doubly periodic entry; {} is not",
            entry.id
        )));
    }
    if n < 2 {
        return Err(HslError::GridTooCoarse { nx: n, ny: n, min: 2 });
    }
    let d = entry.default_domain();
    let (hx, hy) = (d.width() / n as f64, d.height() / n as f64);
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            let p =
                crate::surface::point_geometry(&entry.immersion, d.x0 + i as f64 * hx, d.y0 + j as f64 * hy)?;
            total += p.k_intrinsic * p.metric.det().sqrt();
        }
    }
    Ok((total * hx * hy).abs())
}

/// f(r)^p Vol(B_r) / (r² log r) for each sampled radius.
pub fn growth_ratio(f_values: &[f64], vol_values: &[f64], p: f64, r_list: &[f64]) -> Result<Vec<f64>> {
    if f_values.len() != r_list.len() || vol_values.len() != r_list.len() {
        return Err(HslError::ContractViolation(format!(
            "growth_ratio needs one f and one volume per radius (got {}, {}, {})",
            f_values.len(),
            vol_values.len(),
            r_list.len()
        )));
    }
    if !(p > 2.0) {
        return Err(HslError::bad_parameter("p > 2", format!("exponent p = {p}")));
    }
    if let Some(r) = r_list.iter().find(|r| !(**r > 1.0)) {
        return Err(HslError::bad_parameter(
            "r > 1",
            format!("radius {r} gives log r ≤ 0"),
        ));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HslError::bad_parameter(
            "r increasing",
            "radii must be strictly increasing",
        ));
    }
    Ok(r_list
        .iter()
        .zip(f_values.iter().zip(vol_values))
        .map(|(r, (f, v))| f.powf(p) * v / (r * r * r.ln()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_c2, build_ch2_family, build_cp2_flat, C2Kind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn profiles_are_ordered() {
        let (s, d, w) = (
            ToleranceProfile::STRICT,
            ToleranceProfile::DEFAULT,
            ToleranceProfile::SWEEP,
        );
        assert!(s.algebraic_tol <= d.algebraic_tol && d.algebraic_tol <= w.algebraic_tol);
        assert!(s.fd_tol <= d.fd_tol && d.fd_tol <= w.fd_tol);
        assert!(s.constraint_tol <= d.constraint_tol && d.constraint_tol <= w.constraint_tol);
        assert_eq!("Sweep".parse::<ToleranceProfile>().unwrap(), w);
        assert!("loose".parse::<ToleranceProfile>().is_err());
    }

    #[test]
    fn plane_passes_everything() {
        let e = build_c2(C2Kind::Plane).unwrap();
        let r = run_checks(&e, 21, 21, None, &ToleranceProfile::DEFAULT).unwrap();
        assert!(r.overall_pass, "{:?}", r.failed().collect::<Vec<_>>());
        assert!(r.check("minimal").unwrap().sup_residual < 1e-12);
    }

    #[test]
    fn cp2_flat_member() {
        let e = build_cp2_flat(1.0, 0.0).unwrap();
        let r = run_checks(&e, 41, 41, None, &ToleranceProfile::DEFAULT).unwrap();
        assert!(r.overall_pass, "{:?}", r.failed().collect::<Vec<_>>());
        assert!(r.check("flat").unwrap().sup_residual < 1e-6);
        assert!(r.check("parallel_a").unwrap().sup_residual < 1e-6);
        let h_sq = {
            let f =
                GeometryField::compute(&e.immersion, Grid::new(3, 3, e.default_domain()).unwrap()).unwrap();
            f.points[4].abs_h_sq()
        };
        assert!(r.check("wintgen").unwrap().sup_residual <= -h_sq / 4.0 + 1e-8);
    }

    #[test]
    fn ch2_family3_member() {
        let e = build_ch2_family(3, 0.9, 0.9).unwrap();
        let r = run_checks(&e, 41, 41, None, &ToleranceProfile::DEFAULT).unwrap();
        assert!(r.overall_pass, "{:?}", r.failed().collect::<Vec<_>>());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let e = build_c2(C2Kind::Plane).unwrap();
        assert!(matches!(
            run_checks(&e, 3, 3, None, &ToleranceProfile::DEFAULT),
            Err(HslError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn gauss_bonnet_on_tori() {
        for (r1, r2) in [(1.0, 1.0), (1.0, 3.0)] {
            let e = build_c2(C2Kind::Torus { r1, r2 }).unwrap();
            assert!(gauss_bonnet_flat(&e, 32).unwrap() < 1e-10);
        }
        let cyl = build_c2(C2Kind::Cylinder { r: 1.0 }).unwrap();
        assert!(matches!(
            gauss_bonnet_flat(&cyl, 32),
            Err(HslError::Unsupported(_))
        ));
    }

    #[test]
    fn growth_ratio_formula() {
        let r = growth_ratio(&[1.0], &[PI * E * E], 3.0, &[E]).unwrap();
        assert_abs_diff_eq!(r[0], PI, epsilon = 1e-14);
        let zero = growth_ratio(&[0.0, 0.0], &[1.0, 5.0], 3.0, &[2.0, 4.0]).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
        let rs = [10.0, 100.0, 1000.0, 10000.0];
        let vols: Vec<f64> = rs.iter().map(|r: &f64| r.powi(3)).collect();
        let g = growth_ratio(&[1.0; 4], &vols, 3.0, &rs).unwrap();
        assert!(g.windows(2).all(|w| w[1] > 2.0 * w[0]));
        for (i, r) in rs.iter().enumerate() {
            assert_abs_diff_eq!(g[i], r / r.ln(), epsilon = 1e-9 * r);
        }
        assert!(matches!(
            growth_ratio(&[1.0], &[1.0], 3.0, &[1.0]),
            Err(HslError::BadParameter { .. })
        ));
        assert!(growth_ratio(&[1.0], &[1.0], 2.0, &[3.0]).is_err());
    }
}
