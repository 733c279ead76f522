//! Pointwise geometry of an immersed Lagrangian surface.
//!
//! Everything is computed from the order-3 jets of the lift L at a sample point.
//! The normal bundle is spanned by the J-image {i∂₁L, i∂₂L} of the coordinate
//! tangent frame, so normal quantities are stored as lower-index components
//! against that frame:
//!
//! * `h[i][j][k] = g(A(∂ᵢ, ∂ⱼ), J∂ₖ)`, the cubic form;
//! * `H = Tr_g A` (no 1/n factor) with `η_k = g(H, J∂ₖ) = g^{ij} h[i][j][k]`;
//! * `α_H(∂ⱼ) = g(JH, ∂ⱼ) = -η_j`.
//!
//! Sign conventions: δα = -g^{ij}(∂ᵢαⱼ - Γᵏᵢⱼ αₖ), dα = ∂ₓα_y - ∂ᵧα_x, and
//! R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_{[X,Y]}Z with K = g(R(∂ₓ,∂ᵧ)∂ᵧ, ∂ₓ)/det g.
//! Checks compare magnitudes, so only dα depends on the orientation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientSpace, FrameBlock, HermitianVector, LiftFrame, I};
use crate::error::{HslError, Result};
use crate::jets::{eval_jet, pair, ImmersionMap, Jet, Rect};

type Mat2 = [[f64; 2]; 2];
type Cubic = [[[f64; 2]; 2]; 2];

#[inline]
fn val(j: &Jet) -> f64 {
    j.value().re
}

fn scale_vec(v: &[Jet], s: Complex64) -> Vec<Jet> {
    v.iter().map(|c| c.scale(s)).collect()
}

fn add_vec(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(x, y)| *x + *y).collect()
}

fn mul_vec(v: &[Jet], s: &Jet) -> Vec<Jet> {
    v.iter().map(|c| *c * *s).collect()
}

fn deriv_vec(v: &[Jet], axis: usize) -> Vec<Jet> {
    v.iter().map(|c| c.deriv(axis)).collect()
}

/// Jets of the lift and its coordinate partials at one parameter point.
#[derive(Debug, Clone)]
pub struct SurfaceJets {
    pub ambient: AmbientSpace,
    pub x: f64,
    pub y: f64,
    /// L, order 3.
    pub position: Vec<Jet>,
    /// ∂ᵢL, order 2.
    pub tangents: [Vec<Jet>; 2],
    /// ∂ᵢ∂ⱼL, order 1.
    pub second: [[Vec<Jet>; 2]; 2],
}

impl SurfaceJets {
    pub fn at(map: &ImmersionMap, x: f64, y: f64) -> Result<Self> {
        let position = eval_jet(map, x, y, 3)?;
        let tangents = [deriv_vec(&position, 0), deriv_vec(&position, 1)];
        let second = [
            [deriv_vec(&tangents[0], 0), deriv_vec(&tangents[0], 1)],
            [deriv_vec(&tangents[1], 0), deriv_vec(&tangents[1], 1)],
        ];
        Ok(SurfaceJets {
            ambient: map.ambient(),
            x,
            y,
            position,
            tangents,
            second,
        })
    }

    fn weights(&self) -> &'static [f64] {
        self.ambient.signature().weights()
    }

    fn vector(&self, v: &[Jet]) -> HermitianVector {
        HermitianVector::new(v.iter().map(Jet::value).collect(), self.ambient.signature())
            .expect("lift dimension matches ambient")
    }

    /// Frame splitting at this point. The lift constraint is only enforced when
    /// `constraint_tol` is given.
    pub fn frame(&self, constraint_tol: Option<f64>) -> Result<LiftFrame> {
        let tangents = [self.vector(&self.tangents[0]), self.vector(&self.tangents[1])];
        let frame = match self.ambient.lift_norm() {
            None => LiftFrame::flat(tangents),
            Some(norm) => LiftFrame::new(
                &self.vector(&self.position),
                tangents,
                norm,
                constraint_tol.unwrap_or(f64::INFINITY),
            ),
        };
        frame.map_err(|e| match e {
            HslError::DegenerateImmersion { det, .. } => HslError::DegenerateImmersion {
                x: self.x,
                y: self.y,
                det,
            },
            other => other,
        })
    }
}

/// Value of the induced metric at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Metric2 {
    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn matrix(&self) -> Mat2 {
        [[self.g11, self.g12], [self.g12, self.g22]]
    }

    pub fn inverse(&self) -> Mat2 {
        let d = self.det();
        [[self.g22 / d, -self.g12 / d], [-self.g12 / d, self.g11 / d]]
    }
}

/// Induced metric as order-2 jets, carrying its first and second partials.
#[derive(Debug, Clone)]
pub struct MetricJet {
    g: [[Jet; 2]; 2],
}

impl MetricJet {
    /// Metric from component jets (g₁₁, g₁₂, g₂₂) of order at least 2.
    pub fn from_components(g11: Jet, g12: Jet, g22: Jet) -> Self {
        MetricJet {
            g: [[g11, g12], [g12, g22]],
        }
    }

    pub fn value(&self) -> Metric2 {
        Metric2 {
            g11: val(&self.g[0][0]),
            g12: val(&self.g[0][1]),
            g22: val(&self.g[1][1]),
        }
    }

    fn det(&self) -> Jet {
        self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[0][1]
    }

    fn inverse(&self) -> [[Jet; 2]; 2] {
        let inv_det = self.det().recip();
        [
            [self.g[1][1] * inv_det, -self.g[0][1] * inv_det],
            [-self.g[0][1] * inv_det, self.g[0][0] * inv_det],
        ]
    }

    /// Levi-Civita symbols Γᵏᵢⱼ (as `gamma[k][i][j]`) from the metric partials.
    fn christoffel(&self) -> [[[Jet; 2]; 2]; 2] {
        let ginv = self.inverse();
        let dg = |a: usize, b: usize, k: usize| self.g[a][b].deriv(k);
        let first = |i: usize, j: usize, l: usize| (dg(j, l, i) + dg(i, l, j) - dg(i, j, l)) * 0.5;
        let mut out = [[[Jet::real(0.0, 1); 2]; 2]; 2];
        for (k, out_k) in out.iter_mut().enumerate() {
            for (i, row) in out_k.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry = ginv[k][0] * first(i, j, 0) + ginv[k][1] * first(i, j, 1);
                }
            }
        }
        out
    }
}

fn values3(j: &[[[Jet; 2]; 2]; 2]) -> Cubic {
    let mut out = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                out[a][b][c] = val(&j[a][b][c]);
            }
        }
    }
    out
}

/// g(R(∂ₓ,∂ᵧ)Z_k, ·) components for a connection with coefficients `conn[l][i][k]`,
/// returned as `r[l][k]` with R(∂ₓ,∂ᵧ)Z_k = r[l][k] Z_l.
fn curvature_01(conn: &[[[Jet; 2]; 2]; 2]) -> Mat2 {
    let mut r = [[0.0; 2]; 2];
    for l in 0..2 {
        for k in 0..2 {
            let mut acc = conn[l][1][k].deriv(0).value().re - conn[l][0][k].deriv(1).value().re;
            for m in 0..2 {
                acc += val(&conn[m][1][k]) * val(&conn[l][0][m]) - val(&conn[m][0][k]) * val(&conn[l][1][m]);
            }
            r[l][k] = acc;
        }
    }
    r
}

/// Intrinsic Gaussian curvature of a metric given with its second partials.
pub fn gaussian_curvature_intrinsic(metric: &MetricJet) -> f64 {
    let gamma = metric.christoffel();
    let r = curvature_01(&gamma);
    let g = metric.value();
    (g.g11 * r[0][1] + g.g12 * r[1][1]) / g.det()
}

/// Pullback metric g_ij = Re herm(∂ᵢL, ∂ⱼL) as order-2 jets.
pub fn first_fundamental_form(jets: &SurfaceJets) -> Result<MetricJet> {
    let w = jets.weights();
    let t = &jets.tangents;
    let metric = MetricJet::from_components(
        pair(&t[0], &t[0], w).re(),
        pair(&t[0], &t[1], w).re(),
        pair(&t[1], &t[1], w).re(),
    );
    let g = metric.value();
    let scale = (g.g11.abs() + g.g22.abs()).max(1.0);
    if !(g.det() > crate::ambient::DEGENERATE_TOL * scale * scale) || g.g11 <= 0.0 {
        return Err(HslError::DegenerateImmersion {
            x: jets.x,
            y: jets.y,
            det: g.det(),
        });
    }
    Ok(metric)
}

/// Cubic coefficients h_ijk = g(A(∂ᵢ,∂ⱼ), J∂ₖ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeTensor {
    pub h: Cubic,
}

impl ShapeTensor {
    /// max |h_ijk - h_ikj|; zero for Lagrangian immersions.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    worst = worst.max((self.h[i][j][k] - self.h[i][k][j]).abs());
                }
            }
        }
        worst
    }
}

/// Second fundamental form A(∂ᵢ,∂ⱼ) as the normal projection of ∂ᵢ∂ⱼL, returned both
/// as ambient vectors and as cubic coefficients in the J-frame.
pub fn second_fundamental_form(
    jets: &SurfaceJets,
    frame: &LiftFrame,
) -> ([[HermitianVector; 2]; 2], ShapeTensor) {
    let normals = frame.normals();
    let a = |i: usize, j: usize| frame.project(FrameBlock::Normal, &jets.vector(&jets.second[i][j]));
    let vectors = [[a(0, 0), a(0, 1)], [a(1, 0), a(1, 1)]];
    let mut h = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                h[i][j][k] = crate::ambient::herm(&vectors[i][j], &normals[k])
                    .expect("shared signature")
                    .re;
            }
        }
    }
    (vectors, ShapeTensor { h })
}

/// Mean curvature vector H = Tr_g A in J-frame components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvature {
    /// η_k = g(H, J∂ₖ).
    pub lowered: [f64; 2],
    /// c^l with H = c^l J∂ₗ (equivalently JH = -c^l ∂ₗ).
    pub components: [f64; 2],
    pub norm: f64,
}

pub fn mean_curvature(metric: &Metric2, shape: &ShapeTensor) -> MeanCurvature {
    let gi = metric.inverse();
    let mut eta = [0.0; 2];
    for (k, e) in eta.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                *e += gi[i][j] * shape.h[i][j][k];
            }
        }
    }
    let c = [
        gi[0][0] * eta[0] + gi[0][1] * eta[1],
        gi[1][0] * eta[0] + gi[1][1] * eta[1],
    ];
    let norm_sq = eta[0] * c[0] + eta[1] * c[1];
    MeanCurvature {
        lowered: eta,
        components: c,
        norm: norm_sq.max(0.0).sqrt(),
    }
}

/// α_H and the Maslov form μ = α_H / π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaslovForm {
    pub alpha: [f64; 2],
    pub mu: [f64; 2],
}

/// α_j = ω(H, ∂ⱼL) = Re herm(iH, ∂ⱼL) with H assembled in the lift space.
pub fn maslov_form(mean: &MeanCurvature, frame: &LiftFrame) -> MaslovForm {
    let n = frame.normals();
    let h = &(&n[0] * mean.components[0]) + &(&n[1] * mean.components[1]);
    let alpha =
        [0, 1].map(|j| crate::ambient::symplectic_form(&h, &frame.tangents()[j]).expect("shared signature"));
    MaslovForm {
        alpha,
        mu: alpha.map(|a| a / std::f64::consts::PI),
    }
}

/// K = c + (⟨A₁₁,A₂₂⟩ - |A₁₂|²)/det g.
pub fn gaussian_curvature_gauss_equation(metric: &Metric2, shape: &ShapeTensor, c: f64) -> f64 {
    let gi = metric.inverse();
    let h = &shape.h;
    let mut ext = 0.0;
    for m in 0..2 {
        for n in 0..2 {
            ext += gi[m][n] * (h[0][0][m] * h[1][1][n] - h[0][1][m] * h[0][1][n]);
        }
    }
    c + ext / metric.det()
}

/// Covariant-derivative quantities of the normal bundle at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalDerivatives {
    /// `n[i][k] = g(∇⊥_{∂ᵢ}H, J∂ₖ)`.
    pub nabla_perp_h: Mat2,
    pub nabla_perp_h_norm: f64,
    /// |∇(JH)|, computed intrinsically from α_H and the Levi-Civita connection.
    pub nabla_jh_norm: f64,
    pub nabla_a_norm: f64,
    /// |g(R⊥(e₁,e₂)Je₁, Je₂)| for an orthonormal frame e₁, e₂.
    pub rho_n: f64,
}

/// Jet-level intermediate quantities shared by the derivative computations.
struct JetGeometry {
    ginv: [[Jet; 2]; 2],
    gamma: [[[Jet; 2]; 2]; 2],
    h: [[[Jet; 2]; 2]; 2],
    h_ambient: Vec<Jet>,
    alpha: [Jet; 2],
}

impl JetGeometry {
    fn new(jets: &SurfaceJets, metric: &MetricJet) -> Self {
        let w = jets.weights();
        let ginv = metric.inverse();
        let gamma = metric.christoffel();
        let jt = [scale_vec(&jets.tangents[0], I), scale_vec(&jets.tangents[1], I)];
        let mut h = [[[Jet::real(0.0, 1); 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    h[i][j][k] = pair(&jets.second[i][j], &jt[k], w).re();
                }
            }
        }
        let eta = [0, 1].map(|k| {
            ginv[0][0] * h[0][0][k]
                + ginv[0][1] * h[0][1][k]
                + ginv[1][0] * h[1][0][k]
                + ginv[1][1] * h[1][1][k]
        });
        let c = [0, 1].map(|l| ginv[l][0] * eta[0] + ginv[l][1] * eta[1]);
        let h_ambient = add_vec(&mul_vec(&jt[0], &c[0]), &mul_vec(&jt[1], &c[1]));
        let jh = scale_vec(&h_ambient, I);
        let alpha = [0, 1].map(|j| pair(&jh, &jets.tangents[j], w).re());
        JetGeometry {
            ginv,
            gamma,
            h,
            h_ambient,
            alpha,
        }
    }

    fn ginv_value(&self) -> Mat2 {
        [
            [val(&self.ginv[0][0]), val(&self.ginv[0][1])],
            [val(&self.ginv[1][0]), val(&self.ginv[1][1])],
        ]
    }

    /// ∇ᵢαⱼ = ∂ᵢαⱼ - Γᵏᵢⱼ αₖ.
    fn nabla_alpha(&self) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = val(&self.alpha[j].deriv(i))
                    - (0..2)
                        .map(|k| val(&self.gamma[k][i][j]) * val(&self.alpha[k]))
                        .sum::<f64>();
            }
        }
        out
    }
}

fn contract2(gi: &Mat2, a: &Mat2, b: &Mat2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += gi[i][j] * gi[k][l] * a[i][k] * b[j][l];
                }
            }
        }
    }
    s
}

/// ∇⊥H, |∇A| and ρ_N from order-3 jets.
pub fn normal_derivatives(jets: &SurfaceJets) -> Result<NormalDerivatives> {
    let metric = first_fundamental_form(jets)?;
    let geo = JetGeometry::new(jets, &metric);
    Ok(normal_derivatives_from(jets, &metric, &geo))
}

fn normal_derivatives_from(jets: &SurfaceJets, metric: &MetricJet, geo: &JetGeometry) -> NormalDerivatives {
    let w = jets.weights();
    let gi = geo.ginv_value();
    let g = metric.value();
    let jt = [scale_vec(&jets.tangents[0], I), scale_vec(&jets.tangents[1], I)];
    let gamma = values3(&geo.gamma);
    let h = values3(&geo.h);

    // ∇⊥H by normal projection of the flat derivative of the lifted H field.
    let mut n = [[0.0; 2]; 2];
    for (i, row) in n.iter_mut().enumerate() {
        let dh = deriv_vec(&geo.h_ambient, i);
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = val(&pair(&dh, &jt[k], w));
        }
    }
    let nabla_perp_h_norm = contract2(&gi, &n, &n).max(0.0).sqrt();

    let na = geo.nabla_alpha();
    let nabla_jh_norm = contract2(&gi, &na, &na).max(0.0).sqrt();

    // (∇_i A)(∂j,∂k) paired with J∂n.
    let mut t = [[[[0.0; 2]; 2]; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let coeff = [0, 1].map(|l| geo.ginv[l][0] * geo.h[j][k][0] + geo.ginv[l][1] * geo.h[j][k][1]);
            let a_jk = add_vec(&mul_vec(&jt[0], &coeff[0]), &mul_vec(&jt[1], &coeff[1]));
            for i in 0..2 {
                let da = deriv_vec(&a_jk, i);
                for nn in 0..2 {
                    let mut v = val(&pair(&da, &jt[nn], w));
                    for m in 0..2 {
                        v -= gamma[m][i][j] * h[m][k][nn] + gamma[m][i][k] * h[j][m][nn];
                    }
                    t[i][j][k][nn] = v;
                }
            }
        }
    }
    let mut na_sq = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                for d in 0..2 {
                                    na_sq += gi[i][a]
                                        * gi[j][b]
                                        * gi[k][c]
                                        * gi[l][d]
                                        * t[i][j][k][l]
                                        * t[a][b][c][d];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Normal connection ∇⊥_{∂ᵢ}(J∂ₖ) = Θˡᵢₖ J∂ₗ read off the lift, then its curvature.
    let mut theta = [[[Jet::real(0.0, 1); 2]; 2]; 2];
    let lowered: [[[Jet; 2]; 2]; 2] = [0, 1].map(|i| {
        [0, 1].map(|k| {
            let d = scale_vec(&jets.second[i][k], I);
            [0, 1].map(|m| pair(&d, &jt[m], w).re())
        })
    });
    for (l, theta_l) in theta.iter_mut().enumerate() {
        for i in 0..2 {
            for k in 0..2 {
                theta_l[i][k] = geo.ginv[l][0] * lowered[i][k][0] + geo.ginv[l][1] * lowered[i][k][1];
            }
        }
    }
    let r = curvature_01(&theta);
    let rho_n = (g.g12 * r[0][0] + g.g22 * r[1][0]).abs() / g.det();

    NormalDerivatives {
        nabla_perp_h: n,
        nabla_perp_h_norm,
        nabla_jh_norm,
        nabla_a_norm: na_sq.max(0.0).sqrt(),
        rho_n,
    }
}

/// Residuals of the pointwise identities every Lagrangian lift must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftResiduals {
    /// |herm(L,L) ∓ 1| on S⁵ / H⁵₁ lifts, zero in C².
    pub constraint: f64,
    /// max_j |herm(∂ⱼL, L)|: radial and vertical components of the tangents.
    pub horizontality: f64,
    /// |ω(∂₁L, ∂₂L)|.
    pub lagrangian: f64,
    pub cubic_asymmetry: f64,
    /// | |H|² from the lifted vector  -  |H|² from the J-frame components |.
    pub trace_mismatch: f64,
    /// Largest difference between the jet route and the frame-projection route for h.
    pub projection_mismatch: f64,
}

/// All pointwise quantities at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointGeometry {
    pub x: f64,
    pub y: f64,
    pub metric: Metric2,
    pub shape: ShapeTensor,
    pub mean: MeanCurvature,
    pub maslov: MaslovForm,
    pub k_intrinsic: f64,
    pub k_gauss: f64,
    pub normal: NormalDerivatives,
    pub delta_alpha: f64,
    pub d_alpha: f64,
    pub residuals: LiftResiduals,
}

impl PointGeometry {
    pub fn abs_h(&self) -> f64 {
        self.mean.norm
    }

    pub fn abs_h_sq(&self) -> f64 {
        self.mean.norm * self.mean.norm
    }

    /// √det g · g^{ij}, used by the divergence-form Laplacian.
    pub fn sqrt_det_ginv(&self) -> (f64, Mat2) {
        let sd = self.metric.det().sqrt();
        let gi = self.metric.inverse();
        (
            sd,
            [[sd * gi[0][0], sd * gi[0][1]], [sd * gi[1][0], sd * gi[1][1]]],
        )
    }
}

/// Compute every pointwise quantity of `map` at (x, y).
pub fn point_geometry(map: &ImmersionMap, x: f64, y: f64) -> Result<PointGeometry> {
    let jets = SurfaceJets::at(map, x, y)?;
    let metric = first_fundamental_form(&jets)?;
    let frame = jets.frame(None)?;
    let geo = JetGeometry::new(&jets, &metric);
    let g = metric.value();
    let shape = ShapeTensor { h: values3(&geo.h) };
    let (_, projected) = second_fundamental_form(&jets, &frame);
    let mean = mean_curvature(&g, &shape);
    let maslov = maslov_form(&mean, &frame);
    let k_intrinsic = gaussian_curvature_intrinsic(&metric);
    let k_gauss = gaussian_curvature_gauss_equation(&g, &shape, map.ambient().c());
    let normal = normal_derivatives_from(&jets, &metric, &geo);

    let gi = geo.ginv_value();
    let na = geo.nabla_alpha();
    let delta_alpha = -(0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| gi[i][j] * na[i][j])
        .sum::<f64>();
    let d_alpha = val(&geo.alpha[1].deriv(0)) - val(&geo.alpha[0].deriv(1));

    let w = jets.weights();
    let signature = map.ambient().signature();
    let constraint = match map.ambient().lift_norm() {
        None => 0.0,
        Some(n) => (pair(&jets.position, &jets.position, w).value() - n).norm(),
    };
    let horizontality = match map.ambient().lift_norm() {
        None => 0.0,
        Some(_) => (0..2)
            .map(|j| pair(&jets.tangents[j], &jets.position, w).value().norm())
            .fold(0.0, f64::max),
    };
    let lagrangian = crate::ambient::symplectic_form(&frame.tangents()[0], &frame.tangents()[1])
        .expect("shared signature")
        .abs();
    let h_amb = HermitianVector::new(geo.h_ambient.iter().map(Jet::value).collect(), signature)
        .expect("lift dimension");
    let trace_mismatch = (h_amb.norm_sqr() - mean.norm * mean.norm).abs();
    let mut projection_mismatch: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                projection_mismatch =
                    projection_mismatch.max((projected.h[i][j][k] - shape.h[i][j][k]).abs());
            }
        }
    }

    Ok(PointGeometry {
        x,
        y,
        metric: g,
        shape,
        mean,
        maslov,
        k_intrinsic,
        k_gauss,
        normal,
        delta_alpha,
        d_alpha,
        residuals: LiftResiduals {
            constraint,
            horizontality,
            lagrangian,
            cubic_asymmetry: shape.asymmetry(),
            trace_mismatch,
            projection_mismatch,
        },
    })
}

/// Uniform tensor-product sample grid over a rectangle, nodes included at the edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, domain: Rect) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(HslError::GridTooCoarse { nx, ny, min: 2 });
        }
        Ok(Grid { nx, ny, domain })
    }

    pub fn hx(&self) -> f64 {
        self.domain.width() / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.domain.height() / (self.ny - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        // exact endpoints avoid rounding just outside the domain
        let x = if i + 1 == self.nx {
            self.domain.x1
        } else {
            self.domain.x0 + i as f64 * self.hx()
        };
        let y = if j + 1 == self.ny {
            self.domain.y1
        } else {
            self.domain.y0 + j as f64 * self.hy()
        };
        (x, y)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index with x varying fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Minimum number of grid-interior nodes per axis for the finite-difference passes.
pub const MIN_INTERIOR: usize = 5;

/// Pointwise geometry over a whole grid, in [`Grid::index`] order.
#[derive(Debug, Clone)]
pub struct GeometryField {
    pub grid: Grid,
    pub points: Vec<PointGeometry>,
}

impl GeometryField {
    /// Evaluate every node in parallel. On failure the error of the first failing
    /// node in index order is returned.
    pub fn compute(map: &ImmersionMap, grid: Grid) -> Result<Self> {
        let points: Vec<Result<PointGeometry>> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (x, y) = grid.node(idx % grid.nx, idx / grid.nx);
                point_geometry(map, x, y)
            })
            .collect();
        let points = points.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(GeometryField { grid, points })
    }

    pub fn at(&self, i: usize, j: usize) -> &PointGeometry {
        &self.points[self.grid.index(i, j)]
    }

    /// Nodes at least two steps from the boundary, where the Laplacian is defined.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i >= 2 && j >= 2 && i + 2 < self.grid.nx && j + 2 < self.grid.ny
    }

    fn require_interior(&self) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        if nx < MIN_INTERIOR + 4 || ny < MIN_INTERIOR + 4 {
            return Err(HslError::GridTooCoarse {
                nx,
                ny,
                min: MIN_INTERIOR + 4,
            });
        }
        Ok(())
    }

    /// Second-order gradient of a nodal field: central in the interior, one-sided
    /// three-point stencils on the boundary.
    pub fn gradient(&self, f: &[f64]) -> Vec<[f64; 2]> {
        let g = &self.grid;
        let d = |a: usize, b: usize, axis: usize| -> f64 {
            let (n, h) = if axis == 0 { (g.nx, g.hx()) } else { (g.ny, g.hy()) };
            let idx = |k: usize| if axis == 0 { g.index(k, b) } else { g.index(a, k) };
            let k = if axis == 0 { a } else { b };
            if k == 0 {
                (-3.0 * f[idx(0)] + 4.0 * f[idx(1)] - f[idx(2)]) / (2.0 * h)
            } else if k == n - 1 {
                (3.0 * f[idx(n - 1)] - 4.0 * f[idx(n - 2)] + f[idx(n - 3)]) / (2.0 * h)
            } else {
                (f[idx(k + 1)] - f[idx(k - 1)]) / (2.0 * h)
            }
        };
        (0..g.len())
            .map(|idx| {
                let (a, b) = (idx % g.nx, idx / g.nx);
                [d(a, b, 0), d(a, b, 1)]
            })
            .collect()
    }

    /// Laplace–Beltrami operator (1/√g) ∂ᵢ(√g g^{ij} ∂ⱼ f) of a nodal field by nested
    /// central differences; `None` outside the interior.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Result<Vec<Option<f64>>> {
        self.require_interior()?;
        let g = &self.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let mut flux = vec![[0.0; 2]; g.len()];
        for b in 1..g.ny - 1 {
            for a in 1..g.nx - 1 {
                let fx = (f[g.index(a + 1, b)] - f[g.index(a - 1, b)]) / (2.0 * hx);
                let fy = (f[g.index(a, b + 1)] - f[g.index(a, b - 1)]) / (2.0 * hy);
                let (_, m) = self.at(a, b).sqrt_det_ginv();
                flux[g.index(a, b)] = [m[0][0] * fx + m[0][1] * fy, m[1][0] * fx + m[1][1] * fy];
            }
        }
        Ok((0..g.len())
            .map(|idx| {
                let (a, b) = (idx % g.nx, idx / g.nx);
                if !self.is_interior(a, b) {
                    return None;
                }
                let div = (flux[g.index(a + 1, b)][0] - flux[g.index(a - 1, b)][0]) / (2.0 * hx)
                    + (flux[g.index(a, b + 1)][1] - flux[g.index(a, b - 1)][1]) / (2.0 * hy);
                Some(div / self.at(a, b).metric.det().sqrt())
            })
            .collect())
    }
}

/// Stationarity scalars over a grid.
#[derive(Debug, Clone)]
pub struct StationarityScalars {
    pub delta_alpha: Vec<f64>,
    pub d_alpha: Vec<f64>,
    /// Δ|H|² at interior nodes.
    pub laplacian_h_sq: Vec<Option<f64>>,
}

pub fn stationarity_scalars(field: &GeometryField) -> Result<StationarityScalars> {
    let h_sq: Vec<f64> = field.points.iter().map(PointGeometry::abs_h_sq).collect();
    Ok(StationarityScalars {
        delta_alpha: field.points.iter().map(|p| p.delta_alpha).collect(),
        d_alpha: field.points.iter().map(|p| p.d_alpha).collect(),
        laplacian_h_sq: field.laplace_beltrami(&h_sq)?,
    })
}

/// Bochner residuals at interior nodes.
#[derive(Debug, Clone)]
pub struct BochnerResiduals {
    /// ½Δ|H|² - K|H|² - |∇⊥H|².
    pub stationary: Vec<Option<f64>>,
    /// The same with the term ⟨JH, ∇ div JH⟩ also subtracted; this form holds for
    /// every Lagrangian surface with closed α_H.
    pub general: Vec<Option<f64>>,
}

pub fn bochner_residuals(field: &GeometryField) -> Result<BochnerResiduals> {
    let scalars = stationarity_scalars(field)?;
    let grad_delta = field.gradient(&scalars.delta_alpha);
    let mut stationary = Vec::with_capacity(field.points.len());
    let mut general = Vec::with_capacity(field.points.len());
    for (idx, p) in field.points.iter().enumerate() {
        match scalars.laplacian_h_sq[idx] {
            None => {
                stationary.push(None);
                general.push(None);
            }
            Some(lap) => {
                let r = 0.5 * lap
                    - p.k_intrinsic * p.abs_h_sq()
                    - p.normal.nabla_perp_h_norm * p.normal.nabla_perp_h_norm;
                // JH = -c^l ∂ₗ and div JH = -δα, so ⟨JH, ∇ div JH⟩ = c^l ∂ₗ δα.
                let c = p.mean.components;
                let drift = c[0] * grad_delta[idx][0] + c[1] * grad_delta[idx][1];
                stationary.push(Some(r));
                general.push(Some(r - drift));
            }
        }
    }
    Ok(BochnerResiduals { stationary, general })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plane() -> ImmersionMap {
        ImmersionMap::new(AmbientSpace::FLAT_C2, Rect::square(4.0), [false; 2], |x, y| {
            vec![*x, *y]
        })
    }

    fn cylinder(r: f64) -> ImmersionMap {
        ImmersionMap::new(
            AmbientSpace::FLAT_C2,
            Rect::square(4.0),
            [false; 2],
            move |x, y| vec![(*x * (1.0 / r)).exp_i() * r, *y],
        )
    }

    fn torus(r1: f64, r2: f64) -> ImmersionMap {
        ImmersionMap::new(
            AmbientSpace::FLAT_C2,
            Rect::square(4.0),
            [false; 2],
            move |x, y| vec![(*x * (1.0 / r1)).exp_i() * r1, (*y * (1.0 / r2)).exp_i() * r2],
        )
    }

    #[test]
    fn plane_is_totally_geodesic() {
        let p = point_geometry(&plane(), 0.5, -1.0).unwrap();
        assert_eq!(
            p.metric,
            Metric2 {
                g11: 1.0,
                g12: 0.0,
                g22: 1.0
            }
        );
        assert!(p.shape.h.iter().flatten().flatten().all(|&v| v == 0.0));
        assert_eq!(p.abs_h(), 0.0);
        assert_eq!(p.maslov.alpha, [0.0, 0.0]);
        assert_eq!(p.normal.nabla_perp_h_norm, 0.0);
        assert_eq!(p.normal.nabla_a_norm, 0.0);
        assert_eq!(p.normal.rho_n, 0.0);
        assert_eq!(p.k_intrinsic, 0.0);
        assert_eq!(p.k_gauss, 0.0);
        assert_eq!(p.delta_alpha, 0.0);
        assert_eq!(p.d_alpha, 0.0);
    }

    #[test]
    fn cylinder_geometry() {
        let p = point_geometry(&cylinder(1.0), 0.3, 0.2).unwrap();
        assert_abs_diff_eq!(p.metric.g11, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.metric.g12, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.metric.g22, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.abs_h(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.maslov.alpha[0].abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.maslov.alpha[1], 0.0, epsilon = 1e-14);
        // only h_111 survives
        for (i, j, k) in [(0, 0, 1), (0, 1, 0), (0, 1, 1), (1, 1, 0), (1, 1, 1)] {
            assert_abs_diff_eq!(p.shape.h[i][j][k], 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(p.shape.h[0][0][0].abs(), 1.0, epsilon = 1e-14);
        assert!(p.normal.nabla_perp_h_norm < 1e-13);
        assert!(p.normal.nabla_a_norm < 1e-13);
        for r in [0.5, 2.0] {
            let q = point_geometry(&cylinder(r), 0.1, 0.9).unwrap();
            assert_abs_diff_eq!(q.abs_h(), 1.0 / r, epsilon = 1e-13);
        }
    }

    #[test]
    fn torus_geometry() {
        let jets = SurfaceJets::at(&torus(1.0, 2.0), 0.4, -0.6).unwrap();
        let frame = jets.frame(None).unwrap();
        let (a, _) = second_fundamental_form(&jets, &frame);
        assert!(a[0][1].norm_sqr() < 1e-28);
        assert_abs_diff_eq!(a[0][0].norm_sqr().sqrt(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a[1][1].norm_sqr().sqrt(), 0.5, epsilon = 1e-14);

        let p = point_geometry(&torus(1.0, 3.0), 0.4, -0.6).unwrap();
        assert_abs_diff_eq!(p.abs_h_sq(), 1.0 + 1.0 / 9.0, epsilon = 1e-13);
        assert_abs_diff_eq!(p.k_gauss, 0.0, epsilon = 1e-14);
        let p = point_geometry(&torus(1.0, 1.0), 0.4, -0.6).unwrap();
        assert_abs_diff_eq!(p.maslov.alpha[0].abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.maslov.alpha[1].abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.maslov.mu[1].abs(), 1.0 / std::f64::consts::PI, epsilon = 1e-14);
    }

    #[test]
    fn round_sphere_metric_has_unit_curvature() {
        let x0 = 0.9;
        let x = Jet::var_x(x0, 2);
        let s = x.sin();
        let metric = MetricJet::from_components(Jet::real(1.0, 2), Jet::real(0.0, 2), s * s);
        assert_abs_diff_eq!(gaussian_curvature_intrinsic(&metric), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn alpha_is_minus_eta_and_traces_agree() {
        // a non-symmetric Lagrangian graph with varying geometry
        let map = ImmersionMap::new(AmbientSpace::FLAT_C2, Rect::square(1.0), [false; 2], |x, y| {
            let ux = *x * *x * *y * 0.9 + *x * 0.2;
            let uy = *x * *x * *x * 0.3;
            vec![*x + ux * I, *y + uy * I]
        });
        let p = point_geometry(&map, 0.4, -0.3).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(p.maslov.alpha[j], -p.mean.lowered[j], epsilon = 1e-14);
        }
        assert!(p.residuals.trace_mismatch < 1e-12);
        assert!(p.residuals.cubic_asymmetry < 1e-13);
        assert!(p.residuals.lagrangian < 1e-14);
        assert!(p.residuals.projection_mismatch < 1e-13);
        // closed α and intrinsic/extrinsic curvature agree on any Lagrangian in C²
        assert!(p.d_alpha.abs() < 1e-12);
        assert_abs_diff_eq!(p.k_intrinsic, p.k_gauss, epsilon = 1e-12);
        assert_abs_diff_eq!(p.normal.rho_n, p.k_intrinsic.abs(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            p.normal.nabla_jh_norm,
            p.normal.nabla_perp_h_norm,
            epsilon = 1e-12
        );
        assert!(p.k_intrinsic.abs() > 1e-3);
        assert!(p.delta_alpha.abs() > 1e-3);
    }

    #[test]
    fn degenerate_map_is_reported_with_location() {
        let map = ImmersionMap::new(AmbientSpace::FLAT_C2, Rect::square(1.0), [false; 2], |x, _| {
            vec![*x, *x]
        });
        match point_geometry(&map, 0.25, 0.5) {
            Err(HslError::DegenerateImmersion { x, y, .. }) => assert_eq!((x, y), (0.25, 0.5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coarse_grid_is_rejected_for_fd_passes() {
        let field = GeometryField::compute(&plane(), Grid::new(8, 20, Rect::square(1.0)).unwrap()).unwrap();
        assert!(matches!(
            stationarity_scalars(&field),
            Err(HslError::GridTooCoarse { .. })
        ));
        let field = GeometryField::compute(&plane(), Grid::new(9, 9, Rect::square(1.0)).unwrap()).unwrap();
        let s = stationarity_scalars(&field).unwrap();
        assert_eq!(s.laplacian_h_sq.iter().flatten().count(), 25);
        assert!(s.laplacian_h_sq.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_quadratic_is_exact_on_flat_metric() {
        let field = GeometryField::compute(
            &plane(),
            Grid::new(11, 13, Rect::new(-1.0, 1.0, 0.0, 2.0)).unwrap(),
        )
        .unwrap();
        let f: Vec<f64> = field
            .points
            .iter()
            .map(|p| p.x * p.x + 3.0 * p.x * p.y - p.y * p.y * 0.5)
            .collect();
        for v in field.laplace_beltrami(&f).unwrap().into_iter().flatten() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-11);
        }
        let grad = field.gradient(&f);
        for (p, g) in field.points.iter().zip(grad) {
            assert_abs_diff_eq!(g[0], 2.0 * p.x + 3.0 * p.y, epsilon = 1e-11);
            assert_abs_diff_eq!(g[1], 3.0 * p.x - p.y, epsilon = 1e-11);
        }
    }
}
