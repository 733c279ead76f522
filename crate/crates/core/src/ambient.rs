//! The three complex space forms and the linear spaces their points are lifted to.
//!
//! `FlatC2` is modelled directly on C². Points of CP²(4) and CH²(-4) are only ever
//! represented by horizontal lifts into the unit sphere S⁵ ⊂ C³ and the quadric
//! H⁵₁ ⊂ C³₁ respectively. The complex structure J acts on lift coordinates as
//! multiplication by `i`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HslError, Result};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Residual above which a lift point is rejected as not lying on S⁵ or H⁵₁.
pub const LIFT_CONSTRAINT_TOL: f64 = 1e-10;

/// Gram determinants at or below this value are treated as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Signature of the Hermitian pairing on lift coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signature {
    /// All-plus pairing on Cⁿ.
    Euclidean(usize),
    /// The pairing (-,+,+) on C³₁.
    Lorentzian,
}

impl Signature {
    pub fn weights(&self) -> &'static [f64] {
        match self {
            Signature::Euclidean(2) => &[1.0, 1.0],
            Signature::Euclidean(3) => &[1.0, 1.0, 1.0],
            Signature::Euclidean(n) => panic!("unsupported Euclidean dimension {n}"),
            Signature::Lorentzian => &[-1.0, 1.0, 1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmbientKind {
    FlatC2,
    ProjCP2,
    HypCH2,
}

/// One of the model complex space forms M(4c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmbientSpace {
    kind: AmbientKind,
}

impl AmbientSpace {
    pub const FLAT_C2: AmbientSpace = AmbientSpace {
        kind: AmbientKind::FlatC2,
    };
    pub const CP2: AmbientSpace = AmbientSpace {
        kind: AmbientKind::ProjCP2,
    };
    pub const CH2: AmbientSpace = AmbientSpace {
        kind: AmbientKind::HypCH2,
    };

    pub fn new(kind: AmbientKind) -> Self {
        AmbientSpace { kind }
    }

    pub fn kind(&self) -> AmbientKind {
        self.kind
    }

    /// Holomorphic sectional curvature divided by 4: 0, +1 or -1.
    pub fn c(&self) -> f64 {
        match self.kind {
            AmbientKind::FlatC2 => 0.0,
            AmbientKind::ProjCP2 => 1.0,
            AmbientKind::HypCH2 => -1.0,
        }
    }

    pub fn lift_dim(&self) -> usize {
        self.signature().dim()
    }

    pub fn signature(&self) -> Signature {
        match self.kind {
            AmbientKind::FlatC2 => Signature::Euclidean(2),
            AmbientKind::ProjCP2 => Signature::Euclidean(3),
            AmbientKind::HypCH2 => Signature::Lorentzian,
        }
    }

    /// Value of herm(z, z) required of lift points, if the ambient is a quotient.
    pub fn lift_norm(&self) -> Option<f64> {
        match self.kind {
            AmbientKind::FlatC2 => None,
            AmbientKind::ProjCP2 => Some(1.0),
            AmbientKind::HypCH2 => Some(-1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            AmbientKind::FlatC2 => "C2",
            AmbientKind::ProjCP2 => "CP2",
            AmbientKind::HypCH2 => "CH2",
        }
    }
}

impl fmt::Display for AmbientSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A vector in C² or C³(₁) tagged with the signature of its pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianVector {
    components: Vec<Complex64>,
    signature: Signature,
}

impl HermitianVector {
    pub fn new(components: Vec<Complex64>, signature: Signature) -> Result<Self> {
        if components.len() != signature.dim() {
            return Err(HslError::ContractViolation(format!(
                "{} components for a signature of dimension {}",
                components.len(),
                signature.dim()
            )));
        }
        Ok(HermitianVector {
            components,
            signature,
        })
    }

    pub fn from_real(components: &[f64], signature: Signature) -> Result<Self> {
        Self::new(
            components.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            signature,
        )
    }

    pub fn zero(signature: Signature) -> Self {
        HermitianVector {
            components: vec![Complex64::new(0.0, 0.0); signature.dim()],
            signature,
        }
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn scale(&self, s: Complex64) -> Self {
        HermitianVector {
            components: self.components.iter().map(|&c| c * s).collect(),
            signature: self.signature,
        }
    }

    /// The complex structure J.
    pub fn j(&self) -> Self {
        self.scale(I)
    }

    /// Real inner product g(u, u).
    pub fn norm_sqr(&self) -> f64 {
        herm_unchecked(self, self).re
    }
}

impl Add for &HermitianVector {
    type Output = HermitianVector;
    fn add(self, rhs: &HermitianVector) -> HermitianVector {
        debug_assert_eq!(self.signature, rhs.signature);
        HermitianVector {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a + b)
                .collect(),
            signature: self.signature,
        }
    }
}

impl Sub for &HermitianVector {
    type Output = HermitianVector;
    fn sub(self, rhs: &HermitianVector) -> HermitianVector {
        self + &(-rhs)
    }
}

impl Neg for &HermitianVector {
    type Output = HermitianVector;
    fn neg(self) -> HermitianVector {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<f64> for &HermitianVector {
    type Output = HermitianVector;
    fn mul(self, rhs: f64) -> HermitianVector {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

fn herm_unchecked(u: &HermitianVector, v: &HermitianVector) -> Complex64 {
    u.signature
        .weights()
        .iter()
        .zip(u.components.iter().zip(&v.components))
        .map(|(w, (a, b))| a * b.conj() * *w)
        .sum()
}

fn check_same_signature(u: &HermitianVector, v: &HermitianVector) -> Result<()> {
    if u.signature != v.signature {
        return Err(HslError::ContractViolation(format!(
            "signature mismatch: {:?} vs {:?}",
            u.signature, v.signature
        )));
    }
    Ok(())
}

/// Signed Hermitian pairing Σ ε_k u_k conj(v_k); the second slot is conjugated.
///
/// Its real part is the real metric g and `symplectic_form(u, v) = Re herm(iu, v)`.
pub fn herm(u: &HermitianVector, v: &HermitianVector) -> Result<Complex64> {
    check_same_signature(u, v)?;
    Ok(herm_unchecked(u, v))
}

/// ω(u, v) = g(Ju, v).
pub fn symplectic_form(u: &HermitianVector, v: &HermitianVector) -> Result<f64> {
    check_same_signature(u, v)?;
    Ok(herm_unchecked(&u.j(), v).re)
}

/// Blocks of the orthogonal splitting of the lift space at a point of a lifted surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameBlock {
    Radial,
    Vertical,
    Tangent,
    Normal,
}

/// Orthogonal splitting of C³ (or C³₁, or C²) at a point of a Lagrangian lift into
/// radial span{z}, vertical span{iz}, tangent span{∂₁L, ∂₂L} and normal
/// span{i∂₁L, i∂₂L}. In the flat case only the tangent and normal blocks exist.
#[derive(Debug, Clone)]
pub struct LiftFrame {
    point: Option<HermitianVector>,
    tangents: [HermitianVector; 2],
    /// Inverse of the tangent Gram matrix (also the Gram matrix of the normal block).
    gram_inv: [[f64; 2]; 2],
    gram_det: f64,
    lift_norm: f64,
}

impl LiftFrame {
    /// Frame for a lift point `z` with coordinate partials `tangents`, requiring
    /// `|herm(z,z) - lift_norm| <= tol` where `lift_norm` is ±1.
    pub fn new(
        z: &HermitianVector,
        tangents: [HermitianVector; 2],
        lift_norm: f64,
        tol: f64,
    ) -> Result<Self> {
        for t in &tangents {
            check_same_signature(z, t)?;
        }
        let residual = (herm_unchecked(z, z) - lift_norm).norm();
        if residual > tol {
            return Err(HslError::BadLift {
                expected: lift_norm,
                residual,
            });
        }
        let mut frame = Self::flat(tangents)?;
        frame.point = Some(z.clone());
        frame.lift_norm = lift_norm;
        Ok(frame)
    }

    /// Frame in flat C², where there are no radial or vertical directions.
    pub fn flat(tangents: [HermitianVector; 2]) -> Result<Self> {
        check_same_signature(&tangents[0], &tangents[1])?;
        let g11 = tangents[0].norm_sqr();
        let g22 = tangents[1].norm_sqr();
        let g12 = herm_unchecked(&tangents[0], &tangents[1]).re;
        let det = g11 * g22 - g12 * g12;
        let scale = (g11.abs() + g22.abs()).max(1.0);
        if !(det > DEGENERATE_TOL * scale * scale) {
            return Err(HslError::DegenerateImmersion {
                x: f64::NAN,
                y: f64::NAN,
                det,
            });
        }
        Ok(LiftFrame {
            point: None,
            tangents,
            gram_inv: [[g22 / det, -g12 / det], [-g12 / det, g11 / det]],
            gram_det: det,
            lift_norm: 0.0,
        })
    }

    pub fn gram_det(&self) -> f64 {
        self.gram_det
    }

    pub fn radial(&self) -> Option<&HermitianVector> {
        self.point.as_ref()
    }

    pub fn vertical(&self) -> Option<HermitianVector> {
        self.point.as_ref().map(HermitianVector::j)
    }

    pub fn tangents(&self) -> &[HermitianVector; 2] {
        &self.tangents
    }

    pub fn normals(&self) -> [HermitianVector; 2] {
        [self.tangents[0].j(), self.tangents[1].j()]
    }

    /// Real coefficients of the projection of `v` onto a two-dimensional block
    /// spanned by `basis`, using the signed pairing.
    fn block_coefficients(&self, basis: &[HermitianVector; 2], v: &HermitianVector) -> [f64; 2] {
        let p = [herm_unchecked(v, &basis[0]).re, herm_unchecked(v, &basis[1]).re];
        let gi = &self.gram_inv;
        [
            gi[0][0] * p[0] + gi[0][1] * p[1],
            gi[1][0] * p[0] + gi[1][1] * p[1],
        ]
    }

    /// Coordinates of the normal projection of `v` in the basis {i∂₁L, i∂₂L}.
    pub fn normal_coefficients(&self, v: &HermitianVector) -> [f64; 2] {
        self.block_coefficients(&self.normals(), v)
    }

    /// Orthogonal projection of `v` onto one block of the splitting.
    pub fn project(&self, block: FrameBlock, v: &HermitianVector) -> HermitianVector {
        match block {
            FrameBlock::Tangent | FrameBlock::Normal => {
                let basis = if block == FrameBlock::Tangent {
                    self.tangents.clone()
                } else {
                    self.normals()
                };
                let c = self.block_coefficients(&basis, v);
                &(&basis[0] * c[0]) + &(&basis[1] * c[1])
            }
            FrameBlock::Radial | FrameBlock::Vertical => match &self.point {
                None => HermitianVector::zero(v.signature),
                Some(z) => {
                    let dir = if block == FrameBlock::Radial {
                        z.clone()
                    } else {
                        z.j()
                    };
                    let coeff = herm_unchecked(v, &dir).re / self.lift_norm;
                    &dir * coeff
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hv(cs: &[Complex64], s: Signature) -> HermitianVector {
        HermitianVector::new(cs.to_vec(), s).unwrap()
    }

    #[test]
    fn herm_examples() {
        let l = Signature::Lorentzian;
        let e1 = hv(&[c(1., 0.), c(0., 0.), c(0., 0.)], l);
        assert_eq!(herm(&e1, &e1).unwrap(), c(-1.0, 0.0));

        let e2 = hv(&[c(0., 0.), c(1., 0.), c(0., 0.)], l);
        assert_eq!(herm(&e2, &e2).unwrap(), c(1.0, 0.0));
        let e2e = hv(&[c(0., 0.), c(1., 0.), c(0., 0.)], Signature::Euclidean(3));
        assert_eq!(herm(&e2e, &e2e).unwrap(), c(1.0, 0.0));

        let u = hv(&[c(1., 0.), c(0., 1.)], Signature::Euclidean(2));
        let v = hv(&[c(0., 1.), c(1., 0.)], Signature::Euclidean(2));
        assert_eq!(herm(&u, &v).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn signature_mismatch_is_rejected() {
        let u = hv(&[c(1., 0.), c(0., 0.), c(0., 0.)], Signature::Lorentzian);
        let v = hv(&[c(1., 0.), c(0., 0.), c(0., 0.)], Signature::Euclidean(3));
        assert!(matches!(herm(&u, &v), Err(HslError::ContractViolation(_))));
        assert!(symplectic_form(&u, &v).is_err());
        assert!(HermitianVector::new(vec![c(1., 0.)], Signature::Lorentzian).is_err());
    }

    #[test]
    fn symplectic_examples() {
        let e = Signature::Euclidean(2);
        let u = hv(&[c(1., 0.), c(0., 0.)], e);
        let v = hv(&[c(0., 1.), c(0., 0.)], e);
        assert_eq!(symplectic_form(&u, &v).unwrap(), 1.0);
        assert_eq!(symplectic_form(&u, &u).unwrap(), 0.0);

        // Expanding by hand: herm(i e1, i e1) = -|i|^2 = -1 under (-,+,+).
        let l = Signature::Lorentzian;
        let u = hv(&[c(1., 0.), c(0., 0.), c(0., 0.)], l);
        let v = hv(&[c(0., 1.), c(0., 0.), c(0., 0.)], l);
        assert_eq!(symplectic_form(&u, &v).unwrap(), -1.0);
    }

    #[test]
    fn ambient_invariants() {
        assert_eq!(AmbientSpace::FLAT_C2.c(), 0.0);
        assert_eq!(AmbientSpace::FLAT_C2.lift_dim(), 2);
        assert_eq!(AmbientSpace::CP2.c(), 1.0);
        assert_eq!(AmbientSpace::CP2.signature().weights(), &[1.0, 1.0, 1.0]);
        assert_eq!(AmbientSpace::CH2.c(), -1.0);
        assert_eq!(AmbientSpace::CH2.signature().weights(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn coordinate_frame_blocks() {
        let s = Signature::Euclidean(3);
        let z = hv(&[c(1., 0.), c(0., 0.), c(0., 0.)], s);
        let t1 = hv(&[c(0., 0.), c(1., 0.), c(0., 0.)], s);
        let t2 = hv(&[c(0., 0.), c(0., 0.), c(1., 0.)], s);
        let frame = LiftFrame::new(&z, [t1.clone(), t2.clone()], 1.0, LIFT_CONSTRAINT_TOL).unwrap();
        assert_eq!(frame.radial().unwrap(), &z);
        assert_eq!(
            frame.vertical().unwrap(),
            hv(&[c(0., 1.), c(0., 0.), c(0., 0.)], s)
        );
        let mut blocks = vec![z.clone(), z.j(), t1.clone(), t2.clone()];
        blocks.extend(frame.normals());
        for (a, u) in blocks.iter().enumerate() {
            for (b, v) in blocks.iter().enumerate() {
                if a != b && !(a >= 2 && b >= 2 && (a < 4) == (b < 4)) {
                    assert!(herm(u, v).unwrap().re.abs() < 1e-15);
                }
            }
        }
        // projecting onto each block reproduces a generic vector
        let w = hv(&[c(0.3, -0.2), c(1.5, 0.7), c(-0.4, 2.0)], s);
        let sum = [
            FrameBlock::Radial,
            FrameBlock::Vertical,
            FrameBlock::Tangent,
            FrameBlock::Normal,
        ]
        .iter()
        .fold(HermitianVector::zero(s), |acc, &bl| &acc + &frame.project(bl, &w));
        for (a, b) in sum.components().iter().zip(w.components()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn violated_sphere_constraint_is_bad_lift() {
        let s = Signature::Euclidean(3);
        let z = hv(&[c(0.9f64.sqrt(), 0.), c(0., 0.), c(0., 0.)], s);
        let t1 = hv(&[c(0., 0.), c(1., 0.), c(0., 0.)], s);
        let t2 = hv(&[c(0., 0.), c(0., 0.), c(1., 0.)], s);
        let err = LiftFrame::new(&z, [t1, t2], 1.0, LIFT_CONSTRAINT_TOL).unwrap_err();
        assert!(matches!(err, HslError::BadLift { .. }));
    }

    #[test]
    fn parallel_tangents_are_degenerate() {
        let s = Signature::Euclidean(2);
        let t = hv(&[c(1., 0.), c(0., 0.)], s);
        let err = LiftFrame::flat([t.clone(), &t * 2.0]).unwrap_err();
        assert!(matches!(err, HslError::DegenerateImmersion { .. }));
    }
}
