//! Explicit Hamiltonian stationary Lagrangian families.
//!
//! * `c2-plane`, `c2-cylinder`, `c2-torus`: arc-length parametrized products in C².
//! * `cp2-flat`: horizontal lifts into S⁵ of the flat tori of CP²(4).
//! * `ch2-family1` … `ch2-family6`: horizontal lifts into H⁵₁ ⊂ C³₁ of the flat
//!   surfaces of CH²(-4).
//!
//! Each constructor validates its parameters against the constraint clauses and
//! returns an entry with its immersion, default sampling window and the list of
//! properties the family is expected to have. Lifted families with polynomial
//! prefactors (5 and 6) are unbounded; the default window is still [-π, π]².

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientSpace, I, LIFT_CONSTRAINT_TOL};
use crate::error::{HslError, Result};
use crate::jets::{ImmersionMap, Jet, Rect};

/// Margin by which every strict parameter inequality must hold.
pub const CONSTRAINT_MARGIN: f64 = 1e-6;

/// Constraint slack below which a valid tuple is reported as near-degenerate.
pub const NEAR_DEGENERATE_BAND: f64 = 1e-3;

pub type Params = BTreeMap<String, f64>;

/// Properties a family is expected to satisfy on every sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedProperties {
    pub lagrangian: bool,
    pub hamiltonian_stationary: bool,
    pub parallel_h: bool,
    pub parallel_a: bool,
    pub flat: bool,
    pub minimal: bool,
    /// Closed-form value of the (constant) length |H|, when known.
    pub closed_form_h: Option<f64>,
}

impl ExpectedProperties {
    fn flat_family(closed_form_h: Option<f64>) -> Self {
        ExpectedProperties {
            lagrangian: true,
            hamiltonian_stationary: true,
            parallel_h: true,
            parallel_a: true,
            flat: true,
            minimal: closed_form_h == Some(0.0),
            closed_form_h,
        }
    }

    /// Only the Lagrangian condition is promised (used for control surfaces and
    /// user-supplied maps).
    pub fn lagrangian_only() -> Self {
        ExpectedProperties {
            lagrangian: true,
            hamiltonian_stationary: false,
            parallel_h: false,
            parallel_a: false,
            flat: false,
            minimal: false,
            closed_form_h: None,
        }
    }
}

/// A constraint on the parameters, written as it appears in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clause(pub &'static str);

impl Clause {
    /// The clause without spaces, as printed by `hsl list`.
    pub fn compact(&self) -> String {
        self.0.replace(' ', "")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// Parameter schema of one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyTemplate {
    pub id: &'static str,
    pub ambient: AmbientSpace,
    /// Parameter names with the default value used when a parameter is omitted.
    pub params: &'static [(&'static str, f64)],
    pub clauses: &'static [Clause],
}

impl FamilyTemplate {
    /// One line per family: `id: clause, clause`.
    pub fn summary(&self) -> String {
        let clauses = if self.clauses.is_empty() {
            "no parameter constraints".to_string()
        } else {
            self.clauses
                .iter()
                .map(Clause::compact)
                .collect::<Vec<_>>()
                .join(", ")
        };
        let params = if self.params.is_empty() {
            "none".to_string()
        } else {
            self.params
                .iter()
                .map(|(n, d)| format!("{n} (default {d})"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "{}: {}  [ambient {}; params: {}]",
            self.id, clauses, self.ambient, params
        )
    }
}

const TEMPLATES: [FamilyTemplate; 10] = [
    FamilyTemplate {
        id: "c2-plane",
        ambient: AmbientSpace::FLAT_C2,
        params: &[],
        clauses: &[],
    },
    FamilyTemplate {
        id: "c2-cylinder",
        ambient: AmbientSpace::FLAT_C2,
        params: &[("r", 1.0)],
        clauses: &[Clause("r > 0")],
    },
    FamilyTemplate {
        id: "c2-torus",
        ambient: AmbientSpace::FLAT_C2,
        params: &[("r1", 1.0), ("r2", 2.0)],
        clauses: &[Clause("r1 > 0"), Clause("r2 > 0")],
    },
    FamilyTemplate {
        id: "cp2-flat",
        ambient: AmbientSpace::CP2,
        params: &[("a", 1.0), ("b", 0.0)],
        clauses: &[Clause("a ≠ 0")],
    },
    FamilyTemplate {
        id: "ch2-family1",
        ambient: AmbientSpace::CH2,
        params: &[("a", 0.5), ("b", 0.3)],
        clauses: &[Clause("a ≠ 0"), Clause("a² + b² < 1")],
    },
    FamilyTemplate {
        id: "ch2-family2",
        ambient: AmbientSpace::CH2,
        params: &[("b", 0.5)],
        clauses: &[Clause("0 < b² < 1")],
    },
    FamilyTemplate {
        id: "ch2-family3",
        ambient: AmbientSpace::CH2,
        params: &[("a", 0.9), ("b", 0.9)],
        clauses: &[Clause("0 < a² < 1"), Clause("a² + b² > 1")],
    },
    FamilyTemplate {
        id: "ch2-family4",
        ambient: AmbientSpace::CH2,
        params: &[("a", 1.5), ("b", 0.4)],
        clauses: &[Clause("a² > 1")],
    },
    FamilyTemplate {
        id: "ch2-family5",
        ambient: AmbientSpace::CH2,
        params: &[("b", 0.7)],
        clauses: &[Clause("b ≠ 0")],
    },
    FamilyTemplate {
        id: "ch2-family6",
        ambient: AmbientSpace::CH2,
        params: &[],
        clauses: &[],
    },
];

/// Id of the non-stationary Lagrangian graph used as a negative control.
pub const CONTROL_ID: &str = "control-graph";

const CONTROL_TEMPLATE: FamilyTemplate = FamilyTemplate {
    id: CONTROL_ID,
    ambient: AmbientSpace::FLAT_C2,
    params: &[("k", 0.3)],
    clauses: &[],
};

/// All catalog families in their fixed listing order.
pub fn list_catalog() -> &'static [FamilyTemplate] {
    &TEMPLATES
}

pub fn template(id: &str) -> Option<&'static FamilyTemplate> {
    TEMPLATES
        .iter()
        .chain(std::iter::once(&CONTROL_TEMPLATE))
        .find(|t| t.id == id)
}

/// A named immersion together with its parameters and expected properties.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub ambient: AmbientSpace,
    pub params: Params,
    pub immersion: ImmersionMap,
    pub expected: ExpectedProperties,
}

impl CatalogEntry {
    /// Wrap a user-supplied immersion; only the Lagrangian property is assumed.
    pub fn custom(id: impl Into<String>, immersion: ImmersionMap) -> Self {
        CatalogEntry {
            id: id.into(),
            ambient: immersion.ambient(),
            params: Params::new(),
            immersion,
            expected: ExpectedProperties::lagrangian_only(),
        }
    }

    pub fn default_domain(&self) -> Rect {
        self.immersion.domain()
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.immersion.periodic()
    }

    /// The same entry sampled over a different window (periodicity flags are dropped
    /// unless the window is unchanged).
    pub fn with_domain(mut self, domain: Rect) -> Self {
        if domain != self.immersion.domain() {
            self.immersion = self.immersion.with_domain(domain).with_periodic([false; 2]);
        }
        self
    }
}

fn violated(clause: &str, message: String) -> HslError {
    HslError::bad_parameter(clause, message)
}

fn require(ok: bool, clause: Clause, params: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(violated(clause.0, format!("{params} violates {clause}")))
    }
}

fn require_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(violated(
                &format!("{name} finite"),
                format!("{name} = {v} is not a finite number"),
            ));
        }
    }
    Ok(())
}

/// The C² families of the flat case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C2Kind {
    Plane,
    Cylinder { r: f64 },
    Torus { r1: f64, r2: f64 },
}

pub fn build_c2(kind: C2Kind) -> Result<CatalogEntry> {
    let amb = AmbientSpace::FLAT_C2;
    let (id, params, immersion, h) = match kind {
        C2Kind::Plane => (
            "c2-plane",
            Params::new(),
            ImmersionMap::new(amb, Rect::square(PI), [false; 2], |x, y| vec![*x, *y]),
            0.0,
        ),
        C2Kind::Cylinder { r } => {
            require_finite(&[("r", r)])?;
            require(r > 0.0, Clause("r > 0"), &format!("r = {r}"))?;
            let map = ImmersionMap::new(
                amb,
                Rect::new(-PI * r, PI * r, -PI, PI),
                [true, false],
                move |x, y| vec![(*x * (1.0 / r)).exp_i() * r, *y],
            );
            ("c2-cylinder", Params::from([("r".into(), r)]), map, 1.0 / r)
        }
        C2Kind::Torus { r1, r2 } => {
            require_finite(&[("r1", r1), ("r2", r2)])?;
            require(r1 > 0.0, Clause("r1 > 0"), &format!("r1 = {r1}"))?;
            require(r2 > 0.0, Clause("r2 > 0"), &format!("r2 = {r2}"))?;
            let map = ImmersionMap::new(
                amb,
                Rect::new(-PI * r1, PI * r1, -PI * r2, PI * r2),
                [true, true],
                move |x, y| vec![(*x * (1.0 / r1)).exp_i() * r1, (*y * (1.0 / r2)).exp_i() * r2],
            );
            let h = (1.0 / (r1 * r1) + 1.0 / (r2 * r2)).sqrt();
            (
                "c2-torus",
                Params::from([("r1".into(), r1), ("r2".into(), r2)]),
                map,
                h,
            )
        }
    };
    Ok(CatalogEntry {
        id: id.into(),
        ambient: amb,
        params,
        immersion,
        expected: ExpectedProperties::flat_family(Some(h)),
    })
}

fn lifted(
    id: &str,
    ambient: AmbientSpace,
    params: Params,
    rule: impl Fn(&Jet, &Jet) -> Vec<Jet> + Send + Sync + 'static,
) -> CatalogEntry {
    CatalogEntry {
        id: id.into(),
        ambient,
        params,
        immersion: ImmersionMap::new(ambient, Rect::square(PI), [false; 2], rule),
        expected: ExpectedProperties::flat_family(None),
    }
}

/// Common phase factor e^{i(ax + by)}.
fn phase(x: &Jet, y: &Jet, a: f64, b: f64) -> Jet {
    (*x * a + *y * b).exp_i()
}

/// Flat tori of CP²(4) through their horizontal lift into S⁵.
pub fn build_cp2_flat(a: f64, b: f64) -> Result<CatalogEntry> {
    require_finite(&[("a", a), ("b", b)])?;
    require(a.abs() > CONSTRAINT_MARGIN, Clause("a ≠ 0"), &format!("a = {a}"))?;
    let w = (1.0 + a * a + b * b).sqrt();
    let s = (1.0 + a * a).sqrt();
    let params = Params::from([("a".into(), a), ("b".into(), b)]);
    Ok(lifted("cp2-flat", AmbientSpace::CP2, params, move |x, y| {
        let ph = phase(x, y, a, b);
        let wy = *y * w;
        vec![
            (*x * (-1.0 / a)).exp_i() * (a / s),
            ph * wy.sin() * (1.0 / w),
            ph * (wy.cos() - wy.sin() * (I * (b / w))) * (1.0 / s),
        ]
    }))
}

/// Flat surfaces of CH²(-4), families 1–6, through their horizontal lift into H⁵₁.
/// Parameters a family does not use are ignored.
pub fn build_ch2_family(k: u8, a: f64, b: f64) -> Result<CatalogEntry> {
    require_finite(&[("a", a), ("b", b)])?;
    let m = CONSTRAINT_MARGIN;
    let (a2, b2) = (a * a, b * b);
    let ab = format!("a = {a}, b = {b}");
    let amb = AmbientSpace::CH2;
    let id = format!("ch2-family{k}");
    match k {
        1 => {
            require(a.abs() > m, Clause("a ≠ 0"), &ab)?;
            require(a2 + b2 < 1.0 - m, Clause("a² + b² < 1"), &ab)?;
            let s = (1.0 - a2 - b2).sqrt();
            let q = (1.0 - a2).sqrt();
            let params = Params::from([("a".into(), a), ("b".into(), b)]);
            Ok(lifted(&id, amb, params, move |x, y| {
                let ph = phase(x, y, a, b);
                let sy = *y * s;
                vec![
                    ph * (sy.cosh() - sy.sinh() * (I * (b / s))) * (1.0 / q),
                    ph * sy.sinh() * (1.0 / s),
                    (*x * (1.0 / a)).exp_i() * (a / q),
                ]
            }))
        }
        2 => {
            require(b2 > m && b2 < 1.0 - m, Clause("0 < b² < 1"), &format!("b = {b}"))?;
            let q = (1.0 - b2).sqrt();
            let params = Params::from([("b".into(), b)]);
            Ok(lifted(&id, amb, params, move |x, y| {
                let ph = phase(x, y, q, b);
                vec![
                    ph * (*y + I * (1.0 / b)),
                    ph * *y,
                    (*x * (1.0 / q)).exp_i() * (q / b),
                ]
            }))
        }
        3 => {
            require(a2 > m && a2 < 1.0 - m, Clause("0 < a² < 1"), &ab)?;
            require(a2 + b2 > 1.0 + m, Clause("a² + b² > 1"), &ab)?;
            let t = (a2 + b2 - 1.0).sqrt();
            let q = (1.0 - a2).sqrt();
            let params = Params::from([("a".into(), a), ("b".into(), b)]);
            Ok(lifted(&id, amb, params, move |x, y| {
                let ph = phase(x, y, a, b);
                let ty = *y * t;
                vec![
                    ph * (ty.cos() - ty.sin() * (I * (b / t))) * (1.0 / q),
                    ph * ty.sin() * (1.0 / t),
                    (*x * (1.0 / a)).exp_i() * (a / q),
                ]
            }))
        }
        4 => {
            require(a2 > 1.0 + m, Clause("a² > 1"), &ab)?;
            let t = (a2 + b2 - 1.0).sqrt();
            let q = (a2 - 1.0).sqrt();
            let params = Params::from([("a".into(), a), ("b".into(), b)]);
            Ok(lifted(&id, amb, params, move |x, y| {
                let ph = phase(x, y, a, b);
                let ty = *y * t;
                vec![
                    (*x * (1.0 / a)).exp_i() * (a / q),
                    ph * ty.sin() * (1.0 / t),
                    ph * (ty.cos() - ty.sin() * (I * (b / t))) * (1.0 / q),
                ]
            }))
        }
        5 => {
            require(b.abs() > m, Clause("b ≠ 0"), &format!("b = {b}"))?;
            let inv = 1.0 / (8.0 * b2);
            let params = Params::from([("b".into(), b)]);
            Ok(lifted(&id, amb, params, move |x, y| {
                let e = x.exp_i();
                let common = *x * (8.0 * b2) - *y * (4.0 * b) + I;
                vec![
                    e * (common + I * (8.0 * b2)) * inv,
                    e * common * inv,
                    (*x + *y * (2.0 * b)).exp_i() * (1.0 / (2.0 * b)),
                ]
            }))
        }
        6 => Ok(lifted(&id, amb, Params::new(), |x, y| {
            let e = x.exp_i();
            let half_y2 = *y * *y * 0.5;
            let ix = x.scale(I);
            vec![e * (half_y2 - ix + 1.0), e * *y, e * (half_y2 - ix)]
        })),
        _ => Err(HslError::Unsupported(format!(
            "CH2 family index {k} (families are numbered 1 to 6)"
        ))),
    }
}

/// The Lagrangian graph z = (x + i u_x, y + i u_y) of u = k x³ y over [-1, 1]².
/// It is Lagrangian but not Hamiltonian stationary, and serves as a negative control.
pub fn control_graph(k: f64) -> Result<CatalogEntry> {
    require_finite(&[("k", k)])?;
    let map = ImmersionMap::new(
        AmbientSpace::FLAT_C2,
        Rect::square(1.0),
        [false; 2],
        move |x, y| {
            let x2 = *x * *x;
            vec![*x + x2 * *y * (I * (3.0 * k)), *y + x2 * *x * (I * k)]
        },
    );
    Ok(CatalogEntry {
        id: CONTROL_ID.into(),
        ambient: AmbientSpace::FLAT_C2,
        params: Params::from([("k".into(), k)]),
        immersion: map,
        expected: ExpectedProperties::lagrangian_only(),
    })
}

/// Build any entry (including the control graph) by id, filling omitted parameters
/// with their defaults.
pub fn build_entry(id: &str, overrides: &Params) -> Result<CatalogEntry> {
    let t = template(id).ok_or_else(|| {
        let ids: Vec<_> = TEMPLATES.iter().map(|t| t.id).collect();
        HslError::Unsupported(format!(
            "unknown entry '{id}' (known: {}, {CONTROL_ID})",
            ids.join(", ")
        ))
    })?;
    let mut params: Params = t.params.iter().map(|(n, d)| (n.to_string(), *d)).collect();
    for (name, value) in overrides {
        match params.get_mut(name) {
            Some(slot) => *slot = *value,
            None => {
                let known: Vec<_> = t.params.iter().map(|(n, _)| *n).collect();
                return Err(violated(
                    &format!("parameters of {id}: {}", known.join(", ")),
                    format!("unknown parameter '{name}' for {id}"),
                ));
            }
        }
    }
    let p = |n: &str| params.get(n).copied().unwrap_or(0.0);
    let entry = match id {
        "c2-plane" => build_c2(C2Kind::Plane),
        "c2-cylinder" => build_c2(C2Kind::Cylinder { r: p("r") }),
        "c2-torus" => build_c2(C2Kind::Torus {
            r1: p("r1"),
            r2: p("r2"),
        }),
        "cp2-flat" => build_cp2_flat(p("a"), p("b")),
        CONTROL_ID => control_graph(p("k")),
        other => {
            let k: u8 = other
                .trim_start_matches("ch2-family")
                .parse()
                .expect("template id");
            build_ch2_family(k, p("a"), p("b"))
        }
    }?;
    if let Some(expected) = entry.ambient.lift_norm() {
        let residual = constraint_residual(&entry, 10);
        if residual > LIFT_CONSTRAINT_TOL {
            return Err(HslError::BadLift { expected, residual });
        }
    }
    Ok(entry)
}

/// Smallest distance of a tuple from its constraint boundaries, each clause measured by
/// the quantity it bounds away from zero (|a|, 1 − a² − b², b², ...). `None` for ids
/// without constraints; negative when a clause is violated.
pub fn constraint_slack(id: &str, params: &Params) -> Option<f64> {
    let p = |n: &str| params.get(n).copied().unwrap_or(0.0);
    let (a, b, a2, b2) = (p("a"), p("b"), p("a") * p("a"), p("b") * p("b"));
    let slacks: Vec<f64> = match id {
        "c2-cylinder" => vec![p("r")],
        "c2-torus" => vec![p("r1"), p("r2")],
        "cp2-flat" => vec![a.abs()],
        "ch2-family1" => vec![a.abs(), 1.0 - a2 - b2],
        "ch2-family2" => vec![b2, 1.0 - b2],
        "ch2-family3" => vec![a2, 1.0 - a2, a2 + b2 - 1.0],
        "ch2-family4" => vec![a2 - 1.0],
        "ch2-family5" => vec![b.abs()],
        _ => return None,
    };
    slacks.into_iter().reduce(f64::min)
}

/// A valid tuple whose constraint slack is below `NEAR_DEGENERATE_BAND`.
pub fn near_degenerate(id: &str, params: &Params) -> bool {
    constraint_slack(id, params).is_some_and(|s| s < NEAR_DEGENERATE_BAND)
}

/// Lift points of the entry at an n×n deterministic grid, checked against the
/// quadric/sphere constraint. Returns the largest residual.
pub fn constraint_residual(entry: &CatalogEntry, n: usize) -> f64 {
    let Some(norm) = entry.ambient.lift_norm() else {
        return 0.0;
    };
    let d = entry.default_domain();
    let w = entry.ambient.signature().weights();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = d.x0 + d.width() * (i as f64 + 0.5) / n as f64;
            let y = d.y0 + d.height() * (j as f64 + 0.5) / n as f64;
            let l = entry.immersion.eval_raw(x, y, 0);
            let v: Complex64 = l
                .iter()
                .zip(w)
                .map(|(c, wk)| c.value() * c.value().conj() * *wk)
                .sum();
            worst = worst.max((v - norm).norm());
        }
    }
    worst
}
