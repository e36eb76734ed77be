//! Expression language for continuous self-maps of S¹ and S².
//!
//! Maps are written as s-expressions:
//!
//! ```text
//! expr := (id DIM) | (antipode DIM) | (conj) | (pow INT) | (rot FLOAT)
//!       | (rot3 FLOAT FLOAT FLOAT FLOAT) | (susp expr) | (compose expr expr)
//!       | (iterate UINT expr) | (blend FLOAT expr expr) | (perturb UINT64 FLOAT expr)
//! ```
//!
//! `(compose f g)` is `x ↦ f(g(x))`, `(blend t f g)` is the normalized straight
//! line `(1−t)f + t·g` and `(perturb s ε f)` is `normalize(f + ε·V_s)` for the
//! bounded field [`PerturbationField`] generated from seed `s`.

mod eval;
mod field;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::sphere::Dim;

pub use eval::BlendTrace;
pub use field::PerturbationField;
pub use parse::{parse, parse_batch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("dimension mismatch in {context}: S^{left} vs S^{right}")]
    DimensionMismatch {
        context: &'static str,
        left: Dim,
        right: Dim,
    },
    #[error("domain error: {0}")]
    Domain(String),
}

impl ExprError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExprError::Syntax { .. } => "SyntaxError",
            ExprError::DimensionMismatch { .. } => "DimensionMismatch",
            ExprError::Domain(_) => "DomainError",
        }
    }
}

/// A self-map of S¹ or S².
///
/// Build values with [`parse`] or the checked constructors (`MapExpr::compose`,
/// `MapExpr::blend`, ...); those enforce dimension and domain rules. A value
/// assembled by hand from the variants can be validated with [`MapExpr::check`].
#[derive(Debug, Clone, PartialEq)]
pub enum MapExpr {
    Id(Dim),
    Antipode(Dim),
    /// Complex conjugation on S¹.
    Conj,
    /// `z ↦ z^k` on S¹.
    Pow(i64),
    /// Rotation of S¹ by an angle in radians.
    Rot(f64),
    /// Rotation of S² about a unit axis.
    Rot3 {
        axis: [f64; 3],
        angle: f64,
    },
    /// Suspension of a circle map: acts on every latitude circle of S², fixes the poles.
    Susp(Box<MapExpr>),
    /// `Compose(f, g) = f ∘ g`.
    Compose(Box<MapExpr>, Box<MapExpr>),
    Iterate(u32, Box<MapExpr>),
    Blend {
        t: f64,
        from: Box<MapExpr>,
        to: Box<MapExpr>,
    },
    Perturb {
        field: PerturbationField,
        eps: f64,
        inner: Box<MapExpr>,
    },
}

fn finite(name: &str, v: f64) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::Domain(format!("{name} must be finite, got {v}")))
    }
}

fn same_dim(context: &'static str, f: &MapExpr, g: &MapExpr) -> Result<Dim, ExprError> {
    let (left, right) = (f.dimension(), g.dimension());
    if left != right {
        return Err(ExprError::DimensionMismatch {
            context,
            left,
            right,
        });
    }
    Ok(left)
}

impl MapExpr {
    pub fn id(dim: Dim) -> MapExpr {
        MapExpr::Id(dim)
    }

    pub fn antipode(dim: Dim) -> MapExpr {
        MapExpr::Antipode(dim)
    }

    pub fn pow(k: i64) -> MapExpr {
        MapExpr::Pow(k)
    }

    pub fn rot(angle: f64) -> Result<MapExpr, ExprError> {
        Ok(MapExpr::Rot(finite("rotation angle", angle)?))
    }

    /// Rotation about `axis`, which is normalized here.
    pub fn rot3(axis: [f64; 3], angle: f64) -> Result<MapExpr, ExprError> {
        for a in axis {
            finite("rotation axis", a)?;
        }
        finite("rotation angle", angle)?;
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n <= crate::sphere::NEAR_ZERO {
            return Err(ExprError::Domain("rotation axis must be non-zero".into()));
        }
        // Leave an already-unit axis untouched so parse/render round trips are exact.
        let axis = if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            axis
        } else {
            [axis[0] / n, axis[1] / n, axis[2] / n]
        };
        Ok(MapExpr::Rot3 { axis, angle })
    }

    pub fn susp(inner: MapExpr) -> Result<MapExpr, ExprError> {
        let d = inner.dimension();
        if d != Dim::One {
            return Err(ExprError::DimensionMismatch {
                context: "susp",
                left: Dim::One,
                right: d,
            });
        }
        Ok(MapExpr::Susp(Box::new(inner)))
    }

    /// `f ∘ g`.
    pub fn compose(f: MapExpr, g: MapExpr) -> Result<MapExpr, ExprError> {
        same_dim("compose", &f, &g)?;
        Ok(MapExpr::Compose(Box::new(f), Box::new(g)))
    }

    pub fn iterate(n: u32, f: MapExpr) -> MapExpr {
        MapExpr::Iterate(n, Box::new(f))
    }

    pub fn blend(t: f64, from: MapExpr, to: MapExpr) -> Result<MapExpr, ExprError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ExprError::Domain(format!(
                "blend parameter {t} outside [0, 1]"
            )));
        }
        same_dim("blend", &from, &to)?;
        Ok(MapExpr::Blend {
            t,
            from: Box::new(from),
            to: Box::new(to),
        })
    }

    pub fn perturb(seed: u64, eps: f64, inner: MapExpr) -> Result<MapExpr, ExprError> {
        if !(0.0..1.0).contains(&eps) {
            return Err(ExprError::Domain(format!(
                "perturbation size {eps} outside [0, 1)"
            )));
        }
        let field = PerturbationField::new(seed, inner.dimension());
        Ok(MapExpr::Perturb {
            field,
            eps,
            inner: Box::new(inner),
        })
    }

    /// Dimension of the sphere this map acts on.
    pub fn dimension(&self) -> Dim {
        match self {
            MapExpr::Id(d) | MapExpr::Antipode(d) => *d,
            MapExpr::Conj | MapExpr::Pow(_) | MapExpr::Rot(_) => Dim::One,
            MapExpr::Rot3 { .. } | MapExpr::Susp(_) => Dim::Two,
            MapExpr::Compose(f, _) | MapExpr::Iterate(_, f) => f.dimension(),
            MapExpr::Blend { from, .. } => from.dimension(),
            MapExpr::Perturb { inner, .. } => inner.dimension(),
        }
    }

    /// Re-validates every structural and domain rule, returning the dimension.
    pub fn check(&self) -> Result<Dim, ExprError> {
        match self {
            MapExpr::Rot(a) => {
                finite("rotation angle", *a)?;
            }
            MapExpr::Rot3 { axis, angle } => {
                MapExpr::rot3(*axis, *angle)?;
                let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
                if (n - 1.0).abs() > 1e-12 {
                    return Err(ExprError::Domain(format!(
                        "rotation axis has norm {n}, not 1"
                    )));
                }
            }
            MapExpr::Susp(f) => {
                let d = f.check()?;
                if d != Dim::One {
                    return Err(ExprError::DimensionMismatch {
                        context: "susp",
                        left: Dim::One,
                        right: d,
                    });
                }
            }
            MapExpr::Compose(f, g) => {
                f.check()?;
                g.check()?;
                same_dim("compose", f, g)?;
            }
            MapExpr::Iterate(_, f) => {
                f.check()?;
            }
            MapExpr::Blend { t, from, to } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(ExprError::Domain(format!(
                        "blend parameter {t} outside [0, 1]"
                    )));
                }
                from.check()?;
                to.check()?;
                same_dim("blend", from, to)?;
            }
            MapExpr::Perturb { field, eps, inner } => {
                if !(0.0..1.0).contains(eps) {
                    return Err(ExprError::Domain(format!(
                        "perturbation size {eps} outside [0, 1)"
                    )));
                }
                let d = inner.check()?;
                if field.dim() != d {
                    return Err(ExprError::DimensionMismatch {
                        context: "perturb",
                        left: field.dim(),
                        right: d,
                    });
                }
            }
            MapExpr::Id(_) | MapExpr::Antipode(_) | MapExpr::Conj | MapExpr::Pow(_) => {}
        }
        Ok(self.dimension())
    }

    /// Degree from the multiplicativity rules, or `None` when the expression
    /// contains a blend (or the exact value overflows `i64`).
    pub fn symbolic_degree(&self) -> Option<i64> {
        match self {
            MapExpr::Id(_) | MapExpr::Rot(_) | MapExpr::Rot3 { .. } => Some(1),
            MapExpr::Antipode(Dim::One) => Some(1),
            MapExpr::Antipode(Dim::Two) => Some(-1),
            MapExpr::Conj => Some(-1),
            MapExpr::Pow(k) => Some(*k),
            MapExpr::Susp(f) => f.symbolic_degree(),
            MapExpr::Compose(f, g) => f.symbolic_degree()?.checked_mul(g.symbolic_degree()?),
            MapExpr::Iterate(n, f) => f.symbolic_degree()?.checked_pow(*n),
            // ‖f + sεV‖ ≥ 1 − ε > 0 along the straight line, so the degree is f's.
            MapExpr::Perturb { inner, .. } => inner.symbolic_degree(),
            MapExpr::Blend { .. } => None,
        }
    }

    pub fn contains_blend(&self) -> bool {
        match self {
            MapExpr::Blend { .. } => true,
            MapExpr::Susp(f) | MapExpr::Iterate(_, f) => f.contains_blend(),
            MapExpr::Perturb { inner, .. } => inner.contains_blend(),
            MapExpr::Compose(f, g) => f.contains_blend() || g.contains_blend(),
            _ => false,
        }
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapExpr::Id(d) => write!(f, "(id {d})"),
            MapExpr::Antipode(d) => write!(f, "(antipode {d})"),
            MapExpr::Conj => write!(f, "(conj)"),
            MapExpr::Pow(k) => write!(f, "(pow {k})"),
            MapExpr::Rot(a) => write!(f, "(rot {a})"),
            MapExpr::Rot3 { axis, angle } => {
                write!(f, "(rot3 {} {} {} {angle})", axis[0], axis[1], axis[2])
            }
            MapExpr::Susp(g) => write!(f, "(susp {g})"),
            MapExpr::Compose(a, b) => write!(f, "(compose {a} {b})"),
            MapExpr::Iterate(n, g) => write!(f, "(iterate {n} {g})"),
            MapExpr::Blend { t, from, to } => write!(f, "(blend {t} {from} {to})"),
            MapExpr::Perturb { field, eps, inner } => {
                write!(f, "(perturb {} {eps} {inner})", field.seed())
            }
        }
    }
}
