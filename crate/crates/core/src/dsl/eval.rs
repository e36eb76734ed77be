use crate::sphere::{normalize3, Dim, GeometryError, SpherePoint};

use super::MapExpr;

/// Smallest pre-normalization norm met by any blend node during evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendTrace {
    pub min_norm: f64,
}

impl Default for BlendTrace {
    fn default() -> Self {
        BlendTrace {
            min_norm: f64::INFINITY,
        }
    }
}

impl BlendTrace {
    pub fn merge(self, other: BlendTrace) -> BlendTrace {
        BlendTrace {
            min_norm: self.min_norm.min(other.min_norm),
        }
    }
}

fn rodrigues(axis: [f64; 3], angle: f64, v: [f64; 3]) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let k = axis;
    let kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    let kxv = crate::sphere::cross(k, v);
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = v[i] * c + kxv[i] * s + k[i] * kv * (1.0 - c);
    }
    out
}

impl MapExpr {
    /// Image of `x`. Fails on a dimension mismatch or a degenerate blend slice.
    pub fn evaluate(&self, x: &SpherePoint) -> Result<SpherePoint, GeometryError> {
        self.evaluate_traced(x, &mut BlendTrace::default())
    }

    /// Like [`MapExpr::evaluate`], additionally recording blend denominators.
    pub fn evaluate_traced(
        &self,
        x: &SpherePoint,
        trace: &mut BlendTrace,
    ) -> Result<SpherePoint, GeometryError> {
        let d = self.dimension();
        if x.dim() != d {
            return Err(GeometryError::DimensionMismatch {
                left: d,
                right: x.dim(),
            });
        }
        self.eval(x, trace)
    }

    fn eval(&self, x: &SpherePoint, trace: &mut BlendTrace) -> Result<SpherePoint, GeometryError> {
        let out = match self {
            MapExpr::Id(_) => *x,
            MapExpr::Antipode(_) => x.antipode(),
            MapExpr::Conj => {
                let [a, b, _] = x.xyz();
                SpherePoint::from_unit(Dim::One, [a, -b, 0.0])
            }
            MapExpr::Pow(k) => SpherePoint::on_circle(*k as f64 * x.angle()),
            MapExpr::Rot(a) => SpherePoint::on_circle(x.angle() + a),
            MapExpr::Rot3 { axis, angle } => {
                normalize3(Dim::Two, rodrigues(*axis, *angle, x.xyz()))?
            }
            MapExpr::Susp(f) => {
                let [a, b, z] = x.xyz();
                let r = a.hypot(b);
                if r == 0.0 {
                    *x
                } else {
                    let w = SpherePoint::from_unit(Dim::One, [a / r, b / r, 0.0]);
                    let [u, v, _] = f.eval(&w, trace)?.xyz();
                    SpherePoint::from_unit(Dim::Two, [r * u, r * v, z])
                }
            }
            MapExpr::Compose(f, g) => f.eval(&g.eval(x, trace)?, trace)?,
            MapExpr::Iterate(n, f) => {
                let mut y = *x;
                for _ in 0..*n {
                    y = f.eval(&y, trace)?;
                }
                y
            }
            MapExpr::Blend { t, from, to } => {
                let a = from.eval(x, trace)?.xyz();
                let b = to.eval(x, trace)?.xyz();
                let s = 1.0 - t;
                let v = [
                    s * a[0] + t * b[0],
                    s * a[1] + t * b[1],
                    s * a[2] + t * b[2],
                ];
                trace.min_norm = trace.min_norm.min(crate::sphere::norm3(v));
                normalize3(x.dim(), v)?
            }
            MapExpr::Perturb { field, eps, inner } => {
                let y = inner.eval(x, trace)?;
                if *eps == 0.0 {
                    // Skip the renormalization so that ε = 0 is exactly f.
                    return Ok(y);
                }
                let a = y.xyz();
                let w = field.eval(x);
                normalize3(
                    x.dim(),
                    [a[0] + eps * w[0], a[1] + eps * w[1], a[2] + eps * w[2]],
                )?
            }
        };
        Ok(out)
    }
}
