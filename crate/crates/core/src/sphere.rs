//! Geometry of the unit spheres S¹ ⊂ ℝ² and S² ⊂ ℝ³.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vectors at or below this Euclidean norm cannot be projected onto the sphere.
pub const NEAR_ZERO: f64 = 1e-9;

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vector norm {norm:e} is below the projection threshold {NEAR_ZERO:e}")]
    NearZeroVector { norm: f64 },
    #[error("dimension mismatch: S^{left} vs S^{right}")]
    DimensionMismatch { left: Dim, right: Dim },
    #[error("invalid resolution {0}: must be at least {MIN_RESOLUTION}")]
    InvalidResolution(usize),
    #[error("vector of length {0} does not live in R^2 or R^3")]
    BadLength(usize),
}

/// Dimension `m` of the sphere Sᵐ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn from_m(m: u64) -> Option<Dim> {
        match m {
            1 => Some(Dim::One),
            2 => Some(Dim::Two),
            _ => None,
        }
    }

    pub fn m(self) -> u8 {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    /// Dimension of the ambient space, `m + 1`.
    pub fn ambient(self) -> usize {
        self.m() as usize + 1
    }

    /// Total measure of the sphere: 2π for S¹, 4π for S².
    pub fn volume(self) -> f64 {
        match self {
            Dim::One => 2.0 * PI,
            Dim::Two => 4.0 * PI,
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.m()
    }
}

impl TryFrom<u8> for Dim {
    type Error = String;

    fn try_from(m: u8) -> Result<Self, Self::Error> {
        Dim::from_m(m as u64).ok_or_else(|| format!("unsupported sphere dimension {m}"))
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m())
    }
}

/// A point on S¹ or S². Unused trailing coordinates are kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    dim: Dim,
    xyz: [f64; 3],
}

impl SpherePoint {
    /// Wraps coordinates that are already of unit norm. Callers inside the
    /// crate guarantee the norm invariant.
    pub(crate) fn from_unit(dim: Dim, xyz: [f64; 3]) -> SpherePoint {
        debug_assert!((norm3(xyz) - 1.0).abs() <= 1e-12, "not unit: {xyz:?}");
        SpherePoint { dim, xyz }
    }

    /// The point `(cos φ, sin φ)` of S¹.
    pub fn on_circle(angle: f64) -> SpherePoint {
        let (s, c) = angle.sin_cos();
        SpherePoint::from_unit(Dim::One, [c, s, 0.0])
    }

    /// The point `(sin θ cos φ, sin θ sin φ, cos θ)` of S², θ the polar angle.
    pub fn on_sphere(polar: f64, azimuth: f64) -> SpherePoint {
        let (st, ct) = polar.sin_cos();
        let (sp, cp) = azimuth.sin_cos();
        SpherePoint::from_unit(Dim::Two, [st * cp, st * sp, ct])
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// The `m + 1` ambient coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.xyz[..self.dim.ambient()]
    }

    /// Coordinates padded to ℝ³ (third entry zero on S¹).
    pub fn xyz(&self) -> [f64; 3] {
        self.xyz
    }

    pub fn antipode(&self) -> SpherePoint {
        let [x, y, z] = self.xyz;
        SpherePoint {
            dim: self.dim,
            xyz: [-x, -y, -z],
        }
    }

    /// Polar angle on S¹ in (−π, π].
    pub fn angle(&self) -> f64 {
        self.xyz[1].atan2(self.xyz[0])
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Projects a padded ambient vector onto the sphere of the given dimension.
pub(crate) fn normalize3(dim: Dim, v: [f64; 3]) -> Result<SpherePoint, GeometryError> {
    let n = norm3(v);
    if n.is_nan() || n <= NEAR_ZERO {
        return Err(GeometryError::NearZeroVector { norm: n });
    }
    Ok(SpherePoint::from_unit(dim, [v[0] / n, v[1] / n, v[2] / n]))
}

/// Projects `v ∈ ℝᵐ⁺¹` onto Sᵐ, failing when `‖v‖₂ ≤ 1e−9`.
pub fn normalize(v: &[f64]) -> Result<SpherePoint, GeometryError> {
    let (dim, xyz) = match *v {
        [x, y] => (Dim::One, [x, y, 0.0]),
        [x, y, z] => (Dim::Two, [x, y, z]),
        _ => return Err(GeometryError::BadLength(v.len())),
    };
    normalize3(dim, xyz)
}

/// Ambient Euclidean distance `‖p − q‖₂`, in [0, 2].
pub fn chordal_dist(p: &SpherePoint, q: &SpherePoint) -> Result<f64, GeometryError> {
    if p.dim != q.dim {
        return Err(GeometryError::DimensionMismatch {
            left: p.dim,
            right: q.dim,
        });
    }
    Ok(chord(p, q))
}

pub(crate) fn chord(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let d = [
        p.xyz[0] - q.xyz[0],
        p.xyz[1] - q.xyz[1],
        p.xyz[2] - q.xyz[2],
    ];
    norm3(d).min(2.0)
}

/// Quadrature nodes and weights on Sᵐ.
///
/// On S¹ the nodes are `N` equally spaced angles. On S² they are the centres of
/// a latitude–longitude grid with `N` bands and `2N` longitudes, stored band by
/// band from the north pole; each weight is the exact area of its cell.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    dim: Dim,
    resolution: usize,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
    mesh: f64,
}

impl SampleGrid {
    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// `N`: node count on S¹, latitude band count on S².
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Chordal node spacing. Every point of the sphere lies within `mesh` of a node.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of consecutive nodes sharing a latitude (the whole grid on S¹).
    pub fn row_len(&self) -> usize {
        match self.dim {
            Dim::One => self.resolution,
            Dim::Two => 2 * self.resolution,
        }
    }
}

pub fn make_grid(dim: Dim, resolution: usize) -> Result<SampleGrid, GeometryError> {
    if resolution < MIN_RESOLUTION {
        return Err(GeometryError::InvalidResolution(resolution));
    }
    let n = resolution;
    let grid = match dim {
        Dim::One => {
            let step = 2.0 * PI / n as f64;
            let nodes = (0..n)
                .map(|i| SpherePoint::on_circle(step * i as f64))
                .collect();
            SampleGrid {
                dim,
                resolution: n,
                nodes,
                weights: vec![step; n],
                mesh: 2.0 * (step / 2.0).sin(),
            }
        }
        Dim::Two => {
            let dtheta = PI / n as f64;
            let dphi = 2.0 * PI / (2 * n) as f64;
            let mut nodes = Vec::with_capacity(2 * n * n);
            let mut weights = Vec::with_capacity(2 * n * n);
            for i in 0..n {
                let top = dtheta * i as f64;
                let bottom = dtheta * (i + 1) as f64;
                let theta = dtheta * (i as f64 + 0.5);
                // Exact cell area; telescopes to 4π over all bands.
                let w = dphi * (top.cos() - bottom.cos());
                for j in 0..2 * n {
                    nodes.push(SpherePoint::on_sphere(theta, dphi * (j as f64 + 0.5)));
                    weights.push(w);
                }
            }
            SampleGrid {
                dim,
                resolution: n,
                nodes,
                weights,
                mesh: 2.0 * (dtheta / 2.0).sin(),
            }
        }
    };
    Ok(grid)
}

/// Orthonormal tangent basis at a point of S², with `e1 × e2 = base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub base: SpherePoint,
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

/// `e1 = normalize(a × p)` with `a = ẑ` away from the poles (`|p_z| < 0.9`)
/// and `a = x̂` near them; `e2 = p × e1`.
pub fn tangent_frame(p: &SpherePoint) -> TangentFrame {
    debug_assert_eq!(p.dim, Dim::Two);
    let x = p.xyz;
    let axis = if x[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let a = cross(axis, x);
    let n = norm3(a);
    let e1 = [a[0] / n, a[1] / n, a[2] / n];
    let e2 = cross(x, e1);
    TangentFrame { base: *p, e1, e2 }
}
