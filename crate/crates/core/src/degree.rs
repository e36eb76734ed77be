//! Numerical Brouwer degree and sup-metric distance between maps.
//!
//! On S¹ the degree is the winding number of `φ ↦ f(cos φ, sin φ)`; on S² it is
//! the integral of the pulled-back area form, `(1/4π) ∫ f · (∂₁f × ∂₂f) dA`.
//! Both are refined by doubling the resolution until two consecutive levels
//! agree. A raw value that is not close to an integer is an error, never rounded.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{BlendTrace, ExprError, MapExpr};
use crate::sphere::{
    chord, cross, dot, make_grid, normalize3, tangent_frame, Dim, GeometryError, SampleGrid,
    SpherePoint,
};

/// A blend whose straight-line combination gets this short is not a valid map.
pub const BLEND_MIN_NORM: f64 = 1e-6;

/// Default grid resolution for distance and homotopy sweeps.
pub fn default_sample_resolution(dim: Dim) -> usize {
    match dim {
        Dim::One => 1024,
        Dim::Two => 128,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegreeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(
        "no agreement between consecutive resolutions up to {max} (last raw value {last_raw})"
    )]
    ResolutionExceeded { max: usize, last_raw: f64 },
    #[error("symbolic degree {symbolic} disagrees with numeric degree {numeric}")]
    SymbolicNumericMismatch { symbolic: i64, numeric: i64 },
    #[error("blend denominator drops to {min_norm:e}; the blended map is undefined")]
    InvalidBlend { min_norm: f64 },
    #[error("invalid degree parameters: {0}")]
    InvalidParams(String),
}

impl DegreeError {
    pub fn kind(&self) -> &'static str {
        match self {
            DegreeError::Geometry(GeometryError::NearZeroVector { .. }) => "NearZeroVector",
            DegreeError::Geometry(GeometryError::DimensionMismatch { .. }) => "DimensionMismatch",
            DegreeError::Geometry(GeometryError::InvalidResolution(_)) => "InvalidResolution",
            DegreeError::Geometry(GeometryError::BadLength(_)) => "BadLength",
            DegreeError::Expr(e) => e.kind(),
            DegreeError::ResolutionExceeded { .. } => "ResolutionExceeded",
            DegreeError::SymbolicNumericMismatch { .. } => "SymbolicNumericMismatch",
            DegreeError::InvalidBlend { .. } => "InvalidBlend",
            DegreeError::InvalidParams(_) => "InvalidParams",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeMethod {
    Winding,
    Quadrature,
    Symbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeResult {
    pub value: i64,
    pub method: DegreeMethod,
    /// `|raw − value|` of the accepted numeric level.
    pub residual: f64,
    pub resolution: usize,
}

/// Starting and maximum resolution of the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub initial: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeParams {
    /// Sample count on S¹.
    pub circle: Resolution,
    /// Latitude band count on S².
    pub sphere: Resolution,
    pub tolerance: f64,
    /// Largest angular step between consecutive winding samples.
    pub step_cap: f64,
}

impl Default for DegreeParams {
    fn default() -> Self {
        DegreeParams {
            circle: Resolution {
                initial: 256,
                max: 16384,
            },
            sphere: Resolution {
                initial: 128,
                max: 1024,
            },
            tolerance: 0.1,
            step_cap: PI / 2.0,
        }
    }
}

impl DegreeParams {
    pub fn resolution(&self, dim: Dim) -> Resolution {
        match dim {
            Dim::One => self.circle,
            Dim::Two => self.sphere,
        }
    }

    pub fn validate(&self) -> Result<(), DegreeError> {
        for (name, r) in [("circle", self.circle), ("sphere", self.sphere)] {
            if r.initial < crate::sphere::MIN_RESOLUTION {
                return Err(DegreeError::InvalidParams(format!(
                    "{name} initial resolution {} is below 8",
                    r.initial
                )));
            }
            if r.max < 2 * r.initial {
                return Err(DegreeError::InvalidParams(format!(
                    "{name} max resolution {} leaves no room to refine {}",
                    r.max, r.initial
                )));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance < 0.5) {
            return Err(DegreeError::InvalidParams(format!(
                "tolerance {} outside (0, 0.5)",
                self.tolerance
            )));
        }
        if !(self.step_cap > 0.0 && self.step_cap < PI) {
            return Err(DegreeError::InvalidParams(format!(
                "step cap {} outside (0, π)",
                self.step_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Level {
    raw: f64,
    /// Whether the level is fine enough to trust on its own (winding step cap).
    resolved: bool,
    trace: BlendTrace,
}

fn residual(raw: f64) -> f64 {
    (raw - raw.round()).abs()
}

/// Doubles `n` from `res.initial` until level `n` is resolved, near an integer,
/// and within tolerance of its check level `check_of(n)` (at most `2n + 1`).
/// Levels stay within `res.max`.
fn refine(
    res: Resolution,
    tolerance: f64,
    check_of: impl Fn(usize) -> usize,
    mut sample: impl FnMut(usize) -> Result<Level, DegreeError>,
) -> Result<(Level, usize, BlendTrace), DegreeError> {
    let mut n = res.initial;
    let mut cur = sample(n)?;
    let mut trace = cur.trace;
    loop {
        if 2 * n > res.max {
            return Err(DegreeError::ResolutionExceeded {
                max: res.max,
                last_raw: cur.raw,
            });
        }
        let m = check_of(n);
        let check = sample(m)?;
        trace = trace.merge(check.trace);
        if cur.resolved && residual(cur.raw) < tolerance && (cur.raw - check.raw).abs() <= tolerance
        {
            return Ok((cur, n, trace));
        }
        n *= 2;
        cur = if m == n { check } else { sample(n)? };
        trace = trace.merge(cur.trace);
    }
}

/// Wraps an angle difference into (−π, π].
fn wrap(d: f64) -> f64 {
    let w = d - TAU * (d / TAU).round();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Uniform samples alias `z ↦ z^k` to `k mod n`; power-of-two levels would all
/// share that alias. `2n + 1` is coprime to `n`, so a wrong integer survives
/// the check only if `|k| ≳ n(2n + 1)`.
fn winding_check_level(n: usize) -> usize {
    2 * n + 1
}

/// Samples at `φᵢ = offset + 2πi/n`.
fn winding_level(e: &MapExpr, n: usize, step_cap: f64, offset: f64) -> Result<Level, DegreeError> {
    if n < crate::sphere::MIN_RESOLUTION {
        return Err(GeometryError::InvalidResolution(n).into());
    }
    let images = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = SpherePoint::on_circle(offset + TAU * i as f64 / n as f64);
            let mut tr = BlendTrace::default();
            let y = e.evaluate_traced(&x, &mut tr)?;
            Ok((y.angle(), tr))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;

    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    let mut trace = BlendTrace::default();
    for (i, &(a, tr)) in images.iter().enumerate() {
        let b = images[(i + 1) % n].0;
        let d = wrap(b - a);
        max_step = max_step.max(d.abs());
        total += d;
        trace = trace.merge(tr);
    }
    Ok(Level {
        raw: total / TAU,
        resolved: max_step <= step_cap,
        trace,
    })
}

fn quadrature_level(e: &MapExpr, n: usize) -> Result<Level, DegreeError> {
    let grid: SampleGrid = make_grid(Dim::Two, n)?;
    let h = (1e-4f64).min(grid.mesh() / 8.0);
    // normalize(x ± h·e) sits at geodesic distance atan(h) from x.
    let span = 2.0 * h.atan();
    let row = grid.row_len();

    let rows = grid
        .nodes()
        .par_chunks(row)
        .zip(grid.weights().par_chunks(row))
        .map(|(nodes, weights)| {
            let mut tr = BlendTrace::default();
            let mut sum = 0.0;
            for (x, w) in nodes.iter().zip(weights) {
                let frame = tangent_frame(x);
                let p = x.xyz();
                let fx = e.evaluate_traced(x, &mut tr)?.xyz();
                let mut at = |dir: [f64; 3], s: f64| -> Result<[f64; 3], GeometryError> {
                    let q = normalize3(
                        Dim::Two,
                        [p[0] + s * dir[0], p[1] + s * dir[1], p[2] + s * dir[2]],
                    )?;
                    Ok(e.evaluate_traced(&q, &mut tr)?.xyz())
                };
                let (a1, b1) = (at(frame.e1, h)?, at(frame.e1, -h)?);
                let (a2, b2) = (at(frame.e2, h)?, at(frame.e2, -h)?);
                let d1 = [
                    (a1[0] - b1[0]) / span,
                    (a1[1] - b1[1]) / span,
                    (a1[2] - b1[2]) / span,
                ];
                let d2 = [
                    (a2[0] - b2[0]) / span,
                    (a2[1] - b2[1]) / span,
                    (a2[2] - b2[2]) / span,
                ];
                sum += w * dot(fx, cross(d1, d2));
            }
            Ok((sum, tr))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;

    let mut total = 0.0;
    let mut trace = BlendTrace::default();
    for (s, tr) in rows {
        total += s;
        trace = trace.merge(tr);
    }
    Ok(Level {
        raw: total / (4.0 * PI),
        resolved: true,
        trace,
    })
}

fn expect_dim(e: &MapExpr, want: Dim) -> Result<(), DegreeError> {
    let got = e.check()?;
    if got != want {
        return Err(GeometryError::DimensionMismatch {
            left: want,
            right: got,
        }
        .into());
    }
    Ok(())
}

fn finish(level: Level, n: usize, method: DegreeMethod) -> DegreeResult {
    DegreeResult {
        value: level.raw.round() as i64,
        method,
        residual: residual(level.raw),
        resolution: n,
    }
}

fn winding_traced(
    e: &MapExpr,
    p: &DegreeParams,
) -> Result<(DegreeResult, BlendTrace), DegreeError> {
    let (level, n, trace) = refine(p.circle, p.tolerance, winding_check_level, |n| {
        winding_level(e, n, p.step_cap, 0.0)
    })?;
    Ok((finish(level, n, DegreeMethod::Winding), trace))
}

fn quadrature_traced(
    e: &MapExpr,
    p: &DegreeParams,
) -> Result<(DegreeResult, BlendTrace), DegreeError> {
    let (level, n, trace) = refine(p.sphere, p.tolerance, |n| 2 * n, |n| quadrature_level(e, n))?;
    Ok((finish(level, n, DegreeMethod::Quadrature), trace))
}

/// Winding number of a circle map.
pub fn degree_winding(e: &MapExpr, p: &DegreeParams) -> Result<DegreeResult, DegreeError> {
    p.validate()?;
    expect_dim(e, Dim::One)?;
    Ok(winding_traced(e, p)?.0)
}

/// Area-form quadrature degree of a map of S².
pub fn degree_quadrature(e: &MapExpr, p: &DegreeParams) -> Result<DegreeResult, DegreeError> {
    p.validate()?;
    expect_dim(e, Dim::Two)?;
    Ok(quadrature_traced(e, p)?.0)
}

fn numeric_traced(
    e: &MapExpr,
    p: &DegreeParams,
) -> Result<(DegreeResult, BlendTrace), DegreeError> {
    p.validate()?;
    match e.check()? {
        Dim::One => winding_traced(e, p),
        Dim::Two => quadrature_traced(e, p),
    }
}

/// Winding or quadrature degree, by dimension, ignoring any symbolic value.
pub fn degree_numeric(e: &MapExpr, p: &DegreeParams) -> Result<DegreeResult, DegreeError> {
    Ok(numeric_traced(e, p)?.0)
}

/// Degree of `e`.
///
/// With a symbolic degree available the result is symbolic, witnessed by one
/// numeric run that must agree. Otherwise (a blend is present) every blend
/// denominator met during the numeric run must exceed [`BLEND_MIN_NORM`].
pub fn degree(e: &MapExpr, p: &DegreeParams) -> Result<DegreeResult, DegreeError> {
    let symbolic = e.check().map(|_| e.symbolic_degree())?;
    let numeric = numeric_traced(e, p);
    match symbolic {
        Some(s) => {
            let (num, _) = numeric?;
            if num.value != s {
                return Err(DegreeError::SymbolicNumericMismatch {
                    symbolic: s,
                    numeric: num.value,
                });
            }
            Ok(DegreeResult {
                value: s,
                method: DegreeMethod::Symbolic,
                ..num
            })
        }
        None => {
            let (num, trace) = match numeric {
                Err(DegreeError::Geometry(GeometryError::NearZeroVector { norm }))
                    if e.contains_blend() =>
                {
                    return Err(DegreeError::InvalidBlend { min_norm: norm })
                }
                other => other?,
            };
            if trace.min_norm <= BLEND_MIN_NORM {
                return Err(DegreeError::InvalidBlend {
                    min_norm: trace.min_norm,
                });
            }
            Ok(num)
        }
    }
}

/// Sampled sup-metric distance between two maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    /// Largest chordal distance `‖f(x) − g(x)‖₂` over the grid: a lower bound of the sup.
    pub sampled_max: f64,
    pub resolution: usize,
    /// `sampled_max + (L_f + L_g)·mesh`, an upper bound when `L_f`, `L_g` are
    /// valid Lipschitz constants for the chordal metric.
    pub rigorous: Option<f64>,
}

pub fn sup_distance(
    f: &MapExpr,
    g: &MapExpr,
    resolution: usize,
    lipschitz: Option<(f64, f64)>,
) -> Result<DistanceEstimate, DegreeError> {
    let (df, dg) = (f.check()?, g.check()?);
    if df != dg {
        return Err(GeometryError::DimensionMismatch {
            left: df,
            right: dg,
        }
        .into());
    }
    if let Some((lf, lg)) = lipschitz {
        if !(lf >= 0.0 && lg >= 0.0 && lf.is_finite() && lg.is_finite()) {
            return Err(DegreeError::InvalidParams(format!(
                "Lipschitz constants must be finite and non-negative, got ({lf}, {lg})"
            )));
        }
    }
    let grid = make_grid(df, resolution)?;
    let dists = grid
        .nodes()
        .par_iter()
        .map(|x| Ok(chord(&f.evaluate(x)?, &g.evaluate(x)?)))
        .collect::<Result<Vec<f64>, GeometryError>>()?;
    let sampled_max = dists.into_iter().fold(0.0, f64::max);
    let rigorous = lipschitz.map(|(lf, lg)| (sampled_max + (lf + lg) * grid.mesh()).min(2.0));
    Ok(DistanceEstimate {
        sampled_max,
        resolution,
        rigorous,
    })
}
