//! Degree obstruction to being an iterated map.
//!
//! `deg(f ∘ g) = deg f · deg g`, so every iterate `fⁿ` has degree `kⁿ`. A map
//! whose degree is not a perfect power is therefore not `fⁿ` for any continuous
//! `f` and `n ≥ 2`. The same holds for every `g` with `sup ‖g − f₀‖ < 1`: the
//! normalized straight line from `f₀` to `g` is a homotopy, so `deg g = deg f₀`.
//!
//! A [`Refusal`] only says the obstruction is silent. It never claims a map is
//! an iterate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degree::{self, DegreeError, DegreeParams, DegreeResult, DistanceEstimate};
use crate::dsl::{ExprError, MapExpr};
use crate::sphere::{make_grid, norm3, Dim, GeometryError, SpherePoint};

/// Homotopies whose combination gets this short are rejected.
pub const HOMOTOPY_MIN_NORM: f64 = 1e-6;
/// Fewest `t` steps accepted by [`homotopy_check`].
pub const MIN_T_STEPS: usize = 16;
/// Radius of the ball around the base map.
pub const BALL_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error("sampled sup distance {sampled:.6} is not below the ball radius {BALL_RADIUS}")]
    DistanceTooLarge { sampled: f64, rigorous: Option<f64> },
    #[error("straight-line homotopy degenerates: min norm {min_norm:e} at t = {t}")]
    InvalidHomotopy { min_norm: f64, t: f64 },
    #[error("degree of the perturbed map is {found}, expected the base degree {expected}")]
    ConsistencyViolation { expected: i64, found: i64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

impl CertError {
    pub fn kind(&self) -> &'static str {
        match self {
            CertError::Degree(e) => e.kind(),
            CertError::DistanceTooLarge { .. } => "DistanceTooLarge",
            CertError::InvalidHomotopy { .. } => "InvalidHomotopy",
            CertError::ConsistencyViolation { .. } => "ConsistencyViolation",
            CertError::InvalidParams(_) => "InvalidParams",
        }
    }
}

impl From<GeometryError> for CertError {
    fn from(e: GeometryError) -> Self {
        CertError::Degree(e.into())
    }
}

impl From<ExprError> for CertError {
    fn from(e: ExprError) -> Self {
        CertError::Degree(e.into())
    }
}

/// `base^exp == value` with `exp ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerWitness {
    pub base: i64,
    pub exp: u32,
}

impl PowerWitness {
    /// Exact check in 128-bit arithmetic.
    pub fn holds_for(&self, d: i64) -> bool {
        self.exp >= 2 && exact_pow(self.base, self.exp) == Some(d as i128)
    }
}

fn exact_pow(base: i64, exp: u32) -> Option<i128> {
    let mut acc: i128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as i128)?;
        if acc.unsigned_abs() > i64::MIN.unsigned_abs() as u128 {
            return None;
        }
    }
    Some(acc)
}

/// Exponents that must be ruled out for `d` to be no perfect power: `2..=⌊log₂|d|⌋`,
/// odd only for negative `d`. Any `|k| ≥ 2` with a larger exponent overshoots `|d|`.
pub fn exponents_to_check(d: i64) -> Vec<u32> {
    let a = d.unsigned_abs();
    if a < 2 {
        return Vec::new();
    }
    let max = 63 - a.leading_zeros();
    (2..=max).filter(|n| d > 0 || n % 2 == 1).collect()
}

/// Integer `n`-th root of `a` when it is exact.
fn exact_root(a: u64, n: u32) -> Option<u64> {
    let guess = (a as f64).powf(1.0 / n as f64).round() as u64;
    let lo = guess.saturating_sub(1);
    (lo..=guess + 1).find(|&k| k.checked_pow(n) == Some(a))
}

/// Smallest-exponent witness that `d = kⁿ`, `n ≥ 2`, if one exists.
///
/// By convention `0 = 0²`, `1 = 1²` and `−1 = (−1)³`.
pub fn is_perfect_power(d: i64) -> Option<PowerWitness> {
    match d {
        0 => return Some(PowerWitness { base: 0, exp: 2 }),
        1 => return Some(PowerWitness { base: 1, exp: 2 }),
        -1 => return Some(PowerWitness { base: -1, exp: 3 }),
        _ => {}
    }
    let a = d.unsigned_abs();
    for n in exponents_to_check(d) {
        if let Some(k) = exact_root(a, n) {
            // n ≥ 2, so k < 2^32.
            let base = if d < 0 { -(k as i64) } else { k as i64 };
            return Some(PowerWitness { base, exp: n });
        }
    }
    None
}

/// Validity of `H(x, t) = normalize((1−t)f₀(x) + t·g(x))` on a sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyReport {
    pub valid: bool,
    pub min_norm: f64,
    pub argmin_x: SpherePoint,
    pub argmin_t: f64,
    pub resolution: usize,
    pub t_steps: usize,
}

#[derive(Serialize)]
struct HomotopyJson {
    valid: bool,
    min_norm: f64,
    argmin: ArgminJson,
    resolution: usize,
    t_steps: usize,
}

#[derive(Serialize)]
struct ArgminJson {
    x: Vec<f64>,
    t: f64,
}

impl HomotopyReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(HomotopyJson {
            valid: self.valid,
            min_norm: self.min_norm,
            argmin: ArgminJson {
                x: self.argmin_x.coords().to_vec(),
                t: self.argmin_t,
            },
            resolution: self.resolution,
            t_steps: self.t_steps,
        })
        .expect("plain data serializes")
    }
}

/// Sweeps `t ∈ {0, 1/t_steps, …, 1}` over `make_grid(dim, resolution)`.
pub fn homotopy_check(
    f0: &MapExpr,
    g: &MapExpr,
    resolution: usize,
    t_steps: usize,
) -> Result<HomotopyReport, CertError> {
    let (df, dg) = (f0.check()?, g.check()?);
    if df != dg {
        return Err(GeometryError::DimensionMismatch {
            left: df,
            right: dg,
        }
        .into());
    }
    if t_steps < MIN_T_STEPS {
        return Err(CertError::InvalidParams(format!(
            "t_steps {t_steps} is below {MIN_T_STEPS}"
        )));
    }
    let grid = make_grid(df, resolution)?;
    let per_node = grid
        .nodes()
        .par_iter()
        .map(|x| {
            let a = f0.evaluate(x)?.xyz();
            let b = g.evaluate(x)?.xyz();
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..=t_steps {
                let t = k as f64 / t_steps as f64;
                let s = 1.0 - t;
                let n = norm3([
                    s * a[0] + t * b[0],
                    s * a[1] + t * b[1],
                    s * a[2] + t * b[2],
                ]);
                if n < best.0 {
                    best = (n, t);
                }
            }
            Ok((best.0, best.1, *x))
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;

    // First minimum in grid order, for reproducible argmin.
    let (min_norm, argmin_t, argmin_x) = per_node
        .into_iter()
        .fold(
            None,
            |acc: Option<(f64, f64, SpherePoint)>, cur| match acc {
                Some(a) if a.0 <= cur.0 => Some(a),
                _ => Some(cur),
            },
        )
        .expect("grid is non-empty");
    Ok(HomotopyReport {
        valid: min_norm > HOMOTOPY_MIN_NORM,
        min_norm,
        argmin_x,
        argmin_t,
        resolution,
        t_steps,
    })
}

/// The exponents ruled out for a degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerCheck {
    pub checked_exponents: Vec<u32>,
}

/// Provenance of a ball certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallProvenance {
    /// Rendered base map `f₀`.
    pub base: String,
    pub sampled_distance: f64,
    pub radius: f64,
    /// Upper bound of the distance, present in rigorous mode.
    pub rigorous: Option<f64>,
    pub resolution: usize,
    pub homotopy_min_norm: f64,
    /// Degree of the subject computed directly, which must equal the base degree.
    pub consistency_degree: i64,
}

/// Proof data that `subject` is not `fⁿ` for any continuous `f` and `n ≥ 2`.
///
/// Without `ball` the degree is the subject's own; with it, the degree belongs
/// to the base map and transfers to the subject through the ball argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonIterateCertificate {
    pub subject: String,
    pub dim: Dim,
    pub degree: DegreeResult,
    pub power_check: PowerCheck,
    pub ball: Option<BallProvenance>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("degree {degree} is a perfect power: {witness:?}")]
    PerfectPower { degree: i64, witness: PowerWitness },
    #[error("checked exponents {found:?} do not cover {required:?}")]
    IncompleteCheck { required: Vec<u32>, found: Vec<u32> },
    #[error("ball distance {0} is not below the radius")]
    OutsideBall(f64),
    #[error("ball consistency degree {found} differs from {expected}")]
    Inconsistent { expected: i64, found: i64 },
}

impl NonIterateCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("certificate serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, AuditError> {
        serde_json::from_value(v.clone()).map_err(|e| AuditError::Malformed(e.to_string()))
    }

    /// Re-checks the certificate from its own fields: the degree is no perfect
    /// power, the exponent sweep covers `2..=⌊log₂|d|⌋`, and any ball claim is
    /// within radius and consistent.
    pub fn audit(&self) -> Result<(), AuditError> {
        let d = self.degree.value;
        if let Some(witness) = is_perfect_power(d) {
            return Err(AuditError::PerfectPower { degree: d, witness });
        }
        let required = exponents_to_check(d);
        let found = &self.power_check.checked_exponents;
        if !required.iter().all(|n| found.contains(n)) {
            return Err(AuditError::IncompleteCheck {
                required,
                found: found.clone(),
            });
        }
        if let Some(ball) = &self.ball {
            if !(ball.sampled_distance < ball.radius) || ball.radius > BALL_RADIUS {
                return Err(AuditError::OutsideBall(ball.sampled_distance));
            }
            if let Some(r) = ball.rigorous {
                if !(r < ball.radius) {
                    return Err(AuditError::OutsideBall(r));
                }
            }
            if ball.consistency_degree != d {
                return Err(AuditError::Inconsistent {
                    expected: d,
                    found: ball.consistency_degree,
                });
            }
        }
        Ok(())
    }
}

/// The obstruction is silent: the degree is a perfect power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub subject: String,
    pub dim: Dim,
    pub degree: DegreeResult,
    pub witness: PowerWitness,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertifyOutcome {
    Certificate(NonIterateCertificate),
    Refusal(Refusal),
}

impl CertifyOutcome {
    pub fn certificate(&self) -> Option<&NonIterateCertificate> {
        match self {
            CertifyOutcome::Certificate(c) => Some(c),
            CertifyOutcome::Refusal(_) => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CertifyOutcome::Certificate(c) => c.to_json(),
            CertifyOutcome::Refusal(r) => serde_json::to_value(r).expect("refusal serializes"),
        }
    }
}

/// Certifies that `e` is not an iterated map, or refuses with a power witness.
pub fn certify_not_iterate(e: &MapExpr, p: &DegreeParams) -> Result<CertifyOutcome, CertError> {
    let dim = e.check()?;
    let deg = degree::degree(e, p)?;
    Ok(outcome(e.to_string(), dim, deg, None))
}

fn outcome(
    subject: String,
    dim: Dim,
    degree: DegreeResult,
    ball: Option<BallProvenance>,
) -> CertifyOutcome {
    match is_perfect_power(degree.value) {
        Some(witness) => CertifyOutcome::Refusal(Refusal {
            subject,
            dim,
            degree,
            witness,
        }),
        None => CertifyOutcome::Certificate(NonIterateCertificate {
            subject,
            dim,
            power_check: PowerCheck {
                checked_exponents: exponents_to_check(degree.value),
            },
            degree,
            ball,
        }),
    }
}

/// Options for [`ball_certificate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallOptions {
    /// Grid resolution for the distance and homotopy sweeps.
    pub resolution: usize,
    pub t_steps: usize,
    /// Lipschitz constants `(L_f₀, L_g)`; when given the rigorous bound must be `< 1`.
    pub lipschitz: Option<(f64, f64)>,
}

impl BallOptions {
    pub fn new(resolution: usize) -> BallOptions {
        BallOptions {
            resolution,
            t_steps: MIN_T_STEPS,
            lipschitz: None,
        }
    }
}

/// Certifies `g` through the ball around `f0`.
///
/// The certificate's degree is `f0`'s: the argument never needs `deg g`. It is
/// still computed afterwards and must agree.
pub fn ball_certificate(
    f0: &MapExpr,
    g: &MapExpr,
    p: &DegreeParams,
    resolution: usize,
) -> Result<CertifyOutcome, CertError> {
    ball_certificate_with(f0, g, p, &BallOptions::new(resolution))
}

pub fn ball_certificate_with(
    f0: &MapExpr,
    g: &MapExpr,
    p: &DegreeParams,
    opts: &BallOptions,
) -> Result<CertifyOutcome, CertError> {
    let base_degree = degree::degree(f0, p)?;
    ball_certificate_from(f0, base_degree, g, p, opts)
}

/// [`ball_certificate_with`] for a base whose degree is already known, so
/// callers sweeping many `g` around one `f0` compute it once.
pub fn ball_certificate_from(
    f0: &MapExpr,
    base_degree: DegreeResult,
    g: &MapExpr,
    p: &DegreeParams,
    opts: &BallOptions,
) -> Result<CertifyOutcome, CertError> {
    let (df, dg) = (f0.check()?, g.check()?);
    if df != dg {
        return Err(GeometryError::DimensionMismatch {
            left: df,
            right: dg,
        }
        .into());
    }
    if let Some(witness) = is_perfect_power(base_degree.value) {
        return Ok(CertifyOutcome::Refusal(Refusal {
            subject: g.to_string(),
            dim: dg,
            degree: base_degree,
            witness,
        }));
    }

    let dist: DistanceEstimate = degree::sup_distance(f0, g, opts.resolution, opts.lipschitz)?;
    let outside =
        !(dist.sampled_max < BALL_RADIUS) || dist.rigorous.is_some_and(|r| !(r < BALL_RADIUS));
    if outside {
        return Err(CertError::DistanceTooLarge {
            sampled: dist.sampled_max,
            rigorous: dist.rigorous,
        });
    }

    let h = homotopy_check(f0, g, opts.resolution, opts.t_steps)?;
    if !h.valid {
        return Err(CertError::InvalidHomotopy {
            min_norm: h.min_norm,
            t: h.argmin_t,
        });
    }

    let own = degree::degree(g, p)?;
    if own.value != base_degree.value {
        return Err(CertError::ConsistencyViolation {
            expected: base_degree.value,
            found: own.value,
        });
    }

    let ball = BallProvenance {
        base: f0.to_string(),
        sampled_distance: dist.sampled_max,
        radius: BALL_RADIUS,
        rigorous: dist.rigorous,
        resolution: opts.resolution,
        homotopy_min_norm: h.min_norm,
        consistency_degree: own.value,
    };
    Ok(outcome(g.to_string(), dg, base_degree, Some(ball)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn p(s: &str) -> MapExpr {
        parse(s).unwrap()
    }

    /// Enumerates `kⁿ` directly.
    fn brute_force(d: i64) -> Option<(i64, u32)> {
        for n in 2..=6u32 {
            for k in -8i64..=8 {
                if k.pow(n) == d {
                    return Some((k, n));
                }
            }
        }
        None
    }

    #[test]
    fn perfect_power_examples() {
        assert_eq!(is_perfect_power(2), None);
        assert_eq!(is_perfect_power(4), Some(PowerWitness { base: 2, exp: 2 }));
        assert_eq!(
            is_perfect_power(-8),
            Some(PowerWitness { base: -2, exp: 3 })
        );
        assert_eq!(brute_force(-8), Some((-2, 3)));
        assert_eq!(is_perfect_power(-4), None);
        assert_eq!(brute_force(-4), None);
        assert_eq!(is_perfect_power(0), Some(PowerWitness { base: 0, exp: 2 }));
        assert_eq!(is_perfect_power(1), Some(PowerWitness { base: 1, exp: 2 }));
        assert_eq!(
            is_perfect_power(-1),
            Some(PowerWitness { base: -1, exp: 3 })
        );
        assert_eq!(is_perfect_power(64), Some(PowerWitness { base: 8, exp: 2 }));
        assert_eq!(
            is_perfect_power(-64),
            Some(PowerWitness { base: -4, exp: 3 })
        );
    }

    #[test]
    fn perfect_power_extremes() {
        assert_eq!(
            is_perfect_power(i64::MIN),
            Some(PowerWitness {
                base: -(1 << 21),
                exp: 3
            })
        );
        assert!(is_perfect_power(i64::MIN).unwrap().holds_for(i64::MIN));
        assert_eq!(is_perfect_power(i64::MAX), None);
        let big = 3_037_000_499i64 * 3_037_000_499;
        assert_eq!(
            is_perfect_power(big),
            Some(PowerWitness {
                base: 3_037_000_499,
                exp: 2
            })
        );
        assert_eq!(is_perfect_power(big + 1), None);
        assert_eq!(
            is_perfect_power(1 << 62),
            Some(PowerWitness {
                base: 1 << 31,
                exp: 2
            })
        );
    }

    #[test]
    fn exponent_ranges() {
        assert!(exponents_to_check(2).is_empty());
        assert_eq!(exponents_to_check(9), vec![2, 3]);
        assert_eq!(exponents_to_check(-40), vec![3, 5]);
    }

    #[test]
    fn homotopy_examples() {
        let f = p("(pow 2)");
        let h = homotopy_check(&f, &f, 1024, 16).unwrap();
        assert!(h.valid);
        assert!((h.min_norm - 1.0).abs() <= 1e-12);

        let h = homotopy_check(&p("(id 1)"), &p("(antipode 1)"), 1024, 16).unwrap();
        assert!(!h.valid);
        assert!(h.min_norm < 1e-3);
        assert_eq!(h.argmin_t, 0.5);

        let h = homotopy_check(&f, &p("(perturb 3 0.5 (pow 2))"), 1024, 16).unwrap();
        assert!(h.valid && h.min_norm > 0.25, "{h:?}");

        assert!(matches!(
            homotopy_check(&f, &f, 1024, 8),
            Err(CertError::InvalidParams(_))
        ));
        assert!(matches!(
            homotopy_check(&f, &p("(id 2)"), 64, 16),
            Err(CertError::Degree(DegreeError::Geometry(
                GeometryError::DimensionMismatch { .. }
            )))
        ));
    }

    #[test]
    fn certify_examples() {
        let params = DegreeParams::default();
        let c = certify_not_iterate(&p("(pow 2)"), &params).unwrap();
        let cert = c.certificate().expect("certificate");
        assert_eq!(cert.degree.value, 2);
        assert!(cert.audit().is_ok());

        match certify_not_iterate(&p("(pow 4)"), &params).unwrap() {
            CertifyOutcome::Refusal(r) => assert_eq!(r.witness, PowerWitness { base: 2, exp: 2 }),
            other => panic!("{other:?}"),
        }

        let c = certify_not_iterate(&p("(susp (pow 5))"), &params).unwrap();
        let cert = c.certificate().expect("certificate");
        assert_eq!((cert.degree.value, cert.dim), (5, Dim::Two));
        assert_eq!(cert.power_check.checked_exponents, vec![2]);
    }

    #[test]
    fn ball_examples() {
        let params = DegreeParams::default();
        let f0 = p("(pow 2)");
        let g = p("(perturb 11 0.45 (pow 2))");
        let c = ball_certificate(&f0, &g, &params, 1024).unwrap();
        let cert = c.certificate().expect("certificate");
        let ball = cert.ball.as_ref().unwrap();
        assert_eq!(ball.consistency_degree, 2);
        assert!(ball.sampled_distance < 1.0);
        assert_eq!(cert.subject, g.to_string());
        assert!(cert.audit().is_ok());

        match ball_certificate(&p("(pow 4)"), &g, &params, 1024).unwrap() {
            CertifyOutcome::Refusal(r) => assert_eq!(r.witness, PowerWitness { base: 2, exp: 2 }),
            other => panic!("{other:?}"),
        }

        let err = ball_certificate(&f0, &p("(antipode 1)"), &params, 1024).unwrap_err();
        assert!(matches!(err, CertError::DistanceTooLarge { sampled, .. } if sampled > 1.9));
    }

    #[test]
    fn rigorous_mode_needs_bound_below_radius() {
        let params = DegreeParams::default();
        let f0 = p("(pow 2)");
        let g = p("(rot 0.05)");
        let g = MapExpr::compose(g, f0.clone()).unwrap();
        let mut opts = BallOptions::new(1024);
        opts.lipschitz = Some((2.0, 2.0));
        let c = ball_certificate_with(&f0, &g, &params, &opts).unwrap();
        let ball = c.certificate().unwrap().ball.clone().unwrap();
        assert!(ball.rigorous.unwrap() < 1.0);

        opts.lipschitz = Some((200.0, 200.0));
        assert!(matches!(
            ball_certificate_with(&f0, &g, &params, &opts),
            Err(CertError::DistanceTooLarge { .. })
        ));
    }

    #[test]
    fn audit_rejects_tampering() {
        let params = DegreeParams::default();
        let c = certify_not_iterate(&p("(pow 12)"), &params).unwrap();
        let mut cert = c.certificate().unwrap().clone();
        assert!(cert.audit().is_ok());

        let mut forged = cert.clone();
        forged.degree.value = 9;
        assert!(matches!(
            forged.audit(),
            Err(AuditError::PerfectPower { .. })
        ));

        cert.power_check.checked_exponents.pop();
        assert!(matches!(
            cert.audit(),
            Err(AuditError::IncompleteCheck { .. })
        ));
    }

    #[test]
    fn certificate_json_shape() {
        let params = DegreeParams::default();
        let c = certify_not_iterate(&p("(pow -2)"), &params).unwrap();
        let v = c.to_json();
        assert_eq!(v["subject"], "(pow -2)");
        assert_eq!(v["dim"], 1);
        assert_eq!(v["degree"]["value"], -2);
        assert_eq!(v["degree"]["method"], "symbolic");
        assert!(v["power_check"]["checked_exponents"].is_array());
        assert!(v["ball"].is_null());
        let back = NonIterateCertificate::from_json(&v).unwrap();
        assert_eq!(&back, c.certificate().unwrap());
    }
}
