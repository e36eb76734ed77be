//! Command runners behind the `degcert` binary.
//!
//! Every runner returns [`RunReport`]s, one per input expression and in input
//! order; the binary prints them as JSON lines.

use std::time::Instant;

use degcert_core::certificates::{ball_certificate_from, BallOptions, CertError, MIN_T_STEPS};
use degcert_core::degree::default_sample_resolution;
use degcert_core::seed::derive_seed;
use degcert_core::{
    certify_not_iterate, degree, homotopy_check, parse, sup_distance, CertifyOutcome, DegreeError,
    DegreeParams, Dim, ExprError, MapExpr,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Ok,
    /// The degree obstruction is silent (certify and experiment only).
    Refused,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

/// One line of output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Input line number (1-based), or sample index for `experiment`.
    pub line: usize,
    pub input: String,
    pub command: &'static str,
    pub outcome: Outcome,
    pub error: Option<ErrorInfo>,
    pub payload: Option<Value>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// The report without its timing, for byte-for-byte comparisons.
    pub fn deterministic_part(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("wall_ms");
        v.to_string()
    }
}

trait Failure {
    fn info(&self) -> ErrorInfo;
}

impl Failure for ExprError {
    fn info(&self) -> ErrorInfo {
        ErrorInfo {
            kind: self.kind().into(),
            message: self.to_string(),
        }
    }
}

impl Failure for DegreeError {
    fn info(&self) -> ErrorInfo {
        ErrorInfo {
            kind: self.kind().into(),
            message: self.to_string(),
        }
    }
}

impl Failure for CertError {
    fn info(&self) -> ErrorInfo {
        ErrorInfo {
            kind: self.kind().into(),
            message: self.to_string(),
        }
    }
}

fn timed(
    line: usize,
    input: &str,
    command: &'static str,
    run: impl FnOnce() -> Result<(Outcome, Value), ErrorInfo>,
) -> RunReport {
    let start = Instant::now();
    let result = run();
    let wall_ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
    let (outcome, error, payload) = match result {
        Ok((o, v)) => (o, None, Some(v)),
        Err(e) => (Outcome::Error, Some(e), None),
    };
    RunReport {
        line,
        input: input.to_string(),
        command,
        outcome,
        error,
        payload,
        wall_ms,
    }
}

fn parse_one(text: &str) -> Result<MapExpr, ErrorInfo> {
    parse(text).map_err(|e| e.info())
}

fn certify_payload(o: &CertifyOutcome) -> (Outcome, Value) {
    match o {
        CertifyOutcome::Certificate(_) => (Outcome::Ok, o.to_json()),
        CertifyOutcome::Refusal(_) => (Outcome::Refused, o.to_json()),
    }
}

/// An expression with its source line.
pub type Input = (usize, String);

/// Splits batch text into inputs (comments and blank lines dropped).
pub fn inputs_from_text(text: &str) -> Vec<Input> {
    degcert_core::parse_batch(text)
        .into_iter()
        .map(|(n, s)| (n, s.to_string()))
        .collect()
}

pub fn run_degree(inputs: &[Input], params: &DegreeParams) -> Vec<RunReport> {
    inputs
        .par_iter()
        .map(|(line, text)| {
            timed(*line, text, "degree", || {
                let e = parse_one(text)?;
                let r = degree(&e, params).map_err(|e| e.info())?;
                Ok((
                    Outcome::Ok,
                    serde_json::to_value(r).expect("degree serializes"),
                ))
            })
        })
        .collect()
}

/// Ball mode for `certify`: certify each input through the ball around `base`.
#[derive(Debug, Clone)]
pub struct BallMode {
    pub base: MapExpr,
    pub options: BallOptions,
}

pub fn run_certify(
    inputs: &[Input],
    params: &DegreeParams,
    ball: Option<&BallMode>,
) -> Vec<RunReport> {
    // The base degree is shared by every line.
    let base_degree = ball.map(|b| degree(&b.base, params));
    inputs
        .par_iter()
        .map(|(line, text)| {
            timed(*line, text, "certify", || {
                let e = parse_one(text)?;
                let o = match (ball, &base_degree) {
                    (Some(b), Some(d)) => {
                        let d = d.clone().map_err(|e| e.info())?;
                        ball_certificate_from(&b.base, d, &e, params, &b.options)
                    }
                    _ => certify_not_iterate(&e, params),
                }
                .map_err(|e| e.info())?;
                Ok(certify_payload(&o))
            })
        })
        .collect()
}

pub fn run_distance(
    a: &str,
    b: &str,
    resolution: Option<usize>,
    lipschitz: Option<(f64, f64)>,
) -> RunReport {
    let input = format!("{a} {b}");
    timed(1, &input, "distance", || {
        let (f, g) = (parse_one(a)?, parse_one(b)?);
        let n = resolution.unwrap_or_else(|| default_sample_resolution(f.dimension()));
        let d = sup_distance(&f, &g, n, lipschitz).map_err(|e| e.info())?;
        Ok((
            Outcome::Ok,
            serde_json::to_value(d).expect("distance serializes"),
        ))
    })
}

pub fn run_homotopy(a: &str, b: &str, resolution: Option<usize>, t_steps: usize) -> RunReport {
    let input = format!("{a} {b}");
    timed(1, &input, "homotopy", || {
        let (f, g) = (parse_one(a)?, parse_one(b)?);
        let n = resolution.unwrap_or_else(|| default_sample_resolution(f.dimension()));
        let h = homotopy_check(&f, &g, n, t_steps).map_err(|e| e.info())?;
        Ok((Outcome::Ok, h.to_json()))
    })
}

/// Random perturbations of the degree-2 base map, each certified through the ball.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentConfig {
    pub dim: Dim,
    pub count: usize,
    pub epsilon_max: f64,
    pub seed: u64,
    pub ball_resolution: Option<usize>,
    pub t_steps: usize,
}

impl ExperimentConfig {
    pub fn new(dim: Dim, count: usize, epsilon_max: f64, seed: u64) -> Self {
        ExperimentConfig {
            dim,
            count,
            epsilon_max,
            seed,
            ball_resolution: None,
            t_steps: MIN_T_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub count: usize,
    pub issued: usize,
    pub refused: usize,
    pub errors: usize,
}

impl Summary {
    pub fn of(command: &'static str, reports: &[RunReport]) -> Summary {
        let count = |o| reports.iter().filter(|r| r.outcome == o).count();
        Summary {
            command,
            count: reports.len(),
            issued: count(Outcome::Ok),
            refused: count(Outcome::Refused),
            errors: count(Outcome::Error),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "summary": self }).to_string()
    }
}

/// `z ↦ z²` on S¹, its suspension on S².
pub fn degree_two_base(dim: Dim) -> MapExpr {
    match dim {
        Dim::One => MapExpr::pow(2),
        Dim::Two => MapExpr::susp(MapExpr::pow(2)).expect("pow is a circle map"),
    }
}

/// Perturbation seed and size of sample `index`, drawn from a generator seeded
/// with `derive_seed(master, index)`.
pub fn experiment_sample(master: u64, index: u64, epsilon_max: f64) -> (u64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, index));
    let seed = rng.random::<u64>();
    let eps = if epsilon_max > 0.0 {
        rng.random_range(0.0..=epsilon_max)
    } else {
        0.0
    };
    (seed, eps)
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    params: &DegreeParams,
) -> Result<(Vec<RunReport>, Summary), String> {
    if cfg.count == 0 {
        return Err("count must be at least 1".into());
    }
    if !(0.0..1.0).contains(&cfg.epsilon_max) {
        return Err(format!("epsilon-max {} outside [0, 1)", cfg.epsilon_max));
    }
    let base = degree_two_base(cfg.dim);
    let options = BallOptions {
        resolution: cfg
            .ball_resolution
            .unwrap_or_else(|| default_sample_resolution(cfg.dim)),
        t_steps: cfg.t_steps,
        lipschitz: None,
    };
    let base_degree = degree(&base, params).map_err(|e| format!("base map: {e}"))?;
    let reports: Vec<RunReport> = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let (seed, eps) = experiment_sample(cfg.seed, i as u64, cfg.epsilon_max);
            let g = MapExpr::perturb(seed, eps, base.clone()).expect("eps < 1");
            timed(i + 1, &g.to_string(), "experiment", || {
                let o = ball_certificate_from(&base, base_degree, &g, params, &options)
                    .map_err(|e| e.info())?;
                Ok(certify_payload(&o))
            })
        })
        .collect();
    let summary = Summary::of("experiment", &reports);
    Ok((reports, summary))
}
