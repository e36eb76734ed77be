//! Brouwer degree of continuous self-maps of the circle and the 2-sphere,
//! and certificates that a map (or a whole sup-metric ball around it) contains
//! no iterated maps `f^n`, `n >= 2`.
//!
//! The crate is organised bottom-up:
//!
//! * [`sphere`]: points on S¹/S², normalization, tangent frames, sample grids.
//! * [`dsl`]: the s-expression language of maps, evaluation and symbolic degree.
//! * [`degree`]: winding-number and area-form quadrature degree, sup distance.
//! * [`certificates`]: perfect powers, homotopy validity, non-iterate certificates.
//! * [`seed`]: deterministic seed derivation shared by samplers.

// Bounds are checked as `!(x < bound)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod degree;
pub mod dsl;
pub mod seed;
pub mod sphere;

pub use certificates::{
    ball_certificate, ball_certificate_from, ball_certificate_with, certify_not_iterate,
    exponents_to_check, homotopy_check, is_perfect_power, AuditError, BallOptions, BallProvenance,
    CertError, CertifyOutcome, HomotopyReport, NonIterateCertificate, PowerCheck, PowerWitness,
    Refusal,
};
pub use degree::{
    default_sample_resolution, degree, degree_numeric, degree_quadrature, degree_winding,
    sup_distance, DegreeError, DegreeMethod, DegreeParams, DegreeResult, DistanceEstimate,
    Resolution,
};
pub use dsl::{parse, parse_batch, ExprError, MapExpr, PerturbationField};
pub use sphere::{Dim, GeometryError, SampleGrid, SpherePoint, TangentFrame};
