//! Exact-arithmetic toolkit for bounded representations
//! `n = x^2 + y^2 - z^2` with `max(x^2, y^2, z^2) <= n`, built from primitive
//! binary quadratic forms of discriminant `4n` that land in a certified patch
//! of the hyperboloid `B^2 - 4AC = 1`.

mod arith;
pub mod class;
pub mod dictionary;
pub mod enumerate;
pub mod error;
pub mod form;
pub mod measure;
pub mod pipeline;
pub mod region;

pub use arith::{ceil_sqrt, gcd, gcd3, is_square, isqrt};
pub use class::{class_data, class_number, cycles, fundamental_automorph, Automorph, ClassData};
pub use dictionary::{form_to_triple, triple_to_form, verify_bounded, Triple};
pub use enumerate::{enumerate_forms, lambda_count, EnumWindow, FormIter, LambdaCount, Region};
pub use error::{Error, Result};
pub use form::{IntForm, Move, ParityFixOutcome};
pub use measure::{measure_in_chart, measure_of, Chart, MeasureEstimate};
pub use pipeline::{brute_force_oracle, represent, Outcome, Path, RepresentationResult, Solver};
pub use region::{
    base_point, certify_patch, in_k_exact, in_patch, BallPatch, CertificationReport,
    CertificationRow, Functional, Rational, SurfacePoint,
};
