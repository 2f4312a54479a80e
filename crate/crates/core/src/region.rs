//! The unit hyperboloid `B^2 - 4AC = 1`, the box-like region `K` on it, and
//! the certified ball patch around the base point `P0 = (2/5, -2/5, -21/40)`.
//!
//! A primitive form `[a, b, c]` of discriminant `d > 0` sits on the surface
//! after scaling by `1/sqrt(d)`. Membership of that scaled point in `K`
//! is decided exactly on integers: `(a - c)^2 < d`, `b^2 < d`, `(a + c)^2 < d`.
//!
//! The patch is an open Euclidean ball `|P - P0| < r` intersected with the
//! surface. [`certify_patch`] checks, for `M` in `{I, T, U}` and each
//! functional `l` in `{A - C, B, A + C}`, the bound
//! `|l(M P0)| + r * |l o M|_2 < 1`, which places the closed ball and both of
//! its images under `T` and `U` inside `K`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{isqrt, square};
use crate::error::{Error, Result};
use crate::form::{IntForm, Move};

/// Exact rational used for patch data.
pub type Rational = Ratio<i64>;

/// Points whose surface defect exceeds this are rejected by [`SurfacePoint::new`].
pub const SURFACE_TOLERANCE: f64 = 1e-9;

/// Relative shrink applied to the radius in floating-point ball tests, so the
/// test can only err on the side of rejecting.
pub const PATCH_GUARD: f64 = 1e-6;

/// The default certified radius, 1/40.
pub fn default_radius() -> Rational {
    Rational::new(1, 40)
}

/// Parses `p/q` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidInput(format!("not a rational p/q: {s:?}"));
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (
            i64::from_str(p.trim()).map_err(|_| bad())?,
            i64::from_str(q.trim()).map_err(|_| bad())?,
        ),
        None => (i64::from_str(s).map_err(|_| bad())?, 1),
    };
    if q == 0 {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

fn big(q: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SurfacePoint {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let defect = b * b - 4.0 * a * c - 1.0;
        if defect.is_nan() || defect.abs() > SURFACE_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "({a}, {b}, {c}) is off the surface by {defect:e}"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// The scaled point `(a, b, c) / sqrt(d)`.
    pub fn from_form(f: &IntForm, d: i64) -> Result<Self> {
        if d <= 0 {
            return Err(Error::InvalidInput(format!("d must be positive, got {d}")));
        }
        let [a, b, c] = scaled(f, d);
        Self::new(a, b, c)
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

#[inline]
pub(crate) fn scaled(f: &IntForm, d: i64) -> [f64; 3] {
    let s = (d as f64).sqrt();
    [f.a as f64 / s, f.b as f64 / s, f.c as f64 / s]
}

/// The three linear functionals cutting out `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Functional {
    AMinusC,
    B,
    APlusC,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Functional::AMinusC, Functional::B, Functional::APlusC];

    pub const fn coefficients(self) -> [i64; 3] {
        match self {
            Functional::AMinusC => [1, 0, -1],
            Functional::B => [0, 1, 0],
            Functional::APlusC => [1, 0, 1],
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Functional::AMinusC => "A-C",
            Functional::B => "B",
            Functional::APlusC => "A+C",
        }
    }

    /// Coefficients of `l o M`.
    pub fn compose(self, mv: Move) -> [i64; 3] {
        let l = self.coefficients();
        let m = mv.matrix();
        let mut out = [0; 3];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|i| l[i] * m[i][j]).sum();
        }
        out
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `P0 = (2/5, -2/5, -21/40)`.
pub fn base_point() -> [Rational; 3] {
    [
        Rational::new(2, 5),
        Rational::new(-2, 5),
        Rational::new(-21, 40),
    ]
}

pub fn apply_move(mv: Move, p: &[Rational; 3]) -> [Rational; 3] {
    let m = mv.matrix();
    let row = |r: [i64; 3]| {
        p.iter()
            .zip(r)
            .fold(Rational::zero(), |acc, (x, k)| acc + *x * k)
    };
    [row(m[0]), row(m[1]), row(m[2])]
}

/// `(|A - C|, |B|, |A + C|)` at a rational point.
pub fn k_functionals(p: &[Rational; 3]) -> [Rational; 3] {
    let [a, b, c] = *p;
    [(a - c).abs(), b.abs(), (a + c).abs()]
}

/// Exact `B^2 - 4AC` of a rational point.
pub fn surface_value(p: &[Rational; 3]) -> BigRational {
    let [a, b, c] = p.each_ref().map(big);
    &b * &b - BigRational::from_integer(4.into()) * a * c
}

fn check_positive(d: i64) -> Result<()> {
    if d <= 0 {
        Err(Error::InvalidInput(format!("d must be positive, got {d}")))
    } else {
        Ok(())
    }
}

fn check_disc(f: &IntForm, d: i64) -> Result<()> {
    check_positive(d)?;
    if f.discriminant()? != d as i128 {
        return Err(Error::InvalidInput(format!(
            "{f} does not have discriminant {d}"
        )));
    }
    Ok(())
}

/// Whether `(a, b, c)/sqrt(d)` lies in `K`, decided in integers.
pub fn in_k_exact(f: &IntForm, d: i64) -> Result<bool> {
    check_disc(f, d)?;
    Ok(in_k_unchecked(f, d))
}

#[inline]
pub(crate) fn in_k_unchecked(f: &IntForm, d: i64) -> bool {
    let d = d as i128;
    let (a, c) = (f.a as i128, f.c as i128);
    (a - c) * (a - c) < d && square(f.b) < d && (a + c) * (a + c) < d
}

/// An open ball on the surface with rational center and radius.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPatch {
    center: [Rational; 3],
    radius: Rational,
    center_f: [f64; 3],
    guarded_radius_sq: f64,
}

impl BallPatch {
    pub fn new(center: [Rational; 3], radius: Rational) -> Result<Self> {
        if radius <= Rational::zero() {
            return Err(Error::InvalidInput(format!(
                "patch radius must be positive, got {radius}"
            )));
        }
        if !surface_value(&center).is_one() {
            return Err(Error::InvalidInput(format!(
                "patch center ({}, {}, {}) is not on B^2 - 4AC = 1",
                center[0], center[1], center[2]
            )));
        }
        let guarded = to_f64(&radius) * (1.0 - PATCH_GUARD);
        Ok(Self {
            center,
            radius,
            center_f: center.each_ref().map(to_f64),
            guarded_radius_sq: guarded * guarded,
        })
    }

    /// Ball of the given radius around the base point.
    pub fn around_base_point(radius: Rational) -> Result<Self> {
        Self::new(base_point(), radius)
    }

    pub fn center(&self) -> &[Rational; 3] {
        &self.center
    }

    pub fn radius(&self) -> Rational {
        self.radius
    }

    pub fn center_f64(&self) -> [f64; 3] {
        self.center_f
    }

    pub fn radius_f64(&self) -> f64 {
        to_f64(&self.radius)
    }

    /// Guard-banded floating test: true only if the distance to the center is
    /// below `r * (1 - 1e-6)`.
    #[inline]
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        let d2: f64 = p
            .iter()
            .zip(&self.center_f)
            .map(|(x, c)| (x - c) * (x - c))
            .sum();
        d2 < self.guarded_radius_sq
    }

    /// The same guard-banded test evaluated in exact rationals.
    pub fn contains_exact(&self, p: &[Rational; 3]) -> bool {
        let d2 = p
            .iter()
            .zip(&self.center)
            .map(|(x, c)| {
                let t = big(x) - big(c);
                &t * &t
            })
            .fold(BigRational::zero(), |acc, t| acc + t);
        let shrink = BigRational::new(999_999.into(), 1_000_000.into());
        let r = big(&self.radius) * shrink;
        d2 < &r * &r
    }

    /// Coefficient ranges `(lo, hi)` per coordinate, for the scaled copy of
    /// the ball at discriminant `d`. Padded by one unit.
    pub(crate) fn coefficient_box(&self, d: i64) -> [(i64, i64); 3] {
        let s = (d as f64).sqrt();
        let r = self.radius_f64();
        self.center_f.map(|c| {
            let lo = ((c - r) * s).floor() as i64 - 1;
            let hi = ((c + r) * s).ceil() as i64 + 1;
            (lo, hi)
        })
    }
}

/// Guard-banded membership of `(a, b, c)/sqrt(d)` in the patch.
pub fn in_patch(f: &IntForm, d: i64, patch: &BallPatch) -> Result<bool> {
    check_disc(f, d)?;
    Ok(patch.contains(&scaled(f, d)))
}

/// One `(map, functional)` line of a certification.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationRow {
    pub map: Move,
    pub functional: Functional,
    /// `l(M P0)`, exact.
    #[serde(serialize_with = "ser_rational")]
    pub center_value: Rational,
    /// `|l o M|_2^2`, an integer.
    pub norm_squared: i64,
    pub norm: f64,
    /// Rigorous lower bound on `1 - |l(M P0)| - r |l o M|_2`.
    #[serde(skip)]
    pub slack_lower_bound: BigRational,
    pub slack: f64,
    pub pass: bool,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    #[serde(serialize_with = "ser_rational")]
    pub radius: Rational,
    pub rows: Vec<CertificationRow>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst(&self) -> &CertificationRow {
        self.rows
            .iter()
            .min_by(|x, y| x.slack_lower_bound.cmp(&y.slack_lower_bound))
            .expect("nine rows")
    }
}

const SQRT_SCALE: i128 = 1_000_000_000_000;

/// Rational upper bound on `sqrt(k)` within `1e-12`.
fn sqrt_upper(k: i64) -> BigRational {
    let k = k as i128;
    let mut q = isqrt(k * SQRT_SCALE * SQRT_SCALE);
    if q * q < k * SQRT_SCALE * SQRT_SCALE {
        q += 1;
    }
    BigRational::new(BigInt::from(q), BigInt::from(SQRT_SCALE))
}

/// Checks that the closed ball of `radius` around `P0` and its `T`, `U`
/// images lie inside `K`.
pub fn certify_patch(radius: Rational) -> Result<CertificationReport> {
    certify_ball(&base_point(), radius)
}

pub(crate) fn certify_ball(center: &[Rational; 3], radius: Rational) -> Result<CertificationReport> {
    if radius <= Rational::zero() {
        return Err(Error::InvalidInput(format!(
            "certification radius must be positive, got {radius}"
        )));
    }
    let r = big(&radius);
    let mut rows = Vec::with_capacity(9);
    for mv in Move::ALL {
        let image = apply_move(mv, center);
        for func in Functional::ALL {
            let l = func.coefficients();
            let center_value = image
                .iter()
                .zip(l)
                .fold(Rational::zero(), |acc, (x, k)| acc + *x * k);
            let composed = func.compose(mv);
            let norm_squared: i64 = composed.iter().map(|k| k * k).sum();
            let slack_lower_bound =
                BigRational::one() - big(&center_value).abs() - &r * sqrt_upper(norm_squared);
            let norm = (norm_squared as f64).sqrt();
            rows.push(CertificationRow {
                map: mv,
                functional: func,
                center_value,
                norm_squared,
                norm,
                slack: slack_lower_bound.to_f64().unwrap_or(f64::NAN),
                pass: slack_lower_bound.is_positive(),
                slack_lower_bound,
            });
        }
    }
    Ok(CertificationReport { radius, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d)
    }

    #[test]
    fn base_point_on_surface() {
        assert!(surface_value(&base_point()).is_one());
    }

    #[test]
    fn functional_values_at_base_point_and_images() {
        let p0 = base_point();
        assert_eq!(k_functionals(&p0), [q(37, 40), q(2, 5), q(1, 8)]);
        let tp = apply_move(Move::T, &p0);
        assert_eq!(tp, [q(2, 5), q(2, 5), q(-21, 40)]);
        assert_eq!(k_functionals(&tp), [q(37, 40), q(2, 5), q(1, 8)]);
        let up = apply_move(Move::U, &p0);
        assert_eq!(up, [q(-21, 40), q(-13, 20), q(11, 40)]);
        assert_eq!(k_functionals(&up), [q(4, 5), q(13, 20), q(1, 4)]);
    }

    #[test]
    fn k_membership_examples() {
        assert!(!in_k_exact(&IntForm::new(3, 2, -1), 16).unwrap());
        assert!(in_k_exact(&IntForm::new(1, 2, -1), 8).unwrap());
        assert!(!in_k_exact(&IntForm::new(0, 1, 0), 1).unwrap());
        assert!(in_k_exact(&IntForm::new(1, 2, -1), 0).is_err());
        assert!(in_k_exact(&IntForm::new(1, 2, -1), 12).is_err());
    }

    #[test]
    fn k_is_s_symmetric() {
        for b in -20i64..=20 {
            for a in -20i64..=20 {
                for c in -20i64..=20 {
                    let f = IntForm::new(a, b, c);
                    let d = f.discriminant().unwrap();
                    if d <= 0 {
                        continue;
                    }
                    let d = d as i64;
                    assert_eq!(
                        in_k_exact(&f, d).unwrap(),
                        in_k_exact(&f.apply_s().unwrap(), d).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn float_k_agrees_with_exact_away_from_boundary() {
        for b in -30i64..=30 {
            for a in -30i64..=30 {
                for c in -30i64..=30 {
                    let f = IntForm::new(a, b, c);
                    let d = f.discriminant().unwrap();
                    if d <= 0 {
                        continue;
                    }
                    let d = d as i64;
                    let [x, y, z] = scaled(&f, d);
                    let margins = [(x - z).abs(), y.abs(), (x + z).abs()].map(|v| 1.0 - v);
                    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
                    if min_margin.abs() > 1e-6 {
                        assert_eq!(min_margin > 0.0, in_k_exact(&f, d).unwrap(), "{f}");
                    }
                }
            }
        }
    }

    #[test]
    fn patch_membership() {
        let patch = BallPatch::around_base_point(q(1, 40)).unwrap();
        assert!(patch.contains_exact(&base_point()));
        let tiny = BallPatch::around_base_point(q(1, 1_000_000_000)).unwrap();
        assert!(tiny.contains_exact(&base_point()));

        // A surface point at distance exactly 1/40 from P0, along B.
        // Moving B by 1/40 leaves the surface, so test the ball predicate directly.
        let [a, b, c] = base_point();
        let edge = [a, b + q(1, 40), c];
        assert!(!patch.contains_exact(&edge));
        let edge_f = edge.each_ref().map(to_f64);
        assert!(!patch.contains(&edge_f));

        assert!(!in_patch(&IntForm::new(1, 2, -1), 8, &patch).unwrap());
        assert!(in_patch(&IntForm::new(1, 2, -1), -8, &patch).is_err());
    }

    #[test]
    fn patch_constructor_checks() {
        assert!(BallPatch::around_base_point(q(0, 1)).is_err());
        assert!(BallPatch::around_base_point(q(-1, 40)).is_err());
        assert!(BallPatch::new([q(1, 1), q(0, 1), q(0, 1)], q(1, 40)).is_err());
        assert!(BallPatch::new([q(0, 1), q(1, 1), q(0, 1)], q(1, 40)).is_ok());
    }

    #[test]
    fn surface_point_tolerance() {
        assert!(SurfacePoint::new(0.0, 1.0, 0.0).is_ok());
        assert!(SurfacePoint::new(0.0, 1.0 + 1e-8, 0.0).is_err());
        assert!(SurfacePoint::new(f64::NAN, 1.0, 0.0).is_err());
        let p = SurfacePoint::from_form(&IntForm::new(123_457, 1_000_001, -97_531), 1_000_001i64.pow(2) + 4 * 123_457 * 97_531).unwrap();
        assert!(p.b > 0.0);
    }

    #[test]
    fn norms_of_composed_functionals() {
        let mut norms: Vec<i64> = Move::ALL
            .iter()
            .flat_map(|&m| Functional::ALL.map(|l| l.compose(m).iter().map(|k| k * k).sum::<i64>()))
            .collect();
        norms.sort();
        assert_eq!(norms, vec![1, 2, 2, 2, 2, 5, 5, 6, 6]);
    }

    #[test]
    fn certification() {
        let rep = certify_patch(q(1, 40)).unwrap();
        assert_eq!(rep.rows.len(), 9);
        assert!(rep.passed());
        // Worst row: 1 - 37/40 - sqrt(2)/40.
        let worst = rep.worst();
        let expected = (3.0 - 2f64.sqrt()) / 40.0;
        assert!((worst.slack - expected).abs() < 1e-11);

        let rep = certify_patch(q(1, 10)).unwrap();
        assert!(!rep.passed());
        assert!(certify_patch(q(0, 1)).is_err());
    }

    #[test]
    fn sqrt_upper_bounds() {
        for k in [1i64, 2, 5, 6, 1_000_003] {
            let u = sqrt_upper(k);
            assert!(&u * &u >= BigRational::from_integer(k.into()));
            assert!(u.to_f64().unwrap() - (k as f64).sqrt() < 1.1e-12);
        }
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/40").unwrap(), q(1, 40));
        assert_eq!(parse_rational(" 3 ").unwrap(), q(3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
