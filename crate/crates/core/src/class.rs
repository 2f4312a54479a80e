//! Reduction theory for indefinite forms: reduced forms, their cycles under
//! the reduction operator, the class number, and the fundamental automorph.
//!
//! A form `[a, b, c]` of non-square discriminant `d > 0` is reduced when
//! `0 < b < sqrt(d)` and `sqrt(d) - b < 2|a| < sqrt(d) + b`. The reduction
//! operator sends `[a, b, c]` to `[c, r, (r^2 - d) / 4c]`, where `r` is the
//! unique integer with `r = -b (mod 2|c|)` and `sqrt(d) - 2|c| < r < sqrt(d)`.
//! It permutes the reduced forms, and its cycles are exactly the proper
//! equivalence classes.
//!
//! Each step is the unimodular substitution `(u, v) -> (-v, u + k v)` with
//! `k = (r + b) / 2c`. Multiplying the step matrices once around a cycle gives
//! the generator `[[(t - bu)/2, -cu], [au, (t + bu)/2]]` of the proper
//! automorphism group, with `t^2 - d u^2 = 4`.
//!
//! The total geodesic length `h * 2 * log((t + u sqrt(d)) / 2)` stands in for
//! the volume of the closed orbits up to a global constant.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{gcd3, is_square, isqrt};
use crate::error::{Error, Result};
use crate::form::IntForm;

/// Above this `u` the automorph search switches from trial `u = 1, 2, ...`
/// to the reduction cycle.
pub const AUTOMORPH_BRUTE_LIMIT: u64 = 1_000_000;

pub fn check_discriminant(d: i64) -> Result<()> {
    if d <= 0 {
        return Err(Error::InvalidDiscriminant {
            d: d as i128,
            reason: "must be positive",
        });
    }
    if is_square(d as i128) {
        return Err(Error::InvalidDiscriminant {
            d: d as i128,
            reason: "must not be a perfect square",
        });
    }
    if !matches!(d % 4, 0 | 1) {
        return Err(Error::InvalidDiscriminant {
            d: d as i128,
            reason: "must be 0 or 1 mod 4",
        });
    }
    Ok(())
}

/// The reduction test, with `s = floor(sqrt(d))` and `d` non-square.
fn reduced_with(f: &IntForm, d: i64, s: i64) -> bool {
    let (a, b) = (f.a.unsigned_abs() as i128, f.b as i128);
    let d = d as i128;
    if b <= 0 || b > s as i128 {
        return false;
    }
    let lower = (2 * a + b) * (2 * a + b) > d;
    let upper = 2 * a <= b || (2 * a - b) * (2 * a - b) < d;
    lower && upper
}

pub fn is_reduced(f: &IntForm, d: i64) -> bool {
    d > 0 && !is_square(d as i128) && reduced_with(f, d, isqrt(d as i128) as i64)
}

/// All primitive reduced forms of discriminant `d`, ordered by `(b, a)`.
pub fn reduced_forms(d: i64) -> Result<Vec<IntForm>> {
    check_discriminant(d)?;
    let s = isqrt(d as i128) as i64;
    let mut out = Vec::new();
    let mut b = if d % 2 == 0 { 2 } else { 1 };
    while b <= s {
        // ac = (b^2 - d)/4 < 0
        let m = (b * b - d) / 4;
        let abs_m = m.unsigned_abs();
        let root = isqrt(abs_m as i128) as u64;
        let mut row = Vec::new();
        for p in 1..=root {
            if !abs_m.is_multiple_of(p) {
                continue;
            }
            let q = abs_m / p;
            let divisors: &[u64] = if p == q { &[p] } else { &[p, q] };
            for &v in divisors {
                for a in [v as i64, -(v as i64)] {
                    let f = IntForm::new(a, b, m / a);
                    if gcd3(f.a, f.b, f.c) == 1 && reduced_with(&f, d, s) {
                        row.push(f);
                    }
                }
            }
        }
        row.sort_unstable_by_key(|f| f.a);
        out.extend(row);
        b += 2;
    }
    Ok(out)
}

/// One reduction step, returning the image and the step parameter `k`.
fn rho_step(f: &IntForm, d: i64, s: i64) -> (IntForm, i64) {
    let two_c = 2 * f.c.abs();
    let r = s - (s + f.b).rem_euclid(two_c);
    let c_next = (r as i128 * r as i128 - d as i128) / (4 * f.c as i128);
    let k = (r + f.b) / (2 * f.c);
    (IntForm::new(f.c, r, c_next as i64), k)
}

/// The reduction operator. Intended for reduced forms (`|c| < sqrt(d)`).
pub fn rho(f: &IntForm, d: i64) -> Result<IntForm> {
    check_discriminant(d)?;
    if f.discriminant()? != d as i128 {
        return Err(Error::InvalidInput(format!("{f} does not have discriminant {d}")));
    }
    if !is_reduced(f, d) {
        return Err(Error::InvalidInput(format!("{f} is not reduced")));
    }
    Ok(rho_step(f, d, isqrt(d as i128) as i64).0)
}

/// The reduced forms split into reduction cycles. Each cycle starts at its
/// smallest member in `(b, a)` order.
pub fn cycles(d: i64) -> Result<Vec<Vec<IntForm>>> {
    let forms = reduced_forms(d)?;
    let s = isqrt(d as i128) as i64;
    let index: HashMap<IntForm, usize> = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut seen = vec![false; forms.len()];
    let mut out = Vec::new();
    for start in 0..forms.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut cur = start;
        loop {
            seen[cur] = true;
            cycle.push(forms[cur]);
            let (next, _) = rho_step(&forms[cur], d, s);
            let Some(&j) = index.get(&next) else {
                return Err(Error::InternalConsistency(format!(
                    "reduction step left the reduced set: {} -> {next}",
                    forms[cur]
                )));
            };
            if j == start {
                break;
            }
            if seen[j] {
                return Err(Error::InternalConsistency(format!(
                    "reduction step is not a permutation at {next}"
                )));
            }
            cur = j;
        }
        out.push(cycle);
    }
    Ok(out)
}

pub fn class_number(d: i64) -> Result<u64> {
    Ok(cycles(d)?.len() as u64)
}

/// Minimal `(t, u)` with `u >= 1` and `t^2 - d u^2 = 4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorph {
    pub t: BigUint,
    pub u: BigUint,
}

impl Automorph {
    /// `log((t + u sqrt(d)) / 2)`.
    pub fn regulator(&self, d: i64) -> f64 {
        if self.t.bits() < 960 {
            let t = self.t.to_f64().expect("fits");
            let u = self.u.to_f64().expect("fits");
            ((t + u * (d as f64).sqrt()) / 2.0).ln()
        } else {
            // (t + u sqrt(d))/2 = t (1 + sqrt(1 - 4/t^2))/2, and the correction
            // factor is 1 to double precision at this size.
            ln_big(&self.t)
        }
    }

    pub fn satisfies(&self, d: i64) -> bool {
        let t = BigInt::from(self.t.clone());
        let u = BigInt::from(self.u.clone());
        &t * &t - BigInt::from(d) * &u * &u == BigInt::from(4)
    }
}

fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v >> shift).to_u64().expect("64 bits") as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `floor(sqrt(v))` for `u128`, via a float estimate and exact correction.
fn isqrt_u128(v: u128) -> u128 {
    let mut r = (v as f64).sqrt() as u128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Ascending search `u = 1, 2, ..., limit`.
pub fn automorph_by_search(d: i64, limit: u64) -> Option<(u128, u128)> {
    let d = d as u128;
    (1..=limit as u128).find_map(|u| {
        let v = d * u * u + 4;
        if !maybe_square(v) {
            return None;
        }
        let t = isqrt_u128(v);
        (t * t == v).then_some((t, u))
    })
}

const fn residue_mask(m: u32) -> u128 {
    let mut mask = 0u128;
    let mut i = 0;
    while i < m {
        mask |= 1 << ((i * i) % m);
        i += 1;
    }
    mask
}

const SQUARES_MOD_128: u128 = residue_mask(128);
const SQUARES_MOD_63: u128 = residue_mask(63);
const SQUARES_MOD_65: u128 = residue_mask(65);

/// Cheap necessary condition for `v` to be a perfect square.
#[inline]
fn maybe_square(v: u128) -> bool {
    if SQUARES_MOD_128 >> (v & 127) & 1 == 0 {
        return false;
    }
    let (r63, r65) = match u64::try_from(v) {
        Ok(w) => (w % 63, w % 65),
        Err(_) => ((v % 63) as u64, (v % 65) as u64),
    };
    SQUARES_MOD_63 >> r63 & 1 == 1 && SQUARES_MOD_65 >> r65 & 1 == 1
}

/// Automorph read off one traversal of the reduction cycle through `start`.
pub fn automorph_from_cycle(start: &IntForm, d: i64) -> Result<Automorph> {
    if !is_reduced(start, d) {
        return Err(Error::InvalidInput(format!("{start} is not reduced")));
    }
    let s = isqrt(d as i128) as i64;
    // Columns of the running product, starting from the identity.
    let (mut p00, mut p01) = (BigInt::from(1), BigInt::zero());
    let (mut p10, mut p11) = (BigInt::zero(), BigInt::from(1));
    let mut cur = *start;
    loop {
        let (next, k) = rho_step(&cur, d, s);
        let k = BigInt::from(k);
        // P <- P * [[0, -1], [1, k]]
        let n01 = &k * &p01 - &p00;
        let n11 = &k * &p11 - &p10;
        p00 = std::mem::replace(&mut p01, n01);
        p10 = std::mem::replace(&mut p11, n11);
        cur = next;
        if cur == *start {
            break;
        }
    }
    let mut t = &p00 + &p11;
    let mut m10 = p10;
    if t.is_negative() {
        t = -t;
        m10 = -m10;
    }
    let (u, rem) = m10.div_rem(&BigInt::from(start.a));
    if !rem.is_zero() || u.sign() == Sign::NoSign {
        return Err(Error::InternalConsistency(format!(
            "cycle product through {start} is not an automorph"
        )));
    }
    let aut = Automorph {
        t: t.magnitude().clone(),
        u: u.magnitude().clone(),
    };
    if !aut.satisfies(d) {
        return Err(Error::InternalConsistency(format!(
            "cycle automorph fails t^2 - d u^2 = 4 for d = {d}"
        )));
    }
    Ok(aut)
}

/// `[1, b, (b^2 - d)/4]` with the largest admissible `b < sqrt(d)`; always reduced.
pub fn principal_reduced_form(d: i64) -> Result<IntForm> {
    check_discriminant(d)?;
    let s = isqrt(d as i128) as i64;
    let b = if (s - d) % 2 == 0 { s } else { s - 1 };
    Ok(IntForm::new(1, b, (b * b - d) / 4))
}

pub fn fundamental_automorph(d: i64) -> Result<Automorph> {
    check_discriminant(d)?;
    if let Some((t, u)) = automorph_by_search(d, AUTOMORPH_BRUTE_LIMIT) {
        return Ok(Automorph {
            t: BigUint::from(t),
            u: BigUint::from(u),
        });
    }
    automorph_from_cycle(&principal_reduced_form(d)?, d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassData {
    pub d: i64,
    pub h: u64,
    pub t: BigUint,
    pub u: BigUint,
    pub regulator: f64,
    pub vol_proxy: f64,
}

pub fn class_data(d: i64) -> Result<ClassData> {
    let h = class_number(d)?;
    let aut = fundamental_automorph(d)?;
    let regulator = aut.regulator(d);
    Ok(ClassData {
        d,
        h,
        regulator,
        vol_proxy: h as f64 * 2.0 * regulator,
        t: aut.t,
        u: aut.u,
    })
}

/// `h(d) * 2 * regulator(d)`.
pub fn vol_proxy(d: i64) -> Result<f64> {
    Ok(class_data(d)?.vol_proxy)
}
