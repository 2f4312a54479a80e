//! Enumeration of primitive discriminant-`d` forms inside bounded windows.
//!
//! The outer loop runs over `b` with `b = d (mod 2)`. For each `b` the product
//! `ac = (b^2 - d) / 4` is fixed, so the candidates are the divisor pairs of
//! that product that fall inside the window's coefficient box. A product of
//! zero happens only for square `d` with `b^2 = d`; then one of `a`, `c` is
//! zero and the other ranges freely over the box.
//!
//! Output order is lexicographic in `(b, a)`, then `c`.

use crate::arith::{ceil_sqrt, gcd3, is_square, isqrt};
use crate::error::{Error, Result};
use crate::form::IntForm;
use crate::region::{in_k_unchecked, scaled, BallPatch};

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `max(|a|, |b|, |c|) <= ceil(sqrt(d))`.
    FullBox,
    K,
    Patch(BallPatch),
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::FullBox => "box",
            Region::K => "K",
            Region::Patch(_) => "patch",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnumWindow {
    d: i64,
    region: Region,
    bounds: [(i64, i64); 3],
}

impl EnumWindow {
    pub fn new(d: i64, region: Region) -> Result<Self> {
        if d <= 0 {
            return Err(Error::InvalidInput(format!(
                "discriminant must be positive, got {d}"
            )));
        }
        let m = checked_ceil_sqrt(d)?;
        let full = [(-m, m); 3];
        let bounds = match &region {
            Region::FullBox | Region::K => full,
            Region::Patch(p) => {
                let pb = p.coefficient_box(d);
                std::array::from_fn(|i| (pb[i].0.max(-m), pb[i].1.min(m)))
            }
        };
        Ok(Self { d, region, bounds })
    }

    /// A plain box window `max(|a|, |b|, |c|) <= bound`, reported as `FullBox`.
    pub fn with_box(d: i64, bound: i64) -> Result<Self> {
        let mut w = Self::new(d, Region::FullBox)?;
        if bound < 0 {
            return Err(Error::InvalidInput(format!("negative box bound {bound}")));
        }
        w.bounds = [(-bound, bound); 3];
        Ok(w)
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn is_square_discriminant(&self) -> bool {
        is_square(self.d as i128)
    }

    pub fn forms(&self) -> FormIter<'_> {
        let (b_lo, b_hi) = self.bounds[1];
        let residue = self.d.rem_euclid(4);
        let start = if residue == 2 || residue == 3 {
            // b^2 = 0, 1 (mod 4): nothing to enumerate.
            b_hi + 1
        } else {
            let parity = self.d & 1;
            if b_lo.rem_euclid(2) == parity {
                b_lo
            } else {
                b_lo + 1
            }
        };
        FormIter {
            window: self,
            next_b: start,
            buf: Vec::new(),
            pos: 0,
        }
    }

    #[inline]
    fn accepts(&self, f: &IntForm) -> bool {
        match &self.region {
            Region::FullBox => true,
            Region::K => in_k_unchecked(f, self.d),
            Region::Patch(p) => p.contains(&scaled(f, self.d)),
        }
    }

    fn fill(&self, b: i64, out: &mut Vec<IntForm>) {
        out.clear();
        let [(a_lo, a_hi), _, (c_lo, c_hi)] = self.bounds;
        // b^2 = d (mod 4) so the division is exact.
        let m = ((b as i128) * (b as i128) - self.d as i128) / 4;
        let push = |a: i64, c: i64, out: &mut Vec<IntForm>| {
            let f = IntForm::new(a, b, c);
            if gcd3(a, b, c) == 1 && self.accepts(&f) {
                out.push(f);
            }
        };
        if m == 0 {
            for a in a_lo..=a_hi {
                if a == 0 {
                    for c in c_lo..=c_hi {
                        push(0, c, out);
                    }
                } else if (c_lo..=c_hi).contains(&0) {
                    push(a, 0, out);
                }
            }
            return;
        }
        let abs_m = m.unsigned_abs();
        let width = (a_hi as i128 - a_lo as i128 + 1).max(0) as u128;
        let root = isqrt(abs_m as i128) as u128;
        let mut cands: Vec<i64> = Vec::new();
        if width <= 2 * root + 2 {
            for a in a_lo..=a_hi {
                if a != 0 && m % (a as i128) == 0 {
                    cands.push(a);
                }
            }
        } else {
            for p in 1..=root {
                if !abs_m.is_multiple_of(p) {
                    continue;
                }
                let q = abs_m / p;
                for v in [p, q] {
                    if v > i64::MAX as u128 {
                        continue;
                    }
                    let v = v as i64;
                    for a in [v, -v] {
                        if (a_lo..=a_hi).contains(&a) {
                            cands.push(a);
                        }
                    }
                }
            }
            cands.sort_unstable();
            cands.dedup();
        }
        for a in cands {
            let c = m / a as i128;
            if c >= c_lo as i128 && c <= c_hi as i128 {
                push(a, c as i64, out);
            }
        }
    }
}

fn checked_ceil_sqrt(d: i64) -> Result<i64> {
    i64::try_from(ceil_sqrt(d as i128)).map_err(|_| Error::ArithmeticRange("ceil(sqrt(d))"))
}

/// Lazy stream of the window's forms in `(b, a, c)` order.
pub struct FormIter<'a> {
    window: &'a EnumWindow,
    next_b: i64,
    buf: Vec<IntForm>,
    pos: usize,
}

impl Iterator for FormIter<'_> {
    type Item = IntForm;

    fn next(&mut self) -> Option<IntForm> {
        loop {
            if let Some(f) = self.buf.get(self.pos) {
                self.pos += 1;
                return Some(*f);
            }
            let b_hi = self.window.bounds[1].1;
            if self.next_b > b_hi {
                return None;
            }
            let b = self.next_b;
            self.next_b += 2;
            self.pos = 0;
            self.window.fill(b, &mut self.buf);
        }
    }
}

pub fn enumerate_forms(w: &EnumWindow) -> FormIter<'_> {
    w.forms()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaCount {
    pub count: u64,
    /// Set when `d` is a perfect square; equidistribution says nothing there.
    pub square_discriminant: bool,
}

/// Number of primitive discriminant-`d` forms whose scaled point is in `region`.
pub fn lambda_count(d: i64, region: &Region) -> Result<LambdaCount> {
    if matches!(region, Region::FullBox) {
        return Err(Error::InvalidInput(
            "point counts are defined for K and the patch only".into(),
        ));
    }
    let w = EnumWindow::new(d, region.clone())?;
    Ok(LambdaCount {
        count: w.forms().count() as u64,
        square_discriminant: w.is_square_discriminant(),
    })
}
