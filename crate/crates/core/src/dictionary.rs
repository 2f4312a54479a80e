//! The linear change of variables between solutions of `x^2 + y^2 - z^2 = n`
//! and forms `[a, b, c]` of discriminant `4n` with `b` even and `a = c (mod 2)`:
//!
//! ```text
//! x = (a - c) / 2,  y = b / 2,  z = (a + c) / 2
//! a = x + z,        b = 2y,     c = z - x
//! ```
//!
//! The identity `(a - c)^2 + b^2 - (a + c)^2 = b^2 - 4ac` makes this a
//! bijection; it is total in `n`, negative targets included.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{narrow, square};
use crate::error::{Error, Result};
use crate::form::IntForm;

/// An integer solution of `x^2 + y^2 - z^2 = n`. The equation is checked on
/// construction, so a `Triple` in hand is always a valid representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    x: i64,
    y: i64,
    z: i64,
    n: i64,
}

impl Triple {
    pub fn new(x: i64, y: i64, z: i64, n: i64) -> Result<Self> {
        let value = Self::evaluate(x, y, z)?;
        if value != n as i128 {
            return Err(Error::InvalidInput(format!(
                "({x},{y},{z}) gives {value}, not {n}"
            )));
        }
        Ok(Self { x, y, z, n })
    }

    /// Builds the triple, computing `n` from the coordinates.
    pub fn from_xyz(x: i64, y: i64, z: i64) -> Result<Self> {
        let n = narrow(Self::evaluate(x, y, z)?, "x^2 + y^2 - z^2")?;
        Ok(Self { x, y, z, n })
    }

    fn evaluate(x: i64, y: i64, z: i64) -> Result<i128> {
        square(x)
            .checked_add(square(y))
            .and_then(|s| s.checked_sub(square(z)))
            .ok_or(Error::ArithmeticRange("x^2 + y^2 - z^2"))
    }

    pub fn x(&self) -> i64 {
        self.x
    }
    pub fn y(&self) -> i64 {
        self.y
    }
    pub fn z(&self) -> i64 {
        self.z
    }
    pub fn n(&self) -> i64 {
        self.n
    }

    /// `max(x^2, y^2, z^2) <= n`, exactly.
    pub fn is_bounded(&self) -> bool {
        let n = self.n as i128;
        square(self.x) <= n && square(self.y) <= n && square(self.z) <= n
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

pub fn verify_bounded(t: &Triple) -> bool {
    t.is_bounded()
}

pub fn form_to_triple(f: &IntForm) -> Result<Triple> {
    let d = f.discriminant()?;
    let parity_err = |reason| Error::Parity {
        a: f.a,
        b: f.b,
        c: f.c,
        reason,
    };
    if d.rem_euclid(4) != 0 {
        return Err(parity_err("discriminant is not 0 mod 4"));
    }
    if f.b & 1 != 0 {
        return Err(parity_err("middle coefficient is odd"));
    }
    if (f.a ^ f.c) & 1 != 0 {
        return Err(parity_err("outer coefficients differ in parity"));
    }
    let (a, c) = (f.a as i128, f.c as i128);
    let x = narrow((a - c) / 2, "x = (a - c)/2")?;
    let z = narrow((a + c) / 2, "z = (a + c)/2")?;
    let n = narrow(d / 4, "n = d/4")?;
    let t = Triple::new(x, f.b / 2, z, n)?;
    Ok(t)
}

pub fn triple_to_form(t: &Triple) -> Result<IntForm> {
    let (x, y, z) = (t.x as i128, t.y as i128, t.z as i128);
    Ok(IntForm::new(
        narrow(x + z, "a = x + z")?,
        narrow(2 * y, "b = 2y")?,
        narrow(z - x, "c = z - x")?,
    ))
}
