// Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use ternrep::{ceil_sqrt, gcd3, IntForm};

/// Every primitive `[a, b, c]` with `b^2 - 4ac = d` and all coefficients in
/// `[-ceil(sqrt d), ceil(sqrt d)]`, by a plain triple loop.
pub fn triple_loop_forms(d: i64) -> BTreeSet<IntForm> {
    let m = ceil_sqrt(d as i128) as i64;
    let mut out = BTreeSet::new();
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                if b * b - 4 * a * c == d && gcd3(a, b, c) == 1 {
                    out.insert(IntForm::new(a, b, c));
                }
            }
        }
    }
    out
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, i: usize, j: usize) {
        let (a, b) = (self.find(i), self.find(j));
        self.0[a] = b;
    }
}

/// Groups primitive forms of discriminant `d` inside `|a|, |b|, |c| <= bound`
/// by proper equivalence, joining `f` to `T f` and `S f` whenever both lie in
/// the box. Returns the component label of each requested form.
pub fn sl2_components(d: i64, bound: i64, query: &[IntForm]) -> Vec<usize> {
    let mut forms = Vec::new();
    for b in -bound..=bound {
        if (b * b - d) % 4 != 0 {
            continue;
        }
        let m = (b * b - d) / 4;
        for a in -bound..=bound {
            if a == 0 {
                if m == 0 {
                    for c in -bound..=bound {
                        forms.push(IntForm::new(0, b, c));
                    }
                }
                continue;
            }
            if m % a == 0 && (m / a).abs() <= bound {
                forms.push(IntForm::new(a, b, m / a));
            }
        }
    }
    forms.retain(|f| gcd3(f.a, f.b, f.c) == 1);
    forms.sort();
    let index = |f: &IntForm| forms.binary_search(f).ok();
    let mut dsu = Dsu((0..forms.len()).collect());
    for (i, f) in forms.iter().enumerate() {
        for g in [f.apply_t(), f.apply_s()].into_iter().flatten() {
            if let Some(j) = index(&g) {
                dsu.union(i, j);
            }
        }
    }
    query
        .iter()
        .map(|f| {
            let i = index(f).expect("query form inside the box");
            dsu.find(i)
        })
        .collect()
}

/// Trace of `eps^k` given the trace `s` of a norm-one unit `eps`.
fn lucas_v(s: &BigUint, k: u32, cap: &BigUint) -> Option<BigUint> {
    let (mut prev, mut cur) = (BigUint::from(2u32), s.clone());
    for _ in 1..k {
        let next = s * &cur - &prev;
        if &next > cap {
            return None;
        }
        prev = cur;
        cur = next;
    }
    Some(cur)
}

fn primes_up_to(n: u32) -> Vec<u32> {
    (2..=n).filter(|&p| (2..p).take_while(|q| q * q <= p).all(|q| p % q != 0)).collect()
}

/// Checks that `(t, u)` is the least positive solution of `t^2 - d u^2 = 4`.
///
/// Small `u` are compared against an ascending search. For larger `u`, any
/// smaller solution would come from a unit whose `k`-th power (k prime) is
/// `(t + u sqrt d) / 2`; its trace would be an integer root of
/// `V_k(s) = t`, searched by bisection.
pub fn is_minimal_automorph(d: i64, t: &BigUint, u: &BigUint, search_limit: u64) -> bool {
    let db = BigUint::from(d as u64);
    if t * t != &db * u * u + 4u32 || u.is_zero() {
        return false;
    }
    let search_to = u.to_u64().map_or(search_limit, |u| (u - 1).min(search_limit));
    let tables: Vec<(u64, Vec<bool>)> = [64u64, 63, 65, 11]
        .iter()
        .map(|&m| {
            let mut t = vec![false; m as usize];
            (0..m).for_each(|i| t[(i * i % m) as usize] = true);
            (m, t)
        })
        .collect();
    for v in 1..=search_to as u128 {
        let w = d as u128 * v * v + 4;
        let passes = match u64::try_from(w) {
            Ok(w) => tables.iter().all(|(m, t)| t[(w % m) as usize]),
            Err(_) => true,
        };
        if passes && w.sqrt() * w.sqrt() == w {
            return false;
        }
    }
    if u.to_u64().is_some_and(|u| u <= search_limit + 1) {
        return true;
    }
    // eps >= (3 + sqrt 5) / 2 > 2.6 for every norm-one unit other than 1.
    let max_k = (t.bits() as f64 / 2.6f64.log2()).ceil() as u32 + 1;
    for k in primes_up_to(max_k) {
        let (mut lo, mut hi) = (BigUint::from(3u32), t.clone());
        while lo <= hi {
            let mid: BigUint = (&lo + &hi) >> 1u32;
            match lucas_v(&mid, k, t) {
                Some(v) if &v == t => {
                    let disc = &mid * &mid - 4u32;
                    if &disc % &db == BigUint::zero() {
                        let q = &disc / &db;
                        let r = q.sqrt();
                        if &r * &r == q {
                            return false;
                        }
                    }
                    break;
                }
                Some(v) if &v < t => lo = mid + BigUint::one(),
                _ => {
                    if mid.is_zero() {
                        break;
                    }
                    hi = mid - BigUint::one();
                }
            }
        }
    }
    true
}
