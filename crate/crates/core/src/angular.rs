//! Angular-momentum algebra: Clebsch–Gordan coefficients and the rotational
//! basis of a single molecule.
//!
//! Coefficients use the Condon–Shortley phase convention and are evaluated
//! with the closed-form Racah sum in exact rational arithmetic. Only the final
//! square root is taken in floating point.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rotational level `|J, M_J>` of one molecule.
///
/// Ordering is lexicographic in `(j, m)`, which fixes the canonical basis
/// order everywhere in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RotState {
    pub j: u32,
    pub m: i32,
}

impl RotState {
    pub fn new(j: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > j {
            return Err(Error::domain(format!("|M| > J for (J={j}, M={m})")));
        }
        Ok(RotState { j, m })
    }

    /// Const constructor for literals known to be valid.
    pub const fn new_unchecked(j: u32, m: i32) -> Self {
        RotState { j, m }
    }
}

impl fmt::Display for RotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.j, self.m)
    }
}

impl std::str::FromStr for RotState {
    type Err = Error;

    /// Parses `"J,M"`.
    fn from_str(s: &str) -> Result<Self> {
        let (j, m) = s
            .split_once(',')
            .ok_or_else(|| Error::domain(format!("expected `J,M`, got `{s}`")))?;
        let j: u32 = j
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("bad J in `{s}`")))?;
        let m: i32 = m
            .trim()
            .parse()
            .map_err(|_| Error::domain(format!("bad M in `{s}`")))?;
        RotState::new(j, m)
    }
}

/// All `(J, M)` with `J <= j_max` in canonical order; `(j_max + 1)^2` states.
pub fn enumerate_basis(j_max: u32) -> Vec<RotState> {
    (0..=j_max)
        .flat_map(|j| (-(j as i32)..=j as i32).map(move |m| RotState { j, m }))
        .collect()
}

/// An integer or half-integer, stored doubled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_doubled(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn int(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn doubled(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl From<i32> for HalfInt {
    fn from(v: i32) -> Self {
        HalfInt::int(v)
    }
}

impl From<u32> for HalfInt {
    fn from(v: u32) -> Self {
        HalfInt::int(v as i32)
    }
}

type CgKey = [i32; 6];

fn cache() -> &'static RwLock<HashMap<CgKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CgKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn check_pair(j: HalfInt, m: HalfInt) -> Result<()> {
    let (tj, tm) = (j.doubled(), m.doubled());
    if tj < 0 {
        return Err(Error::domain(format!("negative angular momentum {}", j.value())));
    }
    if tm.abs() > tj {
        return Err(Error::domain(format!(
            "|m| > j for (j={}, m={})",
            j.value(),
            m.value()
        )));
    }
    if (tj - tm) % 2 != 0 {
        return Err(Error::domain(format!(
            "j - m must be an integer for (j={}, m={})",
            j.value(),
            m.value()
        )));
    }
    Ok(())
}

/// `<j1 m1; j2 m2 | J M>` in the Condon–Shortley convention.
///
/// Returns exactly zero when `M != m1 + m2` or the triangle rule fails.
/// Results are memoized in a process-wide cache safe for concurrent use.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;

    let (a, b, c) = (j1.doubled(), j2.doubled(), j.doubled());
    if m.doubled() != m1.doubled() + m2.doubled() {
        return Ok(0.0);
    }
    if c < (a - b).abs() || c > a + b || (a + b + c) % 2 != 0 {
        return Ok(0.0);
    }

    let key = [a, m1.doubled(), b, m2.doubled(), c, m.doubled()];
    if let Some(v) = cache().read().ok().and_then(|map| map.get(&key).copied()) {
        return Ok(v);
    }
    let v = racah_exact(key);
    if let Ok(mut map) = cache().write() {
        map.insert(key, v);
    }
    Ok(v)
}

/// Integer-argument convenience wrapper.
pub fn cg(j1: u32, m1: i32, j2: u32, m2: i32, j: u32, m: i32) -> Result<f64> {
    clebsch_gordan(
        j1.into(),
        m1.into(),
        j2.into(),
        m2.into(),
        j.into(),
        m.into(),
    )
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Racah closed form; arguments are doubled quantum numbers that already
/// passed the selection checks, so every factorial argument is a
/// non-negative integer.
fn racah_exact([tj1, tm1, tj2, tm2, tj, tm]: CgKey) -> f64 {
    let half = |x: i32| {
        debug_assert!(x % 2 == 0);
        x / 2
    };

    let mut prefactor = BigRational::new(
        BigInt::from(tj + 1)
            * factorial(half(tj + tj1 - tj2))
            * factorial(half(tj - tj1 + tj2))
            * factorial(half(tj1 + tj2 - tj)),
        factorial(half(tj1 + tj2 + tj) + 1),
    );
    prefactor *= BigRational::from_integer(
        factorial(half(tj + tm))
            * factorial(half(tj - tm))
            * factorial(half(tj1 - tm1))
            * factorial(half(tj1 + tm1))
            * factorial(half(tj2 - tm2))
            * factorial(half(tj2 + tm2)),
    );

    let k_min = 0.max(half(tj2 - tj - tm1)).max(half(tj1 - tj + tm2));
    let k_max = half(tj1 + tj2 - tj)
        .min(half(tj1 - tm1))
        .min(half(tj2 + tm2));

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(half(tj1 + tj2 - tj) - k)
            * factorial(half(tj1 - tm1) - k)
            * factorial(half(tj2 + tm2) - k)
            * factorial(half(tj - tj2 + tm1) + k)
            * factorial(half(tj - tj1 - tm2) + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    if sum.is_zero() {
        return 0.0;
    }
    let negative = sum.is_negative();
    let squared = prefactor * &sum * &sum;
    let magnitude = squared.to_f64().unwrap_or(f64::NAN).sqrt();
    if negative {
        -magnitude
    } else {
        magnitude
    }
}
