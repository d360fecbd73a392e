//! Exact rational scalars and points, and the planar maps the problems use.
//!
//! Everything here is closed over the rationals: the 45-degree shrink-rotation
//! is the matrix `(1/2) * [[1, 1], [-1, 1]]`, so no square roots are ever
//! materialized. Distances are compared through their squares.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("interpolation parameter {0} outside [0, 1]")]
    ParameterOutOfRange(Rational),
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn try_new(numer: BigInt, denom: BigInt) -> Result<Self, GeomError> {
        if denom.is_zero() {
            return Err(GeomError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn half() -> Self {
        Rational::new(1, 2)
    }

    /// `2^-k`.
    pub fn pow2_inv(k: u32) -> Self {
        Rational(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Floor toward negative infinity.
    pub fn floor(&self) -> Self {
        Rational(self.0.floor())
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    /// True iff the value is `m / 2^k` for integers `m` and `k >= 0`.
    pub fn is_dyadic(&self) -> bool {
        let d = self.denom();
        // A power of two has exactly one bit set.
        d.is_positive() && (d & (d - BigInt::one())).is_zero()
    }

    /// Exact square root when both numerator and denominator are perfect
    /// squares; `None` otherwise (including negative input).
    pub fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer();
        let d = self.denom();
        let rn = n.sqrt();
        let rd = d.sqrt();
        (&rn * &rn == *n && &rd * &rd == *d).then(|| Rational(BigRational::new(rn, rd)))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }

    fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = GeomError;

    /// Accepts `"n/d"` or a bare integer `"n"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeomError::Parse(s.to_string());
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                Rational::try_new(n, d)
            }
            None => Ok(Rational::from_bigint(s.parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        // Hand-written scenarios may use bare integers.
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(n) => Ok(Rational::from_int(n)),
        }
    }
}

macro_rules! rational_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.inner().$method(rhs.inner()))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(rhs.inner()))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.inner().$method(rhs.0))
            }
        }
    };
}

rational_binop!(Add, add);
rational_binop!(Sub, sub);
rational_binop!(Mul, mul);
rational_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.inner())
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::one(), |a, b| a * b)
    }
}

/// Point (or vector) in the plane with rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn ints(x: i64, y: i64) -> Self {
        Point::new(x.into(), y.into())
    }

    pub fn origin() -> Self {
        Point::default()
    }

    pub fn is_origin(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, s: &Rational) -> Point {
        Point::new(&self.x * s, &self.y * s)
    }

    pub fn dot(&self, other: &Point) -> Rational {
        &self.x * &other.x + &self.y * &other.y
    }

    pub fn norm2(&self) -> Rational {
        self.dot(self)
    }

    pub fn dist2(&self, other: &Point) -> Rational {
        (self - other).norm2()
    }

    /// The vector turned a quarter clockwise: `(x, y) -> (y, -x)`.
    pub fn perp_cw(&self) -> Point {
        Point::new(self.y.clone(), -&self.x)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.x.to_f64(), self.y.to_f64())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.x, self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (x, y) = <(Rational, Rational)>::deserialize(deserializer)?;
        Ok(Point { x, y })
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        &self + &rhs
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        &self - &rhs
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-&self.x, -&self.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        -&self
    }
}

/// True iff `q = m / 2^k`.
pub fn is_dyadic(q: &Rational) -> bool {
    q.is_dyadic()
}

pub fn midpoint(p: &Point, q: &Point) -> Point {
    let half = Rational::half();
    (p + q).scale(&half)
}

/// `pb + s * (pe - pb)` for `s` in `[0, 1]`.
pub fn interpolate(pb: &Point, pe: &Point, s: &Rational) -> Result<Point, GeomError> {
    if s.is_negative() || *s > Rational::one() {
        return Err(GeomError::ParameterOutOfRange(s.clone()));
    }
    Ok(pb + &(pe - pb).scale(s))
}

/// Quarter turn clockwise about `center`.
pub fn rot90cw(p: &Point, center: &Point) -> Point {
    center + &(p - center).perp_cw()
}

/// 45-degree clockwise rotation about `pivot` combined with a `1/sqrt(2)`
/// shrink. Squared distance to the pivot exactly halves.
pub fn shrink_rot45cw(p: &Point, pivot: &Point) -> Point {
    let v = p - pivot;
    let half = Rational::half();
    let out = Point::new((&v.x + &v.y) * &half, (&v.y - &v.x) * &half);
    pivot + &out
}

/// One expansion step away from `c`: `(floor(2 p.x - c.x), floor(2 p.y - c.y))`.
pub fn cge_step(p: &Point, c: &Point) -> Point {
    let two = Rational::from_int(2);
    Point::new(
        (&two * &p.x - &c.x).floor(),
        (&two * &p.y - &c.y).floor(),
    )
}

/// Position of `p` relative to the closed square whose diagonal is `[a, b]`.
///
/// Returns `Ordering::Less` when strictly inside, `Equal` on the boundary,
/// `Greater` outside. A degenerate diagonal yields the single point `a`.
pub fn square_containment(p: &Point, a: &Point, b: &Point) -> Ordering {
    let m = midpoint(a, b);
    let u = (b - a).scale(&Rational::half());
    let len2 = u.norm2();
    let rel = p - &m;
    if len2.is_zero() {
        return if rel.is_origin() {
            Ordering::Equal
        } else {
            Ordering::Greater
        };
    }
    let w = u.perp_cw();
    // Coordinates in the (u, w) basis; the square is |s| + |t| <= 1.
    let s = rel.dot(&u) / &len2;
    let t = rel.dot(&w) / &len2;
    (s.abs() + t.abs()).cmp(&Rational::one())
}

pub fn in_square(p: &Point, a: &Point, b: &Point) -> bool {
    square_containment(p, a, b) != Ordering::Greater
}
