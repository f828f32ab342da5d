//! Number types used for probabilities.
//!
//! Formulas store their constants as exact rationals. Evaluation, inference
//! and the brute-force oracle are generic over [`Scalar`], so the same code
//! runs in `f64` for production and in [`BigRational`] when an exact answer
//! is needed.

use std::fmt;

use num::bigint::BigInt;
use num::{BigRational, FromPrimitive, Num, One, Signed, ToPrimitive};

/// An exact rational constant together with its nearest `f64`.
///
/// The float is computed once at construction so that float evaluation does
/// not pay for a big-integer division on every read.
#[derive(Clone)]
pub struct Rational {
    exact: BigRational,
    approx: f64,
}

impl Rational {
    pub fn new(exact: BigRational) -> Self {
        let approx = ratio_to_f64(&exact);
        Rational { exact, approx }
    }

    pub fn from_fraction(numer: i64, denom: i64) -> Self {
        Rational::new(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational::new(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational::from_integer(0)
    }

    pub fn one() -> Self {
        Rational::from_integer(1)
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    /// True when the value lies in the closed unit interval.
    pub fn is_probability(&self) -> bool {
        !self.exact.is_negative() && self.exact <= BigRational::one()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.exact.cmp(&other.exact)
    }
}

impl std::hash::Hash for Rational {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.exact.hash(state);
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Integers print bare, everything else as `p/q` in lowest terms.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact.is_integer() {
            write!(f, "{}", self.exact.numer())
        } else {
            write!(f, "{}/{}", self.exact.numer(), self.exact.denom())
        }
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational::new(value)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(r) {
        return v;
    }
    // Very large numerator/denominator: scale both down before dividing.
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Result of a long product, with a flag set when a float product
/// underflowed to zero although no factor was zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Product<S> {
    pub value: S,
    pub underflow: bool,
}

/// A probability-valued number type.
pub trait Scalar:
    Clone + fmt::Debug + PartialOrd + Num + FromPrimitive + Send + Sync + 'static
{
    fn from_rational(q: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// `1 - prod(1 - a_i)`.
    fn noisy_or(values: &[Self]) -> Self {
        let mut keep = Self::one();
        for a in values {
            keep = keep * (Self::one() - a.clone());
        }
        Self::one() - keep
    }

    fn product<I: IntoIterator<Item = Self>>(factors: I) -> Product<Self> {
        let mut value = Self::one();
        for f in factors {
            value = value * f;
        }
        Product { value, underflow: false }
    }

    fn complement(&self) -> Self {
        Self::one() - self.clone()
    }
}

macro_rules! float_scalar {
    ($t:ty, $tiny:expr, $eps:expr) => {
        impl Scalar for $t {
            fn from_rational(q: &Rational) -> Self {
                q.to_f64() as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn noisy_or(values: &[Self]) -> Self {
                if values.iter().any(|a| 1.0 - *a < $eps) {
                    // Sum ln(1 - a) instead of multiplying near-zero terms.
                    let log_keep: $t = values.iter().map(|a| (-*a).ln_1p()).sum();
                    return -log_keep.exp_m1();
                }
                let keep: $t = values.iter().map(|a| 1.0 - *a).product();
                1.0 - keep
            }

            fn product<I: IntoIterator<Item = Self>>(factors: I) -> Product<Self> {
                let factors: Vec<$t> = factors.into_iter().collect();
                if factors.iter().any(|f| *f == 0.0) {
                    return Product { value: 0.0, underflow: false };
                }
                if factors.iter().all(|f| *f >= $tiny) {
                    let value: $t = factors.iter().product();
                    if value != 0.0 {
                        return Product { value, underflow: false };
                    }
                }
                let log_sum: f64 = factors.iter().map(|f| (*f as f64).ln()).sum();
                let value = log_sum.exp() as $t;
                Product { value, underflow: value == 0.0 }
            }
        }
    };
}

float_scalar!(f64, 1e-300, 1e-12);
float_scalar!(f32, 1e-37, 1e-6);

impl Scalar for BigRational {
    fn from_rational(q: &Rational) -> Self {
        q.exact().clone()
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
}

/// Formats a probability with 12 significant digits in plain decimal
/// notation.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{p}");
    }
    let magnitude = p.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{p:.decimals$}")
}
