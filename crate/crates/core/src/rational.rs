//! Exact rational scalars and their `"p/q"` text form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serializer};

/// Scalars are arbitrary-precision rationals, always in lowest terms.
pub type Rational = BigRational;

/// Coordinate vector over the rationals.
pub type Vector = Vec<Rational>;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n/d`; panics on `d == 0`.
pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero_vector(n: usize) -> Vector {
    vec![Rational::zero(); n]
}

/// Standard basis vector `e_i` (0-based `i`).
pub fn unit_vector(n: usize, i: usize) -> Vector {
    let mut v = zero_vector(n);
    v[i] = Rational::one();
    v
}

pub fn is_zero_vector(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// Formats as `"p"` when the denominator is 1, otherwise `"p/q"`.
pub fn format(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Writes `q = sign * f * s^2` where `f` has no square factor below the
/// trial-division bound and is not itself a perfect square. Returns `(f, s)`
/// with `f` carrying the sign. Used to pick a representative of `q` modulo
/// rational squares.
pub fn square_class(q: &Rational) -> (BigInt, Rational) {
    assert!(!q.is_zero());
    let sign = if q.is_negative() { -BigInt::one() } else { BigInt::one() };
    let a = q.numer().abs();
    let b = q.denom().clone();
    // q = sign * a/b = sign * (a*b) / b^2
    let mut rest = &a * &b;
    let mut root = BigInt::one();
    let mut p = BigInt::from(2u32);
    let bound = BigInt::from(10_000u32);
    while p <= bound && &p * &p <= rest {
        let pp = &p * &p;
        while (&rest % &pp).is_zero() {
            rest /= &pp;
            root *= &p;
        }
        p += 1u32;
    }
    let r = rest.sqrt();
    if &r * &r == rest {
        root *= r;
        rest = BigInt::one();
    }
    // q = sign * rest * root^2 / b^2
    (sign * rest, Rational::new(root, b))
}

pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

pub mod serde_vector {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .collect()
    }
}

pub mod serde_matrix {
    use super::*;
    use serde::Serialize;

    pub fn serialize<S: Serializer>(m: &[Vector], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(format).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
                    .collect()
            })
            .collect()
    }
}

pub mod serde_pairs {
    use super::*;
    use serde::Serialize;

    pub fn serialize<S: Serializer>(m: &[(Rational, Rational)], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[String; 2]> = m.iter().map(|(a, b)| [format(a), format(b)]).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(Rational, Rational)>, D::Error> {
        let raw = Vec::<[String; 2]>::deserialize(d)?;
        let p = |s: &String| parse(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")));
        raw.iter().map(|[a, b]| Ok((p(a)?, p(b)?))).collect()
    }
}
