//! Pluggable exact field arithmetic.
//!
//! Three families are supported: prime fields GF(p) (with GF(2) as the
//! canonical special case), arbitrary-precision rationals, and an
//! approximate real field whose equality is tolerance-aware. The first two
//! are exact; every probability computation elsewhere in the crate is routed
//! through exact rationals regardless of which field the tree weights use.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported prime modulus; products must fit in u128 intermediates.
pub const MAX_MODULUS: u64 = 1 << 31;

/// Which field scalars live in.
///
/// `gfp(2)` is the two-element field; configs may spell it `"gf2"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    /// GF(p) for a prime p.
    Gfp(u64),
    /// Exact rationals with arbitrary-precision integers.
    Rational,
    /// f64 values with `|a - b| <= eps` as equality.
    ApproxReal(f64),
}

impl FieldSpec {
    pub fn gf2() -> Self {
        FieldSpec::Gfp(2)
    }

    pub fn gfp(p: u64) -> Result<Self> {
        if p > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(FieldSpec::Gfp(p))
    }

    pub fn approx_real(eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidTolerance(eps));
        }
        Ok(FieldSpec::ApproxReal(eps))
    }

    /// Re-checks the invariants (primality, tolerance sign) of a spec that
    /// arrived from outside, e.g. deserialized config.
    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldSpec::Gfp(p) => {
                Self::gfp(p)?;
            }
            FieldSpec::Rational => {}
            FieldSpec::ApproxReal(eps) => {
                Self::approx_real(eps)?;
            }
        }
        Ok(())
    }

    /// Number of elements for finite fields, `None` otherwise.
    pub fn order(&self) -> Option<u64> {
        match *self {
            FieldSpec::Gfp(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, FieldSpec::ApproxReal(_))
    }

    pub fn zero(&self) -> FieldElement {
        self.from_integer(0)
    }

    pub fn one(&self) -> FieldElement {
        self.from_integer(1)
    }

    /// Canonical embedding of a small integer.
    pub fn from_integer(&self, n: i64) -> FieldElement {
        let value = match *self {
            FieldSpec::Gfp(p) => Val::Residue(n.rem_euclid(p as i64) as u64),
            FieldSpec::Rational => Val::Ratio(BigRational::from_integer(BigInt::from(n))),
            FieldSpec::ApproxReal(_) => Val::Real(n as f64),
        };
        FieldElement { spec: *self, value }
    }

    pub fn from_ratio(&self, value: BigRational) -> Result<FieldElement> {
        match *self {
            FieldSpec::Rational => Ok(FieldElement {
                spec: *self,
                value: Val::Ratio(value),
            }),
            FieldSpec::ApproxReal(_) => {
                let v = ratio_to_f64(&value);
                Ok(FieldElement {
                    spec: *self,
                    value: Val::Real(v),
                })
            }
            FieldSpec::Gfp(_) => Err(Error::Parse {
                what: "field element",
                input: format!("{value} is not a residue"),
            }),
        }
    }

    /// `i`-th element of the finite field, `i < p`.
    pub fn element_from_index(&self, i: u64) -> Option<FieldElement> {
        match *self {
            FieldSpec::Gfp(p) if i < p => Some(FieldElement {
                spec: *self,
                value: Val::Residue(i),
            }),
            _ => None,
        }
    }

    /// Parses the canonical string form: a residue for GF(p), `a` or `a/b`
    /// for rationals, a decimal for the approximate reals.
    pub fn parse_element(&self, s: &str) -> Result<FieldElement> {
        let s = s.trim();
        let bad = || Error::Parse {
            what: "field element",
            input: s.to_string(),
        };
        match *self {
            FieldSpec::Gfp(p) => {
                let n: i64 = s.parse().map_err(|_| bad())?;
                Ok(FieldElement {
                    spec: *self,
                    value: Val::Residue(n.rem_euclid(p as i64) as u64),
                })
            }
            FieldSpec::Rational => {
                let ratio = parse_ratio(s).ok_or_else(bad)?;
                Ok(FieldElement {
                    spec: *self,
                    value: Val::Ratio(ratio),
                })
            }
            FieldSpec::ApproxReal(_) => {
                let v: f64 = if let Some(r) = parse_ratio(s) {
                    ratio_to_f64(&r)
                } else {
                    s.parse().map_err(|_| bad())?
                };
                Ok(FieldElement {
                    spec: *self,
                    value: Val::Real(v),
                })
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FieldSpec::Gfp(2) => write!(f, "gf2"),
            FieldSpec::Gfp(p) => write!(f, "gf{p}"),
            FieldSpec::Rational => write!(f, "rational"),
            FieldSpec::ApproxReal(eps) => write!(f, "approx_real(eps={eps})"),
        }
    }
}

// Config form: "gf2" | {"gfp": p} | "rational" | {"approx_real": eps}.
impl Serialize for FieldSpec {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde_json::json;
        let v = match *self {
            FieldSpec::Gfp(2) => json!("gf2"),
            FieldSpec::Gfp(p) => json!({ "gfp": p }),
            FieldSpec::Rational => json!("rational"),
            FieldSpec::ApproxReal(eps) => json!({ "approx_real": eps }),
        };
        v.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        let spec = match &v {
            serde_json::Value::String(s) if s == "gf2" => FieldSpec::Gfp(2),
            serde_json::Value::String(s) if s == "rational" => FieldSpec::Rational,
            serde_json::Value::Object(map) => {
                if let Some(p) = map.get("gfp").and_then(|p| p.as_u64()) {
                    FieldSpec::Gfp(p)
                } else if let Some(eps) = map.get("approx_real").and_then(|e| e.as_f64()) {
                    FieldSpec::ApproxReal(eps)
                } else {
                    return Err(D::Error::custom(format!("unrecognized field spec {v}")));
                }
            }
            other => return Err(D::Error::custom(format!("unrecognized field spec {other}"))),
        };
        spec.validate().map_err(D::Error::custom)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Residue(u64),
    Ratio(BigRational),
    Real(f64),
}

/// One scalar together with the field it lives in.
///
/// Residues are kept in `[0, p)`; rationals fully reduced with positive
/// denominator (the `BigRational` canonical form). Structural equality
/// (`PartialEq`) is exact; use [`FieldElement::field_eq`] for the field's own
/// equality, which is tolerance-aware over the approximate reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldElement {
    spec: FieldSpec,
    value: Val,
}

impl FieldElement {
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        match &self.value {
            Val::Residue(r) => *r == 0,
            Val::Ratio(q) => q.is_zero(),
            Val::Real(v) => *v == 0.0,
        }
    }

    fn check_spec(&self, other: &FieldElement) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::SpecMismatch {
                left: self.spec.to_string(),
                right: other.spec.to_string(),
            })
        }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check_spec(other)?;
        let value = match (&self.value, &other.value) {
            (Val::Residue(a), Val::Residue(b)) => {
                let p = self.modulus();
                Val::Residue(((*a as u128 + *b as u128) % p as u128) as u64)
            }
            (Val::Ratio(a), Val::Ratio(b)) => Val::Ratio(a + b),
            (Val::Real(a), Val::Real(b)) => Val::Real(a + b),
            _ => unreachable!("spec checked"),
        };
        Ok(FieldElement { spec: self.spec, value })
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElement {
        let value = match &self.value {
            Val::Residue(a) => {
                let p = self.modulus();
                Val::Residue(if *a == 0 { 0 } else { p - a })
            }
            Val::Ratio(q) => Val::Ratio(-q),
            Val::Real(v) => Val::Real(-v),
        };
        FieldElement { spec: self.spec, value }
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check_spec(other)?;
        let value = match (&self.value, &other.value) {
            (Val::Residue(a), Val::Residue(b)) => {
                let p = self.modulus();
                Val::Residue(((*a as u128 * *b as u128) % p as u128) as u64)
            }
            (Val::Ratio(a), Val::Ratio(b)) => Val::Ratio(a * b),
            (Val::Real(a), Val::Real(b)) => Val::Real(a * b),
            _ => unreachable!("spec checked"),
        };
        Ok(FieldElement { spec: self.spec, value })
    }

    /// Multiplicative inverse; `mul(a, inv(a)) = 1` for nonzero `a`.
    pub fn inv(&self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let value = match &self.value {
            Val::Residue(a) => Val::Residue(mod_inverse(*a, self.modulus())),
            Val::Ratio(q) => Val::Ratio(q.recip()),
            Val::Real(v) => Val::Real(1.0 / v),
        };
        Ok(FieldElement { spec: self.spec, value })
    }

    /// The field's equality: exact for GF(p) and rationals, within `eps`
    /// over the approximate reals (reflexive, symmetric, not transitive).
    pub fn field_eq(&self, other: &FieldElement) -> Result<bool> {
        self.check_spec(other)?;
        Ok(match (&self.value, &other.value) {
            (Val::Residue(a), Val::Residue(b)) => a == b,
            (Val::Ratio(a), Val::Ratio(b)) => a == b,
            (Val::Real(a), Val::Real(b)) => {
                let eps = match self.spec {
                    FieldSpec::ApproxReal(eps) => eps,
                    _ => unreachable!(),
                };
                (a - b).abs() <= eps
            }
            _ => unreachable!("spec checked"),
        })
    }

    /// Exact rational view, available for the exact fields only.
    pub fn as_ratio(&self) -> Option<&BigRational> {
        match &self.value {
            Val::Ratio(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_residue(&self) -> Option<u64> {
        match &self.value {
            Val::Residue(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match &self.value {
            Val::Real(v) => Some(*v),
            _ => None,
        }
    }

    /// `|a - b|` as an exact rational when the field is exact, f64 otherwise.
    /// For GF(p) the discrete 0/1 gap is returned; there is no archimedean
    /// absolute value to use.
    pub(crate) fn abs_gap(&self, other: &FieldElement) -> Result<Gap> {
        self.check_spec(other)?;
        Ok(match (&self.value, &other.value) {
            (Val::Residue(a), Val::Residue(b)) => {
                if a == b {
                    Gap::Exact(BigRational::zero())
                } else {
                    Gap::Exact(BigRational::one())
                }
            }
            (Val::Ratio(a), Val::Ratio(b)) => Gap::Exact((a - b).abs()),
            (Val::Real(a), Val::Real(b)) => Gap::Real((a - b).abs()),
            _ => unreachable!("spec checked"),
        })
    }

    fn modulus(&self) -> u64 {
        match self.spec {
            FieldSpec::Gfp(p) => p,
            _ => unreachable!("residue value implies GF(p) spec"),
        }
    }
}

/// Coordinate gap used by the metrics; exact where the field is.
pub(crate) enum Gap {
    Exact(BigRational),
    Real(f64),
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Val::Residue(r) => write!(f, "{r}"),
            Val::Ratio(q) => write!(f, "{q}"),
            Val::Real(v) => write!(f, "{v}"),
        }
    }
}

pub(crate) fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(BigRational::new(num, den))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(BigRational::from_integer(n))
    }
}

pub(crate) fn ratio_to_f64(q: &BigRational) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Inverse mod prime p by the extended Euclidean algorithm.
fn mod_inverse(a: u64, p: u64) -> u64 {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "modulus must be prime and a nonzero");
    t.rem_euclid(p as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u64, n: i64) -> FieldElement {
        FieldSpec::gfp(p).unwrap().from_integer(n)
    }

    fn rat(s: &str) -> FieldElement {
        FieldSpec::Rational.parse_element(s).unwrap()
    }

    #[test]
    fn gf2_addition_has_characteristic_two() {
        let one = gf(2, 1);
        assert!(one.add(&one).unwrap().is_zero());
        assert_eq!(one.mul(&one).unwrap(), one);
        assert_eq!(one.inv().unwrap(), one);
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        assert_eq!(rat("1/2").add(&rat("1/3")).unwrap(), rat("5/6"));
        assert_eq!(rat("2/3").mul(&rat("3/4")).unwrap(), rat("1/2"));
        assert_eq!(rat("2/7").inv().unwrap(), rat("7/2"));
    }

    #[test]
    fn gf5_examples() {
        assert_eq!(gf(5, 3).add(&gf(5, 4)).unwrap(), gf(5, 2));
        assert_eq!(gf(5, 3).mul(&gf(5, 4)).unwrap(), gf(5, 2));
        // oracle: exhaustive search for x with 3x = 1 mod 5
        let mut expected = None;
        for x in 0..5 {
            if (3 * x) % 5 == 1 {
                expected = Some(x);
            }
        }
        assert_eq!(expected, Some(2));
        assert_eq!(gf(5, 3).inv().unwrap(), gf(5, 2));
    }

    #[test]
    fn inverse_of_zero_is_an_error() {
        assert!(matches!(gf(5, 0).inv(), Err(Error::ZeroInverse)));
        assert!(matches!(rat("0").inv(), Err(Error::ZeroInverse)));
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let a = gf(2, 1);
        let b = gf(5, 1);
        assert!(matches!(a.add(&b), Err(Error::SpecMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(Error::SpecMismatch { .. })));
    }

    #[test]
    fn field_laws_exhaustive_small_primes() {
        for p in [2u64, 3, 5] {
            let spec = FieldSpec::gfp(p).unwrap();
            let elems: Vec<_> = (0..p).map(|i| spec.element_from_index(i).unwrap()).collect();
            for a in &elems {
                // identities and inverses
                assert_eq!(a.add(&spec.zero()).unwrap(), *a);
                assert_eq!(a.mul(&spec.one()).unwrap(), *a);
                assert!(a.add(&a.neg()).unwrap().is_zero());
                if !a.is_zero() {
                    assert_eq!(a.mul(&a.inv().unwrap()).unwrap(), spec.one());
                    assert_eq!(a.inv().unwrap().inv().unwrap(), *a);
                }
                for b in &elems {
                    assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
                    assert_eq!(a.mul(b).unwrap(), b.mul(a).unwrap());
                    for c in &elems {
                        let assoc_add =
                            a.add(b).unwrap().add(c).unwrap() == a.add(&b.add(c).unwrap()).unwrap();
                        let assoc_mul =
                            a.mul(b).unwrap().mul(c).unwrap() == a.mul(&b.mul(c).unwrap()).unwrap();
                        let distrib = a.mul(&b.add(c).unwrap()).unwrap()
                            == a.mul(b).unwrap().add(&a.mul(c).unwrap()).unwrap();
                        assert!(assoc_add && assoc_mul && distrib);
                    }
                }
            }
        }
    }

    #[test]
    fn approx_real_equality_is_tolerant_not_transitive() {
        let spec = FieldSpec::approx_real(0.1).unwrap();
        let a = spec.parse_element("0.0").unwrap();
        let b = spec.parse_element("0.08").unwrap();
        let c = spec.parse_element("0.16").unwrap();
        assert!(a.field_eq(&a).unwrap());
        assert!(a.field_eq(&b).unwrap() && b.field_eq(&a).unwrap());
        assert!(b.field_eq(&c).unwrap());
        assert!(!a.field_eq(&c).unwrap()); // transitivity genuinely fails
    }

    #[test]
    fn prime_validation() {
        assert!(FieldSpec::gfp(7).is_ok());
        assert!(matches!(FieldSpec::gfp(1), Err(Error::NotPrime(1))));
        assert!(matches!(FieldSpec::gfp(6), Err(Error::NotPrime(6))));
        assert!(matches!(FieldSpec::gfp(9), Err(Error::NotPrime(9))));
    }

    #[test]
    fn spec_json_round_trip() {
        for (spec, json) in [
            (FieldSpec::Gfp(2), "\"gf2\""),
            (FieldSpec::Gfp(5), "{\"gfp\":5}"),
            (FieldSpec::Rational, "\"rational\""),
        ] {
            assert_eq!(serde_json::to_string(&spec).unwrap(), json);
            let back: FieldSpec = serde_json::from_str(json).unwrap();
            assert_eq!(back, spec);
        }
        // gf2 spelled as gfp(2) normalizes
        let back: FieldSpec = serde_json::from_str("{\"gfp\":2}").unwrap();
        assert_eq!(back, FieldSpec::Gfp(2));
        assert!(serde_json::from_str::<FieldSpec>("{\"gfp\":4}").is_err());
    }

    #[test]
    fn element_strings_round_trip() {
        let q = FieldSpec::Rational;
        for s in ["0", "-2", "5/6", "-7/3"] {
            let e = q.parse_element(s).unwrap();
            assert_eq!(q.parse_element(&e.to_string()).unwrap(), e);
        }
        let g = FieldSpec::gfp(5).unwrap();
        assert_eq!(g.parse_element("-1").unwrap(), g.from_integer(4));
    }

    proptest::proptest! {
        #[test]
        fn rational_field_laws(an in -50i64..50, ad in 1i64..20, bn in -50i64..50, bd in 1i64..20, cn in -50i64..50, cd in 1i64..20) {
            let f = |n: i64, d: i64| FieldSpec::Rational.from_ratio(BigRational::new(n.into(), d.into())).unwrap();
            let (a, b, c) = (f(an, ad), f(bn, bd), f(cn, cd));
            proptest::prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            proptest::prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            proptest::prop_assert_eq!(
                a.add(&b).unwrap().add(&c).unwrap(),
                a.add(&b.add(&c).unwrap()).unwrap()
            );
            proptest::prop_assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
            if !a.is_zero() {
                proptest::prop_assert_eq!(a.inv().unwrap().inv().unwrap(), a);
            }
        }
    }
}
