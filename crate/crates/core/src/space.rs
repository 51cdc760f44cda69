//! Finite-dimensional value spaces over a field, with translation-invariant
//! metrics and a fixed countable dense subset.
//!
//! The default demonstration space is GF(2)^1 with the discrete metric: small
//! enough that every oracle can be exhaustive. Rational coordinate spaces use
//! the sup metric; the euclidean metric is only offered over the approximate
//! reals.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{ratio_to_f64, FieldElement, FieldSpec, Gap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// 0 when equal, 1 otherwise.
    Discrete,
    /// Fraction of differing coordinates.
    Hamming,
    /// Max coordinate gap; rational coordinates only.
    SupAbs,
    /// Usual L2 distance; approximate reals only.
    Euclidean,
}

impl MetricKind {
    fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Discrete => "discrete",
            MetricKind::Hamming => "hamming",
            MetricKind::SupAbs => "sup_abs",
            MetricKind::Euclidean => "euclidean",
        }
    }
}

/// The space `E = F^k` together with its metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSpaceSpec {
    pub field: FieldSpec,
    pub dim: usize,
    pub metric: MetricKind,
}

impl ValueSpaceSpec {
    pub fn new(field: FieldSpec, dim: usize, metric: MetricKind) -> Result<Self> {
        field.validate()?;
        match metric {
            MetricKind::SupAbs if field != FieldSpec::Rational => {
                return Err(Error::MetricIncompatible {
                    metric: "sup_abs".into(),
                    needs: "rational",
                })
            }
            MetricKind::Euclidean if !matches!(field, FieldSpec::ApproxReal(_)) => {
                return Err(Error::MetricIncompatible {
                    metric: "euclidean".into(),
                    needs: "approx_real",
                })
            }
            _ => {}
        }
        Ok(ValueSpaceSpec { field, dim, metric })
    }

    /// GF(2)^1 with the discrete metric.
    pub fn gf2_line() -> Self {
        ValueSpaceSpec {
            field: FieldSpec::gf2(),
            dim: 1,
            metric: MetricKind::Discrete,
        }
    }

    /// Q^1 with the sup metric.
    pub fn rational_line() -> Self {
        ValueSpaceSpec {
            field: FieldSpec::Rational,
            dim: 1,
            metric: MetricKind::SupAbs,
        }
    }

    /// |E| when finite: p^dim, saturating at u64::MAX. dim = 0 gives 1.
    pub fn finite_order(&self) -> Option<u64> {
        let p = match self.field.order() {
            Some(p) => p,
            None if self.dim == 0 => return Some(1),
            None => return None,
        };
        let mut n: u64 = 1;
        for _ in 0..self.dim {
            n = n.saturating_mul(p);
        }
        Some(n)
    }

    pub fn is_trivial(&self) -> bool {
        self.dim == 0
    }

    pub fn zero(&self) -> Vector {
        Vector {
            spec: *self,
            coords: (0..self.dim).map(|_| self.field.zero()).collect(),
        }
    }

    pub fn from_coords(&self, coords: Vec<FieldElement>) -> Result<Vector> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: coords.len(),
                right: self.dim,
            });
        }
        for c in &coords {
            if c.spec() != self.field {
                return Err(Error::SpecMismatch {
                    left: c.spec().to_string(),
                    right: self.field.to_string(),
                });
            }
        }
        Ok(Vector { spec: *self, coords })
    }

    /// Parses `"(a, b, c)"`, or a bare scalar when `dim == 1`, or `"()"` for
    /// the trivial space.
    pub fn parse_vector(&self, s: &str) -> Result<Vector> {
        let s = s.trim();
        let inner = if let Some(stripped) = s.strip_prefix('(') {
            stripped.strip_suffix(')').ok_or(Error::Parse {
                what: "vector",
                input: s.to_string(),
            })?
        } else {
            s
        };
        let parts: Vec<&str> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').collect()
        };
        let coords = parts
            .iter()
            .map(|p| self.field.parse_element(p))
            .collect::<Result<Vec<_>>>()?;
        self.from_coords(coords)
    }
}

impl Serialize for ValueSpaceSpec {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = ser.serialize_map(Some(2))?;
        map.serialize_entry("dim", &self.dim)?;
        map.serialize_entry("metric", self.metric.as_str())?;
        map.end()
    }
}

/// A space spec arriving from config before the tree field is known.
#[derive(Debug, Clone, Deserialize)]
pub struct SpaceConfig {
    pub dim: usize,
    pub metric: String,
}

impl SpaceConfig {
    /// Binds the config to the tree's field; mixed-field setups are rejected
    /// by the metric compatibility rules.
    pub fn bind(&self, field: FieldSpec) -> Result<ValueSpaceSpec> {
        let metric = match self.metric.as_str() {
            "discrete" => MetricKind::Discrete,
            "hamming" => MetricKind::Hamming,
            "sup_abs" => MetricKind::SupAbs,
            "euclidean" => MetricKind::Euclidean,
            other => {
                return Err(Error::Parse {
                    what: "metric",
                    input: other.to_string(),
                })
            }
        };
        ValueSpaceSpec::new(field, self.dim, metric)
    }
}

impl<'de> Deserialize<'de> for MetricKind {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        match s.as_str() {
            "discrete" => Ok(MetricKind::Discrete),
            "hamming" => Ok(MetricKind::Hamming),
            "sup_abs" => Ok(MetricKind::SupAbs),
            "euclidean" => Ok(MetricKind::Euclidean),
            other => Err(D::Error::custom(format!("unknown metric {other:?}"))),
        }
    }
}

/// A point of the value space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    spec: ValueSpaceSpec,
    coords: Vec<FieldElement>,
}

impl Vector {
    pub fn spec(&self) -> ValueSpaceSpec {
        self.spec
    }

    pub fn coords(&self) -> &[FieldElement] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    fn check_spec(&self, other: &Vector) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::SpecMismatch {
                left: format!("{:?}", self.spec),
                right: format!("{:?}", other.spec),
            })
        }
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.check_spec(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vector { spec: self.spec, coords })
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.check_spec(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vector { spec: self.spec, coords })
    }

    pub fn scale(&self, a: &FieldElement) -> Result<Vector> {
        let coords = self
            .coords
            .iter()
            .map(|c| a.mul(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vector { spec: self.spec, coords })
    }

    /// The space's own equality (tolerance-aware over approximate reals).
    pub fn value_eq(&self, other: &Vector) -> Result<bool> {
        self.check_spec(other)?;
        for (a, b) in self.coords.iter().zip(&other.coords) {
            if !a.field_eq(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.len() == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A nonnegative distance; exact rational whenever the metric is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Exact(BigRational),
    Approx(f64),
}

impl MetricValue {
    pub fn zero() -> Self {
        MetricValue::Exact(BigRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MetricValue::Exact(q) => q.is_zero(),
            MetricValue::Approx(v) => *v == 0.0,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            MetricValue::Exact(q) => Some(q),
            MetricValue::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            MetricValue::Exact(q) => ratio_to_f64(q),
            MetricValue::Approx(v) => *v,
        }
    }

    /// `d / (1 + d)`, strictly below 1 for finite d.
    pub fn bounded(&self) -> MetricValue {
        match self {
            MetricValue::Exact(d) => {
                MetricValue::Exact(d / (BigRational::one() + d))
            }
            MetricValue::Approx(d) => MetricValue::Approx(d / (1.0 + d)),
        }
    }

    pub fn add(&self, other: &MetricValue) -> MetricValue {
        match (self, other) {
            (MetricValue::Exact(a), MetricValue::Exact(b)) => MetricValue::Exact(a + b),
            _ => MetricValue::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul_ratio(&self, q: &BigRational) -> MetricValue {
        match self {
            MetricValue::Exact(d) => MetricValue::Exact(d * q),
            MetricValue::Approx(d) => MetricValue::Approx(d * ratio_to_f64(q)),
        }
    }

    /// Strict comparison against an exact rational bound. Exact values
    /// compare exactly; approximate ones through f64.
    pub fn lt_ratio(&self, bound: &BigRational) -> bool {
        match self {
            MetricValue::Exact(d) => d < bound,
            MetricValue::Approx(d) => *d < ratio_to_f64(bound),
        }
    }

    pub fn compare(&self, other: &MetricValue) -> Ordering {
        match (self, other) {
            (MetricValue::Exact(a), MetricValue::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Exact(q) => write!(f, "{q}"),
            MetricValue::Approx(v) => write!(f, "{v}"),
        }
    }
}

/// The spec's translation-invariant metric.
pub fn distance(u: &Vector, v: &Vector) -> Result<MetricValue> {
    u.check_spec(v)?;
    let spec = u.spec;
    match spec.metric {
        MetricKind::Discrete => Ok(if u.value_eq(v)? {
            MetricValue::zero()
        } else {
            MetricValue::Exact(BigRational::one())
        }),
        MetricKind::Hamming => {
            if spec.dim == 0 {
                return Ok(MetricValue::zero());
            }
            let mut diff = 0usize;
            for (a, b) in u.coords.iter().zip(&v.coords) {
                if !a.field_eq(b)? {
                    diff += 1;
                }
            }
            Ok(MetricValue::Exact(BigRational::new(
                BigInt::from(diff),
                BigInt::from(spec.dim),
            )))
        }
        MetricKind::SupAbs => {
            let mut max = BigRational::zero();
            for (a, b) in u.coords.iter().zip(&v.coords) {
                match a.abs_gap(b)? {
                    Gap::Exact(g) => {
                        if g > max {
                            max = g;
                        }
                    }
                    Gap::Real(_) => unreachable!("sup_abs is rational-only"),
                }
            }
            Ok(MetricValue::Exact(max))
        }
        MetricKind::Euclidean => {
            let mut sum = 0.0f64;
            for (a, b) in u.coords.iter().zip(&v.coords) {
                match a.abs_gap(b)? {
                    Gap::Real(g) => sum += g * g,
                    Gap::Exact(g) => {
                        let g = ratio_to_f64(&g);
                        sum += g * g;
                    }
                }
            }
            Ok(MetricValue::Approx(sum.sqrt()))
        }
    }
}

/// `d/(1+d)` for the spec's metric; always in `[0, 1)`.
pub fn bounded_distance(u: &Vector, v: &Vector) -> Result<MetricValue> {
    Ok(distance(u, v)?.bounded())
}

/// The fixed countable dense subset of the space.
///
/// Finite spaces are cycled exhaustively (index i picks the base-p digits of
/// `i mod p^k`). Rational coordinates use a height-diagonal enumeration of
/// scalars (`0, 1, -1, 1/2, -1/2, 2, -2, 1/3, ...`), combined across
/// coordinates by total-index diagonals, so every tuple has a finite index.
/// The approximate reals reuse the rational grid.
pub fn dense_element(spec: &ValueSpaceSpec, index: u64) -> Vector {
    if spec.dim == 0 {
        return spec.zero();
    }
    match spec.field.order() {
        Some(p) => {
            let total = spec.finite_order().unwrap_or(u64::MAX);
            let mut i = index % total;
            let coords = (0..spec.dim)
                .map(|_| {
                    let d = i % p;
                    i /= p;
                    spec.field.element_from_index(d).unwrap()
                })
                .collect();
            Vector { spec: *spec, coords }
        }
        None => {
            let tuple = diagonal_tuple(spec.dim, index);
            let coords = tuple
                .into_iter()
                .map(|scalar_index| {
                    let q = dense_rational(scalar_index);
                    spec.field.from_ratio(q).expect("infinite fields accept rationals")
                })
                .collect();
            Vector { spec: *spec, coords }
        }
    }
}

/// First nonzero element of the dense subset; errors on the trivial space.
pub fn dense_nonzero(spec: &ValueSpaceSpec) -> Result<Vector> {
    if spec.dim == 0 {
        return Err(Error::TrivialValueSpace);
    }
    for i in 1..=4 {
        let v = dense_element(spec, i);
        if !v.is_zero() {
            return Ok(v);
        }
    }
    unreachable!("a nontrivial space has a nonzero dense element among the first few")
}

/// The scalar enumeration 0, 1, -1, 1/2, -1/2, 2, -2, 1/3, -1/3, 2/3, ...:
/// height h = max(|num|, den) increases; within a height, denominators
/// descend (so 1/h comes before h), numerators ascend, plus before minus.
pub fn dense_rational(index: u64) -> BigRational {
    if index == 0 {
        return BigRational::zero();
    }
    let mut remaining = index - 1;
    let mut h: u64 = 1;
    loop {
        for den in (1..=h).rev() {
            for num in 1..=h {
                if num.max(den) != h || gcd(num, den) != 1 {
                    continue;
                }
                for sign in [1i64, -1] {
                    if remaining == 0 {
                        return BigRational::new(
                            BigInt::from(sign * num as i64),
                            BigInt::from(den),
                        );
                    }
                    remaining -= 1;
                }
            }
        }
        h += 1;
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Unranks `index` into a k-tuple of scalar indices, diagonal by total sum:
/// all tuples with sum s (in lexicographic order) come before sum s+1.
fn diagonal_tuple(k: usize, index: u64) -> Vec<u64> {
    if k == 1 {
        return vec![index];
    }
    let mut remaining = index as u128;
    let mut s: u64 = 0;
    loop {
        let count = compositions(s, k);
        if remaining < count {
            return unrank_composition(s, k, remaining);
        }
        remaining -= count;
        s += 1;
    }
}

/// Number of k-tuples of nonnegative integers summing to s: C(s+k-1, k-1),
/// saturating at u128::MAX.
fn compositions(s: u64, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..(k - 1) as u64 {
        acc = acc.saturating_mul((s + i + 1) as u128) / (i + 1) as u128;
    }
    acc
}

fn unrank_composition(s: u64, k: usize, mut rank: u128) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut rest = s;
    for pos in 0..k {
        if pos == k - 1 {
            out.push(rest);
            break;
        }
        let mut first = 0u64;
        loop {
            let below = compositions(rest - first, k - pos - 1);
            if rank < below {
                out.push(first);
                rest -= first;
                break;
            }
            rank -= below;
            first += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf2k(k: usize) -> ValueSpaceSpec {
        ValueSpaceSpec::new(FieldSpec::gf2(), k, MetricKind::Discrete).unwrap()
    }

    fn vec_of(spec: &ValueSpaceSpec, s: &str) -> Vector {
        spec.parse_vector(s).unwrap()
    }

    #[test]
    fn discrete_metric_basics() {
        let spec = gf2k(2);
        let a = vec_of(&spec, "(1, 0)");
        let b = vec_of(&spec, "(0, 0)");
        assert!(distance(&a, &a).unwrap().is_zero());
        assert_eq!(
            distance(&a, &b).unwrap(),
            MetricValue::Exact(BigRational::one())
        );
    }

    #[test]
    fn sup_metric_takes_the_max_gap() {
        let spec = ValueSpaceSpec::new(FieldSpec::Rational, 2, MetricKind::SupAbs).unwrap();
        let u = vec_of(&spec, "(1/2, 0)");
        let v = vec_of(&spec, "(0, 1/3)");
        assert_eq!(
            distance(&u, &v).unwrap(),
            MetricValue::Exact(BigRational::new(1.into(), 2.into()))
        );
    }

    #[test]
    fn bounded_metric_values() {
        let half = BigRational::new(1.into(), 2.into());
        let one = MetricValue::Exact(BigRational::one());
        assert_eq!(one.bounded(), MetricValue::Exact(half));
        assert!(MetricValue::zero().bounded().is_zero());
        let three = MetricValue::Exact(BigRational::from_integer(3.into()));
        assert_eq!(
            three.bounded(),
            MetricValue::Exact(BigRational::new(3.into(), 4.into()))
        );
    }

    #[test]
    fn metric_field_compatibility_enforced() {
        assert!(matches!(
            ValueSpaceSpec::new(FieldSpec::gf2(), 1, MetricKind::SupAbs),
            Err(Error::MetricIncompatible { .. })
        ));
        assert!(matches!(
            ValueSpaceSpec::new(FieldSpec::Rational, 1, MetricKind::Euclidean),
            Err(Error::MetricIncompatible { .. })
        ));
    }

    #[test]
    fn translation_invariance_exhaustive_gf2() {
        for k in 1..=3usize {
            let spec = gf2k(k);
            let n = spec.finite_order().unwrap();
            let all: Vec<_> = (0..n).map(|i| dense_element(&spec, i)).collect();
            for u in &all {
                for v in &all {
                    let d = distance(u, v).unwrap();
                    for z in &all {
                        let du = u.add(z).unwrap();
                        let dv = v.add(z).unwrap();
                        assert_eq!(distance(&du, &dv).unwrap(), d);
                    }
                }
            }
        }
    }

    #[test]
    fn metric_axioms_on_sampled_triples() {
        let spec = ValueSpaceSpec::new(FieldSpec::Rational, 2, MetricKind::SupAbs).unwrap();
        let pts: Vec<_> = (0..12).map(|i| dense_element(&spec, i)).collect();
        for a in &pts {
            for b in &pts {
                let dab = distance(a, b).unwrap();
                assert_eq!(dab, distance(b, a).unwrap());
                assert_eq!(dab.is_zero(), a.value_eq(b).unwrap());
                for c in &pts {
                    let dac = distance(a, c).unwrap();
                    let dcb = distance(c, b).unwrap();
                    assert!(dab.compare(&dac.add(&dcb)) != Ordering::Greater);
                }
            }
        }
    }

    #[test]
    fn scalar_action_on_metrics() {
        // discrete: d(au, av) = d(u, v) for a != 0
        let spec = gf2k(2);
        let one = FieldSpec::gf2().one();
        for i in 0..4 {
            for j in 0..4 {
                let u = dense_element(&spec, i);
                let v = dense_element(&spec, j);
                assert_eq!(
                    distance(&u.scale(&one).unwrap(), &v.scale(&one).unwrap()).unwrap(),
                    distance(&u, &v).unwrap()
                );
            }
        }
        // sup_abs: d(au, av) = |a| d(u, v)
        let spec = ValueSpaceSpec::new(FieldSpec::Rational, 2, MetricKind::SupAbs).unwrap();
        let a = FieldSpec::Rational.parse_element("-3/2").unwrap();
        let abs_a = BigRational::new(3.into(), 2.into());
        for i in 0..10 {
            for j in 0..10 {
                let u = dense_element(&spec, i);
                let v = dense_element(&spec, j);
                let lhs = distance(&u.scale(&a).unwrap(), &v.scale(&a).unwrap()).unwrap();
                let rhs = distance(&u, &v).unwrap().mul_ratio(&abs_a);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn dense_enumeration_covers_finite_spaces() {
        for (p, k) in [(2u64, 1usize), (2, 3), (3, 2), (5, 1)] {
            let spec =
                ValueSpaceSpec::new(FieldSpec::gfp(p).unwrap(), k, MetricKind::Discrete).unwrap();
            let order = spec.finite_order().unwrap();
            let mut seen = std::collections::HashSet::new();
            for i in 0..order {
                seen.insert(dense_element(&spec, i).to_string());
            }
            assert_eq!(seen.len() as u64, order);
            // and then it repeats
            assert_eq!(dense_element(&spec, order), dense_element(&spec, 0));
        }
    }

    #[test]
    fn dense_rational_documented_prefix() {
        let want = ["0", "1", "-1", "1/2", "-1/2", "2", "-2", "1/3", "-1/3"];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(dense_rational(i as u64).to_string(), *w);
        }
    }

    #[test]
    fn dense_tuples_hit_every_small_pair() {
        let spec = ValueSpaceSpec::new(FieldSpec::Rational, 2, MetricKind::SupAbs).unwrap();
        let mut seen = std::collections::HashSet::new();
        for i in 0..200 {
            seen.insert(dense_element(&spec, i).to_string());
        }
        assert_eq!(seen.len(), 200); // no repeats: the enumeration is injective
        assert!(seen.contains("(0, 0)"));
        assert!(seen.contains("(1, 1)"));
        assert!(seen.contains("(-1, 1/2)"));
    }

    #[test]
    fn trivial_space_is_a_single_point() {
        let spec = ValueSpaceSpec::new(FieldSpec::gf2(), 0, MetricKind::Discrete).unwrap();
        for i in [0u64, 1, 7] {
            assert!(dense_element(&spec, i).is_zero());
        }
        assert!(matches!(dense_nonzero(&spec), Err(Error::TrivialValueSpace)));
    }

    #[test]
    fn vector_strings_round_trip() {
        let spec = ValueSpaceSpec::new(FieldSpec::Rational, 3, MetricKind::SupAbs).unwrap();
        let v = vec_of(&spec, "(1/2, -3, 0)");
        assert_eq!(spec.parse_vector(&v.to_string()).unwrap(), v);
        let line = ValueSpaceSpec::rational_line();
        let w = line.parse_vector("5/6").unwrap();
        assert_eq!(w.to_string(), "5/6");
    }
}
