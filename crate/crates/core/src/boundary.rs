//! Boundary step functions and the convergence-in-probability distance.
//!
//! At truncation depth D the boundary is the sector partition of T_D, so a
//! measurable boundary function is exactly "one value per vertex of some
//! level n": a step function. Functions are stored at their natural level
//! and refined lazily, only inside the distance computation, to avoid
//! exponential blowup when comparing shallow functions.

use num::{BigInt, BigRational, One, Zero};
use rand::Rng;

use crate::enumerate::{assignment_values, level_assignment};
use crate::error::{Error, Result};
use crate::space::{bounded_distance, dense_nonzero, MetricValue, ValueSpaceSpec, Vector};
use crate::tree::{VertexRef, WeightedTree};

/// A boundary function measurable at level `level`: one value per sector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    level: usize,
    values: Vec<Vector>,
}

impl StepFunction {
    pub fn new(level: usize, values: Vec<Vector>) -> Self {
        StepFunction { level, values }
    }

    /// The constant function, measurable already at the root.
    pub fn constant(value: Vector) -> Self {
        StepFunction { level: 0, values: vec![value] }
    }

    pub fn zero(space: ValueSpaceSpec) -> Self {
        Self::constant(space.zero())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[Vector] {
        &self.values
    }

    pub fn check_tree(&self, t: &WeightedTree) -> Result<()> {
        let want = t.level_size(self.level)?;
        if self.values.len() != want {
            return Err(Error::LevelSizeMismatch {
                level: self.level,
                got: self.values.len(),
                want,
            });
        }
        Ok(())
    }

    /// The same boundary function expressed at a deeper level: each level-m
    /// vertex takes its ancestor's value.
    pub fn refine(&self, m: usize, t: &WeightedTree) -> Result<StepFunction> {
        self.check_tree(t)?;
        if m < self.level || m > t.depth() {
            return Err(Error::LevelOutOfRange { level: m, max: t.depth() });
        }
        let mut values = self.values.clone();
        for lvl in self.level..m {
            let next_size = t.level_size(lvl + 1)?;
            let mut next = Vec::with_capacity(next_size);
            for j in 0..next_size {
                let p = t.parent(VertexRef { level: lvl + 1, index: j })?;
                next.push(values[p].clone());
            }
            values = next;
        }
        Ok(StepFunction { level: m, values })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "level": self.level,
            "values": self.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// An open ball in the boundary function space.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: StepFunction,
    pub radius: BigRational,
}

impl Ball {
    pub fn new(center: StepFunction, radius: BigRational) -> Result<Self> {
        if radius <= BigRational::zero() {
            return Err(Error::InvalidConfig(format!("ball radius {radius} must be positive")));
        }
        Ok(Ball { center, radius })
    }
}

/// The convergence-in-probability distance: refine both functions to the
/// deeper of the two levels, then integrate `d/(1+d)` sector by sector
/// against the exact sector measures. Exact whenever the metric is, and
/// always strictly below 1.
pub fn prob_distance(h: &StepFunction, g: &StepFunction, t: &WeightedTree) -> Result<MetricValue> {
    h.check_tree(t)?;
    g.check_tree(t)?;
    let level = h.level.max(g.level);
    let hr = h.refine(level, t)?;
    let gr = g.refine(level, t)?;
    let probs = t.sector_probs_at_level(level)?;
    let mut acc = MetricValue::zero();
    for ((hv, gv), p) in hr.values.iter().zip(&gr.values).zip(&probs) {
        if hv == gv {
            continue; // structurally equal sectors contribute nothing
        }
        let b = bounded_distance(hv, gv)?;
        if b.is_zero() {
            continue;
        }
        acc = acc.add(&b.mul_ratio(p));
    }
    Ok(acc)
}

/// The `j`-th element of the fixed dense sequence of boundary targets.
///
/// Targets are enumerated in blocks (level, value-grid radius), diagonally,
/// with values drawn from the dense subset of the space; for a finite space
/// every step function of every level appears exactly once. The order is
/// frozen: builders and certificates refer to targets by this index.
pub fn dense_target(t: &WeightedTree, space: ValueSpaceSpec, j: u64) -> Result<StepFunction> {
    let a = level_assignment(t.level_sizes(), t.depth(), space.finite_order(), j)?;
    Ok(StepFunction::new(a.level, assignment_values(&space, &a)))
}

/// A boundary function different from `h` but closer than `eps`: the witness
/// that no boundary function is isolated. Walks the minimal-probability path
/// from the root to the first sector with measure strictly below `eps`, then
/// swaps `h`'s values on that sector (nonzero becomes zero, zero becomes a
/// fixed nonzero element).
pub fn perturb_nonisolated(
    h: &StepFunction,
    eps: &BigRational,
    t: &WeightedTree,
) -> Result<StepFunction> {
    h.check_tree(t)?;
    let space = match h.values.first() {
        Some(v) => v.spec(),
        None => return Err(Error::InvalidConfig("empty step function".into())),
    };
    if space.is_trivial() {
        return Err(Error::TrivialValueSpace);
    }
    if eps <= &BigRational::zero() {
        return Err(Error::InvalidConfig("perturbation needs eps > 0".into()));
    }
    let v = dense_nonzero(&space)?;

    // first vertex on the greedy minimal-probability path with P(B_x) < eps
    let mut x = VertexRef::root();
    let mut prob = BigRational::one();
    loop {
        if &prob < eps {
            break;
        }
        if x.level >= t.depth() {
            return Err(Error::NoSmallSector { eps: eps.to_string(), depth: t.depth() });
        }
        let next = t.min_prob_descendant(x, x.level + 1)?;
        prob *= t.prob_into(next)?;
        x = next;
    }

    let level = h.level.max(x.level);
    let refined = h.refine(level, t)?;
    let mut values = refined.values.clone();
    let mut changed = false;
    for (j, val) in values.iter_mut().enumerate() {
        let leaf = VertexRef { level, index: j };
        if t.ancestor_index(leaf, x.level)? != x.index {
            continue;
        }
        *val = if val.is_zero() { v.clone() } else { space.zero() };
        changed = true;
    }
    debug_assert!(changed, "the chosen sector always contains vertices");
    Ok(StepFunction { level, values })
}

/// Monte Carlo estimate of [`prob_distance`]: sample boundary rays by the
/// q-walk and average the bounded distance. The mean is an exact rational
/// when the metric is exact, so the comparison against the exact integral
/// needs no floating tolerance of its own.
pub fn monte_carlo_prob_distance<R: Rng>(
    h: &StepFunction,
    g: &StepFunction,
    t: &WeightedTree,
    samples: u32,
    rng: &mut R,
) -> Result<MetricValue> {
    h.check_tree(t)?;
    g.check_tree(t)?;
    let level = h.level.max(g.level);
    let hr = h.refine(level, t)?;
    let gr = g.refine(level, t)?;
    let denom = BigInt::from(u64::MAX) + BigInt::one();
    let mut sum = MetricValue::zero();
    for _ in 0..samples {
        // q-walk from the root to `level`
        let mut x = VertexRef::root();
        while x.level < level {
            let u = BigRational::new(BigInt::from(rng.gen::<u64>()), denom.clone());
            let mut cum = BigRational::zero();
            let range = t.children(x)?;
            let mut chosen = range.end - 1;
            for j in range.clone() {
                cum += t.prob_into(VertexRef { level: x.level + 1, index: j })?;
                if u < cum {
                    chosen = j;
                    break;
                }
            }
            x = VertexRef { level: x.level + 1, index: chosen };
        }
        sum = sum.add(&bounded_distance(&hr.values[x.index], &gr.values[x.index])?);
    }
    Ok(sum.mul_ratio(&BigRational::new(BigInt::one(), BigInt::from(samples))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::space::dense_element;
    use crate::tree::TreeConfig;
    use num::Signed;
    use rand::SeedableRng;

    fn gf2_binary(depth: usize) -> WeightedTree {
        TreeConfig::uniform(depth, 2, FieldSpec::gf2()).build().unwrap()
    }

    fn space() -> ValueSpaceSpec {
        ValueSpaceSpec::gf2_line()
    }

    fn step(level: usize, bits: &[u64]) -> StepFunction {
        let s = space();
        StepFunction::new(level, bits.iter().map(|&b| dense_element(&s, b)).collect())
    }

    #[test]
    fn refine_keeps_the_boundary_function() {
        let t = gf2_binary(3);
        let h = step(1, &[1, 0]);
        let same = h.refine(1, &t).unwrap();
        assert_eq!(same, h);
        let deeper = h.refine(3, &t).unwrap();
        assert_eq!(deeper.values().len(), 8);
        // left subtree all ones, right all zeros
        for j in 0..4 {
            assert!(!deeper.values()[j].is_zero());
            assert!(deeper.values()[4 + j].is_zero());
        }
        assert!(prob_distance(&h, &deeper, &t).unwrap().is_zero());

        // constant refined anywhere stays constant
        let c = step(0, &[1]);
        assert_eq!(c.refine(2, &t).unwrap(), step(2, &[1, 1, 1, 1]));
    }

    #[test]
    fn prob_distance_examples() {
        let t = gf2_binary(3);
        let h = step(2, &[0, 0, 0, 0]);
        // differ on exactly one level-2 sector: (1/4) * (1/2)
        let g = step(2, &[1, 0, 0, 0]);
        assert_eq!(
            prob_distance(&h, &g, &t).unwrap(),
            MetricValue::Exact(BigRational::new(1.into(), 8.into()))
        );
        // differ everywhere: sum P * 1/2 = 1/2
        let g_all = step(2, &[1, 1, 1, 1]);
        assert_eq!(
            prob_distance(&h, &g_all, &t).unwrap(),
            MetricValue::Exact(BigRational::new(1.into(), 2.into()))
        );
        assert!(prob_distance(&h, &h, &t).unwrap().is_zero());
    }

    #[test]
    fn prob_distance_is_refinement_invariant_and_bounded() {
        let t = gf2_binary(4);
        let h = step(1, &[1, 0]);
        let g = step(2, &[0, 1, 1, 0]);
        let d = prob_distance(&h, &g, &t).unwrap();
        for m in 2..=4 {
            let hr = h.refine(m, &t).unwrap();
            let gr = g.refine(m, &t).unwrap();
            assert_eq!(prob_distance(&hr, &gr, &t).unwrap(), d);
        }
        assert!(d.lt_ratio(&BigRational::one()));
    }

    #[test]
    fn prob_distance_triangle_inequality_sampled() {
        let t = gf2_binary(3);
        let functions: Vec<StepFunction> =
            (0..16).map(|c| step(2, &[c & 1, (c >> 1) & 1, (c >> 2) & 1, (c >> 3) & 1])).collect();
        for a in &functions {
            for b in &functions {
                let dab = prob_distance(a, b, &t).unwrap();
                assert_eq!(dab, prob_distance(b, a, &t).unwrap());
                for c in &functions {
                    let dac = prob_distance(a, c, &t).unwrap();
                    let dcb = prob_distance(c, b, &t).unwrap();
                    assert!(dab.compare(&dac.add(&dcb)) != std::cmp::Ordering::Greater);
                }
            }
        }
    }

    #[test]
    fn dense_targets_follow_the_frozen_order() {
        let t = gf2_binary(3);
        let s = space();
        // j = 0 is the zero function at level 0
        let first = dense_target(&t, s, 0).unwrap();
        assert_eq!(first.level(), 0);
        assert!(first.values()[0].is_zero());
        // levels 0 and 1 contribute 2 + 4 targets; level 2 starts at j = 6
        for j in 0..6 {
            assert!(dense_target(&t, s, j).unwrap().level() <= 1);
        }
        assert_eq!(dense_target(&t, s, 6).unwrap().level(), 2);
        // every level-1 step function over GF(2) appears at some j <= 6
        let mut level1 = std::collections::HashSet::new();
        for j in 0..=6 {
            let h = dense_target(&t, s, j).unwrap();
            if h.level() == 1 {
                level1.insert(format!("{:?}", h.values().iter().map(|v| v.to_string()).collect::<Vec<_>>()));
            }
        }
        assert_eq!(level1.len(), 4);
    }

    #[test]
    fn dense_target_exhaustion_reports_the_max_index() {
        let t = gf2_binary(1);
        let s = space();
        // 2 targets at level 0 plus 4 at level 1
        match dense_target(&t, s, 6) {
            Err(Error::EnumerationExhausted { max }) => assert_eq!(max, 5),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn perturbation_is_small_but_nonzero() {
        let t = gf2_binary(4);
        let h = step(1, &[1, 0]);
        let eps = BigRational::new(1.into(), 4.into());
        let g = perturb_nonisolated(&h, &eps, &t).unwrap();
        let d = prob_distance(&h, &g, &t).unwrap();
        assert!(!d.is_zero());
        assert!(d.lt_ratio(&eps));
        // the greedy walk stops at level 3 (P = 1/8), flipping one sector:
        // distance lands at exactly (1/8) * (1/2)
        assert_eq!(d, MetricValue::Exact(BigRational::new(1.into(), 16.into())));

        // eps > 1 lets the root sector do
        let wide = BigRational::from_integer(2.into());
        let g2 = perturb_nonisolated(&h, &wide, &t).unwrap();
        assert!(!prob_distance(&h, &g2, &t).unwrap().is_zero());

        // too small for this depth
        let tiny = BigRational::new(1.into(), 100.into());
        assert!(matches!(
            perturb_nonisolated(&h, &tiny, &gf2_binary(2)),
            Err(Error::NoSmallSector { .. })
        ));

        // trivial space has a one-point function space
        let trivial = ValueSpaceSpec::new(FieldSpec::gf2(), 0, crate::space::MetricKind::Discrete).unwrap();
        let h0 = StepFunction::zero(trivial);
        assert!(matches!(
            perturb_nonisolated(&h0, &eps, &t),
            Err(Error::TrivialValueSpace)
        ));
    }

    #[test]
    fn monte_carlo_agrees_with_the_exact_integral() {
        let t = gf2_binary(5);
        let h = step(2, &[1, 0, 1, 0]);
        let g = step(1, &[0, 1]);
        let exact = prob_distance(&h, &g, &t).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let n = 10_000u32;
        let mc = monte_carlo_prob_distance(&h, &g, &t, n, &mut rng).unwrap();
        let tol = BigRational::new(4.into(), 100.into()); // 4 / sqrt(10^4)
        let gap = match (mc.as_exact(), exact.as_exact()) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => panic!("exact metrics expected"),
        };
        assert!(gap < tol, "gap {gap} exceeded {tol}");
    }

    #[test]
    fn ball_radius_must_be_positive() {
        let center = StepFunction::zero(space());
        assert!(Ball::new(center.clone(), BigRational::zero()).is_err());
        assert!(Ball::new(center, BigRational::new(1.into(), 2.into())).is_ok());
    }
}
