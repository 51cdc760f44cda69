//! Certificate-producing builders for universal functions and spanning
//! families.
//!
//! The core move is a *stage*: pick a level, designate one minimal-measure
//! free slot per frontier vertex, prescribe a refined target everywhere
//! else, and solve the extension. Only the slot sectors can disagree with
//! the target, so the achieved distance is strictly below the slot measure,
//! which the level choice keeps below the stage tolerance. Universality
//! certificates are lists of such stages, one per dense target, each with
//! its exact achieved distance; spanning families interleave ordinary
//! targets with zero targets and hand the recorded zero-hit levels to the
//! next member as its only admissible schedule.

use num::{BigInt, BigRational, One};

use crate::boundary::{dense_target, prob_distance, StepFunction};
use crate::enumerate::{assignment_values, level_assignment};
use crate::error::{Error, Result};
use crate::field::FieldElement;
use crate::harmonic::{
    extend_constant, extend_with_targets, harmonic_stub, linear_combination, targets_from_step,
    FreeSlots, TreeFunction,
};
use crate::space::{MetricValue, ValueSpaceSpec};
use crate::tree::WeightedTree;

/// What one extension stage did, with its exact numbers.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub label: String,
    pub front_before: usize,
    pub level: usize,
    pub slots: Vec<usize>,
    /// Exact total measure of the slot sectors; the only place error can live.
    pub free_mass: BigRational,
    /// Exact distance between the stage's projection and its target.
    pub achieved: MetricValue,
    pub tolerance: BigRational,
}

/// A build that ran out of tree before finishing its plan.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    pub requested: u64,
    pub achieved: u64,
    pub detail: String,
}

/// Runs one stage: extend `f` to `level` hitting `target` within `tolerance`.
///
/// The slot measure is checked against the tolerance exactly, and so is the
/// achieved distance afterwards; both inequalities hold by construction, so
/// a violation is a bug, not a data condition.
pub fn run_stage(
    t: &WeightedTree,
    f: &TreeFunction,
    target: &StepFunction,
    level: usize,
    tolerance: &BigRational,
    label: &str,
) -> Result<(TreeFunction, StageRecord)> {
    let front = f.defined_depth();
    if level <= front || level > t.depth() {
        return Err(Error::NoAdmissibleLevel(format!(
            "stage level {level} not in ({front}, {}]",
            t.depth()
        )));
    }
    if target.level() > level {
        return Err(Error::NoAdmissibleLevel(format!(
            "target lives at level {} above stage level {level}",
            target.level()
        )));
    }
    let slots = FreeSlots::min_prob(t, front, level)?;
    let free_mass = slots.total_measure(t)?;
    if &free_mass > tolerance {
        return Err(Error::BoundViolated {
            achieved: format!("free slot mass {free_mass}"),
            tolerance: tolerance.to_string(),
        });
    }
    let targets = targets_from_step(t, target, &slots)?;
    let extended = extend_with_targets(t, f, &slots, &targets)?;
    let achieved = prob_distance(&extended.omega(level)?, target, t)?;
    if !achieved.lt_ratio(tolerance) {
        return Err(Error::BoundViolated {
            achieved: achieved.to_string(),
            tolerance: tolerance.to_string(),
        });
    }
    let record = StageRecord {
        label: label.to_string(),
        front_before: front,
        level,
        slots: slots.slot_indices().to_vec(),
        free_mass,
        achieved,
        tolerance: tolerance.clone(),
    };
    Ok((extended, record))
}

/// Extends `f` to `level` by an arbitrary harmonic completion (zero targets
/// off the slots); used to bridge unscheduled stretches and to pad builds to
/// full depth. Makes no approximation claim.
pub fn pad_to_level(t: &WeightedTree, f: &TreeFunction, level: usize) -> Result<TreeFunction> {
    let front = f.defined_depth();
    if level == front {
        return Ok(f.clone());
    }
    let slots = FreeSlots::min_prob(t, front, level)?;
    let zero = StepFunction::zero(f.space());
    let targets = targets_from_step(t, &zero, &slots)?;
    extend_with_targets(t, f, &slots, &targets)
}

/// One certified target hit: `prob_distance(omega at hit_level, dense target
/// j) < 1/j`, exactly.
#[derive(Debug, Clone)]
pub struct UniversalEntry {
    pub target_index: u64,
    pub target_level: usize,
    pub hit_level: usize,
    pub record: StageRecord,
}

#[derive(Debug, Clone)]
pub struct UniversalCertificate {
    pub entries: Vec<UniversalEntry>,
    pub seed_depth: usize,
    pub final_depth: usize,
}

#[derive(Debug)]
pub struct UniversalBuild {
    pub function: TreeFunction,
    pub certificate: UniversalCertificate,
    pub exhausted: Option<Exhaustion>,
}

fn strict_gap_exceeds(gap: usize, j: u64) -> bool {
    // 2^gap > j
    gap >= 64 || (1u128 << gap) > j as u128
}

fn pow2_inverse(gap: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2u8).pow(gap as u32))
}

/// Builds a function that extends `phi` verbatim and then hits the dense
/// targets `1..=j_count` in order: target `j` is met at a level from `tau`
/// with exact distance strictly below `1/j`. On depth exhaustion the
/// certificate covers the achieved prefix and the outcome says so.
pub fn build_universal(
    t: &WeightedTree,
    phi: &TreeFunction,
    tau: Option<&[usize]>,
    j_count: u64,
) -> Result<UniversalBuild> {
    let space = phi.space();
    let seed_depth = phi.defined_depth();
    let mut f = phi.clone();
    let mut entries = Vec::new();
    let mut exhausted = None;

    for j in 1..=j_count {
        let target = match dense_target(t, space, j) {
            Ok(h) => h,
            Err(Error::EnumerationExhausted { max }) => {
                exhausted = Some(Exhaustion {
                    requested: j_count,
                    achieved: j - 1,
                    detail: format!("dense enumeration ends at index {max}"),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let front = f.defined_depth();
        let admissible = |lvl: usize| tau.map_or(true, |set| set.contains(&lvl));
        let level = (front + 1..=t.depth()).find(|&lvl| {
            admissible(lvl) && lvl >= target.level() && strict_gap_exceeds(lvl - front, j)
        });
        let Some(level) = level else {
            exhausted = Some(Exhaustion {
                requested: j_count,
                achieved: j - 1,
                detail: format!(
                    "no admissible level above {front} fits target {j} within depth {}",
                    t.depth()
                ),
            });
            break;
        };
        let tolerance = BigRational::new(BigInt::one(), BigInt::from(j));
        let (next, record) = run_stage(t, &f, &target, level, &tolerance, &format!("target {j}"))?;
        entries.push(UniversalEntry {
            target_index: j,
            target_level: target.level(),
            hit_level: level,
            record,
        });
        f = next;
    }

    let f = pad_to_level(t, &f, t.depth())?;
    let certificate = UniversalCertificate {
        entries,
        seed_depth,
        final_depth: f.defined_depth(),
    };
    Ok(UniversalBuild { function: f, certificate, exhausted })
}

/// Recomputes every certificate entry from scratch and checks the stored
/// exact values, the strict bounds, the strictly increasing hit levels, and
/// that the function still extends its seed harmonically.
pub fn verify_universal(
    t: &WeightedTree,
    build: &UniversalBuild,
    phi: &TreeFunction,
) -> Result<()> {
    let f = &build.function;
    let check = f.is_harmonic(t)?;
    if let Some(v) = check.violations.first() {
        return Err(Error::NotHarmonic { level: v.level, index: v.index });
    }
    for n in 0..=phi.defined_depth() {
        if f.level_values(n)? != phi.level_values(n)? {
            return Err(Error::BoundViolated {
                achieved: format!("seed disagreement at level {n}"),
                tolerance: "exact seed agreement".into(),
            });
        }
    }
    let mut prev_level = None;
    for entry in &build.certificate.entries {
        if prev_level.is_some_and(|p| entry.hit_level <= p) {
            return Err(Error::BoundViolated {
                achieved: format!("hit level {} not increasing", entry.hit_level),
                tolerance: "strictly increasing schedule".into(),
            });
        }
        prev_level = Some(entry.hit_level);
        let target = dense_target(t, f.space(), entry.target_index)?;
        let again = prob_distance(&f.omega(entry.hit_level)?, &target, t)?;
        if again != entry.record.achieved {
            return Err(Error::BoundViolated {
                achieved: format!("recomputed {again} vs stored {}", entry.record.achieved),
                tolerance: "exact reproducibility".into(),
            });
        }
        if !again.lt_ratio(&entry.record.tolerance) {
            return Err(Error::BoundViolated {
                achieved: again.to_string(),
                tolerance: entry.record.tolerance.to_string(),
            });
        }
    }
    Ok(())
}

/// Membership in the open approximation set: is the level-`n` projection of
/// `f` strictly within `1/s` of dense target `j`?
pub fn in_dense_set(
    t: &WeightedTree,
    f: &TreeFunction,
    n: usize,
    j: u64,
    s: u64,
) -> Result<bool> {
    let target = dense_target(t, f.space(), j)?;
    let d = prob_distance(&f.omega(n)?, &target, t)?;
    Ok(d.lt_ratio(&BigRational::new(BigInt::one(), BigInt::from(s.max(1)))))
}

/// The `k`-th element of a fixed sequence dense among harmonic functions:
/// free values from the dense grid on some level (diagonally enumerated),
/// forced upward by the harmonic equation, then extended to full depth —
/// constantly when the weight rows sum to one, by a zero-target completion
/// otherwise.
pub fn dense_harmonic(t: &WeightedTree, space: ValueSpaceSpec, k: u64) -> Result<TreeFunction> {
    let a = level_assignment(t.level_sizes(), t.depth(), space.finite_order(), k)?;
    let stub = harmonic_stub(t, space, a.level, assignment_values(&space, &a))?;
    if stub.defined_depth() == t.depth() {
        return Ok(stub);
    }
    if t.weight_rows_sum_to_one()?.is_ok() {
        extend_constant(t, &stub, t.depth())
    } else {
        pad_to_level(t, &stub, t.depth())
    }
}

/// How a spanning family member relates to its dense harmonic anchor.
#[derive(Debug, Clone)]
pub struct SeedRecord {
    pub dense_index: u64,
    pub seed_level: usize,
    /// Number of leading breadth-first vertices on which the member agrees
    /// with the anchor exactly.
    pub agree_prefix: usize,
    /// Certified strict upper bound on the product-metric distance to the
    /// anchor: 2^-(agree_prefix - 1).
    pub distance_bound: BigRational,
    /// The bound's requirement for member k: bound <= 1/k.
    pub bound_within: BigRational,
}

#[derive(Debug)]
pub struct SpanningMember {
    pub function: TreeFunction,
    pub seed: SeedRecord,
    pub stages: Vec<StageRecord>,
    /// (index into this member's target list, hit level)
    pub target_hits: Vec<(usize, usize)>,
    /// Levels where this member certified a zero hit; the next member's only
    /// admissible schedule.
    pub zero_levels: Vec<usize>,
}

#[derive(Debug)]
pub struct SpanningFamily {
    pub members: Vec<SpanningMember>,
}

#[derive(Debug, Clone)]
pub struct SpanWitness {
    pub level: usize,
    pub achieved: MetricValue,
}

/// Minimum stage gap used by spanning builds. Keeping every zero stage and
/// every later-member stage at least this wide caps each side's free mass at
/// 2^-3, so a combination verified at a shared level stays within 1/4.
const SPAN_MIN_GAP: usize = 3;

/// Builds members `f_1..f_m`, one target list each. Member k agrees with the
/// dense harmonic anchor `h_k` on enough leading vertices that its product
/// distance is strictly below `1/k`; its schedule interleaves its own targets
/// with zero targets, and members after the first may only schedule on the
/// previous member's recorded zero levels.
pub fn build_spanning_family(
    t: &WeightedTree,
    space: ValueSpaceSpec,
    target_lists: &[Vec<StepFunction>],
) -> Result<SpanningFamily> {
    let m = target_lists.len();
    if m == 0 {
        return Err(Error::InvalidConfig("spanning family needs at least one member".into()));
    }
    // zeros member k must record: enough levels for member k+1's whole
    // schedule, plus one so the last member still has a nonempty zero set
    let mut zeros_needed = vec![1usize; m];
    for k in (0..m - 1).rev() {
        zeros_needed[k] = target_lists[k + 1].len() + zeros_needed[k + 1];
    }

    let mut members: Vec<SpanningMember> = Vec::with_capacity(m);
    for (k, targets) in target_lists.iter().enumerate() {
        let member_no = (k + 1) as u64;
        let anchor = dense_harmonic(t, space, member_no)?;

        // seed level: agree with the anchor on enough leading vertices that
        // 2^-(prefix-1) <= 1/member_no
        let mut seed_level = 0usize;
        let mut prefix = t.level_size(0)?;
        while (1u128 << (prefix - 1).min(100)) < member_no as u128 {
            seed_level += 1;
            prefix += t.level_size(seed_level)?;
        }
        let phi = anchor.truncate(seed_level)?;
        let seed = SeedRecord {
            dense_index: member_no,
            seed_level,
            agree_prefix: prefix,
            distance_bound: pow2_inverse(prefix - 1),
            bound_within: BigRational::new(BigInt::one(), BigInt::from(member_no)),
        };
        if seed.distance_bound > seed.bound_within {
            return Err(Error::NoAdmissibleLevel(format!(
                "seed level {seed_level} cannot certify member {member_no}"
            )));
        }

        // interleave targets and zeros, then trailing zeros
        #[derive(Clone, Copy)]
        enum Kind {
            Target(usize),
            Zero(usize),
        }
        let mut plan: Vec<Kind> = Vec::new();
        let mut z = 0usize;
        for (i, _) in targets.iter().enumerate() {
            plan.push(Kind::Target(i));
            if z < zeros_needed[k] {
                plan.push(Kind::Zero(z));
                z += 1;
            }
        }
        while z < zeros_needed[k] {
            plan.push(Kind::Zero(z));
            z += 1;
        }

        let admissible: Option<Vec<usize>> =
            (k > 0).then(|| members[k - 1].zero_levels.clone());
        let mut f = phi.clone();
        let mut stages = Vec::new();
        let mut target_hits = Vec::new();
        let mut zero_levels = Vec::new();
        for kind in plan {
            let (step, ordinal, label, min_gap) = match kind {
                Kind::Target(i) => (
                    targets[i].clone(),
                    (i + 1) as u64,
                    format!("member {member_no} target {}", i + 1),
                    if k == 0 { 1 } else { SPAN_MIN_GAP },
                ),
                Kind::Zero(zi) => (
                    StepFunction::zero(space),
                    (zi + 1) as u64,
                    format!("member {member_no} zero {}", zi + 1),
                    SPAN_MIN_GAP,
                ),
            };
            let front = f.defined_depth();
            let fits = |lvl: usize| {
                lvl > front
                    && lvl - front >= min_gap
                    && lvl >= step.level()
                    && strict_gap_exceeds(lvl - front, ordinal)
                    && admissible.as_ref().map_or(true, |set| set.contains(&lvl))
            };
            let level = (front + 1..=t.depth()).find(|&lvl| fits(lvl)).ok_or_else(|| {
                Error::NoAdmissibleLevel(format!(
                    "member {member_no}: no level above {front} for {label} within depth {}",
                    t.depth()
                ))
            })?;
            let tolerance = BigRational::new(BigInt::one(), BigInt::from(ordinal));
            let (next, record) = run_stage(t, &f, &step, level, &tolerance, &label)?;
            match kind {
                Kind::Target(i) => target_hits.push((i, level)),
                Kind::Zero(_) => zero_levels.push(level),
            }
            stages.push(record);
            f = next;
        }
        let f = pad_to_level(t, &f, t.depth())?;

        // nesting: from the second member on, zero levels sit inside the
        // previous member's zero set
        if let Some(prev) = members.last() {
            debug_assert!(zero_levels.iter().all(|l| prev.zero_levels.contains(l)));
        }
        members.push(SpanningMember { function: f, seed, stages, target_hits, zero_levels });
    }
    Ok(SpanningFamily { members })
}

/// Searches for a level where the combination `sum a_k f_k` lands strictly
/// within `eps` of `h`. Candidates are the last-but-one member's zero levels
/// (every member's schedule lives there), or the single member's own stage
/// levels when the family has one element. The guarantee is only as good as
/// the schedule: `h` scaled by the inverse leading coefficient must have been
/// one of the last member's targets for a witness to exist by construction.
pub fn verify_span(
    t: &WeightedTree,
    family: &SpanningFamily,
    coeffs: &[FieldElement],
    h: &StepFunction,
    eps: &BigRational,
) -> Result<Option<SpanWitness>> {
    let m = family.members.len();
    if coeffs.len() != m {
        return Err(Error::DimensionMismatch { left: coeffs.len(), right: m });
    }
    let leading = coeffs.last().expect("nonempty family");
    if leading.is_zero() {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let funcs: Vec<&TreeFunction> = family.members.iter().map(|mb| &mb.function).collect();
    let combo = linear_combination(&funcs, coeffs)?;
    let candidates: Vec<usize> = if m == 1 {
        family.members[0].stages.iter().map(|s| s.level).collect()
    } else {
        family.members[m - 2].zero_levels.clone()
    };
    for level in candidates {
        let d = prob_distance(&combo.omega(level)?, h, t)?;
        if d.lt_ratio(eps) {
            return Ok(Some(SpanWitness { level, achieved: d }));
        }
    }
    Ok(None)
}
