//! Harmonicity checking, the product metric on tree functions, and the
//! free-slot extension solver with its brute-force oracle.
//!
//! The extension solver answers: given a function harmonic down to level N,
//! one designated free descendant ("slot") at level K per level-N vertex, and
//! prescribed values everywhere else on level K, fill levels N+1..K so the
//! harmonic equation holds at every new internal vertex. Off the designated
//! root-to-slot paths everything is forced bottom-up by the equation itself;
//! along each path the single unknown child is solved top-down by inverting
//! the (nonzero) edge weight. The two passes together visit each vertex once.

use num::{BigRational, Zero};

use crate::boundary::StepFunction;
use crate::error::{Error, Result};
use crate::space::{bounded_distance, MetricValue, ValueSpaceSpec, Vector};
use crate::tree::{VertexRef, WeightedTree};

/// Values on all vertices of levels `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeFunction {
    space: ValueSpaceSpec,
    levels: Vec<Vec<Vector>>,
}

/// Outcome of a harmonicity check.
#[derive(Debug, Clone)]
pub struct HarmonicCheck {
    pub ok: bool,
    pub violations: Vec<VertexRef>,
}

impl TreeFunction {
    pub fn from_levels(space: ValueSpaceSpec, levels: Vec<Vec<Vector>>) -> Result<Self> {
        for (n, level) in levels.iter().enumerate() {
            for v in level {
                if v.spec() != space {
                    return Err(Error::SpecMismatch {
                        left: format!("{:?}", v.spec()),
                        right: format!("{space:?}"),
                    });
                }
            }
            if level.is_empty() {
                return Err(Error::InvalidConfig(format!("empty function level {n}")));
            }
        }
        if levels.is_empty() {
            return Err(Error::InvalidConfig("function needs at least level 0".into()));
        }
        Ok(TreeFunction { space, levels })
    }

    /// The zero function down to `depth`.
    pub fn zero(space: ValueSpaceSpec, t: &WeightedTree, depth: usize) -> Result<Self> {
        let levels = (0..=depth)
            .map(|n| Ok(vec![space.zero(); t.level_size(n)?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(TreeFunction { space, levels })
    }

    pub fn space(&self) -> ValueSpaceSpec {
        self.space
    }

    /// Deepest defined level N.
    pub fn defined_depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_values(&self, n: usize) -> Result<&[Vector]> {
        self.levels
            .get(n)
            .map(|v| v.as_slice())
            .ok_or(Error::LevelOutOfRange { level: n, max: self.defined_depth() })
    }

    pub fn value(&self, v: VertexRef) -> Result<&Vector> {
        let level = self.level_values(v.level)?;
        level.get(v.index).ok_or(Error::VertexOutOfRange {
            level: v.level,
            index: v.index,
            size: level.len(),
        })
    }

    /// Restriction to levels `0..=n`.
    pub fn truncate(&self, n: usize) -> Result<TreeFunction> {
        if n > self.defined_depth() {
            return Err(Error::LevelOutOfRange { level: n, max: self.defined_depth() });
        }
        Ok(TreeFunction {
            space: self.space,
            levels: self.levels[..=n].to_vec(),
        })
    }

    /// The level-n slice as a boundary step function.
    pub fn omega(&self, n: usize) -> Result<StepFunction> {
        Ok(StepFunction::new(n, self.level_values(n)?.to_vec()))
    }

    fn check_tree(&self, t: &WeightedTree) -> Result<()> {
        if self.defined_depth() > t.depth() {
            return Err(Error::LevelOutOfRange {
                level: self.defined_depth(),
                max: t.depth(),
            });
        }
        for (n, level) in self.levels.iter().enumerate() {
            let want = t.level_size(n)?;
            if level.len() != want {
                return Err(Error::LevelSizeMismatch { level: n, got: level.len(), want });
            }
        }
        Ok(())
    }

    /// Checks `f(x) = sum over children of w(x,y) f(y)` at every vertex with
    /// a defined next level, listing offenders.
    pub fn is_harmonic(&self, t: &WeightedTree) -> Result<HarmonicCheck> {
        self.check_tree(t)?;
        let mut violations = Vec::new();
        for n in 0..self.defined_depth() {
            for i in 0..self.levels[n].len() {
                let x = VertexRef { level: n, index: i };
                let rhs = self.weighted_child_sum(t, x)?;
                if !rhs.value_eq(&self.levels[n][i])? {
                    violations.push(x);
                }
            }
        }
        Ok(HarmonicCheck { ok: violations.is_empty(), violations })
    }

    fn weighted_child_sum(&self, t: &WeightedTree, x: VertexRef) -> Result<Vector> {
        let mut sum = self.space.zero();
        for j in t.children(x)? {
            let y = VertexRef { level: x.level + 1, index: j };
            let term = self.levels[x.level + 1][j].scale(t.weight_into(y)?)?;
            sum = sum.add(&term)?;
        }
        Ok(sum)
    }

    fn assert_harmonic(&self, t: &WeightedTree) -> Result<()> {
        let check = self.is_harmonic(t)?;
        match check.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::NotHarmonic { level: v.level, index: v.index }),
        }
    }
}

/// Product-topology distance between two tree functions over the fixed
/// breadth-first enumeration: `sum over i of 2^-i * d(f(x_i), g(x_i)) /
/// (1 + d)`. Exact for exact metrics; the two functions must be defined to
/// the same depth (no implicit padding).
pub fn tree_distance(f: &TreeFunction, g: &TreeFunction) -> Result<MetricValue> {
    if f.defined_depth() != g.defined_depth() {
        return Err(Error::DepthMismatch {
            left: f.defined_depth(),
            right: g.defined_depth(),
        });
    }
    let fs: Vec<&Vector> = f.levels.iter().flatten().collect();
    let gs: Vec<&Vector> = g.levels.iter().flatten().collect();
    if fs.len() != gs.len() {
        return Err(Error::DepthMismatch { left: fs.len(), right: gs.len() });
    }
    // Horner back-to-front: acc_i = b_i + acc_{i+1} / 2
    let mut acc = MetricValue::zero();
    let half = BigRational::new(1.into(), 2.into());
    for (fv, gv) in fs.iter().zip(&gs).rev() {
        acc = acc.mul_ratio(&half);
        if fv != gv {
            acc = acc.add(&bounded_distance(fv, gv)?);
        }
    }
    Ok(acc)
}

/// One designated level-K descendant per level-N vertex: the vertex whose
/// value the extension solver computes instead of receiving.
#[derive(Debug, Clone)]
pub struct FreeSlots {
    base_level: usize,
    target_level: usize,
    /// slot_of[i]: index in T_K of the slot for vertex (N, i).
    slot_of: Vec<usize>,
}

impl FreeSlots {
    pub fn new(
        t: &WeightedTree,
        base_level: usize,
        target_level: usize,
        slot_of: Vec<usize>,
    ) -> Result<Self> {
        if target_level < base_level || target_level > t.depth() {
            return Err(Error::LevelOutOfRange { level: target_level, max: t.depth() });
        }
        if slot_of.len() != t.level_size(base_level)? {
            return Err(Error::LevelSizeMismatch {
                level: base_level,
                got: slot_of.len(),
                want: t.level_size(base_level)?,
            });
        }
        for (i, &s) in slot_of.iter().enumerate() {
            let slot = VertexRef { level: target_level, index: s };
            t.check_vertex(slot)?;
            if t.ancestor_index(slot, base_level)? != i {
                return Err(Error::SlotNotDescendant {
                    base_level,
                    base: i,
                    target: target_level,
                    slot: s,
                });
            }
        }
        Ok(FreeSlots { base_level, target_level, slot_of })
    }

    /// Slots along minimal-probability paths, the choice that makes the
    /// union of slot sectors as light as possible:
    /// `P(union of B_slot) <= 2^-(K - N)`.
    pub fn min_prob(t: &WeightedTree, base_level: usize, target_level: usize) -> Result<Self> {
        let slot_of = (0..t.level_size(base_level)?)
            .map(|i| {
                let v = VertexRef { level: base_level, index: i };
                Ok(t.min_prob_descendant(v, target_level)?.index)
            })
            .collect::<Result<Vec<_>>>()?;
        FreeSlots::new(t, base_level, target_level, slot_of)
    }

    pub fn base_level(&self) -> usize {
        self.base_level
    }

    pub fn target_level(&self) -> usize {
        self.target_level
    }

    pub fn slot_indices(&self) -> &[usize] {
        &self.slot_of
    }

    /// Exact total measure of the slot sectors.
    pub fn total_measure(&self, t: &WeightedTree) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for &s in &self.slot_of {
            total += t.sector_prob(VertexRef { level: self.target_level, index: s })?;
        }
        Ok(total)
    }
}

/// Prescribed values on level K with `None` exactly at the slots.
pub type SlotTargets = Vec<Option<Vector>>;

/// Builds the slot-target vector from a step function refined to level K:
/// values everywhere except the slots, which must stay unknown.
pub fn targets_from_step(
    t: &WeightedTree,
    step: &StepFunction,
    slots: &FreeSlots,
) -> Result<SlotTargets> {
    let refined = step.refine(slots.target_level(), t)?;
    let mut targets: SlotTargets = refined.values().iter().cloned().map(Some).collect();
    for &s in slots.slot_indices() {
        targets[s] = None;
    }
    Ok(targets)
}

/// Extends `f` (harmonic to level N) to level K: the result agrees with `f`
/// on levels `0..=N`, takes the prescribed values on `T_K` off the slots,
/// and satisfies the harmonic equation at every vertex of levels `N..K-1`.
/// Supplying a value at a slot is a hard error, not a hint.
pub fn extend_with_targets(
    t: &WeightedTree,
    f: &TreeFunction,
    slots: &FreeSlots,
    targets: &SlotTargets,
) -> Result<TreeFunction> {
    let space = f.space();
    let n_level = slots.base_level();
    let k_level = slots.target_level();
    if f.defined_depth() != n_level {
        return Err(Error::DepthMismatch { left: f.defined_depth(), right: n_level });
    }
    f.check_tree(t)?;
    f.assert_harmonic(t)?;
    if targets.len() != t.level_size(k_level)? {
        return Err(Error::LevelSizeMismatch {
            level: k_level,
            got: targets.len(),
            want: t.level_size(k_level)?,
        });
    }
    let mut slot_mask = vec![false; t.level_size(k_level)?];
    for &s in slots.slot_indices() {
        slot_mask[s] = true;
    }
    for (j, target) in targets.iter().enumerate() {
        match (slot_mask[j], target) {
            (true, Some(_)) => return Err(Error::TargetAtSlot { index: j }),
            (false, None) => return Err(Error::MissingTarget { level: k_level, index: j }),
            _ => {}
        }
    }
    if k_level == n_level {
        return Ok(f.clone());
    }

    // root-to-slot paths, one per base vertex, as per-level indices
    let paths: Vec<Vec<usize>> = slots
        .slot_indices()
        .iter()
        .map(|&s| t.path_indices(VertexRef { level: k_level, index: s }, n_level))
        .collect::<Result<Vec<_>>>()?;
    let mut on_path: Vec<Vec<bool>> = (n_level..=k_level)
        .map(|lvl| vec![false; t.level_size(lvl).unwrap()])
        .collect();
    for path in &paths {
        for (off, &idx) in path.iter().enumerate() {
            on_path[off][idx] = true;
        }
    }

    let mut new_levels: Vec<Vec<Option<Vector>>> = (n_level + 1..=k_level)
        .map(|lvl| vec![None; t.level_size(lvl).unwrap()])
        .collect();
    for (j, target) in targets.iter().enumerate() {
        if let Some(v) = target {
            new_levels[k_level - n_level - 1][j] = Some(v.clone());
        }
    }

    // pass 1, bottom-up: off-path vertices have fully valued children, so
    // their value is forced directly by the harmonic equation
    for lvl in (n_level + 1..k_level).rev() {
        for i in 0..t.level_size(lvl)? {
            if on_path[lvl - n_level][i] {
                continue;
            }
            let x = VertexRef { level: lvl, index: i };
            let mut sum = space.zero();
            for j in t.children(x)? {
                let y = VertexRef { level: lvl + 1, index: j };
                let child = new_levels[lvl - n_level][j]
                    .as_ref()
                    .expect("off-path children are valued before their parents");
                sum = sum.add(&child.scale(t.weight_into(y)?)?)?;
            }
            new_levels[lvl - n_level - 1][i] = Some(sum);
        }
    }

    // pass 2, top-down along each designated path: the single unknown child
    // is solved by inverting its edge weight
    for (base_idx, path) in paths.iter().enumerate() {
        for (off, window) in path.windows(2).enumerate() {
            let (pi, ci) = (window[0], window[1]);
            let lvl = n_level + off;
            let parent_val = if lvl == n_level {
                f.levels[n_level][base_idx].clone()
            } else {
                new_levels[lvl - n_level - 1][pi]
                    .clone()
                    .expect("path parent valued on the previous step")
            };
            let x = VertexRef { level: lvl, index: pi };
            let mut rest = space.zero();
            for j in t.children(x)? {
                if j == ci {
                    continue;
                }
                let y = VertexRef { level: lvl + 1, index: j };
                let sibling = new_levels[lvl - n_level][j]
                    .as_ref()
                    .expect("siblings of a path vertex are off-path and valued");
                rest = rest.add(&sibling.scale(t.weight_into(y)?)?)?;
            }
            let child = VertexRef { level: lvl + 1, index: ci };
            let w_inv = t.weight_into(child)?.inv()?;
            let solved = parent_val.sub(&rest)?.scale(&w_inv)?;
            new_levels[lvl - n_level][ci] = Some(solved);
        }
    }

    let mut levels = f.levels.clone();
    for row in new_levels {
        levels.push(
            row.into_iter()
                .map(|v| v.expect("every vertex valued by one of the passes"))
                .collect(),
        );
    }
    TreeFunction::from_levels(space, levels)
}

/// Literal one-level-at-a-time form of the extension: peel level K down to
/// K-1 by pushing targets up through the harmonic equation, recurse, then
/// solve each slot from its now-valued parent. Exists to cross-check
/// [`extend_with_targets`]; same contract, quadratic instead of linear.
pub fn extend_with_targets_stepwise(
    t: &WeightedTree,
    f: &TreeFunction,
    slots: &FreeSlots,
    targets: &SlotTargets,
) -> Result<TreeFunction> {
    let space = f.space();
    let n_level = slots.base_level();
    let k_level = slots.target_level();
    if k_level == n_level {
        return Ok(f.clone());
    }
    if k_level == n_level + 1 {
        return extend_with_targets(t, f, slots, targets);
    }

    // z(x): the path vertex one level above each slot
    let mut z_of = Vec::with_capacity(slots.slot_indices().len());
    for &s in slots.slot_indices() {
        z_of.push(t.parent(VertexRef { level: k_level, index: s })?);
    }
    let mut z_mask = vec![false; t.level_size(k_level - 1)?];
    for &z in &z_of {
        z_mask[z] = true;
    }
    // targets one level up: forced by the harmonic equation off the z's
    let mut up_targets: SlotTargets = vec![None; t.level_size(k_level - 1)?];
    for (i, up) in up_targets.iter_mut().enumerate() {
        if z_mask[i] {
            continue;
        }
        let x = VertexRef { level: k_level - 1, index: i };
        let mut sum = space.zero();
        for j in t.children(x)? {
            let y = VertexRef { level: k_level, index: j };
            let v = targets[j].as_ref().ok_or(Error::MissingTarget { level: k_level, index: j })?;
            sum = sum.add(&v.scale(t.weight_into(y)?)?)?;
        }
        *up = Some(sum);
    }
    let up_slots = FreeSlots::new(t, n_level, k_level - 1, z_of)?;
    let partial = extend_with_targets_stepwise(t, f, &up_slots, &up_targets)?;

    // final level: prescribed values plus one solved slot per z(x)
    let mut last: Vec<Option<Vector>> = targets.clone();
    for (&z, &s) in up_slots.slot_indices().iter().zip(slots.slot_indices()) {
        let x = VertexRef { level: k_level - 1, index: z };
        let mut rest = space.zero();
        for j in t.children(x)? {
            if j == s {
                continue;
            }
            let y = VertexRef { level: k_level, index: j };
            let v = targets[j].as_ref().ok_or(Error::MissingTarget { level: k_level, index: j })?;
            rest = rest.add(&v.scale(t.weight_into(y)?)?)?;
        }
        let child = VertexRef { level: k_level, index: s };
        let w_inv = t.weight_into(child)?.inv()?;
        let solved = partial.value(x)?.sub(&rest)?.scale(&w_inv)?;
        last[s] = Some(solved);
    }
    let mut levels = partial.levels;
    levels.push(last.into_iter().map(|v| v.unwrap()).collect());
    TreeFunction::from_levels(space, levels)
}

/// Constant extension: every new vertex inherits its parent's value. Only
/// harmonic when the weights at each stretched vertex sum to one; the first
/// offending vertex is named otherwise.
pub fn extend_constant(
    t: &WeightedTree,
    f: &TreeFunction,
    to_level: usize,
) -> Result<TreeFunction> {
    if to_level > t.depth() {
        return Err(Error::LevelOutOfRange { level: to_level, max: t.depth() });
    }
    f.check_tree(t)?;
    f.assert_harmonic(t)?;
    let field = t.field();
    let mut levels = f.levels.clone();
    for lvl in f.defined_depth()..to_level {
        for i in 0..t.level_size(lvl)? {
            let x = VertexRef { level: lvl, index: i };
            let mut sum = field.zero();
            for j in t.children(x)? {
                sum = sum.add(t.weight_into(VertexRef { level: lvl + 1, index: j })?)?;
            }
            if !sum.field_eq(&field.one())? {
                return Err(Error::WeightSumNotOne {
                    level: lvl,
                    index: i,
                    sum: sum.to_string(),
                });
            }
        }
        let mut next = Vec::with_capacity(t.level_size(lvl + 1)?);
        for j in 0..t.level_size(lvl + 1)? {
            let p = t.parent(VertexRef { level: lvl + 1, index: j })?;
            next.push(levels[lvl][p].clone());
        }
        levels.push(next);
    }
    TreeFunction::from_levels(f.space(), levels)
}

/// Default cap on brute-force assignment counts.
pub const BRUTE_FORCE_CAP: u128 = 1 << 24;

/// Exhaustively enumerates every assignment of the unknown vertices (levels
/// N+1..K-1 plus the slots) over a finite value space and returns the ones
/// satisfying the harmonic equation and the prescribed targets. Independent
/// of the solver by construction; the uniqueness oracle.
pub fn brute_force_extensions(
    t: &WeightedTree,
    f: &TreeFunction,
    slots: &FreeSlots,
    targets: &SlotTargets,
    cap: u128,
) -> Result<Vec<TreeFunction>> {
    let space = f.space();
    let order = space.finite_order().ok_or_else(|| {
        Error::InvalidConfig("brute force needs a finite value space".into())
    })? as u128;
    let n_level = slots.base_level();
    let k_level = slots.target_level();
    if f.defined_depth() != n_level {
        return Err(Error::DepthMismatch { left: f.defined_depth(), right: n_level });
    }
    if k_level == n_level {
        return Ok(vec![f.clone()]);
    }

    // unknown cells: all of levels N+1..K-1, plus slot cells at level K
    let mut unknown: Vec<VertexRef> = Vec::new();
    for lvl in n_level + 1..k_level {
        for i in 0..t.level_size(lvl)? {
            unknown.push(VertexRef { level: lvl, index: i });
        }
    }
    for &s in slots.slot_indices() {
        unknown.push(VertexRef { level: k_level, index: s });
    }
    let mut size: u128 = 1;
    for _ in 0..unknown.len() {
        size = size.saturating_mul(order);
        if size > cap {
            return Err(Error::SearchSpaceExceeded { size, cap });
        }
    }

    let mut levels = f.levels.clone();
    for lvl in n_level + 1..=k_level {
        levels.push(vec![space.zero(); t.level_size(lvl)?]);
    }
    for (j, target) in targets.iter().enumerate() {
        if let Some(v) = target {
            levels[k_level][j] = v.clone();
        }
    }

    let mut found = Vec::new();
    let mut odometer = vec![0u64; unknown.len()];
    loop {
        for (cell, &digit) in unknown.iter().zip(&odometer) {
            levels[cell.level][cell.index] = crate::space::dense_element(&space, digit);
        }
        let candidate = TreeFunction { space, levels: levels.clone() };
        let mut ok = true;
        'check: for lvl in n_level..k_level {
            for i in 0..t.level_size(lvl)? {
                let x = VertexRef { level: lvl, index: i };
                let rhs = candidate.weighted_child_sum(t, x)?;
                if !rhs.value_eq(candidate.value(x)?)? {
                    ok = false;
                    break 'check;
                }
            }
        }
        if ok {
            found.push(candidate);
        }
        // advance
        let mut pos = 0;
        loop {
            if pos == odometer.len() {
                return Ok(found);
            }
            odometer[pos] += 1;
            if odometer[pos] < order as u64 {
                break;
            }
            odometer[pos] = 0;
            pos += 1;
        }
    }
}

/// A harmonic function generated from free values on level `stub_level`:
/// the harmonic equation forces everything above. Every harmonic function on
/// levels `0..=stub_level` arises this way.
pub fn harmonic_stub(
    t: &WeightedTree,
    space: ValueSpaceSpec,
    stub_level: usize,
    leaf_values: Vec<Vector>,
) -> Result<TreeFunction> {
    if leaf_values.len() != t.level_size(stub_level)? {
        return Err(Error::LevelSizeMismatch {
            level: stub_level,
            got: leaf_values.len(),
            want: t.level_size(stub_level)?,
        });
    }
    let mut levels = vec![leaf_values];
    for lvl in (0..stub_level).rev() {
        let below = &levels[0];
        let mut here = Vec::with_capacity(t.level_size(lvl)?);
        for i in 0..t.level_size(lvl)? {
            let x = VertexRef { level: lvl, index: i };
            let mut sum = space.zero();
            for j in t.children(x)? {
                let y = VertexRef { level: lvl + 1, index: j };
                sum = sum.add(&below[j].scale(t.weight_into(y)?)?)?;
            }
            here.push(sum);
        }
        levels.insert(0, here);
    }
    TreeFunction::from_levels(space, levels)
}

/// Vertexwise `sum of a_k f_k`; all functions must share depth and space.
pub fn linear_combination(
    funcs: &[&TreeFunction],
    coeffs: &[crate::field::FieldElement],
) -> Result<TreeFunction> {
    let first = funcs.first().ok_or_else(|| {
        Error::InvalidConfig("linear combination needs at least one function".into())
    })?;
    if funcs.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { left: funcs.len(), right: coeffs.len() });
    }
    let space = first.space();
    let depth = first.defined_depth();
    let mut levels: Vec<Vec<Vector>> = (0..=depth)
        .map(|n| vec![space.zero(); first.levels[n].len()])
        .collect();
    for (f, a) in funcs.iter().zip(coeffs) {
        if f.defined_depth() != depth {
            return Err(Error::DepthMismatch { left: f.defined_depth(), right: depth });
        }
        for (n, level) in f.levels.iter().enumerate() {
            for (i, v) in level.iter().enumerate() {
                levels[n][i] = levels[n][i].add(&v.scale(a)?)?;
            }
        }
    }
    TreeFunction::from_levels(space, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::space::MetricKind;
    use crate::tree::TreeConfig;

    fn gf2_line() -> ValueSpaceSpec {
        ValueSpaceSpec::gf2_line()
    }

    fn gf2_binary(depth: usize) -> WeightedTree {
        TreeConfig::uniform(depth, 2, FieldSpec::gf2()).build().unwrap()
    }

    fn vecs(space: &ValueSpaceSpec, vals: &[&str]) -> Vec<Vector> {
        vals.iter().map(|s| space.parse_vector(s).unwrap()).collect()
    }

    #[test]
    fn gf2_harmonicity_examples() {
        let t = gf2_binary(1);
        let space = gf2_line();
        // 1 = 1 + 0 over GF(2)
        let good = TreeFunction::from_levels(
            space,
            vec![vecs(&space, &["1"]), vecs(&space, &["1", "0"])],
        )
        .unwrap();
        assert!(good.is_harmonic(&t).unwrap().ok);
        // 1 + 1 = 0 != 1
        let bad = TreeFunction::from_levels(
            space,
            vec![vecs(&space, &["1"]), vecs(&space, &["1", "1"])],
        )
        .unwrap();
        let check = bad.is_harmonic(&t).unwrap();
        assert!(!check.ok);
        assert_eq!(check.violations, vec![VertexRef::root()]);
    }

    #[test]
    fn constant_function_is_harmonic_when_weights_sum_to_one() {
        let t = TreeConfig::uniform_binary_probabilistic(3).build().unwrap();
        let space = ValueSpaceSpec::rational_line();
        let c = space.parse_vector("5/3").unwrap();
        let f = TreeFunction::from_levels(
            space,
            (0..=3).map(|n| vec![c.clone(); t.level_size(n).unwrap()]).collect(),
        )
        .unwrap();
        assert!(f.is_harmonic(&t).unwrap().ok);
    }

    #[test]
    fn tree_distance_series_terms() {
        let t = gf2_binary(1);
        let space = gf2_line();
        let zero = TreeFunction::zero(space, &t, 1).unwrap();
        assert!(tree_distance(&zero, &zero).unwrap().is_zero());

        // differ at enumeration index 0 only: 2^0 * 1/2
        let at_root = TreeFunction::from_levels(
            space,
            vec![vecs(&space, &["1"]), vecs(&space, &["0", "0"])],
        )
        .unwrap();
        assert_eq!(
            tree_distance(&zero, &at_root).unwrap(),
            MetricValue::Exact(BigRational::new(1.into(), 2.into()))
        );

        // differ at indices 1 and 2 only: 1/4 + 1/8
        let at_children = TreeFunction::from_levels(
            space,
            vec![vecs(&space, &["0"]), vecs(&space, &["1", "1"])],
        )
        .unwrap();
        assert_eq!(
            tree_distance(&zero, &at_children).unwrap(),
            MetricValue::Exact(BigRational::new(3.into(), 8.into()))
        );
    }

    #[test]
    fn tree_distance_refuses_depth_mismatch() {
        let t = gf2_binary(2);
        let space = gf2_line();
        let a = TreeFunction::zero(space, &t, 1).unwrap();
        let b = TreeFunction::zero(space, &t, 2).unwrap();
        assert!(matches!(tree_distance(&a, &b), Err(Error::DepthMismatch { .. })));
    }

    #[test]
    fn tree_distance_zero_iff_equal() {
        let t = gf2_binary(2);
        let space = gf2_line();
        for i in 0..8u64 {
            let leaf: Vec<Vector> = (0..4)
                .map(|j| crate::space::dense_element(&space, (i >> j) & 1))
                .collect();
            let f = harmonic_stub(&t, space, 2, leaf).unwrap();
            let zero = TreeFunction::zero(space, &t, 2).unwrap();
            let d = tree_distance(&f, &zero).unwrap();
            assert_eq!(d.is_zero(), f == zero);
        }
    }

    #[test]
    fn solver_gf2_one_level() {
        // f(root)=1, given child value 1, slot gets 1 - 1 = 0
        let t = gf2_binary(1);
        let space = gf2_line();
        let f = TreeFunction::from_levels(space, vec![vecs(&space, &["1"])]).unwrap();
        let slots = FreeSlots::new(&t, 0, 1, vec![1]).unwrap();
        let targets = vec![Some(space.parse_vector("1").unwrap()), None];
        let ext = extend_with_targets(&t, &f, &slots, &targets).unwrap();
        assert!(ext.value(VertexRef { level: 1, index: 1 }).unwrap().is_zero());
        assert!(ext.is_harmonic(&t).unwrap().ok);

        // oracle: of all four assignments of level 1, exactly this one works
        let all = brute_force_extensions(&t, &f, &slots, &targets, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0], ext);
    }

    #[test]
    fn solver_rational_one_level() {
        // w = q = 1/2: F(y2) = 2*(0 - (1/2)*1) = -1
        let t = TreeConfig::uniform_binary_probabilistic(1).build().unwrap();
        let space = ValueSpaceSpec::rational_line();
        let f = TreeFunction::from_levels(space, vec![vecs(&space, &["0"])]).unwrap();
        let slots = FreeSlots::new(&t, 0, 1, vec![1]).unwrap();
        let targets = vec![Some(space.parse_vector("1").unwrap()), None];
        let ext = extend_with_targets(&t, &f, &slots, &targets).unwrap();
        assert_eq!(
            ext.value(VertexRef { level: 1, index: 1 }).unwrap(),
            &space.parse_vector("-1").unwrap()
        );
    }

    #[test]
    fn solver_identity_when_target_equals_base() {
        let t = gf2_binary(2);
        let space = gf2_line();
        let f = TreeFunction::zero(space, &t, 1).unwrap();
        let slots = FreeSlots::new(&t, 1, 1, vec![0, 1]).unwrap();
        let targets: SlotTargets = vec![None, None];
        let ext = extend_with_targets(&t, &f, &slots, &targets).unwrap();
        assert_eq!(ext, f);
        let all = brute_force_extensions(&t, &f, &slots, &targets, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(all, vec![f]);
    }

    #[test]
    fn solver_rejects_target_at_slot_and_nonharmonic_seed() {
        let t = gf2_binary(1);
        let space = gf2_line();
        let f = TreeFunction::from_levels(space, vec![vecs(&space, &["1"])]).unwrap();
        let slots = FreeSlots::new(&t, 0, 1, vec![1]).unwrap();
        let overfull = vec![
            Some(space.parse_vector("1").unwrap()),
            Some(space.parse_vector("0").unwrap()),
        ];
        assert!(matches!(
            extend_with_targets(&t, &f, &slots, &overfull),
            Err(Error::TargetAtSlot { index: 1 })
        ));

        let t2 = gf2_binary(2);
        let bad_seed = TreeFunction::from_levels(
            space,
            vec![vecs(&space, &["1"]), vecs(&space, &["1", "1"])],
        )
        .unwrap();
        let slots2 = FreeSlots::min_prob(&t2, 1, 2).unwrap();
        let targets2 = vec![None, Some(space.zero()), None, Some(space.zero())];
        assert!(matches!(
            extend_with_targets(&t2, &bad_seed, &slots2, &targets2),
            Err(Error::NotHarmonic { level: 0, index: 0 })
        ));
    }

    #[test]
    fn slot_must_descend_from_its_base_vertex() {
        let t = gf2_binary(2);
        // vertex (1,0)'s descendants at level 2 are {0,1}; 2 belongs to (1,1)
        assert!(matches!(
            FreeSlots::new(&t, 1, 2, vec![2, 3]),
            Err(Error::SlotNotDescendant { base: 0, slot: 2, .. })
        ));
    }

    #[test]
    fn two_pass_matches_stepwise_form() {
        // GF(3) ternary-ish mix, gaps up to 3
        let field = FieldSpec::gfp(3).unwrap();
        let space = ValueSpaceSpec::new(field, 1, MetricKind::Discrete).unwrap();
        let t = TreeConfig::uniform(3, 2, field).build().unwrap();
        for seed in 0..3u64 {
            let f = TreeFunction::from_levels(
                space,
                vec![vec![crate::space::dense_element(&space, seed)]],
            )
            .unwrap();
            for k in 1..=3usize {
                let slots = FreeSlots::min_prob(&t, 0, k).unwrap();
                let mut targets: SlotTargets = (0..t.level_size(k).unwrap())
                    .map(|j| Some(crate::space::dense_element(&space, (j as u64 + seed) % 3)))
                    .collect();
                for &s in slots.slot_indices() {
                    targets[s] = None;
                }
                let fast = extend_with_targets(&t, &f, &slots, &targets).unwrap();
                let slow = extend_with_targets_stepwise(&t, &f, &slots, &targets).unwrap();
                assert_eq!(fast, slow);
                assert!(fast.is_harmonic(&t).unwrap().ok);
            }
        }
    }

    #[test]
    fn constant_extension_rules() {
        // rational, w = q: valid
        let t = TreeConfig::uniform_binary_probabilistic(3).build().unwrap();
        let space = ValueSpaceSpec::rational_line();
        let f = TreeFunction::from_levels(space, vec![vecs(&space, &["2/3"])]).unwrap();
        let ext = extend_constant(&t, &f, 3).unwrap();
        assert!(ext.is_harmonic(&t).unwrap().ok);
        for n in 0..=3 {
            for v in ext.level_values(n).unwrap() {
                assert_eq!(v, &space.parse_vector("2/3").unwrap());
            }
        }

        // GF(2), w = 1: 1 + 1 = 0, rejected with the vertex named
        let t = gf2_binary(2);
        let space = gf2_line();
        let f = TreeFunction::from_levels(space, vec![vecs(&space, &["1"])]).unwrap();
        assert!(matches!(
            extend_constant(&t, &f, 2),
            Err(Error::WeightSumNotOne { level: 0, index: 0, .. })
        ));

        // GF(3), w = (2, 2): 2 + 2 = 1 mod 3, valid
        let field = FieldSpec::gfp(3).unwrap();
        let cfg = TreeConfig {
            depth: 2,
            branching: crate::tree::BranchingConfig::Uniform(2),
            q: crate::tree::ProbConfig::Named("uniform".into()),
            w: crate::tree::WeightConfig::Explicit(vec![
                vec![vec!["2".into(), "2".into()]],
                vec![vec!["2".into(), "2".into()], vec!["2".into(), "2".into()]],
            ]),
            field,
            materialize_depth: None,
        };
        let t = cfg.build().unwrap();
        let space = ValueSpaceSpec::new(field, 1, MetricKind::Discrete).unwrap();
        let f = TreeFunction::from_levels(
            space,
            vec![vec![crate::space::dense_element(&space, 1)]],
        )
        .unwrap();
        let ext = extend_constant(&t, &f, 2).unwrap();
        assert!(ext.is_harmonic(&t).unwrap().ok);
    }

    #[test]
    fn constant_extension_projects_to_the_same_boundary_function() {
        let t = TreeConfig::uniform_binary_probabilistic(4).build().unwrap();
        let space = ValueSpaceSpec::rational_line();
        let leaf = vecs(&space, &["1", "-1/2", "3", "0"]);
        let f = harmonic_stub(&t, space, 2, leaf).unwrap();
        let ext = extend_constant(&t, &f, 4).unwrap();
        let from_omega = f.omega(2).unwrap().refine(4, &t).unwrap();
        assert_eq!(ext.omega(4).unwrap().values(), from_omega.values());
    }

    #[test]
    fn harmonic_stub_is_harmonic_and_surjective_on_small_cases() {
        let t = gf2_binary(2);
        let space = gf2_line();
        let mut distinct = std::collections::HashSet::new();
        for code in 0..16u64 {
            let leaf: Vec<Vector> = (0..4)
                .map(|j| crate::space::dense_element(&space, (code >> j) & 1))
                .collect();
            let f = harmonic_stub(&t, space, 2, leaf).unwrap();
            assert!(f.is_harmonic(&t).unwrap().ok);
            distinct.insert(format!("{:?}", f.levels));
        }
        // distinct leaves give distinct harmonic functions
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn linear_combinations_stay_harmonic() {
        let t = TreeConfig::uniform_binary_probabilistic(3).build().unwrap();
        let space = ValueSpaceSpec::rational_line();
        let f = harmonic_stub(&t, space, 3, vecs(&space, &["1", "0", "1/2", "0", "2", "0", "0", "1"])).unwrap();
        let g = harmonic_stub(&t, space, 3, vecs(&space, &["0", "1", "0", "1/3", "0", "1", "2", "0"])).unwrap();
        let a = FieldSpec::Rational.parse_element("3").unwrap();
        let b = FieldSpec::Rational.parse_element("-1/2").unwrap();
        let combo = linear_combination(&[&f, &g], &[a, b]).unwrap();
        assert!(combo.is_harmonic(&t).unwrap().ok);
    }

    #[test]
    fn omega_of_probabilistic_harmonic_function_averages_children() {
        let t = TreeConfig::uniform_binary_probabilistic(2).build().unwrap();
        let space = ValueSpaceSpec::rational_line();
        let f = harmonic_stub(&t, space, 2, vecs(&space, &["1", "3", "-1", "5"])).unwrap();
        let w0 = f.omega(0).unwrap();
        let w1 = f.omega(1).unwrap();
        let half = FieldSpec::Rational.parse_element("1/2").unwrap();
        let avg = w1.values()[0]
            .scale(&half)
            .unwrap()
            .add(&w1.values()[1].scale(&half).unwrap())
            .unwrap();
        assert_eq!(w0.values()[0], avg);
    }
}
