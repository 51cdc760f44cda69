//! The arithmetic schedule behind frequent hits, density evidence over
//! integer index sets, and the builders that use them: frequent-universality
//! runs, their collapsed-tree variant, and long constant holds whose hit
//! sets have upper-density evidence close to 1.
//!
//! The schedule assigns stage lengths by the 2-adic valuation: index k gets
//! length `ell(k) = v2(k) + 1` and lands at `r(k)`, the partial sum. Two
//! exact identities pin the combinatorics (`r(2^n) = 2^(n+1) - 1` and
//! `|{k <= 2^n : ell(k) = m}| = 2^(n-m)`), and the set `{r(k) : ell(k) = m}`
//! carries strictly positive lower density, which is what makes a target
//! revisited at those indices "frequently" hit.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::boundary::{dense_target, prob_distance, Ball, StepFunction};
use crate::error::{Error, Result};
use crate::harmonic::{extend_constant, extend_with_targets, FreeSlots, TreeFunction};
use crate::space::{MetricValue, Vector};
use crate::tree::{VertexRef, WeightedTree};
use crate::universal::{pad_to_level, run_stage, Exhaustion, StageRecord};

/// Stage length at index k: one plus the 2-adic valuation.
pub fn ell(k: u64) -> Result<u32> {
    if k == 0 {
        return Err(Error::ZeroScheduleIndex);
    }
    Ok(k.trailing_zeros() + 1)
}

/// Partial sum `r(k) = ell(1) + ... + ell(k)`.
pub fn r_value(k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::ZeroScheduleIndex);
    }
    let mut sum = 0u64;
    for i in 1..=k {
        sum += ell(i)? as u64;
    }
    Ok(sum)
}

/// Precomputed `ell`/`r` tables; index k runs from 1.
#[derive(Debug, Clone)]
pub struct Schedule {
    ell: Vec<u32>,
    r: Vec<u64>,
}

impl Schedule {
    /// Table for k = 1..=max_index.
    pub fn up_to_index(max_index: u64) -> Self {
        let mut ells = Vec::with_capacity(max_index as usize);
        let mut rs = Vec::with_capacity(max_index as usize);
        let mut sum = 0u64;
        for k in 1..=max_index {
            let l = k.trailing_zeros() + 1;
            sum += l as u64;
            ells.push(l);
            rs.push(sum);
        }
        Schedule { ell: ells, r: rs }
    }

    /// Table covering every k with `r(k) <= max_level`.
    pub fn up_to_level(max_level: u64) -> Self {
        let mut ells = Vec::new();
        let mut rs = Vec::new();
        let mut sum = 0u64;
        let mut k = 1u64;
        loop {
            let l = k.trailing_zeros() + 1;
            if sum + l as u64 > max_level {
                break;
            }
            sum += l as u64;
            ells.push(l);
            rs.push(sum);
            k += 1;
        }
        Schedule { ell: ells, r: rs }
    }

    pub fn max_index(&self) -> u64 {
        self.ell.len() as u64
    }

    pub fn ell(&self, k: u64) -> Result<u32> {
        if k == 0 || k > self.max_index() {
            return Err(Error::ZeroScheduleIndex);
        }
        Ok(self.ell[(k - 1) as usize])
    }

    /// `r(k)`, with the empty-sum convention `r(0) = 0`.
    pub fn r(&self, k: u64) -> Result<u64> {
        if k == 0 {
            return Ok(0);
        }
        if k > self.max_index() {
            return Err(Error::ZeroScheduleIndex);
        }
        Ok(self.r[(k - 1) as usize])
    }

    /// `{r(k) : ell(k) = m, r(k) <= max_level}`.
    pub fn level_hits_for(&self, m: u32, max_level: u64) -> Vec<u64> {
        self.ell
            .iter()
            .zip(&self.r)
            .filter(|(&l, &r)| l == m && r <= max_level)
            .map(|(_, &r)| r)
            .collect()
    }
}

/// `|{k : 1 <= k <= 2^n, ell(k) = m}|` by direct scan.
pub fn count_ell(n: u32, m: u32) -> Result<u64> {
    if m == 0 || m > n {
        return Err(Error::BadEllRange { m, n });
    }
    let mut count = 0u64;
    for k in 1..=(1u64 << n) {
        if k.trailing_zeros() + 1 == m {
            count += 1;
        }
    }
    Ok(count)
}

/// Finite-horizon density evidence for an index set: `|S ∩ [0, N]| / (N+1)`
/// minimized and maximized over N in the tail window `[W/2, W]`. A proxy for
/// the liminf/limsup, never the limit itself.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DensityReport {
    pub description: String,
    pub window: u64,
    pub hit_count: u64,
    pub lower_proxy: f64,
    pub upper_proxy: f64,
}

pub fn density(hits: &[u64], window: u64, description: &str) -> Result<DensityReport> {
    if window < 2 {
        return Err(Error::WindowTooSmall(window));
    }
    let mut sorted = hits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut idx = sorted.partition_point(|&h| h <= window / 2);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for n in window / 2..=window {
        while idx < sorted.len() && sorted[idx] <= n {
            idx += 1;
        }
        let ratio = idx as f64 / (n + 1) as f64;
        lower = lower.min(ratio);
        upper = upper.max(ratio);
    }
    let hit_count = sorted.partition_point(|&h| h <= window) as u64;
    Ok(DensityReport {
        description: description.to_string(),
        window,
        hit_count,
        lower_proxy: lower,
        upper_proxy: upper,
    })
}

/// Sampled `(N, hits, proxy)` rows for plotting.
pub fn density_series(hits: &[u64], window: u64, points: usize) -> Vec<(u64, u64, f64)> {
    let mut sorted = hits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let step = (window / points.max(1) as u64).max(1);
    let mut out = Vec::new();
    let mut n = 0u64;
    loop {
        let count = sorted.partition_point(|&h| h <= n) as u64;
        out.push((n, count, count as f64 / (n + 1) as f64));
        if n >= window {
            break;
        }
        n = (n + step).min(window);
    }
    out
}

/// Extends `f` by `gap` levels so the projection lands strictly within
/// `2^-gap` of the target: the slots' measure is at most `2^-gap` and the
/// integrand stays below one.
pub fn extend_to_hit(
    t: &WeightedTree,
    f: &TreeFunction,
    gap: usize,
    target: &StepFunction,
) -> Result<(TreeFunction, StageRecord)> {
    if gap == 0 {
        return Err(Error::NoAdmissibleLevel("hit stage needs a positive gap".into()));
    }
    let tolerance = pow2_inverse(gap);
    run_stage(t, f, target, f.defined_depth() + gap, &tolerance, "hit")
}

fn pow2_inverse(gap: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2u8).pow(gap as u32))
}

/// One scheduled hit: at level `r(k)` the projection is strictly within
/// `2^-ell(k)` of target `ell(k)`.
#[derive(Debug, Clone)]
pub struct FrequentHit {
    pub k: u64,
    pub level: u64,
    pub ell: u32,
    pub record: StageRecord,
}

#[derive(Debug)]
pub struct FrequentBuild {
    pub function: TreeFunction,
    pub hits: Vec<FrequentHit>,
    pub target_count: u64,
    /// Levels actually covered: `min(requested horizon, tree depth)`.
    pub horizon: u64,
    /// Hit levels per target m = 1..=target_count.
    pub hit_levels: Vec<Vec<u64>>,
    pub density_reports: Vec<DensityReport>,
    pub exhausted: Option<Exhaustion>,
}

/// Runs the schedule: stage k extends from level `r(k-1)` to `r(k)` and hits
/// dense target `ell(k)` within `2^-ell(k)`, for every k with `ell(k) <=
/// target_count` and `r(k)` inside the horizon. Stretches belonging to
/// skipped indices are bridged harmonically without any claim. The seed
/// `phi` is kept verbatim; scheduling starts at the first k with
/// `r(k-1) >= phi`'s depth.
pub fn build_frequent(
    t: &WeightedTree,
    phi: &TreeFunction,
    target_count: u64,
    horizon: u64,
) -> Result<FrequentBuild> {
    let space = phi.space();
    let effective = horizon.min(t.depth() as u64);
    let exhausted = (horizon > effective).then(|| Exhaustion {
        requested: horizon,
        achieved: effective,
        detail: format!("horizon {horizon} exceeds tree depth {}", t.depth()),
    });
    let targets: Vec<StepFunction> = (1..=target_count)
        .map(|m| dense_target(t, space, m))
        .collect::<Result<Vec<_>>>()?;

    let schedule = Schedule::up_to_level(effective);
    let seed_depth = phi.defined_depth() as u64;
    let mut f = phi.clone();
    let mut hits = Vec::new();
    for k in 1..=schedule.max_index() {
        let s = schedule.r(k - 1)?;
        let r_k = schedule.r(k)?;
        if s < seed_depth {
            continue; // schedule starts once the seed is clear
        }
        let m = schedule.ell(k)?;
        if m as u64 > target_count {
            f = pad_to_level(t, &f, r_k as usize)?;
            continue;
        }
        if f.defined_depth() < s as usize {
            f = pad_to_level(t, &f, s as usize)?;
        }
        let (next, record) =
            extend_to_hit(t, &f, (r_k - s) as usize, &targets[(m - 1) as usize])?;
        hits.push(FrequentHit { k, level: r_k, ell: m, record });
        f = next;
    }
    let f = pad_to_level(t, &f, t.depth())?;

    let mut hit_levels = vec![Vec::new(); target_count as usize];
    for h in &hits {
        hit_levels[(h.ell - 1) as usize].push(h.level);
    }
    let density_reports = hit_levels
        .iter()
        .enumerate()
        .map(|(i, s)| density(s, effective.max(2), &format!("target {} hit levels", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequentBuild {
        function: f,
        hits,
        target_count,
        horizon: effective,
        hit_levels,
        density_reports,
        exhausted,
    })
}

/// Recomputes every hit distance from scratch and re-checks the strict
/// bound and the hit-set identity `{r(k) : ell(k) = m}`.
pub fn verify_frequent(t: &WeightedTree, build: &FrequentBuild) -> Result<()> {
    let f = &build.function;
    let check = f.is_harmonic(t)?;
    if let Some(v) = check.violations.first() {
        return Err(Error::NotHarmonic { level: v.level, index: v.index });
    }
    for hit in &build.hits {
        let target = dense_target(t, f.space(), hit.ell as u64)?;
        let again = prob_distance(&f.omega(hit.level as usize)?, &target, t)?;
        if again != hit.record.achieved {
            return Err(Error::BoundViolated {
                achieved: format!("recomputed {again} vs stored {}", hit.record.achieved),
                tolerance: "exact reproducibility".into(),
            });
        }
        if !again.lt_ratio(&pow2_inverse(hit.ell as usize)) {
            return Err(Error::BoundViolated {
                achieved: again.to_string(),
                tolerance: pow2_inverse(hit.ell as usize).to_string(),
            });
        }
    }
    // hit sets match the schedule exactly (full schedule runs only)
    if build.hits.first().is_some_and(|h| h.k == 1) {
        let schedule = Schedule::up_to_level(build.horizon);
        for m in 1..=build.target_count.min(u32::MAX as u64) as u32 {
            let expected = schedule.level_hits_for(m, build.horizon);
            if build.hit_levels[(m - 1) as usize] != expected {
                return Err(Error::BoundViolated {
                    achieved: format!("{:?}", build.hit_levels[(m - 1) as usize]),
                    tolerance: format!("{expected:?}"),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug)]
pub struct FrequentOnLevelsBuild {
    /// The run on the collapsed tree.
    pub collapsed: FrequentBuild,
    /// The function pulled back to the full tree.
    pub function: TreeFunction,
    /// Original tree levels where the hits landed: `tau[r(k)]` per hit.
    pub original_hit_levels: Vec<u64>,
}

/// Frequent hits along an arbitrary level set: collapse the tree to `tau`,
/// run the schedule there, then lift the result back by solving each
/// intermediate stretch; the lift is forced, and the solved slot values must
/// reproduce the collapsed function exactly.
pub fn build_frequent_on_levels(
    t: &WeightedTree,
    phi: &TreeFunction,
    target_count: u64,
    horizon: u64,
    tau: &[usize],
) -> Result<FrequentOnLevelsBuild> {
    let space = phi.space();
    let collapsed_tree = t.collapse(tau)?;
    let seed_pos = tau
        .iter()
        .position(|&n| n == phi.defined_depth())
        .ok_or_else(|| {
            Error::BadLevelSet(format!(
                "seed depth {} must be one of the collapsed levels",
                phi.defined_depth()
            ))
        })?;
    let collapsed_phi = TreeFunction::from_levels(
        space,
        tau[..=seed_pos]
            .iter()
            .map(|&n| phi.level_values(n).map(|v| v.to_vec()))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let collapsed = build_frequent(&collapsed_tree, &collapsed_phi, target_count, horizon)?;

    // lift: every stretch between consecutive collapsed levels is an
    // extension whose slot values are forced to agree with the collapsed run
    let mut full = phi.clone();
    for j in seed_pos..collapsed.function.defined_depth() {
        let (a, b) = (tau[j], tau[j + 1]);
        let slots = FreeSlots::min_prob(t, a, b)?;
        let below = collapsed.function.level_values(j + 1)?;
        let mut targets: Vec<Option<Vector>> = below.iter().cloned().map(Some).collect();
        for &s in slots.slot_indices() {
            targets[s] = None;
        }
        full = extend_with_targets(t, &full, &slots, &targets)?;
        for &s in slots.slot_indices() {
            let lifted = full.value(VertexRef { level: b, index: s })?;
            if lifted != &below[s] {
                return Err(Error::BoundViolated {
                    achieved: format!("lifted slot value {lifted} at level {b} index {s}"),
                    tolerance: format!("collapsed value {}", below[s]),
                });
            }
        }
    }

    let original_hit_levels = collapsed
        .hits
        .iter()
        .map(|h| tau[h.level as usize] as u64)
        .collect();
    Ok(FrequentOnLevelsBuild { collapsed, function: full, original_hit_levels })
}

/// One ball visit: an optional hit stage, then a constant hold over
/// `[hold_start, hold_end]` during which the projection's distance to the
/// center is the certified constant `achieved`. Levels up to `explicit_to`
/// were re-verified by direct computation; deeper hold levels repeat the
/// same exact value by refinement invariance over the uniform tail.
#[derive(Debug)]
pub struct HoldRecord {
    pub ball: usize,
    pub round: usize,
    pub hit: Option<StageRecord>,
    pub carried: bool,
    pub hold_start: usize,
    pub hold_end: usize,
    pub achieved: MetricValue,
    pub explicit_to: usize,
}

#[derive(Debug)]
pub struct UpperDensityBuild {
    pub function: TreeFunction,
    pub visits: Vec<HoldRecord>,
    pub per_ball_hits: Vec<Vec<u64>>,
    /// Per ball, over the window ending at its last hit level.
    pub density_reports: Vec<DensityReport>,
    pub exhausted: Option<Exhaustion>,
}

#[derive(Clone)]
struct SimState {
    front: usize,
    resident: Option<usize>,
    prior: Vec<u64>,
}

#[derive(Clone)]
struct VisitSim {
    ball: usize,
    carried: bool,
    hit_level: Option<usize>,
    hold_start: usize,
    hold_end: usize,
}

fn ratio_at_least(hits: u64, end: usize, rho: &BigRational) -> bool {
    BigRational::new(BigInt::from(hits), BigInt::from(end as u64 + 1)) >= *rho
}

/// Smallest hold end `e >= start` with `(prior + e - start + 1)/(e+1) >= rho`.
fn minimal_hold_end(start: usize, prior: u64, rho: &BigRational) -> Option<usize> {
    if rho >= &BigRational::one() {
        return None;
    }
    if rho <= &BigRational::zero() {
        return Some(start);
    }
    let p = rho.numer().clone();
    let q = rho.denom().clone();
    // e >= (p - q*prior + q*(start - 1)) / (q - p)
    let num = &p - &q * BigInt::from(prior) + &q * BigInt::from(start as i64 - 1);
    let den = &q - &p;
    if num.is_negative() {
        return Some(start);
    }
    let ceil = (&num + &den - BigInt::one()) / &den;
    Some(ceil.to_usize()?.max(start))
}

fn plan_round(
    state: &SimState,
    balls: &[usize],
    rho: &BigRational,
    forced_last_end: Option<usize>,
    materialized: usize,
    gaps: &[usize],
) -> Option<(Vec<VisitSim>, SimState)> {
    let mut st = state.clone();
    let mut visits = Vec::with_capacity(balls.len());
    for (pos, &b) in balls.iter().enumerate() {
        let carried = st.resident == Some(b);
        let (hit_level, hold_start) = if carried {
            (None, st.front + 1)
        } else {
            let lvl = st.front + gaps[b];
            if lvl > materialized {
                return None; // a hit must be materialized
            }
            (Some(lvl), lvl)
        };
        let last = pos == balls.len() - 1;
        let hold_end = match (last, forced_last_end) {
            (true, Some(end)) => {
                if end < hold_start {
                    return None;
                }
                let hits = st.prior[b] + (end - hold_start + 1) as u64;
                if !ratio_at_least(hits, end, rho) {
                    return None;
                }
                end
            }
            _ => {
                let e = minimal_hold_end(hold_start, st.prior[b], rho)?;
                if e > materialized {
                    return None; // later stages still need explicit levels
                }
                e
            }
        };
        st.prior[b] += (hold_end - hold_start + 1) as u64;
        st.front = hold_end;
        st.resident = Some(b);
        visits.push(VisitSim { ball: b, carried, hit_level, hold_start, hold_end });
    }
    Some((visits, st))
}

/// Largest common ratio achievable by a final round over all balls that
/// stretches the last hold to the horizon, found by binary search (the
/// feasible set is an interval).
fn plan_final_round(
    state: &SimState,
    balls: &[usize],
    horizon: usize,
    materialized: usize,
    gaps: &[usize],
) -> Option<(Vec<VisitSim>, SimState)> {
    let zero = BigRational::zero();
    plan_round(state, balls, &zero, Some(horizon), materialized, gaps)?;
    let mut lo = zero;
    let mut hi = BigRational::one();
    for _ in 0..48 {
        let mid = (&lo + &hi) / BigRational::from_integer(2.into());
        if plan_round(state, balls, &mid, Some(horizon), materialized, gaps).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (visits, st) = plan_round(state, balls, &lo, Some(horizon), materialized, gaps)?;
    Some((visits, st))
}

/// Builds a function whose projections sit inside each basis ball over long
/// constant holds: rounds visit balls 1; 1,2; 1,2,3; ... with per-round
/// minimal ratios r/(r+1), and the last round that still fits is re-planned
/// over all balls with the largest common ratio and stretched to the
/// horizon, so every ball's hit set shows upper density close to one over
/// its own window.
///
/// Needs the constant extension to be harmonic: every materialized weight
/// row must sum to one, and so must the uniform tail when the horizon runs
/// past the materialized depth. Hit stages target the ball center within
/// radius/2, leaving half the radius as margin for the hold.
pub fn build_upper_density(
    t: &WeightedTree,
    phi: &TreeFunction,
    balls: &[Ball],
    horizon: usize,
) -> Result<UpperDensityBuild> {
    if balls.is_empty() {
        return Err(Error::InvalidConfig("at least one basis ball required".into()));
    }
    if let Err(v) = t.weight_rows_sum_to_one()? {
        return Err(Error::WeightSumNotOne {
            level: v.level,
            index: v.index,
            sum: "a value different from 1".into(),
        });
    }
    let materialized = t.depth();
    if horizon > materialized {
        let tail = t.tail().ok_or(Error::HorizonTooDeep {
            horizon,
            depth: t.virtual_depth(),
            materialized,
        })?;
        if horizon > tail.to_depth {
            return Err(Error::HorizonTooDeep { horizon, depth: tail.to_depth, materialized });
        }
        if !tail.weight_sum_is_one()? {
            return Err(Error::NoUniformTail(
                "tail weights do not sum to one; constant holds stop being harmonic".into(),
            ));
        }
    }

    // per-ball hit gap: smallest g with 2^-g <= radius/2
    let gaps: Vec<usize> = balls
        .iter()
        .map(|b| {
            let half = &b.radius / BigRational::from_integer(2.into());
            let mut g = 1usize;
            while g < 64 && pow2_inverse(g) > half {
                g += 1;
            }
            g
        })
        .collect();

    let b_count = balls.len();
    let mut state = SimState {
        front: phi.defined_depth(),
        resident: None,
        prior: vec![0; b_count],
    };
    let mut plans: Vec<(usize, Vec<VisitSim>)> = Vec::new();
    let mut round = 1usize;
    let exhausted;
    loop {
        let ball_list: Vec<usize> = (0..b_count.min(round)).collect();
        let rho = BigRational::new(BigInt::from(round), BigInt::from(round + 1));
        let minimal = plan_round(&state, &ball_list, &rho, None, materialized, &gaps);
        let continue_minimally = minimal.as_ref().is_some_and(|(_, after)| {
            let next_list: Vec<usize> = (0..b_count.min(round + 1)).collect();
            let next_rho = BigRational::new(BigInt::from(round + 1), BigInt::from(round + 2));
            plan_round(after, &next_list, &next_rho, None, materialized, &gaps).is_some()
        });
        if continue_minimally {
            let (visits, after) = minimal.unwrap();
            plans.push((round, visits));
            state = after;
            round += 1;
            continue;
        }
        // final round: all balls, stretched to the horizon
        let all: Vec<usize> = (0..b_count).collect();
        match plan_final_round(&state, &all, horizon, materialized, &gaps) {
            Some((visits, _)) => {
                plans.push((round, visits));
                exhausted = None;
            }
            None => {
                exhausted = Some(Exhaustion {
                    requested: horizon as u64,
                    achieved: state.front as u64,
                    detail: format!(
                        "cannot fit hit stages for {b_count} balls within materialized depth {materialized}"
                    ),
                });
            }
        }
        break;
    }

    // execute the plan
    let mut f = phi.clone();
    let mut visits = Vec::new();
    let mut per_ball_hits: Vec<Vec<u64>> = vec![Vec::new(); b_count];
    let mut last_achieved: Vec<Option<MetricValue>> = vec![None; b_count];
    for (round, round_visits) in &plans {
        for v in round_visits {
            let ball = &balls[v.ball];
            let center = &ball.center;
            let (hit, achieved) = if let Some(level) = v.hit_level {
                let tol = &ball.radius / BigRational::from_integer(2.into());
                let (next, record) =
                    run_stage(t, &f, center, level, &tol, &format!("ball {} hit", v.ball + 1))?;
                f = next;
                let a = record.achieved.clone();
                (Some(record), a)
            } else {
                let a = last_achieved[v.ball]
                    .clone()
                    .expect("carried visit follows an earlier hold of the same ball");
                (None, a)
            };
            let explicit_to = v.hold_end.min(materialized);
            if explicit_to > f.defined_depth() {
                f = extend_constant(t, &f, explicit_to)?;
            }
            // the hold never leaves the ball: re-verify every materialized
            // level exactly; deeper levels repeat the same exact value by
            // refinement invariance over the uniform tail
            for n in v.hold_start..=explicit_to {
                let d = prob_distance(&f.omega(n)?, center, t)?;
                if d != achieved || !d.lt_ratio(&ball.radius) {
                    return Err(Error::BoundViolated {
                        achieved: format!("level {n} distance {d}"),
                        tolerance: format!("constant {achieved} within {}", ball.radius),
                    });
                }
            }
            per_ball_hits[v.ball].extend((v.hold_start..=v.hold_end).map(|n| n as u64));
            last_achieved[v.ball] = Some(achieved.clone());
            visits.push(HoldRecord {
                ball: v.ball,
                round: *round,
                hit,
                carried: v.carried,
                hold_start: v.hold_start,
                hold_end: v.hold_end,
                achieved,
                explicit_to,
            });
        }
    }

    let mut density_reports = Vec::with_capacity(b_count);
    for (i, hits) in per_ball_hits.iter().enumerate() {
        let window = hits.last().copied().unwrap_or(0).max(2);
        density_reports.push(density(hits, window, &format!("ball {} hold levels", i + 1))?);
    }
    Ok(UpperDensityBuild { function: f, visits, per_ball_hits, density_reports, exhausted })
}
