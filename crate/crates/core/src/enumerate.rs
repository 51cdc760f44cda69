//! Diagonal enumeration of value assignments over tree levels.
//!
//! Both the dense boundary targets and the dense harmonic stubs enumerate
//! "one value per vertex of some level, values drawn from the dense subset".
//! Blocks are indexed by (level n, grid radius R) and visited in diagonal
//! order (n + R ascending, then n ascending); block (n, R) holds the
//! assignments over T_n whose values all have dense index < R with at least
//! one value at index exactly R - 1. For finite spaces the grid saturates at
//! |E| and the whole enumeration is finite; the order is frozen because
//! construction reproducibility depends on it.

use crate::error::{Error, Result};
use crate::space::{dense_element, ValueSpaceSpec, Vector};

/// Level and per-vertex dense indices of one enumerated assignment.
#[derive(Debug)]
pub(crate) struct LevelAssignment {
    pub level: usize,
    pub dense_indices: Vec<u64>,
}

/// Unranks the `index`-th assignment over levels `0..=max_level` with
/// `level_sizes[n]` slots per level. Errors with the max usable index when
/// the (finite) enumeration is exhausted.
pub(crate) fn level_assignment(
    level_sizes: &[usize],
    max_level: usize,
    grid_cap: Option<u64>,
    index: u64,
) -> Result<LevelAssignment> {
    let mut cum: u128 = 0;
    let want = index as u128;
    // diagonal s = level + radius; radius >= 1
    let mut s: u64 = 1;
    loop {
        let mut any_block = false;
        for level in 0..=(max_level as u64).min(s - 1) {
            let radius = s - level;
            let (grid, prev_grid) = match grid_cap {
                Some(cap) => (radius.min(cap), (radius - 1).min(cap)),
                None => (radius, radius - 1),
            };
            if grid == prev_grid {
                continue; // grid saturated: no assignment is new at this radius
            }
            let slots = level_sizes[level as usize];
            let block = sat_pow(grid, slots) - sat_pow(prev_grid, slots);
            if block == 0 {
                continue;
            }
            any_block = true;
            if want < cum + block {
                let rank = (want - cum) as u128;
                let dense_indices = unrank_with_new_digit(grid, slots, rank);
                return Ok(LevelAssignment { level: level as usize, dense_indices });
            }
            cum += block;
        }
        if !any_block && grid_cap.is_some_and(|cap| s > max_level as u64 + cap) {
            return Err(Error::EnumerationExhausted { max: (cum - 1) as u64 });
        }
        s += 1;
    }
}

/// Materializes the assignment's values.
pub(crate) fn assignment_values(spec: &ValueSpaceSpec, a: &LevelAssignment) -> Vec<Vector> {
    a.dense_indices
        .iter()
        .map(|&i| dense_element(spec, i))
        .collect()
}

/// base^exp saturating; "huge" blocks simply absorb all remaining indices.
fn sat_pow(base: u64, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Lexicographic unranking of the `rank`-th string over digits `0..grid`
/// of length `slots` that contains at least one digit equal to `grid - 1`.
fn unrank_with_new_digit(grid: u64, slots: usize, mut rank: u128) -> Vec<u64> {
    debug_assert!(grid >= 1);
    let mut out = Vec::with_capacity(slots);
    let mut has_new = false;
    for pos in 0..slots {
        let remaining = slots - pos - 1;
        for digit in 0..grid {
            let is_new = digit == grid - 1;
            let count = if has_new || is_new {
                sat_pow(grid, remaining)
            } else {
                sat_pow(grid, remaining) - sat_pow(grid - 1, remaining)
            };
            if rank < count {
                out.push(digit);
                has_new = has_new || is_new;
                break;
            }
            rank -= count;
        }
        debug_assert_eq!(out.len(), pos + 1, "rank exceeded block size");
    }
    debug_assert!(has_new);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_binary_block_order() {
        // levels sized 1, 2, 4; grid capped at 2 (GF(2) scalars)
        let sizes = [1usize, 2, 4];
        let seq: Vec<(usize, Vec<u64>)> = (0..7)
            .map(|j| {
                let a = level_assignment(&sizes, 2, Some(2), j).unwrap();
                (a.level, a.dense_indices)
            })
            .collect();
        // j=0: zero at level 0; j=1: the other scalar at level 0;
        // j=2: zero at level 1; j=3..5: the three remaining level-1 maps;
        // j=6: zero at level 2.
        assert_eq!(seq[0], (0, vec![0]));
        assert_eq!(seq[1], (0, vec![1]));
        assert_eq!(seq[2], (1, vec![0, 0]));
        assert_eq!(seq[3], (1, vec![0, 1]));
        assert_eq!(seq[4], (1, vec![1, 0]));
        assert_eq!(seq[5], (1, vec![1, 1]));
        assert_eq!(seq[6], (2, vec![0, 0, 0, 0]));
    }

    #[test]
    fn finite_enumeration_reports_its_end() {
        let sizes = [1usize, 2];
        // 2 + 4 assignments in total over GF(2)
        for j in 0..6 {
            assert!(level_assignment(&sizes, 1, Some(2), j).is_ok());
        }
        match level_assignment(&sizes, 1, Some(2), 6) {
            Err(Error::EnumerationExhausted { max }) => assert_eq!(max, 5),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn infinite_grid_never_ends() {
        let sizes = [1usize, 2];
        for j in [0u64, 5, 50, 500] {
            assert!(level_assignment(&sizes, 1, None, j).is_ok());
        }
    }

    #[test]
    fn enumeration_is_injective() {
        let sizes = [1usize, 2, 4];
        let mut seen = std::collections::HashSet::new();
        for j in 0..120 {
            let a = level_assignment(&sizes, 2, None, j).unwrap();
            assert!(seen.insert((a.level, a.dense_indices)));
        }
    }
}
