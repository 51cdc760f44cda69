//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // field arithmetic
    #[error("field spec mismatch: {left} vs {right}")]
    SpecMismatch { left: String, right: String },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} out of supported range")]
    ModulusTooLarge(u64),
    #[error("tolerance must be nonnegative and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("cannot parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },

    // value space
    #[error("metric {metric} requires the {needs} field")]
    MetricIncompatible { metric: String, needs: &'static str },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("value space is trivial; operation needs a nonzero element")]
    TrivialValueSpace,

    // tree construction and addressing
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("vertex at level {level} index {index} has {count} children; at least 2 required")]
    BranchingTooSmall { level: usize, index: usize, count: usize },
    #[error("transition probabilities at level {level} vertex {index} sum to {sum}, expected 1")]
    RowSumNotOne { level: usize, index: usize, sum: String },
    #[error("transition probability at level {level} child {index} is {value}; must lie in (0, 1]")]
    ProbOutOfRange { level: usize, index: usize, value: String },
    #[error("edge weight into level {level} index {index} is zero")]
    ZeroWeight { level: usize, index: usize },
    #[error("tree would have {count} vertices, over the cap {cap} (set HTLAB_MAX_VERTICES to raise)")]
    VertexCap { count: u128, cap: usize },
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("vertex index {index} out of range at level {level} (size {size})")]
    VertexOutOfRange { level: usize, index: usize, size: usize },
    #[error("level set invalid: {0}")]
    BadLevelSet(String),

    // functions on trees and boundaries
    #[error("function levels {left} and {right} do not match")]
    DepthMismatch { left: usize, right: usize },
    #[error("function is not harmonic at level {level} index {index}")]
    NotHarmonic { level: usize, index: usize },
    #[error("step function at level {level} has {got} values, tree level has {want}")]
    LevelSizeMismatch { level: usize, got: usize, want: usize },
    #[error("designated slot {slot} at level {target} is not a descendant of vertex {base} at level {base_level}")]
    SlotNotDescendant { base_level: usize, base: usize, target: usize, slot: usize },
    #[error("target supplied at designated slot index {index}; slot values are solved, not given")]
    TargetAtSlot { index: usize },
    #[error("missing target at level {level} index {index}")]
    MissingTarget { level: usize, index: usize },
    #[error("dense enumeration exhausted: max usable index is {max}")]
    EnumerationExhausted { max: u64 },
    #[error("no sector with measure below {eps} within depth {depth}")]
    NoSmallSector { eps: String, depth: usize },
    #[error("weights at level {level} index {index} sum to {sum}, constant extension needs 1")]
    WeightSumNotOne { level: usize, index: usize, sum: String },
    #[error("search space of {size} assignments exceeds cap {cap}")]
    SearchSpaceExceeded { size: u128, cap: u128 },

    // builders and schedules
    #[error("schedule index must be at least 1")]
    ZeroScheduleIndex,
    #[error("count_ell requires 1 <= m <= n, got m={m}, n={n}")]
    BadEllRange { m: u32, n: u32 },
    #[error("density window must be at least 2, got {0}")]
    WindowTooSmall(u64),
    #[error("leading coefficient must be nonzero")]
    ZeroLeadingCoefficient,
    #[error("no admissible level for stage: {0}")]
    NoAdmissibleLevel(String),
    #[error("stage bound violated: achieved {achieved} not below tolerance {tolerance}")]
    BoundViolated { achieved: String, tolerance: String },
    #[error("horizon {horizon} exceeds tree depth {depth} (materialized {materialized})")]
    HorizonTooDeep { horizon: usize, depth: usize, materialized: usize },
    #[error("constant tail not available: {0}")]
    NoUniformTail(String),
}
