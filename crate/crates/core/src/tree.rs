//! Truncated rooted trees with weighted edges and exact transition
//! probabilities.
//!
//! A tree is stored level by level; every internal vertex has at least two
//! children, children of consecutive parents occupy contiguous index ranges,
//! and the breadth-first order (level, then index) is the fixed vertex
//! enumeration used by the product metric on tree functions.
//!
//! The boundary at truncation depth D is represented by the sector partition
//! `{B_x : x in T_D}`; `sector_prob` returns the exact product of transition
//! probabilities along the root path.

use num::{BigInt, BigRational, One, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::{parse_ratio, FieldElement, FieldSpec};

/// Default cap on materialized vertices (about 2 million).
pub const DEFAULT_MAX_VERTICES: usize = 1 << 21;

/// Address of a vertex: level and index within the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VertexRef {
    pub level: usize,
    pub index: usize,
}

impl VertexRef {
    pub fn root() -> Self {
        VertexRef { level: 0, index: 0 }
    }
}

/// Uniform continuation of the tree beyond the materialized depth.
///
/// Deep runs (long constant holds) only need to know that every virtual
/// vertex has `branching` children with probability `q = 1/branching` and
/// weight `w` each; nothing below the materialized depth is ever stored.
#[derive(Debug, Clone)]
pub struct UniformTail {
    pub to_depth: usize,
    pub branching: usize,
    pub w: FieldElement,
    pub q: BigRational,
}

impl UniformTail {
    /// Whether the weights along the tail satisfy `sum w = 1`.
    pub fn weight_sum_is_one(&self) -> Result<bool> {
        let field = self.w.spec();
        let mut sum = field.zero();
        for _ in 0..self.branching {
            sum = sum.add(&self.w)?;
        }
        sum.field_eq(&field.one())
    }
}

/// A validated, immutable weighted tree truncated at a finite depth.
#[derive(Debug, Clone)]
pub struct WeightedTree {
    field: FieldSpec,
    level_sizes: Vec<usize>,
    /// parent[n-1][i]: parent index of vertex (n, i), for n >= 1.
    parent: Vec<Vec<usize>>,
    /// child_start[n][i]: first child index (in level n+1) of vertex (n, i);
    /// one extra sentinel entry equal to |T_{n+1}|.
    child_start: Vec<Vec<usize>>,
    /// edge_w[n][j]: weight of the edge from parent to vertex (n+1, j).
    edge_w: Vec<Vec<FieldElement>>,
    /// edge_q[n][j]: transition probability of the same edge.
    edge_q: Vec<Vec<BigRational>>,
    tail: Option<UniformTail>,
}

impl WeightedTree {
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Materialized depth D.
    pub fn depth(&self) -> usize {
        self.level_sizes.len() - 1
    }

    /// Depth including the uniform tail, if any.
    pub fn virtual_depth(&self) -> usize {
        self.tail.as_ref().map_or(self.depth(), |t| t.to_depth)
    }

    pub fn tail(&self) -> Option<&UniformTail> {
        self.tail.as_ref()
    }

    pub fn level_size(&self, level: usize) -> Result<usize> {
        self.level_sizes
            .get(level)
            .copied()
            .ok_or(Error::LevelOutOfRange { level, max: self.depth() })
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn vertex_count(&self) -> usize {
        self.level_sizes.iter().sum()
    }

    pub fn check_vertex(&self, v: VertexRef) -> Result<()> {
        let size = self.level_size(v.level)?;
        if v.index >= size {
            return Err(Error::VertexOutOfRange {
                level: v.level,
                index: v.index,
                size,
            });
        }
        Ok(())
    }

    /// Children of `v` as an index range into level `v.level + 1`.
    pub fn children(&self, v: VertexRef) -> Result<std::ops::Range<usize>> {
        self.check_vertex(v)?;
        if v.level >= self.depth() {
            return Ok(0..0);
        }
        let starts = &self.child_start[v.level];
        Ok(starts[v.index]..starts[v.index + 1])
    }

    /// Parent index of a non-root vertex.
    pub fn parent(&self, v: VertexRef) -> Result<usize> {
        self.check_vertex(v)?;
        if v.level == 0 {
            return Err(Error::VertexOutOfRange { level: 0, index: v.index, size: 0 });
        }
        Ok(self.parent[v.level - 1][v.index])
    }

    /// Weight of the edge from `v`'s parent into `v`.
    pub fn weight_into(&self, v: VertexRef) -> Result<&FieldElement> {
        self.check_vertex(v)?;
        if v.level == 0 {
            return Err(Error::VertexOutOfRange { level: 0, index: v.index, size: 0 });
        }
        Ok(&self.edge_w[v.level - 1][v.index])
    }

    /// Transition probability of the edge from `v`'s parent into `v`.
    pub fn prob_into(&self, v: VertexRef) -> Result<&BigRational> {
        self.check_vertex(v)?;
        if v.level == 0 {
            return Err(Error::VertexOutOfRange { level: 0, index: v.index, size: 0 });
        }
        Ok(&self.edge_q[v.level - 1][v.index])
    }

    /// Index of `v` in the fixed breadth-first enumeration of all vertices.
    pub fn enumeration_index(&self, v: VertexRef) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(self.level_sizes[..v.level].iter().sum::<usize>() + v.index)
    }

    /// Exact sector measure `P(B_v)`: product of q along the root path.
    pub fn sector_prob(&self, v: VertexRef) -> Result<BigRational> {
        self.check_vertex(v)?;
        let mut prob = BigRational::one();
        let mut cur = v;
        while cur.level > 0 {
            prob *= self.prob_into(cur)?;
            cur = VertexRef { level: cur.level - 1, index: self.parent(cur)? };
        }
        Ok(prob)
    }

    /// Sector measures of every vertex at `level`, root-down in one sweep.
    pub fn sector_probs_at_level(&self, level: usize) -> Result<Vec<BigRational>> {
        self.level_size(level)?;
        let mut probs = vec![BigRational::one()];
        for n in 0..level {
            let next_size = self.level_sizes[n + 1];
            let mut next = Vec::with_capacity(next_size);
            for j in 0..next_size {
                let p = self.parent[n][j];
                next.push(&probs[p] * &self.edge_q[n][j]);
            }
            probs = next;
        }
        Ok(probs)
    }

    /// Descendant of `v` at `target_level` reached by always stepping to a
    /// minimal-probability child (ties toward the lowest index). Guarantees
    /// `P(B_result) <= P(B_v) * 2^-(target_level - v.level)` because each
    /// vertex has at least two children whose probabilities sum to 1.
    pub fn min_prob_descendant(&self, v: VertexRef, target_level: usize) -> Result<VertexRef> {
        self.check_vertex(v)?;
        if target_level < v.level || target_level > self.depth() {
            return Err(Error::LevelOutOfRange { level: target_level, max: self.depth() });
        }
        let mut cur = v;
        while cur.level < target_level {
            let range = self.children(cur)?;
            let qs = &self.edge_q[cur.level];
            let mut best = range.start;
            for j in range.clone().skip(1) {
                if qs[j] < qs[best] {
                    best = j;
                }
            }
            cur = VertexRef { level: cur.level + 1, index: best };
        }
        Ok(cur)
    }

    /// Walks up from `v` to `level`, returning the ancestor's index.
    pub fn ancestor_index(&self, v: VertexRef, level: usize) -> Result<usize> {
        self.check_vertex(v)?;
        if level > v.level {
            return Err(Error::LevelOutOfRange { level, max: v.level });
        }
        let mut cur = v;
        while cur.level > level {
            cur = VertexRef { level: cur.level - 1, index: self.parent(cur)? };
        }
        Ok(cur.index)
    }

    /// Root-to-`v` path as per-level indices (levels `from..=v.level`).
    pub fn path_indices(&self, v: VertexRef, from: usize) -> Result<Vec<usize>> {
        self.check_vertex(v)?;
        if from > v.level {
            return Err(Error::LevelOutOfRange { level: from, max: v.level });
        }
        let mut rev = vec![v.index];
        let mut cur = v;
        while cur.level > from {
            let p = self.parent(cur)?;
            rev.push(p);
            cur = VertexRef { level: cur.level - 1, index: p };
        }
        rev.reverse();
        Ok(rev)
    }

    /// The collapsed tree on the level set `tau = {0 = n_0 < n_1 < ...}`:
    /// level k of the result is `T_{n_k}`, an edge joins each vertex to all
    /// its descendants at the next kept level, and both `q` and `w` become
    /// the exact path products. Vertex order within a level is unchanged, so
    /// collapsed vertex (k, i) is original vertex (n_k, i).
    pub fn collapse(&self, tau: &[usize]) -> Result<WeightedTree> {
        if tau.is_empty() || tau[0] != 0 {
            return Err(Error::BadLevelSet(
                "collapse level set must start at 0".into(),
            ));
        }
        let mut levels = Vec::with_capacity(tau.len());
        for &n in tau {
            if n > self.depth() {
                return Err(Error::LevelOutOfRange { level: n, max: self.depth() });
            }
            if levels.last() == Some(&n) {
                continue;
            }
            if let Some(&prev) = levels.last() {
                if n < prev {
                    return Err(Error::BadLevelSet("collapse level set must be increasing".into()));
                }
            }
            levels.push(n);
        }

        let level_sizes: Vec<usize> = levels.iter().map(|&n| self.level_sizes[n]).collect();
        let mut parent = Vec::new();
        let mut child_start = Vec::new();
        let mut edge_w = Vec::new();
        let mut edge_q = Vec::new();

        for k in 0..levels.len().saturating_sub(1) {
            let (a, b) = (levels[k], levels[k + 1]);
            // path products from level a down to level b
            let mut anc = (0..self.level_sizes[a]).collect::<Vec<usize>>();
            let mut w_prod: Vec<FieldElement> =
                (0..self.level_sizes[a]).map(|_| self.field.one()).collect();
            let mut q_prod: Vec<BigRational> =
                (0..self.level_sizes[a]).map(|_| BigRational::one()).collect();
            for n in a..b {
                let next_size = self.level_sizes[n + 1];
                let mut next_anc = Vec::with_capacity(next_size);
                let mut next_w = Vec::with_capacity(next_size);
                let mut next_q = Vec::with_capacity(next_size);
                for j in 0..next_size {
                    let p = self.parent[n][j];
                    next_anc.push(anc[p]);
                    next_w.push(w_prod[p].mul(&self.edge_w[n][j])?);
                    next_q.push(&q_prod[p] * &self.edge_q[n][j]);
                }
                anc = next_anc;
                w_prod = next_w;
                q_prod = next_q;
            }
            // descendants of consecutive ancestors are contiguous
            let mut starts = vec![0usize; self.level_sizes[a] + 1];
            for &ancestor in &anc {
                starts[ancestor + 1] += 1;
            }
            for i in 0..self.level_sizes[a] {
                starts[i + 1] += starts[i];
            }
            parent.push(anc);
            child_start.push(starts);
            edge_w.push(w_prod);
            edge_q.push(q_prod);
        }

        let collapsed = WeightedTree {
            field: self.field,
            level_sizes,
            parent,
            child_start,
            edge_w,
            edge_q,
            tail: None,
        };
        collapsed.validate()?;
        Ok(collapsed)
    }

    /// Whether every materialized internal vertex has edge weights summing
    /// to one (the precondition for constant extension to be harmonic).
    /// Returns the first offending vertex otherwise.
    pub fn weight_rows_sum_to_one(&self) -> Result<std::result::Result<(), VertexRef>> {
        let field = self.field;
        for n in 0..self.depth() {
            let starts = &self.child_start[n];
            for i in 0..self.level_sizes[n] {
                let mut sum = field.zero();
                for j in starts[i]..starts[i + 1] {
                    sum = sum.add(&self.edge_w[n][j])?;
                }
                if !sum.field_eq(&field.one())? {
                    return Ok(Err(VertexRef { level: n, index: i }));
                }
            }
        }
        Ok(Ok(()))
    }

    /// Re-checks every structural invariant; builders call this once.
    fn validate(&self) -> Result<()> {
        let depth = self.depth();
        for n in 0..depth {
            let starts = &self.child_start[n];
            for i in 0..self.level_sizes[n] {
                let count = starts[i + 1] - starts[i];
                if count < 2 {
                    return Err(Error::BranchingTooSmall { level: n, index: i, count });
                }
                let mut sum = BigRational::zero();
                for j in starts[i]..starts[i + 1] {
                    let q = &self.edge_q[n][j];
                    if q <= &BigRational::zero() || q > &BigRational::one() {
                        return Err(Error::ProbOutOfRange {
                            level: n + 1,
                            index: j,
                            value: q.to_string(),
                        });
                    }
                    if self.edge_w[n][j].is_zero() {
                        return Err(Error::ZeroWeight { level: n + 1, index: j });
                    }
                    sum += q;
                }
                if !sum.is_one() {
                    return Err(Error::RowSumNotOne {
                        level: n,
                        index: i,
                        sum: sum.to_string(),
                    });
                }
            }
            // parents must mirror child ranges exactly
            for j in 0..self.level_sizes[n + 1] {
                let p = self.parent[n][j];
                if !(starts[p]..starts[p + 1]).contains(&j) {
                    return Err(Error::InvalidConfig(format!(
                        "vertex ({}, {j}) is outside its parent's child range",
                        n + 1
                    )));
                }
            }
        }
        if let Some(tail) = &self.tail {
            if tail.to_depth < depth {
                return Err(Error::InvalidConfig(
                    "tail depth below materialized depth".into(),
                ));
            }
            if tail.branching < 2 {
                return Err(Error::BranchingTooSmall {
                    level: depth,
                    index: 0,
                    count: tail.branching,
                });
            }
            if tail.w.is_zero() {
                return Err(Error::ZeroWeight { level: depth + 1, index: 0 });
            }
            let expected = BigRational::new(BigInt::one(), BigInt::from(tail.branching));
            if tail.q != expected {
                return Err(Error::InvalidConfig(
                    "tail probabilities must be uniform 1/branching".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Branching specification: a single factor, one per level, or one count per
/// vertex per level.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BranchingConfig {
    Uniform(usize),
    PerLevel(Vec<usize>),
    PerVertex(Vec<Vec<usize>>),
}

/// Probabilities: `"uniform"` (q = 1/|S(x)|) or explicit fractions per level
/// per vertex per child.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProbConfig {
    Named(String),
    Explicit(Vec<Vec<Vec<String>>>),
}

/// Weights: `"ones"`, `"q"` (w = q as field elements; rational field only),
/// or explicit field-element strings in the same shape as probabilities.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WeightConfig {
    Named(String),
    Explicit(Vec<Vec<Vec<String>>>),
}

/// JSON-facing tree description.
#[derive(Debug, Clone, Deserialize)]
pub struct TreeConfig {
    pub depth: usize,
    pub branching: BranchingConfig,
    pub q: ProbConfig,
    pub w: WeightConfig,
    pub field: FieldSpec,
    /// When below `depth`, levels past this are kept as a uniform tail;
    /// requires uniform branching, uniform q, and a `"ones"`/`"q"` weight
    /// rule.
    #[serde(default)]
    pub materialize_depth: Option<usize>,
}

impl TreeConfig {
    /// Uniform tree: every vertex has `branching` children, q = 1/branching,
    /// w = 1.
    pub fn uniform(depth: usize, branching: usize, field: FieldSpec) -> Self {
        TreeConfig {
            depth,
            branching: BranchingConfig::Uniform(branching),
            q: ProbConfig::Named("uniform".into()),
            w: WeightConfig::Named("ones".into()),
            field,
            materialize_depth: None,
        }
    }

    /// Uniform binary tree over the rationals with w = q = 1/2: the
    /// probabilistic model where constant extension is harmonic.
    pub fn uniform_binary_probabilistic(depth: usize) -> Self {
        TreeConfig {
            depth,
            branching: BranchingConfig::Uniform(2),
            q: ProbConfig::Named("uniform".into()),
            w: WeightConfig::Named("q".into()),
            field: FieldSpec::Rational,
            materialize_depth: None,
        }
    }

    pub fn build(&self) -> Result<WeightedTree> {
        self.build_with_cap(DEFAULT_MAX_VERTICES)
    }

    pub fn build_with_cap(&self, max_vertices: usize) -> Result<WeightedTree> {
        self.field.validate()?;
        let mat_depth = self.materialize_depth.unwrap_or(self.depth);
        if mat_depth > self.depth {
            return Err(Error::InvalidConfig(
                "materialize_depth exceeds depth".into(),
            ));
        }

        // per-vertex child counts on the materialized part
        let mut counts: Vec<Vec<usize>> = Vec::with_capacity(mat_depth);
        let mut level_size = 1usize;
        let mut total: u128 = 1;
        for n in 0..mat_depth {
            let row: Vec<usize> = match &self.branching {
                BranchingConfig::Uniform(b) => vec![*b; level_size],
                BranchingConfig::PerLevel(bs) => {
                    let b = *bs.get(n).ok_or_else(|| {
                        Error::InvalidConfig(format!("branching list shorter than depth at level {n}"))
                    })?;
                    vec![b; level_size]
                }
                BranchingConfig::PerVertex(rows) => {
                    let row = rows.get(n).ok_or_else(|| {
                        Error::InvalidConfig(format!("branching rows shorter than depth at level {n}"))
                    })?;
                    if row.len() != level_size {
                        return Err(Error::InvalidConfig(format!(
                            "branching row {n} has {} entries, level has {level_size} vertices",
                            row.len()
                        )));
                    }
                    row.clone()
                }
            };
            for (i, &c) in row.iter().enumerate() {
                if c < 2 {
                    return Err(Error::BranchingTooSmall { level: n, index: i, count: c });
                }
            }
            level_size = row.iter().sum();
            total += level_size as u128;
            if total > max_vertices as u128 {
                return Err(Error::VertexCap { count: total, cap: max_vertices });
            }
            counts.push(row);
        }

        let mut level_sizes = vec![1usize];
        for row in &counts {
            level_sizes.push(row.iter().sum());
        }

        let mut parent = Vec::with_capacity(mat_depth);
        let mut child_start = Vec::with_capacity(mat_depth);
        for row in &counts {
            let mut starts = Vec::with_capacity(row.len() + 1);
            starts.push(0usize);
            let mut parents = Vec::new();
            for (i, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    parents.push(i);
                }
                starts.push(starts[i] + c);
            }
            parent.push(parents);
            child_start.push(starts);
        }

        // probabilities
        let mut edge_q: Vec<Vec<BigRational>> = Vec::with_capacity(mat_depth);
        match &self.q {
            ProbConfig::Named(name) if name == "uniform" => {
                for row in &counts {
                    let mut qs = Vec::new();
                    for &c in row {
                        let q = BigRational::new(BigInt::one(), BigInt::from(c));
                        for _ in 0..c {
                            qs.push(q.clone());
                        }
                    }
                    edge_q.push(qs);
                }
            }
            ProbConfig::Named(other) => {
                return Err(Error::InvalidConfig(format!("unknown q rule {other:?}")))
            }
            ProbConfig::Explicit(rows) => {
                for (n, row) in counts.iter().enumerate() {
                    let given = rows.get(n).ok_or_else(|| {
                        Error::InvalidConfig(format!("q rows missing level {n}"))
                    })?;
                    if given.len() != row.len() {
                        return Err(Error::InvalidConfig(format!(
                            "q level {n} has {} vertex rows, expected {}",
                            given.len(),
                            row.len()
                        )));
                    }
                    let mut qs = Vec::new();
                    for (i, per_child) in given.iter().enumerate() {
                        if per_child.len() != row[i] {
                            return Err(Error::InvalidConfig(format!(
                                "q at level {n} vertex {i} lists {} children, expected {}",
                                per_child.len(),
                                row[i]
                            )));
                        }
                        for s in per_child {
                            let q = parse_ratio(s).ok_or(Error::Parse {
                                what: "probability",
                                input: s.clone(),
                            })?;
                            qs.push(q);
                        }
                    }
                    edge_q.push(qs);
                }
            }
        }

        // weights
        let mut edge_w: Vec<Vec<FieldElement>> = Vec::with_capacity(mat_depth);
        match &self.w {
            WeightConfig::Named(name) if name == "ones" => {
                for qs in &edge_q {
                    edge_w.push(vec![self.field.one(); qs.len()]);
                }
            }
            WeightConfig::Named(name) if name == "q" => {
                if self.field != FieldSpec::Rational {
                    return Err(Error::InvalidConfig(
                        "w = \"q\" requires the rational field".into(),
                    ));
                }
                for qs in &edge_q {
                    let ws = qs
                        .iter()
                        .map(|q| self.field.from_ratio(q.clone()))
                        .collect::<Result<Vec<_>>>()?;
                    edge_w.push(ws);
                }
            }
            WeightConfig::Named(other) => {
                return Err(Error::InvalidConfig(format!("unknown w rule {other:?}")))
            }
            WeightConfig::Explicit(rows) => {
                for (n, qs) in edge_q.iter().enumerate() {
                    let given = rows.get(n).ok_or_else(|| {
                        Error::InvalidConfig(format!("w rows missing level {n}"))
                    })?;
                    let flat: Vec<&String> = given.iter().flatten().collect();
                    if flat.len() != qs.len() {
                        return Err(Error::InvalidConfig(format!(
                            "w level {n} lists {} edges, expected {}",
                            flat.len(),
                            qs.len()
                        )));
                    }
                    let ws = flat
                        .iter()
                        .map(|s| self.field.parse_element(s))
                        .collect::<Result<Vec<_>>>()?;
                    edge_w.push(ws);
                }
            }
        }

        // uniform tail past the materialized depth
        let tail = if mat_depth < self.depth {
            let branching = match &self.branching {
                BranchingConfig::Uniform(b) => *b,
                _ => {
                    return Err(Error::NoUniformTail(
                        "materialize_depth below depth requires uniform branching".into(),
                    ))
                }
            };
            if !matches!(&self.q, ProbConfig::Named(n) if n == "uniform") {
                return Err(Error::NoUniformTail(
                    "materialize_depth below depth requires uniform q".into(),
                ));
            }
            let q = BigRational::new(BigInt::one(), BigInt::from(branching));
            let w = match &self.w {
                WeightConfig::Named(n) if n == "ones" => self.field.one(),
                WeightConfig::Named(n) if n == "q" => self.field.from_ratio(q.clone())?,
                _ => {
                    return Err(Error::NoUniformTail(
                        "materialize_depth below depth requires a named weight rule".into(),
                    ))
                }
            };
            Some(UniformTail { to_depth: self.depth, branching, w, q })
        } else {
            None
        };

        let tree = WeightedTree {
            field: self.field,
            level_sizes,
            parent,
            child_start,
            edge_w,
            edge_q,
            tail,
        };
        tree.validate()?;
        Ok(tree)
    }
}
