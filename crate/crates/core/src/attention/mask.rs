use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MaskError;
use crate::tensor::{DenseMask, SparsePattern};
use crate::treesplit::AdjMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Local,
    Global,
    Ast,
    Dilated,
    Random,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [Pattern::Local, Pattern::Global, Pattern::Ast, Pattern::Dilated, Pattern::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Local => "local",
            Pattern::Global => "global",
            Pattern::Ast => "ast",
            Pattern::Dilated => "dilated",
            Pattern::Random => "random",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == name)
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Set of patterns that admitted a pair. Empty for a diagonal entry that
/// exists only because every row must contain itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PatternSet(u8);

impl PatternSet {
    pub fn single(p: Pattern) -> Self {
        Self(p.bit())
    }

    pub fn contains(self, p: Pattern) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Pattern> {
        Pattern::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn names(self) -> Vec<&'static str> {
        self.iter().map(Pattern::as_str).collect()
    }
}

/// Allowed key columns for each query row, with the patterns behind each
/// entry. Rows are sorted, duplicate-free and always contain the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMask {
    n: usize,
    rows: Vec<Vec<usize>>,
    provenance: Vec<Vec<PatternSet>>,
}

impl AttentionMask {
    /// Build from an arbitrary predicate, adding the diagonal. Quadratic;
    /// intended for small `n` and reference checks.
    pub fn from_fn(n: usize, pattern: Pattern, allowed: impl Fn(usize, usize) -> bool) -> Self {
        Self::from_rows(n, pattern, (0..n).map(|i| (0..n).filter(|&j| allowed(i, j)).collect()))
    }

    fn from_rows(n: usize, pattern: Pattern, rows: impl Iterator<Item = Vec<usize>>) -> Self {
        let tag = PatternSet::single(pattern);
        let mut out_rows = Vec::with_capacity(n);
        let mut prov = Vec::with_capacity(n);
        for (i, mut cols) in rows.enumerate() {
            let diag_forced = cols.binary_search(&i).is_err();
            if diag_forced {
                let at = cols.partition_point(|&c| c < i);
                cols.insert(at, i);
            }
            let mut p = vec![tag; cols.len()];
            if diag_forced {
                p[cols.binary_search(&i).unwrap()] = PatternSet::default();
            }
            out_rows.push(cols);
            prov.push(p);
        }
        Self { n, rows: out_rows, provenance: prov }
    }

    /// Diagonal only, with empty provenance.
    pub fn diagonal(n: usize) -> Self {
        Self { n, rows: (0..n).map(|i| vec![i]).collect(), provenance: vec![vec![PatternSet::default()]; n] }
    }

    pub fn full(n: usize, pattern: Pattern) -> Self {
        Self::from_rows(n, pattern, (0..n).map(|_| (0..n).collect()))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    /// Patterns that admitted `(i, j)`, or `None` if the pair is disallowed.
    pub fn provenance(&self, i: usize, j: usize) -> Option<PatternSet> {
        self.rows[i].binary_search(&j).ok().map(|k| self.provenance[i][k])
    }

    pub fn pair_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_sparse(&self) -> SparsePattern {
        SparsePattern::from_rows(&self.rows, self.n)
    }

    pub fn to_dense(&self) -> DenseMask {
        let mut allowed = vec![false; self.n * self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                allowed[i * self.n + j] = true;
            }
        }
        DenseMask::new(self.n, self.n, allowed)
    }

    /// `n x n` matrix of pattern-name lists, empty where disallowed.
    pub fn provenance_matrix(&self) -> Vec<Vec<Vec<&'static str>>> {
        (0..self.n)
            .map(|i| {
                let mut row = vec![Vec::new(); self.n];
                for (&j, p) in self.rows[i].iter().zip(&self.provenance[i]) {
                    row[j] = p.names();
                }
                row
            })
            .collect()
    }

    /// Extend to `total` rows. Padding rows see only themselves and no
    /// valid row sees them.
    pub fn padded(&self, total: usize) -> Self {
        let mut out = self.clone();
        for i in self.n..total.max(self.n) {
            out.rows.push(vec![i]);
            out.provenance.push(vec![PatternSet::default()]);
        }
        out.n = out.rows.len();
        out
    }

    /// Block-diagonal composition: sequence `b` occupies rows and columns
    /// after all earlier blocks and attends only within itself.
    pub fn block_diagonal(blocks: &[&AttentionMask]) -> Self {
        let mut out = Self { n: 0, rows: Vec::new(), provenance: Vec::new() };
        for b in blocks {
            let off = out.n;
            out.rows.extend(b.rows.iter().map(|r| r.iter().map(|&j| j + off).collect::<Vec<_>>()));
            out.provenance.extend(b.provenance.iter().cloned());
            out.n += b.n;
        }
        out
    }

    /// Checks the structural invariants; used by tests.
    pub fn is_well_formed(&self) -> bool {
        self.rows.len() == self.n
            && self.provenance.len() == self.n
            && self.rows.iter().enumerate().all(|(i, r)| {
                r.windows(2).all(|w| w[0] < w[1]) && r.iter().all(|&j| j < self.n) && r.binary_search(&i).is_ok()
            })
            && self.rows.iter().zip(&self.provenance).all(|(r, p)| r.len() == p.len())
    }
}

/// `(i, j)` allowed iff `|i - j| <= w / 2`.
pub fn local_mask(n: usize, w: usize) -> AttentionMask {
    let half = w / 2;
    AttentionMask::from_rows(n, Pattern::Local, (0..n).map(|i| (i.saturating_sub(half)..(i + half + 1).min(n)).collect()))
}

/// Literal strict reading of the window rule: `|i - j| < w / 2`, plus the
/// diagonal.
pub fn local_mask_strict(n: usize, w: usize) -> AttentionMask {
    let half = w / 2;
    if half == 0 {
        return AttentionMask::from_rows(n, Pattern::Local, (0..n).map(|_| Vec::new()));
    }
    local_mask(n, 2 * (half - 1) + 1)
}

/// `(i, j)` allowed iff `i` or `j` is in `g`.
pub fn global_mask(n: usize, g: &[usize]) -> Result<AttentionMask, MaskError> {
    if let Some(&bad) = g.iter().find(|&&x| x >= n) {
        return Err(MaskError::IndexOutOfRange { index: bad, len: n });
    }
    let mut set = g.to_vec();
    set.sort_unstable();
    set.dedup();
    let mut is_global = vec![false; n];
    for &x in &set {
        is_global[x] = true;
    }
    Ok(AttentionMask::from_rows(
        n,
        Pattern::Global,
        (0..n).map(|i| if is_global[i] { (0..n).collect() } else { set.clone() }),
    ))
}

/// `(i, j)` allowed iff `adj[i][j]`.
pub fn ast_mask(adj: &AdjMatrix) -> Result<AttentionMask, MaskError> {
    if !adj.is_symmetric() {
        return Err(MaskError::NotSymmetric);
    }
    Ok(AttentionMask::from_rows(adj.len(), Pattern::Ast, (0..adj.len()).map(|i| adj.row(i).collect())))
}

/// `(i, j)` allowed iff `|i - j|` is a multiple of `gap` no larger than
/// `(w / 2) * gap`.
pub fn dilated_mask(n: usize, w: usize, gap: usize) -> AttentionMask {
    let half = w / 2;
    let gap = gap.max(1);
    AttentionMask::from_rows(
        n,
        Pattern::Dilated,
        (0..n).map(|i| {
            let below = (1..=half).rev().filter_map(|s| i.checked_sub(s * gap));
            let above = (1..=half).map(|s| i + s * gap).filter(|&j| j < n);
            below.chain(std::iter::once(i)).chain(above).collect()
        }),
    )
}

/// Each row receives `per_row` distinct uniformly drawn columns (capped at
/// `n`) plus the diagonal.
pub fn random_mask(n: usize, per_row: usize, seed: u64) -> AttentionMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = per_row.min(n);
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut cols = sample(&mut rng, n, k).into_vec();
            cols.push(i);
            cols.sort_unstable();
            cols.dedup();
            cols
        })
        .collect();
    AttentionMask::from_rows(n, Pattern::Random, rows.into_iter())
}

/// Pairwise union of equal-length masks, merging provenance.
pub fn union(masks: &[&AttentionMask]) -> Result<AttentionMask, MaskError> {
    let (first, rest) = masks.split_first().ok_or(MaskError::EmptyUnion)?;
    let mut acc = (*first).clone();
    for m in rest {
        if m.n != acc.n {
            return Err(MaskError::LengthMismatch { expected: acc.n, got: m.n });
        }
        for i in 0..acc.n {
            let (r, p) = merge(&acc.rows[i], &acc.provenance[i], &m.rows[i], &m.provenance[i]);
            acc.rows[i] = r;
            acc.provenance[i] = p;
        }
    }
    Ok(acc)
}

fn merge(ra: &[usize], pa: &[PatternSet], rb: &[usize], pb: &[PatternSet]) -> (Vec<usize>, Vec<PatternSet>) {
    let mut rows = Vec::with_capacity(ra.len() + rb.len());
    let mut prov = Vec::with_capacity(ra.len() + rb.len());
    let (mut a, mut b) = (0, 0);
    while a < ra.len() || b < rb.len() {
        let take_a = b == rb.len() || (a < ra.len() && ra[a] <= rb[b]);
        let take_b = a == ra.len() || (b < rb.len() && rb[b] <= ra[a]);
        match (take_a, take_b) {
            (true, true) => {
                rows.push(ra[a]);
                prov.push(pa[a].union(pb[b]));
                a += 1;
                b += 1;
            }
            (true, false) => {
                rows.push(ra[a]);
                prov.push(pa[a]);
                a += 1;
            }
            _ => {
                rows.push(rb[b]);
                prov.push(pb[b]);
                b += 1;
            }
        }
    }
    (rows, prov)
}

/// Execution plan for a mask: the gather kernel over the CSR pattern, or
/// full scores with a boolean mask.
#[derive(Debug, Clone)]
pub enum MaskPlan {
    Sparse(Arc<SparsePattern>),
    Dense(Arc<DenseMask>),
}

impl MaskPlan {
    pub fn sparse(mask: &AttentionMask) -> Self {
        MaskPlan::Sparse(Arc::new(mask.to_sparse()))
    }

    pub fn dense(mask: &AttentionMask) -> Self {
        MaskPlan::Dense(Arc::new(mask.to_dense()))
    }

    pub fn len(&self) -> usize {
        match self {
            MaskPlan::Sparse(p) => p.n_rows(),
            MaskPlan::Dense(m) => m.shape()[0],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
