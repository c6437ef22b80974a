use serde::{Deserialize, Serialize};

use super::mask::{
    ast_mask, dilated_mask, global_mask, local_mask, local_mask_strict, random_mask, union, AttentionMask, Pattern,
};
use super::AttentionError;
use crate::treesplit::AdjMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionPath {
    Sparse,
    Dense,
}

/// Every architectural hyperparameter of the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Embedding width `d`.
    pub embed_dim: usize,
    /// Statement-vector and Transformer width (`k` and `d_model`).
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub d_k: usize,
    pub d_ff: usize,
    /// Local window `w`.
    pub window: usize,
    pub strict_window: bool,
    /// Size `g` of the global set when `global_indices` is unset: the
    /// first `g` positions.
    pub global_size: usize,
    pub global_indices: Option<Vec<usize>>,
    pub patterns: Vec<Pattern>,
    pub dilated_gap: usize,
    pub random_per_row: usize,
    pub random_seed: u64,
    /// Use the ancestor closure of the statement-tree hierarchy instead of
    /// direct parent links for the AST pattern.
    pub adj_closure: bool,
    pub attention: AttentionPath,
    pub min_freq: usize,
    /// Number of classes `P`; fixed by the dataset at training time.
    pub num_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 128,
            d_model: 128,
            layers: 2,
            heads: 2,
            d_k: 64,
            d_ff: 2048,
            window: 3,
            strict_window: false,
            global_size: 1,
            global_indices: None,
            patterns: vec![Pattern::Local, Pattern::Global, Pattern::Ast],
            dilated_gap: 2,
            random_per_row: 2,
            random_seed: 0,
            adj_closure: false,
            attention: AttentionPath::Sparse,
            min_freq: 1,
            num_classes: 2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), AttentionError> {
        let bad = |msg: String| Err(AttentionError::InvalidConfig(msg));
        if self.heads == 0 || self.d_k == 0 || self.heads * self.d_k != self.d_model {
            return bad(format!("heads * d_k must equal d_model ({} * {} != {})", self.heads, self.d_k, self.d_model));
        }
        if !self.d_model.is_multiple_of(2) {
            return bad(format!("d_model must be even, got {}", self.d_model));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return bad(format!("window must be odd and positive, got {}", self.window));
        }
        if self.embed_dim == 0 || self.d_ff == 0 || self.layers == 0 {
            return bad("embed_dim, d_ff and layers must be positive".into());
        }
        if self.dilated_gap == 0 {
            return bad("dilated_gap must be positive".into());
        }
        if self.num_classes < 2 {
            return bad(format!("num_classes must be at least 2, got {}", self.num_classes));
        }
        Ok(())
    }

    pub fn has_pattern(&self, p: Pattern) -> bool {
        self.patterns.contains(&p)
    }

    pub fn global_set(&self, n: usize) -> Vec<usize> {
        match &self.global_indices {
            Some(ix) => ix.clone(),
            None => (0..self.global_size.min(n)).collect(),
        }
    }

    /// Union of the enabled patterns for a sequence with adjacency `adj`.
    /// With no pattern enabled the mask is the diagonal.
    pub fn build_mask(&self, adj: &AdjMatrix) -> Result<AttentionMask, AttentionError> {
        let n = adj.len();
        let mut parts = Vec::new();
        for p in Pattern::ALL {
            if !self.has_pattern(p) {
                continue;
            }
            parts.push(match p {
                Pattern::Local if self.strict_window => local_mask_strict(n, self.window),
                Pattern::Local => local_mask(n, self.window),
                Pattern::Global => global_mask(n, &self.global_set(n))?,
                Pattern::Ast => ast_mask(adj)?,
                Pattern::Dilated => dilated_mask(n, self.window, self.dilated_gap),
                Pattern::Random => random_mask(n, self.random_per_row, self.random_seed),
            });
        }
        if parts.is_empty() {
            return Ok(AttentionMask::diagonal(n));
        }
        Ok(union(&parts.iter().collect::<Vec<_>>())?)
    }
}
