//! Statement-level splitting of an AST and the tree-of-trees adjacency.
//!
//! Every statement becomes one statement tree. Statements that own a block
//! (function definitions, `if`, loops) keep only their header: condition,
//! init and update expressions, return type and parameters. The statements
//! of the block become separate trees whose parent is that header. Blocks
//! themselves (`Compound`) never appear in the output.

use serde::Serialize;
use thiserror::Error;

use crate::cfront::{AstNode, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("program has no top-level items")]
    EmptyProgram,
    #[error("expected a TranslationUnit root, found {0}")]
    NotTranslationUnit(NodeKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementTree {
    pub index: usize,
    pub header_kind: NodeKind,
    pub root: AstNode,
}

impl StatementTree {
    /// Short human label: the header token, e.g. `For` or `FuncDef:main`.
    pub fn label(&self) -> String {
        node_token(&self.root)
    }

    pub fn tokens(&self) -> Vec<String> {
        tree_tokens(self)
    }

    pub fn node_count(&self) -> usize {
        self.root.size()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementSequence {
    pub trees: Vec<StatementTree>,
    /// `parent[i]` is the enclosing statement tree; `None` only for index 0.
    pub parent: Vec<Option<usize>>,
}

impl StatementSequence {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.trees.iter().map(StatementTree::label).collect()
    }
}

/// Square boolean matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjMatrix {
    n: usize,
    cells: Vec<bool>,
}

impl AdjMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, cells: vec![false; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let n = rows.len();
        let mut m = Self::new(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "adjacency rows must be square");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.cells[i * self.n + j] = value;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Number of true cells.
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Off-diagonal pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }
}

/// Split a `TranslationUnit` into its statement-tree sequence.
///
/// Index 0 is a synthetic `TranslationUnit` tree that parents all top-level
/// items. Trees are numbered in source pre-order.
pub fn split(root: &AstNode) -> Result<StatementSequence, SplitError> {
    if root.kind != NodeKind::TranslationUnit {
        return Err(SplitError::NotTranslationUnit(root.kind));
    }
    if root.children.is_empty() {
        return Err(SplitError::EmptyProgram);
    }
    let mut seq = StatementSequence { trees: Vec::new(), parent: Vec::new() };
    let tu = AstNode::new(NodeKind::TranslationUnit, None, Vec::new(), root.span);
    push(&mut seq, tu, None);
    for item in &root.children {
        visit(item, 0, &mut seq);
    }
    Ok(seq)
}

fn push(seq: &mut StatementSequence, root: AstNode, parent: Option<usize>) -> usize {
    let index = seq.trees.len();
    seq.trees.push(StatementTree { index, header_kind: root.kind, root });
    seq.parent.push(parent);
    index
}

/// Clone `node` keeping only the children at `keep`.
fn header(node: &AstNode, keep: std::ops::Range<usize>) -> AstNode {
    let end = keep.end.min(node.children.len());
    let start = keep.start.min(end);
    AstNode::new(node.kind, node.lexeme.clone(), node.children[start..end].to_vec(), node.span)
}

fn visit(node: &AstNode, parent: usize, seq: &mut StatementSequence) {
    let ch = &node.children;
    match node.kind {
        NodeKind::Compound => {
            for c in ch {
                visit(c, parent, seq);
            }
        }
        NodeKind::FuncDef => {
            let idx = push(seq, header(node, 0..2), Some(parent));
            for body in &ch[2..] {
                visit(body, idx, seq);
            }
        }
        NodeKind::If => {
            // then and else branches both hang off the If header
            let idx = push(seq, header(node, 0..1), Some(parent));
            for branch in &ch[1..] {
                visit(branch, idx, seq);
            }
        }
        NodeKind::While => {
            let idx = push(seq, header(node, 0..1), Some(parent));
            visit(&ch[1], idx, seq);
        }
        NodeKind::DoWhile => {
            let idx = push(seq, header(node, 1..2), Some(parent));
            visit(&ch[0], idx, seq);
        }
        NodeKind::For => {
            let idx = push(seq, header(node, 0..3), Some(parent));
            visit(&ch[3], idx, seq);
        }
        _ => {
            push(seq, node.clone(), Some(parent));
        }
    }
}

/// `Adj[i][j]` is true for parent-child pairs in either direction and on the
/// diagonal.
pub fn adjacency(seq: &StatementSequence) -> AdjMatrix {
    let mut adj = AdjMatrix::identity(seq.len());
    for (child, parent) in seq.parent.iter().enumerate() {
        if let Some(p) = *parent {
            adj.set(p, child, true);
            adj.set(child, p, true);
        }
    }
    adj
}

/// Ancestor closure: every tree is linked to all of its ancestors (both
/// directions) plus itself.
pub fn adjacency_closure(seq: &StatementSequence) -> AdjMatrix {
    let mut adj = AdjMatrix::identity(seq.len());
    for i in 0..seq.len() {
        let mut cur = seq.parent[i];
        while let Some(a) = cur {
            adj.set(a, i, true);
            adj.set(i, a, true);
            cur = seq.parent[a];
        }
    }
    adj
}

/// The vocabulary token for one node: bare lexeme for identifiers,
/// `Kind:lexeme` when a node carries a lexeme, `Kind` otherwise.
pub fn node_token(node: &AstNode) -> String {
    match (node.kind, node.lexeme()) {
        (NodeKind::ID, Some(name)) => name.to_string(),
        (kind, Some(lexeme)) => format!("{kind}:{lexeme}"),
        (kind, None) => kind.to_string(),
    }
}

/// Pre-order token list of a statement tree.
pub fn tree_tokens(tree: &StatementTree) -> Vec<String> {
    tree.root.preorder().map(node_token).collect()
}

#[derive(Serialize)]
struct SplitTreeJson<'a> {
    index: usize,
    header_kind: &'a str,
    tokens: Vec<String>,
}

#[derive(Serialize)]
struct SplitJson<'a> {
    trees: Vec<SplitTreeJson<'a>>,
    parent: &'a [Option<usize>],
    adj_edges: Vec<[usize; 2]>,
}

/// JSON rendering used by the `split` command.
pub fn split_to_json(seq: &StatementSequence, adj: &AdjMatrix) -> String {
    let doc = SplitJson {
        trees: seq
            .trees
            .iter()
            .map(|t| SplitTreeJson { index: t.index, header_kind: t.header_kind.as_str(), tokens: t.tokens() })
            .collect(),
        parent: &seq.parent,
        adj_edges: adj.edges().into_iter().map(|(i, j)| [i, j]).collect(),
    };
    serde_json::to_string(&doc).expect("split serialization cannot fail")
}
