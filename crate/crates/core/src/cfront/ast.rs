//! Parse-tree node types and the deterministic JSON rendering.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    TranslationUnit,
    FuncDef,
    Decl,
    If,
    While,
    For,
    DoWhile,
    Return,
    Break,
    Continue,
    ExprStmt,
    Compound,
    BinaryOp,
    UnaryOp,
    Assign,
    Call,
    ArrayRef,
    Cast,
    ID,
    Constant,
    TypeName,
    ParamList,
    /// Placeholder for an omitted `for` clause.
    Empty,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::TranslationUnit => "TranslationUnit",
            NodeKind::FuncDef => "FuncDef",
            NodeKind::Decl => "Decl",
            NodeKind::If => "If",
            NodeKind::While => "While",
            NodeKind::For => "For",
            NodeKind::DoWhile => "DoWhile",
            NodeKind::Return => "Return",
            NodeKind::Break => "Break",
            NodeKind::Continue => "Continue",
            NodeKind::ExprStmt => "ExprStmt",
            NodeKind::Compound => "Compound",
            NodeKind::BinaryOp => "BinaryOp",
            NodeKind::UnaryOp => "UnaryOp",
            NodeKind::Assign => "Assign",
            NodeKind::Call => "Call",
            NodeKind::ArrayRef => "ArrayRef",
            NodeKind::Cast => "Cast",
            NodeKind::ID => "ID",
            NodeKind::Constant => "Constant",
            NodeKind::TypeName => "TypeName",
            NodeKind::ParamList => "ParamList",
            NodeKind::Empty => "Empty",
        }
    }

    /// Statement kinds: each one becomes its own statement tree when splitting.
    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::FuncDef
                | NodeKind::Decl
                | NodeKind::If
                | NodeKind::While
                | NodeKind::For
                | NodeKind::DoWhile
                | NodeKind::Return
                | NodeKind::Break
                | NodeKind::Continue
                | NodeKind::ExprStmt
                | NodeKind::Compound
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A node of the abstract syntax tree.
///
/// `lexeme` carries the identifier name, literal text, operator symbol, type
/// words or function name depending on `kind`. `span` is the half-open range
/// of token indices the node was parsed from; it is not serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub kind: NodeKind,
    pub lexeme: Option<String>,
    pub children: Vec<AstNode>,
    #[serde(skip)]
    pub span: (usize, usize),
}

impl AstNode {
    pub fn new(kind: NodeKind, lexeme: Option<String>, children: Vec<AstNode>, span: (usize, usize)) -> Self {
        Self { kind, lexeme, children, span }
    }

    pub fn leaf(kind: NodeKind, lexeme: impl Into<String>, span: (usize, usize)) -> Self {
        Self::new(kind, Some(lexeme.into()), Vec::new(), span)
    }

    pub fn lexeme(&self) -> Option<&str> {
        self.lexeme.as_deref()
    }

    /// Number of nodes in this subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(AstNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(AstNode::depth).max().unwrap_or(0)
    }

    /// Pre-order traversal.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Structural equality on kinds and lexemes, ignoring spans.
    pub fn same_shape(&self, other: &AstNode) -> bool {
        self.kind == other.kind
            && self.lexeme == other.lexeme
            && self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| a.same_shape(b))
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a AstNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a AstNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// Renders the tree as `{"kind":..,"lexeme":..,"children":[..]}` with keys in
/// that order. Output is compact and byte-stable for a given tree.
pub fn ast_to_json(root: &AstNode) -> String {
    serde_json::to_string(root).expect("AST serialization cannot fail")
}

/// Inverse of [`ast_to_json`]. Spans are reset to `(0, 0)`.
pub fn ast_from_json(text: &str) -> serde_json::Result<AstNode> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_json() {
        let id = AstNode::leaf(NodeKind::ID, "x", (0, 1));
        assert_eq!(ast_to_json(&id), r#"{"kind":"ID","lexeme":"x","children":[]}"#);
        let c = AstNode::leaf(NodeKind::Constant, "0", (0, 1));
        assert_eq!(ast_to_json(&c), r#"{"kind":"Constant","lexeme":"0","children":[]}"#);
    }

    #[test]
    fn absent_lexeme_is_null() {
        let n = AstNode::new(NodeKind::Break, None, vec![], (0, 2));
        assert_eq!(ast_to_json(&n), r#"{"kind":"Break","lexeme":null,"children":[]}"#);
    }

    #[test]
    fn preorder_visits_parent_first() {
        let tree = AstNode::new(
            NodeKind::BinaryOp,
            Some("+".into()),
            vec![AstNode::leaf(NodeKind::ID, "a", (0, 1)), AstNode::leaf(NodeKind::ID, "b", (2, 3))],
            (0, 3),
        );
        let order: Vec<_> = tree.preorder().map(|n| n.lexeme().unwrap().to_string()).collect();
        assert_eq!(order, ["+", "a", "b"]);
        assert_eq!(tree.size(), 3);
        assert_eq!(tree.depth(), 2);
    }
}
