//! Recursive-descent parser for the C subset.
//!
//! Tree shapes produced:
//!
//! * `FuncDef(name)` -> `[TypeName, ParamList, Compound]`
//! * `Decl` -> `[TypeName, declarator...]`, where a declarator is an `ID`,
//!   an `ArrayRef` chain for array dimensions, a `UnaryOp(*)` for pointers
//!   and `Assign(declarator, init)` when initialized
//! * `If` -> `[cond, then, else?]`, `While` -> `[cond, body]`,
//!   `DoWhile` -> `[body, cond]`, `For` -> `[init, cond, update, body]`
//!   with `Empty` for omitted clauses
//! * `Assign` has no lexeme for `=` and the operator for compound forms
//! * postfix `++`/`--` are `UnaryOp(++)`/`UnaryOp(--)`; prefix forms are
//!   `UnaryOp(pre++)`/`UnaryOp(pre--)`
//! * `?:` is `BinaryOp(?:)` with three children

use super::ast::{AstNode, NodeKind};
use super::lexer::{Token, TokenKind};
use super::FrontError;

type PResult<T> = Result<T, FrontError>;

const TYPE_WORDS: &[&str] = &[
    "const", "volatile", "static", "extern", "register", "auto", "unsigned", "signed", "long", "short", "int",
    "char", "double", "float", "void", "struct",
];

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="];

const BINARY_LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">="],
    &["<<", ">>"],
    &["+", "-"],
    &["*", "/", "%"],
];

/// Parse a token stream into a `TranslationUnit`.
pub fn parse(tokens: &[Token]) -> Result<AstNode, FrontError> {
    let mut parser = Parser { tokens, pos: 0 };
    parser.translation_unit()
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + offset)
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn check(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.lexeme == text && t.kind != TokenKind::StringLiteral)
    }

    fn check_any(&self, options: &[&str]) -> Option<&'t str> {
        let tok = self.peek()?;
        if !matches!(tok.kind, TokenKind::Operator | TokenKind::Punctuation) {
            return None;
        }
        options.iter().find(|o| **o == tok.lexeme).map(|_| tok.lexeme.as_str())
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.check(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<&'t Token> {
        if self.check(text) {
            self.pos += 1;
            Ok(&self.tokens[self.pos - 1])
        } else {
            Err(self.error(&format!("`{text}`")))
        }
    }

    fn error(&self, expected: &str) -> FrontError {
        match self.peek() {
            Some(tok) => FrontError::SyntaxError {
                expected: expected.to_string(),
                found: format!("`{}`", tok.lexeme),
                line: tok.line,
                col: tok.col,
            },
            None => {
                let (line, col) = self
                    .tokens
                    .last()
                    .map_or((1, 1), |t| (t.line, t.col + t.lexeme.chars().count()));
                FrontError::SyntaxError { expected: expected.to_string(), found: "end of input".into(), line, col }
            }
        }
    }

    fn node(&self, kind: NodeKind, lexeme: Option<String>, children: Vec<AstNode>, start: usize) -> AstNode {
        AstNode::new(kind, lexeme, children, (start, self.pos))
    }

    fn starts_type(&self) -> bool {
        self.peek_starts_type(0)
    }

    fn peek_starts_type(&self, offset: usize) -> bool {
        self.peek_at(offset)
            .is_some_and(|t| t.kind == TokenKind::Keyword && TYPE_WORDS.contains(&t.lexeme.as_str()))
    }

    fn identifier(&mut self) -> PResult<&'t Token> {
        match self.peek() {
            Some(tok) if tok.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(tok)
            }
            _ => Err(self.error("identifier")),
        }
    }

    // ---- declarations -------------------------------------------------

    /// Type words such as `unsigned long` or `struct node`.
    fn type_words(&mut self) -> PResult<String> {
        let mut words: Vec<&str> = Vec::new();
        while self.starts_type() {
            let tok = &self.tokens[self.pos];
            self.pos += 1;
            words.push(&tok.lexeme);
            if tok.lexeme == "struct" {
                words.push(&self.identifier()?.lexeme);
            }
        }
        if words.is_empty() {
            return Err(self.error("type name"));
        }
        Ok(words.join(" "))
    }

    fn stars(&mut self) -> usize {
        let mut n = 0;
        while self.eat("*") {
            n += 1;
            // `int * const p`
            while self.eat("const") {}
        }
        n
    }

    fn type_name_with_stars(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let mut text = self.type_words()?;
        let stars = self.stars();
        if stars > 0 {
            text.push(' ');
            text.push_str(&"*".repeat(stars));
        }
        Ok(self.node(NodeKind::TypeName, Some(text), vec![], start))
    }

    fn translation_unit(&mut self) -> PResult<AstNode> {
        let mut items = Vec::new();
        while !self.at_eof() {
            if self.eat(";") {
                continue;
            }
            items.push(self.external_item()?);
        }
        Ok(AstNode::new(NodeKind::TranslationUnit, None, items, (0, self.pos)))
    }

    fn external_item(&mut self) -> PResult<AstNode> {
        if self.is_function_header() {
            self.function()
        } else {
            self.declaration()
        }
    }

    /// Lookahead: type words, stars, identifier, `(`.
    fn is_function_header(&self) -> bool {
        let mut i = 0;
        while self.peek_starts_type(i) {
            if self.peek_at(i).is_some_and(|t| t.lexeme == "struct") {
                i += 1;
            }
            i += 1;
        }
        if i == 0 {
            return false;
        }
        while self.peek_at(i).is_some_and(|t| t.lexeme == "*" || t.lexeme == "const") {
            i += 1;
        }
        self.peek_at(i).is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(i + 1).is_some_and(|t| t.lexeme == "(")
    }

    fn function(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let ret = self.type_name_with_stars()?;
        let name = self.identifier()?.lexeme.clone();
        let params = self.param_list()?;
        if self.eat(";") {
            // prototype
            let id = AstNode::leaf(NodeKind::ID, name, (ret.span.1, ret.span.1 + 1));
            return Ok(self.node(NodeKind::Decl, None, vec![ret, id, params], start));
        }
        let body = self.compound()?;
        Ok(self.node(NodeKind::FuncDef, Some(name), vec![ret, params, body], start))
    }

    fn param_list(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.expect("(")?;
        let mut params = Vec::new();
        if self.check("void") && self.peek_at(1).is_some_and(|t| t.lexeme == ")") {
            self.pos += 1;
        }
        if !self.check(")") {
            loop {
                params.push(self.parameter()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(self.node(NodeKind::ParamList, None, params, start))
    }

    fn parameter(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let ty = self.type_name_with_stars()?;
        let mut children = vec![ty];
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            let id_start = self.pos;
            let name = self.identifier()?.lexeme.clone();
            let id = self.node(NodeKind::ID, Some(name), vec![], id_start);
            children.push(self.array_suffix(id, id_start)?);
        }
        Ok(self.node(NodeKind::Decl, None, children, start))
    }

    fn array_suffix(&mut self, mut node: AstNode, start: usize) -> PResult<AstNode> {
        while self.eat("[") {
            let mut children = vec![node];
            if !self.check("]") {
                children.push(self.assignment()?);
            }
            self.expect("]")?;
            node = self.node(NodeKind::ArrayRef, None, children, start);
        }
        Ok(node)
    }

    fn declaration(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let ty_start = self.pos;
        let ty_text = self.type_words()?;
        let ty = self.node(NodeKind::TypeName, Some(ty_text), vec![], ty_start);
        let mut children = vec![ty];
        loop {
            let d_start = self.pos;
            let mut declarator = self.declarator()?;
            if self.eat("=") {
                let init = self.assignment()?;
                declarator = self.node(NodeKind::Assign, None, vec![declarator, init], d_start);
            }
            children.push(declarator);
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")?;
        Ok(self.node(NodeKind::Decl, None, children, start))
    }

    fn declarator(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let stars = self.stars();
        let id_start = self.pos;
        let name = self.identifier()?.lexeme.clone();
        let id = self.node(NodeKind::ID, Some(name), vec![], id_start);
        let mut node = self.array_suffix(id, id_start)?;
        for _ in 0..stars {
            node = self.node(NodeKind::UnaryOp, Some("*".into()), vec![node], start);
        }
        Ok(node)
    }

    // ---- statements ---------------------------------------------------

    fn statement(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let Some(tok) = self.peek() else {
            return Err(self.error("statement"));
        };
        if tok.kind == TokenKind::Punctuation && tok.lexeme == "{" {
            return self.compound();
        }
        if tok.kind == TokenKind::Punctuation && tok.lexeme == ";" {
            self.pos += 1;
            return Ok(self.node(NodeKind::ExprStmt, None, vec![], start));
        }
        if tok.kind == TokenKind::Keyword {
            match tok.lexeme.as_str() {
                "if" => return self.if_statement(),
                "while" => return self.while_statement(),
                "do" => return self.do_while_statement(),
                "for" => return self.for_statement(),
                "return" => {
                    self.pos += 1;
                    let mut children = Vec::new();
                    if !self.check(";") {
                        children.push(self.expression()?);
                    }
                    self.expect(";")?;
                    return Ok(self.node(NodeKind::Return, None, children, start));
                }
                "break" | "continue" => {
                    let kind = if tok.lexeme == "break" { NodeKind::Break } else { NodeKind::Continue };
                    self.pos += 1;
                    self.expect(";")?;
                    return Ok(self.node(kind, None, vec![], start));
                }
                _ if self.starts_type() => return self.declaration(),
                _ => {}
            }
        }
        let expr = self.expression()?;
        self.expect(";")?;
        Ok(self.node(NodeKind::ExprStmt, None, vec![expr], start))
    }

    fn compound(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.check("}") {
            if self.at_eof() {
                return Err(self.error("`}`"));
            }
            items.push(self.statement()?);
        }
        self.pos += 1;
        Ok(self.node(NodeKind::Compound, None, items, start))
    }

    fn paren_condition(&mut self) -> PResult<AstNode> {
        self.expect("(")?;
        let cond = self.expression()?;
        self.expect(")")?;
        Ok(cond)
    }

    fn if_statement(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.pos += 1;
        let cond = self.paren_condition()?;
        let then = self.statement()?;
        let mut children = vec![cond, then];
        if self.eat("else") {
            children.push(self.statement()?);
        }
        Ok(self.node(NodeKind::If, None, children, start))
    }

    fn while_statement(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.pos += 1;
        let cond = self.paren_condition()?;
        let body = self.statement()?;
        Ok(self.node(NodeKind::While, None, vec![cond, body], start))
    }

    fn do_while_statement(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.pos += 1;
        let body = self.statement()?;
        self.expect("while")?;
        let cond = self.paren_condition()?;
        self.expect(";")?;
        Ok(self.node(NodeKind::DoWhile, None, vec![body, cond], start))
    }

    fn empty(&self) -> AstNode {
        AstNode::new(NodeKind::Empty, None, vec![], (self.pos, self.pos))
    }

    fn for_statement(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        self.pos += 1;
        self.expect("(")?;
        let init = if self.eat(";") {
            self.empty()
        } else if self.starts_type() {
            self.declaration()?
        } else {
            let e = self.expression()?;
            self.expect(";")?;
            e
        };
        let cond = if self.check(";") { self.empty() } else { self.expression()? };
        self.expect(";")?;
        let update = if self.check(")") { self.empty() } else { self.expression()? };
        self.expect(")")?;
        let body = self.statement()?;
        Ok(self.node(NodeKind::For, None, vec![init, cond, update, body], start))
    }

    // ---- expressions --------------------------------------------------

    fn expression(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let mut lhs = self.assignment()?;
        while self.eat(",") {
            let rhs = self.assignment()?;
            lhs = self.node(NodeKind::BinaryOp, Some(",".into()), vec![lhs, rhs], start);
        }
        Ok(lhs)
    }

    fn assignment(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let lhs = self.conditional()?;
        if let Some(op) = self.check_any(ASSIGN_OPS) {
            self.pos += 1;
            let rhs = self.assignment()?;
            let lexeme = (op != "=").then(|| op.to_string());
            return Ok(self.node(NodeKind::Assign, lexeme, vec![lhs, rhs], start));
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let cond = self.binary(0)?;
        if self.eat("?") {
            let then = self.expression()?;
            self.expect(":")?;
            let otherwise = self.conditional()?;
            return Ok(self.node(NodeKind::BinaryOp, Some("?:".into()), vec![cond, then, otherwise], start));
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> PResult<AstNode> {
        if level == BINARY_LEVELS.len() {
            return self.unary();
        }
        let start = self.pos;
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.check_any(BINARY_LEVELS[level]) {
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = self.node(NodeKind::BinaryOp, Some(op.to_string()), vec![lhs, rhs], start);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        if self.check("(") && self.peek_starts_type(1) {
            self.pos += 1;
            let ty = self.type_name_with_stars()?;
            self.expect(")")?;
            let operand = self.unary()?;
            return Ok(self.node(NodeKind::Cast, None, vec![ty, operand], start));
        }
        if let Some(op) = self.check_any(&["++", "--"]) {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(self.node(NodeKind::UnaryOp, Some(format!("pre{op}")), vec![operand], start));
        }
        if let Some(op) = self.check_any(&["-", "+", "!", "~", "*", "&"]) {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(self.node(NodeKind::UnaryOp, Some(op.to_string()), vec![operand], start));
        }
        if self.peek().is_some_and(|t| t.kind == TokenKind::Keyword && t.lexeme == "sizeof") {
            self.pos += 1;
            let operand = if self.check("(") && self.peek_starts_type(1) {
                self.pos += 1;
                let ty = self.type_name_with_stars()?;
                self.expect(")")?;
                ty
            } else {
                self.unary()?
            };
            return Ok(self.node(NodeKind::UnaryOp, Some("sizeof".into()), vec![operand], start));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let mut node = self.primary()?;
        loop {
            if self.eat("[") {
                let index = self.expression()?;
                self.expect("]")?;
                node = self.node(NodeKind::ArrayRef, None, vec![node, index], start);
            } else if self.eat("(") {
                let mut children = vec![node];
                if !self.check(")") {
                    loop {
                        children.push(self.assignment()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                node = self.node(NodeKind::Call, None, children, start);
            } else if let Some(op) = self.check_any(&["++", "--"]) {
                self.pos += 1;
                node = self.node(NodeKind::UnaryOp, Some(op.to_string()), vec![node], start);
            } else {
                return Ok(node);
            }
        }
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let Some(tok) = self.peek() else {
            return Err(self.error("expression"));
        };
        match tok.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                Ok(self.node(NodeKind::ID, Some(tok.lexeme.clone()), vec![], start))
            }
            TokenKind::IntLiteral | TokenKind::FloatLiteral | TokenKind::CharLiteral => {
                self.pos += 1;
                Ok(self.node(NodeKind::Constant, Some(tok.lexeme.clone()), vec![], start))
            }
            TokenKind::StringLiteral => {
                // adjacent literals concatenate
                let mut text = String::new();
                while let Some(t) = self.peek().filter(|t| t.kind == TokenKind::StringLiteral) {
                    text.push_str(&t.lexeme);
                    self.pos += 1;
                }
                Ok(self.node(NodeKind::Constant, Some(text), vec![], start))
            }
            TokenKind::Punctuation if tok.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect(")")?;
                Ok(inner)
            }
            _ => Err(self.error("expression")),
        }
    }
}
