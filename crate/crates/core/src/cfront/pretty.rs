//! Render an AST back to C source. Every compound expression is fully
//! parenthesized, so `parse(to_c(ast))` reproduces the same tree.

use super::ast::{AstNode, NodeKind};

pub fn to_c(root: &AstNode) -> String {
    let mut out = String::new();
    match root.kind {
        NodeKind::TranslationUnit => {
            for item in &root.children {
                stmt(item, 0, &mut out);
            }
        }
        k if k.is_statement() => stmt(root, 0, &mut out),
        _ => out.push_str(&expr(root)),
    }
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn lex(node: &AstNode) -> &str {
    node.lexeme().unwrap_or("")
}

fn stmt(node: &AstNode, level: usize, out: &mut String) {
    let ch = &node.children;
    match node.kind {
        NodeKind::FuncDef => {
            indent(level, out);
            out.push_str(&format!("{} {}({})\n", lex(&ch[0]), lex(node), params(&ch[1])));
            stmt(&ch[2], level, out);
        }
        NodeKind::Compound => {
            indent(level, out);
            out.push_str("{\n");
            for c in ch {
                stmt(c, level + 1, out);
            }
            indent(level, out);
            out.push_str("}\n");
        }
        NodeKind::Decl => {
            indent(level, out);
            out.push_str(&decl(node));
            out.push('\n');
        }
        NodeKind::If => {
            indent(level, out);
            out.push_str(&format!("if ({})\n", expr(&ch[0])));
            stmt(&ch[1], level + 1, out);
            if let Some(other) = ch.get(2) {
                indent(level, out);
                out.push_str("else\n");
                stmt(other, level + 1, out);
            }
        }
        NodeKind::While => {
            indent(level, out);
            out.push_str(&format!("while ({})\n", expr(&ch[0])));
            stmt(&ch[1], level + 1, out);
        }
        NodeKind::DoWhile => {
            indent(level, out);
            out.push_str("do\n");
            stmt(&ch[0], level + 1, out);
            indent(level, out);
            out.push_str(&format!("while ({});\n", expr(&ch[1])));
        }
        NodeKind::For => {
            indent(level, out);
            let init = match ch[0].kind {
                NodeKind::Decl => decl(&ch[0]),
                _ => format!("{};", opt_expr(&ch[0])),
            };
            out.push_str(&format!("for ({} {}; {})\n", init, opt_expr(&ch[1]), opt_expr(&ch[2])));
            stmt(&ch[3], level + 1, out);
        }
        NodeKind::Return => {
            indent(level, out);
            match ch.first() {
                Some(e) => out.push_str(&format!("return {};\n", expr(e))),
                None => out.push_str("return;\n"),
            }
        }
        NodeKind::Break => {
            indent(level, out);
            out.push_str("break;\n");
        }
        NodeKind::Continue => {
            indent(level, out);
            out.push_str("continue;\n");
        }
        NodeKind::ExprStmt => {
            indent(level, out);
            out.push_str(&format!("{};\n", ch.first().map(expr).unwrap_or_default()));
        }
        _ => {
            indent(level, out);
            out.push_str(&format!("{};\n", expr(node)));
        }
    }
}

fn params(list: &AstNode) -> String {
    let parts: Vec<String> = list
        .children
        .iter()
        .map(|p| match p.children.get(1) {
            Some(d) => format!("{} {}", lex(&p.children[0]), declarator(d)),
            None => lex(&p.children[0]).to_string(),
        })
        .collect();
    if parts.is_empty() {
        "void".into()
    } else {
        parts.join(", ")
    }
}

fn decl(node: &AstNode) -> String {
    let ch = &node.children;
    // prototype: [TypeName, ID, ParamList]
    if ch.len() == 3 && ch[2].kind == NodeKind::ParamList {
        return format!("{} {}({});", lex(&ch[0]), lex(&ch[1]), params(&ch[2]));
    }
    let decls: Vec<String> = ch[1..].iter().map(declarator).collect();
    format!("{} {};", lex(&ch[0]), decls.join(", "))
}

fn declarator(node: &AstNode) -> String {
    match node.kind {
        NodeKind::Assign => format!("{} = {}", declarator(&node.children[0]), expr(&node.children[1])),
        NodeKind::UnaryOp => format!("*{}", declarator(&node.children[0])),
        NodeKind::ArrayRef => match node.children.get(1) {
            Some(size) => format!("{}[{}]", declarator(&node.children[0]), expr(size)),
            None => format!("{}[]", declarator(&node.children[0])),
        },
        _ => lex(node).to_string(),
    }
}

fn opt_expr(node: &AstNode) -> String {
    if node.kind == NodeKind::Empty {
        String::new()
    } else {
        expr(node)
    }
}

fn expr(node: &AstNode) -> String {
    let ch = &node.children;
    match node.kind {
        NodeKind::ID | NodeKind::Constant | NodeKind::TypeName => lex(node).to_string(),
        NodeKind::Empty => String::new(),
        NodeKind::BinaryOp if lex(node) == "?:" => {
            format!("({} ? {} : {})", expr(&ch[0]), expr(&ch[1]), expr(&ch[2]))
        }
        NodeKind::BinaryOp => format!("({} {} {})", expr(&ch[0]), lex(node), expr(&ch[1])),
        NodeKind::Assign => {
            let op = node.lexeme().unwrap_or("=");
            format!("({} {} {})", expr(&ch[0]), op, expr(&ch[1]))
        }
        NodeKind::UnaryOp => {
            let op = lex(node);
            match op {
                "++" | "--" => format!("({}{})", expr(&ch[0]), op),
                "pre++" | "pre--" => format!("({}{})", &op[3..], expr(&ch[0])),
                "sizeof" if ch[0].kind == NodeKind::TypeName => format!("sizeof({})", lex(&ch[0])),
                "sizeof" => format!("(sizeof {})", expr(&ch[0])),
                _ => format!("({}{})", op, expr(&ch[0])),
            }
        }
        NodeKind::Call => {
            let args: Vec<String> = ch[1..].iter().map(expr).collect();
            format!("{}({})", expr(&ch[0]), args.join(", "))
        }
        NodeKind::ArrayRef => format!("{}[{}]", expr(&ch[0]), ch.get(1).map(expr).unwrap_or_default()),
        NodeKind::Cast => format!("(({}) {})", lex(&ch[0]), expr(&ch[1])),
        _ => String::new(),
    }
}
