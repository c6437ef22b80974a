use serde::Serialize;

use super::FrontError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    FloatLiteral,
    CharLiteral,
    StringLiteral,
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: usize,
    pub col: usize,
}

const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "int", "long", "register", "return", "short", "signed",
    "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
];

// longest first so the scan below is maximal munch
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "->", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?",
    ":", ".",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ','];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Tokenize preprocessed text.
pub fn lex(text: &str) -> Result<Vec<Token>, FrontError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }

        let start = i;
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if is_keyword(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let (end, float) = scan_number(&chars, i);
            i = end;
            if float {
                TokenKind::FloatLiteral
            } else {
                TokenKind::IntLiteral
            }
        } else if c == '"' || c == '\'' {
            i = scan_quoted(&chars, i).ok_or(FrontError::UnknownCharacter { ch: c, line, col })?;
            if c == '"' {
                TokenKind::StringLiteral
            } else {
                TokenKind::CharLiteral
            }
        } else if PUNCTUATION.contains(&c) {
            i += 1;
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS.iter().find(|op| starts_with_at(&chars, i, op)) {
            i += op.len();
            TokenKind::Operator
        } else {
            return Err(FrontError::UnknownCharacter { ch: c, line, col });
        };

        let lexeme: String = chars[start..i].iter().collect();
        tokens.push(Token { kind, lexeme, line, col });
        col += i - start;
    }
    Ok(tokens)
}

fn starts_with_at(chars: &[char], at: usize, pat: &str) -> bool {
    let mut idx = at;
    for p in pat.chars() {
        if chars.get(idx) != Some(&p) {
            return false;
        }
        idx += 1;
    }
    true
}

/// Returns (end index, is_float).
fn scan_number(chars: &[char], start: usize) -> (usize, bool) {
    let mut i = start;
    let at = |i: usize| chars.get(i).copied().unwrap_or('\0');
    if at(i) == '0' && matches!(at(i + 1), 'x' | 'X') {
        i += 2;
        while at(i).is_ascii_hexdigit() {
            i += 1;
        }
        while matches!(at(i), 'u' | 'U' | 'l' | 'L') {
            i += 1;
        }
        return (i, false);
    }
    let mut float = false;
    while at(i).is_ascii_digit() {
        i += 1;
    }
    if at(i) == '.' {
        float = true;
        i += 1;
        while at(i).is_ascii_digit() {
            i += 1;
        }
    }
    if matches!(at(i), 'e' | 'E')
        && (at(i + 1).is_ascii_digit() || (matches!(at(i + 1), '+' | '-') && at(i + 2).is_ascii_digit()))
    {
        float = true;
        i += 2;
        while at(i).is_ascii_digit() {
            i += 1;
        }
    }
    if float {
        if matches!(at(i), 'f' | 'F' | 'l' | 'L') {
            i += 1;
        }
    } else {
        while matches!(at(i), 'u' | 'U' | 'l' | 'L') {
            i += 1;
        }
    }
    (i, float)
}

fn scan_quoted(chars: &[char], start: usize) -> Option<usize> {
    let quote = chars[start];
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '\n' => return None,
            c if c == quote => return Some(i + 1),
            _ => i += 1,
        }
    }
    None
}
