use std::collections::HashMap;

use super::FrontError;

/// Blank comments, drop directives and expand object-like `#define`s.
///
/// Comment characters become spaces (newlines kept) so every surviving
/// character stays at its original line and column. Directive lines are
/// emptied rather than removed for the same reason.
pub fn preprocess(source: &str) -> Result<String, FrontError> {
    let blanked = blank_comments(source)?;
    let mut macros: HashMap<String, String> = HashMap::new();
    let mut out = String::with_capacity(blanked.len());

    for (idx, line) in blanked.split_inclusive('\n').enumerate() {
        let (body, newline) = match line.strip_suffix('\n') {
            Some(b) => (b, "\n"),
            None => (line, ""),
        };
        let trimmed = body.trim_start();
        if let Some(directive) = trimmed.strip_prefix('#') {
            if let Some((name, value)) = parse_define(directive.trim_start(), idx + 1)? {
                let value = substitute(value.trim(), &macros);
                macros.insert(name, value);
            }
            out.push_str(newline);
            continue;
        }
        if macros.is_empty() {
            out.push_str(body);
        } else {
            out.push_str(&substitute(body, &macros));
        }
        out.push_str(newline);
    }
    Ok(out)
}

/// Returns `Some((name, value))` for `define NAME VALUE`; `None` for any
/// other directive.
fn parse_define(directive: &str, line: usize) -> Result<Option<(String, String)>, FrontError> {
    let Some(rest) = directive.strip_prefix("define") else {
        return Ok(None);
    };
    if !rest.starts_with(|c: char| c.is_whitespace()) {
        return Ok(None);
    }
    let rest = rest.trim_start();
    let name_len = rest
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
        .map_or(rest.len(), |(i, _)| i);
    let name = &rest[..name_len];
    if name.is_empty() {
        return Ok(None);
    }
    let value = &rest[name_len..];
    if value.starts_with('(') {
        return Err(FrontError::FunctionLikeMacro { name: name.to_string(), line });
    }
    Ok(Some((name.to_string(), value.to_string())))
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Replace whole identifier tokens found in `macros`, skipping string and
/// character literals and the insides of numbers.
fn substitute(text: &str, macros: &HashMap<String, String>) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '"' || c == '\'' {
            let end = literal_end(&chars, i);
            out.extend(&chars[i..end]);
            i = end;
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match macros.get(&word) {
                Some(value) => out.push_str(value),
                None => out.push_str(&word),
            }
        } else if c.is_ascii_digit() {
            // numbers like 1e5 or 0xff must not have their suffix replaced
            while i < chars.len() && (is_ident_char(chars[i]) || chars[i] == '.') {
                out.push(chars[i]);
                i += 1;
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Index one past the closing quote of the literal opening at `start`, or
/// the end of the line if it never closes.
fn literal_end(chars: &[char], start: usize) -> usize {
    let quote = chars[start];
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '\n' => return i,
            c if c == quote => return i + 1,
            _ => i += 1,
        }
    }
    chars.len()
}

fn blank_comments(source: &str) -> Result<String, FrontError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len());
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '"' || c == '\'' {
            let end = literal_end(&chars, i).min(chars.len());
            out.extend(&chars[i..end]);
            i = end;
        } else if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                out.push(' ');
                i += 1;
            }
        } else if c == '/' && next == Some('*') {
            let open_line = line;
            out.push_str("  ");
            i += 2;
            loop {
                match chars.get(i) {
                    None => return Err(FrontError::UnterminatedComment { line: open_line }),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        out.push_str("  ");
                        i += 2;
                        break;
                    }
                    Some('\n') => {
                        out.push('\n');
                        line += 1;
                        i += 1;
                    }
                    Some(_) => {
                        out.push(' ');
                        i += 1;
                    }
                }
            }
        } else {
            if c == '\n' {
                line += 1;
            }
            out.push(c);
            i += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_comment_blanked_in_place() {
        assert_eq!(preprocess("int x; // c\n").unwrap(), "int x;     \n");
    }

    #[test]
    fn block_comment_keeps_lines() {
        let out = preprocess("a /* one\ntwo */ b\n").unwrap();
        assert_eq!(out, "a       \n       b\n");
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn comment_markers_inside_strings_survive() {
        let src = "printf(\"// not a comment /* */\");\n";
        assert_eq!(preprocess(src).unwrap(), src);
    }

    #[test]
    fn unterminated_comment() {
        assert_eq!(
            preprocess("int a;\n/* open\n").unwrap_err(),
            FrontError::UnterminatedComment { line: 2 }
        );
    }

    #[test]
    fn define_substitutes_whole_tokens() {
        let src = "#define PI 3.14159\nx = cos((double)r/180*PI) + PIE + \"PI\";\n";
        let out = preprocess(src).unwrap();
        assert_eq!(out, "\nx = cos((double)r/180*3.14159) + PIE + \"PI\";\n");
    }

    #[test]
    fn includes_and_other_directives_dropped() {
        let out = preprocess("#include <stdio.h>\n#pragma once\nint a;\n").unwrap();
        assert_eq!(out, "\n\nint a;\n");
    }

    #[test]
    fn function_like_macro_rejected() {
        let err = preprocess("\n#define MAX(a,b) ((a)>(b)?(a):(b))\n").unwrap_err();
        assert_eq!(err, FrontError::FunctionLikeMacro { name: "MAX".into(), line: 2 });
    }

    #[test]
    fn chained_defines_expand() {
        let out = preprocess("#define N 10\n#define M N\nint a[M];").unwrap();
        assert_eq!(out, "\n\nint a[10];");
    }
}
