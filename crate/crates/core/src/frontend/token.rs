//! Hand-written lexer for the mini-language.

use crate::model::Span;

use super::diag::{Diagnostic, E_LEX};

pub const KEYWORDS: &[&str] = &[
    "package", "use", "type", "global", "mut", "unsafe", "interface", "impl", "for", "extern",
    "fn", "self", "dyn", "fnptr", "let", "indirect",
];

/// The five primitive-statement spellings.
pub const PRIMITIVES: &[&str] =
    &["@deref_ptr", "@asm", "@union_field", "@read_global", "@write_global"];

const ABI_STRINGS: &[&str] = &["C", "intrinsic", "native"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Ident,
    Punct,
    AbiString,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub loc: Span,
}

/// Tokenizes `source`, collecting lexical errors instead of failing fast.
/// Unknown characters are reported and skipped.
pub fn tokenize(source: &str, source_name: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    let bump = |c: char, line: &mut u32, col: &mut u32| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let loc = Span { line, col };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(c, &mut line, &mut col);
                i += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    bump(chars[i], &mut line, &mut col);
                    i += 1;
                }
            }
            ';' | ',' | '(' | ')' | '{' | '}' | '<' | '>' | '.' => {
                tokens.push(Token { kind: TokenKind::Punct, lexeme: c.to_string(), loc });
                bump(c, &mut line, &mut col);
                i += 1;
            }
            ':' => {
                if chars.get(i + 1) == Some(&':') {
                    tokens.push(Token { kind: TokenKind::Punct, lexeme: "::".into(), loc });
                    bump(':', &mut line, &mut col);
                    bump(':', &mut line, &mut col);
                    i += 2;
                } else {
                    tokens.push(Token { kind: TokenKind::Punct, lexeme: ":".into(), loc });
                    bump(c, &mut line, &mut col);
                    i += 1;
                }
            }
            '"' => {
                let mut text = String::new();
                bump(c, &mut line, &mut col);
                i += 1;
                let mut closed = false;
                while i < chars.len() {
                    let d = chars[i];
                    bump(d, &mut line, &mut col);
                    i += 1;
                    if d == '"' {
                        closed = true;
                        break;
                    }
                    if d == '\n' {
                        break;
                    }
                    text.push(d);
                }
                if !closed {
                    diags.push(Diagnostic::error(
                        E_LEX,
                        "unterminated ABI string",
                        source_name,
                        loc,
                    ));
                } else if ABI_STRINGS.contains(&text.as_str()) {
                    tokens.push(Token {
                        kind: TokenKind::AbiString,
                        lexeme: format!("\"{text}\""),
                        loc,
                    });
                } else {
                    diags.push(Diagnostic::error(
                        E_LEX,
                        format!("unknown ABI string \"{text}\" (expected \"C\", \"intrinsic\", or \"native\")"),
                        source_name,
                        loc,
                    ));
                }
            }
            '@' => {
                let mut word = String::from("@");
                bump(c, &mut line, &mut col);
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    word.push(chars[i]);
                    bump(chars[i], &mut line, &mut col);
                    i += 1;
                }
                if PRIMITIVES.contains(&word.as_str()) {
                    tokens.push(Token { kind: TokenKind::Keyword, lexeme: word, loc });
                } else {
                    diags.push(Diagnostic::error(
                        E_LEX,
                        format!("unknown primitive `{word}`"),
                        source_name,
                        loc,
                    ));
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    word.push(chars[i]);
                    bump(chars[i], &mut line, &mut col);
                    i += 1;
                }
                let kind = if KEYWORDS.contains(&word.as_str()) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                };
                tokens.push(Token { kind, lexeme: word, loc });
            }
            other => {
                diags.push(Diagnostic::error(
                    E_LEX,
                    format!("character `{other}` is outside the language alphabet"),
                    source_name,
                    loc,
                ));
                bump(other, &mut line, &mut col);
                i += 1;
            }
        }
    }

    (tokens, diags)
}
