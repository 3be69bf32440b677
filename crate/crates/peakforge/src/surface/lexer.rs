//! Hand-rolled lexer. Produces a flat token list with line/column spans;
//! `//` comments run to end of line.

use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u128),
    // keywords that are never identifiers
    Circuit,
    Inst,
    Return,
    If,
    Else,
    Unroll,
    Static,
    In,
    Enum,
    Product,
    Sum,
    Const,
    Type,
    Property,
    On,
    Bit,
    Bv,
    Sbv,
    As,
    True,
    False,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Assign,
    At,
    Arrow,
    // operators
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    NotEq,
    Amp,
    Caret,
    Pipe,
    Tilde,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        use Tok::*;
        match self {
            Circuit => "circuit",
            Inst => "inst",
            Return => "return",
            If => "if",
            Else => "else",
            Unroll => "unroll",
            Static => "static",
            In => "in",
            Enum => "enum",
            Product => "product",
            Sum => "sum",
            Const => "const",
            Type => "type",
            Property => "property",
            On => "on",
            Bit => "bit",
            Bv => "bv",
            Sbv => "sbv",
            As => "as",
            True => "true",
            False => "false",
            LParen => "(",
            RParen => ")",
            LBrace => "{",
            RBrace => "}",
            LBracket => "[",
            RBracket => "]",
            Comma => ",",
            Semi => ";",
            Colon => ":",
            Dot => ".",
            Assign => "=",
            At => "@",
            Arrow => "->",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Slash => "/",
            Percent => "%",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            EqEq => "==",
            NotEq => "!=",
            Amp => "&",
            Caret => "^",
            Pipe => "|",
            Tilde => "~",
            Ident(_) | Int(_) | Eof => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    // `state` and `out` stay ordinary identifiers: `state` doubles as a
    // local name and `out` is the output reference inside properties.
    Some(match word {
        "circuit" => Tok::Circuit,
        "inst" => Tok::Inst,
        "return" => Tok::Return,
        "if" => Tok::If,
        "else" => Tok::Else,
        "unroll" => Tok::Unroll,
        "static" => Tok::Static,
        "in" => Tok::In,
        "enum" => Tok::Enum,
        "product" => Tok::Product,
        "sum" => Tok::Sum,
        "const" => Tok::Const,
        "type" => Tok::Type,
        "property" => Tok::Property,
        "on" => Tok::On,
        "bit" => Tok::Bit,
        "bv" => Tok::Bv,
        "sbv" => Tok::Sbv,
        "as" => Tok::As,
        "true" => Tok::True,
        "false" => Tok::False,
        _ => return None,
    })
}

pub fn lex(src: &str) -> Result<Vec<Token>> {
    let mut toks = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let span = Span { line, col };
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => {
                toks.push(Token { tok: Tok::Eof, span });
                return Ok(toks);
            }
        };

        if c.is_whitespace() {
            bump!();
            continue;
        }

        if c == '/' {
            let mut ahead = chars.clone();
            ahead.next();
            if ahead.peek() == Some(&'/') {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
                continue;
            }
        }

        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            let tok = keyword(&word).unwrap_or(Tok::Ident(word));
            toks.push(Token { tok, span });
            continue;
        }

        if c.is_ascii_digit() {
            let mut digits = String::new();
            let mut radix = 10;
            bump!();
            if c == '0' {
                match chars.peek() {
                    Some('x') | Some('X') => {
                        radix = 16;
                        bump!();
                    }
                    Some('b') | Some('B') => {
                        radix = 2;
                        bump!();
                    }
                    _ => digits.push('0'),
                }
            } else {
                digits.push(c);
            }
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() {
                    digits.push(c);
                    bump!();
                } else if c == '_' {
                    bump!();
                } else {
                    break;
                }
            }
            if digits.is_empty() {
                return Err(Error::syntax(span, "integer literal has no digits"));
            }
            let value = u128::from_str_radix(&digits, radix).map_err(|_| {
                Error::syntax(span, format!("invalid integer literal `{digits}`"))
            })?;
            toks.push(Token { tok: Tok::Int(value), span });
            continue;
        }

        bump!();
        let next = chars.peek().copied();
        let tok = match (c, next) {
            ('<', Some('<')) => {
                bump!();
                Tok::Shl
            }
            ('>', Some('>')) => {
                bump!();
                Tok::Shr
            }
            ('<', Some('=')) => {
                bump!();
                Tok::Le
            }
            ('>', Some('=')) => {
                bump!();
                Tok::Ge
            }
            ('=', Some('=')) => {
                bump!();
                Tok::EqEq
            }
            ('!', Some('=')) => {
                bump!();
                Tok::NotEq
            }
            ('-', Some('>')) => {
                bump!();
                Tok::Arrow
            }
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('{', _) => Tok::LBrace,
            ('}', _) => Tok::RBrace,
            ('[', _) => Tok::LBracket,
            (']', _) => Tok::RBracket,
            (',', _) => Tok::Comma,
            (';', _) => Tok::Semi,
            (':', _) => Tok::Colon,
            ('.', _) => Tok::Dot,
            ('=', _) => Tok::Assign,
            ('@', _) => Tok::At,
            ('+', _) => Tok::Plus,
            ('-', _) => Tok::Minus,
            ('*', _) => Tok::Star,
            ('/', _) => Tok::Slash,
            ('%', _) => Tok::Percent,
            ('<', _) => Tok::Lt,
            ('>', _) => Tok::Gt,
            ('&', _) => Tok::Amp,
            ('^', _) => Tok::Caret,
            ('|', _) => Tok::Pipe,
            ('~', _) => Tok::Tilde,
            _ => {
                return Err(Error::syntax(
                    span,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        toks.push(Token { tok, span });
    }
}
