//! Line-oriented lexer shared by the `.rspec` and `.scn` parsers.
//!
//! Newlines are significant (a key/value pair ends at end of line);
//! `#` starts a comment running to end of line. CRLF input is accepted,
//! output is always LF.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eq,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Le => "`<=`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Ge => "`>=`".to_string(),
            Tok::Newline => "end of line".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            tokens.push(Token {
                tok: $tok,
                line: $l,
                col: $c,
            })
        };
    }

    while i < bytes.len() {
        let b = bytes[i];
        let (tline, tcol) = (line, col);
        match b {
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'\n' => {
                // Collapse runs of blank lines into one newline token.
                if !matches!(
                    tokens.last().map(|t: &Token| &t.tok),
                    Some(Tok::Newline) | None
                ) {
                    push!(Tok::Newline, tline, tcol);
                }
                i += 1;
                line += 1;
                col = 1;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                    col += 1;
                }
            }
            b'{' => {
                push!(Tok::LBrace, tline, tcol);
                i += 1;
                col += 1;
            }
            b'}' => {
                push!(Tok::RBrace, tline, tcol);
                i += 1;
                col += 1;
            }
            b'(' => {
                push!(Tok::LParen, tline, tcol);
                i += 1;
                col += 1;
            }
            b')' => {
                push!(Tok::RParen, tline, tcol);
                i += 1;
                col += 1;
            }
            b'=' => {
                push!(Tok::Eq, tline, tcol);
                i += 1;
                col += 1;
            }
            b',' => {
                push!(Tok::Comma, tline, tcol);
                i += 1;
                col += 1;
            }
            b'+' => {
                push!(Tok::Plus, tline, tcol);
                i += 1;
                col += 1;
            }
            b'-' => {
                push!(Tok::Minus, tline, tcol);
                i += 1;
                col += 1;
            }
            b'*' => {
                push!(Tok::Star, tline, tcol);
                i += 1;
                col += 1;
            }
            b'/' => {
                push!(Tok::Slash, tline, tcol);
                i += 1;
                col += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Le, tline, tcol);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Lt, tline, tcol);
                    i += 1;
                    col += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(Tok::Ge, tline, tcol);
                    i += 2;
                    col += 2;
                } else {
                    push!(Tok::Gt, tline, tcol);
                    i += 1;
                    col += 1;
                }
            }
            b'"' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    match bytes.get(i) {
                        Some(b'"') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some(b'\n') | None => {
                            return Err(ParseError::Syntax {
                                line: tline,
                                col: tcol,
                                expected: "closing `\"` before end of line".to_string(),
                            })
                        }
                        Some(&c) => {
                            s.push(c as char);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                push!(Tok::Str(s), tline, tcol);
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let raw = std::str::from_utf8(&bytes[start..i]).unwrap_or("");
                let value: f64 = raw.parse().map_err(|_| ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: format!("decimal number, got `{raw}`"),
                })?;
                col += (i - start) as u32;
                push!(Tok::Number(value), tline, tcol);
            }
            b'a'..=b'z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_lowercase()
                        || bytes[i].is_ascii_digit()
                        || bytes[i] == b'_')
                {
                    i += 1;
                }
                let raw = std::str::from_utf8(&bytes[start..i]).unwrap_or("");
                col += (i - start) as u32;
                push!(Tok::Ident(raw.to_string()), tline, tcol);
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: format!("token, got unexpected byte 0x{other:02x}"),
                })
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_key_value_line() {
        let toks = lex("weight = -0.1\n").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("weight".to_string()),
                Tok::Eq,
                Tok::Minus,
                Tok::Number(0.1),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        let toks = lex("a = 1 # trailing comment\nb = 2\n").unwrap();
        let idents: Vec<_> = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(idents, vec!["a", "b"]);
    }

    #[test]
    fn uppercase_identifier_rejected() {
        assert!(lex("Weight = 1\n").is_err());
    }

    #[test]
    fn positions_point_into_the_line() {
        let toks = lex("abc = {\n").unwrap();
        assert_eq!((toks[2].line, toks[2].col), (1, 7));
    }

    #[test]
    fn exponent_numbers() {
        let toks = lex("x = 2e-5\n").unwrap();
        assert!(matches!(toks[2].tok, Tok::Number(v) if v == 2e-5));
    }

    #[test]
    fn crlf_accepted() {
        let toks = lex("a = 1\r\nb = 2\r\n").unwrap();
        assert_eq!(toks.iter().filter(|t| t.tok == Tok::Newline).count(), 2);
    }
}
