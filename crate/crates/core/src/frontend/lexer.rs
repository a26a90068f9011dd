//! Tokenizer shared by both dialects.
//!
//! Line comments, block comments and preprocessor lines (`#...`) are skipped.

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    /// Punctuation and operators, e.g. `{`, `::`, `->`, `==`.
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    /// Byte range in the source text.
    pub start: usize,
    pub end: usize,
}

const PUNCTS: &[&str] = &[
    "::", "->", "==", "!=", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ",", ".", "=", "!",
    "<", ">", "*", "&", ":", "-", "+", "?", "~", "/", "%", "|", "^", "@",
];

pub fn tokenize(src: &str, path: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut at_line_start = true;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            at_line_start = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' && at_line_start {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        at_line_start = false;
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let start_line = line;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(SyntaxError::new(path, start_line, "end of block comment"));
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        if c == b'"' || c == b'\'' {
            let quote = c;
            i += 1;
            let mut value = String::new();
            loop {
                let Some(&b) = bytes.get(i) else {
                    return Err(SyntaxError::new(path, line, "closing quote"));
                };
                if b == b'\n' {
                    return Err(SyntaxError::new(path, line, "closing quote"));
                }
                if b == quote {
                    i += 1;
                    break;
                }
                if b == b'\\' {
                    let Some(&next) = bytes.get(i + 1) else {
                        return Err(SyntaxError::new(path, line, "escape sequence"));
                    };
                    value.push(match next {
                        b'n' => '\n',
                        b't' => '\t',
                        b'0' => '\0',
                        other => other as char,
                    });
                    i += 2;
                    continue;
                }
                let ch = src[i..].chars().next().unwrap_or('\u{fffd}');
                value.push(ch);
                i += ch.len_utf8();
            }
            // Character literals are rare in the dialect; keep them as strings.
            out.push(Token { tok: Tok::Str(value), line, start, end: i });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            let digits = text.trim_end_matches(['L', 'l', 'u', 'U', 'f', 'F']);
            let value = if let Some(hex) = digits.strip_prefix("0x").or(digits.strip_prefix("0X")) {
                i64::from_str_radix(hex, 16).ok()
            } else {
                digits.parse::<i64>().ok()
            };
            let Some(value) = value else {
                return Err(SyntaxError::new(path, line, "integer literal"));
            };
            out.push(Token { tok: Tok::Int(value), line, start, end: i });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$')
            {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                line,
                start,
                end: i,
            });
            continue;
        }
        let Some(p) = PUNCTS.iter().find(|p| src[i..].starts_with(**p)) else {
            return Err(SyntaxError::new(path, line, "a valid token"));
        };
        i += p.len();
        out.push(Token { tok: Tok::Punct(p), line, start, end: i });
    }
    out.push(Token { tok: Tok::Eof, line, start: bytes.len(), end: bytes.len() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src, "t").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn skips_comments_and_preprocessor() {
        let toks = kinds("#include <x.h>\n// hi\nfoo /* a\nb */ -> bar");
        assert_eq!(
            toks,
            vec![
                Tok::Ident("foo".into()),
                Tok::Punct("->"),
                Tok::Ident("bar".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn tracks_lines() {
        let toks = tokenize("a\n\nb", "t").unwrap();
        assert_eq!(toks[0].line, 1);
        assert_eq!(toks[1].line, 3);
    }

    #[test]
    fn string_escapes() {
        assert_eq!(kinds(r#""a\"b""#)[0], Tok::Str("a\"b".into()));
    }

    #[test]
    fn unterminated_string_is_error() {
        assert!(tokenize("\"abc", "t").is_err());
    }
}
