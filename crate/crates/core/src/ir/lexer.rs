use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Keyword,
    /// `lexeme` holds the unescaped content.
    StringLit,
    IntLit,
    FloatLit,
    /// `(12)`; `lexeme` holds the digits.
    Index,
    Operator,
    Semicolon,
    Comment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub position: Position,
}

impl Token {
    pub fn is_keyword(&self, word: &str) -> bool {
        self.kind == TokenKind::Keyword && self.lexeme == word
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::StringLit => write!(f, "string {:?}", self.lexeme),
            TokenKind::Index => write!(f, "index ({})", self.lexeme),
            TokenKind::Comment => f.write_str("comment"),
            TokenKind::Semicolon => f.write_str("';'"),
            _ => write!(f, "'{}'", self.lexeme),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LexErrorKind {
    UnterminatedString,
    UnterminatedComment,
    IllegalCharacter(char),
    InvalidEscape(char),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{position}: {}", describe(.kind))]
pub struct LexError {
    pub kind: LexErrorKind,
    pub position: Position,
}

fn describe(kind: &LexErrorKind) -> String {
    match kind {
        LexErrorKind::UnterminatedString => "unterminated string literal".into(),
        LexErrorKind::UnterminatedComment => "unterminated comment".into(),
        LexErrorKind::IllegalCharacter(c) => format!("illegal character {c:?}"),
        LexErrorKind::InvalidEscape(c) => format!("invalid escape \\{c}"),
    }
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Position,
}

impl Scanner<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, buf: &mut String, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek().filter(|&c| pred(c)) {
            buf.push(c);
            self.bump();
        }
    }
}

/// Splits IR source into tokens. Comments are kept as tokens; the parser
/// skips them.
pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let mut s = Scanner {
        chars: source.chars().peekable(),
        pos: Position { line: 1, column: 1 },
    };
    let mut tokens = Vec::new();
    while let Some(c) = s.peek() {
        let start = s.pos;
        let err = |kind| LexError {
            kind,
            position: start,
        };
        let mut lexeme = String::new();
        let kind = match c {
            c if c.is_ascii_whitespace() => {
                s.bump();
                continue;
            }
            ';' => {
                s.bump();
                lexeme.push(';');
                TokenKind::Semicolon
            }
            '/' => {
                s.bump();
                if s.bump() != Some('*') {
                    return Err(err(LexErrorKind::IllegalCharacter('/')));
                }
                loop {
                    match s.bump() {
                        None => return Err(err(LexErrorKind::UnterminatedComment)),
                        Some('*') if s.peek() == Some('/') => {
                            s.bump();
                            break;
                        }
                        Some(c) => lexeme.push(c),
                    }
                }
                TokenKind::Comment
            }
            '"' => {
                s.bump();
                loop {
                    match s.bump() {
                        None => return Err(err(LexErrorKind::UnterminatedString)),
                        Some('"') => break,
                        Some('\\') => match s.bump() {
                            Some(c @ ('"' | '\\')) => lexeme.push(c),
                            Some(c) => {
                                return Err(LexError {
                                    kind: LexErrorKind::InvalidEscape(c),
                                    position: s.pos,
                                })
                            }
                            None => return Err(err(LexErrorKind::UnterminatedString)),
                        },
                        Some(c) if !c.is_ascii() => {
                            return Err(LexError {
                                kind: LexErrorKind::IllegalCharacter(c),
                                position: s.pos,
                            })
                        }
                        Some(c) => lexeme.push(c),
                    }
                }
                TokenKind::StringLit
            }
            '(' => {
                s.bump();
                s.take_while(&mut lexeme, |c| c.is_ascii_digit());
                if lexeme.is_empty() || s.bump() != Some(')') {
                    return Err(err(LexErrorKind::IllegalCharacter('(')));
                }
                TokenKind::Index
            }
            '<' | '>' | '=' | '!' => {
                s.bump();
                lexeme.push(c);
                if s.peek() == Some('=') {
                    s.bump();
                    lexeme.push('=');
                }
                if lexeme == "=" || lexeme == "!" {
                    return Err(err(LexErrorKind::IllegalCharacter(c)));
                }
                TokenKind::Operator
            }
            c if c == '-' || c.is_ascii_digit() => {
                lexeme.push(c);
                s.bump();
                let before = lexeme.len();
                s.take_while(&mut lexeme, |c| c.is_ascii_digit());
                if c == '-' && lexeme.len() == before {
                    return Err(err(LexErrorKind::IllegalCharacter('-')));
                }
                let mut kind = TokenKind::IntLit;
                if s.peek() == Some('.') {
                    kind = TokenKind::FloatLit;
                    lexeme.push('.');
                    s.bump();
                    let before = lexeme.len();
                    s.take_while(&mut lexeme, |c| c.is_ascii_digit());
                    if lexeme.len() == before {
                        return Err(err(LexErrorKind::IllegalCharacter('.')));
                    }
                }
                if matches!(s.peek(), Some('e' | 'E')) {
                    kind = TokenKind::FloatLit;
                    lexeme.push('e');
                    s.bump();
                    if let Some(sign @ ('+' | '-')) = s.peek() {
                        lexeme.push(sign);
                        s.bump();
                    }
                    let before = lexeme.len();
                    s.take_while(&mut lexeme, |c| c.is_ascii_digit());
                    if lexeme.len() == before {
                        return Err(err(LexErrorKind::IllegalCharacter('e')));
                    }
                }
                kind
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                s.take_while(&mut lexeme, |c| c.is_ascii_alphanumeric() || c == '_');
                TokenKind::Keyword
            }
            other => return Err(err(LexErrorKind::IllegalCharacter(other))),
        };
        tokens.push(Token {
            kind,
            lexeme,
            position: start,
        });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        lex(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn unit_definition() {
        use TokenKind::*;
        assert_eq!(
            kinds(r#"DEFINE_UNIT VALUE ASCII7 "m""#),
            vec![
                (Keyword, "DEFINE_UNIT".into()),
                (Keyword, "VALUE".into()),
                (Keyword, "ASCII7".into()),
                (StringLit, "m".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(lex("").unwrap().is_empty());
        assert!(lex(" \n\t ").unwrap().is_empty());
    }

    #[test]
    fn unterminated_string() {
        let e = lex("\"unclosed").unwrap_err();
        assert_eq!(e.kind, LexErrorKind::UnterminatedString);
        assert_eq!(e.position, Position { line: 1, column: 1 });
    }

    #[test]
    fn unterminated_comment() {
        let e = lex("LABEL 1 /* open").unwrap_err();
        assert_eq!(e.kind, LexErrorKind::UnterminatedComment);
        assert_eq!(e.position.column, 9);
    }

    #[test]
    fn illegal_character_position() {
        let e = lex("LABEL\n  1 @").unwrap_err();
        assert_eq!(e.kind, LexErrorKind::IllegalCharacter('@'));
        assert_eq!(e.position, Position { line: 2, column: 5 });
        assert!(lex("\"caf\u{e9}\"").is_err());
    }

    #[test]
    fn numbers_indices_and_operators() {
        use TokenKind::*;
        assert_eq!(
            kinds("(12) IFC <= INT 0 3 -10 5.0 1e-7 2.5E+3 ;"),
            vec![
                (Index, "12".into()),
                (Keyword, "IFC".into()),
                (Operator, "<=".into()),
                (Keyword, "INT".into()),
                (IntLit, "0".into()),
                (IntLit, "3".into()),
                (IntLit, "-10".into()),
                (FloatLit, "5.0".into()),
                (FloatLit, "1e-7".into()),
                (FloatLit, "2.5e+3".into()),
                (Semicolon, ";".into()),
            ]
        );
    }

    #[test]
    fn escapes_and_comments() {
        use TokenKind::*;
        assert_eq!(
            kinds(r#"/* a) header */ "say \"hi\" \\ ok""#),
            vec![
                (Comment, " a) header ".into()),
                (StringLit, r#"say "hi" \ ok"#.into()),
            ]
        );
        assert_eq!(
            lex(r#""bad \n""#).unwrap_err().kind,
            LexErrorKind::InvalidEscape('n')
        );
    }
}
