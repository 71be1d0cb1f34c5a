//! Textual intermediate representation: lexer, recursive-descent parser and
//! canonical printer. The grammar is documented in `docs/grammar.md`.

mod lexer;
mod parser;
mod printer;

pub use lexer::{lex, LexError, LexErrorKind, Position, Token, TokenKind};
pub use parser::{parse, parse_program, ParseError, SourceSpanError};
pub use printer::print;
