use std::fmt;

use thiserror::Error;

use super::lexer::{lex, LexError, Position, Token, TokenKind};
use crate::model::{
    resolve_label, validate, AttrKind, AttributeDescriptor, AttributeValue, AttributeValues, CmpOp,
    Condition, ConditionToken, Edge, ExtraCommand, FloatFormat, HeaderConfig, Instruction,
    LabelDef, LabelId, LiteralEncoding, MeasurementUnit, Program, QuickChoice, Scope,
    SearchStrategy, UnitId, ValidationReport, Vertex, VertexId,
};

/// Grammar violation at a known location.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{position}: expected {expected}, found {found}")]
pub struct SourceSpanError {
    pub position: Position,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Syntax(#[from] SourceSpanError),
    #[error("program is invalid:\n{0}")]
    Invalid(ValidationReport),
}

impl ParseError {
    pub fn position(&self) -> Option<Position> {
        match self {
            ParseError::Lex(e) => Some(e.position),
            ParseError::Syntax(e) => Some(e.position),
            ParseError::Invalid(_) => None,
        }
    }
}

/// Lexes and parses IR source text.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    parse(&tokens)
}

/// Builds a validated program from tokens. Warnings from validation are not
/// errors; call [`validate`] to see them.
pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    let tokens: Vec<&Token> = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Comment)
        .collect();
    let end = tokens
        .last()
        .map(|t| Position {
            line: t.position.line,
            column: t.position.column + t.lexeme.len() as u32,
        })
        .unwrap_or(Position { line: 1, column: 1 });
    let mut parser = Parser {
        tokens,
        pos: 0,
        end,
        labels: Vec::new(),
    };
    let program = parser.program()?;
    let report = validate(&program);
    if report.is_valid() {
        Ok(program)
    } else {
        Err(ParseError::Invalid(report))
    }
}

type PResult<T> = Result<T, SourceSpanError>;

const CODE_KEYWORDS: &[&str] = &[
    "INPUT", "INPUTS", "IF", "IFC", "GOTO", "PUSH", "PRINT", "SEARCH",
];
const CONDITION_KEYWORDS: &[&str] = &[
    "ID_NE",
    "ID_LABEL_NE",
    "LABEL_NE",
    "ATTR",
    "AND",
    "OR",
    "NOT",
];

struct Parser<'t> {
    tokens: Vec<&'t Token>,
    pos: usize,
    end: Position,
    labels: Vec<LabelDef>,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos).copied()
    }

    fn at_keyword(&self, word: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(word))
    }

    fn at_any(&self, words: &[&str]) -> bool {
        self.peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && words.contains(&t.lexeme.as_str()))
    }

    fn here(&self) -> Position {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn error<T>(&self, expected: impl fmt::Display) -> PResult<T> {
        Err(self.error_at(self.here(), expected))
    }

    fn error_at(&self, position: Position, expected: impl fmt::Display) -> SourceSpanError {
        SourceSpanError {
            position,
            expected: expected.to_string(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), |t| t.to_string()),
        }
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.peek()?;
        self.pos += 1;
        Some(t)
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.at_keyword(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, word: &str) -> PResult<()> {
        if self.eat_keyword(word) {
            Ok(())
        } else {
            self.error(word)
        }
    }

    fn one_of(&mut self, words: &[&'static str]) -> PResult<&'static str> {
        match words.iter().find(|w| self.at_keyword(w)) {
            Some(w) => {
                self.pos += 1;
                Ok(w)
            }
            None => self.error(words.join(" or ")),
        }
    }

    fn of_kind(&mut self, kind: TokenKind, expected: &str) -> PResult<&'t Token> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            _ => self.error(expected),
        }
    }

    fn uint(&mut self, what: &str) -> PResult<u64> {
        let t = self.of_kind(TokenKind::IntLit, what)?;
        t.lexeme
            .parse()
            .map_err(|_| self.error_at(t.position, format!("{what} (non-negative, fits 64 bits)")))
    }

    fn small_uint<T: TryFrom<u64>>(&mut self, what: &str) -> PResult<T> {
        let position = self.here();
        let n = self.uint(what)?;
        T::try_from(n).map_err(|_| self.error_at(position, format!("{what} in range")))
    }

    fn index(&mut self, what: &str) -> PResult<usize> {
        let t = self.of_kind(TokenKind::Index, what)?;
        t.lexeme
            .parse()
            .map_err(|_| self.error_at(t.position, format!("{what} in range")))
    }

    fn one_based<T>(&mut self, what: &str, conv: fn(u64) -> Option<T>) -> PResult<T> {
        let position = self.here();
        let n = self.uint(what)?;
        conv(n).ok_or_else(|| self.error_at(position, format!("{what} (1-based)")))
    }

    /// `[ASCII7] "text"`
    fn string(&mut self) -> PResult<String> {
        self.eat_keyword("ASCII7");
        Ok(self
            .of_kind(TokenKind::StringLit, "string literal")?
            .lexeme
            .clone())
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let t = self.of_kind(TokenKind::IntLit, "integer literal")?;
        t.lexeme
            .parse()
            .map_err(|_| self.error_at(t.position, "integer literal that fits 64 bits"))
    }

    fn float_literal(&mut self) -> PResult<f64> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::FloatLit | TokenKind::IntLit) => {
                self.pos += 1;
                match t.lexeme.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(self.error_at(t.position, "finite float literal")),
                }
            }
            _ => self.error("float literal"),
        }
    }

    fn kind(&mut self) -> PResult<AttrKind> {
        Ok(match self.one_of(&["INT", "FLOAT", "STRING"])? {
            "INT" => AttrKind::Int,
            "FLOAT" => AttrKind::Float,
            _ => AttrKind::Str,
        })
    }

    fn at_value(&self) -> bool {
        self.at_any(&["INT", "FLOAT", "STRING"])
    }

    /// `INT 3` | `FLOAT 5.0` | `STRING ASCII7 "x"`
    fn value(&mut self) -> PResult<AttributeValue> {
        Ok(match self.kind()? {
            AttrKind::Int => AttributeValue::Int(self.int_literal()?),
            AttrKind::Float => AttributeValue::Float(self.float_literal()?),
            AttrKind::Str => AttributeValue::Str(self.string()?),
        })
    }

    fn cmp_op(&mut self) -> PResult<CmpOp> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => {
                self.pos += 1;
                CmpOp::from_symbol(&t.lexeme)
                    .ok_or_else(|| self.error_at(t.position, "comparison operator"))
            }
            _ => self.error("comparison operator"),
        }
    }

    fn strategy(&mut self) -> PResult<SearchStrategy> {
        self.keyword("SHORTEST_PATH")?;
        Ok(SearchStrategy::ShortestPath)
    }

    fn program(&mut self) -> PResult<Program> {
        let header = if self.eat_keyword("QRMAP_HEADER") {
            self.header()?
        } else {
            HeaderConfig::default()
        };

        if !self.at_keyword("DEFINE_LABEL") {
            return self.error("DEFINE_LABEL (the label section is required)");
        }
        while self.eat_keyword("DEFINE_LABEL") {
            let label = self.label_def()?;
            self.labels.push(label);
        }

        if !self.at_keyword("LABEL") {
            return self.error("LABEL (the graph section is required)");
        }
        let mut vertices = Vec::new();
        while self.eat_keyword("LABEL") {
            vertices.push(self.vertex()?);
        }

        let mut quick_choices = Vec::new();
        if self.eat_keyword("DEFINE_QUICK_CHOICES") {
            while self.eat_keyword("QUICK_CHOICE") {
                let strategy = self.strategy()?;
                let weight_attr = self.string()?;
                let condition = self.condition()?;
                quick_choices.push(QuickChoice {
                    strategy,
                    weight_attr,
                    condition,
                });
            }
        }

        let mut code = Vec::new();
        while self.peek().is_some() {
            if let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Index) {
                let n = self.index("instruction index")?;
                if n != code.len() {
                    return Err(SourceSpanError {
                        position: t.position,
                        expected: format!("instruction index ({})", code.len()),
                        found: format!("index ({n})"),
                    });
                }
            }
            if !self.at_any(CODE_KEYWORDS) {
                return self.error("instruction");
            }
            code.push(self.instruction()?);
        }

        Ok(Program {
            header,
            labels: std::mem::take(&mut self.labels),
            graph: crate::model::Graph { vertices },
            quick_choices,
            code,
        })
    }

    fn header(&mut self) -> PResult<HeaderConfig> {
        let mut header = HeaderConfig::default();
        loop {
            while self.peek().is_some_and(|t| t.kind == TokenKind::Semicolon) {
                self.pos += 1;
            }
            let position = self.here();
            let duplicate =
                |p: &Self, what: &str| Err(p.error_at(position, format!("at most one {what}")));
            if self.eat_keyword("DEFINE_UNIT") {
                self.keyword("VALUE")?;
                let symbol = self.string()?;
                header.units.push(MeasurementUnit { symbol });
            } else if self.eat_keyword("ENCODE_FLOAT") {
                if header.float_format.is_some() {
                    return duplicate(self, "ENCODE_FLOAT");
                }
                let exp_bits = self.small_uint("exponent width")?;
                let mant_bits = self.small_uint("mantissa width")?;
                header.float_format = Some(FloatFormat::new(exp_bits, mant_bits));
            } else if self.eat_keyword("DEFINE_ORIGIN") {
                if header.origin.is_some() {
                    return duplicate(self, "DEFINE_ORIGIN");
                }
                header.origin = Some(self.one_based("origin vertex", VertexId::from_one_based)?);
            } else if self.eat_keyword("HEADER_COMMAND") {
                let id = self.small_uint("header command id")?;
                self.keyword("HEX")?;
                let at = self.here();
                let hex = self.of_kind(TokenKind::StringLit, "hex payload")?;
                let payload = decode_hex(&hex.lexeme)
                    .ok_or_else(|| self.error_at(at, "even-length hex payload"))?;
                header.extra_commands.push(ExtraCommand { id, payload });
            } else {
                return Ok(header);
            }
        }
    }

    fn label_def(&mut self) -> PResult<LabelDef> {
        let index = self.labels.len();
        self.keyword("NAME")?;
        let name = self.string()?;
        let mut parent = None;
        if self.eat_keyword("EXTENSION") {
            let at = self.here();
            let p = self.one_based("parent label", LabelId::from_one_based)?;
            if p.index() >= index {
                return Err(
                    self.error_at(at, format!("a label defined before label {}", index + 1))
                );
            }
            parent = Some(p);
        }
        let mut attributes = Vec::new();
        while self.at_any(&["INT", "FLOAT", "STRING"]) {
            let kind = self.kind()?;
            let name = self.string()?;
            let mut desc = AttributeDescriptor::new(name, kind);
            if self.eat_keyword("MEASUREMENT_UNIT") {
                desc.unit = Some(UnitId(self.small_uint("unit index")?));
            }
            desc.optional = self.one_of(&["OPTIONAL", "NO_OPTIONAL"])? == "OPTIONAL";
            if self.eat_keyword("DEFAULT") {
                desc.default = Some(self.value()?);
            } else {
                self.eat_keyword("NO_DEFAULT");
            }
            attributes.push(desc);
        }
        Ok(LabelDef {
            name,
            parent,
            attributes,
        })
    }

    /// `ATTRIBUTES_FLAGS bool* ATTRIBUTES_VALUES value*`, mapped onto the
    /// resolved descriptors of `label`.
    fn assignment(&mut self, label: LabelId, label_at: Position) -> PResult<AttributeValues> {
        let resolved = resolve_label(&self.labels, label)
            .map_err(|e| self.error_at(label_at, format!("a usable label ({e})")))?;
        let optional = resolved.iter().filter(|d| d.optional).count();

        self.keyword("ATTRIBUTES_FLAGS")?;
        let flags_at = self.here();
        let mut flags = Vec::new();
        while let Some(w) = ["TRUE", "FALSE"].into_iter().find(|w| self.at_keyword(w)) {
            self.pos += 1;
            flags.push(w == "TRUE");
        }
        // With no optional attributes a single FALSE placeholder is written.
        if optional == 0 && flags == [false] {
            flags.clear();
        }
        if flags.len() != optional {
            return Err(self.error_at(
                flags_at,
                format!("{optional} presence flag(s) for label {label}"),
            ));
        }

        self.keyword("ATTRIBUTES_VALUES")?;
        let mut flags = flags.into_iter();
        let mut values = Vec::with_capacity(resolved.len());
        for desc in &resolved {
            let present = !desc.optional || flags.next().unwrap_or(false);
            if !present {
                values.push(None);
                continue;
            }
            let at = self.here();
            if !self.at_value() {
                return Err(self.error_at(
                    at,
                    format!("{} value for attribute {:?}", desc.kind, desc.name),
                ));
            }
            let v = self.value()?;
            if v.kind() != desc.kind {
                return Err(SourceSpanError {
                    position: at,
                    expected: format!("{} value for attribute {:?}", desc.kind, desc.name),
                    found: format!("{} value", v.kind()),
                });
            }
            values.push(Some(v));
        }
        if self.at_value() {
            return self.error(format!("no more values for label {label}"));
        }
        Ok(values)
    }

    fn vertex(&mut self) -> PResult<Vertex> {
        let at = self.here();
        let label = self.one_based("vertex label", LabelId::from_one_based)?;
        let values = self.assignment(label, at)?;
        let mut edges = Vec::new();
        while self.eat_keyword("DESTINATION_NODE") {
            let destination = self.one_based("destination vertex", VertexId::from_one_based)?;
            let oriented = self.one_of(&["ORIENTED", "NO_ORIENTED"])? == "ORIENTED";
            self.keyword("LABEL")?;
            let at = self.here();
            let label = self.one_based("arc label", LabelId::from_one_based)?;
            let values = self.assignment(label, at)?;
            edges.push(Edge {
                destination,
                oriented,
                label,
                values,
            });
        }
        Ok(Vertex {
            label,
            values,
            edges,
        })
    }

    fn condition(&mut self) -> PResult<Condition> {
        let at = self.here();
        let mut tokens = Vec::new();
        while self.at_any(CONDITION_KEYWORDS) {
            let word = self.next().map(|t| t.lexeme.as_str()).unwrap_or_default();
            let token = match word {
                "ID_NE" | "ID_LABEL_NE" => {
                    self.keyword("NODE")?;
                    self.keyword("DESTINATION")?;
                    ConditionToken::NodeIs(self.one_based("vertex", VertexId::from_one_based)?)
                }
                "LABEL_NE" => {
                    self.keyword("NODE")?;
                    self.keyword("DESTINATION")?;
                    ConditionToken::NodeLabelIs(self.one_based("label", LabelId::from_one_based)?)
                }
                "ATTR" => {
                    let op = self.cmp_op()?;
                    let scope = match self.one_of(&["NODE", "ARC"])? {
                        "NODE" => Scope::Node,
                        _ => Scope::Arc,
                    };
                    let name = self.string()?;
                    let literal = self.value()?;
                    ConditionToken::AttrCmp {
                        scope,
                        name,
                        op,
                        literal,
                    }
                }
                "AND" => ConditionToken::And,
                "OR" => ConditionToken::Or,
                _ => ConditionToken::Not,
            };
            tokens.push(token);
        }
        let cond = Condition::new(tokens);
        if !cond.is_well_formed() {
            return Err(SourceSpanError {
                position: at,
                expected: "well-formed RPN condition".into(),
                found: format!(
                    "{} token(s) that do not reduce to one operand",
                    cond.tokens.len()
                ),
            });
        }
        Ok(cond)
    }

    fn instruction(&mut self) -> PResult<Instruction> {
        let word = self.next().map(|t| t.lexeme.as_str()).unwrap_or_default();
        Ok(match word {
            "INPUT" => Instruction::Input {
                prompt: self.string()?,
            },
            "INPUTS" => Instruction::InputNumeric {
                prompt: self.string()?,
            },
            "IF" => {
                let pattern = self.string()?;
                let target = self.index("jump target")?;
                Instruction::If { pattern, target }
            }
            "IFC" => {
                let op = self.cmp_op()?;
                let kind = self.one_of(&["INT", "FLOAT"])?;
                let encoding = LiteralEncoding(
                    self.small_uint("literal encoding")?,
                    self.small_uint("literal encoding")?,
                );
                let literal = if kind == "INT" {
                    AttributeValue::Int(self.int_literal()?)
                } else {
                    AttributeValue::Float(self.float_literal()?)
                };
                let target = self.index("jump target")?;
                Instruction::IfCmp {
                    op,
                    literal,
                    encoding,
                    target,
                }
            }
            "GOTO" => Instruction::Goto {
                target: self.index("jump target")?,
            },
            "PUSH" => Instruction::Push(self.condition()?),
            "PRINT" => Instruction::Print(self.string()?),
            "SEARCH" => {
                if self.eat_keyword("QUICK_CHOICE") {
                    Instruction::SearchQuick(self.small_uint("quick choice index")?)
                } else {
                    self.keyword("GUIDED_SEARCH")?;
                    let strategy = self.strategy()?;
                    let weight_attr = self.string()?;
                    Instruction::SearchGuided {
                        strategy,
                        weight_attr,
                    }
                }
            }
            _ => unreachable!("caller checked CODE_KEYWORDS"),
        })
    }
}

fn decode_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) || !s.is_ascii() {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiagnosticKind;

    const MINIMAL: &str = r#"
        DEFINE_LABEL NAME ASCII7 "spot" STRING ASCII7 "name" NO_OPTIONAL
        LABEL 1 ATTRIBUTES_FLAGS FALSE ATTRIBUTES_VALUES STRING ASCII7 "Here"
    "#;

    #[test]
    fn minimal_program() {
        let p = parse_program(MINIMAL).unwrap();
        assert_eq!(p.labels.len(), 1);
        assert_eq!(p.graph.len(), 1);
        assert!(p.code.is_empty());
        assert!(p.quick_choices.is_empty());
        assert!(p.header.is_empty());
    }

    #[test]
    fn graph_section_is_required() {
        let src = r#"DEFINE_LABEL NAME ASCII7 "spot""#;
        let err = parse_program(src).unwrap_err();
        assert!(matches!(err, ParseError::Syntax(ref e) if e.expected.starts_with("LABEL")));
    }

    #[test]
    fn instruction_index_must_match() {
        let src = format!("{MINIMAL} (0) PRINT \"a\" (2) PRINT \"b\"");
        let err = parse_program(&src).unwrap_err();
        let ParseError::Syntax(e) = err else {
            panic!("{err:?}")
        };
        assert_eq!(e.expected, "instruction index (1)");
        assert_eq!(e.found, "index (2)");
    }

    #[test]
    fn dangling_jump_is_a_validation_error() {
        let src = format!("{MINIMAL} (0) GOTO (99)");
        let err = parse_program(&src).unwrap_err();
        let ParseError::Invalid(report) = err else {
            panic!("{err:?}")
        };
        assert!(report.has(DiagnosticKind::DanglingJump));
    }

    #[test]
    fn value_type_must_match_descriptor() {
        let src = r#"
            DEFINE_LABEL NAME ASCII7 "spot" STRING ASCII7 "name" NO_OPTIONAL
            LABEL 1 ATTRIBUTES_FLAGS FALSE ATTRIBUTES_VALUES INT 3
        "#;
        let err = parse_program(src).unwrap_err();
        let ParseError::Syntax(e) = err else {
            panic!("{err:?}")
        };
        assert_eq!(e.position.line, 3);
        assert!(e.expected.contains("STRING value"));
    }

    #[test]
    fn flag_count_must_match_optional_attributes() {
        let src = r#"
            DEFINE_LABEL NAME ASCII7 "spot" STRING ASCII7 "name" OPTIONAL NO_DEFAULT
            LABEL 1 ATTRIBUTES_FLAGS TRUE FALSE ATTRIBUTES_VALUES STRING ASCII7 "x"
        "#;
        assert!(matches!(parse_program(src), Err(ParseError::Syntax(_))));
    }

    #[test]
    fn header_commands_with_and_without_semicolons() {
        let body = MINIMAL;
        let a = parse_program(&format!(
            "QRMAP_HEADER; DEFINE_UNIT VALUE ASCII7 \"m\"; ENCODE_FLOAT 3 4; {body}"
        ))
        .unwrap();
        let b = parse_program(&format!(
            "QRMAP_HEADER DEFINE_UNIT VALUE ASCII7 \"m\" ENCODE_FLOAT 3 4 {body}"
        ))
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.header.float_format, Some(FloatFormat::new(3, 4)));
    }

    #[test]
    fn extra_header_commands_are_opaque() {
        let p = parse_program(&format!(
            "QRMAP_HEADER HEADER_COMMAND 7 HEX \"00ff10\" DEFINE_ORIGIN 1 {MINIMAL}"
        ))
        .unwrap();
        assert_eq!(
            p.header.extra_commands,
            vec![ExtraCommand {
                id: 7,
                payload: vec![0, 0xff, 0x10]
            }]
        );
        assert_eq!(p.header.origin, Some(VertexId(0)));
        assert!(parse_program(&format!(
            "QRMAP_HEADER HEADER_COMMAND 7 HEX \"0\" {MINIMAL}"
        ))
        .is_err());
    }

    #[test]
    fn malformed_condition() {
        let src = format!("{MINIMAL} (0) PUSH ID_NE NODE DESTINATION 1 ID_NE NODE DESTINATION 1");
        let err = parse_program(&src).unwrap_err();
        let ParseError::Syntax(e) = err else {
            panic!("{err:?}")
        };
        assert_eq!(e.expected, "well-formed RPN condition");
    }

    #[test]
    fn forward_parent_is_rejected() {
        let src = r#"DEFINE_LABEL NAME ASCII7 "a" EXTENSION 1 LABEL 1 ATTRIBUTES_FLAGS ATTRIBUTES_VALUES"#;
        assert!(matches!(parse_program(src), Err(ParseError::Syntax(_))));
    }
}
