//! Domain types shared by the IR front-end, the binary codec, routing and the VM.
//!
//! Vertex and label identifiers are stored 0-based. The IR text (and anything
//! user-facing, such as `Display`) numbers them from 1, matching the positional
//! numbering of the source listing. The conversion happens only through
//! [`VertexId::from_one_based`] / [`VertexId::one_based`] and their `LabelId`
//! counterparts, and serde uses the 1-based form. Unit and quick-choice
//! indices are 0-based everywhere.

mod label;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use label::{lookup_attribute, resolve_all, resolve_label, AttributeLookup, LabelError};
pub use validate::{validate, Diagnostic, DiagnosticKind, Section, Severity, ValidationReport};

macro_rules! positional_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        /// Serialized 1-based, like the IR text.
        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_u64(self.one_based())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let n = u64::deserialize(d)?;
                $name::from_one_based(n)
                    .ok_or_else(|| serde::de::Error::custom(format!("{} is not a 1-based position", n)))
            }
        }

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }

            /// Converts a 1-based source number; `0` and overflowing values are rejected.
            pub fn from_one_based(n: u64) -> Option<Self> {
                n.checked_sub(1)
                    .and_then(|n| u32::try_from(n).ok())
                    .map($name)
            }

            pub fn one_based(self) -> u64 {
                u64::from(self.0) + 1
            }
        }

        impl From<usize> for $name {
            fn from(index: usize) -> Self {
                $name(index as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.one_based())
            }
        }
    };
}

positional_id!(
    /// Position of a vertex in the graph section.
    VertexId
);
positional_id!(
    /// Position of a label in the label table.
    LabelId
);

/// Index into the header's unit list (0-based in IR text too).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitId(pub u32);

impl UnitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Exponent/mantissa widths of the program-wide minifloat (`ENCODE_FLOAT e m`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FloatFormat {
    pub exp_bits: u8,
    pub mant_bits: u8,
}

impl FloatFormat {
    /// Used when the header does not declare a format.
    pub const DEFAULT: FloatFormat = FloatFormat {
        exp_bits: 8,
        mant_bits: 23,
    };

    /// Widest exponent whose whole range still fits in an `f64`.
    pub const MAX_EXP_BITS: u8 = 11;

    pub fn new(exp_bits: u8, mant_bits: u8) -> Self {
        FloatFormat {
            exp_bits,
            mant_bits,
        }
    }

    pub fn total_bits(self) -> u32 {
        1 + u32::from(self.exp_bits) + u32::from(self.mant_bits)
    }

    pub fn is_valid(self) -> bool {
        self.exp_bits >= 1
            && self.mant_bits >= 1
            && self.exp_bits <= Self::MAX_EXP_BITS
            && self.total_bits() <= 32
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementUnit {
    pub symbol: String,
}

/// A header command this implementation has no semantics for. It is carried
/// through parsing and encoding unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraCommand {
    pub id: u8,
    pub payload: Vec<u8>,
}

/// Header command ids. There are 13 slots; the ones not named here are opaque.
pub mod command_id {
    pub const DEFINE_UNIT: u8 = 0;
    pub const ENCODE_FLOAT: u8 = 1;
    pub const DEFINE_ORIGIN: u8 = 2;
    pub const FIRST_EXTRA: u8 = 3;
    pub const LAST_EXTRA: u8 = 12;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeaderConfig {
    pub units: Vec<MeasurementUnit>,
    pub float_format: Option<FloatFormat>,
    /// Vertex where this code is physically posted.
    pub origin: Option<VertexId>,
    pub extra_commands: Vec<ExtraCommand>,
}

impl HeaderConfig {
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
            && self.float_format.is_none()
            && self.origin.is_none()
            && self.extra_commands.is_empty()
    }

    pub fn effective_float_format(&self) -> FloatFormat {
        self.float_format.unwrap_or(FloatFormat::DEFAULT)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttrKind {
    Int,
    Float,
    Str,
}

impl AttrKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, AttrKind::Int | AttrKind::Float)
    }
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrKind::Int => "INT",
            AttrKind::Float => "FLOAT",
            AttrKind::Str => "STRING",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AttributeValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl AttributeValue {
    pub fn kind(&self) -> AttrKind {
        match self {
            AttributeValue::Int(_) => AttrKind::Int,
            AttributeValue::Float(_) => AttrKind::Float,
            AttributeValue::Str(_) => AttrKind::Str,
        }
    }

    /// Numeric view; integers are widened.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            AttributeValue::Int(i) => Some(i as f64),
            AttributeValue::Float(x) => Some(x),
            AttributeValue::Str(_) => None,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Int(i) => write!(f, "{i}"),
            AttributeValue::Float(x) => write!(f, "{x:?}"),
            AttributeValue::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeDescriptor {
    pub name: String,
    pub kind: AttrKind,
    pub unit: Option<UnitId>,
    pub optional: bool,
    pub default: Option<AttributeValue>,
}

impl AttributeDescriptor {
    pub fn new(name: impl Into<String>, kind: AttrKind) -> Self {
        AttributeDescriptor {
            name: name.into(),
            kind,
            unit: None,
            optional: false,
            default: None,
        }
    }

    pub fn with_unit(mut self, unit: UnitId) -> Self {
        self.unit = Some(unit);
        self
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDef {
    pub name: String,
    pub parent: Option<LabelId>,
    pub attributes: Vec<AttributeDescriptor>,
}

/// Values of a vertex or arc, one slot per resolved descriptor of its label.
/// `None` marks an optional attribute left out.
pub type AttributeValues = Vec<Option<AttributeValue>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub destination: VertexId,
    /// `false` for an undirected arc, usable in both directions.
    pub oriented: bool,
    pub label: LabelId,
    pub values: AttributeValues,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub label: LabelId,
    pub values: AttributeValues,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: Vec<Vertex>,
}

impl Graph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(id.index())
    }

    pub fn edge(&self, edge: EdgeRef) -> Option<&Edge> {
        self.vertices
            .get(edge.source.index())?
            .edges
            .get(edge.index)
    }

    pub fn edge_count(&self) -> usize {
        self.vertices.iter().map(|v| v.edges.len()).sum()
    }
}

/// Names an edge by the vertex that defines it and its position in that
/// vertex's edge list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub source: VertexId,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Node,
    Arc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        CmpOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn compare<T: PartialOrd + ?Sized>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConditionToken {
    NodeIs(VertexId),
    NodeLabelIs(LabelId),
    AttrCmp {
        scope: Scope,
        name: String,
        op: CmpOp,
        literal: AttributeValue,
    },
    And,
    Or,
    Not,
}

impl ConditionToken {
    /// (operands popped, operands pushed)
    fn arity(&self) -> (usize, usize) {
        match self {
            ConditionToken::NodeIs(_)
            | ConditionToken::NodeLabelIs(_)
            | ConditionToken::AttrCmp { .. } => (0, 1),
            ConditionToken::And | ConditionToken::Or => (2, 1),
            ConditionToken::Not => (1, 1),
        }
    }
}

/// Destination predicate in reverse polish notation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub tokens: Vec<ConditionToken>,
}

impl Condition {
    pub fn new(tokens: Vec<ConditionToken>) -> Self {
        Condition { tokens }
    }

    pub fn node_is(vertex: VertexId) -> Self {
        Condition::new(vec![ConditionToken::NodeIs(vertex)])
    }

    /// Stack depth never underflows and ends at exactly one operand.
    pub fn is_well_formed(&self) -> bool {
        let mut depth = 0usize;
        for token in &self.tokens {
            let (pop, push) = token.arity();
            match depth.checked_sub(pop) {
                Some(d) => depth = d + push,
                None => return false,
            }
        }
        depth == 1
    }

    /// Disjunction of several conditions, still in RPN.
    pub fn any_of<I: IntoIterator<Item = Condition>>(conditions: I) -> Option<Condition> {
        let mut out: Option<Condition> = None;
        for cond in conditions {
            out = Some(match out {
                None => cond,
                Some(mut acc) => {
                    acc.tokens.extend(cond.tokens);
                    acc.tokens.push(ConditionToken::Or);
                    acc
                }
            });
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchStrategy {
    ShortestPath,
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchStrategy::ShortestPath => f.write_str("SHORTEST_PATH"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuickChoice {
    pub strategy: SearchStrategy,
    pub weight_attr: String,
    pub condition: Condition,
}

/// The pair of integers that follows the type tag of an `IFC` literal. It has
/// no effect on execution and is kept only so it survives a round trip.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiteralEncoding(pub u32, pub u32);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    Input {
        prompt: String,
    },
    InputNumeric {
        prompt: String,
    },
    If {
        pattern: String,
        target: usize,
    },
    IfCmp {
        op: CmpOp,
        literal: AttributeValue,
        encoding: LiteralEncoding,
        target: usize,
    },
    Goto {
        target: usize,
    },
    Push(Condition),
    Print(String),
    SearchQuick(usize),
    SearchGuided {
        strategy: SearchStrategy,
        weight_attr: String,
    },
}

impl Instruction {
    pub fn jump_target(&self) -> Option<usize> {
        match *self {
            Instruction::If { target, .. }
            | Instruction::IfCmp { target, .. }
            | Instruction::Goto { target } => Some(target),
            _ => None,
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Instruction::Input { .. } | Instruction::InputNumeric { .. }
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub header: HeaderConfig,
    pub labels: Vec<LabelDef>,
    pub graph: Graph,
    pub quick_choices: Vec<QuickChoice>,
    pub code: Vec<Instruction>,
}

impl Program {
    pub fn label(&self, id: LabelId) -> Option<&LabelDef> {
        self.labels.get(id.index())
    }

    pub fn unit_symbol(&self, unit: UnitId) -> Option<&str> {
        self.header
            .units
            .get(unit.index())
            .map(|u| u.symbol.as_str())
    }
}

pub fn is_ascii7(s: &str) -> bool {
    s.is_ascii()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_boundary() {
        assert_eq!(VertexId::from_one_based(1), Some(VertexId(0)));
        assert_eq!(VertexId::from_one_based(0), None);
        assert_eq!(VertexId(4).one_based(), 5);
        assert_eq!(VertexId(4).to_string(), "5");
        assert_eq!(LabelId::from_one_based(u64::MAX), None);
    }

    #[test]
    fn rpn_well_formedness() {
        let p = ConditionToken::NodeIs(VertexId(0));
        assert!(Condition::new(vec![p.clone()]).is_well_formed());
        assert!(Condition::new(vec![p.clone(), p.clone(), ConditionToken::Or]).is_well_formed());
        assert!(!Condition::new(vec![p.clone(), p.clone()]).is_well_formed());
        assert!(!Condition::new(vec![ConditionToken::Not]).is_well_formed());
        assert!(!Condition::new(vec![]).is_well_formed());
        assert!(Condition::new(vec![p, ConditionToken::Not]).is_well_formed());
    }

    #[test]
    fn any_of_builds_disjunction() {
        let c = Condition::any_of([
            Condition::node_is(VertexId(1)),
            Condition::node_is(VertexId(2)),
            Condition::node_is(VertexId(3)),
        ])
        .unwrap();
        assert!(c.is_well_formed());
        assert_eq!(c.tokens.len(), 5);
        assert!(Condition::any_of(Vec::new()).is_none());
    }

    #[test]
    fn float_format_limits() {
        assert!(FloatFormat::new(3, 4).is_valid());
        assert!(FloatFormat::new(8, 23).is_valid());
        assert!(!FloatFormat::new(0, 4).is_valid());
        assert!(!FloatFormat::new(3, 0).is_valid());
        assert!(!FloatFormat::new(11, 21).is_valid());
        assert!(!FloatFormat::new(12, 4).is_valid());
    }
}
