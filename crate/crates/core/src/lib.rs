//! Toolchain for QRmap executable QR codes: a navigable map, search criteria
//! and an interactive decision-tree program packed into one QR code.
//!
//! Generation: [`ir::parse_program`] → [`codec::encode_program`] → [`qrio::embed`].
//! Execution: [`qrio::extract`] → [`codec::decode_program`] → [`vm::start`].

pub mod codec;
pub mod corpus;
pub mod ir;
pub mod model;
pub mod qrio;
pub mod routing;
pub mod vm;

pub use model::{
    AttrKind, AttributeDescriptor, AttributeValue, CmpOp, Condition, ConditionToken, Edge, EdgeRef,
    FloatFormat, Graph, HeaderConfig, Instruction, LabelDef, LabelId, Program, QuickChoice, Scope,
    SearchStrategy, UnitId, Vertex, VertexId,
};
