use serde::Serialize;

use super::bits::{ref_width, BitReader, BitStream};
use super::minifloat::{decode_minifloat, encode_minifloat, MinifloatError, RoundingMode};
use super::{DecodeError, EncodeError};
use crate::model::{
    command_id, resolve_label, validate, AttrKind, AttributeDescriptor, AttributeValue,
    AttributeValues, CmpOp, Condition, ConditionToken, Edge, ExtraCommand, FloatFormat, Graph,
    HeaderConfig, Instruction, LabelDef, LabelId, LiteralEncoding, MeasurementUnit, Program,
    QuickChoice, Scope, SearchStrategy, UnitId, Vertex, VertexId,
};

pub const MAGIC: u16 = 0x514d;
pub const DIALECT_QRMAP: u8 = 0x3;
pub const FORMAT_VERSION: u8 = 1;
/// Magic, dialect, version and the section presence flags.
pub const FRAMING_BITS: usize = 16 + 4 + 4 + 4;

const TEXT_ASCII7: u64 = 0;

mod opcode {
    pub const INPUT: u64 = 0;
    pub const INPUT_NUMERIC: u64 = 1;
    pub const IF: u64 = 2;
    pub const IF_CMP: u64 = 3;
    pub const GOTO: u64 = 4;
    pub const PUSH: u64 = 5;
    pub const PRINT: u64 = 6;
    pub const SEARCH_QUICK: u64 = 7;
    pub const SEARCH_GUIDED: u64 = 8;
}

mod cond_op {
    pub const NODE_IS: u64 = 0;
    pub const NODE_LABEL_IS: u64 = 1;
    pub const ATTR_CMP: u64 = 2;
    pub const AND: u64 = 3;
    pub const OR: u64 = 4;
    pub const NOT: u64 = 5;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EncodeOptions {
    pub float_mode: RoundingMode,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            float_mode: RoundingMode::Exact,
        }
    }
}

/// A float that was rounded to fit the program's minifloat format.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quantization {
    pub original: f64,
    pub encoded: f64,
}

/// Bits spent on each section, framing excluded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SectionSizes {
    pub header: usize,
    pub labels: usize,
    pub graph: usize,
    pub quick_choices: usize,
    pub code: usize,
}

impl SectionSizes {
    pub fn total(&self) -> usize {
        self.header + self.labels + self.graph + self.quick_choices + self.code
    }

    pub fn named(&self) -> [(&'static str, usize); 5] {
        [
            ("header", self.header),
            ("label", self.labels),
            ("graph", self.graph),
            ("quick choice", self.quick_choices),
            ("code", self.code),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Encoded {
    pub stream: BitStream,
    pub sections: SectionSizes,
    pub quantized: Vec<Quantization>,
}

/// Encodes with exact floats; any value the header's minifloat cannot hold
/// is an error.
pub fn encode_program(program: &Program) -> Result<BitStream, EncodeError> {
    encode_program_with(program, EncodeOptions::default()).map(|e| e.stream)
}

pub fn encode_program_with(
    program: &Program,
    options: EncodeOptions,
) -> Result<Encoded, EncodeError> {
    let report = validate(program);
    if !report.is_valid() {
        return Err(EncodeError::Invalid(report));
    }
    let resolved: Vec<Vec<AttributeDescriptor>> = (0..program.labels.len())
        .map(|i| resolve_label(&program.labels, LabelId::from(i)))
        .collect::<Result<_, _>>()
        .expect("validated");
    check_table("labels", program.labels.len())?;
    check_table("vertices", program.graph.len())?;
    check_table("units", program.header.units.len())?;

    let mut enc = Encoder {
        out: BitStream::new(),
        float_format: program.header.effective_float_format(),
        mode: options.float_mode,
        quantized: Vec::new(),
        labels: program.labels.len(),
        vertices: program.graph.len(),
        units: program.header.units.len(),
    };
    let mut sections = SectionSizes::default();

    enc.out.push_bits(u64::from(MAGIC), 16);
    enc.out.push_bits(u64::from(DIALECT_QRMAP), 4);
    enc.out.push_bits(u64::from(FORMAT_VERSION), 4);
    let has_header = !program.header.is_empty();
    enc.out.push_bit(has_header);
    enc.out.push_bit(!program.quick_choices.is_empty());
    enc.out.push_bit(!program.code.is_empty());
    enc.out.push_bit(false);

    let mut mark = enc.out.len();
    let mut measure = |enc: &Encoder, slot: &mut usize| {
        *slot = enc.out.len() - mark;
        mark = enc.out.len();
    };
    if has_header {
        enc.header(&program.header)?;
    }
    measure(&enc, &mut sections.header);
    enc.labels(&program.labels)?;
    measure(&enc, &mut sections.labels);
    enc.graph(&program.graph, &resolved)?;
    measure(&enc, &mut sections.graph);
    if !program.quick_choices.is_empty() {
        enc.out.push_varint(program.quick_choices.len() as u64);
        for qc in &program.quick_choices {
            enc.strategy(qc.strategy);
            enc.string(&qc.weight_attr)?;
            enc.condition(&qc.condition)?;
        }
    }
    measure(&enc, &mut sections.quick_choices);
    if !program.code.is_empty() {
        enc.code(program)?;
    }
    measure(&enc, &mut sections.code);

    Ok(Encoded {
        stream: enc.out,
        sections,
        quantized: enc.quantized,
    })
}

fn check_table(what: &'static str, count: usize) -> Result<(), EncodeError> {
    if u32::try_from(count).is_err() {
        return Err(EncodeError::TableTooLarge { what, count });
    }
    Ok(())
}

struct Encoder {
    out: BitStream,
    float_format: FloatFormat,
    mode: RoundingMode,
    quantized: Vec<Quantization>,
    labels: usize,
    vertices: usize,
    units: usize,
}

impl Encoder {
    fn string(&mut self, s: &str) -> Result<(), EncodeError> {
        if !s.is_ascii() {
            return Err(EncodeError::StringNotAscii7(s.to_string()));
        }
        self.out.push_bits(TEXT_ASCII7, 1);
        self.out.push_varint(s.len() as u64);
        for b in s.bytes() {
            self.out.push_bits(u64::from(b), 7);
        }
        Ok(())
    }

    fn float(&mut self, x: f64) -> Result<(), EncodeError> {
        let code = encode_minifloat(x, self.float_format, self.mode).map_err(|e| match e {
            MinifloatError::NotRepresentable { value, nearest, .. } => {
                EncodeError::FloatNotRepresentable { value, nearest }
            }
            other => EncodeError::Float(other),
        })?;
        if code.value != x {
            self.quantized.push(Quantization {
                original: x,
                encoded: code.value,
            });
        }
        self.out
            .push_bits(u64::from(code.bits), self.float_format.total_bits());
        Ok(())
    }

    /// Value whose type is known from its descriptor.
    fn value(&mut self, v: &AttributeValue) -> Result<(), EncodeError> {
        match v {
            AttributeValue::Int(i) => self.out.push_signed_varint(*i),
            AttributeValue::Float(x) => self.float(*x)?,
            AttributeValue::Str(s) => self.string(s)?,
        }
        Ok(())
    }

    fn kind(&mut self, kind: AttrKind) {
        self.out.push_bits(
            match kind {
                AttrKind::Int => 0,
                AttrKind::Float => 1,
                AttrKind::Str => 2,
            },
            2,
        );
    }

    /// Value preceded by its own type tag.
    fn tagged_value(&mut self, v: &AttributeValue) -> Result<(), EncodeError> {
        self.kind(v.kind());
        self.value(v)
    }

    fn cmp_op(&mut self, op: CmpOp) {
        let code = CmpOp::ALL.iter().position(|&o| o == op).unwrap_or(0);
        self.out.push_bits(code as u64, 3);
    }

    fn strategy(&mut self, strategy: SearchStrategy) {
        match strategy {
            SearchStrategy::ShortestPath => self.out.push_bits(0, 2),
        }
    }

    fn vertex_ref(&mut self, v: VertexId) {
        self.out.push_bits(u64::from(v.0), ref_width(self.vertices));
    }

    fn label_ref(&mut self, l: LabelId) {
        self.out.push_bits(u64::from(l.0), ref_width(self.labels));
    }

    fn header(&mut self, header: &HeaderConfig) -> Result<(), EncodeError> {
        let count = header.units.len()
            + usize::from(header.float_format.is_some())
            + usize::from(header.origin.is_some())
            + header.extra_commands.len();
        self.out.push_varint(count as u64);
        for unit in &header.units {
            self.out.push_bits(u64::from(command_id::DEFINE_UNIT), 4);
            self.string(&unit.symbol)?;
        }
        if let Some(f) = header.float_format {
            self.out.push_bits(u64::from(command_id::ENCODE_FLOAT), 4);
            self.out.push_bits(u64::from(f.exp_bits - 1), 5);
            self.out.push_bits(u64::from(f.mant_bits - 1), 5);
        }
        if let Some(origin) = header.origin {
            self.out.push_bits(u64::from(command_id::DEFINE_ORIGIN), 4);
            self.out.push_varint(u64::from(origin.0));
        }
        for cmd in &header.extra_commands {
            self.out.push_bits(u64::from(cmd.id), 4);
            self.out.push_varint(cmd.payload.len() as u64);
            for &b in &cmd.payload {
                self.out.push_bits(u64::from(b), 8);
            }
        }
        Ok(())
    }

    fn labels(&mut self, labels: &[LabelDef]) -> Result<(), EncodeError> {
        self.out.push_varint(labels.len() as u64);
        let unit_width = ref_width(self.units);
        for label in labels {
            self.string(&label.name)?;
            let parent = label.parent.map_or(0, |p| u64::from(p.0) + 1);
            self.out.push_bits(parent, ref_width(self.labels));
            self.out.push_varint(label.attributes.len() as u64);
            for attr in &label.attributes {
                self.kind(attr.kind);
                self.string(&attr.name)?;
                if attr.kind.is_numeric() {
                    self.out.push_bit(attr.unit.is_some());
                    if let Some(u) = attr.unit {
                        self.out.push_bits(u64::from(u.0), unit_width);
                    }
                }
                self.out.push_bit(attr.optional);
                self.out.push_bit(attr.default.is_some());
                if let Some(d) = &attr.default {
                    self.value(d)?;
                }
            }
        }
        Ok(())
    }

    fn assignment(
        &mut self,
        resolved: &[AttributeDescriptor],
        values: &AttributeValues,
    ) -> Result<(), EncodeError> {
        for (desc, v) in resolved.iter().zip(values) {
            if desc.optional {
                self.out.push_bit(v.is_some());
            }
        }
        for v in values.iter().flatten() {
            self.value(v)?;
        }
        Ok(())
    }

    fn graph(
        &mut self,
        graph: &Graph,
        resolved: &[Vec<AttributeDescriptor>],
    ) -> Result<(), EncodeError> {
        self.out.push_varint(graph.len() as u64);
        for vertex in &graph.vertices {
            self.label_ref(vertex.label);
            self.assignment(&resolved[vertex.label.index()], &vertex.values)?;
            self.out.push_varint(vertex.edges.len() as u64);
            for edge in &vertex.edges {
                self.vertex_ref(edge.destination);
                self.out.push_bit(edge.oriented);
                self.label_ref(edge.label);
                self.assignment(&resolved[edge.label.index()], &edge.values)?;
            }
        }
        Ok(())
    }

    fn condition(&mut self, cond: &Condition) -> Result<(), EncodeError> {
        self.out.push_varint(cond.tokens.len() as u64);
        for token in &cond.tokens {
            match token {
                ConditionToken::NodeIs(v) => {
                    self.out.push_bits(cond_op::NODE_IS, 3);
                    self.vertex_ref(*v);
                }
                ConditionToken::NodeLabelIs(l) => {
                    self.out.push_bits(cond_op::NODE_LABEL_IS, 3);
                    self.label_ref(*l);
                }
                ConditionToken::AttrCmp {
                    scope,
                    name,
                    op,
                    literal,
                } => {
                    self.out.push_bits(cond_op::ATTR_CMP, 3);
                    self.out.push_bit(*scope == Scope::Arc);
                    self.string(name)?;
                    self.cmp_op(*op);
                    self.tagged_value(literal)?;
                }
                ConditionToken::And => self.out.push_bits(cond_op::AND, 3),
                ConditionToken::Or => self.out.push_bits(cond_op::OR, 3),
                ConditionToken::Not => self.out.push_bits(cond_op::NOT, 3),
            }
        }
        Ok(())
    }

    fn code(&mut self, program: &Program) -> Result<(), EncodeError> {
        let code = &program.code;
        self.out.push_varint(code.len() as u64);
        let target_width = ref_width(code.len());
        let quick_width = ref_width(program.quick_choices.len());
        for ins in code {
            match ins {
                Instruction::Input { prompt } => {
                    self.out.push_bits(opcode::INPUT, 4);
                    self.string(prompt)?;
                }
                Instruction::InputNumeric { prompt } => {
                    self.out.push_bits(opcode::INPUT_NUMERIC, 4);
                    self.string(prompt)?;
                }
                Instruction::If { pattern, target } => {
                    self.out.push_bits(opcode::IF, 4);
                    self.string(pattern)?;
                    self.out.push_bits(*target as u64, target_width);
                }
                Instruction::IfCmp {
                    op,
                    literal,
                    encoding,
                    target,
                } => {
                    self.out.push_bits(opcode::IF_CMP, 4);
                    self.cmp_op(*op);
                    self.out.push_varint(u64::from(encoding.0));
                    self.out.push_varint(u64::from(encoding.1));
                    self.tagged_value(literal)?;
                    self.out.push_bits(*target as u64, target_width);
                }
                Instruction::Goto { target } => {
                    self.out.push_bits(opcode::GOTO, 4);
                    self.out.push_bits(*target as u64, target_width);
                }
                Instruction::Push(cond) => {
                    self.out.push_bits(opcode::PUSH, 4);
                    self.condition(cond)?;
                }
                Instruction::Print(text) => {
                    self.out.push_bits(opcode::PRINT, 4);
                    self.string(text)?;
                }
                Instruction::SearchQuick(q) => {
                    self.out.push_bits(opcode::SEARCH_QUICK, 4);
                    self.out.push_bits(*q as u64, quick_width);
                }
                Instruction::SearchGuided {
                    strategy,
                    weight_attr,
                } => {
                    self.out.push_bits(opcode::SEARCH_GUIDED, 4);
                    self.strategy(*strategy);
                    self.string(weight_attr)?;
                }
            }
        }
        Ok(())
    }
}

/// Decodes a stream; zero padding up to the next byte boundary is ignored.
pub fn decode_program(stream: &BitStream) -> Result<Program, DecodeError> {
    decode_with_sections(stream).map(|(p, _)| p)
}

pub fn decode_bytes(bytes: &[u8]) -> Result<Program, DecodeError> {
    decode_program(&BitStream::from_bytes(bytes.to_vec()))
}

/// Decodes and reports how many bits each section took.
pub fn decode_with_sections(stream: &BitStream) -> Result<(Program, SectionSizes), DecodeError> {
    let mut d = Decoder {
        r: stream.reader(),
        float_format: FloatFormat::DEFAULT,
        labels: 0,
        vertices: 0,
        units: 0,
    };
    let magic = d.r.read_bits(16)? as u16;
    if magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    let dialect = d.r.read_bits(4)? as u8;
    if dialect != DIALECT_QRMAP {
        return Err(DecodeError::UnsupportedDialect(dialect));
    }
    let version = d.r.read_bits(4)? as u8;
    if version != FORMAT_VERSION {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    let has_header = d.r.read_bit()?;
    let has_quick = d.r.read_bit()?;
    let has_code = d.r.read_bit()?;
    if d.r.read_bit()? {
        return Err(DecodeError::UnknownSectionTag);
    }

    let mut sections = SectionSizes::default();
    let mut mark = d.r.position();
    let mut measure = |d: &Decoder, slot: &mut usize| {
        *slot = d.r.position() - mark;
        mark = d.r.position();
    };

    let header = if has_header {
        d.header()?
    } else {
        HeaderConfig::default()
    };
    d.float_format = header.effective_float_format();
    d.units = header.units.len();
    measure(&d, &mut sections.header);

    let labels = d.labels()?;
    let resolved: Vec<Vec<AttributeDescriptor>> = (0..labels.len())
        .map(|i| resolve_label(&labels, LabelId::from(i)))
        .collect::<Result<_, _>>()?;
    measure(&d, &mut sections.labels);

    let graph = d.graph(&resolved)?;
    measure(&d, &mut sections.graph);

    let mut quick_choices = Vec::new();
    if has_quick {
        let count = d.count()?;
        for _ in 0..count {
            let strategy = d.strategy()?;
            let weight_attr = d.string()?;
            let condition = d.condition()?;
            quick_choices.push(QuickChoice {
                strategy,
                weight_attr,
                condition,
            });
        }
    }
    measure(&d, &mut sections.quick_choices);

    let code = if has_code {
        d.code(quick_choices.len())?
    } else {
        Vec::new()
    };
    measure(&d, &mut sections.code);

    let rest = d.r.remaining();
    if rest >= 8 || d.r.read_bits(rest as u32)? != 0 {
        return Err(DecodeError::TrailingData { bits: rest });
    }

    let program = Program {
        header,
        labels,
        graph,
        quick_choices,
        code,
    };
    let report = validate(&program);
    if !report.is_valid() {
        return Err(DecodeError::Invalid(report));
    }
    Ok((program, sections))
}

struct Decoder<'a> {
    r: BitReader<'a>,
    float_format: FloatFormat,
    labels: usize,
    vertices: usize,
    units: usize,
}

impl Decoder<'_> {
    /// Element count; every element takes at least one bit, so a count larger
    /// than what is left cannot be genuine.
    fn count(&mut self) -> Result<usize, DecodeError> {
        let n = self.r.read_varint()?;
        match usize::try_from(n) {
            Ok(n) if n <= self.r.remaining() => Ok(n),
            _ => Err(DecodeError::TruncatedStream {
                at_bit: self.r.position(),
            }),
        }
    }

    fn string(&mut self) -> Result<String, DecodeError> {
        let tag = self.r.read_bits(1)?;
        if tag != TEXT_ASCII7 {
            return Err(DecodeError::UnsupportedTextEncoding(tag as u8));
        }
        let len = self.count()?;
        if len.saturating_mul(7) > self.r.remaining() {
            return Err(DecodeError::TruncatedStream {
                at_bit: self.r.position(),
            });
        }
        (0..len)
            .map(|_| Ok(char::from(self.r.read_bits(7)? as u8)))
            .collect()
    }

    fn reference(&mut self, count: usize, what: &'static str) -> Result<u32, DecodeError> {
        let v = self.r.read_bits(ref_width(count))?;
        if v as usize >= count {
            return Err(DecodeError::InvalidReference {
                what,
                value: v,
                count,
            });
        }
        Ok(v as u32)
    }

    fn kind(&mut self) -> Result<AttrKind, DecodeError> {
        match self.r.read_bits(2)? {
            0 => Ok(AttrKind::Int),
            1 => Ok(AttrKind::Float),
            2 => Ok(AttrKind::Str),
            other => Err(DecodeError::UnknownValueKind(other as u8)),
        }
    }

    fn value(&mut self, kind: AttrKind) -> Result<AttributeValue, DecodeError> {
        Ok(match kind {
            AttrKind::Int => AttributeValue::Int(self.r.read_signed_varint()?),
            AttrKind::Float => {
                let bits = self.r.read_bits(self.float_format.total_bits())? as u32;
                AttributeValue::Float(decode_minifloat(bits, self.float_format)?)
            }
            AttrKind::Str => AttributeValue::Str(self.string()?),
        })
    }

    fn tagged_value(&mut self) -> Result<AttributeValue, DecodeError> {
        let kind = self.kind()?;
        self.value(kind)
    }

    fn cmp_op(&mut self) -> Result<CmpOp, DecodeError> {
        let code = self.r.read_bits(3)? as usize;
        CmpOp::ALL
            .get(code)
            .copied()
            .ok_or(DecodeError::UnknownOpcode(code as u8))
    }

    fn strategy(&mut self) -> Result<SearchStrategy, DecodeError> {
        match self.r.read_bits(2)? {
            0 => Ok(SearchStrategy::ShortestPath),
            other => Err(DecodeError::UnknownStrategy(other as u8)),
        }
    }

    fn header(&mut self) -> Result<HeaderConfig, DecodeError> {
        let mut header = HeaderConfig::default();
        let count = self.count()?;
        for _ in 0..count {
            let id = self.r.read_bits(4)? as u8;
            match id {
                command_id::DEFINE_UNIT => header.units.push(MeasurementUnit {
                    symbol: self.string()?,
                }),
                command_id::ENCODE_FLOAT => {
                    let exp_bits = self.r.read_bits(5)? as u8 + 1;
                    let mant_bits = self.r.read_bits(5)? as u8 + 1;
                    let format = FloatFormat::new(exp_bits, mant_bits);
                    if header.float_format.replace(format).is_some() {
                        return Err(DecodeError::DuplicateHeaderCommand(id));
                    }
                    if !format.is_valid() {
                        return Err(MinifloatError::InvalidFormat(format).into());
                    }
                }
                command_id::DEFINE_ORIGIN => {
                    let v = u32::try_from(self.r.read_varint()?).map_err(|_| {
                        DecodeError::InvalidReference {
                            what: "origin vertex",
                            value: u64::MAX,
                            count: 0,
                        }
                    })?;
                    if header.origin.replace(VertexId(v)).is_some() {
                        return Err(DecodeError::DuplicateHeaderCommand(id));
                    }
                }
                command_id::FIRST_EXTRA..=command_id::LAST_EXTRA => {
                    let len = self.count()?;
                    let payload = (0..len)
                        .map(|_| Ok(self.r.read_bits(8)? as u8))
                        .collect::<Result<_, DecodeError>>()?;
                    header.extra_commands.push(ExtraCommand { id, payload });
                }
                other => return Err(DecodeError::UnknownHeaderCommand(other)),
            }
        }
        Ok(header)
    }

    fn labels(&mut self) -> Result<Vec<LabelDef>, DecodeError> {
        let count = self.count()?;
        self.labels = count;
        let unit_width = ref_width(self.units);
        let mut labels = Vec::new();
        for index in 0..count {
            let name = self.string()?;
            let parent = match self.r.read_bits(ref_width(count))? {
                0 => None,
                p if (p as usize) <= index => Some(LabelId(p as u32 - 1)),
                p => {
                    return Err(DecodeError::InvalidReference {
                        what: "parent label",
                        value: p,
                        count: index,
                    })
                }
            };
            let n_attrs = self.count()?;
            let mut attributes = Vec::new();
            for _ in 0..n_attrs {
                let kind = self.kind()?;
                let mut desc = AttributeDescriptor::new(self.string()?, kind);
                if kind.is_numeric() && self.r.read_bit()? {
                    let u = self.r.read_bits(unit_width)?;
                    if u as usize >= self.units {
                        return Err(DecodeError::InvalidReference {
                            what: "unit",
                            value: u,
                            count: self.units,
                        });
                    }
                    desc.unit = Some(UnitId(u as u32));
                }
                desc.optional = self.r.read_bit()?;
                if self.r.read_bit()? {
                    desc.default = Some(self.value(kind)?);
                }
                attributes.push(desc);
            }
            labels.push(LabelDef {
                name,
                parent,
                attributes,
            });
        }
        Ok(labels)
    }

    fn assignment(
        &mut self,
        resolved: &[AttributeDescriptor],
    ) -> Result<AttributeValues, DecodeError> {
        let mut present = Vec::with_capacity(resolved.len());
        for desc in resolved {
            present.push(!desc.optional || self.r.read_bit()?);
        }
        resolved
            .iter()
            .zip(present)
            .map(|(desc, p)| {
                if p {
                    self.value(desc.kind).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect()
    }

    fn graph(&mut self, resolved: &[Vec<AttributeDescriptor>]) -> Result<Graph, DecodeError> {
        let count = self.count()?;
        self.vertices = count;
        let mut vertices = Vec::new();
        for _ in 0..count {
            let label = LabelId(self.reference(self.labels, "label")?);
            let values = self.assignment(&resolved[label.index()])?;
            let n_edges = self.count()?;
            let mut edges = Vec::new();
            for _ in 0..n_edges {
                let destination = VertexId(self.reference(self.vertices, "vertex")?);
                let oriented = self.r.read_bit()?;
                let label = LabelId(self.reference(self.labels, "label")?);
                let values = self.assignment(&resolved[label.index()])?;
                edges.push(Edge {
                    destination,
                    oriented,
                    label,
                    values,
                });
            }
            vertices.push(Vertex {
                label,
                values,
                edges,
            });
        }
        Ok(Graph { vertices })
    }

    fn condition(&mut self) -> Result<Condition, DecodeError> {
        let count = self.count()?;
        let mut tokens = Vec::new();
        for _ in 0..count {
            let token = match self.r.read_bits(3)? {
                cond_op::NODE_IS => {
                    ConditionToken::NodeIs(VertexId(self.reference(self.vertices, "vertex")?))
                }
                cond_op::NODE_LABEL_IS => {
                    ConditionToken::NodeLabelIs(LabelId(self.reference(self.labels, "label")?))
                }
                cond_op::ATTR_CMP => {
                    let scope = if self.r.read_bit()? {
                        Scope::Arc
                    } else {
                        Scope::Node
                    };
                    let name = self.string()?;
                    let op = self.cmp_op()?;
                    let literal = self.tagged_value()?;
                    ConditionToken::AttrCmp {
                        scope,
                        name,
                        op,
                        literal,
                    }
                }
                cond_op::AND => ConditionToken::And,
                cond_op::OR => ConditionToken::Or,
                cond_op::NOT => ConditionToken::Not,
                other => return Err(DecodeError::UnknownOpcode(other as u8)),
            };
            tokens.push(token);
        }
        Ok(Condition::new(tokens))
    }

    fn code(&mut self, quick_choices: usize) -> Result<Vec<Instruction>, DecodeError> {
        let count = self.count()?;
        let target_width = ref_width(count);
        let quick_width = ref_width(quick_choices);
        let mut code = Vec::new();
        for _ in 0..count {
            let ins = match self.r.read_bits(4)? {
                opcode::INPUT => Instruction::Input {
                    prompt: self.string()?,
                },
                opcode::INPUT_NUMERIC => Instruction::InputNumeric {
                    prompt: self.string()?,
                },
                opcode::IF => Instruction::If {
                    pattern: self.string()?,
                    target: self.r.read_bits(target_width)? as usize,
                },
                opcode::IF_CMP => {
                    let op = self.cmp_op()?;
                    let a = self.small_varint()?;
                    let b = self.small_varint()?;
                    let literal = self.tagged_value()?;
                    Instruction::IfCmp {
                        op,
                        literal,
                        encoding: LiteralEncoding(a, b),
                        target: self.r.read_bits(target_width)? as usize,
                    }
                }
                opcode::GOTO => Instruction::Goto {
                    target: self.r.read_bits(target_width)? as usize,
                },
                opcode::PUSH => Instruction::Push(self.condition()?),
                opcode::PRINT => Instruction::Print(self.string()?),
                opcode::SEARCH_QUICK => {
                    Instruction::SearchQuick(self.r.read_bits(quick_width)? as usize)
                }
                opcode::SEARCH_GUIDED => Instruction::SearchGuided {
                    strategy: self.strategy()?,
                    weight_attr: self.string()?,
                },
                other => return Err(DecodeError::UnknownOpcode(other as u8)),
            };
            code.push(ins);
        }
        Ok(code)
    }

    fn small_varint(&mut self) -> Result<u32, DecodeError> {
        let at_bit = self.r.position();
        u32::try_from(self.r.read_varint()?).map_err(|_| DecodeError::VarintOverflow { at_bit })
    }
}
