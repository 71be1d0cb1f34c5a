use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::label::{lookup_attribute, resolve_label, AttributeLookup, LabelError};
use super::{
    command_id, AttrKind, AttributeDescriptor, AttributeValue, Condition, ConditionToken,
    Instruction, LabelId, Program, VertexId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Section {
    Header,
    Labels,
    Graph,
    QuickChoices,
    Code,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::Header => "header",
            Section::Labels => "label",
            Section::Graph => "graph",
            Section::QuickChoices => "quick choice",
            Section::Code => "code",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum DiagnosticKind {
    InvalidFloatFormat,
    EmptyUnitSymbol,
    NonAsciiString,
    NonFiniteFloat,
    InvalidExtraCommand,
    EmptyLabelTable,
    UnknownLabel,
    InvalidParent,
    InheritanceCycle,
    DuplicateAttributeName,
    UnknownUnit,
    UnitOnString,
    DefaultTypeMismatch,
    EmptyGraph,
    AttributeCountMismatch,
    TypeMismatch,
    MissingMandatoryAttribute,
    DanglingVertexRef,
    NonNumericWeight,
    NegativeWeight,
    MalformedCondition,
    DanglingJump,
    UnknownQuickChoice,
    NonNumericLiteral,
    InputFreeCycle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub section: Section,
    /// 0-based position of the offending item within its section.
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{level} [{:?}] in {} section: {}",
            self.kind, self.section, self.message
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Warning)
    }

    pub fn has(&self, kind: DiagnosticKind) -> bool {
        self.diagnostics.iter().any(|d| d.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

struct Checker<'p> {
    program: &'p Program,
    /// `None` where the label itself fails to resolve.
    resolved: Vec<Option<Vec<AttributeDescriptor>>>,
    out: Vec<Diagnostic>,
}

/// Checks every cross-reference and value constraint of a program. An empty
/// error list means routing and the VM will not hit a dangling reference.
pub fn validate(program: &Program) -> ValidationReport {
    let resolved = (0..program.labels.len())
        .map(|i| resolve_label(&program.labels, LabelId::from(i)).ok())
        .collect();
    let mut checker = Checker {
        program,
        resolved,
        out: Vec::new(),
    };
    checker.header();
    checker.labels();
    checker.graph();
    checker.weights();
    checker.quick_choices();
    checker.code();
    ValidationReport {
        diagnostics: checker.out,
    }
}

impl Checker<'_> {
    fn push(
        &mut self,
        kind: DiagnosticKind,
        section: Section,
        index: Option<usize>,
        message: String,
    ) {
        self.out.push(Diagnostic {
            severity: Severity::Error,
            kind,
            section,
            index,
            message,
        });
    }

    fn text(&mut self, s: &str, section: Section, index: Option<usize>, what: &str) {
        if !s.is_ascii() {
            self.push(
                DiagnosticKind::NonAsciiString,
                section,
                index,
                format!("{what} {s:?} is not 7-bit ASCII"),
            );
        }
    }

    fn vertex_ref(&mut self, v: VertexId, section: Section, index: Option<usize>, what: &str) {
        if v.index() >= self.program.graph.len() {
            self.push(
                DiagnosticKind::DanglingVertexRef,
                section,
                index,
                format!(
                    "{what} refers to vertex {v}, graph has {}",
                    self.program.graph.len()
                ),
            );
        }
    }

    fn value(&mut self, v: &AttributeValue, section: Section, index: Option<usize>, what: &str) {
        match v {
            AttributeValue::Str(s) => self.text(s, section, index, what),
            AttributeValue::Float(x) if !x.is_finite() => self.push(
                DiagnosticKind::NonFiniteFloat,
                section,
                index,
                format!("{what} is not a finite number"),
            ),
            _ => {}
        }
    }

    fn header(&mut self) {
        let header = &self.program.header;
        if let Some(fmt) = header.float_format {
            if !fmt.is_valid() {
                self.push(
                    DiagnosticKind::InvalidFloatFormat,
                    Section::Header,
                    None,
                    format!(
                        "ENCODE_FLOAT {} {} outside 1..=11 exponent bits, >=1 mantissa bits, <=32 bits total",
                        fmt.exp_bits, fmt.mant_bits
                    ),
                );
            }
        }
        for (i, unit) in header.units.iter().enumerate() {
            if unit.symbol.is_empty() {
                self.push(
                    DiagnosticKind::EmptyUnitSymbol,
                    Section::Header,
                    Some(i),
                    format!("unit {i} has an empty symbol"),
                );
            }
            self.text(&unit.symbol, Section::Header, Some(i), "unit symbol");
        }
        if let Some(origin) = header.origin {
            self.vertex_ref(origin, Section::Header, None, "DEFINE_ORIGIN");
        }
        for (i, cmd) in header.extra_commands.iter().enumerate() {
            if !(command_id::FIRST_EXTRA..=command_id::LAST_EXTRA).contains(&cmd.id) {
                self.push(
                    DiagnosticKind::InvalidExtraCommand,
                    Section::Header,
                    Some(i),
                    format!(
                        "header command id {} outside the opaque range {}..={}",
                        cmd.id,
                        command_id::FIRST_EXTRA,
                        command_id::LAST_EXTRA
                    ),
                );
            }
        }
    }

    fn labels(&mut self) {
        let program = self.program;
        if program.labels.is_empty() {
            self.push(
                DiagnosticKind::EmptyLabelTable,
                Section::Labels,
                None,
                "the label section must define at least one label".into(),
            );
        }
        for (i, label) in program.labels.iter().enumerate() {
            let id = LabelId::from(i);
            self.text(&label.name, Section::Labels, Some(i), "label name");
            if let Some(parent) = label.parent {
                if parent.index() >= i {
                    self.push(
                        DiagnosticKind::InvalidParent,
                        Section::Labels,
                        Some(i),
                        format!(
                            "label {id} extends label {parent}, which is not defined before it"
                        ),
                    );
                }
            }
            match resolve_label(&program.labels, id) {
                Err(LabelError::InheritanceCycle(_)) => self.push(
                    DiagnosticKind::InheritanceCycle,
                    Section::Labels,
                    Some(i),
                    format!("label {id} inherits from itself"),
                ),
                Err(LabelError::DuplicateAttributeName { name, .. }) => self.push(
                    DiagnosticKind::DuplicateAttributeName,
                    Section::Labels,
                    Some(i),
                    format!("label {id} resolves attribute {name:?} twice"),
                ),
                Err(LabelError::UnknownLabel(missing)) => self.push(
                    DiagnosticKind::UnknownLabel,
                    Section::Labels,
                    Some(i),
                    format!("label {id} extends unknown label {missing}"),
                ),
                Ok(_) => {}
            }
            for attr in &label.attributes {
                self.text(&attr.name, Section::Labels, Some(i), "attribute name");
                if let Some(unit) = attr.unit {
                    if attr.kind == AttrKind::Str {
                        self.push(
                            DiagnosticKind::UnitOnString,
                            Section::Labels,
                            Some(i),
                            format!("STRING attribute {:?} cannot carry a unit", attr.name),
                        );
                    }
                    if unit.index() >= program.header.units.len() {
                        self.push(
                            DiagnosticKind::UnknownUnit,
                            Section::Labels,
                            Some(i),
                            format!(
                                "attribute {:?} uses unit {}, header defines {}",
                                attr.name,
                                unit.0,
                                program.header.units.len()
                            ),
                        );
                    }
                }
                if let Some(default) = &attr.default {
                    if default.kind() != attr.kind {
                        self.push(
                            DiagnosticKind::DefaultTypeMismatch,
                            Section::Labels,
                            Some(i),
                            format!(
                                "default of {:?} is {}, attribute is {}",
                                attr.name,
                                default.kind(),
                                attr.kind
                            ),
                        );
                    }
                    self.value(default, Section::Labels, Some(i), "default value");
                }
            }
        }
    }

    fn assignment(
        &mut self,
        label: LabelId,
        values: &[Option<AttributeValue>],
        index: usize,
        owner: &str,
    ) {
        if label.index() >= self.program.labels.len() {
            self.push(
                DiagnosticKind::UnknownLabel,
                Section::Graph,
                Some(index),
                format!("{owner} uses unknown label {label}"),
            );
            return;
        }
        let Some(resolved) = self.resolved[label.index()].clone() else {
            // already reported in the label section
            return;
        };
        if resolved.len() != values.len() {
            self.push(
                DiagnosticKind::AttributeCountMismatch,
                Section::Graph,
                Some(index),
                format!(
                    "{owner} has {} attribute slots, label {label} resolves to {}",
                    values.len(),
                    resolved.len()
                ),
            );
            return;
        }
        for (desc, value) in resolved.iter().zip(values) {
            match value {
                None if !desc.optional => self.push(
                    DiagnosticKind::MissingMandatoryAttribute,
                    Section::Graph,
                    Some(index),
                    format!("{owner} is missing mandatory attribute {:?}", desc.name),
                ),
                None => {}
                Some(v) => {
                    if v.kind() != desc.kind {
                        self.push(
                            DiagnosticKind::TypeMismatch,
                            Section::Graph,
                            Some(index),
                            format!(
                                "{owner} gives {} for {} attribute {:?}",
                                v.kind(),
                                desc.kind,
                                desc.name
                            ),
                        );
                    }
                    self.value(v, Section::Graph, Some(index), "attribute value");
                }
            }
        }
    }

    fn graph(&mut self) {
        let program = self.program;
        if program.graph.is_empty() {
            self.push(
                DiagnosticKind::EmptyGraph,
                Section::Graph,
                None,
                "the graph section must define at least one vertex".into(),
            );
        }
        for (i, vertex) in program.graph.vertices.iter().enumerate() {
            let vid = VertexId::from(i);
            self.assignment(vertex.label, &vertex.values, i, &format!("vertex {vid}"));
            for (j, edge) in vertex.edges.iter().enumerate() {
                let owner = format!("edge {} of vertex {vid}", j + 1);
                self.vertex_ref(edge.destination, Section::Graph, Some(i), &owner);
                self.assignment(edge.label, &edge.values, i, &owner);
            }
        }
    }

    /// Attributes used as search weights must be numeric and non-negative.
    fn weights(&mut self) {
        let program = self.program;
        let used: BTreeSet<&str> = program
            .quick_choices
            .iter()
            .map(|qc| qc.weight_attr.as_str())
            .chain(program.code.iter().filter_map(|ins| match ins {
                Instruction::SearchGuided { weight_attr, .. } => Some(weight_attr.as_str()),
                _ => None,
            }))
            .collect();
        let table = std::mem::take(&mut self.resolved);
        for (i, vertex) in program.graph.vertices.iter().enumerate() {
            for (j, edge) in vertex.edges.iter().enumerate() {
                let Some(Some(resolved)) = table.get(edge.label.index()) else {
                    continue;
                };
                for name in &used {
                    let found = lookup_attribute(resolved, &edge.values, name);
                    let (desc, value) = match found {
                        AttributeLookup::Present(d, v) => (d, Some(v)),
                        AttributeLookup::Absent(d) => (d, None),
                        AttributeLookup::Undefined => continue,
                    };
                    let owner = format!("edge {} of vertex {}", j + 1, VertexId::from(i));
                    if !desc.kind.is_numeric() {
                        self.push(
                            DiagnosticKind::NonNumericWeight,
                            Section::Graph,
                            Some(i),
                            format!("search weight {name:?} on {owner} is {}", desc.kind),
                        );
                    } else if let Some(w) = value.and_then(AttributeValue::as_f64) {
                        if w < 0.0 {
                            self.push(
                                DiagnosticKind::NegativeWeight,
                                Section::Graph,
                                Some(i),
                                format!("search weight {name:?} on {owner} is negative ({w})"),
                            );
                        }
                    }
                }
            }
        }
        self.resolved = table;
    }

    fn condition(&mut self, cond: &Condition, section: Section, index: usize) {
        if !cond.is_well_formed() {
            self.push(
                DiagnosticKind::MalformedCondition,
                section,
                Some(index),
                "condition is not a well-formed RPN expression".into(),
            );
        }
        for token in &cond.tokens {
            match token {
                ConditionToken::NodeIs(v) => self.vertex_ref(*v, section, Some(index), "condition"),
                ConditionToken::NodeLabelIs(l) => {
                    if l.index() >= self.program.labels.len() {
                        self.push(
                            DiagnosticKind::UnknownLabel,
                            section,
                            Some(index),
                            format!("condition refers to unknown label {l}"),
                        );
                    }
                }
                ConditionToken::AttrCmp {
                    name, op, literal, ..
                } => {
                    self.text(name, section, Some(index), "attribute name");
                    self.value(literal, section, Some(index), "condition literal");
                    if literal.kind() == AttrKind::Str && !op.is_equality() {
                        self.push(
                            DiagnosticKind::TypeMismatch,
                            section,
                            Some(index),
                            format!("string attribute {name:?} compared with {}", op.symbol()),
                        );
                    }
                }
                ConditionToken::And | ConditionToken::Or | ConditionToken::Not => {}
            }
        }
    }

    fn quick_choices(&mut self) {
        for (i, qc) in self.program.quick_choices.iter().enumerate() {
            self.text(
                &qc.weight_attr,
                Section::QuickChoices,
                Some(i),
                "weight attribute",
            );
            self.condition(&qc.condition, Section::QuickChoices, i);
        }
    }

    fn code(&mut self) {
        let program = self.program;
        let len = program.code.len();
        for (i, ins) in program.code.iter().enumerate() {
            if let Some(target) = ins.jump_target() {
                if target > len {
                    self.push(
                        DiagnosticKind::DanglingJump,
                        Section::Code,
                        Some(i),
                        format!(
                            "instruction ({i}) jumps to ({target}), code has {len} instructions"
                        ),
                    );
                }
            }
            match ins {
                Instruction::Input { prompt } | Instruction::InputNumeric { prompt } => {
                    self.text(prompt, Section::Code, Some(i), "prompt")
                }
                Instruction::If { pattern, .. } => {
                    self.text(pattern, Section::Code, Some(i), "pattern")
                }
                Instruction::Print(text) => self.text(text, Section::Code, Some(i), "text"),
                Instruction::IfCmp { literal, .. } => {
                    if !literal.kind().is_numeric() {
                        self.push(
                            DiagnosticKind::NonNumericLiteral,
                            Section::Code,
                            Some(i),
                            format!("IFC at ({i}) compares against a {} literal", literal.kind()),
                        );
                    }
                    self.value(literal, Section::Code, Some(i), "IFC literal");
                }
                Instruction::Push(cond) => self.condition(cond, Section::Code, i),
                Instruction::SearchQuick(q) => {
                    if *q >= program.quick_choices.len() {
                        self.push(
                            DiagnosticKind::UnknownQuickChoice,
                            Section::Code,
                            Some(i),
                            format!(
                                "SEARCH QUICK_CHOICE {q}, program defines {}",
                                program.quick_choices.len()
                            ),
                        );
                    }
                }
                Instruction::SearchGuided { weight_attr, .. } => {
                    self.text(weight_attr, Section::Code, Some(i), "weight attribute")
                }
                Instruction::Goto { .. } => {}
            }
        }
        if let Some(at) = input_free_cycle(&program.code) {
            self.out.push(Diagnostic {
                severity: Severity::Warning,
                kind: DiagnosticKind::InputFreeCycle,
                section: Section::Code,
                index: Some(at),
                message: format!("instruction ({at}) is on a loop that never asks for input"),
            });
        }
    }
}

/// Returns an instruction lying on a control-flow cycle that contains no
/// input instruction, if there is one.
fn input_free_cycle(code: &[Instruction]) -> Option<usize> {
    let len = code.len();
    let successors = |i: usize| -> Vec<usize> {
        let ins = &code[i];
        if ins.is_input() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(2);
        match ins {
            Instruction::Goto { target } => next.push(*target),
            Instruction::If { target, .. } | Instruction::IfCmp { target, .. } => {
                next.push(i + 1);
                next.push(*target);
            }
            _ => next.push(i + 1),
        }
        next.retain(|&t| t < len && !code[t].is_input());
        next
    };

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; len];
    for start in 0..len {
        if mark[start] != Mark::New || code[start].is_input() {
            continue;
        }
        let mut stack = vec![(start, successors(start), 0usize)];
        mark[start] = Mark::Active;
        while let Some((node, succ, pos)) = stack.last_mut() {
            if let Some(&next) = succ.get(*pos) {
                *pos += 1;
                match mark[next] {
                    Mark::Active => return Some(next),
                    Mark::New => {
                        mark[next] = Mark::Active;
                        let s = successors(next);
                        stack.push((next, s, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[*node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}
