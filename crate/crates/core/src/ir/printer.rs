use std::fmt::Write;

use crate::model::{
    resolve_all, AttrKind, AttributeDescriptor, AttributeValue, Condition, ConditionToken,
    Instruction, Program, Scope,
};

/// Renders a program as canonical IR text. Empty optional sections are left
/// out, instruction indices are regenerated and strings are escaped so that
/// the output parses back to an equal program.
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    let header = &program.header;
    if !header.is_empty() {
        out.push_str("/* header section */\nQRMAP_HEADER");
        for unit in &header.units {
            let _ = write!(out, "; DEFINE_UNIT VALUE {}", ascii7(&unit.symbol));
        }
        if let Some(f) = header.float_format {
            let _ = write!(out, "; ENCODE_FLOAT {} {}", f.exp_bits, f.mant_bits);
        }
        if let Some(origin) = header.origin {
            let _ = write!(out, "; DEFINE_ORIGIN {origin}");
        }
        for cmd in &header.extra_commands {
            let hex: String = cmd.payload.iter().map(|b| format!("{b:02x}")).collect();
            let _ = write!(out, "; HEADER_COMMAND {} HEX \"{hex}\"", cmd.id);
        }
        out.push_str("\n\n");
    }

    out.push_str("/* label section */\n");
    for label in &program.labels {
        let _ = write!(out, "DEFINE_LABEL NAME {}", ascii7(&label.name));
        if let Some(parent) = label.parent {
            let _ = write!(out, " EXTENSION {parent}");
        }
        for attr in &label.attributes {
            descriptor(&mut out, attr);
        }
        out.push('\n');
    }

    // Labels that fail to resolve make the program invalid; print what we can.
    let resolved = resolve_all(&program.labels).unwrap_or_default();
    let optional_count = |label: crate::model::LabelId| {
        resolved
            .get(label.index())
            .map_or(0, |attrs| attrs.iter().filter(|d| d.optional).count())
    };
    out.push_str("\n/* graph section */\n");
    for vertex in &program.graph.vertices {
        let _ = write!(out, "LABEL {}", vertex.label);
        assignment(
            &mut out,
            optional_count(vertex.label),
            &resolved,
            vertex.label,
            &vertex.values,
        );
        out.push('\n');
        for edge in &vertex.edges {
            let _ = write!(
                out,
                "    DESTINATION_NODE {} {} LABEL {}",
                edge.destination,
                if edge.oriented {
                    "ORIENTED"
                } else {
                    "NO_ORIENTED"
                },
                edge.label
            );
            assignment(
                &mut out,
                optional_count(edge.label),
                &resolved,
                edge.label,
                &edge.values,
            );
            out.push('\n');
        }
    }

    if !program.quick_choices.is_empty() {
        out.push_str("\n/* quick choices section */\nDEFINE_QUICK_CHOICES\n");
        for qc in &program.quick_choices {
            let _ = write!(
                out,
                "    QUICK_CHOICE {} {}",
                qc.strategy,
                ascii7(&qc.weight_attr)
            );
            condition(&mut out, &qc.condition);
            out.push('\n');
        }
    }

    if !program.code.is_empty() {
        out.push_str("\n/* code section */\n");
        for (i, ins) in program.code.iter().enumerate() {
            let _ = write!(out, "({i}) ");
            instruction(&mut out, ins);
            out.push('\n');
        }
    }
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

fn ascii7(s: &str) -> String {
    format!("ASCII7 {}", quote(s))
}

fn value(out: &mut String, v: &AttributeValue) {
    let _ = match v {
        AttributeValue::Int(i) => write!(out, " INT {i}"),
        AttributeValue::Float(x) => write!(out, " FLOAT {x:?}"),
        AttributeValue::Str(s) => write!(out, " STRING {}", ascii7(s)),
    };
}

fn descriptor(out: &mut String, attr: &AttributeDescriptor) {
    let kind = match attr.kind {
        AttrKind::Int => "INT",
        AttrKind::Float => "FLOAT",
        AttrKind::Str => "STRING",
    };
    let _ = write!(out, " {kind} {}", ascii7(&attr.name));
    if let Some(unit) = attr.unit {
        let _ = write!(out, " MEASUREMENT_UNIT {}", unit.0);
    }
    out.push_str(if attr.optional {
        " OPTIONAL"
    } else {
        " NO_OPTIONAL"
    });
    match &attr.default {
        Some(d) => {
            out.push_str(" DEFAULT");
            value(out, d);
        }
        None if attr.optional => out.push_str(" NO_DEFAULT"),
        None => {}
    }
}

fn assignment(
    out: &mut String,
    optional_count: usize,
    resolved: &[Vec<AttributeDescriptor>],
    label: crate::model::LabelId,
    values: &[Option<AttributeValue>],
) {
    out.push_str(" ATTRIBUTES_FLAGS");
    match resolved.get(label.index()) {
        Some(attrs) if optional_count > 0 => {
            for (desc, v) in attrs.iter().zip(values) {
                if desc.optional {
                    out.push_str(if v.is_some() { " TRUE" } else { " FALSE" });
                }
            }
        }
        _ => out.push_str(" FALSE"),
    }
    out.push_str(" ATTRIBUTES_VALUES");
    for v in values.iter().flatten() {
        value(out, v);
    }
}

fn condition(out: &mut String, cond: &Condition) {
    for token in &cond.tokens {
        let _ = match token {
            ConditionToken::NodeIs(v) => write!(out, " ID_NE NODE DESTINATION {v}"),
            ConditionToken::NodeLabelIs(l) => write!(out, " LABEL_NE NODE DESTINATION {l}"),
            ConditionToken::AttrCmp {
                scope,
                name,
                op,
                literal,
            } => {
                let scope = match scope {
                    Scope::Node => "NODE",
                    Scope::Arc => "ARC",
                };
                let _ = write!(out, " ATTR {} {scope} {}", op.symbol(), ascii7(name));
                value(out, literal);
                Ok(())
            }
            ConditionToken::And => write!(out, " AND"),
            ConditionToken::Or => write!(out, " OR"),
            ConditionToken::Not => write!(out, " NOT"),
        };
    }
}

fn instruction(out: &mut String, ins: &Instruction) {
    let _ = match ins {
        Instruction::Input { prompt } => write!(out, "INPUT {}", ascii7(prompt)),
        Instruction::InputNumeric { prompt } => write!(out, "INPUTS {}", ascii7(prompt)),
        Instruction::If { pattern, target } => write!(out, "IF {} ({target})", ascii7(pattern)),
        Instruction::IfCmp {
            op,
            literal,
            encoding,
            target,
        } => {
            let lit = match literal {
                AttributeValue::Int(i) => format!("INT {} {} {i}", encoding.0, encoding.1),
                AttributeValue::Float(x) => format!("FLOAT {} {} {x:?}", encoding.0, encoding.1),
                // rejected by validation; kept printable for diagnostics
                AttributeValue::Str(s) => {
                    format!("STRING {} {} {}", encoding.0, encoding.1, quote(s))
                }
            };
            write!(out, "IFC {} {lit} ({target})", op.symbol())
        }
        Instruction::Goto { target } => write!(out, "GOTO ({target})"),
        Instruction::Push(cond) => {
            out.push_str("PUSH");
            condition(out, cond);
            Ok(())
        }
        Instruction::Print(text) => write!(out, "PRINT {}", quote(text)),
        Instruction::SearchQuick(i) => write!(out, "SEARCH QUICK_CHOICE {i}"),
        Instruction::SearchGuided {
            strategy,
            weight_attr,
        } => write!(
            out,
            "SEARCH GUIDED_SEARCH {strategy} {}",
            ascii7(weight_attr)
        ),
    };
}
