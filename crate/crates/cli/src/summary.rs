//! Structured descriptions of a program for display.

use std::collections::BTreeMap;
use std::fmt;

use qrmap::model::{AttributeValue, FloatFormat, LabelId, Program, VertexId};
use qrmap::routing::Network;
use qrmap::vm::{quick_choice_offers, QuickChoiceOffer};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProgramSummary {
    pub labels: usize,
    pub vertices: usize,
    pub edges: usize,
    pub instructions: usize,
    pub units: Vec<String>,
    pub float_format: FloatFormat,
    pub origin: Option<VertexId>,
    pub quick_choices: Vec<QuickChoiceOffer>,
    /// Whether the code section holds a question-and-answer guide.
    pub interactive: bool,
}

impl ProgramSummary {
    pub fn of(program: &Program) -> Self {
        ProgramSummary {
            labels: program.labels.len(),
            vertices: program.graph.len(),
            edges: program.graph.edge_count(),
            instructions: program.code.len(),
            units: program
                .header
                .units
                .iter()
                .map(|u| u.symbol.clone())
                .collect(),
            float_format: program.header.effective_float_format(),
            origin: program.header.origin,
            quick_choices: quick_choice_offers(program),
            interactive: !program.code.is_empty(),
        }
    }
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

impl fmt::Display for ProgramSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, {}, {}",
            plural(self.vertices, "location", "locations"),
            plural(self.quick_choices.len(), "quick choice", "quick choices"),
            if self.interactive {
                "interactive guide available"
            } else {
                "no interactive guide"
            }
        )?;
        writeln!(f)?;
        writeln!(
            f,
            "  {}, {}, {}",
            plural(self.labels, "label", "labels"),
            plural(self.edges, "edge", "edges"),
            plural(self.instructions, "instruction", "instructions")
        )?;
        if !self.units.is_empty() {
            writeln!(f, "  units: {}", self.units.join(", "))?;
        }
        writeln!(
            f,
            "  floats: {} exponent bits, {} mantissa bits",
            self.float_format.exp_bits, self.float_format.mant_bits
        )?;
        match self.origin {
            Some(v) => writeln!(f, "  origin: vertex {v}")?,
            None => writeln!(f, "  origin: not set")?,
        }
        for qc in &self.quick_choices {
            writeln!(
                f,
                "  quick choice {}: {} (by {})",
                qc.index, qc.label, qc.weight_attr
            )?;
        }
        Ok(())
    }
}

fn plain(v: &AttributeValue) -> serde_json::Value {
    match v {
        AttributeValue::Int(i) => (*i).into(),
        AttributeValue::Float(x) => (*x).into(),
        AttributeValue::Str(s) => s.clone().into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphVertex {
    pub id: VertexId,
    pub label: LabelId,
    pub label_name: String,
    pub attributes: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub oriented: bool,
    pub label: LabelId,
    pub label_name: String,
    pub attributes: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphView {
    pub units: Vec<String>,
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
}

impl GraphView {
    /// Vertices and edges with attribute defaults applied.
    pub fn of(program: &Program) -> Self {
        let network = Network::new(program).ok();
        let label_name = |l: LabelId| program.label(l).map(|d| d.name.clone()).unwrap_or_default();
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for (i, vertex) in program.graph.vertices.iter().enumerate() {
            let id = VertexId::from(i);
            let mut attributes = BTreeMap::new();
            if let Some(n) = &network {
                for d in n.attributes(vertex.label) {
                    if let Some(v) = n.vertex_value(id, &d.name) {
                        attributes.insert(d.name.clone(), plain(v));
                    }
                }
            }
            vertices.push(GraphVertex {
                id,
                label: vertex.label,
                label_name: label_name(vertex.label),
                attributes,
            });
            for (k, edge) in vertex.edges.iter().enumerate() {
                let mut attributes = BTreeMap::new();
                if let Some(n) = &network {
                    let r = qrmap::model::EdgeRef {
                        source: id,
                        index: k,
                    };
                    for d in n.attributes(edge.label) {
                        if let Some(v) = n.edge_value(r, &d.name) {
                            attributes.insert(d.name.clone(), plain(v));
                        }
                    }
                }
                edges.push(GraphEdge {
                    from: id,
                    to: edge.destination,
                    oriented: edge.oriented,
                    label: edge.label,
                    label_name: label_name(edge.label),
                    attributes,
                });
            }
        }
        GraphView {
            units: program
                .header
                .units
                .iter()
                .map(|u| u.symbol.clone())
                .collect(),
            vertices,
            edges,
        }
    }
}
