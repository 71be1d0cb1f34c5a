//! Shared inputs for the benchmarks.

use qrmap::model::{
    AttrKind, AttributeDescriptor, AttributeValue, Edge, Graph, HeaderConfig, LabelDef, LabelId,
    MeasurementUnit, Program, UnitId, Vertex, VertexId,
};

/// A `side` x `side` grid of named vertices joined by undirected arcs whose
/// lengths cycle through 1.0, 1.5, 2.0 and 2.5.
pub fn grid(side: usize) -> Program {
    let labels = vec![
        LabelDef {
            name: "spot".into(),
            parent: None,
            attributes: vec![AttributeDescriptor::new("name", AttrKind::Str)],
        },
        LabelDef {
            name: "arc".into(),
            parent: None,
            attributes: vec![
                AttributeDescriptor::new("length", AttrKind::Float).with_unit(UnitId(0))
            ],
        },
    ];
    let id = |r: usize, c: usize| VertexId::from(r * side + c);
    let arc = |to: VertexId, k: usize| Edge {
        destination: to,
        oriented: false,
        label: LabelId(1),
        values: vec![Some(AttributeValue::Float(1.0 + (k % 4) as f64 * 0.5))],
    };
    let mut vertices = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let mut edges = Vec::new();
            if c + 1 < side {
                edges.push(arc(id(r, c + 1), r + c));
            }
            if r + 1 < side {
                edges.push(arc(id(r + 1, c), r * 3 + c));
            }
            vertices.push(Vertex {
                label: LabelId(0),
                values: vec![Some(AttributeValue::Str(format!("r{r}c{c}")))],
                edges,
            });
        }
    }
    Program {
        header: HeaderConfig {
            units: vec![MeasurementUnit { symbol: "m".into() }],
            ..HeaderConfig::default()
        },
        labels,
        graph: Graph { vertices },
        quick_choices: Vec::new(),
        code: Vec::new(),
    }
}
