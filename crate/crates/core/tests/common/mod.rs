#![allow(dead_code)]

use qrmap::codec::decode_minifloat;
use qrmap::model::{
    resolve_all, AttrKind, AttributeDescriptor, AttributeValue, CmpOp, Condition, ConditionToken,
    Edge, ExtraCommand, FloatFormat, Graph, HeaderConfig, Instruction, LabelDef, LabelId,
    LiteralEncoding, MeasurementUnit, Program, QuickChoice, Scope, SearchStrategy, UnitId, Vertex,
    VertexId,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Printable ASCII, quotes and backslashes included.
pub fn text(rng: &mut StdRng, max: usize) -> String {
    let len = rng.random_range(0..=max);
    (0..len)
        .map(|_| char::from(rng.random_range(0x20u8..0x7f)))
        .collect()
}

fn nonempty_text(rng: &mut StdRng, max: usize) -> String {
    let mut s = text(rng, max);
    if s.is_empty() {
        s.push('x');
    }
    s
}

/// A float that `format` holds exactly.
pub fn representable(rng: &mut StdRng, format: FloatFormat) -> f64 {
    let width = format.exp_bits + format.mant_bits + 1;
    loop {
        let bits = rng.random_range(0..(1u64 << width)) as u32;
        if let Ok(x) = decode_minifloat(bits, format) {
            return x;
        }
    }
}

fn value(rng: &mut StdRng, kind: AttrKind, format: FloatFormat) -> AttributeValue {
    match kind {
        AttrKind::Int => AttributeValue::Int(match rng.random_range(0..3) {
            0 => rng.random_range(-5..5),
            1 => rng.random_range(-100_000..100_000),
            _ => rng.random(),
        }),
        AttrKind::Float => AttributeValue::Float(representable(rng, format)),
        AttrKind::Str => AttributeValue::Str(text(rng, 12)),
    }
}

fn kind(rng: &mut StdRng) -> AttrKind {
    [AttrKind::Int, AttrKind::Float, AttrKind::Str][rng.random_range(0..3)]
}

fn values(
    rng: &mut StdRng,
    resolved: &[AttributeDescriptor],
    format: FloatFormat,
) -> Vec<Option<AttributeValue>> {
    resolved
        .iter()
        .map(|d| {
            if d.optional && rng.random_bool(0.5) {
                None
            } else {
                Some(value(rng, d.kind, format))
            }
        })
        .collect()
}

fn condition(
    rng: &mut StdRng,
    depth: u32,
    vertices: usize,
    labels: usize,
    format: FloatFormat,
) -> Vec<ConditionToken> {
    if depth == 0 || rng.random_bool(0.4) {
        return vec![match rng.random_range(0..3) {
            0 => ConditionToken::NodeIs(VertexId(rng.random_range(0..vertices as u32))),
            1 => ConditionToken::NodeLabelIs(LabelId(rng.random_range(0..labels as u32))),
            _ => {
                let k = kind(rng);
                let literal = value(rng, k, format);
                let op = if literal.kind() == AttrKind::Str {
                    [CmpOp::Eq, CmpOp::Ne][rng.random_range(0..2)]
                } else {
                    CmpOp::ALL[rng.random_range(0..6)]
                };
                ConditionToken::AttrCmp {
                    scope: if rng.random_bool(0.5) {
                        Scope::Node
                    } else {
                        Scope::Arc
                    },
                    name: nonempty_text(rng, 6),
                    op,
                    literal,
                }
            }
        }];
    }
    let mut out = condition(rng, depth - 1, vertices, labels, format);
    match rng.random_range(0..3) {
        0 => out.push(ConditionToken::Not),
        n => {
            out.extend(condition(rng, depth - 1, vertices, labels, format));
            out.push(if n == 1 {
                ConditionToken::And
            } else {
                ConditionToken::Or
            });
        }
    }
    out
}

/// A random program that passes validation. Attribute names never collide
/// with the search weight names, so weights impose no constraints.
pub fn random_program(rng: &mut StdRng) -> Program {
    let units: Vec<MeasurementUnit> = (0..rng.random_range(0..3))
        .map(|_| MeasurementUnit {
            symbol: nonempty_text(rng, 4),
        })
        .collect();
    let float_format = rng
        .random_bool(0.7)
        .then(|| FloatFormat::new(rng.random_range(2..=8), rng.random_range(1..=12)));
    let format = float_format.unwrap_or(FloatFormat::DEFAULT);

    let n_labels = rng.random_range(1..=4);
    let mut labels = Vec::new();
    for i in 0..n_labels {
        let parent =
            (i > 0 && rng.random_bool(0.4)).then(|| LabelId(rng.random_range(0..i as u32)));
        let attributes = (0..rng.random_range(0..4))
            .map(|k| {
                let kind = kind(rng);
                let mut d = AttributeDescriptor::new(format!("a{i}_{k}"), kind);
                if kind.is_numeric() && !units.is_empty() && rng.random_bool(0.5) {
                    d.unit = Some(UnitId(rng.random_range(0..units.len() as u32)));
                }
                d.optional = rng.random_bool(0.4);
                if rng.random_bool(0.3) {
                    d.default = Some(value(rng, kind, format));
                }
                d
            })
            .collect();
        labels.push(LabelDef {
            name: text(rng, 8),
            parent,
            attributes,
        });
    }
    let resolved = resolve_all(&labels).expect("parents precede children");

    let n_vertices = rng.random_range(1..=8);
    let mut vertices = Vec::new();
    for _ in 0..n_vertices {
        let label = rng.random_range(0..n_labels);
        let edges = (0..rng.random_range(0..3))
            .map(|_| {
                let el = rng.random_range(0..n_labels);
                Edge {
                    destination: VertexId(rng.random_range(0..n_vertices as u32)),
                    oriented: rng.random_bool(0.5),
                    label: LabelId(el as u32),
                    values: values(rng, &resolved[el], format),
                }
            })
            .collect();
        vertices.push(Vertex {
            label: LabelId(label as u32),
            values: values(rng, &resolved[label], format),
            edges,
        });
    }

    let quick_choices: Vec<QuickChoice> = (0..rng.random_range(0..3))
        .map(|_| QuickChoice {
            strategy: SearchStrategy::ShortestPath,
            weight_attr: format!("w{}", text(rng, 4)),
            condition: Condition::new(condition(rng, 3, n_vertices, n_labels, format)),
        })
        .collect();

    let n_code = rng.random_range(0..12);
    let code = (0..n_code)
        .map(|_| {
            let target = rng.random_range(0..=n_code);
            match rng.random_range(0..9) {
                0 => Instruction::Input {
                    prompt: text(rng, 20),
                },
                1 => Instruction::InputNumeric {
                    prompt: text(rng, 20),
                },
                2 => Instruction::If {
                    pattern: text(rng, 10),
                    target,
                },
                3 => Instruction::IfCmp {
                    op: CmpOp::ALL[rng.random_range(0..6)],
                    literal: {
                        let k = [AttrKind::Int, AttrKind::Float][rng.random_range(0..2)];
                        value(rng, k, format)
                    },
                    encoding: LiteralEncoding(rng.random_range(0..5), rng.random_range(0..300)),
                    target,
                },
                4 => Instruction::Goto { target },
                5 => Instruction::Push(Condition::new(condition(
                    rng, 2, n_vertices, n_labels, format,
                ))),
                6 => Instruction::Print(text(rng, 30)),
                7 if !quick_choices.is_empty() => {
                    Instruction::SearchQuick(rng.random_range(0..quick_choices.len()))
                }
                _ => Instruction::SearchGuided {
                    strategy: SearchStrategy::ShortestPath,
                    weight_attr: format!("w{}", text(rng, 4)),
                },
            }
        })
        .collect();

    let header = HeaderConfig {
        units,
        float_format,
        origin: rng
            .random_bool(0.5)
            .then(|| VertexId(rng.random_range(0..n_vertices as u32))),
        extra_commands: (0..rng.random_range(0..2))
            .map(|_| ExtraCommand {
                id: rng.random_range(3..=12),
                payload: (0..rng.random_range(0..6)).map(|_| rng.random()).collect(),
            })
            .collect(),
    };

    Program {
        header,
        labels,
        graph: Graph { vertices },
        quick_choices,
        code,
    }
}

/// A navigable graph for routing: one vertex label with a name and one arc
/// label with a FLOAT "length" and a STRING "color". Lengths are multiples of
/// 1/4, so every path cost is computed exactly.
pub fn random_network(rng: &mut StdRng, n: usize, max_edges: usize) -> Program {
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
                AttributeDescriptor::new("length", AttrKind::Float).with_unit(UnitId(0)),
                AttributeDescriptor::new("color", AttrKind::Str),
            ],
        },
    ];
    let mut vertices: Vec<Vertex> = (0..n)
        .map(|i| Vertex {
            label: LabelId(0),
            values: vec![Some(AttributeValue::Str(format!("v{}", i + 1)))],
            edges: Vec::new(),
        })
        .collect();
    for _ in 0..rng.random_range(0..=max_edges) {
        let from = rng.random_range(0..n);
        let edge = Edge {
            destination: VertexId(rng.random_range(0..n as u32)),
            oriented: rng.random_bool(0.5),
            label: LabelId(1),
            values: vec![
                Some(AttributeValue::Float(
                    f64::from(rng.random_range(0..=40u32)) / 4.0,
                )),
                Some(AttributeValue::Str("grey".into())),
            ],
        };
        vertices[from].edges.push(edge);
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

type EdgeKey = (usize, usize);

/// Brute-force reference: all simple walks from `origin` by explicit stack,
/// no shared code with the library's search.
pub fn reference_route(
    program: &Program,
    origin: usize,
    targets: &[usize],
) -> Option<(f64, Vec<usize>)> {
    let n = program.graph.len();
    // (to, weight, edge key) per vertex
    let mut adj: Vec<Vec<(usize, f64, EdgeKey)>> = vec![Vec::new(); n];
    for (u, v) in program.graph.vertices.iter().enumerate() {
        for (k, e) in v.edges.iter().enumerate() {
            let w = match &e.values[0] {
                Some(AttributeValue::Float(x)) => *x,
                _ => unreachable!(),
            };
            let d = e.destination.0 as usize;
            adj[u].push((d, w, (u, k)));
            if !e.oriented && d != u {
                adj[d].push((u, w, (u, k)));
            }
        }
    }
    let mut best: Option<(f64, Vec<usize>, Vec<EdgeKey>)> = None;
    let mut stack = vec![(vec![origin], Vec::<EdgeKey>::new(), 0.0f64)];
    while let Some((path, edges, cost)) = stack.pop() {
        let last = *path.last().unwrap();
        if targets.contains(&last) {
            let better = match &best {
                None => true,
                Some((c, p, e)) => (cost, &path, &edges) < (*c, p, e),
            };
            if better {
                best = Some((cost, path.clone(), edges.clone()));
            }
        }
        for &(to, w, key) in &adj[last] {
            if !path.contains(&to) {
                let mut p = path.clone();
                p.push(to);
                let mut e = edges.clone();
                e.push(key);
                stack.push((p, e, cost + w));
            }
        }
    }
    best.map(|(c, p, _)| (c, p))
}
