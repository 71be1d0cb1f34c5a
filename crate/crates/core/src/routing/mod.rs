//! Destination conditions and minimum-cost routes.
//!
//! Routes are compared by total cost, then by vertex sequence, then by edge
//! sequence, so equal-cost alternatives always resolve the same way.

mod describe;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    lookup_attribute, resolve_all, AttributeDescriptor, AttributeLookup, AttributeValue, CmpOp,
    Condition, ConditionToken, EdgeRef, LabelError, LabelId, Program, Scope, UnitId, VertexId,
};

pub use describe::{describe_route, RouteStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("no vertex satisfies the destination condition")]
    NoCandidate,
    #[error("no matching destination is reachable from vertex {0}")]
    Unreachable(VertexId),
    #[error("vertex {0} does not exist")]
    UnknownVertex(VertexId),
    #[error("arc {from} -> {to} has no {attr:?} value")]
    MissingWeight {
        from: VertexId,
        to: VertexId,
        attr: String,
    },
    #[error("arc {from} -> {to} has a non-numeric {attr:?}")]
    NonNumericWeight {
        from: VertexId,
        to: VertexId,
        attr: String,
    },
    #[error("arc {from} -> {to} has negative or invalid weight {weight}")]
    NegativeWeight {
        from: VertexId,
        to: VertexId,
        weight: f64,
    },
    #[error("condition is not well-formed reverse polish notation")]
    MalformedRpn,
    #[error("cannot compare {attr:?} ({found}) with {literal} using {op}", op = .op.symbol())]
    TypeMismatch {
        attr: String,
        op: CmpOp,
        found: AttributeValue,
        literal: AttributeValue,
    },
    #[error(transparent)]
    Label(#[from] LabelError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Route {
    /// Origin first, destination last.
    pub vertices: Vec<VertexId>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<EdgeRef>,
    pub total_cost: f64,
    /// Unit of the weight attribute, when it declares one.
    pub unit: Option<UnitId>,
}

impl Route {
    pub fn destination(&self) -> VertexId {
        *self
            .vertices
            .last()
            .expect("a route has at least its origin")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchRequest {
    pub origin: VertexId,
    pub weight_attr: String,
    pub condition: Condition,
    /// Used for arcs that lack the weight attribute. Without it such arcs are
    /// an error.
    pub default_weight: Option<f64>,
}

impl SearchRequest {
    pub fn new(origin: VertexId, weight_attr: impl Into<String>, condition: Condition) -> Self {
        SearchRequest {
            origin,
            weight_attr: weight_attr.into(),
            condition,
            default_weight: None,
        }
    }
}

/// Target flags, per-arc weights and the weight's unit.
type Prepared = (Vec<bool>, Vec<Vec<f64>>, Option<UnitId>);

/// A program's graph with labels resolved and arcs indexed by the vertex
/// they leave. Undirected edges appear once in each direction.
pub struct Network<'p> {
    program: &'p Program,
    resolved: Vec<Vec<AttributeDescriptor>>,
    arcs: Vec<Vec<Arc>>,
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: VertexId,
    edge: EdgeRef,
}

impl<'p> Network<'p> {
    pub fn new(program: &'p Program) -> Result<Self, RouteError> {
        let resolved = resolve_all(&program.labels)?;
        let mut arcs = vec![Vec::new(); program.graph.len()];
        for (u, vertex) in program.graph.vertices.iter().enumerate() {
            let from = VertexId::from(u);
            for (index, edge) in vertex.edges.iter().enumerate() {
                let edge_ref = EdgeRef {
                    source: from,
                    index,
                };
                let to = edge.destination;
                if to.index() >= arcs.len() {
                    return Err(RouteError::UnknownVertex(to));
                }
                arcs[u].push(Arc { to, edge: edge_ref });
                if !edge.oriented && to != from {
                    arcs[to.index()].push(Arc {
                        to: from,
                        edge: edge_ref,
                    });
                }
            }
        }
        Ok(Network {
            program,
            resolved,
            arcs,
        })
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    fn vertex_attr(&self, v: VertexId, name: &str) -> AttributeLookup<'_> {
        let vertex = &self.program.graph.vertices[v.index()];
        lookup_attribute(&self.resolved[vertex.label.index()], &vertex.values, name)
    }

    fn edge_attr(&self, e: EdgeRef, name: &str) -> AttributeLookup<'_> {
        let edge = self
            .program
            .graph
            .edge(e)
            .expect("edge refs come from the graph");
        lookup_attribute(&self.resolved[edge.label.index()], &edge.values, name)
    }

    /// Attributes of a label, inherited ones first.
    pub fn attributes(&self, label: LabelId) -> &[AttributeDescriptor] {
        &self.resolved[label.index()]
    }

    /// Attribute of a vertex, with the descriptor's default applied.
    pub fn vertex_value(&self, v: VertexId, name: &str) -> Option<&AttributeValue> {
        self.vertex_attr(v, name).value()
    }

    pub fn edge_value(&self, e: EdgeRef, name: &str) -> Option<&AttributeValue> {
        self.edge_attr(e, name).value()
    }

    fn label_extends(&self, mut label: LabelId, ancestor: LabelId) -> bool {
        for _ in 0..=self.program.labels.len() {
            if label == ancestor {
                return true;
            }
            match self
                .program
                .labels
                .get(label.index())
                .and_then(|l| l.parent)
            {
                Some(p) => label = p,
                None => return false,
            }
        }
        false
    }

    /// Evaluates `cond` for `subject` as a destination. `NodeLabelIs` also
    /// matches labels that extend the named one. An `ARC` predicate holds when
    /// any edge touching the subject satisfies it. Comparisons against an
    /// attribute the subject lacks are false.
    pub fn eval_condition(&self, cond: &Condition, subject: VertexId) -> Result<bool, RouteError> {
        if subject.index() >= self.program.graph.len() {
            return Err(RouteError::UnknownVertex(subject));
        }
        let mut stack = Vec::new();
        for token in &cond.tokens {
            let value = match token {
                ConditionToken::NodeIs(v) => *v == subject,
                ConditionToken::NodeLabelIs(l) => {
                    self.label_extends(self.program.graph.vertices[subject.index()].label, *l)
                }
                ConditionToken::AttrCmp {
                    scope: Scope::Node,
                    name,
                    op,
                    literal,
                } => match self.vertex_attr(subject, name).value() {
                    Some(found) => compare(name, found, *op, literal)?,
                    None => false,
                },
                ConditionToken::AttrCmp {
                    scope: Scope::Arc,
                    name,
                    op,
                    literal,
                } => {
                    let mut any = false;
                    for edge in self.incident_edges(subject) {
                        if let Some(found) = self.edge_attr(edge, name).value() {
                            if compare(name, found, *op, literal)? {
                                any = true;
                                break;
                            }
                        }
                    }
                    any
                }
                ConditionToken::And | ConditionToken::Or => {
                    let (Some(b), Some(a)) = (stack.pop(), stack.pop()) else {
                        return Err(RouteError::MalformedRpn);
                    };
                    if *token == ConditionToken::And {
                        a && b
                    } else {
                        a || b
                    }
                }
                ConditionToken::Not => !stack.pop().ok_or(RouteError::MalformedRpn)?,
            };
            stack.push(value);
        }
        match stack.as_slice() {
            [result] => Ok(*result),
            _ => Err(RouteError::MalformedRpn),
        }
    }

    fn incident_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeRef> + '_ {
        let outgoing = self.arcs[v.index()].iter().map(|a| a.edge);
        let incoming = self
            .program
            .graph
            .vertices
            .iter()
            .enumerate()
            .flat_map(move |(u, vx)| {
                vx.edges
                    .iter()
                    .enumerate()
                    .filter(move |(_, e)| e.oriented && e.destination == v && u != v.index())
                    .map(move |(index, _)| EdgeRef {
                        source: VertexId::from(u),
                        index,
                    })
            });
        outgoing.chain(incoming)
    }

    /// Every vertex satisfying `cond`, in index order.
    pub fn candidates(&self, cond: &Condition) -> Result<Vec<VertexId>, RouteError> {
        if !cond.is_well_formed() {
            return Err(RouteError::MalformedRpn);
        }
        let mut out = Vec::new();
        for v in 0..self.program.graph.len() {
            let v = VertexId::from(v);
            if self.eval_condition(cond, v)? {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Weight of every arc reachable from `origin`, indexed like `arcs`, plus
    /// the weight attribute's unit.
    fn weights(
        &self,
        request: &SearchRequest,
    ) -> Result<(Vec<Vec<f64>>, Option<UnitId>), RouteError> {
        let mut weights: Vec<Vec<f64>> = self.arcs.iter().map(|a| vec![0.0; a.len()]).collect();
        let mut unit = None;
        let mut seen = vec![false; self.arcs.len()];
        let mut queue = VecDeque::from([request.origin]);
        seen[request.origin.index()] = true;
        while let Some(u) = queue.pop_front() {
            for (i, arc) in self.arcs[u.index()].iter().enumerate() {
                let attr = &request.weight_attr;
                let w = match self.edge_attr(arc.edge, attr) {
                    AttributeLookup::Present(desc, value) => {
                        unit = unit.or(desc.unit);
                        value.as_f64().ok_or_else(|| RouteError::NonNumericWeight {
                            from: u,
                            to: arc.to,
                            attr: attr.clone(),
                        })?
                    }
                    _ => request
                        .default_weight
                        .ok_or_else(|| RouteError::MissingWeight {
                            from: u,
                            to: arc.to,
                            attr: attr.clone(),
                        })?,
                };
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(RouteError::NegativeWeight {
                        from: u,
                        to: arc.to,
                        weight: w,
                    });
                }
                weights[u.index()][i] = w;
                if !seen[arc.to.index()] {
                    seen[arc.to.index()] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        Ok((weights, unit))
    }

    fn prepare(&self, request: &SearchRequest) -> Result<Prepared, RouteError> {
        if request.origin.index() >= self.program.graph.len() {
            return Err(RouteError::UnknownVertex(request.origin));
        }
        let candidates = self.candidates(&request.condition)?;
        if candidates.is_empty() {
            return Err(RouteError::NoCandidate);
        }
        let mut is_target = vec![false; self.program.graph.len()];
        for v in candidates {
            is_target[v.index()] = true;
        }
        let (weights, unit) = self.weights(request)?;
        Ok((is_target, weights, unit))
    }

    /// Dijkstra from the origin, stopping at the first settled vertex that
    /// satisfies the condition.
    pub fn shortest_path(&self, request: &SearchRequest) -> Result<Route, RouteError> {
        let (is_target, weights, unit) = self.prepare(request)?;
        let mut settled = vec![false; self.arcs.len()];
        let mut heap = BinaryHeap::new();
        heap.push(Partial {
            cost: 0.0,
            vertices: vec![request.origin],
            edges: Vec::new(),
        });
        while let Some(path) = heap.pop() {
            let u = *path.vertices.last().expect("non-empty");
            if settled[u.index()] {
                continue;
            }
            settled[u.index()] = true;
            if is_target[u.index()] {
                return Ok(path.into_route(unit));
            }
            for (i, arc) in self.arcs[u.index()].iter().enumerate() {
                if settled[arc.to.index()] {
                    continue;
                }
                let mut next = path.clone();
                next.cost += weights[u.index()][i];
                next.vertices.push(arc.to);
                next.edges.push(arc.edge);
                heap.push(next);
            }
        }
        Err(RouteError::Unreachable(request.origin))
    }

    /// Exhaustive search over all simple paths from the origin. Exponential;
    /// meant as a reference for small graphs.
    pub fn brute_force_path(&self, request: &SearchRequest) -> Result<Route, RouteError> {
        let (is_target, weights, unit) = self.prepare(request)?;
        let mut best: Option<Partial> = None;
        let mut on_path = vec![false; self.arcs.len()];
        let mut current = Partial {
            cost: 0.0,
            vertices: vec![request.origin],
            edges: Vec::new(),
        };
        on_path[request.origin.index()] = true;
        self.enumerate(&is_target, &weights, &mut on_path, &mut current, &mut best);
        best.map(|p| p.into_route(unit))
            .ok_or(RouteError::Unreachable(request.origin))
    }

    fn enumerate(
        &self,
        is_target: &[bool],
        weights: &[Vec<f64>],
        on_path: &mut [bool],
        current: &mut Partial,
        best: &mut Option<Partial>,
    ) {
        let u = *current.vertices.last().expect("non-empty");
        if is_target[u.index()] {
            // Recompute from scratch so the total does not depend on how the
            // walk got here.
            let total = path_cost(&current.vertices, &current.edges, |from, e| {
                let i = self.arcs[from.index()]
                    .iter()
                    .position(|a| a.edge == e)
                    .expect("arc exists");
                weights[from.index()][i]
            });
            let candidate = Partial {
                cost: total,
                vertices: current.vertices.clone(),
                edges: current.edges.clone(),
            };
            if best
                .as_ref()
                .is_none_or(|b| candidate.key_cmp(b) == Ordering::Less)
            {
                *best = Some(candidate);
            }
        }
        for (i, arc) in self.arcs[u.index()].iter().enumerate() {
            if on_path[arc.to.index()] {
                continue;
            }
            on_path[arc.to.index()] = true;
            current.vertices.push(arc.to);
            current.edges.push(arc.edge);
            current.cost += weights[u.index()][i];
            self.enumerate(is_target, weights, on_path, current, best);
            current.cost -= weights[u.index()][i];
            current.edges.pop();
            current.vertices.pop();
            on_path[arc.to.index()] = false;
        }
    }
}

/// Sum of arc weights in travel order, starting from zero.
fn path_cost(
    vertices: &[VertexId],
    edges: &[EdgeRef],
    weight: impl Fn(VertexId, EdgeRef) -> f64,
) -> f64 {
    vertices
        .iter()
        .zip(edges)
        .fold(0.0, |acc, (&from, &e)| acc + weight(from, e))
}

fn compare(
    attr: &str,
    found: &AttributeValue,
    op: CmpOp,
    literal: &AttributeValue,
) -> Result<bool, RouteError> {
    let mismatch = || RouteError::TypeMismatch {
        attr: attr.to_string(),
        op,
        found: found.clone(),
        literal: literal.clone(),
    };
    match (found, literal) {
        (AttributeValue::Int(a), AttributeValue::Int(b)) => Ok(op.compare(a, b)),
        (AttributeValue::Str(a), AttributeValue::Str(b)) if op.is_equality() => {
            Ok(op.compare(a, b))
        }
        (AttributeValue::Str(_), _) | (_, AttributeValue::Str(_)) => Err(mismatch()),
        _ => {
            let (a, b) = (
                found.as_f64().ok_or_else(mismatch)?,
                literal.as_f64().ok_or_else(mismatch)?,
            );
            Ok(op.compare(&a, &b))
        }
    }
}

#[derive(Clone, Debug)]
struct Partial {
    cost: f64,
    vertices: Vec<VertexId>,
    edges: Vec<EdgeRef>,
}

impl Partial {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.vertices.cmp(&other.vertices))
            .then_with(|| self.edges.cmp(&other.edges))
    }

    fn into_route(self, unit: Option<UnitId>) -> Route {
        Route {
            vertices: self.vertices,
            edges: self.edges,
            total_cost: self.cost,
            unit,
        }
    }
}

impl PartialEq for Partial {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Partial {}

impl PartialOrd for Partial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Partial {
    // Reversed: BinaryHeap is a max-heap and the smallest key must come out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

pub fn eval_condition(
    program: &Program,
    cond: &Condition,
    subject: VertexId,
) -> Result<bool, RouteError> {
    Network::new(program)?.eval_condition(cond, subject)
}

pub fn candidates(program: &Program, cond: &Condition) -> Result<Vec<VertexId>, RouteError> {
    Network::new(program)?.candidates(cond)
}

pub fn shortest_path(program: &Program, request: &SearchRequest) -> Result<Route, RouteError> {
    Network::new(program)?.shortest_path(request)
}

pub fn brute_force_path(program: &Program, request: &SearchRequest) -> Result<Route, RouteError> {
    Network::new(program)?.brute_force_path(request)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v(one_based: u64) -> VertexId {
        VertexId::from_one_based(one_based).unwrap()
    }

    #[test]
    fn node_condition_matches_only_that_vertex() {
        let p = corpus::plant();
        let cond = Condition::node_is(v(1));
        assert!(eval_condition(&p, &cond, v(1)).unwrap());
        assert!(!eval_condition(&p, &cond, v(3)).unwrap());
    }

    #[test]
    fn rpn_shapes() {
        let p = corpus::plant();
        let or = Condition::new(vec![
            ConditionToken::NodeIs(v(1)),
            ConditionToken::NodeIs(v(2)),
            ConditionToken::Or,
        ]);
        assert!(eval_condition(&p, &or, v(1)).unwrap());
        let residue = Condition::new(vec![
            ConditionToken::NodeIs(v(1)),
            ConditionToken::NodeIs(v(2)),
        ]);
        assert_eq!(
            eval_condition(&p, &residue, v(1)),
            Err(RouteError::MalformedRpn)
        );
        let underflow = Condition::new(vec![ConditionToken::And]);
        assert_eq!(
            eval_condition(&p, &underflow, v(1)),
            Err(RouteError::MalformedRpn)
        );
    }

    #[test]
    fn attribute_predicates() {
        let p = corpus::plant();
        let ge10 = Condition::new(vec![ConditionToken::AttrCmp {
            scope: Scope::Node,
            name: "prod_pieces".into(),
            op: CmpOp::Ge,
            literal: AttributeValue::Int(10),
        }]);
        assert_eq!(candidates(&p, &ge10).unwrap(), vec![v(5), v(6)]);
        let lt = Condition::new(vec![ConditionToken::AttrCmp {
            scope: Scope::Node,
            name: "name".into(),
            op: CmpOp::Lt,
            literal: AttributeValue::Str("x".into()),
        }]);
        assert!(matches!(
            candidates(&p, &lt),
            Err(RouteError::TypeMismatch { .. })
        ));
        let red = Condition::new(vec![ConditionToken::AttrCmp {
            scope: Scope::Arc,
            name: "color".into(),
            op: CmpOp::Eq,
            literal: AttributeValue::Str("red".into()),
        }]);
        assert_eq!(candidates(&p, &red).unwrap(), vec![v(2), v(3)]);
        let nothing = Condition::new(vec![ConditionToken::AttrCmp {
            scope: Scope::Node,
            name: "prod_pieces".into(),
            op: CmpOp::Gt,
            literal: AttributeValue::Int(100),
        }]);
        assert!(candidates(&p, &nothing).unwrap().is_empty());
    }

    #[test]
    fn label_condition_includes_extensions() {
        let p = corpus::plant();
        let common = Condition::new(vec![ConditionToken::NodeLabelIs(LabelId(0))]);
        assert_eq!(candidates(&p, &common).unwrap().len(), 6);
        let line = Condition::new(vec![ConditionToken::NodeLabelIs(LabelId(2))]);
        assert_eq!(candidates(&p, &line).unwrap(), vec![v(5), v(6)]);
    }

    #[test]
    fn origin_is_destination() {
        let p = corpus::plant();
        let req = SearchRequest::new(v(1), "length", Condition::node_is(v(1)));
        let route = shortest_path(&p, &req).unwrap();
        assert_eq!(route.vertices, vec![v(1)]);
        assert_eq!(route.total_cost, 0.0);
    }

    #[test]
    fn missing_weight_needs_default() {
        let p = corpus::plant();
        let req = SearchRequest::new(v(6), "speed", Condition::node_is(v(1)));
        assert!(matches!(
            shortest_path(&p, &req),
            Err(RouteError::MissingWeight { .. })
        ));
        let req = SearchRequest {
            default_weight: Some(1.0),
            ..req
        };
        let route = shortest_path(&p, &req).unwrap();
        assert_eq!(route.total_cost, 4.0);
        let req = SearchRequest::new(v(6), "color", Condition::node_is(v(1)));
        assert!(matches!(
            shortest_path(&p, &req),
            Err(RouteError::NonNumericWeight { .. })
        ));
    }
}
