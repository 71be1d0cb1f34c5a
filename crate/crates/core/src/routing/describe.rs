use serde::Serialize;

use super::{Network, Route};
use crate::model::{AttributeValue, EdgeRef, VertexId};

/// One leg of a route in human terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteStep {
    pub from: VertexId,
    pub to: VertexId,
    pub edge: EdgeRef,
    /// The `name` attribute of the destination vertex, if it has one.
    pub to_name: Option<String>,
    /// The `color` attribute of the arc, if it has one.
    pub color: Option<String>,
    pub weight: Option<f64>,
    pub unit: Option<String>,
}

impl RouteStep {
    /// "follow the green path for 5.0 m to Emegency Exit"
    pub fn sentence(&self) -> String {
        let mut s = match &self.color {
            Some(c) => format!("follow the {c} path"),
            None => "follow the path".to_string(),
        };
        if let Some(w) = self.weight {
            s.push_str(&format!(" for {w:?}"));
            if let Some(u) = &self.unit {
                s.push(' ');
                s.push_str(u);
            }
        }
        s.push_str(" to ");
        match &self.to_name {
            Some(name) => s.push_str(name),
            None => s.push_str(&format!("vertex {}", self.to)),
        }
        s
    }
}

fn text(v: Option<&AttributeValue>) -> Option<String> {
    match v {
        Some(AttributeValue::Str(s)) => Some(s.clone()),
        Some(other) => Some(other.to_string()),
        None => None,
    }
}

pub fn describe_route(network: &Network<'_>, route: &Route, weight_attr: &str) -> Vec<RouteStep> {
    let unit = route
        .unit
        .and_then(|u| network.program().unit_symbol(u))
        .map(str::to_string);
    route
        .vertices
        .windows(2)
        .zip(&route.edges)
        .map(|(pair, &edge)| RouteStep {
            from: pair[0],
            to: pair[1],
            edge,
            to_name: text(network.vertex_value(pair[1], "name")),
            color: text(network.edge_value(edge, "color")),
            weight: network
                .edge_value(edge, weight_attr)
                .and_then(AttributeValue::as_f64),
            unit: unit.clone(),
        })
        .collect()
}
