use std::collections::HashSet;

use thiserror::Error;

use super::{AttributeDescriptor, AttributeValue, LabelDef, LabelId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("unknown label {0}")]
    UnknownLabel(LabelId),
    #[error("inheritance cycle through label {0}")]
    InheritanceCycle(LabelId),
    #[error("label {label} defines attribute {name:?} more than once")]
    DuplicateAttributeName { label: LabelId, name: String },
}

/// Full attribute list of a label: ancestors' attributes first, then its own.
pub fn resolve_label(
    labels: &[LabelDef],
    index: LabelId,
) -> Result<Vec<AttributeDescriptor>, LabelError> {
    let mut chain = Vec::new();
    let mut seen = HashSet::new();
    let mut cursor = Some(index);
    while let Some(id) = cursor {
        if !seen.insert(id) {
            return Err(LabelError::InheritanceCycle(id));
        }
        let def = labels.get(id.index()).ok_or(LabelError::UnknownLabel(id))?;
        chain.push(def);
        cursor = def.parent;
    }

    let mut names = HashSet::new();
    let mut resolved = Vec::new();
    for def in chain.into_iter().rev() {
        for attr in &def.attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(LabelError::DuplicateAttributeName {
                    label: index,
                    name: attr.name.clone(),
                });
            }
            resolved.push(attr.clone());
        }
    }
    Ok(resolved)
}

/// Resolves every label of the table, indexed like the table.
pub fn resolve_all(labels: &[LabelDef]) -> Result<Vec<Vec<AttributeDescriptor>>, LabelError> {
    (0..labels.len())
        .map(|i| resolve_label(labels, LabelId::from(i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttributeLookup<'a> {
    /// The label has no attribute with this name.
    Undefined,
    /// Optional, left out, and no default.
    Absent(&'a AttributeDescriptor),
    Present(&'a AttributeDescriptor, &'a AttributeValue),
}

impl<'a> AttributeLookup<'a> {
    pub fn value(self) -> Option<&'a AttributeValue> {
        match self {
            AttributeLookup::Present(_, v) => Some(v),
            _ => None,
        }
    }
}

/// Finds `name` among the values of a vertex or arc. A left-out optional
/// attribute falls back to its descriptor's default.
pub fn lookup_attribute<'a>(
    resolved: &'a [AttributeDescriptor],
    values: &'a [Option<AttributeValue>],
    name: &str,
) -> AttributeLookup<'a> {
    let Some(pos) = resolved.iter().position(|d| d.name == name) else {
        return AttributeLookup::Undefined;
    };
    let desc = &resolved[pos];
    match values
        .get(pos)
        .and_then(Option::as_ref)
        .or(desc.default.as_ref())
    {
        Some(v) => AttributeLookup::Present(desc, v),
        None => AttributeLookup::Absent(desc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttrKind, UnitId};

    fn plant_labels() -> Vec<LabelDef> {
        vec![
            LabelDef {
                name: "common".into(),
                parent: None,
                attributes: vec![
                    AttributeDescriptor::new("name", AttrKind::Str),
                    AttributeDescriptor::new("desc", AttrKind::Str).optional(),
                ],
            },
            LabelDef {
                name: "arc".into(),
                parent: None,
                attributes: vec![
                    AttributeDescriptor::new("length", AttrKind::Float).with_unit(UnitId(0)),
                    AttributeDescriptor::new("color", AttrKind::Str),
                ],
            },
            LabelDef {
                name: "ass_line".into(),
                parent: Some(LabelId(0)),
                attributes: vec![
                    AttributeDescriptor::new("prod_pieces", AttrKind::Int).with_unit(UnitId(0))
                ],
            },
        ]
    }

    fn names(attrs: &[AttributeDescriptor]) -> Vec<&str> {
        attrs.iter().map(|a| a.name.as_str()).collect()
    }

    #[test]
    fn inherited_attributes_come_first() {
        let labels = plant_labels();
        let resolved = resolve_label(&labels, LabelId(2)).unwrap();
        assert_eq!(names(&resolved), ["name", "desc", "prod_pieces"]);
    }

    #[test]
    fn root_label_is_unchanged() {
        let labels = plant_labels();
        assert_eq!(
            resolve_label(&labels, LabelId(1)).unwrap(),
            labels[1].attributes
        );
    }

    #[test]
    fn cycle_is_reported() {
        let mut labels = plant_labels();
        labels[0].parent = Some(LabelId(2));
        assert!(matches!(
            resolve_label(&labels, LabelId(2)),
            Err(LabelError::InheritanceCycle(_))
        ));
        labels[1].parent = Some(LabelId(1));
        assert_eq!(
            resolve_label(&labels, LabelId(1)),
            Err(LabelError::InheritanceCycle(LabelId(1)))
        );
    }

    #[test]
    fn unknown_and_duplicate() {
        let mut labels = plant_labels();
        assert_eq!(
            resolve_label(&labels, LabelId(7)),
            Err(LabelError::UnknownLabel(LabelId(7)))
        );
        labels[2]
            .attributes
            .push(AttributeDescriptor::new("desc", AttrKind::Int));
        assert!(matches!(
            resolve_label(&labels, LabelId(2)),
            Err(LabelError::DuplicateAttributeName { ref name, .. }) if name == "desc"
        ));
    }

    #[test]
    fn resolution_is_stable() {
        let labels = plant_labels();
        assert_eq!(resolve_all(&labels).unwrap(), resolve_all(&labels).unwrap());
    }

    #[test]
    fn lookup_uses_default_for_absent_optional() {
        let mut desc = AttributeDescriptor::new("speed", AttrKind::Int).optional();
        let resolved = vec![desc.clone()];
        assert!(matches!(
            lookup_attribute(&resolved, &[None], "speed"),
            AttributeLookup::Absent(_)
        ));
        desc.default = Some(AttributeValue::Int(3));
        let resolved = vec![desc];
        assert_eq!(
            lookup_attribute(&resolved, &[None], "speed").value(),
            Some(&AttributeValue::Int(3))
        );
        assert_eq!(
            lookup_attribute(&resolved, &[None], "other"),
            AttributeLookup::Undefined
        );
    }
}
