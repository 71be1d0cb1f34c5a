//! Reference programs shipped with the crate.

/// Six-point industrial plant: emergency exit, crossing, warehouse, infirmary
/// and two assembly lines, with one quick choice and a decision-tree guide.
pub const PLANT_IR: &str = include_str!("../corpus/plant.qrmap-ir");

/// Parses [`PLANT_IR`].
pub fn plant() -> crate::Program {
    crate::ir::parse_program(PLANT_IR).expect("bundled plant program is valid")
}
