//! The self-avoiding-walk parafermionic observable on finite pieces of the
//! hexagonal lattice, by exhaustive enumeration.
//!
//! A domain is a connected union of hexagonal cells. Its vertices carry
//! every incident lattice edge; edges leaving the vertex set become
//! half-edges whose mid-edges form the boundary. Walks start on a boundary
//! mid-edge, hop vertex to mid-edge, and never revisit a vertex.

mod domain;
mod field;
mod walks;

pub use domain::{
    build_domain, embed, flower_cells, hexagon_cells, parse_cells, rhombus_cells, Cell, HexDomain, Key, MidEdge, Vertex,
};
pub use field::{
    count_walks, critical_x, discrete_observable, local_relation_residual, max_relation_residual, DiscreteField,
    WalkCounts,
};
pub use walks::{
    enumerate_saws, secant_turning, spiral_fixture, turning_number, visit_saws, visit_saws_from_step, SAWPath,
    WalkView, TURNING_TOL,
};
