//! Discretisation and solution of the surface integral equation
//! `∫ √g M̃11 ΔM̃12 dx = M̃12` at fixed `q̃`.

pub mod oracle;
pub mod panels;
pub mod periodic;
pub mod window;

pub use oracle::{flat_delta_closed_form, flat_oracle_delta};
pub use panels::{PanelPolicy, Panels, PANEL_ORDER};
pub use periodic::{BlochSample, BlochSettings, BlochSolver, CellGrid, DEFAULT_FLAT_PERIOD};
pub use window::{
    assemble, build_grid, required_nodes, solve_delta_m12, KernelSystem, LineGrid, DEFAULT_HALF_WIDTH,
    DEFAULT_NODES, MIN_NODES_PER_WAVELENGTH, RESIDUAL_TOLERANCE,
};
