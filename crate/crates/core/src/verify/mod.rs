//! Good-cube screening and identity checks.
//!
//! Every check returns an [`IdentityReport`] holding both sides at each
//! resolution of its schedule. Left sides integrate over the degree of a
//! piecewise-linear boundary image; right sides come from face fluxes of the
//! adjugate or from the derivative decomposition.

mod acpart;
mod good;
mod hypothesis;
mod identity;

pub use acpart::{acpart_grid, acpart_identity, adj_flux_measures, AC_CROSS_CELLS, AC_LINES};
pub use good::{
    face_cover, good_cube, good_cube_scan, image_bounds, screen_cube, slab_masses, FaceReport, Flag, GoodCubeReport,
    COVER_CELLS, COVER_FRACTION, COVER_SAMPLES, MAX_SCAN_DEPTH, SLAB_GROWTH, SLAB_HALVINGS, SLAB_START,
};
pub use hypothesis::{exponent_pairs, hypothesis_check, HypothesisReport, PairCheck};
pub use identity::{
    adj_composite, adj_degree_all, adj_degree_identity, figure_bounds, figure_columns, figure_volume,
    grad_degree_identity, height_composite, interior_figure, inverse_all, inverse_entries, inverse_identity,
    vertical_derivative_mass, Gap, IdentityReport, SINGULAR_TOL, SMOOTH_TOL,
};
