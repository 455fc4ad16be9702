//! Domains, grids, analytic maps and sampled fields.
//!
//! Maps are [`VectorMap`]s from `R^N` to `R^M` carrying, besides an evaluator,
//! the absolutely continuous part of their Jacobian and any declared singular
//! derivative terms. Finite differences are only ever taken after
//! [`mollify`].

mod grid;
mod map;
mod sampled;
mod slab;

pub use grid::{Aabb, Box3, Grid, Grid3, Rect};
pub use map::{
    kappa, kappa_axes, AnalyticMap, Evaluator, Jacobian, Map2, ScalarMap, SingularTerm, Smoothness,
    SupportTag, Surface, VectorMap,
};
pub use sampled::{
    gradient_fd, mollifier_weight, mollify, sample_map, slice_field, JacobianField, SampledField,
};
pub use slab::{slab_variation, slab_variation_slice, SlabVariation};
