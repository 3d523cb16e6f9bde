//! Integral geometry on affine Grassmannians: Haar sampling, Crofton volumes,
//! relative Vitushkin variations and maximal separated subsets.

pub mod crofton;
pub mod grassmann;
pub mod packing;
pub mod sets;
pub mod slice;
pub mod vitushkin;

pub use crofton::{crofton_constant, crofton_constant_against, crofton_constant_exact, crofton_volume, CroftonResult, CroftonShape};
pub use grassmann::{sample_affine_hitting_ball, sample_grassmannian, AffineSlice, GrassmannSample};
pub use packing::{maximal_separated_subset, Packing};
pub use sets::{Ball, ImplicitSet, Region, SetMode};
pub use slice::{slice_components, SliceCount};
pub use vitushkin::{additivity_residual, lower_bound_statistic, vitushkin_variation, Additivity, LowerBoundRow};
