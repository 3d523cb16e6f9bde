//! Polynomial maps: evaluation, near-critical points, elimination,
//! neighbourhood volumes and the search for good regular values.

pub mod criticality;
pub mod elimination;
pub mod good_value;
pub mod map;
pub mod neighborhood;
pub mod poly;
pub mod taylor;

pub use criticality::{constrained_criticality, eps_critical_test, Criticality};
pub use elimination::algebraic_relation;
pub use good_value::{ball_grid, good_regular_value, search_good_value, GoodValue, ValueLandscape};
pub use map::{eval_jacobian, PolyMap, SampledMap, SmoothMap};
pub use neighborhood::{classify, far_point, neighborhood_volume_fraction, NeighborhoodFraction, Proximity};
pub use poly::MultiPoly;
pub use taylor::taylor_order;
