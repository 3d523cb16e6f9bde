//! Flat Bargmann model of a prequantum line bundle over `C^n`: peak sections,
//! their covariant jets, concentration estimates, nets and colourings.

pub mod estimates;
pub mod net;
pub mod section;

pub use estimates::{
    concentration_check, sum_over_separated_set_bound, tail_majorant, ConcentrationReport, ProbeGrid, SeparatedSumBound,
    TailMajorant,
};
pub use net::{discretize_window, greedy_color, Coloring, Net, SubmanifoldY};
pub use section::{inverse_coherent_jet, CoherentSection, CoherentTerm, Jet, PrequantumModel, C64};
