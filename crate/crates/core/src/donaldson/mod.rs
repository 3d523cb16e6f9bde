//! Iterative transversalization on the flat model: the stage schedule, the
//! local and scattered perturbations, colour-class globalization and the
//! consequence checks.
//!
//! The coordinate straightening and the comparison between the almost complex
//! structure and its linearization are identities here, since the model is
//! flat and integrable.

pub mod calibration;
pub mod consequences;
pub mod globalize;
pub mod local;
pub mod scattered;
pub mod schedule;

pub use calibration::{calibrate, crosstalk_constant, separated_sum_constant, Calibration, CalibrationConfig, PFit};
pub use consequences::{
    barycenter_module_bound, equator_degree, levi_equality_check, BarycenterReport, EquatorReport, LeviReport,
};
pub use globalize::{globalize, GlobalizeConfig, RunReport, StageReport};
pub use local::{local_step, LocalStep};
pub use scattered::{scattered_step, ScatteredOutcome};
pub use schedule::{build_schedule, eval_poly, minimal_exponent, schedule_domination_check, Schedule};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{Jet, SubmanifoldY};
use crate::transversality::{ms_matrix, op_norm, realify};

/// Weighted module `max(|s|, k^{-1/2} MS(∇s|_Y))` from a jet.
pub fn mt_along(jet: &Jet, frame: &DMatrix<f64>, k: f64) -> Result<f64> {
    let ms = ms_matrix(&(realify(&jet.g) * frame))?;
    Ok(jet.value_norm().max(ms / k.sqrt()))
}

/// `max(|u|, k^{-1/2} |∇u|)` with the operator norm.
pub fn bump_size(jet: &Jet, k: f64) -> f64 {
    jet.value_norm().max(op_norm(&realify(&jet.g)) / k.sqrt())
}

/// `max_m |∇^m s| / k^{m/2}` for `m <= 2`.
pub fn control(jet: &Jet, k: f64) -> f64 {
    let n = jet.norms();
    n[0].max(n[1] / k.sqrt()).max(n[2] / k)
}

/// Window grid points of the given pitch (anchored at `lo`, as in
/// [`SubmanifoldY::grid`]) within distance `radius` of `t0`.
pub fn local_grid(y: &SubmanifoldY, t0: &[f64], radius: f64, pitch: f64) -> Vec<Vec<f64>> {
    let d = y.dim();
    let mut ranges = Vec::with_capacity(d);
    for j in 0..d {
        let count = ((y.hi[j] - y.lo[j]) / pitch + 1e-9).floor() as i64 + 1;
        let a = ((t0[j] - radius - y.lo[j]) / pitch - 1e-9).ceil().max(0.0) as i64;
        let b = (((t0[j] + radius - y.lo[j]) / pitch + 1e-9).floor() as i64).min(count - 1);
        if a > b {
            return Vec::new();
        }
        ranges.push((a, b));
    }
    let tol = radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let t: Vec<f64> = idx.iter().enumerate().map(|(j, &i)| y.lo[j] + pitch * i as f64).collect();
        if dist(&t, t0) <= tol {
            out.push(t);
        }
        let mut j = 0;
        while j < d && idx[j] == ranges[j].1 {
            idx[j] = ranges[j].0;
            j += 1;
        }
        if j == d {
            break;
        }
        idx[j] += 1;
    }
    out
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_grid_is_a_subset_of_the_window_grid() {
        let y = SubmanifoldY::real_square(-0.5, 0.5).unwrap();
        let pitch = 0.125 / 4.0;
        let full = y.grid(pitch);
        let t0 = [0.1, -0.49];
        let local = local_grid(&y, &t0, 0.125, pitch);
        let brute: Vec<&Vec<f64>> = full.iter().filter(|t| dist(t, &t0) <= 0.125 * (1.0 + 1e-12)).collect();
        assert_eq!(local.len(), brute.len());
        for t in &local {
            assert!(full.iter().any(|f| dist(f, t) < 1e-15));
        }
    }
}
