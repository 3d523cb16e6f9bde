use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::calibration::Calibration;
use super::local::{combine, grid_jets};
use super::schedule::eval_poly;
use super::{dist, local_grid, local_step, mt_along, LocalStep};
use crate::error::{Error, Result};
use crate::mc::stream_rng;
use crate::model::section::to_complex;
use crate::model::{CoherentSection, CoherentTerm, SubmanifoldY, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteredOutcome {
    /// `t = Σ α_z c_z`, one term per class point that needed a step.
    pub t: CoherentSection,
    /// `None` where the margin `2η` already held and no step was taken.
    pub steps: Vec<Option<LocalStep>>,
    /// Grid minimum of the weighted module of `s + t` on `Y ∩ V_k(F)`.
    pub min_module: f64,
    pub probes: usize,
}

/// Check the separation of a class and the two conditions linking `ε`, `η`
/// and `D` for the calibrated `P` and `C`.
pub fn check_stage_conditions(class: &[Vec<f64>], delta: f64, d: f64, eps: f64, eta: f64, cal: &Calibration) -> Result<()> {
    for (i, a) in class.iter().enumerate() {
        for b in &class[i + 1..] {
            if dist(a, b) < d * delta * (1.0 - 1e-12) {
                return Err(Error::Precondition(format!("class points {a:?} and {b:?} are closer than D k^-1/2")));
            }
        }
    }
    if !(eps > 0.0 && eta > 0.0) {
        return Err(Error::InvalidParameter("eps and eta must be positive".into()));
    }
    let p = eval_poly(&cal.p_sched, (1.0 / eps).ln());
    if eps / eta < p * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("eps/eta = {:.4e} is below P(log 1/eps) = {p:.4e}", eps / eta)));
    }
    let cross = cal.c * (-PI * d * d / 4.0).exp();
    if eta / eps < cross * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("eta/eps = {:.4e} is below C e^(-pi D^2/4) = {cross:.4e}", eta / eps)));
    }
    Ok(())
}

/// Perturb `s` near every point of a colour class (given in `Y` coordinates)
/// so that `s + t` has weighted module at least `η` on `Y ∩ V_k(F)`.
///
/// Each point gets an independent local step aiming at `2η`, skipped when the
/// margin already holds; the stream of point `i` is `(seed, i)`.
#[allow(clippy::too_many_arguments)]
pub fn scattered_step(
    s: &CoherentSection,
    class: &[Vec<f64>],
    d: f64,
    eps: f64,
    eta: f64,
    y: &SubmanifoldY,
    cal: &Calibration,
    budget: usize,
    seed: u64,
) -> Result<ScatteredOutcome> {
    let model = s.model;
    let k = model.kf();
    let delta = model.scale();
    check_stage_conditions(class, delta, d, eps, eta, cal)?;
    let frame = y.frame_matrix();
    let zero = vec![C64::new(0.0, 0.0); model.r];
    let steps: Vec<Option<LocalStep>> = class
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let pts: Vec<Vec<f64>> = local_grid(y, z, delta, delta / 4.0).iter().map(|t| y.point(t)).collect();
            let jets = grid_jets(s, &y.point(z), &pts)?;
            let mut current = f64::INFINITY;
            for (js, jc) in &jets {
                current = current.min(mt_along(&combine(js, jc, &zero), &frame, k)?);
            }
            if current >= 2.0 * eta {
                return Ok(None);
            }
            let mut rng = stream_rng(seed, i as u64);
            local_step(s, z, 1.0, eps, y, budget, &mut rng).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    let terms: Vec<CoherentTerm> = class
        .iter()
        .zip(&steps)
        .filter_map(|(z, st)| st.as_ref().map(|st| CoherentTerm { center: to_complex(&y.point(z)), coeff: st.alpha.clone() }))
        .collect();
    let t = CoherentSection::new(model, terms)?;
    let total = s.plus(&t);
    let mut probes = 0;
    let mut min_module = f64::INFINITY;
    for z in class {
        let pts = local_grid(y, z, delta, delta / 4.0);
        probes += pts.len();
        let vals = pts
            .par_iter()
            .map(|p| mt_along(&total.jet(&y.point(p)), &frame, k))
            .collect::<Result<Vec<f64>>>()?;
        for (p, v) in pts.iter().zip(vals) {
            if v < eta {
                return Err(Error::Contract(format!("module {v:.4e} < eta = {eta:.4e} at probe {p:?}")));
            }
            min_module = min_module.min(v);
        }
    }
    Ok(ScatteredOutcome { t, steps, min_module, probes })
}
