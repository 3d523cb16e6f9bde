use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::calibration::Calibration;
use super::schedule::{build_schedule, Schedule};
use super::{bump_size, control, mt_along, scattered_step};
use crate::error::{Error, Result};
use crate::mc::stream_rng;
use crate::model::net::PointHash;
use crate::model::{discretize_window, CoherentSection, Jet, PrequantumModel, SubmanifoldY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalizeConfig {
    pub eps: f64,
    pub budget: usize,
    pub seed: u64,
    pub d_start: f64,
    pub max_doublings: usize,
}

impl Default for GlobalizeConfig {
    fn default() -> Self {
        GlobalizeConfig { eps: 0.1, budget: 300, seed: 1, d_start: 2.0, max_doublings: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    /// Stage index, starting at 1.
    pub stage: usize,
    pub class_size: usize,
    pub eps: f64,
    pub eta: f64,
    pub local_steps: usize,
    pub skipped: usize,
    /// Grid minimum of the module on `Y ∩ V_k(F_i)`.
    pub min_on_class: f64,
    /// Grid minimum of the module on `Y ∩ V_k(G_i)`.
    pub min_on_union: f64,
    /// Smallest `MT(s + t_{i}) - MT(s + t_{i-1}) + max(|u|, k^{-1/2}|∇u|)` over all probes.
    pub chain_min_slack: f64,
    /// Largest `max(|u|, k^{-1/2}|∇u|)` over the probes.
    pub bump_max: f64,
    /// `A ε_i`.
    pub bump_bound: f64,
    /// Largest `|α| / ε_i` in the class.
    pub coeff_ratio: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: String,
    pub model: PrequantumModel,
    pub window: SubmanifoldY,
    pub eps: f64,
    pub seed: u64,
    pub calibration: Calibration,
    pub d: f64,
    pub d_iterations: usize,
    pub n_colors: usize,
    pub net_points: usize,
    pub covering_radius: f64,
    pub schedule: Schedule,
    pub stages: Vec<StageReport>,
    pub final_eta: f64,
    /// Minimum of the weighted module of `(s + t)|_Y` over the verification grid.
    pub final_min: f64,
    /// All claims hold on the window grid of this pitch.
    pub grid_pitch: f64,
    pub n_probes: usize,
    /// Probes of the final section where the derivative term exceeds the value term.
    pub ms_active_probes: usize,
    /// `max_m |∇^m s| / k^{m/2}` on the grid.
    pub s_control: f64,
    /// `max_m |∇^m t| / k^{m/2}` on the grid.
    pub t_control: f64,
    pub t: CoherentSection,
    pub wall_ms: f64,
}

fn at_stage(e: Error, stage: usize) -> Error {
    match e {
        Error::Contract(m) => Error::Contract(format!("stage {stage}: {m}")),
        Error::Precondition(m) => Error::Precondition(format!("stage {stage}: {m}")),
        other => other,
    }
}

/// Make `s + t` transversal along the window `Y` with the stage schedule, one
/// colour class at a time, verifying every stage on the window grid of pitch
/// `k^{-1/2}/4`.
///
/// `D` starts at `d_start` and doubles until `η_i / ε_i >= C e^{-πD^2/4}` holds
/// for the whole schedule, whose length depends on `D`.
pub fn globalize(s: &CoherentSection, y: &SubmanifoldY, cal: &Calibration, cfg: &GlobalizeConfig) -> Result<RunReport> {
    let start = Instant::now();
    let model = s.model;
    if y.ambient_dim() != 2 * model.n {
        return Err(Error::DimensionMismatch("window does not match the model".into()));
    }
    if cal.model != model {
        return Err(Error::InvalidParameter("calibration was made for another model".into()));
    }
    let k = model.kf();
    let delta = model.scale();
    let frame = y.frame_matrix();
    let pitch = delta / 4.0;
    let probes_t = y.grid(pitch);
    let probes: Vec<Vec<f64>> = probes_t.iter().map(|t| y.point(t)).collect();
    let mut jets: Vec<Jet> = probes.par_iter().map(|x| s.jet(x)).collect();
    let s_control = jets.iter().map(|j| control(j, k)).fold(0.0, f64::max);
    if s_control + cfg.eps > 1.0 {
        return Err(Error::Precondition(format!("K + eps = {:.4} exceeds 1", s_control + cfg.eps)));
    }

    let net = discretize_window(y, model.k)?;
    let mut chosen = None;
    let mut d = cfg.d_start;
    for it in 0..=cfg.max_doublings {
        let col = net.color(d);
        let sched = build_schedule(cfg.eps, cal.a, &cal.p_sched, cal.c, d, col.n_colors)?;
        if sched.crosstalk_ok() {
            chosen = Some((col, sched, it));
            break;
        }
        d *= 2.0;
    }
    let (col, sched, d_iterations) = chosen.ok_or_else(|| {
        Error::SearchFailed(format!("no D up to {d} satisfies the cross-talk condition for its schedule"))
    })?;

    let mut hash = PointHash::new(delta);
    for (i, p) in net.points.iter().enumerate() {
        hash.insert(p, i);
    }
    let reach = delta * (1.0 + 1e-12);
    let first_stage: Vec<usize> = probes_t
        .iter()
        .map(|t| hash.within(t, reach, &net.points).iter().map(|&i| col.colors[i]).min().unwrap_or(usize::MAX))
        .collect();

    let mut mts = jets.par_iter().map(|j| mt_along(j, &frame, k)).collect::<Result<Vec<f64>>>()?;
    let mut current = s.clone();
    let mut t = CoherentSection::zero(model);
    let mut stages = Vec::with_capacity(col.n_colors);
    for i in 0..col.n_colors {
        let stage_start = Instant::now();
        let stage = i + 1;
        let (eps_i, eta_i) = (sched.eps[i], sched.eta[i]);
        let class: Vec<Vec<f64>> = col.class(i).into_iter().map(|j| net.points[j].clone()).collect();
        let seed = stream_rng(cfg.seed, i as u64).next_u64();
        let out = scattered_step(&current, &class, sched.d, eps_i, eta_i, y, cal, cfg.budget, seed)
            .map_err(|e| at_stage(e, stage))?;
        let u = &out.t;
        let coeff_ratio = u.max_coeff() / eps_i;
        if coeff_ratio > 1.0 + 1e-12 {
            return Err(Error::Contract(format!("stage {stage}: coefficient exceeds eps_i")));
        }
        let u_jets: Vec<Jet> = probes.par_iter().map(|x| u.jet(x)).collect();
        let bumps: Vec<f64> = u_jets.iter().map(|j| bump_size(j, k)).collect();
        let bump_max = bumps.iter().copied().fold(0.0, f64::max);
        let bump_bound = cal.a * eps_i;
        if bump_max > bump_bound * (1.0 + 1e-12) {
            return Err(Error::Contract(format!("stage {stage}: bump size {bump_max:.4e} exceeds A eps_i = {bump_bound:.4e}")));
        }
        jets.par_iter_mut().zip(&u_jets).for_each(|(j, uj)| j.add_assign(uj));
        let new_mts = jets.par_iter().map(|j| mt_along(j, &frame, k)).collect::<Result<Vec<f64>>>()?;
        let mut chain_min_slack = f64::INFINITY;
        let mut min_on_union = f64::INFINITY;
        for p in 0..probes.len() {
            let slack = new_mts[p] - (mts[p] - bumps[p]);
            if slack < -1e-12 * (1.0 + mts[p]) {
                return Err(Error::Contract(format!("stage {stage}: perturbation chain fails at probe {:?}", probes_t[p])));
            }
            chain_min_slack = chain_min_slack.min(slack);
            if first_stage[p] <= i {
                if new_mts[p] < eta_i {
                    return Err(Error::Contract(format!(
                        "stage {stage}: module {:.4e} < eta = {eta_i:.4e} at probe {:?}",
                        new_mts[p], probes_t[p]
                    )));
                }
                min_on_union = min_on_union.min(new_mts[p]);
            }
        }
        mts = new_mts;
        current = current.plus(u);
        t = t.plus(u);
        let skipped = out.steps.iter().filter(|s| s.is_none()).count();
        stages.push(StageReport {
            stage,
            class_size: class.len(),
            eps: eps_i,
            eta: eta_i,
            local_steps: out.steps.len() - skipped,
            skipped,
            min_on_class: out.min_module,
            min_on_union,
            chain_min_slack,
            bump_max,
            bump_bound,
            coeff_ratio,
            wall_ms: stage_start.elapsed().as_secs_f64() * 1e3,
        });
    }

    let final_eta = *sched.eta.last().unwrap_or(&f64::INFINITY);
    let final_min = mts.iter().copied().fold(f64::INFINITY, f64::min);
    if !(final_min >= final_eta) {
        return Err(Error::Contract(format!("final module {final_min:.4e} < eta_nD = {final_eta:.4e}")));
    }
    let t_control = probes.par_iter().map(|x| control(&t.jet(x), k)).reduce(|| 0.0, f64::max);
    if t_control > cfg.eps * (1.0 + 1e-12) {
        return Err(Error::Contract(format!("perturbation control {t_control:.4e} exceeds eps")));
    }
    let ms_active_probes = jets
        .iter()
        .zip(&mts)
        .filter(|(j, &m)| j.value_norm() < m)
        .count();
    Ok(RunReport {
        status: "success".into(),
        model,
        window: y.clone(),
        eps: cfg.eps,
        seed: cfg.seed,
        calibration: cal.clone(),
        d: sched.d,
        d_iterations,
        n_colors: col.n_colors,
        net_points: net.points.len(),
        covering_radius: net.covering_radius,
        schedule: sched,
        stages,
        final_eta,
        final_min,
        grid_pitch: pitch,
        n_probes: probes.len(),
        ms_active_probes,
        s_control,
        t_control,
        t,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
