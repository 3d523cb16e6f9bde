use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{control, dist, local_step};
use crate::error::{Error, Result};
use crate::mc::stream_rng;
use crate::model::estimates::random_phase;
use crate::model::{discretize_window, CoherentSection, CoherentTerm, PrequantumModel, SubmanifoldY};
use crate::model::section::to_complex;
use crate::transversality::{op_norm, realify};

/// Lattice sums are truncated beyond this distance (in units of `k^{-1/2}`).
const CUTOFF: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFit {
    /// Least-squares fit `ε / achieved ≈ c0 (1 + t)^{c1}` with `t = log 1/ε`.
    pub c0: f64,
    pub c1: f64,
    /// Integer exponent used for the polynomial.
    pub exponent: u32,
    /// `(ε, ε / achieved)` for every local step of the sweep.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: PrequantumModel,
    /// Bound on `Σ_F |∇^m c_x| / (k^{m/2} e^{-kπ d(·,F)^2/3})` for `k^{-1/2}`-separated `F`.
    pub a: f64,
    /// Bound on the cross-talk of a `D k^{-1/2}`-separated class, relative to `e^{-πD^2/4}`.
    pub c: f64,
    /// `ε / achieved <= P_local(log 1/ε)` for the local step.
    pub p_local: Vec<f64>,
    /// `2 P_local`, so that local steps reach twice the stage target.
    pub p_sched: Vec<f64>,
    pub fit: PFit,
    pub safety: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub safety: f64,
    pub eps_grid: Vec<f64>,
    /// Control levels `max_m |∇^m s| / k^{m/2}` of the random test sections;
    /// `0` is the zero section.
    pub section_scales: Vec<f64>,
    pub n_centers: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            safety: 1.5,
            eps_grid: vec![1e-1, 1e-2, 1e-3, 1e-5, 1e-8, 1e-12],
            section_scales: vec![0.0, 0.5, 1e-3],
            n_centers: 4,
            budget: 300,
            seed: 7,
        }
    }
}

/// `|∇^m c|` (Frobenius, `m = 0, 1, 2`) and the operator norm of `∇c`, for a
/// unit peak at distance `u k^{-1/2}`, divided by `k^{m/2}`.
fn profile(n: usize, u: f64) -> [f64; 4] {
    let model = PrequantumModel { n, k: 1, r: 1 };
    let peak = CoherentSection { model, terms: vec![CoherentTerm { center: to_complex(&vec![0.0; 2 * n]), coeff: vec![1.0.into()] }] };
    let mut x = vec![0.0; 2 * n];
    x[0] = u;
    let jet = peak.jet(&x);
    let f = jet.norms();
    [f[0], f[1], f[2], op_norm(&realify(&jet.g))]
}

/// Points of a lattice of the given spacing within `radius` of the origin.
/// `kind` 0 is the cubic lattice, 1 the triangular one (plane only).
fn lattice(dim: usize, kind: usize, spacing: f64, radius: f64) -> Vec<Vec<f64>> {
    let m = (radius / spacing).ceil() as i64 + 2;
    let basis: Vec<Vec<f64>> = if kind == 1 && dim == 2 {
        vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]
    } else {
        (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    };
    let mut out = Vec::new();
    let mut idx = vec![-m; dim];
    loop {
        let mut p = vec![0.0; dim];
        for (i, c) in idx.iter().enumerate() {
            for j in 0..dim {
                p[j] += spacing * *c as f64 * basis[i][j];
            }
        }
        if p.iter().map(|t| t * t).sum::<f64>().sqrt() <= radius {
            out.push(p);
        }
        let mut i = 0;
        while i < dim && idx[i] == m {
            idx[i] = -m;
            i += 1;
        }
        if i == dim {
            break;
        }
        idx[i] += 1;
    }
    out
}

fn kinds(dim: usize) -> Vec<usize> {
    if dim == 2 {
        vec![0, 1]
    } else {
        vec![0]
    }
}

/// Grid of `per_side^dim` points in `[-h, h]^dim`.
fn cube_grid(dim: usize, h: f64, per_side: usize) -> Vec<Vec<f64>> {
    let total = per_side.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let i = idx % per_side;
                    idx /= per_side;
                    -h + 2.0 * h * i as f64 / (per_side - 1).max(1) as f64
                })
                .collect()
        })
        .collect()
}

/// `max_x max_m Σ_z ρ_m(|x - z|) / e^{-π d(x)^2/3}` over probes, with all
/// lengths in units of `k^{-1/2}`.
pub fn separated_sum_constant(n: usize, centers: &[Vec<f64>], probes: &[Vec<f64>]) -> f64 {
    probes
        .par_iter()
        .map(|x| {
            let mut sums = [0.0f64; 3];
            let mut dmin = f64::INFINITY;
            for z in centers {
                let u = dist(x, z);
                dmin = dmin.min(u);
                if u <= CUTOFF {
                    let p = profile(n, u);
                    for m in 0..3 {
                        sums[m] += p[m];
                    }
                }
            }
            let env = (-PI * dmin * dmin / 3.0).exp();
            sums.iter().fold(0.0f64, |a, s| a.max(s / env))
        })
        .reduce(|| 0.0, f64::max)
}

fn lattice_sum_constant(n: usize, dim: usize) -> f64 {
    let mut best = 0.0f64;
    for kind in kinds(dim) {
        let pts = lattice(dim, kind, 1.0, CUTOFF + 2.0);
        let probes = cube_grid(dim, 0.5, 9);
        best = best.max(separated_sum_constant(n, &pts, &probes));
    }
    best
}

/// `sup_D sup_y Σ_{z ≠ 0} max-part / e^{-πD^2/4}` over `D ∈ [2, 12]`, with `y`
/// in the unit ball around the lattice point at the origin and the lattice of
/// spacing `D`. The value and derivative sums are taken separately.
pub fn crosstalk_constant(n: usize, dim: usize) -> f64 {
    let offsets: Vec<Vec<f64>> =
        cube_grid(dim, 1.0, 9).into_iter().filter(|y| y.iter().map(|t| t * t).sum::<f64>() <= 1.0 + 1e-12).collect();
    let ds: Vec<f64> = (0..=40).map(|i| 2.0 + 0.25 * i as f64).collect();
    ds.par_iter()
        .map(|&d| {
            let mut best = 0.0f64;
            for kind in kinds(dim) {
                let pts: Vec<Vec<f64>> =
                    lattice(dim, kind, d, d + CUTOFF + 1.0).into_iter().filter(|p| p.iter().any(|t| t.abs() > 1e-12)).collect();
                for y in &offsets {
                    let (mut s0, mut s1) = (0.0, 0.0);
                    for z in &pts {
                        let u = dist(y, z);
                        if u <= CUTOFF {
                            let p = profile(n, u);
                            s0 += p[0];
                            s1 += p[3];
                        }
                    }
                    best = best.max(f64::max(s0, s1));
                }
            }
            best / (-PI * d * d / 4.0).exp()
        })
        .reduce(|| 0.0, f64::max)
}

fn binomial_poly(c0: f64, e: u32) -> Vec<f64> {
    let mut out = vec![c0];
    let mut b = c0;
    for i in 1..=e {
        b = b * (e - i + 1) as f64 / i as f64;
        out.push(b);
    }
    out
}

/// Measure `A`, `C` and `P` on the model and window: `A` from lattice sums
/// and the actual net of the window, `C` from lattice cross-talk, and `P`
/// from a sweep of local steps over random sections and precisions. Each is
/// multiplied by the safety factor.
pub fn calibrate(model: PrequantumModel, y: &SubmanifoldY, cfg: &CalibrationConfig) -> Result<Calibration> {
    if !(cfg.safety >= 1.0) || cfg.eps_grid.is_empty() || cfg.n_centers == 0 {
        return Err(Error::InvalidParameter("safety >= 1 and a non-empty sweep are required".into()));
    }
    if y.ambient_dim() != 2 * model.n {
        return Err(Error::DimensionMismatch("window does not match the model".into()));
    }
    let dim = y.dim();
    let sk = model.kf().sqrt();
    let net = discretize_window(y, model.k)?;
    let scaled = |v: &Vec<f64>| v.iter().map(|t| t * sk).collect::<Vec<f64>>();
    let centers: Vec<Vec<f64>> = net.points.iter().map(scaled).collect();
    let probes: Vec<Vec<f64>> = y.grid(net.delta / 8.0).iter().map(scaled).collect();
    let a_raw = lattice_sum_constant(model.n, dim).max(separated_sum_constant(model.n, &centers, &probes));
    let c_raw = crosstalk_constant(model.n, dim);

    let grid: Vec<Vec<f64>> = y.grid(net.delta / 4.0).iter().map(|t| y.point(t)).collect();
    let mut sections = Vec::with_capacity(cfg.section_scales.len());
    for (si, &level) in cfg.section_scales.iter().enumerate() {
        if level == 0.0 {
            sections.push(CoherentSection::zero(model));
            continue;
        }
        let mut srng = stream_rng(cfg.seed, si as u64);
        let terms: Vec<CoherentTerm> = net
            .points
            .iter()
            .map(|t| CoherentTerm { center: to_complex(&y.point(t)), coeff: random_phase(model.r, &mut srng) })
            .collect();
        let raw = CoherentSection::new(model, terms)?;
        let ctl = grid.par_iter().map(|x| control(&raw.jet(x), model.kf())).reduce(|| 0.0, f64::max);
        let factor = level / ctl;
        let terms = raw
            .terms
            .into_iter()
            .map(|t| CoherentTerm { center: t.center, coeff: t.coeff.into_iter().map(|c| c * factor).collect() })
            .collect();
        sections.push(CoherentSection::new(model, terms)?);
    }
    let picks: Vec<usize> = (0..cfg.n_centers).map(|i| i * net.points.len() / cfg.n_centers).collect();
    let mut jobs = Vec::new();
    for si in 0..sections.len() {
        for &p in &picks {
            for &eps in &cfg.eps_grid {
                jobs.push((si, p, eps));
            }
        }
    }
    let samples: Vec<(f64, f64)> = jobs
        .par_iter()
        .enumerate()
        .map(|(j, &(si, p, eps))| {
            let mut rng = stream_rng(cfg.seed, 1000 + j as u64);
            let st = local_step(&sections[si], &net.points[p], 1.0, eps, y, cfg.budget, &mut rng)?;
            Ok((eps, eps / st.achieved))
        })
        .collect::<Result<Vec<_>>>()?;

    // Fit the worst ratio at each precision.
    let worst: Vec<(f64, f64)> = cfg
        .eps_grid
        .iter()
        .map(|&e| (e, samples.iter().filter(|s| s.0 == e).map(|s| s.1).fold(0.0, f64::max)))
        .collect();
    let xs: Vec<f64> = worst.iter().map(|(e, _)| (1.0 + (1.0 / e).ln()).ln()).collect();
    let ys: Vec<f64> = worst.iter().map(|(_, r)| r.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c0_fit = (my - c1 * mx).exp();
    let exponent = ((c1 - 0.1).ceil().max(1.0)) as u32;
    let c0 = cfg.safety
        * worst
            .iter()
            .map(|(e, r)| r / (1.0 + (1.0 / e).ln()).powi(exponent as i32))
            .fold(0.0, f64::max);
    let p_local = binomial_poly(c0, exponent);
    let p_sched = p_local.iter().map(|c| 2.0 * c).collect();
    Ok(Calibration {
        model,
        a: cfg.safety * a_raw,
        c: cfg.safety * c_raw,
        p_local,
        p_sched,
        fit: PFit { c0: c0_fit, c1, exponent, samples },
        safety: cfg.safety,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_matches_closed_forms() {
        let u: f64 = 0.7;
        let p = profile(1, u);
        let g = (-PI * u * u / 2.0).exp();
        assert!((p[0] - g).abs() < 1e-14);
        assert!((p[3] - PI * u * g).abs() < 1e-13);
        assert!((p[1] - 2f64.sqrt() * PI * u * g).abs() < 1e-13);
    }

    #[test]
    fn lattice_sums_are_moderate() {
        let a = lattice_sum_constant(1, 1);
        assert!(a > 1.0 && a < 50.0, "{a}");
        let c = crosstalk_constant(1, 1);
        assert!(c > 0.0 && c.is_finite());
    }

    #[test]
    fn binomial() {
        assert_eq!(binomial_poly(2.0, 2), vec![2.0, 4.0, 2.0]);
    }
}
