use rand::Rng;
use serde_json::{json, Value};

use qtlab_core::donaldson::{
    calibrate, equator_degree, globalize, levi_equality_check, minimal_exponent, build_schedule,
    schedule_domination_check, CalibrationConfig, GlobalizeConfig,
};
use qtlab_core::integral_geometry::grassmann::gaussian_matrix;
use qtlab_core::integral_geometry::{
    crofton_volume, maximal_separated_subset, vitushkin_variation, Ball, CroftonShape, ImplicitSet, Region, SetMode,
};
use qtlab_core::mc::stream_rng;
use qtlab_core::model::{
    concentration_check, CoherentSection, CoherentTerm, PrequantumModel, ProbeGrid, SubmanifoldY, C64,
};
use qtlab_core::polynomial::{ball_grid, good_regular_value, MultiPoly, PolyMap};
use qtlab_core::transversality::Subspace;

use crate::params::Params;
use crate::Failure;

pub const REGISTERED: [&str; 10] =
    ["crofton", "vitushkin", "packing", "goodvalue", "concentration", "schedule", "globalize", "levi", "equator", "calibrate"];

/// Experiments that draw random numbers and therefore need an explicit seed.
pub fn needs_seed(name: &str) -> bool {
    !matches!(name, "concentration" | "schedule" | "equator")
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub report: Value,
}

fn exact(estimate: f64, n_samples: u64, report: Value) -> Outcome {
    Outcome { estimate, stderr: 0.0, n_samples, report }
}

pub fn run(name: &str, p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    match name {
        "crofton" => crofton(p, seed),
        "vitushkin" => vitushkin(p, seed),
        "packing" => packing(p, seed),
        "goodvalue" => goodvalue(p, seed),
        "concentration" => concentration(p),
        "schedule" => schedule(p),
        "globalize" => run_globalize(p, seed),
        "levi" => levi(p, seed),
        "equator" => equator(p),
        "calibrate" => run_calibrate(p, seed),
        other => Err(Failure::Usage(format!("unknown experiment `{other}`; registered: {}", REGISTERED.join(", ")))),
    }
}

fn sphere(n: usize, r: f64, c: &[f64]) -> MultiPoly {
    let mut terms = Vec::new();
    let mut c0 = -r * r;
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        terms.push((e.clone(), 1.0));
        e[i] = 1;
        terms.push((e, -2.0 * c[i]));
        c0 += c[i] * c[i];
    }
    terms.push((vec![0; n], c0));
    MultiPoly::new(n, terms).expect("well-formed polynomial")
}

/// Named plane curves with the radius of a ball containing them.
fn named_set(p: &mut Params) -> Result<(ImplicitSet, f64), Failure> {
    let name = p.string("shape", "circle")?;
    Ok(match name.as_str() {
        "circle" => {
            let r = p.f64("radius", 1.0)?;
            (ImplicitSet::hypersurface(sphere(2, r, &[0.0, 0.0])), r * (1.0 + 1e-9))
        }
        "circles" => {
            let set = ImplicitSet::new(
                vec![sphere(2, 0.3, &[-0.8, 0.0]), sphere(2, 0.2, &[0.1, 0.5]), sphere(2, 0.25, &[0.4, -0.5])],
                SetMode::Union,
            )?;
            (set, 1.5)
        }
        "line" => (ImplicitSet::hypersurface(MultiPoly::linear(0.1, &[0.6, -0.8])), 1.0),
        "conic" => {
            let q = MultiPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], 2.0), (vec![0, 0], -0.5)])?;
            (ImplicitSet::hypersurface(q), 1.0)
        }
        "quartic" => {
            let q = MultiPoly::new(2, vec![(vec![4, 0], 1.0), (vec![0, 4], 1.0), (vec![0, 0], -1.0)])?;
            (ImplicitSet::hypersurface(q), 1.2)
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown shape `{other}`; expected circle, circles, line, conic or quartic"
            )))
        }
    })
}

fn crofton(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let name = p.string("shape", "circle")?;
    let n_samples = p.usize("n_samples", 100_000)?;
    let (shape, d, n) = match name.as_str() {
        "circle" => {
            let r = p.f64("radius", 1.0)?;
            (CroftonShape::Implicit { set: ImplicitSet::hypersurface(sphere(2, r, &[0.0, 0.0])), radius: 1.1 * r }, 1, 2)
        }
        "sphere" => {
            let r = p.f64("radius", 1.0)?;
            (CroftonShape::Implicit { set: ImplicitSet::hypersurface(sphere(3, r, &[0.0; 3])), radius: 1.1 * r }, 2, 3)
        }
        "segment" => {
            let a = p.f64s("a", &[0.0, 0.0])?;
            let b = p.f64s("b", &[1.0, 0.0])?;
            let n = a.len();
            (CroftonShape::Segment { a, b }, 1, n)
        }
        "triangle" => {
            let a = p.f64s("a", &[0.0, 0.0, 0.0])?;
            let b = p.f64s("b", &[1.0, 0.0, 0.0])?;
            let c = p.f64s("c", &[0.0, 1.0, 0.0])?;
            let n = a.len();
            (CroftonShape::Triangle { a, b, c }, 2, n)
        }
        other => {
            return Err(Failure::Usage(format!("unknown shape `{other}`; expected circle, sphere, segment or triangle")))
        }
    };
    let res = crofton_volume(&shape, d, n, n_samples, &mut stream_rng(seed, 0))?;
    Ok(Outcome {
        estimate: res.volume.mean,
        stderr: res.volume.stderr,
        n_samples: res.volume.n_samples as u64,
        report: serde_json::to_value(res).unwrap(),
    })
}

fn vitushkin(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let (set, bound) = named_set(p)?;
    let d = p.usize("d", 1)?;
    let radius = p.f64("ball", bound)?;
    let n_samples = p.usize("n_samples", 20_000)?;
    let region = match p.string("region", "empty")?.as_str() {
        "empty" => Region::Empty,
        "ball" => {
            let c = p.f64s("region_center", &[0.0, 0.0])?;
            let r = p.f64("region_radius", 0.5)?;
            Region::ClosedBall(Ball::new(c, r))
        }
        other => return Err(Failure::Usage(format!("unknown region `{other}`; expected empty or ball"))),
    };
    let est = vitushkin_variation(&set, &region, d, 2, radius, n_samples, &mut stream_rng(seed, 0))?;
    Ok(Outcome {
        estimate: est.mean,
        stderr: est.stderr,
        n_samples: est.n_samples as u64,
        report: serde_json::to_value(est).unwrap(),
    })
}

fn packing(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let (set, bound) = named_set(p)?;
    let eps = p.f64("eps", 0.05)?;
    let pk = maximal_separated_subset(&set, eps, bound, &mut stream_rng(seed, 0))?;
    if !pk.certified {
        return Err(Failure::Contract(format!("packing at eps = {eps} is not certified maximal")));
    }
    let card = pk.points.len();
    Ok(exact(
        card as f64,
        pk.probes as u64,
        json!({ "cardinality": card, "scaled": card as f64 * eps, "rejection_rate": pk.rejection_rate, "points": pk.points }),
    ))
}

fn goodvalue(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let eps = p.f64("eps", 0.1)?;
    let m = p.usize("grid", 21)?;
    let radius = p.f64("radius", 1.0)?;
    let budget = p.usize("budget", 300)?;
    let grid = ball_grid(2, radius, m);
    let g = good_regular_value(&PolyMap::complex_square(), eps, &grid, (1.0, 1.0), None, budget, &mut stream_rng(seed, 0))?;
    Ok(exact(g.module, g.evaluations as u64, serde_json::to_value(g).unwrap()))
}

fn concentration(p: &mut Params) -> Result<Outcome, Failure> {
    let n = p.usize("n", 1)?;
    let ks = p.u32s("ks", &[16, 64, 256])?;
    let m_max = p.usize("m_max", 2)?;
    let inv = p.f64("inverse_radius", 1.0)?;
    let grid = ProbeGrid { seed: p.usize("probe_seed", 1)? as u64, ..ProbeGrid::default() };
    let rep = concentration_check(n, &ks, m_max, inv, &grid)?;
    let spread = rep.rows.iter().map(|r| r.spread).fold(0.0, f64::max);
    if spread > 2.0 {
        return Err(Failure::Contract(format!("envelope spread {spread:.4} exceeds 2 across k")));
    }
    if rep.dbar_max >= 1e-10 || rep.dbar_derivative_max >= 1e-10 {
        return Err(Failure::Contract(format!("dbar of a holomorphic section is {:.3e}", rep.dbar_max.max(rep.dbar_derivative_max))));
    }
    Ok(exact(spread, ks.len() as u64, serde_json::to_value(rep).unwrap()))
}

fn schedule(p: &mut Params) -> Result<Outcome, Failure> {
    let eps = p.f64("eps", 0.1)?;
    let a = p.f64("a", 2.0)?;
    let poly = p.f64s("p", &[1.0, 1.0])?;
    let c = p.f64("c", 1.0)?;
    let d = p.f64("d", 4.0)?;
    let n_d = p.usize("n_d", 30)?;
    let margin = p.f64("margin", 1.0)?;
    let sched = build_schedule(eps, a, &poly, c, d, n_d)?;
    let pe = minimal_exponent(&sched.eps).max(1e-3) * (1.0 + 1e-9);
    let n0 = schedule_domination_check(&sched.eps, pe, pe + margin)?;
    Ok(exact(n0 as f64, sched.len() as u64, json!({ "schedule": sched, "p": pe, "q": pe + margin, "n0": n0 })))
}

fn model_and_window(p: &mut Params) -> Result<(PrequantumModel, SubmanifoldY), Failure> {
    let n = p.usize("n", 1)?;
    let (k_def, lo_def, hi_def) = if n == 1 { (256, -1.0, 1.0) } else { (64, -0.5, 0.5) };
    let k = p.u32("k", k_def)?;
    let lo = p.f64("lo", lo_def)?;
    let hi = p.f64("hi", hi_def)?;
    let model = PrequantumModel::new(n, k, 1)?;
    let y = match n {
        1 => SubmanifoldY::real_interval(1, lo, hi)?,
        2 => SubmanifoldY::real_square(lo, hi)?,
        _ => return Err(Failure::Usage("windows are available for n = 1 (interval) and n = 2 (square)".into())),
    };
    Ok((model, y))
}

fn calibration_config(p: &mut Params, seed: u64) -> Result<CalibrationConfig, Failure> {
    let def = CalibrationConfig::default();
    Ok(CalibrationConfig { safety: p.f64("safety", def.safety)?, seed, ..def })
}

fn run_calibrate(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let (model, y) = model_and_window(p)?;
    let cal = calibrate(model, &y, &calibration_config(p, seed)?)?;
    Ok(exact(cal.a, cal.fit.samples.len() as u64, serde_json::to_value(cal).unwrap()))
}

fn run_globalize(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let (model, y) = model_and_window(p)?;
    let ccfg = calibration_config(p, seed)?;
    let def = GlobalizeConfig::default();
    let cfg = GlobalizeConfig {
        eps: p.f64("eps", def.eps)?,
        budget: p.usize("budget", def.budget)?,
        d_start: p.f64("d_start", def.d_start)?,
        max_doublings: p.usize("max_doublings", def.max_doublings)?,
        seed,
    };
    let cal = calibrate(model, &y, &ccfg)?;
    let rep = globalize(&CoherentSection::zero(model), &y, &cal, &cfg)?;
    Ok(exact(rep.final_min, rep.n_probes as u64, serde_json::to_value(rep).unwrap()))
}

fn levi(p: &mut Params, seed: u64) -> Result<Outcome, Failure> {
    let k = p.u32("k", 16)?;
    let n = p.usize("n", 2)?;
    let n_terms = p.usize("terms", 5)?;
    let n_probes = p.usize("probes", 10)?;
    let model = PrequantumModel::new(n, k, 1)?;
    let mut rng = stream_rng(seed, 0);
    let terms = (0..n_terms)
        .map(|_| CoherentTerm {
            center: (0..n).map(|_| C64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))).collect(),
            coeff: vec![C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))],
        })
        .collect();
    let s = CoherentSection::new(model, terms)?;
    let h = Subspace::complement_of(&gaussian_matrix(2 * n, 1, &mut rng));
    let probes: Vec<Vec<f64>> = (0..n_probes).map(|_| (0..2 * n).map(|_| rng.random_range(-0.4..0.4)).collect()).collect();
    let rep = levi_equality_check(&s, &h, &probes)?;
    Ok(exact(rep.max_abs_diff, n_probes as u64, serde_json::to_value(rep).unwrap()))
}

fn equator(p: &mut Params) -> Result<Outcome, Failure> {
    let k = p.u32("k", 5)?;
    let r = equator_degree(k)?;
    let diff = (r.deg_e - r.deg_f).abs();
    if !r.contract_holds {
        return Err(Failure::Contract(format!("degrees {} and {} do not differ by one", r.deg_e, r.deg_f)));
    }
    Ok(exact(
        diff as f64,
        1,
        json!({ "k": k, "deg_E": r.deg_e, "deg_F": r.deg_f, "abs_diff": diff, "norm_min": r.norm_min, "norm_max": r.norm_max }),
    ))
}
