use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{bump_size, mt_along};
use crate::error::{Error, Result};
use crate::model::CoherentSection;
use crate::transversality::{hyperplane_sandwich, Subspace};

const LEVI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviReport {
    /// `MS(∇s|_H)` per probe.
    pub ms_h: Vec<f64>,
    /// `MS(∇s|_{H ∩ JH})` per probe.
    pub ms_levi: Vec<f64>,
    pub max_abs_diff: f64,
    pub max_antilinear: f64,
}

/// Compare the surjectivity of `∇s` on a real hyperplane `H` of `R^{2n}` and
/// on its Levi subspace `H ∩ JH`. Holomorphic sections give equality.
pub fn levi_equality_check(s: &CoherentSection, h: &Subspace, probes: &[Vec<f64>]) -> Result<LeviReport> {
    let n = s.model.n;
    if n < 2 {
        return Err(Error::InvalidParameter("the Levi subspace needs n >= 2".into()));
    }
    if h.ambient_dim() != 2 * n || h.dim() + 1 != 2 * n {
        return Err(Error::DimensionMismatch("Y must have real codimension 1".into()));
    }
    let mut rep = LeviReport { ms_h: Vec::new(), ms_levi: Vec::new(), max_abs_diff: 0.0, max_antilinear: 0.0 };
    for x in probes {
        let sw = hyperplane_sandwich(&s.jet(x).nabla(), h)?;
        rep.ms_h.push(sw.ms_h);
        rep.ms_levi.push(sw.ms_k);
        rep.max_abs_diff = rep.max_abs_diff.max((sw.ms_h - sw.ms_k).abs());
        rep.max_antilinear = rep.max_antilinear.max(sw.antilinear_norm);
    }
    if rep.max_abs_diff >= LEVI_TOL {
        return Err(Error::Contract(format!("Levi and hyperplane moduli differ by {:.3e}", rep.max_abs_diff)));
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquatorReport {
    pub k: u32,
    pub deg_e: i64,
    pub deg_f: i64,
    pub norm_min: f64,
    pub norm_max: f64,
    pub contract_holds: bool,
}

fn winding(values: &[Complex64]) -> i64 {
    let mut total = 0.0;
    for w in values.windows(2) {
        total += (w[1] / w[0]).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Degrees of `E_k = 2^{k/2} z0^a z1^{k-a}` and `F_k = 2^{k/2} z0^{a+1} z1^{k-a-1}`,
/// `a = floor(k/2)`, along the equator `z0 = e^{iθ}/√2, z1 = 1/√2`, by
/// accumulated phase, with their Fubini–Study norms there.
pub fn equator_degree(k: u32) -> Result<EquatorReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let a = k / 2;
    let steps = 64 * (k as usize + 2);
    let scale = 2f64.powf(k as f64 / 2.0);
    let (mut es, mut fs) = (Vec::with_capacity(steps + 1), Vec::with_capacity(steps + 1));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..=steps {
        let theta = 2.0 * PI * i as f64 / steps as f64;
        let z0 = Complex64::from_polar(FRAC_1_SQRT_2, theta);
        let z1 = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let e = z0.powu(a) * z1.powu(k - a) * scale;
        let f = z0.powu(a + 1) * z1.powu(k - a - 1) * scale;
        // |z0|^2 + |z1|^2 = 1 on the equator, so the norm is the modulus.
        for v in [e, f] {
            lo = lo.min(v.norm());
            hi = hi.max(v.norm());
        }
        es.push(e);
        fs.push(f);
    }
    let (deg_e, deg_f) = (winding(&es), winding(&fs));
    let contract_holds = (deg_e - deg_f).abs() == 1 && (lo - 1.0).abs() <= 1e-9 && (hi - 1.0).abs() <= 1e-9;
    Ok(EquatorReport { k, deg_e, deg_f, norm_min: lo, norm_max: hi, contract_holds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterReport {
    pub thetas: Vec<f64>,
    /// Minimum over the probes of the weighted module of `s0 + θ t0`, per `θ`.
    pub minima: Vec<f64>,
    pub bound: f64,
    pub holds: bool,
}

/// Weighted module of the barycentres `s0 + θ t0`, `θ ∈ {0, 0.1, ..., 1}`,
/// against `η/2` when `s0` has module `>= η` and
/// `max(|t0|, k^{-1/2}|∇t0|) <= η/2` on the probes (ambient coordinates).
/// The module is taken along `restrict` when given.
pub fn barycenter_module_bound(
    s0: &CoherentSection,
    t0: &CoherentSection,
    eta: f64,
    probes: &[Vec<f64>],
    restrict: Option<&Subspace>,
) -> Result<BarycenterReport> {
    if s0.model != t0.model {
        return Err(Error::InvalidParameter("sections live on different models".into()));
    }
    let k = s0.model.kf();
    let frame = match restrict {
        Some(s) => s.frame.clone(),
        None => DMatrix::identity(2 * s0.model.n, 2 * s0.model.n),
    };
    let js: Vec<_> = probes.iter().map(|x| s0.jet(x)).collect();
    let jt: Vec<_> = probes.iter().map(|x| t0.jet(x)).collect();
    for (x, j) in probes.iter().zip(&js) {
        let m = mt_along(j, &frame, k)?;
        if m < eta {
            return Err(Error::Precondition(format!("s0 has module {m:.4e} < eta at {x:?}")));
        }
    }
    for (x, j) in probes.iter().zip(&jt) {
        let b = bump_size(j, k);
        if b > eta / 2.0 {
            return Err(Error::Precondition(format!("t0 has size {b:.4e} > eta/2 at {x:?}")));
        }
    }
    let thetas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut minima = Vec::with_capacity(thetas.len());
    for &th in &thetas {
        let mut lo = f64::INFINITY;
        for (a, b) in js.iter().zip(&jt) {
            let mut j = b.clone();
            j.value.iter_mut().for_each(|v| *v *= th);
            j.g *= Complex64::new(th, 0.0);
            let mut sum = a.clone();
            sum.value.iter_mut().zip(&j.value).for_each(|(v, w)| *v += w);
            sum.g += &j.g;
            lo = lo.min(mt_along(&sum, &frame, k)?);
        }
        minima.push(lo);
    }
    let bound = eta / 2.0;
    let holds = minima.iter().all(|&m| m >= bound);
    Ok(BarycenterReport { thetas, minima, bound, holds })
}
