use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{control, local_grid, mt_along};
use crate::error::{Error, Result};
use crate::model::section::{to_complex, to_real};
use crate::model::{CoherentSection, Jet, SubmanifoldY, C64};
use crate::polynomial::{search_good_value, ValueLandscape};
use crate::transversality::{ms_matrix, realify};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStep {
    pub alpha: Vec<C64>,
    /// Grid minimum of the weighted module of `(s + α c_{y0})|_Y`.
    pub achieved: f64,
    /// Grid minimum of the module of `f + α` on the landscape.
    pub landscape_module: f64,
    pub grid_points: usize,
    pub evaluations: usize,
    /// `max_m |∇^m s| / k^{m/2}` on the grid.
    pub control: f64,
}

/// Jets of `s` and of the unit peak at `y0` on the grid points.
pub(crate) fn grid_jets(s: &CoherentSection, center: &[f64], pts: &[Vec<f64>]) -> Result<Vec<(Jet, Jet)>> {
    let scalar = crate::model::PrequantumModel::new(s.model.n, s.model.k, 1)?;
    let peak = CoherentSection::single(scalar, to_complex(center), vec![C64::new(1.0, 0.0)])?;
    let r = s.model.r;
    Ok(pts
        .par_iter()
        .map(|x| {
            let js = s.jet(x);
            let jc = peak.jet(x);
            // Broadcast the scalar peak to every component.
            let mut jc_r = Jet::zero(s.model.n, r);
            for a in 0..r {
                jc_r.value[a] = jc.value[0];
                jc_r.g.row_mut(a).copy_from(&jc.g.row(0));
                jc_r.h[a] = jc.h[0].clone();
                jc_r.mixed[a] = jc.mixed[0];
            }
            (js, jc_r)
        })
        .collect())
}

/// Jet of `s + α ⊗ c` from the jets of `s` and of the broadcast peak `c`.
pub(crate) fn combine(js: &Jet, jc: &Jet, alpha: &[C64]) -> Jet {
    let mut out = js.clone();
    for (a, al) in alpha.iter().enumerate() {
        out.value[a] += al * jc.value[a];
        for j in 0..out.g.ncols() {
            out.g[(a, j)] += al * jc.g[(a, j)];
        }
        out.h[a] += &jc.h[a] * *al;
        out.mixed[a] += al * jc.mixed[a];
    }
    out
}

/// Perturb `s` by a multiple of the peak section at `y0` (given in `Y`
/// coordinates) so that its weighted module along `Y` is bounded below on
/// `Y ∩ B(y0, R k^{-1/2})`.
///
/// The search runs on `f = s / c_{y0}`, whose derivative is
/// `(∇s + kπ (z̄ - ȳ0) s) / c_{y0}`, for a value `y` in `B(0, ε)` of good
/// transversality; the returned coefficient is `α = -y`.
pub fn local_step<R: Rng + ?Sized>(
    s: &CoherentSection,
    y0: &[f64],
    r_ball: f64,
    eps: f64,
    y: &SubmanifoldY,
    budget: usize,
    rng: &mut R,
) -> Result<LocalStep> {
    if !(eps > 0.0) || !(r_ball > 0.0) {
        return Err(Error::InvalidParameter("eps and R must be positive".into()));
    }
    if y.ambient_dim() != 2 * s.model.n || y0.len() != y.dim() {
        return Err(Error::DimensionMismatch("window does not match the model".into()));
    }
    let k = s.model.kf();
    let delta = s.model.scale();
    let pts_t = local_grid(y, y0, r_ball * delta, delta / 4.0);
    if pts_t.is_empty() {
        return Err(Error::InvalidParameter("no grid point of the window near y0".into()));
    }
    let pts: Vec<Vec<f64>> = pts_t.iter().map(|t| y.point(t)).collect();
    let center = y.point(y0);
    let jets = grid_jets(s, &center, &pts)?;
    let ctl = jets.iter().map(|(js, _)| control(js, k)).fold(0.0, f64::max);
    if ctl > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!("section is not (1,2)-controlled: {ctl:.4}")));
    }
    let frame = y.frame_matrix();
    let z0 = to_complex(&center);
    let kp = k * PI;
    let rows: Vec<Result<(Vec<f64>, f64)>> = jets
        .par_iter()
        .zip(&pts)
        .map(|((js, jc), x)| {
            let psi = jc.value[0];
            let z = to_complex(x);
            let f: Vec<C64> = js.value.iter().map(|v| v / psi).collect();
            let mut df = js.g.clone();
            for a in 0..df.nrows() {
                for j in 0..df.ncols() {
                    df[(a, j)] = (df[(a, j)] + kp * (z[j].conj() - z0[j].conj()) * js.value[a]) / psi;
                }
            }
            let ms = ms_matrix(&(realify(&df) * &frame))?;
            Ok((to_real(&f), ms / k.sqrt()))
        })
        .collect();
    let (values, ms_terms) = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let land = ValueLandscape { values, ms_terms, value_weight: 1.0 };
    let best = search_good_value(&land, eps, budget, rng)?;
    let alpha: Vec<C64> = to_complex(&best.y).into_iter().map(|c| -c).collect();
    let achieved = jets
        .par_iter()
        .map(|(js, jc)| mt_along(&combine(js, jc, &alpha), &frame, k))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(LocalStep {
        alpha,
        achieved,
        landscape_module: best.module,
        grid_points: pts.len(),
        evaluations: best.evaluations,
        control: ctl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;
    use crate::model::PrequantumModel;

    #[test]
    fn zero_section_gets_gaussian_floor() {
        let model = PrequantumModel::new(1, 256, 1).unwrap();
        let y = SubmanifoldY::real_interval(1, -1.0, 1.0).unwrap();
        let s = CoherentSection::zero(model);
        let eps = 1e-3;
        let st = local_step(&s, &[0.0], 1.0, eps, &y, 300, &mut stream_rng(3, 0)).unwrap();
        let a = st.alpha[0].norm();
        assert!(a <= eps * (1.0 + 1e-12));
        assert!(st.achieved >= a * (-PI / 2.0).exp() * (1.0 - 1e-12));
        assert!(st.achieved >= 0.9 * eps * (-PI / 2.0).exp());
    }

    #[test]
    fn transversal_section_needs_little() {
        let model = PrequantumModel::new(1, 256, 1).unwrap();
        let y = SubmanifoldY::real_interval(1, -1.0, 1.0).unwrap();
        let s = CoherentSection::single(model, vec![C64::new(0.0, 0.0)], vec![C64::new(0.15, 0.0)]).unwrap();
        let eps = 1e-3;
        let st = local_step(&s, &[0.0], 1.0, eps, &y, 200, &mut stream_rng(4, 0)).unwrap();
        // 0.15 e^{-π/2} minus a perturbation of size at most eps.
        assert!(st.achieved >= 0.15 * (-PI / 2.0).exp() - eps);
    }
}
