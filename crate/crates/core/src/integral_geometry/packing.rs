use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral_geometry::sets::{ImplicitSet, SetMode};
use crate::integral_geometry::vitushkin::uniform_in_ball;
use crate::polynomial::MultiPoly;

const ROUND: usize = 1000;
const MAX_PROBES: usize = 20_000_000;
const TARGET_REJECTION: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub points: Vec<Vec<f64>>,
    /// Rejection rate over the last round of probes.
    pub rejection_rate: f64,
    pub probes: usize,
    /// True when the rejection target was reached before the probe cap.
    pub certified: bool,
    /// No probe ever landed on the set.
    pub empty: bool,
}

/// Gauss-Newton projection onto the common zero set of `polys`.
pub fn project_onto(polys: &[MultiPoly], x0: &[f64]) -> Option<Vec<f64>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    for _ in 0..40 {
        let m = polys.len();
        let mut jac = DMatrix::zeros(m, n);
        let mut h = DVector::zeros(m);
        let mut scale = 0.0f64;
        for (i, p) in polys.iter().enumerate() {
            let (v, g) = p.eval_grad(&x);
            h[i] = v;
            for j in 0..n {
                jac[(i, j)] = g[j];
            }
            scale = scale.max(g.iter().map(|t| t * t).sum::<f64>().sqrt());
        }
        if scale == 0.0 {
            return None;
        }
        if h.amax() <= 1e-13 * scale {
            return Some(x);
        }
        let gram = &jac * jac.transpose();
        let step = jac.transpose() * gram.lu().solve(&h)?;
        for j in 0..n {
            x[j] -= step[j];
        }
        if !x.iter().all(|t| t.is_finite()) {
            return None;
        }
    }
    None
}

/// Projection onto `A`: for a union, the nearest of the component projections.
pub fn project_onto_set(a: &ImplicitSet, x0: &[f64]) -> Option<Vec<f64>> {
    match a.mode {
        SetMode::ZeroSet => project_onto(&a.polys, x0),
        SetMode::Union => a
            .polys
            .iter()
            .filter_map(|p| project_onto(std::slice::from_ref(p), x0))
            .min_by(|u, v| dist2(u, x0).total_cmp(&dist2(v, x0))),
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct SpatialHash {
    cell: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl SpatialHash {
    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|t| (t / self.cell).floor() as i64).collect()
    }

    fn near(&self, x: &[f64], pts: &[Vec<f64>], eps: f64) -> bool {
        let k = self.key(x);
        let n = k.len();
        let mut off = vec![-1i64; n];
        loop {
            let key: Vec<i64> = k.iter().zip(&off).map(|(a, b)| a + b).collect();
            if let Some(ids) = self.map.get(&key) {
                if ids.iter().any(|&i| dist2(&pts[i], x) < eps * eps) {
                    return true;
                }
            }
            let mut i = 0;
            while i < n && off[i] == 1 {
                off[i] = -1;
                i += 1;
            }
            if i == n {
                return false;
            }
            off[i] += 1;
        }
    }
}

/// Greedy maximal `eps`-separated subset of `A ∩ B(0, radius)`. Probes are
/// uniform points of the ball projected onto `A`; the run stops once a round
/// of probes is rejected at a rate of at least 99.9%.
pub fn maximal_separated_subset<R: Rng + ?Sized>(
    a: &ImplicitSet,
    eps: f64,
    radius: f64,
    rng: &mut R,
) -> Result<Packing> {
    if !(eps > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidParameter("eps and radius must be positive".into()));
    }
    let n = a.ambient_dim();
    let mut hash = SpatialHash { cell: eps, map: HashMap::new() };
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let (mut probes, mut attempts) = (0usize, 0usize);
    loop {
        let (mut landed, mut accepted) = (0usize, 0usize);
        while landed < ROUND {
            attempts += 1;
            if landed == 0 && attempts > 50 * ROUND && pts.is_empty() && probes == 0 {
                return Ok(Packing { points: pts, rejection_rate: 1.0, probes, certified: false, empty: true });
            }
            let x0 = uniform_in_ball(n, radius, rng);
            let Some(x) = project_onto_set(a, &x0) else { continue };
            if dist2(&x, &vec![0.0; n]) > radius * radius {
                continue;
            }
            landed += 1;
            probes += 1;
            if !hash.near(&x, &pts, eps) {
                let key = hash.key(&x);
                hash.map.entry(key).or_default().push(pts.len());
                pts.push(x);
                accepted += 1;
            }
        }
        let rate = 1.0 - accepted as f64 / landed as f64;
        if rate >= TARGET_REJECTION || probes >= MAX_PROBES {
            return Ok(Packing { points: pts, rejection_rate: rate, probes, certified: rate >= TARGET_REJECTION, empty: false });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    fn unit_circle() -> ImplicitSet {
        ImplicitSet::hypersurface(
            MultiPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0), (vec![0, 0], -1.0)]).unwrap(),
        )
    }

    #[test]
    fn huge_eps_gives_one_point() {
        let mut rng = stream_rng(1, 0);
        let p = maximal_separated_subset(&unit_circle(), 2.1, 1.0 + 1e-9, &mut rng).unwrap();
        assert_eq!(p.points.len(), 1);
    }

    #[test]
    fn circle_packing_bounds() {
        let mut rng = stream_rng(2, 0);
        let p = maximal_separated_subset(&unit_circle(), 0.1, 1.0 + 1e-9, &mut rng).unwrap();
        assert!(p.certified);
        assert!((40..=63).contains(&p.points.len()), "{}", p.points.len());
        for (i, u) in p.points.iter().enumerate() {
            for v in &p.points[i + 1..] {
                assert!(dist2(u, v).sqrt() >= 0.1);
            }
        }
    }

    #[test]
    fn empty_set_flagged() {
        let mut rng = stream_rng(3, 0);
        let a = ImplicitSet::hypersurface(
            MultiPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0), (vec![0, 0], 1.0)]).unwrap(),
        );
        let p = maximal_separated_subset(&a, 0.1, 1.0, &mut rng).unwrap();
        assert!(p.empty && p.points.is_empty());
    }
}
