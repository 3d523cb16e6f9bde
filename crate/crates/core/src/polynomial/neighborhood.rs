use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral_geometry::vitushkin::uniform_in_ball;
use crate::mc::{chunked_collect, derive_seed};
use crate::polynomial::MultiPoly;

const NEWTON_ITERS: usize = 20;
const MAX_DEPTH: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proximity {
    Near,
    Far,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodFraction {
    /// Certified-near points over all samples.
    pub fraction: f64,
    pub stderr: f64,
    pub near: usize,
    pub far: usize,
    pub undecided: usize,
}

impl NeighborhoodFraction {
    /// Upper end of the estimate if every undecided point were near.
    pub fn upper(&self) -> f64 {
        (self.near + self.undecided) as f64 / (self.near + self.far + self.undecided) as f64
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// Decide whether `dist(x, {h = 0}) <= eps`.
///
/// Near is certified by a sign change of `h` inside `B(x, eps)` or by a
/// Newton projection landing within `eps`. Far is certified by the global
/// Lipschitz bound on `B(0, |x| + eps)` or, failing that, by excluding every
/// box of an adaptive cover of `B(x, eps)` with a second-order Taylor bound.
pub fn classify(h: &MultiPoly, x: &[f64], eps: f64) -> Proximity {
    let (v, g) = h.eval_grad(x);
    if v == 0.0 {
        return Proximity::Near;
    }
    let gn = norm(&g);
    if gn > 0.0 {
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eps * v.signum() * b / gn).collect();
        let hy = h.eval(&y);
        if hy == 0.0 || hy.signum() != v.signum() {
            return Proximity::Near;
        }
        let mut z = x.to_vec();
        for _ in 0..NEWTON_ITERS {
            let (vz, gz) = h.eval_grad(&z);
            let g2: f64 = gz.iter().map(|t| t * t).sum();
            if g2 == 0.0 {
                break;
            }
            for (zi, gi) in z.iter_mut().zip(&gz) {
                *zi -= vz * gi / g2;
            }
            let d: f64 = z.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d > 2.0 * eps {
                break;
            }
            let (vn, gn2) = h.eval_grad(&z);
            if vn.abs() <= 1e-13 * norm(&gn2).max(1e-300) && d <= eps {
                return Proximity::Near;
            }
        }
    }
    let rho = norm(x) + eps;
    if v.abs() >= h.lipschitz_bound(rho) * eps {
        return Proximity::Far;
    }
    if box_excludes(h, x, x, eps, eps, 0) {
        Proximity::Far
    } else {
        Proximity::Undecided
    }
}

fn box_excludes(h: &MultiPoly, x: &[f64], c: &[f64], w: f64, eps: f64, depth: u32) -> bool {
    let n = c.len();
    let gap: f64 = c.iter().zip(x).map(|(ci, xi)| ((ci - xi).abs() - w).max(0.0).powi(2)).sum::<f64>().sqrt();
    if gap > eps {
        return true;
    }
    let (v, g) = h.eval_grad(c);
    let r = w * (n as f64).sqrt();
    let m2 = h.hessian_bound(norm(c) + r);
    if v.abs() > norm(&g) * r + 0.5 * m2 * r * r {
        return true;
    }
    if depth >= MAX_DEPTH {
        return false;
    }
    let hw = 0.5 * w;
    (0..1usize << n).all(|mask| {
        let child: Vec<f64> = (0..n).map(|i| c[i] + if mask >> i & 1 == 1 { hw } else { -hw }).collect();
        box_excludes(h, x, &child, hw, eps, depth + 1)
    })
}

/// Fraction of the unit ball lying within `eps` of `{h = 0}`.
pub fn neighborhood_volume_fraction<R: Rng + ?Sized>(
    h: &MultiPoly,
    eps: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<NeighborhoodFraction> {
    if h.is_zero() {
        return Err(Error::Degenerate("h vanishes identically".into()));
    }
    if !(eps > 0.0) || n_samples == 0 {
        return Err(Error::InvalidParameter("eps and n_samples must be positive".into()));
    }
    let n = h.nvars();
    let seed = derive_seed(rng);
    let labels = chunked_collect(seed, n_samples, |r| classify(h, &uniform_in_ball(n, 1.0, r), eps));
    let near = labels.iter().filter(|&&l| l == Proximity::Near).count();
    let far = labels.iter().filter(|&&l| l == Proximity::Far).count();
    let undecided = n_samples - near - far;
    let p = near as f64 / n_samples as f64;
    Ok(NeighborhoodFraction {
        fraction: p,
        stderr: (p * (1.0 - p) / n_samples as f64).sqrt(),
        near,
        far,
        undecided,
    })
}

/// A point of `B(0, eps)` with a certified lower bound on its distance to
/// `{h = 0}`, chosen as the best of `budget` uniform candidates.
pub fn far_point<R: Rng + ?Sized>(h: &MultiPoly, eps: f64, budget: usize, rng: &mut R) -> Result<(Vec<f64>, f64)> {
    if h.is_zero() {
        return Err(Error::Degenerate("h vanishes identically".into()));
    }
    let l = h.lipschitz_bound(2.0 * eps);
    let n = h.nvars();
    let mut best = (vec![0.0; n], 0.0);
    for _ in 0..budget {
        let x = uniform_in_ball(n, eps, rng);
        let cert = if l == 0.0 { eps } else { (h.eval(&x).abs() / l).min(eps) };
        if cert > best.1 {
            best = (x, cert);
        }
    }
    if best.1 > 0.0 {
        Ok(best)
    } else {
        Err(Error::SearchFailed("no candidate with a positive certified distance".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    #[test]
    fn strip_fraction() {
        let mut rng = stream_rng(1, 0);
        let h = MultiPoly::var(2, 0);
        let eps: f64 = 0.1;
        let est = neighborhood_volume_fraction(&h, eps, 40_000, &mut rng).unwrap();
        let exact = 2.0 / std::f64::consts::PI * (eps * (1.0 - eps * eps).sqrt() + eps.asin());
        assert_eq!(est.undecided, 0);
        assert!((est.fraction - exact).abs() < 4.0 * est.stderr, "{} vs {exact}", est.fraction);
    }

    #[test]
    fn classification_of_circle() {
        let h = MultiPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0), (vec![0, 0], -0.25)]).unwrap();
        assert_eq!(classify(&h, &[0.55, 0.0], 0.1), Proximity::Near);
        assert_eq!(classify(&h, &[0.0, 0.0], 0.1), Proximity::Far);
        assert_eq!(classify(&h, &[0.62, 0.0], 0.1), Proximity::Far);
    }

    #[test]
    fn far_point_for_a_line() {
        let mut rng = stream_rng(2, 0);
        let (x, d) = far_point(&MultiPoly::var(2, 0), 1.0, 2000, &mut rng).unwrap();
        assert!(d > 0.9 && d <= x[0].abs() + 1e-12);
    }
}
