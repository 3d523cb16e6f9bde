use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral_geometry::vitushkin::uniform_in_ball;
use crate::polynomial::map::SmoothMap;
use crate::transversality::{ms_matrix, Subspace};

const BLOCK: usize = 64;
const PASSES: usize = 5;

/// Values of a map on a grid together with the (weighted) surjectivity term,
/// which does not depend on the regular value being searched for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueLandscape {
    pub values: Vec<Vec<f64>>,
    /// `b * MS(df(x)|A)` at each grid point.
    pub ms_terms: Vec<f64>,
    pub value_weight: f64,
}

impl ValueLandscape {
    pub fn build<M: SmoothMap + ?Sized>(
        f: &M,
        grid: &[Vec<f64>],
        weights: (f64, f64),
        restrict: Option<&Subspace>,
    ) -> Result<Self> {
        if let Some(s) = restrict {
            if s.ambient_dim() != f.source_dim() {
                return Err(Error::DimensionMismatch("restriction subspace does not match the source".into()));
            }
        }
        let rows: Vec<Result<(Vec<f64>, f64)>> = grid
            .par_iter()
            .map(|x| {
                if x.len() != f.source_dim() {
                    return Err(Error::DimensionMismatch("grid point has the wrong dimension".into()));
                }
                let (v, j) = f.jet(x);
                let j = match restrict {
                    Some(s) => j * &s.frame,
                    None => j,
                };
                Ok((v, weights.1 * ms_matrix(&j)?))
            })
            .collect();
        let (values, ms_terms) = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Ok(ValueLandscape { values, ms_terms, value_weight: weights.0 })
    }

    pub fn target_dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    /// Grid minimum of `max(a |f(x) - y|, b MS(df(x)|A))`.
    pub fn module(&self, y: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.ms_terms)
            .map(|(v, &m)| {
                let d: f64 = v.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (self.value_weight * d).max(m)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodValue {
    pub y: Vec<f64>,
    pub module: f64,
    pub evaluations: usize,
}

/// Best-so-far search over `B(0, eps)`. Candidates come in a fixed stream
/// (the origin, then blocks of uniform draws each followed by a coordinate
/// refinement burst around the incumbent), truncated after `budget`
/// evaluations, so a larger budget never does worse. Ties keep the earliest
/// candidate.
pub fn search_good_value<R: Rng + ?Sized>(land: &ValueLandscape, eps: f64, budget: usize, rng: &mut R) -> Result<GoodValue> {
    if !(eps > 0.0) || budget == 0 {
        return Err(Error::InvalidParameter("eps and budget must be positive".into()));
    }
    if land.values.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let p = land.target_dim();
    let mut best = GoodValue { y: vec![0.0; p], module: land.module(&vec![0.0; p]), evaluations: 1 };
    let mut used = 1;
    let clamp = |mut y: Vec<f64>| {
        let r = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r > eps {
            y.iter_mut().for_each(|t| *t *= eps / r);
        }
        y
    };
    while used < budget {
        let take = BLOCK.min(budget - used);
        let cands: Vec<Vec<f64>> = (0..take).map(|_| uniform_in_ball(p, eps, rng)).collect();
        let scores: Vec<f64> = cands.par_iter().map(|y| land.module(y)).collect();
        for (y, s) in cands.into_iter().zip(scores) {
            if s > best.module {
                best.y = y;
                best.module = s;
            }
        }
        used += take;
        let mut step = eps / 4.0;
        'passes: for _ in 0..PASSES {
            for i in 0..p {
                for sign in [1.0, -1.0] {
                    if used >= budget {
                        break 'passes;
                    }
                    let mut y = best.y.clone();
                    y[i] += sign * step;
                    let y = clamp(y);
                    let s = land.module(&y);
                    used += 1;
                    if s > best.module {
                        best.y = y;
                        best.module = s;
                    }
                }
            }
            step *= 0.5;
        }
    }
    best.evaluations = used;
    if best.module > 0.0 {
        Ok(best)
    } else {
        Err(Error::SearchFailed("no candidate has a positive module".into()))
    }
}

/// Search `y` in `B(0, eps)` maximising the grid minimum of
/// `max(a |f(x) - y|, b MS(df(x)|A))`.
pub fn good_regular_value<M: SmoothMap + ?Sized, R: Rng + ?Sized>(
    f: &M,
    eps: f64,
    grid: &[Vec<f64>],
    weights: (f64, f64),
    restrict: Option<&Subspace>,
    budget: usize,
    rng: &mut R,
) -> Result<GoodValue> {
    let land = ValueLandscape::build(f, grid, weights, restrict)?;
    search_good_value(&land, eps, budget, rng)
}

/// Uniform grid of `[-r, r]^d` with `m` points per side, clipped to the ball of radius `r`.
pub fn ball_grid(d: usize, r: f64, m: usize) -> Vec<Vec<f64>> {
    let coord = |i: usize| if m == 1 { 0.0 } else { -r + 2.0 * r * i as f64 / (m - 1) as f64 };
    let total = m.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let c = coord(idx % m);
                    idx /= m;
                    c
                })
                .collect::<Vec<f64>>()
        })
        .filter(|x| x.iter().map(|t| t * t).sum::<f64>() <= r * r * (1.0 + 1e-12))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;
    use crate::polynomial::PolyMap;

    #[test]
    fn squaring_has_positive_module() {
        let f = PolyMap::complex_square();
        let grid = ball_grid(2, 1.0, 21);
        let mut rng = stream_rng(1, 0);
        let g = good_regular_value(&f, 0.1, &grid, (1.0, 1.0), None, 300, &mut rng).unwrap();
        assert!(g.module > 0.0);
        assert!(g.y.iter().map(|t| t * t).sum::<f64>().sqrt() <= 0.1 + 1e-12);
    }

    #[test]
    fn budget_monotone() {
        let f = PolyMap::complex_square();
        let grid = ball_grid(2, 1.0, 15);
        let land = ValueLandscape::build(&f, &grid, (1.0, 1.0), None).unwrap();
        let mut last = 0.0;
        for budget in [1, 10, 64, 65, 80, 200, 500] {
            let g = search_good_value(&land, 0.1, budget, &mut stream_rng(2, 0)).unwrap_or(GoodValue {
                y: vec![],
                module: 0.0,
                evaluations: 0,
            });
            assert!(g.module >= last);
            last = g.module;
        }
    }
}
