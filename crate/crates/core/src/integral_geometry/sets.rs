use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::MultiPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetMode {
    /// Common zero set of all polynomials.
    ZeroSet,
    /// Union of the zero sets.
    Union,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSet {
    pub polys: Vec<MultiPoly>,
    pub mode: SetMode,
}

impl ImplicitSet {
    pub fn new(polys: Vec<MultiPoly>, mode: SetMode) -> Result<Self> {
        let n = polys.first().map(|p| p.nvars()).ok_or_else(|| Error::InvalidParameter("no polynomials".into()))?;
        if polys.iter().any(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch("polynomials in different numbers of variables".into()));
        }
        Ok(ImplicitSet { polys, mode })
    }

    pub fn hypersurface(p: MultiPoly) -> Self {
        ImplicitSet { polys: vec![p], mode: SetMode::ZeroSet }
    }

    pub fn ambient_dim(&self) -> usize {
        self.polys[0].nvars()
    }

    pub fn translate(&self, c: &[f64]) -> ImplicitSet {
        ImplicitSet { polys: self.polys.iter().map(|p| p.translate(c)).collect(), mode: self.mode }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let mut vals = self.polys.iter().map(|p| p.eval(x).abs() <= tol);
        match self.mode {
            SetMode::ZeroSet => vals.all(|b| b),
            SetMode::Union => vals.any(|b| b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Ball { center, radius }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Closed obstacle sets used as the relative part of a variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Empty,
    ZeroSet(MultiPoly),
    Sphere(Ball),
    ClosedBall(Ball),
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    /// Complement of a union of open balls with disjoint interiors.
    OutsideOpenBalls(Vec<Ball>),
    Union(Vec<Region>),
}

impl Region {
    /// Distance from `x` to the region (first-order estimate for zero sets).
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Region::Empty => f64::INFINITY,
            Region::ZeroSet(p) => {
                let (v, g) = p.eval_grad(x);
                let gn = g.iter().map(|t| t * t).sum::<f64>().sqrt();
                if v == 0.0 {
                    0.0
                } else if gn == 0.0 {
                    f64::INFINITY
                } else {
                    v.abs() / gn
                }
            }
            Region::Sphere(b) => (dist(x, &b.center) - b.radius).abs(),
            Region::ClosedBall(b) => (dist(x, &b.center) - b.radius).max(0.0),
            Region::Annulus { center, inner, outer } => {
                let r = dist(x, center);
                (inner - r).max(r - outer).max(0.0)
            }
            Region::OutsideOpenBalls(balls) => {
                balls.iter().map(|b| b.radius - dist(x, &b.center)).fold(0.0, f64::max)
            }
            Region::Union(parts) => parts.iter().map(|r| r.distance(x)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }

    pub fn translate(&self, c: &[f64]) -> Region {
        let shift = |v: &[f64]| v.iter().zip(c).map(|(a, b)| a - b).collect::<Vec<_>>();
        let tb = |b: &Ball| Ball { center: shift(&b.center), radius: b.radius };
        match self {
            Region::Empty => Region::Empty,
            Region::ZeroSet(p) => Region::ZeroSet(p.translate(c)),
            Region::Sphere(b) => Region::Sphere(tb(b)),
            Region::ClosedBall(b) => Region::ClosedBall(tb(b)),
            Region::Annulus { center, inner, outer } => {
                Region::Annulus { center: shift(center), inner: *inner, outer: *outer }
            }
            Region::OutsideOpenBalls(bs) => Region::OutsideOpenBalls(bs.iter().map(tb).collect()),
            Region::Union(parts) => Region::Union(parts.iter().map(|r| r.translate(c)).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_distances() {
        let s = Region::Sphere(Ball::new(vec![0.0, 0.0], 1.0));
        assert!((s.distance(&[0.5, 0.0]) - 0.5).abs() < 1e-15);
        let out = Region::OutsideOpenBalls(vec![Ball::new(vec![0.0, 0.0], 1.0)]);
        assert!((out.distance(&[0.25, 0.0]) - 0.75).abs() < 1e-15);
        assert_eq!(out.distance(&[2.0, 0.0]), 0.0);
        let ann = Region::Annulus { center: vec![0.0, 0.0], inner: 1.5, outer: 2.5 };
        assert!(!ann.contains(&[1.0, 0.0], 1e-9));
        assert!(ann.contains(&[2.0, 0.0], 1e-9));
        let moved = s.translate(&[1.0, 0.0]);
        assert!((moved.distance(&[-1.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
