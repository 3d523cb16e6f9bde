use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::MultiPoly;
use crate::transversality::LinearMapR;

/// A map with a value and a Jacobian at every point.
pub trait SmoothMap: Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    /// Value and `target x source` Jacobian.
    fn jet(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMap {
    pub components: Vec<MultiPoly>,
}

impl PolyMap {
    pub fn new(components: Vec<MultiPoly>) -> Result<Self> {
        let n = components.first().map(|p| p.nvars()).ok_or_else(|| Error::InvalidParameter("empty map".into()))?;
        if components.iter().any(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch("components in different numbers of variables".into()));
        }
        Ok(PolyMap { components })
    }

    pub fn nvars(&self) -> usize {
        self.components[0].nvars()
    }

    /// Complex squaring `z -> z^2` as a map of `R^2`.
    pub fn complex_square() -> Self {
        PolyMap {
            components: vec![
                MultiPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], -1.0)]).unwrap(),
                MultiPoly::new(2, vec![(vec![1, 1], 2.0)]).unwrap(),
            ],
        }
    }
}

impl SmoothMap for PolyMap {
    fn source_dim(&self) -> usize {
        self.nvars()
    }

    fn target_dim(&self) -> usize {
        self.components.len()
    }

    fn jet(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let mut jac = DMatrix::zeros(self.components.len(), x.len());
        let mut val = Vec::with_capacity(self.components.len());
        for (i, p) in self.components.iter().enumerate() {
            let (v, g) = p.eval_grad(x);
            val.push(v);
            for (j, gj) in g.into_iter().enumerate() {
                jac[(i, j)] = gj;
            }
        }
        (val, jac)
    }
}

pub fn eval_jacobian<M: SmoothMap + ?Sized>(f: &M, x: &[f64]) -> Result<(Vec<f64>, LinearMapR)> {
    if x.len() != f.source_dim() {
        return Err(Error::DimensionMismatch(format!("point in R^{}, map on R^{}", x.len(), f.source_dim())));
    }
    let (v, j) = f.jet(x);
    Ok((v, LinearMapR::new(j)))
}

type JetFn = dyn Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>) + Send + Sync;

/// A map known only through a closure returning value and Jacobian on a ball.
pub struct SampledMap {
    source: usize,
    target: usize,
    center: Vec<f64>,
    radius: f64,
    sup_bound: f64,
    f: Box<JetFn>,
}

impl std::fmt::Debug for SampledMap {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("SampledMap")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("center", &self.center)
            .field("radius", &self.radius)
            .finish()
    }
}

impl SampledMap {
    /// Wraps `f` after checking its Jacobian against central differences at
    /// three points of the domain ball (relative tolerance 1e-4).
    pub fn new<F>(source: usize, target: usize, center: Vec<f64>, radius: f64, sup_bound: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>) + Send + Sync + 'static,
    {
        if center.len() != source || !(radius > 0.0) {
            return Err(Error::InvalidParameter("domain ball is malformed".into()));
        }
        let map = SampledMap { source, target, center, radius, sup_bound, f: Box::new(f) };
        for probe in 0..3 {
            let x: Vec<f64> = map
                .center
                .iter()
                .enumerate()
                .map(|(i, c)| c + 0.5 * radius * ((probe * 7 + i * 3) as f64 * 0.91).sin() / (source as f64).sqrt())
                .collect();
            let (v, jac) = (map.f)(&x);
            if v.len() != target || jac.nrows() != target || jac.ncols() != source {
                return Err(Error::DimensionMismatch("closure output has the wrong shape".into()));
            }
            let h = 1e-6 * radius;
            let scale = jac.amax().max(v.iter().fold(0.0f64, |m, t| m.max(t.abs())) / radius).max(1e-300);
            for j in 0..source {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[j] += h;
                xm[j] -= h;
                let (vp, _) = (map.f)(&xp);
                let (vm, _) = (map.f)(&xm);
                for i in 0..target {
                    let fd = (vp[i] - vm[i]) / (2.0 * h);
                    if (fd - jac[(i, j)]).abs() > 1e-4 * scale {
                        return Err(Error::Contract(format!(
                            "Jacobian entry ({i},{j}) disagrees with finite differences: {} vs {fd}",
                            jac[(i, j)]
                        )));
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
}

impl SmoothMap for SampledMap {
    fn source_dim(&self) -> usize {
        self.source
    }

    fn target_dim(&self) -> usize {
        self.target
    }

    fn jet(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_of_quadratic_map() {
        let f = PolyMap::new(vec![
            MultiPoly::new(2, vec![(vec![2, 0], 1.0)]).unwrap(),
            MultiPoly::new(2, vec![(vec![1, 1], 1.0)]).unwrap(),
        ])
        .unwrap();
        let (v, j) = eval_jacobian(&f, &[1.0, 2.0]).unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        assert_eq!(j.matrix, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 2.0, 1.0]));
        assert!(eval_jacobian(&f, &[1.0]).is_err());
    }

    #[test]
    fn sampled_map_self_test() {
        let good = SampledMap::new(1, 1, vec![0.0], 1.0, 1.0, |x| {
            (vec![x[0].sin()], DMatrix::from_element(1, 1, x[0].cos()))
        });
        assert!(good.is_ok());
        let bad = SampledMap::new(1, 1, vec![0.0], 1.0, 1.0, |x| {
            (vec![x[0].sin()], DMatrix::from_element(1, 1, 2.0 * x[0].cos()))
        });
        assert!(matches!(bad, Err(Error::Contract(_))));
    }
}
