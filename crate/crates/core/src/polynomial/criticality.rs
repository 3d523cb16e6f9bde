use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::map::{eval_jacobian, SmoothMap};
use crate::polynomial::{MultiPoly, PolyMap};
use crate::transversality::ms;

/// `x` is `eps`-critical for `f` when `MS(df(x)) <= eps`.
pub fn eps_critical_test<M: SmoothMap + ?Sized>(f: &M, x: &[f64], eps: f64) -> Result<bool> {
    let (_, j) = eval_jacobian(f, x)?;
    Ok(ms(&j)? <= eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criticality {
    /// `det(J_G J_G^T)`.
    pub d1: f64,
    /// Gram determinant of the rows of `J_G` and `grad f`.
    pub d2: f64,
    /// `d2 - eps^2 d1`; non-positive at `eps`-critical points.
    pub g: f64,
    pub critical: bool,
}

/// Gram-determinant test for `eps`-criticality of `f` restricted to the
/// fibre `{G(., t) = 0}`. Polynomials are in the variables `(x, t)` and
/// derivatives are taken in `x` only.
pub fn constrained_criticality(f: &MultiPoly, g: &PolyMap, x: &[f64], t: &[f64], eps: f64) -> Result<Criticality> {
    let nv = x.len() + t.len();
    if f.nvars() != nv || g.nvars() != nv {
        return Err(Error::DimensionMismatch(format!("polynomials must have {nv} variables")));
    }
    let pt: Vec<f64> = x.iter().chain(t).copied().collect();
    let q = g.components.len();
    let m = x.len();
    let mut rows = DMatrix::zeros(q + 1, m);
    for (i, p) in g.components.iter().enumerate() {
        let (_, gr) = p.eval_grad(&pt);
        for j in 0..m {
            rows[(i, j)] = gr[j];
        }
    }
    let (_, gf) = f.eval_grad(&pt);
    for j in 0..m {
        rows[(q, j)] = gf[j];
    }
    let jg = rows.rows(0, q).into_owned();
    let d1 = if q == 0 { 1.0 } else { (&jg * jg.transpose()).determinant() };
    let d2 = (&rows * rows.transpose()).determinant();
    let gv = d2 - eps * eps * d1;
    Ok(Criticality { d1, d2, g: gv, critical: gv <= 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_constraint_example() {
        let g = PolyMap::new(vec![MultiPoly::var(2, 0)]).unwrap();
        let f = MultiPoly::var(2, 1);
        let c = constrained_criticality(&f, &g, &[0.3, -0.2], &[], 0.25).unwrap();
        assert_abs_diff_eq!(c.d1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.d2, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.g, 1.0 - 0.0625, epsilon = 1e-15);
        assert!(!c.critical);
    }

    #[test]
    fn critical_points_of_squaring() {
        let f = PolyMap::complex_square();
        assert!(eps_critical_test(&f, &[0.0, 0.0], 0.0).unwrap());
        assert!(eps_critical_test(&f, &[0.01, 0.0], 0.05).unwrap());
        assert!(!eps_critical_test(&f, &[0.5, 0.0], 0.05).unwrap());
    }
}
