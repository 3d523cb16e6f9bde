use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::polynomial::MultiPoly;

/// Exponent vectors in `nvars` variables of total degree at most `deg`.
pub fn monomials(nvars: usize, deg: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, left: usize, budget: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=budget {
            prefix.push(e);
            rec(prefix, left - 1, budget - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), nvars, deg, &mut out);
    out
}

fn monomial_row(exps: &[Vec<u32>], y: &[f64]) -> Vec<f64> {
    exps.iter()
        .map(|e| e.iter().zip(y).fold(1.0, |acc, (&a, &v)| acc * v.powi(a as i32)))
        .collect()
}

/// A nonzero polynomial `h` in `m + 1` variables of degree at most
/// `degree_bound` with `h(f_0(x), ..., f_m(x)) = 0`, found as the numerical
/// null vector of a monomial evaluation matrix at random points of `[-1, 1]^m`.
/// Coefficients are normalised to unit maximum.
pub fn algebraic_relation<R: Rng + ?Sized>(polys: &[MultiPoly], degree_bound: u32, rng: &mut R) -> Result<MultiPoly> {
    let m = polys.first().map(|p| p.nvars()).ok_or_else(|| Error::InvalidParameter("no polynomials".into()))?;
    if polys.len() != m + 1 {
        return Err(Error::DimensionMismatch(format!("need {} polynomials in {m} variables", m + 1)));
    }
    if polys.iter().any(|p| p.nvars() != m) {
        return Err(Error::DimensionMismatch("polynomials in different numbers of variables".into()));
    }
    let exps = monomials(m + 1, degree_bound);
    let cols = exps.len();
    let rows = 3 * cols + 10;
    let sample = |rng: &mut R| -> Vec<f64> {
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        polys.iter().map(|p| p.eval(&x)).collect()
    };
    let mut a = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let y = sample(rng);
        for (j, v) in monomial_row(&exps, &y).into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right factor requested");
    let (imin, smin) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.amax();
    let ratio = smin / smax;
    if ratio > 1e-8 {
        return Err(Error::NoRelation { degree: degree_bound as usize, ratio });
    }
    let mut coeffs: Vec<f64> = vt.row(imin).iter().copied().collect();
    let big = coeffs.iter().fold(0.0f64, |acc, c| if c.abs() > acc.abs() { *c } else { acc });
    for c in coeffs.iter_mut() {
        *c /= big;
        if c.abs() < 1e-10 {
            *c = 0.0;
        }
    }
    for _ in 0..50 {
        let y = sample(rng);
        let row = monomial_row(&exps, &y);
        let val: f64 = row.iter().zip(&coeffs).map(|(r, c)| r * c).sum();
        let mag: f64 = row.iter().zip(&coeffs).map(|(r, c)| (r * c).abs()).sum();
        if val.abs() > 1e-6 * mag.max(1e-300) {
            return Err(Error::Contract(format!("relation fails validation: residual {val:.3e}")));
        }
    }
    MultiPoly::new(m + 1, exps.into_iter().zip(coeffs).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    fn proportional(p: &MultiPoly, q: &MultiPoly) -> bool {
        let s = p.terms().iter().map(|(_, c)| c.abs()).fold(0.0, f64::max) / q.terms().iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
        let diff = (p - &q.scale(s)).max_abs_coeff().min((p + &q.scale(s)).max_abs_coeff());
        diff < 1e-8
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(2, 2).len(), 6);
        assert_eq!(monomials(3, 1).len(), 4);
    }

    #[test]
    fn parabola() {
        let mut rng = stream_rng(1, 0);
        let x = MultiPoly::var(1, 0);
        let h = algebraic_relation(&[x.clone(), x.pow(2)], 2, &mut rng).unwrap();
        let expected = MultiPoly::new(2, vec![(vec![0, 1], 1.0), (vec![2, 0], -1.0)]).unwrap();
        assert!(proportional(&h, &expected), "{h:?}");
    }

    #[test]
    fn shifted_parabola() {
        let mut rng = stream_rng(2, 0);
        let x = MultiPoly::var(1, 0);
        let q = &MultiPoly::constant(1, 1.0) - &x.pow(2);
        let h = algebraic_relation(&[x, q], 2, &mut rng).unwrap();
        let expected = MultiPoly::new(2, vec![(vec![0, 1], 1.0), (vec![2, 0], 1.0), (vec![0, 0], -1.0)]).unwrap();
        assert!(proportional(&h, &expected), "{h:?}");
    }

    #[test]
    fn linear_sum() {
        let mut rng = stream_rng(3, 0);
        let (x, y) = (MultiPoly::var(2, 0), MultiPoly::var(2, 1));
        let h = algebraic_relation(&[x.clone(), y.clone(), &x + &y], 1, &mut rng).unwrap();
        let expected = MultiPoly::linear(0.0, &[-1.0, -1.0, 1.0]);
        assert!(proportional(&h, &expected), "{h:?}");
    }

    #[test]
    fn independent_polys_have_no_low_degree_relation() {
        let mut rng = stream_rng(4, 0);
        let x = MultiPoly::var(1, 0);
        let err = algebraic_relation(&[x.clone(), x.pow(3)], 2, &mut rng).unwrap_err();
        assert!(matches!(err, Error::NoRelation { .. }));
    }
}
