use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral_geometry::grassmann::{gamma_half, sample_affine_hitting_ball, sample_grassmannian, AffineSlice};
use crate::integral_geometry::sets::{ImplicitSet, Region};
use crate::integral_geometry::slice::slice_components;
use crate::mc::{chunked_mean, derive_seed, McEstimate};

/// Closed form of the Crofton constant, the mean of `|det(P_F | F')|`.
pub fn crofton_constant_exact(d: usize, n: usize) -> f64 {
    assert!(d >= 1 && d <= n);
    gamma_half(d + 1) * gamma_half(n - d + 1) / (gamma_half(1) * gamma_half(n + 1))
}

/// Monte Carlo estimate of the Crofton constant against a fixed `d`-plane
/// `reference` (an orthonormal `n x d` frame).
pub fn crofton_constant_against<R: Rng + ?Sized>(
    reference: &DMatrix<f64>,
    n_samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let (n, d) = (reference.nrows(), reference.ncols());
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("reference must be a d-plane with 1 <= d <= {n}")));
    }
    let seed = derive_seed(rng);
    Ok(chunked_mean(seed, n_samples, |r| {
        let g = sample_grassmannian(d, n, r).ok()?;
        Some((g.frame.transpose() * reference).determinant().abs())
    }))
}

pub fn crofton_constant<R: Rng + ?Sized>(d: usize, n: usize, n_samples: usize, rng: &mut R) -> Result<McEstimate> {
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("need 1 <= d <= n, got d={d}, n={n}")));
    }
    let mut reference = DMatrix::zeros(n, d);
    for i in 0..d {
        reference[(i, i)] = 1.0;
    }
    crofton_constant_against(&reference, n_samples, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CroftonShape {
    /// Hypersurface (or union) inside the ball of the given radius.
    Implicit { set: ImplicitSet, radius: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    Triangle { a: Vec<f64>, b: Vec<f64>, c: Vec<f64> },
}

impl CroftonShape {
    fn ambient_dim(&self) -> usize {
        match self {
            CroftonShape::Implicit { set, .. } => set.ambient_dim(),
            CroftonShape::Segment { a, .. } => a.len(),
            CroftonShape::Triangle { a, .. } => a.len(),
        }
    }

    fn intrinsic_dim(&self) -> Option<usize> {
        match self {
            CroftonShape::Implicit { .. } => None,
            CroftonShape::Segment { .. } => Some(1),
            CroftonShape::Triangle { .. } => Some(2),
        }
    }

    fn bounding_radius(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self {
            CroftonShape::Implicit { radius, .. } => *radius,
            CroftonShape::Segment { a, b } => norm(a).max(norm(b)) * (1.0 + 1e-12),
            CroftonShape::Triangle { a, b, c } => norm(a).max(norm(b)).max(norm(c)) * (1.0 + 1e-12),
        }
    }

    /// Number of intersection points with a complementary-dimension slice.
    fn count(&self, f: &AffineSlice) -> Option<f64> {
        match self {
            CroftonShape::Implicit { set, radius } => {
                slice_components(set, f, *radius, &Region::Empty).ok().flatten().map(|c| c.total as f64)
            }
            CroftonShape::Segment { a, b } => {
                // The slice is a hyperplane; the segment crosses it iff the
                // signed distances of its endpoints differ in sign.
                let normal = crate::transversality::null_space(&f.frame.transpose());
                let nu = normal.column(0);
                let side = |p: &[f64]| p.iter().zip(&f.offset).enumerate().map(|(i, (x, o))| (x - o) * nu[i]).sum::<f64>();
                let (sa, sb) = (side(a), side(b));
                Some(if sa * sb < 0.0 { 1.0 } else { 0.0 })
            }
            CroftonShape::Triangle { a, b, c } => {
                let dir: Vec<f64> = (0..3).map(|i| f.frame[(i, 0)]).collect();
                Some(if line_hits_triangle(&f.offset, &dir, a, b, c) { 1.0 } else { 0.0 })
            }
        }
    }
}

fn line_hits_triangle(o: &[f64], d: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let sub = |x: &[f64], y: &[f64]| [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let cross = |x: [f64; 3], y: [f64; 3]| [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
    let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let (e1, e2) = (sub(b, a), sub(c, a));
    let dd = [d[0], d[1], d[2]];
    let p = cross(dd, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-15 {
        return false;
    }
    let s = sub(o, a);
    let u = dot(s, p) / det;
    let q = cross(s, e1);
    let v = dot(dd, q) / det;
    u >= 0.0 && v >= 0.0 && u + v <= 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CroftonResult {
    /// Estimate of the integral of the intersection count.
    pub raw: McEstimate,
    pub constant: f64,
    /// `raw / constant`.
    pub volume: McEstimate,
}

/// Volume of a `d`-dimensional set in `R^n` through the Crofton formula,
/// integrating intersection counts over affine `(n - d)`-planes.
pub fn crofton_volume<R: Rng + ?Sized>(
    shape: &CroftonShape,
    d: usize,
    n: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<CroftonResult> {
    if shape.ambient_dim() != n {
        return Err(Error::DimensionMismatch(format!("shape lives in R^{}, expected R^{n}", shape.ambient_dim())));
    }
    if let Some(dim) = shape.intrinsic_dim() {
        if dim != d {
            return Err(Error::InvalidParameter(format!("shape is {dim}-dimensional, d={d}")));
        }
    }
    if d == 0 || d >= n {
        return Err(Error::InvalidParameter("need 1 <= d < n".into()));
    }
    let radius = shape.bounding_radius();
    let seed = derive_seed(rng);
    let raw = chunked_mean(seed, n_samples, |r| {
        let (f, w) = sample_affine_hitting_ball(n - d, n, radius, r).ok()?;
        shape.count(&f).map(|c| w * c)
    });
    let constant = crofton_constant_exact(d, n);
    Ok(CroftonResult { raw, constant, volume: raw.scale(1.0 / constant) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;
    use std::f64::consts::PI;

    #[test]
    fn exact_constants() {
        assert!((crofton_constant_exact(1, 2) - 2.0 / PI).abs() < 1e-15);
        assert!((crofton_constant_exact(2, 3) - 0.5).abs() < 1e-15);
        for n in 1..6 {
            assert!((crofton_constant_exact(n, n) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn top_dimension_is_one() {
        let mut rng = stream_rng(4, 0);
        let e = crofton_constant(3, 3, 500, &mut rng).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_length() {
        let mut rng = stream_rng(5, 0);
        let s = CroftonShape::Segment { a: vec![-0.5, 0.0], b: vec![0.5, 0.0] };
        let r = crofton_volume(&s, 1, 2, 40_000, &mut rng).unwrap();
        assert!((r.volume.mean - 1.0).abs() < 4.0 * r.volume.stderr);
    }

    #[test]
    fn triangle_area() {
        let mut rng = stream_rng(6, 0);
        let s = CroftonShape::Triangle { a: vec![0.0, 0.0, 0.0], b: vec![1.0, 0.0, 0.0], c: vec![0.0, 1.0, 0.0] };
        let r = crofton_volume(&s, 2, 3, 40_000, &mut rng).unwrap();
        assert!((r.volume.mean - 0.5).abs() < 4.0 * r.volume.stderr);
    }
}
