use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannSample {
    pub n: usize,
    pub k: usize,
    /// Orthonormal `n x k` frame.
    pub frame: DMatrix<f64>,
}

/// An affine subspace `offset + span(frame)` with `offset` orthogonal to the span.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSlice {
    pub offset: Vec<f64>,
    pub frame: DMatrix<f64>,
}

impl AffineSlice {
    pub fn whole_space(n: usize) -> Self {
        AffineSlice { offset: vec![0.0; n], frame: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn point(&self, t: &[f64]) -> Vec<f64> {
        (0..self.offset.len())
            .map(|i| self.offset[i] + (0..t.len()).map(|j| self.frame[(i, j)] * t[j]).sum::<f64>())
            .collect()
    }
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// A Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal absorbed into `Q`).
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

pub fn sample_grassmannian<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<GrassmannSample> {
    if n == 0 || k > n {
        return Err(Error::InvalidParameter(format!("Gr({k}, {n}) is not defined")));
    }
    let q = haar_orthogonal(n, rng);
    Ok(GrassmannSample { n, k, frame: q.columns(0, k).into_owned() })
}

/// Volume of the radius-`r` ball in `R^m`.
pub fn ball_volume(m: usize, r: f64) -> f64 {
    let unit = match m {
        0 => 1.0,
        1 => 2.0,
        _ => ball_volume(m - 2, 1.0) * 2.0 * std::f64::consts::PI / m as f64,
    };
    unit * r.powi(m as i32)
}

/// `Gamma(m / 2)` for a positive integer `m`.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while 2.0 * x < m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Draw an affine `k`-plane from the invariant measure restricted to planes
/// meeting the ball `B(0, radius)`. Returns the plane and the total measure
/// of that family (the volume of the `(n - k)`-ball of the same radius).
pub fn sample_affine_hitting_ball<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    radius: f64,
    rng: &mut R,
) -> Result<(AffineSlice, f64)> {
    if k >= n || n == 0 {
        return Err(Error::InvalidParameter(format!("affine {k}-planes in R^{n} need k < n")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let q = haar_orthogonal(n, rng);
    let m = n - k;
    let dir: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rho = radius * rng.random::<f64>().powf(1.0 / m as f64);
    let mut offset = vec![0.0; n];
    for (j, d) in dir.iter().enumerate() {
        for (i, o) in offset.iter_mut().enumerate() {
            *o += q[(i, k + j)] * d / norm * rho;
        }
    }
    Ok((AffineSlice { offset, frame: q.columns(0, k).into_owned() }, ball_volume(m, radius)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    #[test]
    fn frames_are_orthonormal() {
        let mut rng = stream_rng(1, 0);
        for (k, n) in [(1, 2), (2, 3), (3, 5), (0, 3), (4, 4)] {
            let g = sample_grassmannian(k, n, &mut rng).unwrap();
            let gram = g.frame.transpose() * &g.frame;
            assert!((gram - DMatrix::<f64>::identity(k, k)).amax() < 1e-12);
        }
        assert!(sample_grassmannian(3, 2, &mut rng).is_err());
    }

    #[test]
    fn weights() {
        let mut rng = stream_rng(2, 0);
        let (_, w) = sample_affine_hitting_ball(1, 2, 1.0, &mut rng).unwrap();
        assert!((w - 2.0).abs() < 1e-15);
        let (s, w) = sample_affine_hitting_ball(1, 3, 1.0, &mut rng).unwrap();
        assert!((w - std::f64::consts::PI).abs() < 1e-15);
        let dot: f64 = (0..3).map(|i| s.frame[(i, 0)] * s.offset[i]).sum();
        assert!(dot.abs() < 1e-12);
        assert!(s.offset.iter().map(|x| x * x).sum::<f64>() <= 1.0);
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(3) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
    }
}
