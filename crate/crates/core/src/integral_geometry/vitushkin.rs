use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integral_geometry::grassmann::{ball_volume, sample_affine_hitting_ball, AffineSlice};
use crate::integral_geometry::sets::{Ball, ImplicitSet, Region};
use crate::integral_geometry::slice::slice_components;
use crate::mc::{chunked_mean, derive_seed, McEstimate};

/// Relative variation `V_d(A, B)`: the integral over affine `(n - d)`-planes
/// meeting `B(0, radius)` of the number of components of `A ∩ F ∩ B(0, radius)`
/// that avoid `b`.
pub fn vitushkin_variation<R: Rng + ?Sized>(
    a: &ImplicitSet,
    b: &Region,
    d: usize,
    n: usize,
    radius: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if a.ambient_dim() != n {
        return Err(Error::DimensionMismatch(format!("set lives in R^{}, expected R^{n}", a.ambient_dim())));
    }
    if d > n {
        return Err(Error::InvalidParameter(format!("d={d} exceeds n={n}")));
    }
    let seed = derive_seed(rng);
    if d == n {
        // Volume of A \ B; zero for proper algebraic sets up to tolerance.
        let vol = ball_volume(n, radius);
        return Ok(chunked_mean(seed, n_samples, |r| {
            let x = uniform_in_ball(n, radius, r);
            let inside = a.contains(&x, 1e-12) && !b.contains(&x, 0.0);
            Some(if inside { vol } else { 0.0 })
        }));
    }
    if d == 0 {
        let c = slice_components(a, &AffineSlice::whole_space(n), radius, b)?
            .ok_or_else(|| Error::Degenerate("component count did not stabilise".into()))?;
        return Ok(McEstimate::exact(c.disjoint as f64));
    }
    Ok(chunked_mean(seed, n_samples, |r| {
        let (f, w) = sample_affine_hitting_ball(n - d, n, radius, r).ok()?;
        slice_components(a, &f, radius, b).ok().flatten().map(|c| w * c.disjoint as f64)
    }))
}

pub fn uniform_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rho = radius * rng.random::<f64>().powf(1.0 / n as f64);
    g.into_iter().map(|x| x / norm * rho).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Additivity {
    pub lhs: McEstimate,
    pub rhs_terms: Vec<McEstimate>,
    pub rhs: f64,
    pub residual: f64,
    /// Combined standard error of `lhs - rhs`.
    pub sigma: f64,
}

/// Compare `V_d(A, E \ ∪ int B_i)` with `Σ V_d(A ∩ B_i, S_i)`.
pub fn additivity_residual<R: Rng + ?Sized>(
    a: &ImplicitSet,
    balls: &[Ball],
    d: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Additivity> {
    let n = a.ambient_dim();
    for (i, bi) in balls.iter().enumerate() {
        if bi.center.len() != n || !(bi.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball {i} is malformed")));
        }
        for bj in &balls[i + 1..] {
            let dist = bi.center.iter().zip(&bj.center).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if dist < bi.radius + bj.radius - 1e-12 {
                return Err(Error::Precondition("balls have overlapping interiors".into()));
            }
        }
    }
    let big = balls
        .iter()
        .map(|b| b.center.iter().map(|x| x * x).sum::<f64>().sqrt() + b.radius)
        .fold(0.0, f64::max)
        * (1.0 + 1e-9);
    let lhs = vitushkin_variation(a, &Region::OutsideOpenBalls(balls.to_vec()), d, n, big, n_samples, rng)?;
    let mut rhs_terms = Vec::with_capacity(balls.len());
    for b in balls {
        let local = a.translate(&b.center);
        let sphere = Region::Sphere(Ball::new(vec![0.0; n], b.radius));
        rhs_terms.push(vitushkin_variation(&local, &sphere, d, n, b.radius, n_samples, rng)?);
    }
    let rhs: f64 = rhs_terms.iter().map(|e| e.mean).sum();
    let var = lhs.stderr.powi(2) + rhs_terms.iter().map(|e| e.stderr.powi(2)).sum::<f64>();
    Ok(Additivity { lhs, rhs, residual: lhs.mean - rhs, sigma: var.sqrt(), rhs_terms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub radius: f64,
    /// `V_d(A ∩ B_r, S_r)` for `d = 0 .. n-1`.
    pub variations: Vec<McEstimate>,
    /// `Σ_d V_d / r^(n-1)`.
    pub statistic: f64,
}

/// The scale-normalised sum of relative variations of `A ∩ B(x, r)` for
/// each radius. The point `x` must lie on `A`.
pub fn lower_bound_statistic<R: Rng + ?Sized>(
    a: &ImplicitSet,
    x: &[f64],
    radii: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<LowerBoundRow>> {
    let n = a.ambient_dim();
    if n > 2 {
        return Err(Error::InvalidParameter("component counts of full-dimensional slices need n <= 2".into()));
    }
    if !a.contains(x, 1e-9) {
        return Err(Error::Precondition("centre is not on the set".into()));
    }
    let local = a.translate(x);
    radii
        .iter()
        .map(|&r| {
            let sphere = Region::Sphere(Ball::new(vec![0.0; n], r));
            let variations = (0..n)
                .map(|d| vitushkin_variation(&local, &sphere, d, n, r, n_samples, rng))
                .collect::<Result<Vec<_>>>()?;
            let statistic = variations.iter().map(|v| v.mean).sum::<f64>() / r.powi(n as i32 - 1);
            Ok(LowerBoundRow { radius: r, variations, statistic })
        })
        .collect()
}
