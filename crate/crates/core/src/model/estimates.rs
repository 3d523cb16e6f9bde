use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::section::{inverse_coherent_jet, to_real, CoherentSection, PrequantumModel, C64};
use crate::transversality::complex_split;

/// Radial probe grid for the concentration estimates, in units of `k^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub u_max: f64,
    pub n_radii: usize,
    pub n_directions: usize,
    pub seed: u64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid { u_max: 4.0, n_radii: 41, n_directions: 8, seed: 1 }
    }
}

impl ProbeGrid {
    fn directions(&self, n: usize) -> Vec<Vec<f64>> {
        let mut rng = crate::mc::stream_rng(self.seed, 0);
        (0..self.n_directions)
            .map(|_| {
                let v: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
                let nr = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                v.into_iter().map(|t| t / nr).collect()
            })
            .collect()
    }

    fn radii(&self, u_max: f64) -> Vec<f64> {
        (0..self.n_radii).map(|i| u_max * i as f64 / (self.n_radii - 1).max(1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub m: usize,
    /// Constant `C_m` of the envelope `C_m (1 + u)^m`, one per `k`.
    pub constants: Vec<f64>,
    /// `max / min` of the constants across `k`.
    pub spread: f64,
    /// Constant bounding `|∇^m c^{-k}| / k^{m/2}` on `B(x0, R k^{-1/2})`.
    pub inverse_constants: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub ks: Vec<u32>,
    pub rows: Vec<EnvelopeRow>,
    /// Largest antilinear part of `∇c` seen on the probes.
    pub dbar_max: f64,
    /// Largest finite-difference derivative of that antilinear part.
    pub dbar_derivative_max: f64,
    pub inverse_radius: f64,
}

/// Measure the Gaussian concentration of a peak section and the growth of
/// its inverse, for `m <= m_max` and each `k` in `ks`.
///
/// For each `k` the ratio `|∇^m c|(x) / (k^{m/2} e^{-π u^2/2})`, with
/// `u = k^{1/2} |x - x0|`, is enveloped by `C_m (1 + u)^m`; the envelope is
/// stable when the constants agree across `k`.
pub fn concentration_check(
    n: usize,
    ks: &[u32],
    m_max: usize,
    inverse_radius: f64,
    grid: &ProbeGrid,
) -> Result<ConcentrationReport> {
    if m_max > 2 {
        return Err(Error::InvalidParameter("jets are available up to order 2".into()));
    }
    if ks.is_empty() {
        return Err(Error::InvalidParameter("no values of k".into()));
    }
    let dirs = grid.directions(n);
    let mut constants = vec![Vec::new(); m_max + 1];
    let mut inverse = vec![Vec::new(); m_max + 1];
    let (mut dbar_max, mut dbar_d) = (0.0f64, 0.0f64);
    for &k in ks {
        let model = PrequantumModel::new(n, k, 1)?;
        let x0 = vec![Complex64::new(0.0, 0.0); n];
        let s = CoherentSection::single(model, x0.clone(), vec![C64::new(1.0, 0.0)])?;
        let scale = model.scale();
        let kf = k as f64;
        let mut cm = vec![0.0f64; m_max + 1];
        let mut im = vec![0.0f64; m_max + 1];
        for dir in &dirs {
            for &u in &grid.radii(grid.u_max) {
                let x: Vec<f64> = dir.iter().map(|t| t * u * scale).collect();
                let jet = s.jet(&x);
                let norms = jet.norms();
                let gauss = (-std::f64::consts::PI * u * u / 2.0).exp();
                for m in 0..=m_max {
                    let ratio = norms[m] / (kf.powf(m as f64 / 2.0) * gauss);
                    cm[m] = cm[m].max(ratio / (1.0 + u).powi(m as i32));
                }
                let anti = complex_split(&jet.nabla())?.1.op_norm();
                dbar_max = dbar_max.max(anti);
                let h = 1e-6 * scale;
                let xh: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + h * d).collect();
                let anti_h = complex_split(&s.jet(&xh).nabla())?.1.op_norm();
                dbar_d = dbar_d.max((anti_h - anti).abs() / h);
            }
            for &u in &grid.radii(inverse_radius) {
                let x: Vec<f64> = dir.iter().map(|t| t * u * scale).collect();
                let norms = inverse_coherent_jet(&model, &x0, &x).norms();
                for m in 0..=m_max {
                    im[m] = im[m].max(norms[m] / kf.powf(m as f64 / 2.0));
                }
            }
        }
        for m in 0..=m_max {
            constants[m].push(cm[m]);
            inverse[m].push(im[m]);
        }
    }
    let rows = (0..=m_max)
        .map(|m| {
            let hi = constants[m].iter().copied().fold(0.0, f64::max);
            let lo = constants[m].iter().copied().fold(f64::INFINITY, f64::min);
            EnvelopeRow { m, constants: constants[m].clone(), spread: hi / lo, inverse_constants: inverse[m].clone() }
        })
        .collect();
    Ok(ConcentrationReport { ks: ks.to_vec(), rows, dbar_max, dbar_derivative_max: dbar_d, inverse_radius })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSumBound {
    /// Smallest `C` with `|∇^m s(x)| <= C k^{m/2} e^{-kπ d(x,F)^2/3}` on the probes, per `m`.
    pub constants: [f64; 3],
    pub min_spacing: f64,
}

/// Check the decay of `s = Σ_{x0 ∈ F} α_{x0} c_{x0}` away from its centre set,
/// for a `k^{-1/2}`-separated `F` and `|α| <= 1`, and record the constant.
pub fn sum_over_separated_set_bound(s: &CoherentSection, probes: &[Vec<f64>]) -> Result<SeparatedSumBound> {
    let model = s.model;
    let delta = model.scale();
    let centers: Vec<Vec<f64>> = s.terms.iter().map(|t| to_real(&t.center)).collect();
    let mut min_spacing = f64::INFINITY;
    for (i, a) in centers.iter().enumerate() {
        for b in &centers[i + 1..] {
            min_spacing = min_spacing.min(dist(a, b));
        }
    }
    if min_spacing < delta * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("centres are {min_spacing:.3e} apart, need {delta:.3e}")));
    }
    if s.max_coeff() > 1.0 + 1e-12 {
        return Err(Error::Precondition("coefficients must have norm at most 1".into()));
    }
    let kf = model.kf();
    let mut c = [0.0f64; 3];
    for x in probes {
        let d2 = centers.iter().map(|p| dist(p, x).powi(2)).fold(f64::INFINITY, f64::min);
        let env = (-kf * std::f64::consts::PI * d2 / 3.0).exp();
        let norms = s.jet(x).norms();
        for m in 0..3 {
            c[m] = c[m].max(norms[m] / (kf.powf(m as f64 / 2.0) * env));
        }
    }
    Ok(SeparatedSumBound { constants: c, min_spacing })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMajorant {
    /// Coefficients of `M2`, lowest degree first.
    pub coeffs: Vec<f64>,
    /// `M2(N)`.
    pub value: f64,
}

/// Solve `M2(n) - e^{-C} M2(n+1) = M1(n)` for a polynomial `M2` of the same
/// degree, so that `Σ_{m >= N} M1(m) e^{-Cm} = M2(N) e^{-CN}`.
pub fn tail_majorant(m1: &[f64], c: f64, big_n: u64) -> Result<TailMajorant> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("C must be positive".into()));
    }
    let q = (-c).exp();
    let d = m1.len();
    let mut b = vec![0.0; d];
    // Coefficient of n^l: (1 - q) b_l - q Σ_{i > l} binom(i, l) b_i = a_l.
    for l in (0..d).rev() {
        let mut acc = m1[l];
        let mut binom = 1.0;
        for i in l + 1..d {
            binom = binom * i as f64 / (i - l) as f64;
            acc += q * binom * b[i];
        }
        b[l] = acc / (1.0 - q);
    }
    let nf = big_n as f64;
    let value = b.iter().rev().fold(0.0, |acc, bi| acc * nf + bi);
    Ok(TailMajorant { coeffs: b, value })
}

/// Random unit-modulus coefficient vector.
pub fn random_phase<R: Rng + ?Sized>(r: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..r).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let nr = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / nr).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_majorant() {
        let t = tail_majorant(&[1.0], 2f64.ln(), 0).unwrap();
        assert!((t.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_majorant_matches_brute_force() {
        let (a, c, n) = ([0.5, 2.0], 0.3, 5u64);
        let t = tail_majorant(&a, c, n).unwrap();
        let brute: f64 = (n..5000).map(|m| (a[0] + a[1] * m as f64) * (-c * m as f64).exp()).sum();
        assert!((t.value * (-c * n as f64).exp() - brute).abs() < 1e-10);
    }

    #[test]
    fn gaussian_envelope_is_exact_for_m0() {
        let grid = ProbeGrid { n_radii: 9, n_directions: 3, ..Default::default() };
        let r = concentration_check(1, &[16, 64], 1, 1.0, &grid).unwrap();
        for c in &r.rows[0].constants {
            assert!((c - 1.0).abs() < 1e-12);
        }
        for c in &r.rows[0].inverse_constants {
            assert!((c - (std::f64::consts::PI / 2.0).exp()).abs() < 1e-9);
        }
        assert!(r.dbar_max < 1e-10);
    }

    #[test]
    fn spacing_precondition() {
        let model = PrequantumModel::new(1, 64, 1).unwrap();
        let s = CoherentSection::new(
            model,
            vec![
                crate::model::section::CoherentTerm { center: vec![C64::new(0.0, 0.0)], coeff: vec![C64::new(1.0, 0.0)] },
                crate::model::section::CoherentTerm { center: vec![C64::new(0.01, 0.0)], coeff: vec![C64::new(1.0, 0.0)] },
            ],
        )
        .unwrap();
        assert!(sum_over_separated_set_bound(&s, &[vec![0.0, 0.0]]).is_err());
    }
}
