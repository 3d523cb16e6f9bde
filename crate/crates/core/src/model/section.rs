//! Sections of `L^k ⊗ C^r` over `C^n` with the flat Kähler form, in the
//! unitary gauge attached to the holomorphic frame of weight `e^{-kπ|z|^2}`.
//!
//! A coherent (peak) section centred at `x0` is
//! `α exp(kπ(<z, x0> - |x0|^2/2 - |z|^2/2))` with `<z, x0> = Σ z_j conj(x0_j)`;
//! its pointwise norm is `|α| e^{-kπ|z - x0|^2 / 2}`. The Chern connection is
//! `∇^{1,0} = ∂ - kπ z̄ dz` and `∇^{0,1} = ∂̄`, so holomorphic sections have
//! complex-linear covariant derivatives.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::transversality::{realify, standard_j, LinearMapR};

pub type C64 = Complex64;

const UNDERFLOW: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrequantumModel {
    /// Complex dimension of the base.
    pub n: usize,
    pub k: u32,
    /// Rank of the auxiliary trivial bundle.
    pub r: usize,
}

impl PrequantumModel {
    pub fn new(n: usize, k: u32, r: usize) -> Result<Self> {
        if n == 0 || r == 0 || k == 0 {
            return Err(Error::InvalidParameter("n, k and r must be positive".into()));
        }
        Ok(PrequantumModel { n, k, r })
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    /// The natural length scale `k^{-1/2}`.
    pub fn scale(&self) -> f64 {
        (self.k as f64).powf(-0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentTerm {
    pub center: Vec<C64>,
    pub coeff: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentSection {
    pub model: PrequantumModel,
    pub terms: Vec<CoherentTerm>,
}

/// Covariant 2-jet of a section at a point, in the unitary gauge.
///
/// `∇s(v) = g v` and `∇²s(v, w) = v^T h w + mixed <w, v>` with
/// `<w, v> = Σ w_j conj(v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<C64>,
    /// `r x n`.
    pub g: DMatrix<C64>,
    /// One symmetric `n x n` block per component.
    pub h: Vec<DMatrix<C64>>,
    pub mixed: Vec<C64>,
}

impl Jet {
    pub fn zero(n: usize, r: usize) -> Self {
        Jet {
            value: vec![C64::new(0.0, 0.0); r],
            g: DMatrix::zeros(r, n),
            h: vec![DMatrix::zeros(n, n); r],
            mixed: vec![C64::new(0.0, 0.0); r],
        }
    }

    pub fn add_assign(&mut self, o: &Jet) {
        for a in 0..self.value.len() {
            self.value[a] += o.value[a];
            self.h[a] += &o.h[a];
            self.mixed[a] += o.mixed[a];
        }
        self.g += &o.g;
    }

    pub fn value_norm(&self) -> f64 {
        self.value.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn value_real(&self) -> Vec<f64> {
        self.value.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// `∇s` as a real `2r x 2n` map carrying both complex structures.
    pub fn nabla(&self) -> LinearMapR {
        LinearMapR {
            matrix: realify(&self.g),
            j_src: Some(standard_j(self.g.ncols())),
            j_dst: Some(standard_j(self.g.nrows())),
        }
    }

    fn second(&self, v: &[C64], w: &[C64]) -> Vec<C64> {
        let herm: C64 = w.iter().zip(v).map(|(a, b)| a * b.conj()).sum();
        (0..self.value.len())
            .map(|a| {
                let mut acc = self.mixed[a] * herm;
                for l in 0..v.len() {
                    for j in 0..w.len() {
                        acc += v[l] * self.h[a][(l, j)] * w[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// Frobenius norms of `∇^m s` for `m = 0, 1, 2`, as real multilinear maps.
    pub fn norms(&self) -> [f64; 3] {
        let n = self.g.ncols();
        let n0 = self.value_norm();
        let n1 = (2.0 * self.g.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
        let basis: Vec<Vec<C64>> = (0..2 * n)
            .map(|i| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[i / 2] = if i % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
                e
            })
            .collect();
        let mut s2 = 0.0;
        for v in &basis {
            for w in &basis {
                s2 += self.second(v, w).iter().map(|c| c.norm_sqr()).sum::<f64>();
            }
        }
        [n0, n1, s2.sqrt()]
    }
}

pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn to_real(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Jet of `ψ` where `ψ = c_{x0}` (`sign = 1`) or `ψ = c_{x0}^{-1}` (`sign = -1`),
/// both with unit coefficient and of total charge `sign * k`.
fn scalar_term_jet(k: f64, x0: &[C64], z: &[C64], sign: f64) -> Option<(C64, Vec<C64>, f64)> {
    let inner: C64 = z.iter().zip(x0).map(|(a, b)| a * b.conj()).sum();
    let nx: f64 = x0.iter().map(|c| c.norm_sqr()).sum();
    let nz: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let e = sign * k * PI * (inner - C64::new(0.5 * (nx + nz), 0.0));
    if e.re < UNDERFLOW {
        return None;
    }
    let psi = e.exp();
    let delta: Vec<C64> = x0.iter().zip(z).map(|(a, b)| a.conj() - b.conj()).collect();
    Some((psi, delta, sign))
}

impl CoherentSection {
    pub fn zero(model: PrequantumModel) -> Self {
        CoherentSection { model, terms: Vec::new() }
    }

    pub fn new(model: PrequantumModel, terms: Vec<CoherentTerm>) -> Result<Self> {
        for t in &terms {
            if t.center.len() != model.n || t.coeff.len() != model.r {
                return Err(Error::DimensionMismatch("coherent term does not match the model".into()));
            }
        }
        Ok(CoherentSection { model, terms })
    }

    pub fn single(model: PrequantumModel, center: Vec<C64>, coeff: Vec<C64>) -> Result<Self> {
        Self::new(model, vec![CoherentTerm { center, coeff }])
    }

    pub fn plus(&self, other: &CoherentSection) -> CoherentSection {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        CoherentSection { model: self.model, terms }
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Covariant 2-jet at the point with real coordinates `x`.
    pub fn jet(&self, x: &[f64]) -> Jet {
        let (n, r) = (self.model.n, self.model.r);
        let z = to_complex(x);
        let kp = self.model.kf() * PI;
        let mut jet = Jet::zero(n, r);
        for t in &self.terms {
            let Some((psi, delta, _)) = scalar_term_jet(self.model.kf(), &t.center, &z, 1.0) else { continue };
            for a in 0..r {
                let u = t.coeff[a] * psi;
                jet.value[a] += u;
                for j in 0..n {
                    jet.g[(a, j)] += kp * delta[j] * u;
                    for l in 0..n {
                        jet.h[a][(l, j)] += kp * kp * delta[l] * delta[j] * u;
                    }
                }
                jet.mixed[a] -= kp * u;
            }
        }
        jet
    }

    pub fn value_norm(&self, x: &[f64]) -> f64 {
        self.jet(x).value_norm()
    }

    pub fn nabla(&self, x: &[f64]) -> LinearMapR {
        self.jet(x).nabla()
    }
}

/// Jet of the inverse peak section `c_{x0}^{-k}` (rank one), whose norm is
/// `e^{kπ|z - x0|^2 / 2}`.
pub fn inverse_coherent_jet(model: &PrequantumModel, x0: &[C64], x: &[f64]) -> Jet {
    let n = model.n;
    let z = to_complex(x);
    let kp = model.kf() * PI;
    let (psi, delta, sign) = scalar_term_jet(model.kf(), x0, &z, -1.0).expect("inverse peak cannot underflow");
    let mut jet = Jet::zero(n, 1);
    jet.value[0] = psi;
    for j in 0..n {
        jet.g[(0, j)] = sign * kp * delta[j] * psi;
        for l in 0..n {
            jet.h[0][(l, j)] = kp * kp * delta[l] * delta[j] * psi;
        }
    }
    jet.mixed[0] = -sign * kp * psi;
    jet
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transversality::complex_split;

    fn model() -> PrequantumModel {
        PrequantumModel::new(2, 16, 1).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn peak_norm_profile() {
        let m = model();
        let x0 = vec![c(0.1, -0.2), c(0.05, 0.0)];
        let s = CoherentSection::single(m, x0.clone(), vec![c(0.6, 0.8)]).unwrap();
        let x = [0.2, -0.1, 0.0, 0.1];
        let d2: f64 = to_real(&x0).iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        let expect = (-(16.0 * PI) * d2 / 2.0).exp();
        assert!((s.value_norm(&x) - expect).abs() < 1e-14);
        assert!(s.jet(&to_real(&x0)).g.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn derivative_is_complex_linear() {
        let m = model();
        let s = CoherentSection::single(m, vec![c(0.0, 0.0), c(0.1, 0.1)], vec![c(1.0, 0.0)]).unwrap();
        let (_, anti) = complex_split(&s.nabla(&[0.05, 0.02, -0.03, 0.2])).unwrap();
        assert!(anti.matrix.amax() < 1e-12);
    }

    #[test]
    fn norm_derivative_matches_finite_difference() {
        let m = model();
        let s = CoherentSection::new(
            m,
            vec![
                CoherentTerm { center: vec![c(0.0, 0.0), c(0.1, 0.0)], coeff: vec![c(1.0, 0.0)] },
                CoherentTerm { center: vec![c(0.2, 0.1), c(0.0, -0.1)], coeff: vec![c(0.0, 0.5)] },
            ],
        )
        .unwrap();
        let x = [0.07, 0.03, 0.02, -0.04];
        let jet = s.jet(&x);
        let nab = jet.nabla();
        let sv = jet.value_real();
        let h = 1e-6;
        for i in 0..4 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let fd = (s.value_norm(&xp) - s.value_norm(&xm)) / (2.0 * h);
            let col = nab.matrix.column(i);
            let an = (sv[0] * col[0] + sv[1] * col[1]) / jet.value_norm();
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
        }
    }

    #[test]
    fn inverse_peak_norm() {
        let m = PrequantumModel::new(1, 64, 1).unwrap();
        let x0 = vec![c(0.1, 0.0)];
        let jet = inverse_coherent_jet(&m, &x0, &[0.15, 0.05]);
        let d2 = 0.05f64.powi(2) * 2.0;
        assert!((jet.value_norm() - (64.0 * PI * d2 / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn first_derivative_norm_profile() {
        // |∇c| (Frobenius) = sqrt(2) kπ d e^{-kπ d^2/2}
        let m = PrequantumModel::new(1, 64, 1).unwrap();
        let s = CoherentSection::single(m, vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
        let d = 0.1;
        let nr = s.jet(&[d, 0.0]).norms();
        let kp = 64.0 * PI;
        assert!((nr[1] - 2f64.sqrt() * kp * d * (-kp * d * d / 2.0).exp()).abs() < 1e-12);
    }
}
