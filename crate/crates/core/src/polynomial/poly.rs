use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse real polynomial in `nvars` variables. Terms are kept sorted by
/// exponent with no duplicates and no zero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoly", into = "RawPoly")]
pub struct MultiPoly {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawPoly {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl TryFrom<RawPoly> for MultiPoly {
    type Error = Error;
    fn try_from(r: RawPoly) -> Result<Self> {
        MultiPoly::new(r.nvars, r.terms)
    }
}

impl From<MultiPoly> for RawPoly {
    fn from(p: MultiPoly) -> Self {
        RawPoly { nvars: p.nvars, terms: p.terms }
    }
}

impl MultiPoly {
    pub fn new(nvars: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch(format!(
                    "exponent of length {} in a polynomial of {nvars} variables",
                    e.len()
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
            *acc.entry(e).or_insert(0.0) += c;
        }
        Ok(Self::from_map(nvars, acc))
    }

    fn from_map(nvars: usize, acc: BTreeMap<Vec<u32>, f64>) -> Self {
        MultiPoly { nvars, terms: acc.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_map(nvars, BTreeMap::from([(vec![0; nvars], c)]))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        MultiPoly { nvars, terms: vec![(e, 1.0)] }
    }

    /// `c0 + sum_i c[i] x_i`.
    pub fn linear(c0: f64, c: &[f64]) -> Self {
        let n = c.len();
        let mut acc = BTreeMap::new();
        acc.insert(vec![0; n], c0);
        for (i, &ci) in c.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            acc.insert(e, ci);
        }
        Self::from_map(n, acc)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, (_, c)| m.max(c.abs()))
    }

    fn max_exponent(&self) -> u32 {
        self.terms.iter().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0)
    }

    fn power_table(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let top = self.max_exponent() as usize;
        x.iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(top + 1);
                p.push(1.0);
                for j in 0..top {
                    p.push(p[j] * xi);
                }
                p
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let pw = self.power_table(x);
        self.terms
            .iter()
            .map(|(e, c)| e.iter().enumerate().fold(*c, |acc, (i, &a)| acc * pw[i][a as usize]))
            .sum()
    }

    /// Value and gradient at `x`.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let pw = self.power_table(x);
        let mut v = 0.0;
        let mut g = vec![0.0; self.nvars];
        for (e, c) in &self.terms {
            v += e.iter().enumerate().fold(*c, |acc, (i, &a)| acc * pw[i][a as usize]);
            for j in 0..self.nvars {
                if e[j] == 0 {
                    continue;
                }
                let mut t = c * e[j] as f64;
                for (i, &a) in e.iter().enumerate() {
                    let a = if i == j { a - 1 } else { a };
                    t *= pw[i][a as usize];
                }
                g[j] += t;
            }
        }
        (v, g)
    }

    pub fn partial(&self, j: usize) -> MultiPoly {
        let mut acc = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[j] > 0 {
                let mut f = e.clone();
                f[j] -= 1;
                *acc.entry(f).or_insert(0.0) += c * e[j] as f64;
            }
        }
        Self::from_map(self.nvars, acc)
    }

    pub fn scale(&self, s: f64) -> MultiPoly {
        Self::from_map(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect())
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut out = MultiPoly::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Substitute `x = offset + frame * t`, giving a polynomial in `t`.
    pub fn compose_affine(&self, offset: &[f64], frame: &DMatrix<f64>) -> MultiPoly {
        let k = frame.ncols();
        let top = self.max_exponent() as usize;
        let powers: Vec<Vec<MultiPoly>> = (0..self.nvars)
            .map(|i| {
                let row: Vec<f64> = (0..k).map(|j| frame[(i, j)]).collect();
                let li = MultiPoly::linear(offset[i], &row);
                let mut p = vec![MultiPoly::constant(k, 1.0)];
                for j in 0..top {
                    let next = &p[j] * &li;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = MultiPoly::zero(k);
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(k, *c);
            for (i, &a) in e.iter().enumerate() {
                if a > 0 {
                    t = &t * &powers[i][a as usize];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// `x -> p(x + c)`.
    pub fn translate(&self, c: &[f64]) -> MultiPoly {
        self.compose_affine(c, &DMatrix::identity(self.nvars, self.nvars))
    }

    /// Bound on `|grad p|` over the ball of radius `rho` centred at 0.
    pub fn lipschitz_bound(&self, rho: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let d: u32 = e.iter().sum();
                if d == 0 {
                    0.0
                } else {
                    c.abs() * d as f64 * rho.powi(d as i32 - 1)
                }
            })
            .sum()
    }

    /// Bound on the Hessian operator norm over the ball of radius `rho`.
    pub fn hessian_bound(&self, rho: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let d: u32 = e.iter().sum();
                if d < 2 {
                    0.0
                } else {
                    c.abs() * (d * (d - 1)) as f64 * rho.powi(d as i32 - 2)
                }
            })
            .sum()
    }

    /// Coefficients in increasing degree, for a polynomial in one variable.
    pub fn univariate_coeffs(&self) -> Vec<f64> {
        assert_eq!(self.nvars, 1);
        let mut c = vec![0.0; self.degree() as usize + 1];
        for (e, v) in &self.terms {
            c[e[0] as usize] += v;
        }
        c
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, o: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut acc: BTreeMap<Vec<u32>, f64> = self.terms.iter().cloned().collect();
        for (e, c) in &o.terms {
            *acc.entry(e.clone()).or_insert(0.0) += c;
        }
        MultiPoly::from_map(self.nvars, acc)
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, o: &MultiPoly) -> MultiPoly {
        self + &o.scale(-1.0)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, o: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        MultiPoly::from_map(self.nvars, acc)
    }
}

/// Horner evaluation of `c[0] + c[1] t + ...`.
pub fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

/// Real roots in `[lo, hi]`, found by splitting at the critical points
/// (recursively) and bisecting each monotone piece. Touching roots are
/// picked up at critical points where the value vanishes to tolerance.
/// Returns `None` when the polynomial vanishes identically.
pub fn real_roots(c: &[f64], lo: f64, hi: f64) -> Option<Vec<f64>> {
    let mut c = c.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    if c.is_empty() {
        return None;
    }
    let scale = c.iter().enumerate().map(|(i, v)| v.abs() * lo.abs().max(hi.abs()).max(1.0).powi(i as i32)).sum::<f64>();
    let mut roots = roots_rec(&c, lo, hi, 1e-11 * scale);
    roots.sort_by(f64::total_cmp);
    Some(roots)
}

fn roots_rec(c: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            if r >= lo && r <= hi {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let dc: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, v)| v * i as f64).collect();
            let crit = roots_rec(&dc, lo, hi, f64::INFINITY);
            let mut knots = vec![lo];
            knots.extend(crit.iter().copied().filter(|&t| t > lo && t < hi));
            knots.push(hi);
            let mut out = Vec::new();
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (fa, fb) = (horner(c, a), horner(c, b));
                if fa == 0.0 {
                    out.push(a);
                } else if fb != 0.0 && fa.signum() != fb.signum() {
                    out.push(bisect(c, a, b, fa));
                }
            }
            let fh = horner(c, hi);
            if fh == 0.0 {
                out.push(hi);
            }
            if tol.is_finite() {
                for &t in &crit {
                    if t > lo && t < hi && horner(c, t).abs() <= tol {
                        out.push(t);
                    }
                }
            }
            out
        }
    }
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = horner(c, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Merge sorted values closer than `delta`, keeping cluster means.
pub fn cluster(sorted: &[f64], delta: f64) -> Vec<f64> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &t in sorted {
        match out.last_mut() {
            Some((sum, n)) if t - *sum / *n as f64 <= delta => {
                *sum += t;
                *n += 1;
            }
            _ => out.push((t, 1)),
        }
    }
    out.into_iter().map(|(s, n)| s / n as f64).collect()
}
