use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_N0: u64 = 1_000_000;

/// `P(t) = Σ p_i t^i`.
pub fn eval_poly(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// `ε_1 .. ε_{n_D}`.
    pub eps: Vec<f64>,
    /// `η_1 .. η_{n_D}`.
    pub eta: Vec<f64>,
    pub a: f64,
    pub p: Vec<f64>,
    pub c: f64,
    pub d: f64,
    /// `min_i (η_i / ε_i) / (C e^{-πD²/4})`; the cross-talk condition holds when `>= 1`.
    pub crosstalk_margin: f64,
}

impl Schedule {
    pub fn crosstalk_ok(&self) -> bool {
        self.crosstalk_margin >= 1.0
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }
}

/// `ε_1 = ε/A`, `η_1 = ε_1/P(log 1/ε_1)`, then
/// `ε_{i+1} = min(ε_1, η_i/(2A))` and `η_{i+1} = min(η_i/2, ε_{i+1}/P(log 1/ε_{i+1}))`.
pub fn build_schedule(eps: f64, a: f64, p: &[f64], c: f64, d: f64, n_d: usize) -> Result<Schedule> {
    if !(eps > 0.0) || !(a > 0.0) || !(c >= 0.0) || !(d > 0.0) {
        return Err(Error::InvalidParameter("eps, A, D must be positive and C non-negative".into()));
    }
    if p.is_empty() {
        return Err(Error::InvalidParameter("P has no coefficients".into()));
    }
    let e1 = eps / a;
    if e1 >= 1.0 / (2.0 * std::f64::consts::E) {
        return Err(Error::Precondition(format!("eps/A = {e1:.4} must be below 1/(2e)")));
    }
    let pv = |e: f64| -> Result<f64> {
        let v = eval_poly(p, (1.0 / e).ln());
        if v < 1.0 {
            Err(Error::Precondition(format!("P(log 1/eps) = {v:.4} < 1")))
        } else {
            Ok(v)
        }
    };
    let mut es = vec![e1];
    let mut hs = vec![e1 / pv(e1)?];
    for _ in 1..n_d {
        let prev = *hs.last().unwrap();
        let e = e1.min(prev / (2.0 * a));
        if !(e > 0.0) {
            return Err(Error::Degenerate("schedule underflowed".into()));
        }
        let h = (prev / 2.0).min(e / pv(e)?);
        es.push(e);
        hs.push(h);
    }
    es.truncate(n_d);
    hs.truncate(n_d);
    let cross = c * (-std::f64::consts::PI * d * d / 4.0).exp();
    let worst = es.iter().zip(&hs).map(|(e, h)| h / e).fold(f64::INFINITY, f64::min);
    let crosstalk_margin = if cross == 0.0 { f64::INFINITY } else { worst / cross };
    Ok(Schedule { eps: es, eta: hs, a, p: p.to_vec(), c, d, crosstalk_margin })
}

/// For a sequence in `(0, 1)` with `u_n >= u_{n-1} / (log 1/u_{n-1})^p`,
/// the smallest `n0` with `u_n >= (1/(n+n0))^{(n+n0) q}` for every `n`
/// (indices start at 1).
pub fn schedule_domination_check(u: &[f64], p: f64, q: f64) -> Result<u64> {
    if !(p > 0.0 && q > p) {
        return Err(Error::InvalidParameter("need 0 < p < q".into()));
    }
    if u.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidParameter("sequence must lie in (0, 1)".into()));
    }
    for n in 1..u.len() {
        let bound = u[n - 1] / (1.0 / u[n - 1]).ln().powf(p);
        if u[n] < bound * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!("hypothesis fails at n = {}", n + 1)));
        }
    }
    let ok = |n0: u64| {
        u.iter().enumerate().all(|(i, &x)| {
            let m = (i as u64 + 1 + n0) as f64;
            // Relative slack absorbs rounding when u_n equals v_{n+n0}.
            x.ln() >= -m * q * m.ln() * (1.0 + 1e-12)
        })
    };
    if !ok(MAX_N0) {
        return Err(Error::SearchFailed(format!("no n0 <= {MAX_N0}")));
    }
    let (mut lo, mut hi) = (0u64, MAX_N0);
    if ok(0) {
        return Ok(0);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `p` for which the sequence satisfies the domination hypothesis.
pub fn minimal_exponent(u: &[f64]) -> f64 {
    u.windows(2)
        .map(|w| {
            let ratio = (w[0] / w[1]).ln();
            let l = (1.0 / w[0]).ln().ln();
            if ratio <= 0.0 {
                0.0
            } else {
                ratio / l
            }
        })
        .fold(0.0, f64::max)
}
