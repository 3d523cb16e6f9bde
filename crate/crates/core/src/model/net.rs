use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transversality::Subspace;

const MAX_DIAM_SCALED: f64 = 1e4;

/// A box window of an affine real subspace `Y = base + span(frame)` of `R^{2n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmanifoldY {
    /// Orthonormal `2n x d` frame.
    pub frame: Vec<Vec<f64>>,
    pub base: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SubmanifoldY {
    pub fn new(frame: DMatrix<f64>, base: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = frame.ncols();
        Subspace::new(frame.clone())?;
        if base.len() != frame.nrows() || lo.len() != d || hi.len() != d {
            return Err(Error::DimensionMismatch("window does not match the frame".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidParameter("window bounds must satisfy lo <= hi".into()));
        }
        let cols = (0..d).map(|j| frame.column(j).iter().copied().collect()).collect();
        Ok(SubmanifoldY { frame: cols, base, lo, hi })
    }

    /// `[lo, hi] ⊂ R ⊂ C^n` along the first real axis.
    pub fn real_interval(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let mut f = DMatrix::zeros(2 * n, 1);
        f[(0, 0)] = 1.0;
        Self::new(f, vec![0.0; 2 * n], vec![lo], vec![hi])
    }

    /// The real square `[lo, hi]^2 ⊂ R^2 ⊂ C^2` (real parts of both coordinates).
    pub fn real_square(lo: f64, hi: f64) -> Result<Self> {
        let mut f = DMatrix::zeros(4, 2);
        f[(0, 0)] = 1.0;
        f[(2, 1)] = 1.0;
        Self::new(f, vec![0.0; 4], vec![lo; 2], vec![hi; 2])
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn frame_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ambient_dim(), self.dim(), |i, j| self.frame[j][i])
    }

    pub fn tangent(&self) -> Subspace {
        Subspace { frame: self.frame_matrix() }
    }

    pub fn point(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.base.clone();
        for (j, tj) in t.iter().enumerate() {
            for (xi, fi) in x.iter_mut().zip(&self.frame[j]) {
                *xi += tj * fi;
            }
        }
        x
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *x >= a - 1e-12 && *x <= b + 1e-12)
    }

    /// Window points (in `Y` coordinates) on the grid of the given pitch
    /// anchored at `lo`, first coordinate varying fastest.
    pub fn grid(&self, pitch: f64) -> Vec<Vec<f64>> {
        let counts: Vec<usize> =
            self.lo.iter().zip(&self.hi).map(|(a, b)| ((b - a) / pitch + 1e-9).floor() as usize + 1).collect();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|mut idx| {
                (0..self.dim())
                    .map(|j| {
                        let i = idx % counts[j];
                        idx /= counts[j];
                        self.lo[j] + pitch * i as f64
                    })
                    .collect()
            })
            .collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Spatial hash over points in a Euclidean space, for radius queries.
pub struct PointHash {
    cell: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointHash {
    pub fn new(cell: f64) -> Self {
        PointHash { cell, map: HashMap::new() }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|t| (t / self.cell).floor() as i64).collect()
    }

    pub fn insert(&mut self, x: &[f64], id: usize) {
        let k = self.key(x);
        self.map.entry(k).or_default().push(id);
    }

    /// Ids within distance `< r` of `x` (requires `r <= reach * cell`).
    pub fn within(&self, x: &[f64], r: f64, pts: &[Vec<f64>]) -> Vec<usize> {
        let reach = (r / self.cell).ceil() as i64;
        let k = self.key(x);
        let d = k.len();
        let mut out = Vec::new();
        let mut off = vec![-reach; d];
        loop {
            let key: Vec<i64> = k.iter().zip(&off).map(|(a, b)| a + b).collect();
            if let Some(ids) = self.map.get(&key) {
                out.extend(ids.iter().copied().filter(|&i| dist(&pts[i], x) < r));
            }
            let mut i = 0;
            while i < d && off[i] == reach {
                off[i] = -reach;
                i += 1;
            }
            if i == d {
                break;
            }
            off[i] += 1;
        }
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    /// Points in `Y` coordinates, in insertion order.
    pub points: Vec<Vec<f64>>,
    pub delta: f64,
    /// Largest distance from a probe to the net.
    pub covering_radius: f64,
    pub probe_pitch: f64,
}

/// Maximal `k^{-1/2}`-separated subset of the window, built greedily on the
/// grid of pitch `k^{-1/2}/4` and completed on a probe grid of pitch
/// `k^{-1/2}/8`, where the covering radius is then measured.
pub fn discretize_window(y: &SubmanifoldY, k: u32) -> Result<Net> {
    let delta = (k as f64).powf(-0.5);
    let scaled = y.diameter() / delta;
    if scaled > MAX_DIAM_SCALED {
        return Err(Error::NetTooLarge(scaled));
    }
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut hash = PointHash::new(delta);
    let mut offer = |t: Vec<f64>, pts: &mut Vec<Vec<f64>>| {
        if hash.within(&t, delta, pts).is_empty() {
            hash.insert(&t, pts.len());
            pts.push(t);
        }
    };
    for t in y.grid(delta / 4.0) {
        offer(t, &mut pts);
    }
    let probe_pitch = delta / 8.0;
    let probes = y.grid(probe_pitch);
    for t in &probes {
        offer(t.clone(), &mut pts);
    }
    let mut check = PointHash::new(delta);
    for (i, p) in pts.iter().enumerate() {
        check.insert(p, i);
    }
    let covering_radius = probes
        .iter()
        .map(|t| check.within(t, 2.0 * delta, &pts).iter().map(|&i| dist(&pts[i], t)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    if covering_radius > delta {
        return Err(Error::Contract(format!("net covering radius {covering_radius:.3e} exceeds {delta:.3e}")));
    }
    Ok(Net { points: pts, delta, covering_radius, probe_pitch })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coloring {
    pub colors: Vec<usize>,
    pub n_colors: usize,
    pub max_degree: usize,
}

impl Coloring {
    pub fn class(&self, c: usize) -> Vec<usize> {
        (0..self.colors.len()).filter(|&i| self.colors[i] == c).collect()
    }
}

/// Greedy colouring, in insertion order, of the graph joining points closer
/// than `min_dist`. Each colour class is `min_dist`-separated.
pub fn greedy_color(points: &[Vec<f64>], min_dist: f64) -> Coloring {
    let mut hash = PointHash::new(min_dist.max(1e-300));
    for (i, p) in points.iter().enumerate() {
        hash.insert(p, i);
    }
    let mut colors = vec![usize::MAX; points.len()];
    let mut max_degree = 0;
    for i in 0..points.len() {
        let nb: Vec<usize> = hash.within(&points[i], min_dist, points).into_iter().filter(|&j| j != i).collect();
        max_degree = max_degree.max(nb.len());
        let used: Vec<usize> = nb.iter().map(|&j| colors[j]).filter(|&c| c != usize::MAX).collect();
        colors[i] = (0..).find(|c| !used.contains(c)).unwrap();
    }
    let n_colors = colors.iter().map(|c| c + 1).max().unwrap_or(0);
    Coloring { colors, n_colors, max_degree }
}

impl Net {
    pub fn color(&self, d: f64) -> Coloring {
        greedy_color(&self.points, d * self.delta)
    }

    /// Number of net points in `B(x, c)` and the volume bound `(2c/δ + 1)^d`.
    pub fn packing_count(&self, x: &[f64], c: f64) -> (usize, f64) {
        let count = self.points.iter().filter(|p| dist(p, x) <= c).count();
        (count, (2.0 * c / self.delta + 1.0).powi(x.len() as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_net() {
        let y = SubmanifoldY::real_interval(1, -1.0, 1.0).unwrap();
        let net = discretize_window(&y, 4).unwrap();
        assert!((2..=5).contains(&net.points.len()));
        assert!(net.covering_radius <= 0.5);
    }

    #[test]
    fn collinear_colouring() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let c = greedy_color(&pts, 2.0);
        assert!((2..=3).contains(&c.n_colors));
        assert_eq!(greedy_color(&pts, 1.0).n_colors, 1);
    }

    #[test]
    fn too_large_window() {
        let y = SubmanifoldY::real_interval(1, 0.0, 1e3).unwrap();
        assert!(matches!(discretize_window(&y, 10_000), Err(Error::NetTooLarge(_))));
    }

    #[test]
    fn square_net_is_separated_and_covers() {
        let y = SubmanifoldY::real_square(-0.5, 0.5).unwrap();
        let net = discretize_window(&y, 64).unwrap();
        for (i, p) in net.points.iter().enumerate() {
            for q in &net.points[i + 1..] {
                assert!(dist(p, q) >= net.delta - 1e-12);
            }
        }
        let (count, bound) = net.packing_count(&[0.0, 0.0], 0.3);
        assert!(count as f64 <= bound);
    }
}
