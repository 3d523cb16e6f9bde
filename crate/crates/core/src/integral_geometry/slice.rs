use crate::error::{Error, Result};
use crate::integral_geometry::grassmann::AffineSlice;
use crate::integral_geometry::sets::{ImplicitSet, Region, SetMode};
use crate::polynomial::poly::{cluster, horner, real_roots};
use crate::polynomial::MultiPoly;

pub const GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceCount {
    /// Components of `A ∩ F ∩ B(0, R)`.
    pub total: usize,
    /// Those not meeting the obstacle.
    pub disjoint: usize,
}

/// Count the components of `A ∩ F ∩ B(0, ball_radius)` and how many of them
/// avoid `b`. One-dimensional slices are exact up to root isolation; planar
/// slices use a cell grid. `Ok(None)` marks a sample to discard (a slice
/// contained in `A`, or grid counts that do not stabilise).
pub fn slice_components(
    a: &ImplicitSet,
    f: &AffineSlice,
    ball_radius: f64,
    b: &Region,
) -> Result<Option<SliceCount>> {
    let r2 = ball_radius * ball_radius - f.offset.iter().map(|x| x * x).sum::<f64>();
    if r2 < 0.0 {
        return Ok(Some(SliceCount { total: 0, disjoint: 0 }));
    }
    let half = r2.sqrt();
    let restricted: Vec<MultiPoly> = a.polys.iter().map(|p| p.compose_affine(&f.offset, &f.frame)).collect();
    match f.dim() {
        1 => Ok(count_1d(a, &restricted, f, half, ball_radius, b)),
        2 => {
            if a.mode == SetMode::ZeroSet && a.polys.len() > 1 {
                return Err(Error::InvalidParameter(
                    "planar slices of a common zero set of several polynomials are not supported".into(),
                ));
            }
            let c1 = count_2d(&restricted, f, half, b, GRID);
            let c0 = count_2d(&restricted, f, half, b, GRID / 2);
            if c0 == c1 {
                return Ok(c1);
            }
            let c2 = count_2d(&restricted, f, half, b, 2 * GRID);
            Ok(if c2 == c1 { c1 } else { None })
        }
        d => Err(Error::InvalidParameter(format!("slices of dimension {d} are not supported"))),
    }
}

fn count_1d(
    a: &ImplicitSet,
    restricted: &[MultiPoly],
    f: &AffineSlice,
    half: f64,
    ball_radius: f64,
    b: &Region,
) -> Option<SliceCount> {
    let coeffs: Vec<Vec<f64>> = restricted.iter().map(|q| q.univariate_coeffs()).collect();
    let mut roots = Vec::new();
    match a.mode {
        SetMode::Union => {
            for c in &coeffs {
                roots.extend(real_roots(c, -half, half)?);
            }
        }
        SetMode::ZeroSet => {
            let base = real_roots(&coeffs[0], -half, half)?;
            for t in base {
                let ok = coeffs[1..].iter().all(|c| {
                    let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
                    horner(c, t).abs() <= 1e-9 * scale
                });
                if ok {
                    roots.push(t);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let pts = cluster(&roots, 1e-7 * ball_radius);
    let tol = 1e-9 * ball_radius;
    let disjoint = pts.iter().filter(|&&t| !b.contains(&f.point(&[t]), tol)).count();
    Some(SliceCount { total: pts.len(), disjoint })
}

fn count_2d(polys: &[MultiPoly], f: &AffineSlice, half: f64, b: &Region, res: usize) -> Option<SliceCount> {
    let h = 2.0 * half / res as f64;
    let nodes = res + 1;
    let coord = |i: usize| -half + h * i as f64;
    let mut active = vec![false; res * res];
    for p in polys {
        if p.is_zero() {
            return None;
        }
        let vals: Vec<f64> = (0..nodes * nodes).map(|idx| p.eval(&[coord(idx % nodes), coord(idx / nodes)])).collect();
        for j in 0..res {
            for i in 0..res {
                let (cx, cy) = (coord(i) + 0.5 * h, coord(j) + 0.5 * h);
                if cx * cx + cy * cy > half * half {
                    continue;
                }
                let v = [vals[j * nodes + i], vals[j * nodes + i + 1], vals[(j + 1) * nodes + i], vals[(j + 1) * nodes + i + 1]];
                let pos = v.iter().any(|&x| x >= 0.0);
                let neg = v.iter().any(|&x| x <= 0.0);
                if pos && neg {
                    active[j * res + i] = true;
                }
            }
        }
    }
    let reach = h * std::f64::consts::FRAC_1_SQRT_2;
    let mut label = vec![usize::MAX; res * res];
    let (mut total, mut disjoint) = (0, 0);
    let mut stack = Vec::new();
    for start in 0..res * res {
        if !active[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = total;
        stack.push(start);
        let mut touches = false;
        while let Some(c) = stack.pop() {
            let (i, j) = (c % res, c / res);
            if !touches {
                let x = f.point(&[coord(i) + 0.5 * h, coord(j) + 0.5 * h]);
                touches = b.distance(&x) <= reach;
            }
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= res as i64 || nj >= res as i64 {
                        continue;
                    }
                    let nc = nj as usize * res + ni as usize;
                    if active[nc] && label[nc] == usize::MAX {
                        label[nc] = total;
                        stack.push(nc);
                    }
                }
            }
        }
        total += 1;
        if !touches {
            disjoint += 1;
        }
    }
    Some(SliceCount { total, disjoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integral_geometry::sets::Ball;
    use nalgebra::DMatrix;

    fn circle(cx: f64, cy: f64, r: f64) -> MultiPoly {
        MultiPoly::new(
            2,
            vec![
                (vec![2, 0], 1.0),
                (vec![0, 2], 1.0),
                (vec![1, 0], -2.0 * cx),
                (vec![0, 1], -2.0 * cy),
                (vec![0, 0], cx * cx + cy * cy - r * r),
            ],
        )
        .unwrap()
    }

    fn horizontal(y: f64) -> AffineSlice {
        AffineSlice { offset: vec![0.0, y], frame: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]) }
    }

    #[test]
    fn circle_and_lines() {
        let a = ImplicitSet::hypersurface(circle(0.0, 0.0, 1.0));
        let c = slice_components(&a, &horizontal(0.0), 3.0, &Region::Empty).unwrap().unwrap();
        assert_eq!(c, SliceCount { total: 2, disjoint: 2 });
        let c = slice_components(&a, &horizontal(2.0), 3.0, &Region::Empty).unwrap().unwrap();
        assert_eq!(c.total, 0);
    }

    #[test]
    fn annulus_obstacle() {
        let a = ImplicitSet::new(vec![circle(0.0, 0.0, 1.0), circle(0.0, 0.0, 2.0)], SetMode::Union).unwrap();
        let b = Region::Annulus { center: vec![0.0, 0.0], inner: 1.5, outer: 2.5 };
        let c = slice_components(&a, &horizontal(0.0), 3.0, &b).unwrap().unwrap();
        assert_eq!(c, SliceCount { total: 4, disjoint: 2 });
    }

    #[test]
    fn planar_component_count() {
        let a = ImplicitSet::new(
            vec![circle(-0.5, 0.0, 0.2), circle(0.5, 0.0, 0.2), circle(0.0, 0.5, 0.2)],
            SetMode::Union,
        )
        .unwrap();
        let c = slice_components(&a, &AffineSlice::whole_space(2), 1.0, &Region::Empty).unwrap().unwrap();
        assert_eq!(c.total, 3);
        let ball = Region::Sphere(Ball::new(vec![0.0, 0.0], 0.6));
        let c = slice_components(&a, &AffineSlice::whole_space(2), 0.6, &ball).unwrap().unwrap();
        assert_eq!(c.disjoint, 0);
    }

    #[test]
    fn slice_inside_set_is_discarded() {
        let a = ImplicitSet::hypersurface(MultiPoly::var(2, 1));
        assert_eq!(slice_components(&a, &horizontal(0.0), 1.0, &Region::Empty).unwrap(), None);
    }
}
