//! Linear-algebra core: injectivity and surjectivity moduli, the complex
//! decomposition of a real map, restriction to subspaces, and the two
//! structural inequalities (hyperplane sandwich, chained surjectivity bound).
//!
//! A real linear map is stored as a `target_dim x source_dim` matrix. Complex
//! vector spaces use interleaved coordinates `(Re z1, Im z1, Re z2, ...)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const J_TOL: f64 = 1e-9;
const FRAME_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMapR {
    pub matrix: DMatrix<f64>,
    pub j_src: Option<DMatrix<f64>>,
    pub j_dst: Option<DMatrix<f64>>,
}

impl LinearMapR {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        LinearMapR { matrix, j_src: None, j_dst: None }
    }

    pub fn with_complex(matrix: DMatrix<f64>, j_src: DMatrix<f64>, j_dst: DMatrix<f64>) -> Result<Self> {
        check_j(&j_src, matrix.ncols())?;
        check_j(&j_dst, matrix.nrows())?;
        Ok(LinearMapR { matrix, j_src: Some(j_src), j_dst: Some(j_dst) })
    }

    /// Realification of a complex `m x n` matrix, with standard structures.
    pub fn from_complex(c: &DMatrix<Complex64>) -> Self {
        LinearMapR {
            matrix: realify(c),
            j_src: Some(standard_j(c.ncols())),
            j_dst: Some(standard_j(c.nrows())),
        }
    }

    pub fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn transpose(&self) -> LinearMapR {
        LinearMapR {
            matrix: self.matrix.transpose(),
            j_src: self.j_dst.as_ref().map(|j| j.transpose()),
            j_dst: self.j_src.as_ref().map(|j| j.transpose()),
        }
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.matrix)
    }
}

fn check_j(j: &DMatrix<f64>, dim: usize) -> Result<()> {
    if j.nrows() != dim || j.ncols() != dim {
        return Err(Error::InvalidComplexStructure(format!(
            "expected {dim}x{dim}, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    let defect = (j * j + DMatrix::<f64>::identity(dim, dim)).amax();
    if defect > J_TOL {
        return Err(Error::InvalidComplexStructure(format!("J^2 + I has entry {defect:.3e}")));
    }
    Ok(())
}

/// Multiplication by `i` on `C^n` in interleaved real coordinates.
pub fn standard_j(n_complex: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n_complex, 2 * n_complex);
    for b in 0..n_complex {
        j[(2 * b + 1, 2 * b)] = 1.0;
        j[(2 * b, 2 * b + 1)] = -1.0;
    }
    j
}

pub fn realify(c: &DMatrix<Complex64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * c.nrows(), 2 * c.ncols());
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            let z = c[(i, j)];
            m[(2 * i, 2 * j)] = z.re;
            m[(2 * i, 2 * j + 1)] = -z.im;
            m[(2 * i + 1, 2 * j)] = z.im;
            m[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    m
}

/// Singular values in decreasing order. Empty matrices have none.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(c, c);
    }
    // Pad with zero rows so the thin SVD returns the full right factor.
    let rows = r.max(c);
    let mut padded = DMatrix::zeros(rows, c);
    padded.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.amax();
    let cut = RANK_TOL * smax.max(f64::MIN_POSITIVE) * rows as f64;
    let idx: Vec<usize> = (0..c).filter(|&i| svd.singular_values[i] <= cut || smax == 0.0).collect();
    let mut basis = DMatrix::zeros(c, idx.len());
    for (col, &i) in idx.iter().enumerate() {
        basis.set_column(col, &vt.row(i).transpose());
    }
    basis
}

/// Injectivity modulus: `min { |u v| : |v| = 1 }`.
pub fn mi(u: &LinearMapR) -> Result<f64> {
    mi_matrix(&u.matrix)
}

/// Surjectivity modulus: the injectivity modulus of the adjoint.
pub fn ms(u: &LinearMapR) -> Result<f64> {
    ms_matrix(&u.matrix)
}

pub fn mi_matrix(m: &DMatrix<f64>) -> Result<f64> {
    if m.ncols() == 0 {
        return Err(Error::EmptyDomain);
    }
    if m.nrows() < m.ncols() {
        return Ok(0.0);
    }
    Ok(singular_values(m).last().copied().unwrap_or(0.0))
}

pub fn ms_matrix(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Err(Error::EmptyDomain);
    }
    if m.ncols() < m.nrows() {
        return Ok(0.0);
    }
    Ok(singular_values(m).last().copied().unwrap_or(0.0))
}

/// Complex-linear and antilinear parts, `u = u10 + u01`.
pub fn complex_split(u: &LinearMapR) -> Result<(LinearMapR, LinearMapR)> {
    let (js, jd) = match (&u.j_src, &u.j_dst) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingComplexStructure),
    };
    let conj = jd * &u.matrix * js;
    let lin = (&u.matrix - &conj) * 0.5;
    let anti = (&u.matrix + &conj) * 0.5;
    let wrap = |m| LinearMapR { matrix: m, j_src: u.j_src.clone(), j_dst: u.j_dst.clone() };
    Ok((wrap(lin), wrap(anti)))
}

/// A linear subspace given by an orthonormal frame (ambient x dim).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub frame: DMatrix<f64>,
}

impl Subspace {
    pub fn new(frame: DMatrix<f64>) -> Result<Self> {
        let d = frame.ncols();
        let defect = if d == 0 {
            0.0
        } else {
            (frame.transpose() * &frame - DMatrix::<f64>::identity(d, d)).amax()
        };
        if defect > FRAME_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Subspace { frame })
    }

    /// Orthogonal complement of the span of the given columns.
    pub fn complement_of(vectors: &DMatrix<f64>) -> Subspace {
        Subspace { frame: null_space(&vectors.transpose()) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }
}

pub fn restrict(u: &LinearMapR, s: &Subspace) -> Result<LinearMapR> {
    if s.ambient_dim() != u.source_dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace lives in R^{}, map source is R^{}",
            s.ambient_dim(),
            u.source_dim()
        )));
    }
    Ok(LinearMapR { matrix: &u.matrix * &s.frame, j_src: None, j_dst: u.j_dst.clone() })
}

/// `max(a |value|, b ms)`.
pub fn mt(value_norm: f64, ms_grad: f64, weights: (f64, f64)) -> f64 {
    (weights.0 * value_norm).max(weights.1 * ms_grad)
}

/// Transversality module with the weights `(1, k^{-1/2})`.
pub fn weighted_mt(value_norm: f64, ms_grad: f64, k: f64) -> f64 {
    mt(value_norm, ms_grad, (1.0, k.powf(-0.5)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub ms_k: f64,
    pub ms_h: f64,
    pub antilinear_norm: f64,
}

impl Sandwich {
    pub fn lower_slack(&self) -> f64 {
        self.ms_k - (self.ms_h - 2.0 * self.antilinear_norm)
    }

    pub fn upper_slack(&self) -> f64 {
        self.ms_h - self.ms_k
    }
}

/// Compare the surjectivity of `u` on a real hyperplane `H` and on the
/// complex hyperplane `K = H ∩ J(H)` it contains.
pub fn hyperplane_sandwich(u: &LinearMapR, h: &Subspace) -> Result<Sandwich> {
    let js = u.j_src.as_ref().ok_or(Error::MissingComplexStructure)?;
    let n = u.source_dim();
    if h.ambient_dim() != n || h.dim() + 1 != n {
        return Err(Error::DimensionMismatch("H must be a hyperplane of the source".into()));
    }
    let normal = null_space(&h.frame.transpose());
    if normal.ncols() != 1 {
        return Err(Error::Degenerate("hyperplane frame has wrong rank".into()));
    }
    let nu = normal.column(0).into_owned();
    // K is cut out by nu and by the normal of J(H), which is J^{-T} nu = -J^T nu.
    let mut rows = DMatrix::zeros(2, n);
    rows.set_row(0, &nu.transpose());
    rows.set_row(1, &(js.transpose() * &nu).transpose());
    let k = Subspace { frame: null_space(&rows) };

    let ms_h = ms(&restrict(u, h)?)?;
    let ms_k = ms(&restrict(u, &k)?)?;
    let (_, anti) = complex_split(u)?;
    let out = Sandwich { ms_k, ms_h, antilinear_norm: anti.op_norm() };
    let tol = 1e-10 * (1.0 + u.op_norm());
    if out.lower_slack() < -tol || out.upper_slack() < -tol {
        return Err(Error::Contract(format!("hyperplane sandwich violated: {out:?}")));
    }
    Ok(out)
}

/// Residual `MS u1 * MS(u2|ker u1) - MS u * (MS u1 + MS(u2|ker u1) + |u2|)`,
/// where `u = (u1, u2)`. Non-positive when the inequality holds.
///
/// The restriction of `u2` to a trivial kernel has `MS = 0`. If either target
/// is zero-dimensional the inequality is vacuous and `-inf` is returned.
pub fn chained_ms_bound(u1: &LinearMapR, u2: &LinearMapR) -> Result<f64> {
    if u1.source_dim() != u2.source_dim() {
        return Err(Error::DimensionMismatch("u1 and u2 must share their source".into()));
    }
    if u1.source_dim() == 0 {
        return Err(Error::EmptyDomain);
    }
    if u1.target_dim() == 0 || u2.target_dim() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let ms1 = ms(u1)?;
    let ker = null_space(&u1.matrix);
    let ms2 = if ker.ncols() == 0 { 0.0 } else { ms_matrix(&(&u2.matrix * &ker))? };
    let (r1, r2, c) = (u1.target_dim(), u2.target_dim(), u1.source_dim());
    let mut stacked = DMatrix::zeros(r1 + r2, c);
    stacked.view_mut((0, 0), (r1, c)).copy_from(&u1.matrix);
    stacked.view_mut((r1, 0), (r2, c)).copy_from(&u2.matrix);
    let ms_u = ms_matrix(&stacked)?;
    Ok(ms1 * ms2 - ms_u * (ms1 + ms2 + u2.op_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_and_diagonal() {
        let id = LinearMapR::new(DMatrix::identity(3, 3));
        assert_abs_diff_eq!(mi(&id).unwrap(), 1.0, epsilon = 1e-14);
        let d = LinearMapR::new(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]));
        assert_abs_diff_eq!(mi(&d).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ms_small_cases() {
        let row = LinearMapR::new(DMatrix::from_row_slice(1, 2, &[2.0, 0.0]));
        assert_abs_diff_eq!(ms(&row).unwrap(), 2.0, epsilon = 1e-14);
        let tall = LinearMapR::new(DMatrix::from_element(3, 2, 1.0));
        assert_eq!(ms(&tall).unwrap(), 0.0);
        assert_eq!(mi(&LinearMapR::new(DMatrix::from_element(1, 2, 1.0))).unwrap(), 0.0);
    }

    #[test]
    fn empty_domain_is_an_error() {
        assert_eq!(mi(&LinearMapR::new(DMatrix::zeros(2, 0))), Err(Error::EmptyDomain));
        assert_eq!(ms(&LinearMapR::new(DMatrix::zeros(0, 2))), Err(Error::EmptyDomain));
        assert_eq!(mi(&LinearMapR::new(DMatrix::zeros(0, 2))).unwrap(), 0.0);
    }

    #[test]
    fn weighted_module_example() {
        assert_abs_diff_eq!(weighted_mt(0.1, 0.6, 4.0), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn split_of_identity_and_conjugation() {
        let id = LinearMapR::from_complex(&DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
        let (l, a) = complex_split(&id).unwrap();
        assert_abs_diff_eq!(l.matrix, id.matrix, epsilon = 1e-15);
        assert!(a.matrix.amax() < 1e-15);
        let conj = LinearMapR {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            ..id.clone()
        };
        let (l, a) = complex_split(&conj).unwrap();
        assert!(l.matrix.amax() < 1e-15);
        assert_abs_diff_eq!(a.matrix, conj.matrix, epsilon = 1e-15);
    }

    #[test]
    fn split_without_structure_fails() {
        let u = LinearMapR::new(DMatrix::identity(2, 2));
        assert_eq!(complex_split(&u).unwrap_err(), Error::MissingComplexStructure);
    }

    #[test]
    fn bad_j_rejected() {
        let err = LinearMapR::with_complex(DMatrix::identity(2, 2), DMatrix::identity(2, 2), standard_j(1));
        assert!(matches!(err, Err(Error::InvalidComplexStructure(_))));
    }

    #[test]
    fn restrict_projection_to_line() {
        let p = LinearMapR::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let line = Subspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(ms(&restrict(&p, &line).unwrap()).unwrap(), 1.0, epsilon = 1e-15);
        let other = Subspace::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(ms(&restrict(&p, &other).unwrap()).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn null_space_dimensions() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let k = null_space(&m);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).amax() < 1e-14);
        assert_eq!(null_space(&DMatrix::identity(3, 3)).ncols(), 0);
    }

    #[test]
    fn sandwich_of_zero_map() {
        let u = LinearMapR::from_complex(&DMatrix::from_element(1, 2, Complex64::new(0.0, 0.0)));
        let h = Subspace::complement_of(&DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]));
        let s = hyperplane_sandwich(&u, &h).unwrap();
        assert_eq!((s.ms_k, s.ms_h, s.antilinear_norm), (0.0, 0.0, 0.0));
    }

    #[test]
    fn chained_with_trivial_kernel() {
        let u1 = LinearMapR::new(DMatrix::identity(2, 2));
        let u2 = LinearMapR::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert!(chained_ms_bound(&u1, &u2).unwrap() <= 1e-12);
    }
}
