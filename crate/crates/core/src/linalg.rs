//! Dense complex linear-algebra helpers shared by the solver and the
//! theory checks. Every rank judgement in the crate goes through
//! [`rank_tolerance`] so both sides agree on what "numerically zero" means.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative singular-value threshold for a `rows x cols` matrix:
/// `max(rows, cols) * eps`. A singular value counts as nonzero when it
/// exceeds this fraction of the largest singular value.
pub fn rank_tolerance(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// `(U, sigma, V)` with `m = U diag(sigma) V^H`, sigma descending. `full`
/// asks for the square `U`; otherwise it is thin.
///
/// faer's SVD is used rather than nalgebra's: the latter occasionally
/// returns a factorization that is off in the fourth digit for complex
/// input.
fn svd_parts(m: &CMat, full: bool) -> (CMat, Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = if full { fm.svd() } else { fm.thin_svd() }.expect("svd converges");
    let (u, v) = (svd.U(), svd.V());
    let sigma = svd.S().column_vector().iter().map(|s| s.re).collect();
    (
        CMat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        sigma,
        CMat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    )
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Singular values in descending order. Empty matrices have none.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let fm = faer::Mat::<Complex64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    fm.singular_values().expect("svd converges")
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn rank_from_singular_values(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let cut = rel_tol * smax;
    sv.iter().filter(|&&s| s > cut).count()
}

pub fn numerical_rank_with(m: &CMat, rel_tol: f64) -> usize {
    rank_from_singular_values(&singular_values(m), rel_tol)
}

pub fn numerical_rank(m: &CMat) -> usize {
    numerical_rank_with(m, rank_tolerance(m.nrows(), m.ncols()))
}

/// Thin SVD pieces truncated to the numerical rank: `(U_r, sigma_r, V_r)`
/// with `m ~= U_r diag(sigma_r) V_r^H`.
pub struct TruncatedSvd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

impl TruncatedSvd {
    /// `abs_cut` is an absolute threshold on singular values.
    pub fn new(m: &CMat, abs_cut: f64) -> Self {
        let (rows, cols) = m.shape();
        if rows == 0 || cols == 0 {
            return Self {
                u: CMat::zeros(rows, 0),
                sigma: Vec::new(),
                v: CMat::zeros(cols, 0),
            };
        }
        let (u, mut sigma, v) = svd_parts(m, false);
        let r = sigma.iter().take_while(|&&s| s > abs_cut).count();
        sigma.truncate(r);
        Self {
            u: u.columns(0, r).into_owned(),
            sigma,
            v: v.columns(0, r).into_owned(),
        }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Minimum-norm least-squares solution `V_r diag(1/sigma_r) U_r^H rhs`.
    pub fn solve(&self, rhs: &CMat) -> CMat {
        let mut tmp = self.u.adjoint() * rhs;
        for (i, s) in self.sigma.iter().enumerate() {
            tmp.row_mut(i).scale_mut(1.0 / s);
        }
        &self.v * tmp
    }
}

/// Minimum-norm least-squares fit of every column of `rhs` against `m`,
/// using the crate-wide relative rank tolerance.
pub fn pinv_solve(m: &CMat, rhs: &CMat) -> CMat {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = rank_tolerance(m.nrows(), m.ncols()) * smax;
    TruncatedSvd::new(m, cut).solve(rhs)
}

/// Orthonormal basis (as columns) of the orthogonal complement of the
/// column space of `m`, in `C^rows`. `rel_tol` is relative to `sigma_max`.
pub fn complement_basis(m: &CMat, rel_tol: f64) -> CMat {
    let rows = m.nrows();
    if rows == 0 {
        return CMat::zeros(0, 0);
    }
    let cols = m.ncols();
    if cols == 0 {
        return CMat::identity(rows, rows);
    }
    let (u, sigma, _) = svd_parts(m, true);
    let r = rank_from_singular_values(&sigma, rel_tol);
    u.columns(r, rows - r).into_owned()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vstack(top: &CMat, bottom: &CMat) -> CMat {
    assert_eq!(top.ncols(), bottom.ncols(), "vstack column mismatch");
    let mut out = CMat::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape())
        .copy_from(bottom);
    out
}

pub fn concat_vectors(parts: &[CVec]) -> CVec {
    let len = parts.iter().map(|v| v.len()).sum();
    let mut out = CVec::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(p);
        at += p.len();
    }
    out
}
