//! Least squares against the block-bidiagonal restricted dictionary without
//! assembling it.
//!
//! Block row `n` couples block columns `n` (through `b1`) and `n + 1`
//! (through `b2`). Columns are eliminated left to right: at each stage the
//! rows touching block column `j` are factored with a truncated SVD, the
//! part of the system they span is set aside for back substitution, and
//! what remains is compressed by a thin QR into at most `k` rows that carry
//! over to block column `j + 1`. Every transform is unitary on its rows, so
//! the dropped rows are exactly the least-squares residual and the stage
//! ranks sum to the rank of the full matrix.

use nalgebra::DVector;

use crate::linalg::{rank_tolerance, singular_values, vstack, CMat, CVec, TruncatedSvd};

#[derive(Debug, Clone)]
pub struct BlockLsFit {
    /// One coefficient block per symbol, `s_S[0..=N_b]`.
    pub coeffs: Vec<CVec>,
    /// `||z - B_{d,S} s_S||^2` at the minimizer, i.e. the squared distance
    /// from `z` to the column space.
    pub residual_sq: f64,
    /// Numerical rank of the restricted dictionary.
    pub rank: usize,
}

impl BlockLsFit {
    pub fn stacked(&self) -> CVec {
        crate::linalg::concat_vectors(&self.coeffs)
    }
}

struct Stage {
    svd: TruncatedSvd,
    /// `U_r^H` applied to the next block column's coefficients.
    coupling: CMat,
    /// `U_r^H` applied to the right-hand side.
    rhs: CVec,
}

/// Absolute singular-value cut shared by every stage: the crate-wide
/// relative tolerance scaled by an upper bound on `||B_{d,S}||_2`.
fn absolute_cut(b1: &CMat, b2: &CMat, n_blocks: usize) -> f64 {
    let top = |m: &CMat| singular_values(m).first().copied().unwrap_or(0.0);
    let (rows, cols) = (b2.nrows() * n_blocks, b2.ncols() * (n_blocks + 1));
    rank_tolerance(rows, cols) * (top(b1) + top(b2))
}

pub fn solve_block_bidiagonal(b1: &CMat, b2: &CMat, frames: &[CVec]) -> BlockLsFit {
    let (m, k) = b2.shape();
    let n_blocks = frames.len();
    let cut = absolute_cut(b1, b2, n_blocks);

    let mut carry_t = CMat::zeros(0, k);
    let mut carry_y = CVec::zeros(0);
    let mut residual_sq = 0.0;
    let mut rank = 0;
    let mut stages = Vec::with_capacity(n_blocks);

    for z in frames {
        let c = carry_t.nrows();
        let local = vstack(&carry_t, b1);
        let mut next = CMat::zeros(c + m, k);
        next.view_mut((c, 0), (m, k)).copy_from(b2);
        let mut y = CVec::zeros(c + m);
        y.rows_mut(0, c).copy_from(&carry_y);
        y.rows_mut(c, m).copy_from(z);

        let svd = TruncatedSvd::new(&local, cut);
        let coupling = svd.u.adjoint() * &next;
        let rhs = svd.u.adjoint() * &y;
        rank += svd.rank();

        // Rows orthogonal to the span of U_r, via a Householder basis
        // completion of U_r. Empty when U_r spans everything.
        let r = svd.rank();
        let mut both = CMat::zeros(c + m, k + 1);
        both.view_mut((0, 0), (c + m, k)).copy_from(&next);
        both.set_column(k, &y);
        if r > 0 {
            svd.u.clone().qr().q_tr_mul(&mut both);
        }
        let rest = both.view((r, 0), (c + m - r, k)).into_owned();
        let mut rest_y: CVec = both.view((r, k), (c + m - r, 1)).column(0).into_owned();

        // Compress to at most k rows; anything below is pure residual.
        let keep = rest.nrows().min(k);
        if rest.nrows() > 0 {
            let qr = rest.qr();
            qr.q_tr_mul(&mut rest_y);
            carry_t = qr.r();
        } else {
            carry_t = CMat::zeros(0, k);
        }
        residual_sq += rest_y.rows(keep, rest_y.len() - keep).norm_squared();
        carry_y = rest_y.rows(0, keep).into_owned();

        stages.push(Stage { svd, coupling, rhs });
    }

    let last = TruncatedSvd::new(&carry_t, cut);
    rank += last.rank();
    let y_mat = CMat::from_column_slice(carry_y.len(), 1, carry_y.as_slice());
    let x_last: CVec = last.solve(&y_mat).column(0).into_owned();
    residual_sq += (&carry_y - &carry_t * &x_last).norm_squared();

    let mut coeffs = vec![CVec::zeros(k); n_blocks + 1];
    coeffs[n_blocks] = x_last;
    for (j, stage) in stages.iter().enumerate().rev() {
        let t = &stage.rhs - &stage.coupling * &coeffs[j + 1];
        let scaled =
            DVector::from_iterator(t.len(), t.iter().zip(&stage.svd.sigma).map(|(v, s)| v / *s));
        coeffs[j] = &stage.svd.v * scaled;
    }

    BlockLsFit {
        coeffs,
        residual_sq,
        rank,
    }
}

/// `z[n] - b1 x[n] - b2 x[n+1]` for every block row.
pub fn block_residual(b1: &CMat, b2: &CMat, frames: &[CVec], coeffs: &[CVec]) -> Vec<CVec> {
    frames
        .iter()
        .enumerate()
        .map(|(n, z)| z - b1 * &coeffs[n] - b2 * &coeffs[n + 1])
        .collect()
}
