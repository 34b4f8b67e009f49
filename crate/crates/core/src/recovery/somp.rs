//! Column-space annihilators and simultaneous OMP for the offsets where one
//! edge symbol cannot be resolved and has to be projected out.

use super::omp::pick_atom;
use crate::error::{Result, SenseError};
use crate::linalg::{complement_basis, pinv_solve, CMat, CVec};
use crate::model::SupportSet;

/// Rows form an orthonormal basis of the orthogonal complement of the
/// column space of `mtx`; `P mtx = 0`. `rel_tol` is relative to the largest
/// singular value. A matrix with no columns yields the identity.
pub fn column_space_annihilator(mtx: &CMat, rel_tol: f64) -> CMat {
    complement_basis(mtx, rel_tol).adjoint()
}

#[derive(Debug, Clone)]
pub struct SompFit {
    /// Atoms in the order they were selected (0-based).
    pub order: Vec<usize>,
    pub support: SupportSet,
    /// `|S| x N_b` coefficients; row `i` belongs to the `i`-th smallest
    /// support index.
    pub coeffs: CMat,
}

/// Simultaneous OMP: one shared support for every frame, chosen greedily by
/// the summed absolute correlation with the per-frame residuals, refit by
/// minimum-norm least squares.
pub fn somp(frames: &[CVec], atoms: &CMat, k: usize) -> Result<SompFit> {
    let (rows, n_atoms) = atoms.shape();
    if k == 0 || k > n_atoms {
        return Err(SenseError::InvalidConfig(format!(
            "SOMP sparsity {k} outside [1, {n_atoms}]"
        )));
    }
    if frames.iter().any(|f| f.len() != rows) {
        return Err(SenseError::DimensionMismatch(format!(
            "SOMP frames must have length {rows}"
        )));
    }
    let z = CMat::from_columns(frames);
    let mut residual = z.clone();
    let mut order = Vec::with_capacity(k);
    let mut support = SupportSet::default();
    let mut coeffs = CMat::zeros(0, frames.len());

    for _ in 0..k {
        let corr = atoms.adjoint() * &residual;
        let scores: Vec<f64> = corr
            .row_iter()
            .map(|row| row.iter().map(|c| c.norm()).sum())
            .collect();
        let j = pick_atom(&scores, &order).expect("k <= n_atoms leaves a candidate");
        order.push(j);
        support = SupportSet::new(order.clone(), n_atoms)?;
        let sub = atoms.select_columns(support.indices());
        coeffs = pinv_solve(&sub, &z);
        residual = &z - &sub * &coeffs;
    }

    Ok(SompFit {
        order,
        support,
        coeffs,
    })
}
