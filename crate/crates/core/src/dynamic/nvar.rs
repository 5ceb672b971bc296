use crate::error::{Error, Result};
use crate::matrix::{is_divergence, NonnegMatrix, EPS};
use crate::plca::is_nmf_update_w;

/// Stacks the `J` previous coefficient vectors of every frame into an `IJ x T` matrix.
///
/// Column `t` is `[h_{t-1}; h_{t-2}; ...; h_{t-J}]`, with all-ones vectors
/// standing in for predecessors before the first frame.
pub fn build_lag_matrix(h: &NonnegMatrix, order: usize) -> Result<NonnegMatrix> {
    if order == 0 {
        return Err(Error::InvalidArgument("lag matrix needs order >= 1".into()));
    }
    let (i_dim, t_dim) = h.shape();
    Ok(NonnegMatrix::from_fn(i_dim * order, t_dim, |row, t| {
        let lag = row / i_dim + 1;
        match t.checked_sub(lag) {
            Some(src) => h.get(row % i_dim, src),
            None => 1.0,
        }
    }))
}

/// `d_IS(H ‖ A V)`, the part of the objective that depends on the lag matrices.
pub fn nvar_divergence(h: &NonnegMatrix, a: &NonnegMatrix, v: &NonnegMatrix) -> Result<f64> {
    let approx = a.matmul(v)?.floored(EPS);
    is_divergence(&h.floored(EPS), &approx)
}

/// Maximum-likelihood update of the stacked lag matrix `A = [A_1 ... A_J]`.
///
/// This is IS-NMF with the lagged coefficients `V` held fixed as the
/// activation matrix. Only the basis update is applied, `sweeps` times. The
/// columns of `A` are never renormalized, so per-lag scale carries the lag's
/// weight.
pub fn estimate_nvar(h: &NonnegMatrix, a: &NonnegMatrix, v: &NonnegMatrix, sweeps: usize) -> Result<NonnegMatrix> {
    if a.rows() != h.rows() || a.cols() != v.rows() || v.cols() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "H {:?} vs A {:?} * V {:?}",
            h.shape(),
            a.shape(),
            v.shape()
        )));
    }
    let target = h.floored(EPS);
    let v = v.floored(EPS);
    let mut a = a.floored(EPS);
    for _ in 0..sweeps {
        a = is_nmf_update_w(&target, &a, &v)?.floored(EPS);
    }
    Ok(a)
}
