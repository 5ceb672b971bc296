//! Dynamic NMF as a nonnegative state-space model.
//!
//! The coefficients `h_t` are state variables. Each is exponentially
//! distributed around the prediction `η_t = Σ_j A_j h_{t-j}` of a nonnegative
//! vector autoregression. Observations are multinomial draws from `W h_t`,
//! which makes the observation side ordinary PLCA.
//!
//! Estimation follows the Kalman pattern. [`predict_state`] forms `η_t` from
//! the past, and [`update_state`] reweights the current frame's PLCA counts
//! against it via a scalar Lagrange multiplier ([`solve_beta`]). [`train`]
//! learns `W` and the lag matrices with EM. [`FilterState`] runs the causal,
//! frame-by-frame filter against a fixed model.

mod filter;
mod newton;
mod nvar;
mod state;
mod train;

pub use filter::{anneal, filter_sequence, FilterConfig, FilterState, DEFAULT_INNER_ITERS};
pub use newton::{solve_beta, solve_multiplier, MultiplierSolution, BETA_MAX_ITERS, BETA_TOL};
pub use nvar::{build_lag_matrix, estimate_nvar, nvar_divergence};
pub use state::{predict_state, update_state};
pub use train::{train, TrainConfig, TrainOutput, Trainer};

use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, StochasticMatrix, EPS};

/// Basis matrix plus N-VAR lag matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DnmfModel {
    w: StochasticMatrix,
    lags: Vec<NonnegMatrix>,
}

impl DnmfModel {
    /// Checks that `W` is `K x I` and every lag matrix is `I x I`.
    pub fn new(w: StochasticMatrix, lags: Vec<NonnegMatrix>) -> Result<Self> {
        let i_dim = w.cols();
        if let Some(bad) = lags.iter().find(|a| a.shape() != (i_dim, i_dim)) {
            return Err(Error::DimensionMismatch(format!(
                "lag matrix {:?} for a rank-{i_dim} basis",
                bad.shape()
            )));
        }
        Ok(Self { w, lags })
    }

    /// A model with no dynamics, i.e. static PLCA.
    pub fn static_model(w: StochasticMatrix) -> Self {
        Self { w, lags: Vec::new() }
    }

    pub fn basis(&self) -> &StochasticMatrix {
        &self.w
    }

    pub fn lags(&self) -> &[NonnegMatrix] {
        &self.lags
    }

    /// Observation dimension `K`.
    pub fn bins(&self) -> usize {
        self.w.rows()
    }

    /// Number of basis vectors `I`.
    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    /// N-VAR order `J`.
    pub fn order(&self) -> usize {
        self.lags.len()
    }

    /// `[A_1 A_2 ... A_J]` as one `I x IJ` matrix.
    pub fn stacked_lags(&self) -> Result<NonnegMatrix> {
        NonnegMatrix::hconcat_all(&self.lags)
    }
}

/// Joins two source models into one mixture model.
///
/// The bases are concatenated side by side and each lag matrix becomes
/// block-diagonal, so coefficients `0..I1` belong to `m1` and the rest to `m2`.
pub fn concat_models(m1: &DnmfModel, m2: &DnmfModel) -> Result<DnmfModel> {
    if m1.bins() != m2.bins() {
        return Err(Error::DimensionMismatch(format!(
            "models have {} and {} bins",
            m1.bins(),
            m2.bins()
        )));
    }
    if m1.order() != m2.order() {
        return Err(Error::DimensionMismatch(format!(
            "models have orders {} and {}",
            m1.order(),
            m2.order()
        )));
    }
    let w = m1.w.hconcat(&m2.w)?;
    let lags = m1
        .lags
        .iter()
        .zip(&m2.lags)
        .map(|(a, b)| a.block_diag(b))
        .collect();
    DnmfModel::new(w, lags)
}

/// MAP objective `log f(X | W, H) + log f(H | A)` with factorial constants dropped.
///
/// The data term is `Σ_kt x_kt log [W h_t]_k`; the prior term is
/// `-Σ_it (log η_it + h_it / η_it)` with `η_t` predicted from the previous
/// columns of `H` (all-ones before the first frame). Models with `J = 0`
/// contribute no prior term. Arguments inside logarithms are floored at [`EPS`].
pub fn map_objective(x: &NonnegMatrix, model: &DnmfModel, h: &NonnegMatrix) -> Result<f64> {
    if x.rows() != model.bins() || h.rows() != model.rank() || x.cols() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "X {:?}, H {:?} for a {}x{} basis",
            x.shape(),
            h.shape(),
            model.bins(),
            model.rank()
        )));
    }
    let wh = model.w.matmul(h)?;
    let data: f64 = x
        .as_slice()
        .iter()
        .zip(wh.as_slice())
        .filter(|(xv, _)| **xv > 0.0)
        .map(|(xv, p)| xv * p.max(EPS).ln())
        .sum();
    if model.order() == 0 {
        return Ok(data);
    }
    let frames = h.columns();
    let mut prior = 0.0;
    for (t, h_t) in frames.iter().enumerate() {
        let eta = state::predict_from(model, |j| t.checked_sub(j).map(|s| frames[s].as_slice()));
        prior -= h_t
            .iter()
            .zip(&eta)
            .map(|(hv, e)| e.ln() + hv / e)
            .sum::<f64>();
    }
    Ok(data + prior)
}

/// EM lower bound `Q(λ̂, λ)` up to additive constants.
///
/// The posteriors `f(z_t = i | k)` come from `(posterior_model, posterior_h)`,
/// the parameters at the start of an iteration; `(model, h)` are the new
/// estimates being scored:
///
/// `Σ_kti x_kt f_kti (log ŵ_ki + log ĥ_it) - Σ_it (log η̂_it + ĥ_it / η̂_it)`.
pub fn lower_bound(
    x: &NonnegMatrix,
    posterior_model: &DnmfModel,
    posterior_h: &NonnegMatrix,
    model: &DnmfModel,
    h: &NonnegMatrix,
) -> Result<f64> {
    let (k_dim, t_dim) = x.shape();
    let i_dim = model.rank();
    if posterior_model.bins() != k_dim
        || model.bins() != k_dim
        || posterior_model.rank() != i_dim
        || posterior_h.shape() != (i_dim, t_dim)
        || h.shape() != (i_dim, t_dim)
    {
        return Err(Error::DimensionMismatch("lower bound arguments disagree in shape".into()));
    }
    let w_old = posterior_model.basis().as_slice();
    let log_w: Vec<f64> = model.basis().as_slice().iter().map(|v| v.max(EPS).ln()).collect();
    let frames = h.columns();
    let mut bound = 0.0;
    for t in 0..t_dim {
        let h_old = posterior_h.column(t);
        let log_h: Vec<f64> = frames[t].iter().map(|v| v.max(EPS).ln()).collect();
        for k in 0..k_dim {
            let xv = x.get(k, t);
            if xv <= 0.0 {
                continue;
            }
            let wrow = &w_old[k * i_dim..(k + 1) * i_dim];
            let denom: f64 = wrow.iter().zip(&h_old).map(|(a, b)| a * b).sum::<f64>().max(EPS);
            for i in 0..i_dim {
                let resp = wrow[i] * h_old[i] / denom;
                bound += xv * resp * (log_w[k * i_dim + i] + log_h[i]);
            }
        }
        if model.order() > 0 {
            let eta = state::predict_from(model, |j| t.checked_sub(j).map(|s| frames[s].as_slice()));
            bound -= frames[t]
                .iter()
                .zip(&eta)
                .map(|(hv, e)| e.ln() + hv / e)
                .sum::<f64>();
        }
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plca::{random_stochastic, seeded_rng};

    fn model(w: StochasticMatrix, lags: Vec<NonnegMatrix>) -> DnmfModel {
        DnmfModel::new(w, lags).unwrap()
    }

    #[test]
    fn rejects_mismatched_lags() {
        let w = StochasticMatrix::identity(3);
        assert!(DnmfModel::new(w, vec![NonnegMatrix::identity(2)]).is_err());
    }

    #[test]
    fn concat_with_self() {
        let mut rng = seeded_rng(1);
        let w = random_stochastic(&mut rng, 5, 2);
        let a = NonnegMatrix::from_fn(2, 2, |r, c| (r + 2 * c) as f64 + 0.5);
        let m = model(w, vec![a.clone(), a.clone()]);
        let c = concat_models(&m, &m).unwrap();
        assert_eq!(c.rank(), 4);
        assert_eq!(c.order(), 2);
        for s in c.basis().column_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        for lag in c.lags() {
            assert_eq!(lag, &a.block_diag(&a));
            assert_eq!(lag.get(0, 2), 0.0);
            assert_eq!(lag.get(3, 1), 0.0);
        }
    }

    #[test]
    fn concat_rejects_mismatch() {
        let a = model(StochasticMatrix::identity(3), vec![]);
        let b = model(StochasticMatrix::identity(4), vec![]);
        assert!(concat_models(&a, &b).is_err());
        let c = model(StochasticMatrix::identity(3), vec![NonnegMatrix::identity(3)]);
        assert!(concat_models(&a, &c).is_err());
    }

    #[test]
    fn objective_prefers_exact_fit() {
        let mut rng = seeded_rng(2);
        let w = random_stochastic(&mut rng, 4, 2);
        let h = random_stochastic(&mut rng, 2, 3);
        let mass = [3.0, 1.0, 5.0];
        let wh = w.matmul(&h).unwrap();
        let x = NonnegMatrix::from_fn(4, 3, |k, t| wh.get(k, t) * mass[t]);
        let m = model(w, vec![]);
        let exact = map_objective(&x, &m, &h).unwrap();
        let perturbed = StochasticMatrix::from_columns(
            2,
            &h.columns()
                .iter()
                .map(|c| vec![0.7 * c[0] + 0.3 * c[1], 0.3 * c[0] + 0.7 * c[1]])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(exact > map_objective(&x, &m, &perturbed).unwrap());
    }

    fn ln_factorial(n: f64) -> f64 {
        (1..=n as u64).map(|v| (v as f64).ln()).sum()
    }

    #[test]
    fn objective_matches_termwise_log_densities() {
        // Integer counts so the multinomial constants are well defined.
        let x = NonnegMatrix::from_rows(&[
            vec![3.0, 0.0, 2.0],
            vec![1.0, 4.0, 1.0],
            vec![0.0, 2.0, 5.0],
        ])
        .unwrap();
        let w = StochasticMatrix::new(
            NonnegMatrix::from_rows(&[vec![0.6, 0.1, 0.3], vec![0.3, 0.5, 0.2], vec![0.1, 0.4, 0.5]]).unwrap(),
        )
        .unwrap();
        let h = StochasticMatrix::from_columns(
            3,
            &[vec![0.5, 0.3, 0.2], vec![0.1, 0.7, 0.2], vec![0.2, 0.2, 0.6]],
        )
        .unwrap();
        let a = NonnegMatrix::from_rows(&[vec![0.8, 0.1, 0.0], vec![0.1, 0.9, 0.2], vec![0.3, 0.0, 0.7]]).unwrap();
        let m = model(w.clone(), vec![a.clone()]);

        let mut log_mult = 0.0;
        let mut constants = 0.0;
        let mut log_prior = 0.0;
        for t in 0..3 {
            let gamma: f64 = x.column(t).iter().sum();
            constants += ln_factorial(gamma);
            for k in 0..3 {
                let p: f64 = (0..3).map(|i| w.get(k, i) * h.get(i, t)).sum();
                log_mult += x.get(k, t) * p.ln();
                constants -= ln_factorial(x.get(k, t));
            }
            for i in 0..3 {
                let eta: f64 = if t == 0 {
                    (0..3).map(|l| a.get(i, l)).sum()
                } else {
                    (0..3).map(|l| a.get(i, l) * h.get(l, t - 1)).sum()
                };
                log_prior += -eta.ln() - h.get(i, t) / eta;
            }
        }
        let full = log_mult + constants + log_prior;
        let got = map_objective(&x, &m, &h).unwrap();
        assert!((got - (full - constants)).abs() < 1e-12);

        // Differences between parameter settings are unaffected by the dropped constants.
        let h2 = StochasticMatrix::from_columns(
            3,
            &[vec![0.4, 0.4, 0.2], vec![0.2, 0.6, 0.2], vec![0.3, 0.1, 0.6]],
        )
        .unwrap();
        let got2 = map_objective(&x, &m, &h2).unwrap();
        let mut full2 = constants;
        for t in 0..3 {
            for k in 0..3 {
                let p: f64 = (0..3).map(|i| w.get(k, i) * h2.get(i, t)).sum();
                full2 += x.get(k, t) * p.ln();
            }
            for i in 0..3 {
                let eta: f64 = if t == 0 {
                    (0..3).map(|l| a.get(i, l)).sum()
                } else {
                    (0..3).map(|l| a.get(i, l) * h2.get(l, t - 1)).sum()
                };
                full2 += -eta.ln() - h2.get(i, t) / eta;
            }
        }
        assert!(((got - got2) - (full - full2)).abs() < 1e-12);
    }
}
