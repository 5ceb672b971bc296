use crate::dynamic::newton::solve_multiplier;
use crate::dynamic::DnmfModel;
use crate::error::{Error, Result};
use crate::matrix::{StochasticMatrix, EPS};
use crate::plca::frame_counts;

/// Prediction `η = Σ_j A_j h_{t-j}` where `lag(j)` yields `h_{t-j}` for `j >= 1`.
///
/// Missing predecessors are all-ones vectors. The result is floored at [`EPS`].
pub(crate) fn predict_from<'a>(model: &DnmfModel, lag: impl Fn(usize) -> Option<&'a [f64]>) -> Vec<f64> {
    let i_dim = model.rank();
    let mut eta = vec![0.0; i_dim];
    for (j, a) in model.lags().iter().enumerate() {
        match lag(j + 1) {
            Some(prev) => {
                for (e, row) in eta.iter_mut().zip(a.as_slice().chunks_exact(i_dim)) {
                    *e += row.iter().zip(prev).map(|(x, y)| x * y).sum::<f64>();
                }
            }
            None => {
                for (e, row) in eta.iter_mut().zip(a.as_slice().chunks_exact(i_dim)) {
                    *e += row.iter().sum::<f64>();
                }
            }
        }
    }
    eta.iter_mut().for_each(|e| *e = e.max(EPS));
    eta
}

/// Predicts the next state from `history`, most recent first (`history[0] = h_{t-1}`).
///
/// Histories shorter than the model order are padded with all-ones vectors,
/// which is what happens for the first `J` frames of a sequence.
pub fn predict_state(model: &DnmfModel, history: &[Vec<f64>]) -> Result<Vec<f64>> {
    if model.order() == 0 {
        return Err(Error::InvalidArgument("prediction needs a model with order >= 1".into()));
    }
    if let Some(bad) = history.iter().find(|h| h.len() != model.rank()) {
        return Err(Error::DimensionMismatch(format!(
            "history vector of length {} for rank {}",
            bad.len(),
            model.rank()
        )));
    }
    Ok(predict_from(model, |j| history.get(j - 1).map(Vec::as_slice)))
}

/// State update for one frame.
///
/// Computes the responsibility-weighted counts of `x_t` under `w` and the
/// current estimate `h_current`, then solves the simplex constraint
/// `h_i = c_i / (β + 1/η_i)`. With `η = 1` this reduces to the static PLCA
/// update `c / γ`.
pub fn update_state(x_t: &[f64], w: &StochasticMatrix, h_current: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    let (k_dim, i_dim) = w.shape();
    if x_t.len() != k_dim || h_current.len() != i_dim || eta.len() != i_dim {
        return Err(Error::DimensionMismatch(format!(
            "frame {}, state {}, prediction {} for a {k_dim}x{i_dim} basis",
            x_t.len(),
            h_current.len(),
            eta.len()
        )));
    }
    let x: Vec<f64> = x_t.iter().map(|v| v.max(EPS)).collect();
    let counts = frame_counts(&x, w.as_slice(), i_dim, h_current, None);
    Ok(solve_multiplier(&counts, eta)?.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::NonnegMatrix;
    use crate::plca::{plca_posterior, random_stochastic, seeded_rng};
    use rand::Rng;

    fn diag_half() -> NonnegMatrix {
        NonnegMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn identity_dynamics_repeat_previous_state() {
        let model = DnmfModel::new(StochasticMatrix::identity(3), vec![NonnegMatrix::identity(3)]).unwrap();
        let eta = predict_state(&model, &[vec![0.2, 0.5, 0.3]]).unwrap();
        assert_eq!(eta, vec![0.2, 0.5, 0.3]);
    }

    #[test]
    fn first_frame_uses_ones() {
        let a1 = NonnegMatrix::from_rows(&[vec![0.2, 0.3], vec![0.0, 1.5]]).unwrap();
        let a2 = diag_half();
        let model = DnmfModel::new(StochasticMatrix::identity(2), vec![a1, a2]).unwrap();
        let eta = predict_state(&model, &[]).unwrap();
        assert!((eta[0] - 1.0).abs() < 1e-15);
        assert!((eta[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_lag_hand_example() {
        let model = DnmfModel::new(StochasticMatrix::identity(2), vec![diag_half(), diag_half()]).unwrap();
        let eta = predict_state(&model, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(eta, vec![0.5, 0.5]);
    }

    #[test]
    fn prediction_is_floored() {
        let model = DnmfModel::new(StochasticMatrix::identity(2), vec![NonnegMatrix::identity(2)]).unwrap();
        let eta = predict_state(&model, &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(eta, vec![1.0, EPS]);
        let static_model = DnmfModel::static_model(StochasticMatrix::identity(2));
        assert!(predict_state(&static_model, &[]).is_err());
    }

    #[test]
    fn uniform_prediction_is_static_update() {
        let mut rng = seeded_rng(7);
        let w = random_stochastic(&mut rng, 6, 3);
        let h = random_stochastic(&mut rng, 3, 1).column(0);
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..4.0)).collect();
        let h_new = update_state(&x, &w, &h, &[1.0; 3]).unwrap();
        let c = plca_posterior(&w, &h).unwrap().weighted_counts(&x).unwrap();
        let gamma: f64 = x.iter().sum();
        for (a, b) in h_new.iter().zip(&c) {
            assert!((a - b / gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_basis_one_hot_frame() {
        let w = StochasticMatrix::identity(4);
        let mut x = vec![0.0; 4];
        x[2] = 5.0;
        let h = update_state(&x, &w, &[0.25; 4], &[0.7; 4]).unwrap();
        assert!((h[2] - 1.0).abs() < 1e-9);
        assert!(h.iter().enumerate().all(|(i, v)| i == 2 || *v < 1e-11));
    }

    #[test]
    fn matches_grid_search_on_lagrangian() {
        let w = StochasticMatrix::new(NonnegMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap()).unwrap();
        let x = [3.0, 1.0];
        let h_cur = [0.5, 0.5];
        let eta = [0.3, 3.0];
        let h = update_state(&x, &w, &h_cur, &eta).unwrap();

        // The frame's share of the lower bound for fixed posteriors:
        // Σ_i c_i log h_i - Σ_i h_i / η_i, maximized over the 1-simplex.
        let resp = plca_posterior(&w, &h_cur).unwrap();
        let c = resp.weighted_counts(&x).unwrap();
        let objective = |p: f64| c[0] * p.ln() + c[1] * (1.0 - p).ln() - p / eta[0] - (1.0 - p) / eta[1];
        let (best, _) = (1..10_000)
            .map(|s| s as f64 * 1e-4)
            .map(|p| (p, objective(p)))
            .fold((0.0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        assert!((h[0] - best).abs() <= 1e-4, "{} vs grid {}", h[0], best);
        assert!((h[0] + h[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn updates_stay_on_simplex() {
        let mut rng = seeded_rng(8);
        for _ in 0..200 {
            let w = random_stochastic(&mut rng, 5, 3);
            let h = random_stochastic(&mut rng, 3, 1).column(0);
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..10.0)).collect();
            let eta: Vec<f64> = (0..3).map(|_| rng.gen_range(1e-6..3.0)).collect();
            let h_new = update_state(&x, &w, &h, &eta).unwrap();
            assert!(h_new.iter().all(|v| *v >= 0.0));
            assert!((h_new.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }
}
