use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamic::newton::solve_multiplier;
use crate::dynamic::state::predict_from;
use crate::dynamic::DnmfModel;
use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, StochasticMatrix, EPS};
use crate::plca::{frame_counts, seeded_rng, static_h, INIT_RANGE};

/// Default number of inner update iterations per frame.
pub const DEFAULT_INNER_ITERS: usize = 30;

/// Elementwise power of a (floored) prediction.
pub fn anneal(eta: &[f64], exponent: f64) -> Vec<f64> {
    eta.iter().map(|e| e.max(EPS).powf(exponent)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Annealing exponent; inner iteration `r` uses `b^(q/r)`.
    pub q: f64,
    pub inner_iters: usize,
    /// Seed for the random initialization of each frame's state.
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            q: 0.25,
            inner_iters: DEFAULT_INNER_ITERS,
            seed: 0,
        }
    }
}

/// Causal filter over a fixed model.
///
/// Holds the last `J` estimated states. Each call to
/// [`filter_frame`](FilterState::filter_frame) predicts once from that
/// history, then alternates PLCA updates with a prediction whose influence
/// decays as `b^(q/r)`.
#[derive(Debug, Clone)]
pub struct FilterState<'m> {
    model: &'m DnmfModel,
    history: VecDeque<Vec<f64>>,
    cfg: FilterConfig,
    rng: ChaCha8Rng,
}

impl<'m> FilterState<'m> {
    pub fn new(model: &'m DnmfModel, cfg: FilterConfig) -> Result<Self> {
        if !(cfg.q > 0.0 && cfg.q.is_finite()) {
            return Err(Error::InvalidArgument(format!("annealing exponent q = {} must be positive", cfg.q)));
        }
        if cfg.inner_iters == 0 {
            return Err(Error::InvalidArgument("at least one inner iteration is required".into()));
        }
        let rng = seeded_rng(cfg.seed);
        Ok(Self {
            model,
            history: VecDeque::with_capacity(model.order()),
            cfg,
            rng,
        })
    }

    pub fn model(&self) -> &DnmfModel {
        self.model
    }

    /// Stored states, most recent first.
    pub fn history(&self) -> impl Iterator<Item = &[f64]> {
        self.history.iter().map(Vec::as_slice)
    }

    /// Estimates the state for one observation and appends it to the history.
    pub fn filter_frame(&mut self, x_t: &[f64]) -> Result<Vec<f64>> {
        let model = self.model;
        let (bins, rank) = model.basis().shape();
        if x_t.len() != bins {
            return Err(Error::DimensionMismatch(format!(
                "frame of length {} for a model with {bins} bins",
                x_t.len()
            )));
        }
        let x: Vec<f64> = x_t.iter().map(|v| v.max(EPS)).collect();
        let w = model.basis().as_slice();

        let init: Vec<f64> = (0..rank)
            .map(|_| self.rng.gen_range(INIT_RANGE.0..INIT_RANGE.1))
            .collect();
        let mut h = static_h(&init);

        if model.order() == 0 {
            for _ in 0..self.cfg.inner_iters {
                h = static_h(&frame_counts(&x, w, rank, &h, None));
            }
        } else {
            let history = &self.history;
            let backup = predict_from(model, |j| history.get(j - 1).map(Vec::as_slice));
            for r in 1..=self.cfg.inner_iters {
                let eta = anneal(&backup, self.cfg.q / r as f64);
                let counts = frame_counts(&x, w, rank, &h, None);
                h = solve_multiplier(&counts, &eta)?.h;
            }
            if self.history.len() == model.order() {
                self.history.pop_back();
            }
            self.history.push_front(h.clone());
        }
        Ok(h)
    }
}

/// Filters every column of `x` in order, returning the `I x T` coefficients.
pub fn filter_sequence(model: &DnmfModel, x: &NonnegMatrix, cfg: &FilterConfig) -> Result<StochasticMatrix> {
    let mut state = FilterState::new(model, cfg.clone())?;
    let h = x
        .columns()
        .iter()
        .map(|x_t| state.filter_frame(x_t))
        .collect::<Result<Vec<_>>>()?;
    StochasticMatrix::from_columns(model.rank(), &h)
}
