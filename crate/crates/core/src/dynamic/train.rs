use rand_chacha::ChaCha8Rng;

use crate::dynamic::newton::solve_multiplier;
use crate::dynamic::nvar::{build_lag_matrix, estimate_nvar};
use crate::dynamic::state::predict_from;
use crate::dynamic::{filter::anneal, DnmfModel};
use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, StochasticMatrix, EPS};
use crate::plca::{
    basis_from_counts, floored_frames, frame_counts, random_block, random_stochastic, seeded_rng, static_h,
    DEFAULT_ITERS,
};

/// Settings for EM training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of EM iterations.
    pub iters: usize,
    /// Iteration after which the prediction prior is switched on (`M`).
    /// Lag matrices are re-estimated from iteration `M` onward.
    pub prior_start: usize,
    /// Annealing exponent applied to predictions, `η ← η^q`.
    pub q: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iters: DEFAULT_ITERS,
            prior_start: 50,
            q: 0.15,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidArgument(format!("annealing exponent q = {} must be in (0, 1]", self.q)));
        }
        if self.prior_start > self.iters {
            return Err(Error::InvalidArgument(format!(
                "prior start M = {} exceeds iteration count {}",
                self.prior_start, self.iters
            )));
        }
        Ok(())
    }
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: DnmfModel,
    /// Estimated coefficients, one probability vector per frame.
    pub h: StochasticMatrix,
    /// Per-frame mass `γ_t`, the reconstruction scale.
    pub frame_mass: Vec<f64>,
}

/// Stepwise EM trainer.
///
/// Each [`step`](Trainer::step) is one full EM iteration. The E-step
/// posteriors come from the previous iteration's `W` and `H`; they drive both
/// the basis update and the sequential state updates, where frame `t` is
/// predicted from the already updated frames before it.
#[derive(Debug, Clone)]
pub struct Trainer {
    frames: Vec<Vec<f64>>,
    frame_mass: Vec<f64>,
    bins: usize,
    rank: usize,
    cfg: TrainConfig,
    w: Vec<f64>,
    h: Vec<Vec<f64>>,
    lags: Vec<NonnegMatrix>,
    iteration: usize,
}

impl Trainer {
    pub fn new(x: &NonnegMatrix, rank: usize, order: usize, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        let (bins, t_dim) = x.shape();
        if t_dim == 0 {
            return Err(Error::InvalidArgument("no frames to train on".into()));
        }
        let (frames, frame_mass) = floored_frames(x);
        let mut rng: ChaCha8Rng = seeded_rng(cfg.seed);
        let w = random_stochastic(&mut rng, bins, rank).into_inner().into_vec();
        let h = random_stochastic(&mut rng, rank, t_dim).columns();
        let lags = (0..order)
            .map(|_| NonnegMatrix::new(rank, rank, random_block(&mut rng, rank, rank)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            frames,
            frame_mass,
            bins,
            rank,
            cfg,
            w,
            h,
            lags,
            iteration: 0,
        })
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.cfg.iters
    }

    /// Runs one EM iteration.
    pub fn step(&mut self) -> Result<()> {
        let r = self.iteration + 1;
        let order = self.lags.len();
        let use_prior = order > 0 && r > self.cfg.prior_start;
        let model = if use_prior { Some(self.model()?) } else { None };

        let mut acc = vec![0.0; self.bins * self.rank];
        for t in 0..self.frames.len() {
            let counts = frame_counts(&self.frames[t], &self.w, self.rank, &self.h[t], Some(&mut acc));
            let updated = match &model {
                Some(model) => {
                    let h = &self.h;
                    let eta = predict_from(model, |j| t.checked_sub(j).map(|s| h[s].as_slice()));
                    let eta = anneal(&eta, self.cfg.q);
                    solve_multiplier(&counts, &eta)?.h
                }
                None => static_h(&counts),
            };
            self.h[t] = updated;
        }
        self.w = basis_from_counts(self.bins, self.rank, acc, Some(EPS))?
            .into_inner()
            .into_vec();

        if order > 0 && r >= self.cfg.prior_start {
            let h = NonnegMatrix::from_columns(self.rank, &self.h)?;
            let v = build_lag_matrix(&h, order)?;
            let stacked = NonnegMatrix::hconcat_all(&self.lags)?;
            self.lags = estimate_nvar(&h, &stacked, &v, 1)?.split_columns(self.rank)?;
        }
        self.iteration = r;
        Ok(())
    }

    /// Current parameters as a model.
    pub fn model(&self) -> Result<DnmfModel> {
        let w = StochasticMatrix::new(NonnegMatrix::new(self.bins, self.rank, self.w.clone())?)?;
        DnmfModel::new(w, self.lags.clone())
    }

    /// Current coefficients as an `I x T` matrix.
    pub fn coefficients(&self) -> Result<StochasticMatrix> {
        StochasticMatrix::from_columns(self.rank, &self.h)
    }

    pub fn frame_mass(&self) -> &[f64] {
        &self.frame_mass
    }

    pub fn finish(self) -> Result<TrainOutput> {
        Ok(TrainOutput {
            model: self.model()?,
            h: self.coefficients()?,
            frame_mass: self.frame_mass,
        })
    }
}

/// Learns the basis and lag matrices of an order-`order` model from `x` (`K x T`).
///
/// `order = 0` disables the prior entirely and reproduces
/// [`fit_static_plca`](crate::plca::fit_static_plca) exactly.
pub fn train(x: &NonnegMatrix, rank: usize, order: usize, cfg: &TrainConfig) -> Result<TrainOutput> {
    let mut trainer = Trainer::new(x, rank, order, cfg.clone())?;
    while !trainer.is_done() {
        trainer.step()?;
    }
    trainer.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plca::fit_static_plca;
    use rand::Rng;

    fn random_data(seed: u64, rows: usize, cols: usize) -> NonnegMatrix {
        let mut rng = seeded_rng(seed);
        NonnegMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0.0..3.0)).collect()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad_q = TrainConfig { q: 0.0, ..TrainConfig::default() };
        assert!(bad_q.validate().is_err());
        let bad_m = TrainConfig { prior_start: 101, ..TrainConfig::default() };
        assert!(bad_m.validate().is_err());
    }

    #[test]
    fn defaults_follow_reference_settings() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.iters, 100);
        assert_eq!(cfg.prior_start, 50);
        assert_eq!(cfg.q, 0.15);
    }

    #[test]
    fn order_zero_is_static_plca() {
        let x = random_data(1, 12, 15);
        let cfg = TrainConfig { iters: 30, prior_start: 10, seed: 9, ..TrainConfig::default() };
        let out = train(&x, 3, 0, &cfg).unwrap();
        let (w, h) = fit_static_plca(&x, 3, 30, 9).unwrap();
        assert_eq!(out.model.basis(), &w);
        assert_eq!(out.h, h);
        assert_eq!(out.model.order(), 0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let x = random_data(2, 10, 20);
        let cfg = TrainConfig { iters: 20, prior_start: 5, seed: 3, ..TrainConfig::default() };
        let a = train(&x, 3, 2, &cfg).unwrap();
        let b = train(&x, 3, 2, &cfg).unwrap();
        assert_eq!(a, b);
        for s in a.h.column_sums() {
            assert!((s - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = random_data(3, 4, 5);
        assert!(train(&x, 0, 1, &TrainConfig::default()).is_err());
        assert!(train(&NonnegMatrix::zeros(4, 0), 2, 1, &TrainConfig::default()).is_err());
    }
}
