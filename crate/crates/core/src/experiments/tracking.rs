use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dsp::{add_white_noise, stft};
use crate::dynamic::{filter_sequence, DnmfModel, FilterConfig};
use crate::error::{Error, Result};
use crate::experiments::report::{ExperimentReport, ReportRow};
use crate::experiments::run_rng;
use crate::matrix::{NonnegMatrix, StochasticMatrix};

/// Swept-sinusoid tracking setup.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingScenario {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub frames: usize,
    /// 1-based frame at which the frequency peaks.
    pub peak_frame: usize,
    pub omega_start: f64,
    pub omega_peak: f64,
    pub amplitude: f64,
    pub snrs_db: Vec<f64>,
    pub runs: usize,
    pub q: f64,
    pub dnmf_inner_iters: usize,
    pub static_inner_iters: usize,
    pub seed: u64,
}

impl Default for TrackingScenario {
    fn default() -> Self {
        Self {
            sample_rate: 8000,
            fft_size: 128,
            hop: 128,
            frames: 254,
            peak_frame: 127,
            omega_start: 0.24,
            omega_peak: 2.9,
            amplitude: 1.0,
            snrs_db: vec![-10.0, -5.0, 0.0, 5.0],
            runs: 50,
            q: 0.25,
            dnmf_inner_iters: crate::dynamic::DEFAULT_INNER_ITERS,
            static_inner_iters: 50,
            seed: 0,
        }
    }
}

impl TrackingScenario {
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Ground-truth frequency at each frame centre.
    pub fn trajectory(&self) -> Vec<f64> {
        (0..self.frames).map(|f| self.omega_at(f as f64)).collect()
    }

    /// Piecewise-linear frequency at a fractional 0-based frame position, rising to the
    /// peak frame and falling back to the start value at the last frame.
    fn omega_at(&self, f: f64) -> f64 {
        let peak = (self.peak_frame - 1) as f64;
        let last = (self.frames - 1) as f64;
        let span = self.omega_peak - self.omega_start;
        let w = if f <= peak {
            self.omega_start + span * f / peak
        } else {
            self.omega_peak - span * (f - peak) / (last - peak)
        };
        w.clamp(f64::EPSILON, PI - f64::EPSILON)
    }

    fn validate(&self) -> Result<()> {
        if self.frames < 3 || self.peak_frame < 2 || self.peak_frame >= self.frames {
            return Err(Error::InvalidArgument(format!(
                "peak frame {} must lie strictly inside 1..={}",
                self.peak_frame, self.frames
            )));
        }
        let inside = |w: f64| w > 0.0 && w < PI;
        if !inside(self.omega_start) || !inside(self.omega_peak) {
            return Err(Error::InvalidArgument("trajectory must stay within (0, pi)".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("at least one Monte Carlo run is required".into()));
        }
        Ok(())
    }
}

/// Phase-continuous sinusoid following the scenario's trajectory, and the
/// per-frame ground truth.
pub fn gen_swept_sinusoid(scenario: &TrackingScenario) -> Result<(Vec<f64>, Vec<f64>)> {
    scenario.validate()?;
    let len = (scenario.frames - 1) * scenario.hop + scenario.fft_size;
    let centre = (scenario.fft_size as f64 - 1.0) / 2.0;
    let mut phase = 0.0f64;
    let samples = (0..len)
        .map(|n| {
            let s = scenario.amplitude * phase.sin();
            phase += scenario.omega_at((n as f64 - centre) / scenario.hop as f64);
            s
        })
        .collect();
    Ok((samples, scenario.trajectory()))
}

/// Identity basis over `bins` frequency bins with a tridiagonal first-order transition.
pub fn tracking_model(bins: usize) -> DnmfModel {
    let a = NonnegMatrix::from_fn(bins, bins, |i, j| if i.abs_diff(j) <= 1 { 1.0 / 3.0 } else { 0.0 });
    DnmfModel::new(StochasticMatrix::identity(bins), vec![a]).expect("square lag over identity basis")
}

/// Frequency of the strongest component, with ties going to the lower index.
pub fn track_frequency(h_t: &[f64], fft_size: usize) -> f64 {
    let k = h_t
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > h_t[best] { i } else { best });
    2.0 * PI * k as f64 / fft_size as f64
}

/// Mean squared error over all runs and frames.
pub fn tracking_mse(estimates: &[Vec<f64>], truths: &[Vec<f64>]) -> Result<f64> {
    if estimates.len() != truths.len() || estimates.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimate runs for {} truth runs",
            estimates.len(),
            truths.len()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (e, t) in estimates.iter().zip(truths) {
        if e.len() != t.len() {
            return Err(Error::DimensionMismatch(format!("{} estimates for {} frames", e.len(), t.len())));
        }
        sum += e.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        n += e.len();
    }
    Ok(sum / n as f64)
}

/// Frequency estimates from a magnitude spectrogram.
pub fn track(model: &DnmfModel, mag: &NonnegMatrix, cfg: &FilterConfig, fft_size: usize) -> Result<Vec<f64>> {
    let h = filter_sequence(model, mag, cfg)?;
    Ok(h.columns().iter().map(|c| track_frequency(c, fft_size)).collect())
}

/// Static and D-NMF tracking over the scenario's SNR grid.
///
/// Emits one `mse` row per method, SNR and run. Both methods see the same noisy signal.
pub fn run_tracking(scenario: &TrackingScenario) -> Result<ExperimentReport> {
    let (clean, truth) = gen_swept_sinusoid(scenario)?;
    let bins = scenario.bins();
    let dynamic = tracking_model(bins);
    let fixed = DnmfModel::static_model(StochasticMatrix::identity(bins));
    let jobs: Vec<(usize, usize)> = (0..scenario.snrs_db.len())
        .flat_map(|s| (0..scenario.runs).map(move |r| (s, r)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(s, r)| {
            let stream = (s * scenario.runs + r) as u64;
            let snr = scenario.snrs_db[s];
            let noisy = add_white_noise(&clean, snr, &mut run_rng(scenario.seed, stream))?;
            let mag = stft(&noisy, scenario.fft_size, scenario.hop, scenario.sample_rate)?.magnitude();
            let static_cfg = FilterConfig { q: scenario.q, inner_iters: scenario.static_inner_iters, seed: stream };
            let dnmf_cfg = FilterConfig { q: scenario.q, inner_iters: scenario.dnmf_inner_iters, seed: stream };
            let methods = [("static", 0, &fixed, static_cfg), ("dnmf", 1, &dynamic, dnmf_cfg)];
            methods
                .into_iter()
                .map(|(name, order, model, cfg)| {
                    let est = track(model, &mag, &cfg, scenario.fft_size)?;
                    let mse = tracking_mse(&[est], std::slice::from_ref(&truth))?;
                    Ok(ReportRow {
                        scenario: "tracking".into(),
                        method: name.into(),
                        order,
                        input_snr_db: snr,
                        metric: "mse".into(),
                        value: mse,
                        seed: stream,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { rows: per_job.into_iter().flatten().collect() })
}
