use std::f64::consts::PI;

use rand::RngCore;
use rayon::prelude::*;

use crate::dsp::{istft, mix_at_snr, output_snr, stft, wiener_reconstruct, Spectrogram};
use crate::dynamic::{concat_models, filter_sequence, train, DnmfModel, FilterConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::experiments::report::{ExperimentReport, ReportRow};
use crate::experiments::run_rng;
use crate::matrix::{NonnegMatrix, StochasticMatrix};

/// Linear frequency sweep in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chirp {
    pub start_hz: f64,
    pub end_hz: f64,
}

/// Separation of a source from its own time reversal.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationScenario {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub duration_s: f64,
    /// Components of source 1; source 2 is its time reversal.
    pub chirps: Vec<Chirp>,
    /// Amplitude of each chirp.
    pub amplitude: f64,
    pub rank: usize,
    pub orders: Vec<usize>,
    pub mixture_snr_db: f64,
    pub q: f64,
    pub inner_iters: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for SeparationScenario {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            fft_size: 1024,
            hop: 256,
            duration_s: 8.0,
            chirps: vec![
                Chirp { start_hz: 500.0, end_hz: 3000.0 },
                Chirp { start_hz: 1500.0, end_hz: 5000.0 },
            ],
            amplitude: 1.0,
            rank: 50,
            orders: (0..=5).collect(),
            mixture_snr_db: 0.0,
            q: 0.1,
            inner_iters: crate::dynamic::DEFAULT_INNER_ITERS,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

/// Source 1 as a sum of phase-continuous chirps, and its exact reversal.
pub fn gen_chirp_pair(scenario: &SeparationScenario) -> Result<(Vec<f64>, Vec<f64>)> {
    let fs = scenario.sample_rate as f64;
    let len = (scenario.duration_s * fs).round() as usize;
    if len < scenario.fft_size {
        return Err(Error::InvalidArgument(format!(
            "{} s at {fs} Hz is shorter than one frame",
            scenario.duration_s
        )));
    }
    if scenario.chirps.iter().any(|c| c.start_hz <= 0.0 || c.end_hz <= 0.0 || c.start_hz.max(c.end_hz) >= fs / 2.0) {
        return Err(Error::InvalidArgument("chirp frequencies must lie strictly between 0 and Nyquist".into()));
    }
    let mut s1 = vec![0.0; len];
    for c in &scenario.chirps {
        let mut phase = 0.0f64;
        for (n, s) in s1.iter_mut().enumerate() {
            *s += scenario.amplitude * phase.sin();
            let f = c.start_hz + (c.end_hz - c.start_hz) * n as f64 / (len - 1) as f64;
            phase += 2.0 * PI * f / fs;
        }
    }
    let s2 = s1.iter().rev().copied().collect();
    Ok((s1, s2))
}

/// Per-source magnitude estimates from a filtered joint state.
fn split_estimates(m1: &DnmfModel, m2: &DnmfModel, h: &StochasticMatrix) -> Result<(NonnegMatrix, NonnegMatrix)> {
    let i1 = m1.rank();
    let rows = h.rows();
    let h1 = NonnegMatrix::from_fn(i1, h.cols(), |i, t| h.get(i, t));
    let h2 = NonnegMatrix::from_fn(rows - i1, h.cols(), |i, t| h.get(i1 + i, t));
    Ok((m1.basis().matmul(&h1)?, m2.basis().matmul(&h2)?))
}

/// Wiener-filters a mixture spectrogram with two fixed models and returns the two
/// time-domain estimates, resynthesized with the mixture phase.
pub fn separate(
    mixture: &Spectrogram,
    m1: &DnmfModel,
    m2: &DnmfModel,
    cfg: &FilterConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let joint = concat_models(m1, m2)?;
    let mag = mixture.magnitude();
    let h = filter_sequence(&joint, &mag, cfg)?;
    let (e1, e2) = split_estimates(m1, m2, &h)?;
    let (k, t) = mag.shape();
    let mut x1 = Vec::with_capacity(k * t);
    let mut x2 = Vec::with_capacity(k * t);
    for col in 0..t {
        let (a, b) = wiener_reconstruct(&mag.column(col), &e1.column(col), &e2.column(col))?;
        x1.push(a);
        x2.push(b);
    }
    let y1 = istft(&mixture.with_magnitude(&NonnegMatrix::from_columns(k, &x1)?)?);
    let y2 = istft(&mixture.with_magnitude(&NonnegMatrix::from_columns(k, &x2)?)?);
    Ok((y1, y2))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()
}

/// Trains one model per source and `J`, separates the mixture, and reports the output
/// SNR of each source estimate along with its correlation with the mixture.
///
/// Metrics are computed on samples at least one frame away from either end, where the
/// overlap-add is complete.
pub fn run_separation(scenario: &SeparationScenario) -> Result<ExperimentReport> {
    let (s1, s2) = gen_chirp_pair(scenario)?;
    let mix = mix_at_snr(&s1, &s2, scenario.mixture_snr_db)?;
    let s2: Vec<f64> = mix.iter().zip(&s1).map(|(m, a)| m - a).collect();
    let spec = |x: &[f64]| stft(x, scenario.fft_size, scenario.hop, scenario.sample_rate);
    let mixture = spec(&mix)?;
    let mags = [spec(&s1)?.magnitude(), spec(&s2)?.magnitude()];
    let interior = scenario.fft_size..mixture.signal_len() - scenario.fft_size;
    let input_snr = scenario.mixture_snr_db;

    let per_order = scenario
        .orders
        .par_iter()
        .map(|&order| {
            let mut rng = run_rng(scenario.seed, order as u64);
            let models = mags
                .iter()
                .map(|x| {
                    let cfg = TrainConfig { seed: rng.next_u64(), ..scenario.train.clone() };
                    Ok(train(x, scenario.rank, order, &cfg)?.model)
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = FilterConfig { q: scenario.q, inner_iters: scenario.inner_iters, seed: rng.next_u64() };
            let (y1, y2) = separate(&mixture, &models[0], &models[1], &cfg)?;
            let method = if order == 0 { "static" } else { "dnmf" };
            let mut rows = Vec::new();
            for (source, (reference, estimate)) in [(&s1, &y1), (&s2, &y2)].into_iter().enumerate() {
                let r = &reference[interior.clone()];
                let e = &estimate[interior.clone()];
                let metrics = [
                    (format!("output_snr_db_source{}", source + 1), output_snr(r, e)?),
                    (format!("mixture_correlation_source{}", source + 1), correlation(e, &mix[interior.clone()])),
                ];
                rows.extend(metrics.into_iter().map(|(metric, value)| ReportRow {
                    scenario: "separation".into(),
                    method: method.into(),
                    order,
                    input_snr_db: input_snr,
                    metric,
                    value,
                    seed: scenario.seed,
                }));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { rows: per_order.into_iter().flatten().collect() })
}

/// Mean output SNR over both sources for one model order.
pub fn mean_output_snr(report: &ExperimentReport, order: usize) -> Option<f64> {
    let vals: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.order == order && r.metric.starts_with("output_snr_db"))
        .map(|r| r.value)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SeparationScenario {
        SeparationScenario { duration_s: 0.5, ..Default::default() }
    }

    #[test]
    fn reversal_is_exact() {
        let (s1, s2) = gen_chirp_pair(&short()).unwrap();
        let back: Vec<f64> = s2.iter().rev().copied().collect();
        assert_eq!(s1, back);
    }

    #[test]
    fn sources_have_equal_energy() {
        let (s1, s2) = gen_chirp_pair(&short()).unwrap();
        let e = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        assert!((e(&s1) - e(&s2)).abs() < 1e-9 * e(&s1));
        let mix = mix_at_snr(&s1, &s2, 0.0).unwrap();
        let n: Vec<f64> = mix.iter().zip(&s1).map(|(m, a)| m - a).collect();
        assert!((e(&n) - e(&s1)).abs() < 1e-9 * e(&s1));
    }

    #[test]
    fn reversed_spectra_match_as_column_sets() {
        // hop divides len - fft so frames of the reversal land on reversed frames
        let sc = SeparationScenario { duration_s: 0.5, hop: 256, ..Default::default() };
        let (s1, s2) = gen_chirp_pair(&sc).unwrap();
        let len = s1.len() - (s1.len() - 1024) % 256;
        let a = stft(&s1[..len], 1024, 256, 16000).unwrap().magnitude();
        let rev: Vec<f64> = s1[..len].iter().rev().copied().collect();
        let b = stft(&rev, 1024, 256, 16000).unwrap().magnitude();
        let t = a.cols();
        for c in 0..t {
            let (x, y) = (a.column(c), b.column(t - 1 - c));
            let err = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            // periodic Hann is symmetric about N/2, so reversal shifts the window by a sample
            assert!(err < 2e-2 * x.iter().cloned().fold(0.0, f64::max));
        }
        assert!(s2.len() == s1.len());
    }

    #[test]
    fn estimates_sum_to_resynthesized_mixture() {
        let sc = SeparationScenario { duration_s: 0.25, ..Default::default() };
        let (s1, s2) = gen_chirp_pair(&sc).unwrap();
        let cfg = TrainConfig { iters: 5, prior_start: 2, ..Default::default() };
        let m1 = train(&stft(&s1, 1024, 256, 16000).unwrap().magnitude(), 3, 1, &cfg).unwrap().model;
        let m2 = train(&stft(&s2, 1024, 256, 16000).unwrap().magnitude(), 3, 1, &cfg).unwrap().model;
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a + b).collect();
        let spec = stft(&mix, 1024, 256, 16000).unwrap();
        let (y1, y2) = separate(&spec, &m1, &m2, &FilterConfig::default()).unwrap();
        let y = istft(&spec);
        for i in 1024..y.len() - 1024 {
            assert!((y1[i] + y2[i] - y[i]).abs() < 1e-9, "sample {i}");
        }
    }

    #[test]
    fn small_run_is_complete_and_reproducible() {
        let sc = SeparationScenario {
            duration_s: 0.5,
            rank: 4,
            orders: vec![0, 1],
            train: TrainConfig { iters: 6, prior_start: 3, ..Default::default() },
            ..Default::default()
        };
        let a = run_separation(&sc).unwrap();
        assert_eq!(a.rows.len(), 2 * 2 * 2);
        assert_eq!(a, run_separation(&sc).unwrap());
        assert!(mean_output_snr(&a, 1).unwrap().is_finite());
    }
}
