//! End-to-end reproductions: swept-sinusoid tracking and chirp-pair separation.

mod report;
mod separation;

mod tracking;

pub use report::{format_g, ExperimentReport, ReportRow, REPORT_HEADER};
pub use separation::{gen_chirp_pair, mean_output_snr, run_separation, separate, Chirp, SeparationScenario};

pub use tracking::{
    gen_swept_sinusoid, run_tracking, track, track_frequency, tracking_model, tracking_mse, TrackingScenario,
};

use rand_chacha::ChaCha8Rng;

/// Independent generator for sub-run `stream` of an experiment seeded with `seed`.
pub fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = crate::plca::seeded_rng(seed);
    rng.set_stream(stream);
    rng
}
