//! Track a swept sinusoid in white noise with static PLCA and the dynamic filter.
//!
//! Pass `quiet` to run the same experiment on a signal 100x quieter filtered with a single
//! inner iteration, where the temporal prior is strong relative to the data.

use dnmf::experiments::{run_tracking, TrackingScenario};

fn main() -> dnmf::Result<()> {
    let quiet = std::env::args().any(|a| a == "quiet");
    let mut scenario = TrackingScenario { runs: 5, snrs_db: vec![-10.0, -5.0, 0.0, 5.0], ..Default::default() };
    if quiet {
        scenario.amplitude = 0.01;
        scenario.dnmf_inner_iters = 1;
    }
    let report = run_tracking(&scenario)?;
    println!("{:>8} {:>12} {:>12}", "SNR dB", "static MSE", "D-NMF MSE");
    for &snr in &scenario.snrs_db {
        let s = report.mean("static", 0, snr, "mse").unwrap_or(f64::NAN);
        let d = report.mean("dnmf", 1, snr, "mse").unwrap_or(f64::NAN);
        println!("{snr:>8} {s:>12.5} {d:>12.5}");
    }
    Ok(())
}
