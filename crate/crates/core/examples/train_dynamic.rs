//! Train a dynamic model on a chirp spectrogram and watch the objective per iteration.

use dnmf::dsp::stft;
use dnmf::dynamic::{lower_bound, map_objective, nvar_divergence, build_lag_matrix, TrainConfig, Trainer};
use dnmf::experiments::{gen_chirp_pair, SeparationScenario};

fn main() -> dnmf::Result<()> {
    let scenario = SeparationScenario { duration_s: 2.0, ..Default::default() };
    let (source, _) = gen_chirp_pair(&scenario)?;
    let x = stft(&source, 1024, 256, 16000)?.magnitude();
    println!("spectrogram: {} bins x {} frames", x.rows(), x.cols());

    let cfg = TrainConfig { iters: 40, prior_start: 20, q: 0.15, seed: 1 };
    let mut trainer = Trainer::new(&x, 20, 2, cfg)?;
    while !trainer.is_done() {
        trainer.step()?;
        let r = trainer.iteration();
        if r % 5 == 0 {
            let (model, h) = (trainer.model()?, trainer.coefficients()?);
            println!("iter {r:3}  Q_MAP {:.6e}", map_objective(&x, &model, &h)?);
        }
    }
    let out = trainer.finish()?;
    let h = out.h.matrix();
    println!("lower bound {:.6e}", lower_bound(&x, &out.model, h, &out.model, h)?);
    let v = build_lag_matrix(h, 2)?;
    println!("d_IS(H | A V) {:.4e}", nvar_divergence(h, &out.model.stacked_lags()?, &v)?);
    Ok(())
}
