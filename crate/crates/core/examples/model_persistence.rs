//! Save a trained model to JSON, load it back and confirm filtering is unchanged.

use std::collections::BTreeMap;

use dnmf::cli::ModelFile;
use dnmf::dsp::stft;
use dnmf::dynamic::{filter_sequence, train, FilterConfig, TrainConfig};
use dnmf::experiments::{gen_chirp_pair, SeparationScenario};

fn main() -> dnmf::Result<()> {
    let (source, _) = gen_chirp_pair(&SeparationScenario { duration_s: 1.0, ..Default::default() })?;
    let x = stft(&source, 1024, 256, 16000)?.magnitude();
    let cfg = TrainConfig { iters: 30, prior_start: 15, ..Default::default() };
    let model = train(&x, 10, 1, &cfg)?.model;

    let path = std::env::temp_dir().join("dnmf-example-model.json");
    let meta = BTreeMap::from([("source".to_string(), "rising chirp pair".to_string())]);
    ModelFile::from_model(&model, cfg.q, meta).save(&path)?;
    let loaded = ModelFile::load(&path)?.into_model()?;
    println!("saved and reloaded {} (K={}, I={}, J={})", path.display(), loaded.model.bins(), loaded.model.rank(), loaded.model.order());
    println!("identical parameters: {}", loaded.model == model);

    let fcfg = FilterConfig::default();
    let a = filter_sequence(&model, &x, &fcfg)?;
    let b = filter_sequence(&loaded.model, &x, &fcfg)?;
    println!("identical filtered states: {}", a == b);
    std::fs::remove_file(&path)?;
    Ok(())
}
