//! Saves a fitted model as JSON, loads it back and checks that transforms
//! agree exactly.

use lrmar::bench::{simulate_sinusoids, SinusoidConfig};
use lrmar::persist::{load_model, save_model};
use lrmar::vb::transform;
use lrmar::{fit, ModelSpec};

fn main() -> lrmar::Result<()> {
    let (noisy, _) = simulate_sinusoids(&SinusoidConfig { t: 1000, ..SinusoidConfig::default() })?;
    let model = fit(&noisy, &ModelSpec::new(4, 5))?;

    let path = std::env::temp_dir().join("lrmar-example-model.json");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    let size = std::fs::metadata(&path)?.len();
    println!("wrote {} ({size} bytes)", path.display());
    println!("identical after reload: {}", loaded == model);
    println!("transforms agree: {}", transform(&loaded, &noisy)? == transform(&model, &noisy)?);
    std::fs::remove_file(&path)?;
    Ok(())
}
