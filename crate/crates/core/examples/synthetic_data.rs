//! Generate a planted ridge problem and write it as LIBSVM plus a JSON sidecar.

use adabatch::synthetic::{generate, sidecar_path, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec::new(200, 10, 42).noise(0.5);
    let synth = generate(&spec)?;
    let dir = std::env::temp_dir().join("adabatch-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("planted.svm");
    synth.write(&path)?;
    println!("wrote {} and {}", path.display(), sidecar_path(&path).display());
    println!("first labels: {:?}", &synth.dataset().labels()[..3]);

    // b = 0 everywhere: every component is minimized at x* = 0
    let flat = generate(&SynthSpec::new(50, 10, 42).signal(0.0))?;
    assert!(flat.dataset().labels().iter().all(|&b| b == 0.0));
    Ok(())
}
