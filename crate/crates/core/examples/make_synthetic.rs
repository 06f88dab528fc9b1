//! Regenerates `data/synthetic.csv`: 300 rows, 50 independent Gaussian
//! predictors, 10 of them relevant, signal-to-noise ratio 3.

use std::path::Path;

use projpred::synthetic::SyntheticSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec::sparse(300, 50, 10, 3.0, 2017)?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir)?;
    spec.generate()?.save(&dir, "synthetic")?;
    println!("relevant predictors: {:?}", spec.relevant());
    Ok(())
}
