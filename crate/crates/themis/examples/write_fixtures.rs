//! Regenerates `fixtures/` from the synthetic Country X generator.

use std::path::Path;

use themis::io;
use themis_core::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir)?;
    let model = synth::country_x_model();
    io::save_model(&dir.join("country_x.model.json"), &model)?;
    std::fs::write(dir.join("country_x.network.json"), io::to_pretty(&model.scenario_template))?;
    std::fs::write(dir.join("country_x.csv"), io::series_to_csv(&model))?;
    let mut bare = model.clone();
    bare.series.clear();
    io::save_model(&dir.join("country_x.empty.model.json"), &bare)?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
