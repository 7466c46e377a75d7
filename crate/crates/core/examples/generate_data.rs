//! Regenerate the files under `data/`: the default instrument and two
//! synthetic survey waves drawn from the same generating model.
//!
//! cargo run -p acceptance-core --example generate_data -- data

use std::path::PathBuf;

use acceptance_core::model::default_instrument;
use acceptance_core::survey::to_csv;
use acceptance_core::synthetic::Generator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let instrument = default_instrument();
    std::fs::write(dir.join("instrument.json"), instrument.to_json_pretty() + "\n")?;
    for (wave, seed) in [(1, 42), (2, 43)] {
        let generator = Generator {
            seed,
            ..Generator::default()
        };
        let mut responses = generator.responses(&instrument);
        for r in &mut responses {
            r.wave = wave.to_string();
        }
        std::fs::write(dir.join(format!("survey_wave{wave}.csv")), to_csv(&responses))?;
    }
    Ok(())
}
