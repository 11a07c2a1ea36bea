//! Write a synthetic cohort to CSV, read it back and resample it.
//!
//! `cargo run --example cohort_csv [out_dir]`

use gaitdex::csv_io::{load_cohort_with_metadata, save_cohort, write_metadata};
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::{Joint, Side, VariableId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = match std::env::args().nth(1) {
        Some(d) => std::path::PathBuf::from(d),
        None => std::env::temp_dir().join("gaitdex-cohort-csv"),
    };
    std::fs::create_dir_all(&dir)?;
    let cohort = synth_cohort(&SynthConfig {
        n_healthy: 10,
        n_patients: 5,
        ..SynthConfig::default()
    })?;

    let (cohort_path, meta_path) = (dir.join("cohort.csv"), dir.join("metadata.csv"));
    save_cohort(&cohort, &cohort_path)?;
    write_metadata(&cohort, std::fs::File::create(&meta_path)?)?;
    let back = load_cohort_with_metadata(&cohort_path, &meta_path)?;
    println!(
        "{} subjects ({} healthy), {} grid points, {} variables -> {}",
        back.len(),
        back.n_healthy(),
        back.grid().num_points(),
        back.common_variables().len(),
        cohort_path.display()
    );

    let knee = VariableId::new(Side::Left, Joint::KneeFlexion);
    let coarse = back.resample(51)?;
    let p = back.subject("P001").unwrap();
    println!(
        "P001 {knee}: {} points, peak {:.2} deg; resampled to {} points, peak {:.2} deg; HY {:?}",
        p.curve(knee).unwrap().len(),
        p.curve(knee).unwrap().iter().cloned().fold(f64::MIN, f64::max),
        coarse.grid().num_points(),
        coarse
            .subject("P001")
            .unwrap()
            .curve(knee)
            .unwrap()
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max),
        p.metadata.hoehn_yahr
    );
    Ok(())
}
