//! GDI (surrogate basis), GPS/GVS and OA next to sFGDI.
//!
//! `cargo run --example reference_indices [basis_out.csv]` also writes the
//! surrogate feature basis (459 x 15) in the layout `--gdi-basis` reads.

use gaitdex::indices::{gdi, gvs_gps, oa, GdiFeatureBasis};
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::{Side, VariableSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = synth_cohort(&SynthConfig {
        grid_points: 51,
        ..SynthConfig::default()
    })?;
    let basis = GdiFeatureBasis::surrogate(&cohort, 15)?;
    if let Some(path) = std::env::args().nth(1) {
        basis.write_csv(std::fs::File::create(&path)?)?;
        println!(
            "wrote {} x {} basis to {path}",
            basis.matrix().nrows(),
            basis.n_features()
        );
    }

    let set = VariableSet::combined15(Side::Left);
    let g = gdi(&cohort, Side::Left, &basis)?;
    let profile = gvs_gps(&cohort, &set)?;
    let abnormality = oa(&cohort, &set)?;
    println!("{:<6} {:>8} {:>8} {:>8}", "id", "sGDI L", "GPS", "OA");
    for (i, s) in cohort.subjects().iter().enumerate().step_by(4) {
        println!(
            "{:<6} {:>8.2} {:>8.2} {:>8.3}",
            s.subject_id, g.sgdi[i], profile.gps[i], abnormality[i]
        );
    }
    Ok(())
}
