//! Fit all modes and print FGDI / sFGDI for a few subjects.

use gaitdex::pipeline::{fit_pipeline, PipelineConfig};
use gaitdex::report::{score_cohort, ScoreOptions};
use gaitdex::synth::{synth_cohort, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = synth_cohort(&SynthConfig::default())?;
    let model = fit_pipeline(&cohort, &PipelineConfig::default())?;
    for line in model.summary() {
        println!("{line}");
    }

    let report = score_cohort(
        &model,
        &cohort,
        &ScoreOptions {
            indices: "fgdi".parse()?,
            gdi_basis: None,
        },
    )?;
    println!("{:<6} {:>10} {:>10} {:>10}", "id", "combined", "left", "right");
    for id in ["H001", "H002", "P001", "P002", "P003"] {
        let s = report.subject(id).unwrap();
        println!(
            "{id:<6} {:>10.3} {:>10.3} {:>10.3}",
            s.sfgdi["combined"], s.sfgdi["left"], s.sfgdi["right"]
        );
    }
    Ok(())
}
