//! Per-variable sFGDI bars (movement analysis profile) for one patient.

use gaitdex::fpca::Smoothing;
use gaitdex::indices::map_profile;
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::{Side, VariableSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = synth_cohort(&SynthConfig {
        deviation_scale: 1.5,
        ..SynthConfig::default()
    })?;
    let profile = map_profile(
        &cohort,
        &VariableSet::combined15(Side::Left),
        0.99,
        Smoothing::None,
    )?;
    let id = std::env::args().nth(1).unwrap_or_else(|| "P001".into());
    let i = cohort.subject_index(&id).ok_or(format!("no subject {id}"))?;
    println!("{id}");
    for (v, z) in profile.subject(i) {
        let bar = "#".repeat((z.max(0.0) * 4.0).round() as usize);
        println!("  {:<38} {z:>6.2} {bar}", v.label());
    }
    Ok(())
}
