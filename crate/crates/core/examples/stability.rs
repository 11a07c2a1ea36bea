//! Sensitivity of FGDI to the number of retained components.

use gaitdex::fpca::Smoothing;
use gaitdex::indices::{stability_multivariate, stability_per_joint};
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::{Side, VariableSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = synth_cohort(&SynthConfig {
        n_healthy: 30,
        n_patients: 20,
        ..SynthConfig::default()
    })?;
    let set = VariableSet::combined15(Side::Left);
    let offsets = [-2, -1, 1, 2];
    let out = std::io::stdout();
    stability_per_joint(&cohort, &set, 0.99, &offsets, Smoothing::None)?.write_csv(out.lock())?;
    let multi = stability_multivariate(&cohort, &set, 0.99, &[-5, 5], Smoothing::None)?;
    multi.write_csv(out.lock())?;
    for w in &multi.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
