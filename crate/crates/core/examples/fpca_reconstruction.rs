//! Univariate FPCA of one joint angle: components, PVE and reconstruction error.

use gaitdex::fpca::{fit_univariate_fpca, quadrature_rmse, Smoothing};
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::{Joint, Side, VariableId, VariableSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = synth_cohort(&SynthConfig::default())?;
    let knee = VariableId::new(Side::Right, Joint::KneeFlexion);
    let curves = cohort.select(&VariableSet::single(knee))?.matrix(knee)?;

    let model = fit_univariate_fpca(&curves, cohort.grid(), 0.99, Smoothing::None)?;
    println!(
        "{knee}: K = {} of {} available",
        model.n_components(),
        model.available_components
    );
    for (k, (ev, pve)) in model.eigenvalues.iter().zip(&model.pve).enumerate() {
        println!(
            "  component {:>2}: eigenvalue {ev:>9.3}  cumulative PVE {:.4}",
            k + 1,
            pve
        );
    }

    let subject = cohort.subject_index("P003").unwrap();
    let observed = cohort.subjects()[subject].curve(knee).unwrap();
    for k in 1..=model.n_components() {
        let approx = model.reconstruct(subject, k)?;
        println!(
            "  P003 with {k} components: RMSE {:.3} deg",
            quadrature_rmse(observed, &approx, cohort.grid())?
        );
    }
    Ok(())
}
