//! Curve approximation error of the FPCA path versus the OA path.

use gaitdex::indices::{fit_oa, fpca_approximation_error, oa_approximation_error};
use gaitdex::pipeline::{fit_pipeline, Mode, PipelineConfig};
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex::variable::{Side, VariableSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for scale in [0.5, 1.0, 2.0] {
        let cohort = synth_cohort(&SynthConfig {
            deviation_scale: scale,
            ..SynthConfig::default()
        })?;
        let model = fit_pipeline(
            &cohort,
            &PipelineConfig {
                modes: vec![Mode::Combined],
                ..PipelineConfig::default()
            },
        )?;
        let f = fpca_approximation_error(&cohort, &model.mode(Mode::Combined).unwrap().fpca)?;
        let o = oa_approximation_error(&cohort, &fit_oa(&cohort, &VariableSet::combined15(Side::Left))?)?;
        let patient_mean = |e: &[f64]| {
            let v: Vec<f64> = e
                .iter()
                .zip(cohort.subjects())
                .filter(|(_, s)| !s.healthy)
                .map(|(x, _)| *x)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        println!(
            "scale {scale}: patient RMSE FPCA {:.3} deg, OA {:.3} deg",
            patient_mean(&f.mean),
            patient_mean(&o.mean)
        );
    }
    Ok(())
}
