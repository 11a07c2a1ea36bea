//! Kendall's tau, Wilcoxon, Kruskal-Wallis and a linear trend on index values.

use std::collections::BTreeMap;

use gaitdex::pipeline::{fit_pipeline, Mode, PipelineConfig};
use gaitdex::report::{score_cohort, ScoreOptions};
use gaitdex::stats::{kendall_tau, kruskal_wallis, linear_trend, wilcoxon_rank_sum};
use gaitdex::synth::{synth_cohort, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cohort = synth_cohort(&SynthConfig {
        n_patients: 30,
        ..SynthConfig::default()
    })?;
    let config = PipelineConfig {
        modes: vec![Mode::Combined],
        ..PipelineConfig::default()
    };
    let model = fit_pipeline(&cohort, &config)?;
    let report = score_cohort(
        &model,
        &cohort,
        &ScoreOptions {
            indices: "fgdi,gps,oa".parse()?,
            gdi_basis: None,
        },
    )?;
    let patients: Vec<_> = report.subjects.iter().filter(|s| !s.healthy).collect();
    let z: Vec<f64> = patients.iter().map(|s| s.sfgdi["combined"]).collect();
    let gps: Vec<f64> = patients.iter().map(|s| s.gps["combined"]).collect();
    let oa: Vec<f64> = patients.iter().map(|s| s.oa["combined"]).collect();
    println!("tau(sFGDI, GPS) = {:.3}", kendall_tau(&z, &gps)?);
    println!("tau(sFGDI, OA)  = {:.3}", kendall_tau(&z, &oa)?);

    let (mut freezers, mut others) = (Vec::new(), Vec::new());
    let mut by_hy: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    let mut hy = Vec::new();
    for (s, &v) in patients.iter().zip(&z) {
        if s.metadata.freezer == Some(true) {
            freezers.push(v)
        } else {
            others.push(v)
        }
        let h = s.metadata.hoehn_yahr.unwrap();
        by_hy.entry(h).or_default().push(v);
        hy.push(h as f64);
    }
    let w = wilcoxon_rank_sum(&freezers, &others, true)?;
    println!(
        "Wilcoxon freezers vs others: W = {:.1}, p = {:.4} ({})",
        w.statistic, w.p_value, w.method
    );
    let groups: Vec<Vec<f64>> = by_hy.into_values().collect();
    let kw = kruskal_wallis(&groups)?;
    println!(
        "Kruskal-Wallis over HY: H = {:.3}, p = {:.4}",
        kw.statistic, kw.p_value
    );
    let t = linear_trend(&hy, &z)?;
    println!("sFGDI ~ HY: slope {:.3}, p = {:.2e}", t.slope, t.p_value);
    Ok(())
}
