//! Seeded synthetic cohorts with gait-like curves.
//!
//! Each variable is a three-harmonic template perturbed per subject. Patients
//! additionally get offset, amplitude, timing and shape deviations whose size
//! is `deviation_scale * severity`. Random draws do not depend on the scale,
//! so the same seed at a larger scale yields the same subjects, further away
//! from the healthy template.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cohort::{ClinicalMetadata, Cohort, SubjectRecord};
use crate::error::{GaitError, Result};
use crate::grid::GridSpec;
use crate::variable::{Joint, Side, VariableId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_healthy: usize,
    pub n_patients: usize,
    pub grid_points: usize,
    pub deviation_scale: f64,
    /// Standard deviation of the white measurement noise, degrees.
    pub noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_healthy: 20,
            n_patients: 20,
            grid_points: 101,
            deviation_scale: 1.0,
            noise_sd: 0.3,
        }
    }
}

/// Mean level and (amplitude, phase) of harmonics 1..=3.
fn template(joint: Joint) -> (f64, [(f64, f64); 3]) {
    match joint {
        Joint::PelvicTilt => (10.0, [(0.5, 0.3), (1.5, 1.0), (0.3, 0.0)]),
        Joint::PelvicObliquity => (0.0, [(4.0, 0.5), (1.0, 1.2), (0.5, 0.0)]),
        Joint::PelvicRotation => (0.0, [(5.0, -0.4), (0.8, 0.5), (0.3, 1.0)]),
        Joint::HipFlexion => (15.0, [(22.0, 0.2), (3.0, 1.0), (1.0, 0.0)]),
        Joint::HipAbduction => (-2.0, [(4.0, 1.0), (2.0, 0.4), (0.8, 0.3)]),
        Joint::HipRotation => (2.0, [(5.0, 0.7), (2.0, -0.5), (0.5, 0.2)]),
        Joint::KneeFlexion => (30.0, [(-18.0, 0.0), (14.0, -1.2), (4.0, 0.6)]),
        Joint::AnkleDorsiflexion => (3.0, [(6.0, 2.0), (8.0, 0.8), (3.0, -0.3)]),
        Joint::FootRotation => (-10.0, [(4.0, 0.4), (1.5, 1.1), (0.5, 0.0)]),
    }
}

struct Deviation {
    offset: f64,
    amp_factor: f64,
    shift: f64,
    extra: [f64; 2],
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn curve(
    var: VariableId,
    positions: &[f64],
    rng: &mut ChaCha8Rng,
    speed: f64,
    noise_sd: f64,
    dev: Option<&Deviation>,
) -> Vec<f64> {
    let (level, harmonics) = template(var.joint);
    // the opposite side sees pelvic obliquity and rotation mirrored
    let mirror =
        if var.side == Side::Right && matches!(var.joint, Joint::PelvicObliquity | Joint::PelvicRotation) {
            -1.0
        } else {
            1.0
        };
    let offset = 1.5 * normal(rng);
    let wobble: Vec<(f64, f64)> = (0..3).map(|_| (0.4 * normal(rng), 0.4 * normal(rng))).collect();
    let noise: Vec<f64> = positions.iter().map(|_| noise_sd * normal(rng)).collect();

    let (d_off, d_amp, d_shift, d_extra) = match dev {
        Some(d) => (d.offset, d.amp_factor, d.shift, d.extra),
        None => (0.0, 1.0, 0.0, [0.0, 0.0]),
    };
    positions
        .iter()
        .zip(&noise)
        .map(|(&p, e)| {
            let t = p / 100.0 + d_shift;
            let mut v = level + offset + d_off;
            for (h, (&(amp, phase), &(wc, ws))) in harmonics.iter().zip(&wobble).enumerate() {
                let x = TAU * (h + 1) as f64 * t;
                v += mirror * speed * d_amp * amp * (x + phase).cos() + wc * x.cos() + ws * x.sin();
            }
            v += d_extra[0] * (2.0 * TAU * t).sin() + d_extra[1] * (4.0 * TAU * t).cos();
            v + e
        })
        .collect()
}

/// Healthy subjects `H001..` followed by patients `P001..`, all 18 variables.
pub fn synth_cohort(config: &SynthConfig) -> Result<Cohort> {
    if config.n_healthy < 2 {
        return Err(GaitError::arg(
            "synthetic cohort needs at least 2 healthy subjects",
        ));
    }
    if !(config.deviation_scale >= 0.0) || !(config.noise_sd >= 0.0) {
        return Err(GaitError::arg(
            "deviation_scale and noise_sd must be non-negative",
        ));
    }
    let grid = GridSpec::new(config.grid_points)?;
    let positions = grid.positions();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut subjects = Vec::with_capacity(config.n_healthy + config.n_patients);

    for i in 0..config.n_healthy {
        let speed = 1.0 + 0.06 * normal(&mut rng);
        let mut s = SubjectRecord::new(format!("H{:03}", i + 1), true);
        for v in VariableId::all() {
            let c = curve(v, &positions, &mut rng, speed, config.noise_sd, None);
            s = s.with_curve(v, c);
        }
        subjects.push(s);
    }

    let scale = config.deviation_scale;
    for i in 0..config.n_patients {
        let severity: f64 = rng.random_range(0.5..1.5);
        let freezer = rng.random_bool(0.4);
        let speed = 1.0 + 0.06 * normal(&mut rng);
        let k = scale * severity;
        let mut s = SubjectRecord::new(format!("P{:03}", i + 1), false);
        s.metadata = ClinicalMetadata {
            hoehn_yahr: Some((1.0 + (severity - 0.5) * 3.999).floor() as u8),
            freezer: Some(freezer),
            ..ClinicalMetadata::default()
        };
        for v in VariableId::all() {
            let dev = Deviation {
                offset: k * 3.0 * normal(&mut rng),
                amp_factor: (1.0 - k * 0.15 * normal(&mut rng).abs()).max(0.1),
                shift: k * 0.02 * normal(&mut rng),
                extra: [k * normal(&mut rng), k * 0.5 * normal(&mut rng)],
            };
            let c = curve(v, &positions, &mut rng, speed, config.noise_sd, Some(&dev));
            s = s.with_curve(v, c);
        }
        subjects.push(s);
    }
    Cohort::new(grid, subjects)
}
