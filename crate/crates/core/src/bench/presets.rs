use super::{ExperimentSpec, Preset, TauRule};
use crate::synth::NoiseFamily;

/// `count` points spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}

const DESK_N: usize = 200;

impl ExperimentSpec {
    /// Default campaign for a preset, at desk scale (`n = 200`, 10 trials).
    /// The paper-scale runs use `n = 1000` and 50 trials.
    pub fn preset(preset: Preset) -> ExperimentSpec {
        let base = ExperimentSpec {
            preset,
            n: DESK_N,
            r: 5,
            p: 0.3,
            distributions: vec![NoiseFamily::Gaussian],
            sigma_grid: vec![1e-4],
            tau_rule: TauRule::PaperRule { c_tau: 3.0 },
            trials: 10,
            eta: 0.05,
            max_iters: 2000,
            tol: 1e-10,
            master_seed: 2024,
        };
        let heavy_three = vec![
            NoiseFamily::Gaussian,
            NoiseFamily::StudentT { nu: 3.0 },
            NoiseFamily::Trinomial { delta: 0.01 },
        ];
        let tau_three = vec![
            NoiseFamily::AsymTwoPoint { delta: 1e-4 },
            NoiseFamily::StudentT { nu: 2.1 },
            NoiseFamily::Gaussian,
        ];
        let sigma_decades = vec![1e-6, 1e-5, 1e-4, 1e-3];
        match preset {
            Preset::Fig1Convergence => ExperimentSpec {
                distributions: heavy_three,
                sigma_grid: sigma_decades,
                trials: 1,
                max_iters: 1000,
                tol: 0.0,
                ..base
            },
            Preset::Fig2SigmaSweep => ExperimentSpec {
                distributions: heavy_three,
                sigma_grid: sigma_decades,
                ..base
            },
            Preset::Fig3TauSweep => ExperimentSpec {
                distributions: tau_three,
                sigma_grid: vec![1e-3],
                tau_rule: TauRule::ExplicitGrid {
                    values: log_space(1e-5, 1e2, 13),
                },
                ..base
            },
            Preset::Fig4LsRatio => ExperimentSpec {
                distributions: tau_three,
                sigma_grid: sigma_decades,
                tau_rule: TauRule::ExplicitGrid {
                    values: log_space(1e-4, 1e-1, 7),
                },
                ..base
            },
            Preset::Custom => base,
        }
    }
}
