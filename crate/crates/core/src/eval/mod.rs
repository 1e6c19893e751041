//! Image-quality metrics, reports and the experiment drivers.

mod experiment;
mod metrics;
mod panels;
mod report;

pub use experiment::{
    ablation_variants, experiment, experiments, run_ablation, run_experiment, run_r_sweep, run_simulation_study,
    simulation_data, synthesize_artifact, trained_weights, Experiment, ExperimentConfig, SimulationData, METRICS_FILE,
};
pub use metrics::{psnr, ssim, PSNR_CAP, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use panels::save_panel;
pub use report::{fingerprint, mean_scores, ImageScores, MetricReport, MetricRow};
