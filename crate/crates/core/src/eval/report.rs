use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::train::csv_error;

/// Image-quality comparison of a degraded input and its reconstruction
/// against the clean reference. `image` is an index, or `mean` on aggregate
/// rows. PSNR uses the reference maximum as peak.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub experiment: String,
    pub group: String,
    pub image: String,
    pub input_psnr: f64,
    pub input_ssim: f64,
    pub output_psnr: f64,
    pub output_ssim: f64,
    pub fingerprint: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub fingerprint: String,
    pub rows: Vec<MetricRow>,
}

/// Hex SHA-256 of the config's JSON serialization.
pub fn fingerprint<C: Serialize>(config: &C) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(config)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Per-image quality numbers before aggregation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageScores {
    pub input_psnr: f64,
    pub input_ssim: f64,
    pub output_psnr: f64,
    pub output_ssim: f64,
}

impl MetricReport {
    pub fn new(fingerprint: String) -> Self {
        Self {
            fingerprint,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, experiment: &str, group: &str, image: &str, s: ImageScores) {
        self.rows.push(MetricRow {
            experiment: experiment.into(),
            group: group.into(),
            image: image.into(),
            input_psnr: s.input_psnr,
            input_ssim: s.input_ssim,
            output_psnr: s.output_psnr,
            output_ssim: s.output_ssim,
            fingerprint: self.fingerprint.clone(),
        });
    }

    /// Per-image rows followed by their mean.
    pub fn push_group(&mut self, experiment: &str, group: &str, scores: &[ImageScores]) {
        for (i, s) in scores.iter().enumerate() {
            self.push(experiment, group, &i.to_string(), *s);
        }
        self.push(experiment, group, "mean", mean_scores(scores));
    }

    pub fn aggregate(&self, group: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.group == group && r.image == "mean")
    }

    pub fn groups(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.group.as_str()) {
                out.push(&r.group);
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

pub fn mean_scores(scores: &[ImageScores]) -> ImageScores {
    let n = scores.len().max(1) as f64;
    let mean = |f: fn(&ImageScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    ImageScores {
        input_psnr: mean(|s| s.input_psnr),
        input_ssim: mean(|s| s.input_ssim),
        output_psnr: mean(|s| s.output_psnr),
        output_ssim: mean(|s| s.output_ssim),
    }
}
