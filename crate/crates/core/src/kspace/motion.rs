use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::rng::Rng;

/// Per-line phase error model, registered by name in [`motion_models`].
pub trait MotionModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Phase for every line given its normalized frequency; lines with
    /// `|kappa| <= spec.kappa0` must get zero.
    fn sample(&self, spec: &MotionSpec, kappa: &[f64], rng: &mut Rng) -> Vec<f64>;
}

struct NoMotion;

impl MotionModel for NoMotion {
    fn name(&self) -> &'static str {
        "none"
    }

    fn sample(&self, _: &MotionSpec, kappa: &[f64], _: &mut Rng) -> Vec<f64> {
        vec![0.0; kappa.len()]
    }
}

/// Independent displacement per line.
struct RandomPhase;

impl MotionModel for RandomPhase {
    fn name(&self) -> &'static str {
        "random_phase"
    }

    fn sample(&self, spec: &MotionSpec, kappa: &[f64], rng: &mut Rng) -> Vec<f64> {
        kappa
            .iter()
            .map(|&k| {
                let delta = rng.uniform(spec.delta_range.0, spec.delta_range.1);
                if k.abs() > spec.kappa0 {
                    k * delta
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// One displacement, frequency and offset per image, modulated along the
/// phase-encoding axis.
struct Sinusoidal;

impl MotionModel for Sinusoidal {
    fn name(&self) -> &'static str {
        "sinusoidal"
    }

    fn sample(&self, spec: &MotionSpec, kappa: &[f64], rng: &mut Rng) -> Vec<f64> {
        let delta = rng.uniform(spec.delta_range.0, spec.delta_range.1);
        let alpha = rng.uniform(spec.alpha_range.0, spec.alpha_range.1);
        let beta = rng.uniform(spec.beta_range.0, spec.beta_range.1);
        kappa
            .iter()
            .map(|&k| {
                if k.abs() > spec.kappa0 {
                    k * delta * (alpha * k + beta).sin()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

static MODELS: [&dyn MotionModel; 3] = [&NoMotion, &RandomPhase, &Sinusoidal];

pub fn motion_models() -> &'static [&'static dyn MotionModel] {
    &MODELS
}

/// Looks a model up by name; `random` is accepted for `random_phase`.
pub fn motion_model(name: &str) -> Result<&'static dyn MotionModel> {
    let name = if name == "random" { "random_phase" } else { name };
    MODELS
        .iter()
        .copied()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::config(format!("unknown motion model {name:?}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    pub model: String,
    #[serde(default = "default_kappa0")]
    pub kappa0: f64,
    #[serde(default = "default_delta")]
    pub delta_range: (f64, f64),
    #[serde(default = "default_alpha")]
    pub alpha_range: (f64, f64),
    #[serde(default = "default_beta")]
    pub beta_range: (f64, f64),
}

fn default_kappa0() -> f64 {
    PI / 10.0
}

fn default_delta() -> (f64, f64) {
    (-37.0, 37.0)
}

fn default_alpha() -> (f64, f64) {
    (0.1, 5.0)
}

fn default_beta() -> (f64, f64) {
    (0.0, PI / 4.0)
}

impl MotionSpec {
    pub fn none() -> Self {
        Self {
            model: "none".into(),
            ..Self::random_phase()
        }
    }

    pub fn random_phase() -> Self {
        Self {
            model: "random_phase".into(),
            kappa0: default_kappa0(),
            delta_range: default_delta(),
            alpha_range: default_alpha(),
            beta_range: default_beta(),
        }
    }

    pub fn sinusoidal() -> Self {
        Self {
            model: "sinusoidal".into(),
            delta_range: (0.0, 37.0),
            ..Self::random_phase()
        }
    }

    pub fn validate(&self) -> Result<()> {
        motion_model(&self.model)?;
        if !(self.kappa0 > 0.0 && self.kappa0 <= PI) {
            return Err(Error::config(format!("kappa0 {} outside (0, pi]", self.kappa0)));
        }
        for (name, (lo, hi)) in [
            ("delta_range", self.delta_range),
            ("alpha_range", self.alpha_range),
            ("beta_range", self.beta_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::config(format!("{name} ({lo}, {hi}) is not an ordered interval")));
            }
        }
        Ok(())
    }
}

/// Normalized phase-encoding frequency of line `i`, in `[-pi, pi)`.
pub fn kappa_y(i: usize, width: usize) -> f64 {
    PI * (2.0 * (i as f64 - (width / 2) as f64) / width as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile")]
pub struct PhaseShiftProfile {
    width: usize,
    phi: Vec<f64>,
}

#[derive(Deserialize)]
struct ProfileFile {
    width: usize,
    phi: Vec<f64>,
}

impl TryFrom<ProfileFile> for PhaseShiftProfile {
    type Error = Error;

    fn try_from(f: ProfileFile) -> Result<Self> {
        PhaseShiftProfile::new(f.phi).and_then(|p| {
            if p.width == f.width {
                Ok(p)
            } else {
                Err(Error::config(format!("profile width {} with {} phases", f.width, p.width)))
            }
        })
    }
}

impl PhaseShiftProfile {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if let Some(index) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { width: phi.len(), phi })
    }

    pub fn zeros(width: usize) -> Self {
        Self {
            width,
            phi: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Lines carrying a nonzero phase error.
    pub fn corrupted_lines(&self) -> Vec<usize> {
        (0..self.width).filter(|&i| self.phi[i] != 0.0).collect()
    }

    /// The profile that undoes this one.
    pub fn negated(&self) -> Self {
        Self {
            width: self.width,
            phi: self.phi.iter().map(|v| -v).collect(),
        }
    }
}

pub fn sample_phase_profile(spec: &MotionSpec, width: usize, rng: &mut Rng) -> Result<PhaseShiftProfile> {
    spec.validate()?;
    let kappa: Vec<f64> = (0..width).map(|i| kappa_y(i, width)).collect();
    let phi = motion_model(&spec.model)?.sample(spec, &kappa, rng);
    PhaseShiftProfile::new(phi)
}

/// Multiplies every sample on line `i` by `exp(-i phi[i])`.
pub fn apply_motion(k: &KGrid, profile: &PhaseShiftProfile) -> Result<KGrid> {
    if k.width() != profile.width {
        return Err(Error::Shape(format!(
            "profile width {} vs k-space width {}",
            profile.width,
            k.width()
        )));
    }
    let factors: Vec<Option<Complex64>> = profile
        .phi
        .iter()
        .map(|&p| (p != 0.0).then(|| Complex64::from_polar(1.0, -p)))
        .collect();
    let mut out = k.clone();
    let w = k.width();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if let Some(f) = factors[i % w] {
            *v *= f;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(model: &str, delta: f64, alpha: f64, beta: f64) -> MotionSpec {
        MotionSpec {
            model: model.into(),
            kappa0: PI / 10.0,
            delta_range: (delta, delta),
            alpha_range: (alpha, alpha),
            beta_range: (beta, beta),
        }
    }

    #[test]
    fn below_threshold_lines_are_clean() {
        // width 40: line 21 sits at kappa = pi/20
        let p = sample_phase_profile(&MotionSpec::random_phase(), 40, &mut Rng::new(3)).unwrap();
        assert!((kappa_y(21, 40) - PI / 20.0).abs() < 1e-15);
        assert_eq!(p.phi()[21], 0.0);
        assert!(p.corrupted_lines().iter().all(|&i| kappa_y(i, 40).abs() > PI / 10.0));
    }

    #[test]
    fn random_phase_is_kappa_times_delta() {
        // width 4: line 3 sits at kappa = pi/2
        let p = sample_phase_profile(&fixed("random_phase", 2.0, 1.0, 0.0), 4, &mut Rng::new(0)).unwrap();
        assert!((p.phi()[3] - PI).abs() < 1e-15);
    }

    #[test]
    fn sinusoid_vanishes_at_its_node() {
        let p = sample_phase_profile(&fixed("sinusoidal", 1.0, 2.0, 0.0), 4, &mut Rng::new(0)).unwrap();
        assert!(p.phi()[3].abs() < 1e-15);
    }

    #[test]
    fn none_is_all_zero() {
        let p = sample_phase_profile(&MotionSpec::none(), 16, &mut Rng::new(0)).unwrap();
        assert!(p.corrupted_lines().is_empty());
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(motion_model("random").unwrap().name(), "random_phase");
        assert!(matches!(motion_model("drift"), Err(Error::Config(_))));
        let names: Vec<_> = motion_models().iter().map(|m| m.name()).collect();
        assert_eq!(names, ["none", "random_phase", "sinusoidal"]);
    }

    #[test]
    fn pi_phase_negates_one_line() {
        let data: Vec<Complex64> = (0..6).map(|v| Complex64::new(v as f64, 1.0)).collect();
        let k = KGrid::new(2, 3, data).unwrap();
        let p = PhaseShiftProfile::new(vec![0.0, PI, 0.0]).unwrap();
        let out = apply_motion(&k, &p).unwrap();
        for r in 0..2 {
            assert_eq!(out.get(r, 0), k.get(r, 0));
            assert!((out.get(r, 1) + k.get(r, 1)).norm() < 1e-15);
        }
        assert!(apply_motion(&k, &PhaseShiftProfile::zeros(4)).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = MotionSpec::sinusoidal();
        s.validate().unwrap();
        s.alpha_range = (5.0, 0.1);
        assert!(s.validate().is_err());
        let mut s = MotionSpec::none();
        s.kappa0 = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn profile_json() {
        let p = PhaseShiftProfile::new(vec![0.0, 1.5]).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v, serde_json::json!({"width": 2, "phi": [0.0, 1.5]}));
        assert_eq!(serde_json::from_value::<PhaseShiftProfile>(v).unwrap(), p);
        assert!(serde_json::from_str::<PhaseShiftProfile>(r#"{"width":3,"phi":[0.0]}"#).is_err());
    }
}
