use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::rng::Rng;

/// Phase-encoding line selection. A contiguous block of `acs_count` central
/// lines is always kept; the rest are drawn with a Gaussian preference for
/// low frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MaskFile", try_from = "MaskFile")]
pub struct Mask {
    width: usize,
    r: f64,
    acs_count: usize,
    selected: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct MaskFile {
    width: usize,
    #[serde(rename = "R")]
    r: f64,
    acs_count: usize,
    selected: Vec<usize>,
}

impl From<Mask> for MaskFile {
    fn from(m: Mask) -> Self {
        MaskFile {
            width: m.width,
            r: m.r,
            acs_count: m.acs_count,
            selected: m.indices(),
        }
    }
}

impl TryFrom<MaskFile> for Mask {
    type Error = Error;

    fn try_from(f: MaskFile) -> Result<Self> {
        let mut selected = vec![false; f.width];
        for i in f.selected {
            *selected
                .get_mut(i)
                .ok_or_else(|| Error::config(format!("mask line {i} outside width {}", f.width)))? = true;
        }
        let m = Mask {
            width: f.width,
            r: f.r,
            acs_count: f.acs_count,
            selected,
        };
        if !m.acs_lines().all(|i| m.selected[i]) {
            return Err(Error::config("mask does not contain its ACS block"));
        }
        Ok(m)
    }
}

impl Mask {
    /// Every line selected.
    pub fn full(width: usize) -> Self {
        Mask {
            width,
            r: 1.0,
            acs_count: width,
            selected: vec![true; width],
        }
    }

    /// Arbitrary selection, used for hand-built masks in experiments and tests.
    pub fn from_selection(selected: Vec<bool>, acs_count: usize) -> Self {
        let width = selected.len();
        let count = selected.iter().filter(|&&s| s).count().max(1);
        Mask {
            width,
            r: width as f64 / count as f64,
            acs_count,
            selected,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn acceleration(&self) -> f64 {
        self.r
    }

    pub fn acs_count(&self) -> usize {
        self.acs_count
    }

    pub fn selected(&self) -> &[bool] {
        &self.selected
    }

    pub fn is_selected(&self, line: usize) -> bool {
        self.selected[line]
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.width).filter(|&i| self.selected[i]).collect()
    }

    /// Line indices of the central ACS block.
    pub fn acs_lines(&self) -> std::ops::Range<usize> {
        acs_range(self.width, self.acs_count)
    }
}

fn acs_range(width: usize, acs: usize) -> std::ops::Range<usize> {
    let start = (width / 2).saturating_sub(acs / 2);
    start..(start + acs).min(width)
}

/// Draws a mask keeping `round(width / r)` lines: the ACS block of
/// `max(1, round(acs_fraction * width))` central lines, then lines sampled
/// without replacement with probability proportional to a Gaussian of
/// standard deviation `width / 6` centered on DC.
pub fn make_mask(width: usize, r: f64, acs_fraction: f64, rng: &mut Rng) -> Result<Mask> {
    if width == 0 {
        return Err(Error::config("mask width must be positive"));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::config(format!("acceleration {r} must be >= 1")));
    }
    if !(0.0..1.0).contains(&acs_fraction) {
        return Err(Error::config(format!("ACS fraction {acs_fraction} outside [0, 1)")));
    }
    // f64::round is half away from zero
    let target = ((width as f64 / r).round() as usize).min(width);
    let acs = ((acs_fraction * width as f64).round() as usize).max(1);
    if target < acs {
        return Err(Error::config(format!(
            "acceleration {r} keeps {target} lines, fewer than the {acs} ACS lines"
        )));
    }
    let mut selected = vec![false; width];
    for i in acs_range(width, acs) {
        selected[i] = true;
    }
    let center = (width / 2) as f64;
    let sigma = width as f64 / 6.0;
    // Successive weighted draws without replacement are equivalent to keeping
    // the largest keys u^(1/w) (Efraimidis-Spirakis); compare ln(u)/w.
    let mut keys: Vec<(f64, usize)> = (0..width)
        .filter(|&i| !selected[i])
        .map(|i| {
            let d = i as f64 - center;
            let weight = (-d * d / (2.0 * sigma * sigma)).exp();
            let u = 1.0 - rng.unit(); // (0, 1]
            (u.ln() / weight, i)
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in keys.iter().take(target - acs) {
        selected[i] = true;
    }
    Ok(Mask {
        width,
        r,
        acs_count: acs,
        selected,
    })
}

/// Zeroes unselected phase-encoding lines (columns).
pub fn apply_mask(k: &KGrid, m: &Mask) -> Result<KGrid> {
    if k.width() != m.width() {
        return Err(Error::Shape(format!(
            "mask width {} vs k-space width {}",
            m.width(),
            k.width()
        )));
    }
    let mut out = k.clone();
    let w = k.width();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if !m.selected[i % w] {
            *v = Default::default();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_acceleration_selects_everything() {
        let m = make_mask(37, 1.0, 0.06, &mut Rng::new(1)).unwrap();
        assert_eq!(m.count(), 37);
    }

    #[test]
    fn reference_mask_counts() {
        let m = make_mask(180, 3.0, 0.06, &mut Rng::new(2)).unwrap();
        assert_eq!(m.count(), 60);
        assert_eq!(m.acs_count(), 11);
        assert_eq!(m.acs_lines(), 85..96);
        assert!(m.acs_lines().all(|i| m.is_selected(i)));
    }

    #[test]
    fn too_few_lines_for_acs_is_a_config_error() {
        assert!(matches!(make_mask(20, 10.0, 0.5, &mut Rng::new(0)), Err(Error::Config(_))));
        assert!(make_mask(20, 0.5, 0.1, &mut Rng::new(0)).is_err());
        assert!(make_mask(20, 2.0, 1.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn json_layout() {
        let m = Mask::from_selection(vec![false, true, true, false], 2);
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["selected"], serde_json::json!([1, 2]));
        assert_eq!(v["R"], serde_json::json!(2.0));
        let back: Mask = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }
}
