//! Singular radial weights: positive, continuous, non-increasing functions
//! on a half-open interval (0, d_max], integrable at the origin, together
//! with their first and second primitives.

use crate::quad::{graded_integral, DEFAULT_MAX_LEVELS, DEFAULT_RTOL};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Number of ordered sample pairs used for the construction-time
/// monotonicity check.
const MONOTONICITY_SAMPLES: usize = 1024;

/// The functional form of a radial weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WeightKind {
    /// Constant positive value.
    Constant { value: f64 },
    /// `coeff * d^(-alpha)` with `alpha` in (0, 1).
    Power { coeff: f64, alpha: f64 },
    /// Monotone piecewise-linear interpolant of (distance, value) samples,
    /// extended to (0, first distance] by the power law through the first
    /// two samples so a possible endpoint singularity is preserved.
    Tabulated { samples: Vec<(f64, f64)> },
}

/// A weight function Lambda on (0, d_max]: positive, continuous,
/// non-increasing and integrable at the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialWeight {
    kind: WeightKind,
    d_max: f64,
    rtol: f64,
    max_levels: usize,
}

impl RadialWeight {
    /// Constant weight on (0, d_max].
    pub fn constant(value: f64, d_max: f64) -> Result<Self> {
        Self::new(WeightKind::Constant { value }, d_max)
    }

    /// Power weight `coeff * d^(-alpha)` on (0, d_max].
    pub fn power(coeff: f64, alpha: f64, d_max: f64) -> Result<Self> {
        Self::new(WeightKind::Power { coeff, alpha }, d_max)
    }

    /// Tabulated weight from (distance, value) samples with strictly
    /// increasing distances. `d_max` is the last sample distance.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        let d_max = samples
            .last()
            .ok_or_else(|| Error::Construction("tabulated weight needs samples".into()))?
            .0;
        Self::new(WeightKind::Tabulated { samples }, d_max)
    }

    pub fn new(kind: WeightKind, d_max: f64) -> Result<Self> {
        if !(d_max > 0.0) || !d_max.is_finite() {
            return Err(Error::Construction(format!(
                "d_max must be positive and finite, got {d_max}"
            )));
        }
        match &kind {
            WeightKind::Constant { value } => {
                if !(*value > 0.0) {
                    return Err(Error::Construction(format!(
                        "constant weight must be positive, got {value}"
                    )));
                }
            }
            WeightKind::Power { coeff, alpha } => {
                if !(*coeff > 0.0) {
                    return Err(Error::Construction(format!(
                        "power weight coefficient must be positive, got {coeff}"
                    )));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::Construction(format!(
                        "power weight exponent must lie in (0, 1), got {alpha}"
                    )));
                }
            }
            WeightKind::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Construction(
                        "tabulated weight needs at least two samples".into(),
                    ));
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::Construction(format!(
                            "tabulated distances must be strictly increasing ({} then {})",
                            w[0].0, w[1].0
                        )));
                    }
                }
                for &(d, v) in samples {
                    if !(d > 0.0) || !(v > 0.0) || !v.is_finite() {
                        return Err(Error::Construction(format!(
                            "tabulated samples must have positive distance and value, got ({d}, {v})"
                        )));
                    }
                }
            }
        }
        let weight = RadialWeight {
            kind,
            d_max,
            rtol: DEFAULT_RTOL,
            max_levels: DEFAULT_MAX_LEVELS,
        };
        weight.check_monotone()?;
        // L^1 integrability near the origin; divergence surfaces here.
        weight.integrate_first(d_max)?;
        Ok(weight)
    }

    /// Load a tabulated weight from a two-column CSV (distance, value).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("line {}: expected two columns", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let d = parse(parts.next())?;
            let v = parse(parts.next())?;
            samples.push((d, v));
        }
        Self::tabulated(samples)
    }

    /// Override the quadrature controls (relative tolerance, level budget).
    pub fn with_quadrature(mut self, rtol: f64, max_levels: usize) -> Self {
        self.rtol = rtol;
        self.max_levels = max_levels;
        self
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    fn check_domain(&self, d: f64) -> Result<()> {
        if !(d > 0.0) || d > self.d_max {
            return Err(Error::Domain(format!(
                "distance {d} outside weight support (0, {}]",
                self.d_max
            )));
        }
        Ok(())
    }

    fn check_monotone(&self) -> Result<()> {
        let mut prev_d = 0.0;
        let mut prev_v = f64::INFINITY;
        for i in 1..=MONOTONICITY_SAMPLES {
            let d = self.d_max * (i as f64) / (MONOTONICITY_SAMPLES as f64);
            let v = self.eval_unchecked(d);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Construction(format!(
                    "weight must be positive and finite, got {v} at d={d}"
                )));
            }
            if v > prev_v * (1.0 + 1e-12) {
                return Err(Error::Construction(format!(
                    "weight is not non-increasing: value {prev_v} at d={prev_d} \
                     but {v} at d={d}"
                )));
            }
            prev_d = d;
            prev_v = v;
        }
        Ok(())
    }

    fn eval_unchecked(&self, d: f64) -> f64 {
        match &self.kind {
            WeightKind::Constant { value } => *value,
            WeightKind::Power { coeff, alpha } => coeff * d.powf(-alpha),
            WeightKind::Tabulated { samples } => {
                let (d0, v0) = samples[0];
                if d <= d0 {
                    // Power-law fit through the first two samples keeps a
                    // possible endpoint singularity instead of flattening it.
                    let (d1, v1) = samples[1];
                    let alpha = -(v1 / v0).ln() / (d1 / d0).ln();
                    if alpha.abs() < 1e-14 {
                        return v0;
                    }
                    return v0 * (d / d0).powf(-alpha);
                }
                match samples.binary_search_by(|&(sd, _)| sd.partial_cmp(&d).unwrap()) {
                    Ok(i) => samples[i].1,
                    Err(i) => {
                        let (da, va) = samples[i - 1];
                        let (db, vb) = samples[i.min(samples.len() - 1)];
                        if i >= samples.len() {
                            return samples[samples.len() - 1].1;
                        }
                        let t = (d - da) / (db - da);
                        va + t * (vb - va)
                    }
                }
            }
        }
    }

    /// Evaluate Lambda(d) for d in (0, d_max].
    pub fn eval(&self, d: f64) -> Result<f64> {
        self.check_domain(d)?;
        Ok(self.eval_unchecked(d))
    }

    /// Evaluate with d clamped into (0, d_max]: beyond d_max the weight is
    /// extended by its (smallest) value there, preserving monotonicity.
    /// Used by coefficient families whose domain is deeper than the
    /// weight's support.
    pub fn eval_clamped(&self, d: f64) -> f64 {
        self.eval_unchecked(d.clamp(f64::MIN_POSITIVE, self.d_max))
    }

    /// First primitive I1(r) = int_0^r Lambda(t) dt.
    ///
    /// Constant and power kinds use their closed forms; tabulated kinds go
    /// through graded quadrature with geometric halving toward the origin.
    pub fn integrate_first(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        match &self.kind {
            WeightKind::Constant { value } => Ok(value * r),
            WeightKind::Power { coeff, alpha } => Ok(coeff * r.powf(1.0 - alpha) / (1.0 - alpha)),
            WeightKind::Tabulated { .. } => {
                graded_integral(|t| self.eval_unchecked(t), r, self.rtol, self.max_levels)
            }
        }
    }

    /// Second primitive I2(r) = int_0^r I1(s) ds = int_0^r Lambda(t)(r - t) dt.
    pub fn integrate_second(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        match &self.kind {
            WeightKind::Constant { value } => Ok(0.5 * value * r * r),
            WeightKind::Power { coeff, alpha } => {
                Ok(coeff * r.powf(2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha)))
            }
            WeightKind::Tabulated { .. } => graded_integral(
                |t| self.eval_unchecked(t) * (r - t),
                r,
                self.rtol,
                self.max_levels,
            ),
        }
    }
}

/// Sample an existing weight onto a fine geometric grid, producing a
/// tabulated weight that is forced through the quadrature path.
pub fn tabulate(weight: &RadialWeight, d_min: f64, points: usize) -> Result<RadialWeight> {
    if !(d_min > 0.0 && d_min < weight.d_max()) {
        return Err(Error::Construction(format!(
            "d_min {d_min} must lie in (0, d_max)"
        )));
    }
    let ratio = (weight.d_max() / d_min).powf(1.0 / (points as f64 - 1.0));
    let mut samples = Vec::with_capacity(points);
    for i in 0..points {
        let d = if i + 1 == points {
            weight.d_max()
        } else {
            d_min * ratio.powi(i as i32)
        };
        samples.push((d, weight.eval(d)?));
    }
    RadialWeight::tabulated(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_eval() {
        let w = RadialWeight::constant(1.0, 1.0).unwrap();
        assert_eq!(w.eval(0.3).unwrap(), 1.0);
    }

    #[test]
    fn power_eval_hand_values() {
        let w = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        assert!((w.eval(0.25).unwrap() - 4.0).abs() < 1e-14);
        assert!((w.eval(1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eval_domain_errors() {
        let w = RadialWeight::constant(1.0, 1.0).unwrap();
        assert!(w.eval(0.0).is_err());
        assert!(w.eval(-0.5).is_err());
        assert!(w.eval(1.5).is_err());
    }

    #[test]
    fn first_primitive_closed_forms() {
        let c = RadialWeight::constant(1.0, 1.0).unwrap();
        assert!((c.integrate_first(0.05).unwrap() - 0.05).abs() < 1e-15);

        let p = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        assert!((p.integrate_first(0.25).unwrap() - 2.0).abs() < 1e-14);
        // int_0^{1/2} 2 s^{-1/2} ds = 2 sqrt(2)
        let expected = 2.0 * 2.0f64.sqrt();
        assert!((p.integrate_first(0.5).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn second_primitive_closed_forms() {
        let c = RadialWeight::constant(1.0, 1.0).unwrap();
        assert!((c.integrate_second(0.05).unwrap() - 0.00125).abs() < 1e-15);

        let p = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let expected = 8.0 / 3.0 * 0.25f64.powf(1.5);
        assert!((p.integrate_second(0.25).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn second_primitive_vanishes_linearly() {
        let p = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        for &r in &[1e-2, 1e-4, 1e-6] {
            let i2 = p.integrate_second(r).unwrap();
            assert!(i2 >= 0.0 && i2 <= r, "I2({r}) = {i2} not O(r)");
        }
    }

    #[test]
    fn tabulated_quadrature_matches_power_closed_form() {
        let exact = RadialWeight::power(2.0, 0.5, 0.5).unwrap();
        let tab = tabulate(&exact, 1e-6, 8000).unwrap();
        for &r in &[0.05, 0.25, 0.5] {
            let got = tab.integrate_first(r).unwrap();
            let want = exact.integrate_first(r).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "I1({r}): got {got}, want {want}"
            );
            let got2 = tab.integrate_second(r).unwrap();
            let want2 = exact.integrate_second(r).unwrap();
            assert!(
                ((got2 - want2) / want2).abs() < 1e-6,
                "I2({r}): got {got2}, want {want2}"
            );
        }
    }

    #[test]
    fn tabulated_power_extension_matches_singularity() {
        let exact = RadialWeight::power(2.0, 0.5, 0.5).unwrap();
        let tab = tabulate(&exact, 1e-3, 500).unwrap();
        // Below the first sample the power-law fit through the first two
        // samples reproduces the original power law exactly.
        let d = 1e-6;
        let got = tab.eval(d).unwrap();
        let want = exact.eval(d).unwrap();
        assert!(((got - want) / want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn increasing_tabulated_rejected() {
        let res = RadialWeight::tabulated(vec![(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)]);
        assert!(res.is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join("bpp_lab_weight_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.csv");
        std::fs::write(&path, "0.1, 3.0\n0.2, 2.0\n0.5, 1.0\n").unwrap();
        let w = RadialWeight::from_csv(&path).unwrap();
        assert_eq!(w.d_max(), 0.5);
        assert!((w.eval(0.35).unwrap() - 1.5).abs() < 1e-12);
    }
}
