//! Closed-form scaling exponents for CLE gaskets and their empirical estimators.

mod annulus;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gasket::VolumeProfile;
use crate::stats::{median, ols};

pub use annulus::{
    alpha_cables, annulus_resistance, dyadic_ratios, estimate_alpha, estimate_alpha_with_cables, median_normalizer,
    sample_annuli, AlphaConfig, AlphaEstimate, AnnulusOutcome, AnnulusSample, EpsRule, ShellMetric, ALPHA_SLACK_BAND,
    RATIO_BAND,
};
pub use spectral::{estimate_spectral_dimension, log_spaced, SpectralConfig, SpectralEstimate};

/// Exponents for a given `κ′ ∈ (4, 8)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub kappa_prime: f64,
    /// gasket dimension
    pub d_cle: f64,
    /// double-point dimension of SLE
    pub d_double: f64,
    /// SLE curve dimension
    pub d_sle: f64,
}

pub fn theory_constants(kappa_prime: f64) -> Result<TheoryConstants> {
    let k = kappa_prime;
    if !(k > 4.0 && k < 8.0) {
        return Err(Error::arg(format!("κ′ must lie in (4, 8), got {k}")));
    }
    Ok(TheoryConstants {
        kappa_prime: k,
        d_cle: 2.0 - (8.0 - k) * (3.0 * k - 8.0) / (32.0 * k),
        d_double: 2.0 - (12.0 - k) * (4.0 + k) / (8.0 * k),
        d_sle: 1.0 + 2.0 / k,
    })
}

impl TheoryConstants {
    /// Does `[lo, hi]` meet the resistance-exponent bracket `[d_double, d_sle]`?
    pub fn bracket_meets(&self, lo: f64, hi: f64) -> bool {
        lo <= self.d_sle && hi >= self.d_double
    }

    /// Spectral dimension `2d/(d+α)` for a given resistance exponent.
    pub fn spectral_dimension(&self, alpha: f64) -> f64 {
        2.0 * self.d_cle / (self.d_cle + alpha)
    }
}

/// Least-squares fit of `log value = intercept + slope · log scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub name: String,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

impl ExponentFit {
    /// `slope ± k·stderr`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (self.slope - k * self.stderr, self.slope + k * self.stderr)
    }
}

pub fn fit_power_law(name: &str, scales: &[f64], values: &[f64]) -> Result<ExponentFit> {
    if scales.len() != values.len() {
        return Err(Error::arg("scales and values differ in length"));
    }
    if scales.len() < 3 {
        return Err(Error::arg(format!("a power-law fit needs >= 3 points, got {}", scales.len())));
    }
    if scales.iter().chain(values).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::arg("power-law fits need finite positive scales and values"));
    }
    let x: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let f = ols(&x, &y).ok_or_else(|| Error::arg("degenerate fit (all scales equal)"))?;
    Ok(ExponentFit {
        name: name.to_string(),
        scales: scales.to_vec(),
        values: values.to_vec(),
        slope: f.slope,
        intercept: f.intercept,
        stderr: f.slope_stderr,
        r_squared: f.r_squared,
    })
}

/// Volume-growth exponent from the median ball count per radius, pooling the
/// centers of all profiles. Only radii in `[r_lo, r_hi]` enter the fit.
pub fn fit_dimension(profiles: &[VolumeProfile], r_lo: u32, r_hi: u32) -> Result<ExponentFit> {
    let mut radii: Vec<u32> =
        profiles.iter().flat_map(|p| p.radii.iter().copied()).filter(|r| (r_lo..=r_hi).contains(r)).collect();
    radii.sort_unstable();
    radii.dedup();
    radii.retain(|&r| r > 0);
    if radii.len() < 3 {
        return Err(Error::arg(format!("need >= 3 positive radii in [{r_lo}, {r_hi}], found {}", radii.len())));
    }
    let mut meds = Vec::with_capacity(radii.len());
    for &r in &radii {
        let pooled: Vec<f64> = profiles
            .iter()
            .filter_map(|p| p.radii.iter().position(|&x| x == r).map(|k| (p, k)))
            .flat_map(|(p, k)| p.counts.iter().map(move |c| c[k] as f64))
            .collect();
        meds.push(median(&pooled).ok_or_else(|| Error::arg(format!("no ball counts at radius {r}")))?);
    }
    let scales: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
    fit_power_law("dimension", &scales, &meds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::BallMetric;

    #[test]
    fn kappa_six_values() {
        let c = theory_constants(6.0).unwrap();
        assert!((c.d_cle - 91.0 / 48.0).abs() < 1e-15);
        assert!((c.d_double - 0.75).abs() < 1e-15);
        assert!((c.d_sle - 4.0 / 3.0).abs() < 1e-15);
        let edge = theory_constants(8.0 - 1e-9).unwrap();
        assert!((edge.d_cle - 2.0).abs() < 1e-8);
        assert!(theory_constants(4.0).is_err());
        assert!(theory_constants(8.0).is_err());
        assert!(theory_constants(f64::NAN).is_err());
    }

    #[test]
    fn bracket_is_ordered_on_a_grid() {
        for k in 1..=100 {
            let c = theory_constants(4.0 + 4.0 * k as f64 / 101.0).unwrap();
            assert!(c.d_double < c.d_sle);
        }
    }

    fn synthetic(mut f: impl FnMut(f64) -> f64) -> VolumeProfile {
        let radii: Vec<u32> = vec![2, 4, 8, 16, 32, 64];
        VolumeProfile {
            counts: vec![radii.iter().map(|&r| f(r as f64).round() as u64).collect()],
            radii,
            centers: vec![crate::gasket::Axial::new(0, 0)],
            metric: BallMetric::Chemical,
        }
    }

    #[test]
    fn exact_square_law() {
        let f = fit_dimension(&[synthetic(|r| r * r)], 1, 100).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        let f = fit_power_law(
            "x",
            &[1.0, 2.0, 4.0, 8.0],
            &[3.0, 3.0 * 2f64.powf(0.7), 3.0 * 4f64.powf(0.7), 3.0 * 8f64.powf(0.7)],
        )
        .unwrap();
        assert!((f.slope - 0.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_law_and_degenerate_input() {
        let noise = [1.01, 0.99, 1.0, 1.01, 0.99, 1.0];
        let mut k = 0;
        let p = synthetic(|r| {
            k += 1;
            1000.0 * r.powf(1.5) * noise[k - 1]
        });
        let f = fit_dimension(std::slice::from_ref(&p), 1, 100).unwrap();
        assert!((1.45..=1.55).contains(&f.slope));
        assert!(fit_dimension(&[p], 1, 5).is_err());
        assert!(fit_dimension(&[], 1, 100).is_err());
    }
}
