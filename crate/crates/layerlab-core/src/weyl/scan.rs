//! Certification scan over a grid of spectral parameters.

use super::dual::weyl_quotient;
use super::packets::{build_singular_family, PacketParams};
use super::{WeylError, WeylThresholds};
use crate::cross_section::CrossSectionModes;
use crate::discretization::DiscreteForms;
use crate::spectral::EigOptions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanDecision {
    Certified,
    Rejected,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaVerdict {
    pub lambda: f64,
    pub wavenumber: f64,
    pub radii: Vec<f64>,
    pub quotients: Vec<f64>,
    pub cross_gram_max: f64,
    /// Fitted slope of `log q` against `log R`.
    pub slope: f64,
    /// Certification ceiling on the last quotient.
    pub ceiling: f64,
    /// Estimated distance to the computed spectrum, when available.
    pub eps_hat: Option<f64>,
    /// Rejection floor `floor_slack * eps / sqrt(lambda + eps + 1)`.
    pub floor: Option<f64>,
    /// Eigenvalues below `lambda`, when `lambda` is inside the computed range.
    pub count_below: Option<usize>,
    pub decision: ScanDecision,
}

/// Spectrum knowledge used for gap estimates: eigenvalues computed up to
/// `cap_value`; `complete` when a witness at or above the cap was found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub values: Vec<f64>,
    pub cap_value: f64,
    pub complete: bool,
}

impl SpectrumInfo {
    /// Effective upper end of the known range.
    pub fn known_up_to(&self) -> f64 {
        if self.complete {
            self.cap_value
        } else {
            self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub scenario: String,
    pub e1: f64,
    pub thresholds: WeylThresholds,
    pub spectrum: SpectrumInfo,
    pub grid_shape: Vec<usize>,
    pub h_max: f64,
    pub lambdas: Vec<LambdaVerdict>,
}

/// Pure decision rule; verdicts are reproducible from their stored fields.
pub fn decide(
    quotients: &[f64],
    radii: &[f64],
    lambda: f64,
    h_max: f64,
    eps_hat: Option<f64>,
    t: &WeylThresholds,
) -> (ScanDecision, f64, f64, Option<f64>) {
    let slope = fit_slope(radii, quotients);
    let r_last = radii.last().copied().unwrap_or(1.0);
    let ceiling = t.c_disc * (h_max + 1.0 / r_last);
    let q_last = quotients.last().copied().unwrap_or(f64::INFINITY);
    let floor = eps_hat
        .map(|e| t.floor_slack * e / (lambda + e + 1.0).max(f64::MIN_POSITIVE).sqrt());
    let certified = slope <= t.slope_max && q_last <= ceiling;
    let decision = if certified {
        ScanDecision::Certified
    } else if let Some(f) = floor {
        let min_q = quotients.iter().copied().fold(f64::INFINITY, f64::min);
        if min_q >= f {
            ScanDecision::Rejected
        } else {
            ScanDecision::Inconclusive
        }
    } else {
        ScanDecision::Inconclusive
    };
    (decision, slope, ceiling, floor)
}

/// Least-squares slope of `ln q` against `ln R`.
pub fn fit_slope(radii: &[f64], quotients: &[f64]) -> f64 {
    let n = radii.len().min(quotients.len());
    if n < 2 {
        return 0.0;
    }
    let xs: Vec<f64> = radii[..n].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = quotients[..n]
        .iter()
        .map(|q| q.max(1e-300).ln())
        .collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        num += (xs[i] - xm) * (ys[i] - ym);
        den += (xs[i] - xm) * (xs[i] - xm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Run the certification scan, computing the low spectrum first for the
/// gap estimates.
pub fn certify_scan(
    forms: &DiscreteForms,
    modes: &CrossSectionModes,
    lambda_grid: &[f64],
    thresholds: &WeylThresholds,
) -> Result<ScanReport, WeylError> {
    let cap_value = modes.e1() + thresholds.eig_margin;
    let mut opts = EigOptions::with_tol(thresholds.eig_tol);
    opts.max_iter = 20_000;
    let below = forms.spectrum_below(cap_value, thresholds.eig_cap, &opts)?;
    let spectrum = SpectrumInfo {
        values: below.result.values,
        cap_value,
        complete: below.complete,
    };
    certify_scan_with_spectrum(forms, modes, lambda_grid, thresholds, spectrum)
}

/// Scan with precomputed spectrum knowledge (e.g. from a warm-started
/// solve). Lambda points are processed in parallel and reported in input
/// order.
pub fn certify_scan_with_spectrum(
    forms: &DiscreteForms,
    modes: &CrossSectionModes,
    lambda_grid: &[f64],
    thresholds: &WeylThresholds,
    spectrum: SpectrumInfo,
) -> Result<ScanReport, WeylError> {
    if thresholds.n_members < 3 {
        return Err(WeylError::InvalidInput(
            "certification needs at least 3 members for the slope fit".into(),
        ));
    }
    let params = PacketParams::from_thresholds(
        thresholds,
        fiber_width(modes),
        forms.grid.base.axes[0].spacing,
    );
    let h_max = forms.grid.max_spacing();
    let known_up_to = spectrum.known_up_to();

    let verdicts: Result<Vec<LambdaVerdict>, WeylError> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let family =
                build_singular_family(forms, modes, lambda, thresholds.n_members, &params)?;
            let rep = weyl_quotient(forms, &family, lambda, thresholds.cg_tol)?;
            let eps_hat = if lambda <= known_up_to {
                let dmin = spectrum
                    .values
                    .iter()
                    .map(|v| (v - lambda).abs())
                    .fold(f64::INFINITY, f64::min);
                Some(dmin.min((known_up_to - lambda).max(0.0)))
            } else {
                None
            };
            let (decision, slope, ceiling, floor) = decide(
                &rep.quotients,
                &family.radii,
                lambda,
                h_max,
                eps_hat,
                thresholds,
            );
            let count_below = (lambda <= known_up_to)
                .then(|| spectrum.values.iter().filter(|&&v| v < lambda).count());
            Ok(LambdaVerdict {
                lambda,
                wavenumber: family.wavenumber,
                radii: family.radii.clone(),
                quotients: rep.quotients,
                cross_gram_max: rep.cross_gram_max,
                slope,
                ceiling,
                eps_hat,
                floor,
                count_below,
                decision,
            })
        })
        .collect();

    Ok(ScanReport {
        scenario: String::new(),
        e1: modes.e1(),
        thresholds: thresholds.clone(),
        spectrum,
        grid_shape: forms
            .grid
            .base
            .shape()
            .into_iter()
            .chain(forms.grid.fiber.shape())
            .collect(),
        h_max,
        lambdas: verdicts?,
    })
}

fn fiber_width(modes: &CrossSectionModes) -> f64 {
    modes.grid.width()
}
