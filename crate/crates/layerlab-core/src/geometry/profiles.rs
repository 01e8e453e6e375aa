//! Scalar profiles along the base coordinate: curvature, torsion and
//! their decaying/periodic variants used by the bundled scenarios.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile1d {
    Zero,
    Constant { value: f64 },
    /// `amplitude * sin(2 pi x / period)`
    SineWave { amplitude: f64, period: f64 },
    /// `amplitude * (1 - t^2)^3` on `|t| < 1`, `t = (x - center)/half_width`;
    /// compactly supported and C^2.
    CompactBump { amplitude: f64, center: f64, half_width: f64 },
    /// `amplitude * exp(-((x - center)/width)^2)`
    GaussianDecay { amplitude: f64, center: f64, width: f64 },
}

impl Profile1d {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile1d::Zero => 0.0,
            Profile1d::Constant { value } => *value,
            Profile1d::SineWave { amplitude, period } => {
                amplitude * (2.0 * std::f64::consts::PI * x / period).sin()
            }
            Profile1d::CompactBump { amplitude, center, half_width } => {
                let t = (x - center) / half_width;
                if t.abs() < 1.0 {
                    let w = 1.0 - t * t;
                    amplitude * w * w * w
                } else {
                    0.0
                }
            }
            Profile1d::GaussianDecay { amplitude, center, width } => {
                let t = (x - center) / width;
                amplitude * (-t * t).exp()
            }
        }
    }

    /// Largest |value| the profile can attain (used for tube-width checks).
    pub fn sup_abs(&self) -> f64 {
        match self {
            Profile1d::Zero => 0.0,
            Profile1d::Constant { value } => value.abs(),
            Profile1d::SineWave { amplitude, .. } => amplitude.abs(),
            Profile1d::CompactBump { amplitude, .. } => amplitude.abs(),
            Profile1d::GaussianDecay { amplitude, .. } => amplitude.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_c2() {
        let p = Profile1d::CompactBump { amplitude: 2.0, center: 1.0, half_width: 0.5 };
        assert_eq!(p.eval(0.49), 0.0);
        assert_eq!(p.eval(1.51), 0.0);
        assert!((p.eval(1.0) - 2.0).abs() < 1e-15);
        // value and first two derivatives vanish at the support edge
        let h = 1e-4;
        let d1 = (p.eval(1.5) - p.eval(1.5 - h)) / h;
        assert!(d1.abs() < 1e-5);
    }
}
