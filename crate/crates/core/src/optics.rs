//! Three-layer (prism / metal / analyte) Kretschmann reflectance and the
//! lossless resonance condition linking resonance angle and analyte index.
//!
//! Angles are degrees at every public interface and radians internally.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical configuration of the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalStack {
    pub wavelength_nm: f64,
    pub n_prism: f64,
    pub eps_metal: Complex64,
    pub metal_thickness_nm: f64,
    pub theta_in_deg: f64,
}

impl OpticalStack {
    pub fn new(
        wavelength_nm: f64,
        n_prism: f64,
        eps_metal: Complex64,
        metal_thickness_nm: f64,
        theta_in_deg: f64,
    ) -> Result<Self> {
        let stack = OpticalStack {
            wavelength_nm,
            n_prism,
            eps_metal,
            metal_thickness_nm,
            theta_in_deg,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::invalid("wavelength_nm", "must be positive"));
        }
        if !(self.metal_thickness_nm > 0.0) {
            return Err(Error::invalid("metal_thickness_nm", "must be positive"));
        }
        if !(self.n_prism > 1.0) {
            return Err(Error::invalid("n_prism", "must exceed 1"));
        }
        if !(self.eps_metal.re < 0.0) || !(self.eps_metal.im >= 0.0) {
            return Err(Error::invalid(
                "eps_metal",
                "needs a negative real part and a non-negative imaginary part",
            ));
        }
        if !(self.theta_in_deg > 0.0 && self.theta_in_deg < 90.0) {
            return Err(Error::invalid("theta_in_deg", "must lie in (0, 90)"));
        }
        Ok(())
    }

    /// Same stack interrogated at another angle.
    pub fn at_angle(&self, theta_in_deg: f64) -> Self {
        OpticalStack {
            theta_in_deg,
            ..*self
        }
    }

    /// Re[ε_m], the quantity entering the lossless resonance condition.
    pub fn metal_permittivity_re(&self) -> f64 {
        self.eps_metal.re
    }

    /// Largest analyte index whose field is still evanescent at `theta_in_deg`.
    pub fn evanescent_limit(&self) -> f64 {
        self.n_prism * self.theta_in_deg.to_radians().sin()
    }
}

/// Refractive index of the dielectric above the metal film.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnalyteIndex(f64);

impl AnalyteIndex {
    pub fn new(n_a: f64) -> Result<Self> {
        if !(n_a >= 1.0) || !n_a.is_finite() {
            return Err(Error::invalid("n_a", format!("{n_a} is below 1")));
        }
        Ok(AnalyteIndex(n_a))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn permittivity(self) -> f64 {
        self.0 * self.0
    }
}

/// Normal wavevector component `k_z = k0 sqrt(eps - eps_in sin^2 θ)` on the
/// branch with Im ≥ 0 (and Re ≥ 0 when purely real), i.e. decaying fields.
fn normal_wavevector(eps: Complex64, eps_incident: Complex64, sin2: f64, k0: f64) -> Complex64 {
    let mut root = (eps - eps_incident * sin2).sqrt();
    if root.im < 0.0 || (root.im == 0.0 && root.re < 0.0) {
        root = -root;
    }
    root * k0
}

/// Reflection coefficient of a single film of thickness `thickness_nm`
/// between a semi-infinite incidence medium and a semi-infinite cover, for
/// p-polarized light. All three media are given by permittivity.
pub fn fresnel_three_layer(
    eps_incident: Complex64,
    eps_film: Complex64,
    eps_cover: Complex64,
    thickness_nm: f64,
    wavelength_nm: f64,
    theta_rad: f64,
) -> Complex64 {
    let k0 = 2.0 * PI / wavelength_nm;
    let sin2 = theta_rad.sin().powi(2);
    let eps = [eps_incident, eps_film, eps_cover];
    let q: Vec<Complex64> = eps
        .iter()
        .map(|&e| normal_wavevector(e, eps_incident, sin2, k0) / e)
        .collect();
    let interface = |u: usize, v: usize| (q[u] - q[v]) / (q[u] + q[v]);
    let r12 = interface(0, 1);
    let r23 = interface(1, 2);
    let k_film = q[1] * eps_film;
    let phase = (Complex64::i() * 2.0 * k_film * thickness_nm).exp();
    (phase * r23 + r12) / (phase * r23 * r12 + 1.0)
}

/// Reflection coefficient r_spp of the sensor for the given analyte.
pub fn reflection_coefficient(stack: &OpticalStack, analyte: AnalyteIndex) -> Complex64 {
    fresnel_three_layer(
        Complex64::from(stack.n_prism * stack.n_prism),
        stack.eps_metal,
        Complex64::from(analyte.permittivity()),
        stack.metal_thickness_nm,
        stack.wavelength_nm,
        stack.theta_in_deg.to_radians(),
    )
}

/// Like [`reflection_coefficient`], but rejects analytes that would carry a
/// propagating (non-evanescent) wave, where no surface plasmon is excited.
pub fn reflection_coefficient_checked(
    stack: &OpticalStack,
    analyte: AnalyteIndex,
) -> Result<Complex64> {
    stack.validate()?;
    let limit = stack.evanescent_limit();
    if analyte.value() >= limit {
        return Err(Error::PropagatingAnalyte {
            n_a: analyte.value(),
            limit,
        });
    }
    Ok(reflection_coefficient(stack, analyte))
}

/// Sensor transmittance T = |r_spp|^2.
pub fn transmittance(stack: &OpticalStack, analyte: AnalyteIndex) -> f64 {
    reflection_coefficient(stack, analyte).norm_sqr()
}

/// Resonance angle (degrees) from the lossless surface-plasmon matching
/// condition, `sin θ = sqrt(n_a² n_m² / (n_a² + n_m²)) / n_p` with
/// `n_m² = Re[ε_m]` (negative).
pub fn resonance_angle(n_a: f64, n_metal_sq: f64, n_prism: f64) -> Result<f64> {
    const OP: &str = "resonance_angle";
    if !(n_a > 0.0) || !(n_prism > 0.0) {
        return Err(Error::Domain {
            op: OP,
            value: n_a.min(n_prism),
            reason: "indices must be positive",
        });
    }
    if !(n_metal_sq < 0.0) {
        return Err(Error::Domain {
            op: OP,
            value: n_metal_sq,
            reason: "metal permittivity must have a negative real part",
        });
    }
    let na2 = n_a * n_a;
    let quotient = na2 * n_metal_sq / (na2 + n_metal_sq);
    if !(quotient > 0.0) || !quotient.is_finite() {
        return Err(Error::Domain {
            op: OP,
            value: quotient,
            reason: "surface-plasmon wavevector is not real",
        });
    }
    let sine = quotient.sqrt() / n_prism;
    if !(sine > 0.0 && sine < 1.0) {
        return Err(Error::Domain {
            op: OP,
            value: sine,
            reason: "arcsine argument must lie in (0, 1)",
        });
    }
    Ok(sine.asin().to_degrees())
}

/// Inverse of [`resonance_angle`]: analyte index whose resonance sits at
/// `theta_deg`.
pub fn index_from_angle(theta_deg: f64, n_metal_sq: f64, n_prism: f64) -> Result<f64> {
    const OP: &str = "index_from_angle";
    if !(n_metal_sq < 0.0) {
        return Err(Error::Domain {
            op: OP,
            value: n_metal_sq,
            reason: "metal permittivity must have a negative real part",
        });
    }
    let s2 = theta_deg.to_radians().sin().powi(2);
    let np2 = n_prism * n_prism;
    let denominator = n_metal_sq - np2 * s2;
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::Domain {
            op: OP,
            value: denominator,
            reason: "vanishing denominator n_m^2 - n_p^2 sin^2(theta)",
        });
    }
    let quotient = np2 * n_metal_sq * s2 / denominator;
    if !(quotient > 0.0) {
        return Err(Error::Domain {
            op: OP,
            value: quotient,
            reason: "sign-flipped quotient, no real index",
        });
    }
    Ok(quotient.sqrt())
}

/// Angle (degrees) minimizing the full lossy transmittance for a fixed
/// analyte, searched inside `[lo_deg, hi_deg]`.
pub fn reflectance_minimum_angle(
    stack: &OpticalStack,
    analyte: AnalyteIndex,
    lo_deg: f64,
    hi_deg: f64,
) -> f64 {
    let at = |theta: f64| transmittance(&stack.at_angle(theta), analyte);
    // Coarse scan brackets the global dip, golden section polishes it.
    let samples = 2000;
    let step = (hi_deg - lo_deg) / samples as f64;
    let best = (0..=samples)
        .map(|i| lo_deg + step * i as f64)
        .min_by(|a, b| at(*a).total_cmp(&at(*b)))
        .unwrap_or(lo_deg);
    let (mut a, mut b) = ((best - step).max(lo_deg), (best + step).min(hi_deg));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    while (b - a).abs() > 1e-10 {
        if at(c) < at(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
    }
    0.5 * (a + b)
}
