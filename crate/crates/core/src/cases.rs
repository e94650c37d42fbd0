//! Built-in case studies: published SPR binding experiments re-expressed
//! as an optical stack, an angular sensorgram and the reported rates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{self, KineticParameters, ReconstructedPoint, SensorgramShape, TimeGrid};
use crate::optics::{self, OpticalStack};

pub const CASE_NAMES: [&str; 2] = ["kausaite2007", "lahiri1999"];

/// Refractive index of the running buffer at t = 0.
pub const BUFFER_INDEX: f64 = 1.3385;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub name: String,
    pub stack: OpticalStack,
    /// Resonance-angle sensorgram in degrees.
    pub angular: SensorgramShape,
    pub kinetics: KineticParameters,
    pub grid: TimeGrid,
    pub buffer_index: f64,
    /// Fit the linearized transmittance instead of the raw one.
    pub linearize: bool,
    pub default_nu: u64,
}

/// Noise-free transmittance sensorgram of a case study.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealSensorgram {
    pub points: Vec<ReconstructedPoint>,
    /// Linearized transmittance on the same grid.
    pub linearized: Vec<(f64, f64)>,
    /// The signal the estimator sees: linearized or raw transmittance.
    pub signal: Vec<(f64, f64)>,
    /// Halfway between the buffer level and the level at the switch time.
    pub t_mid: f64,
}

impl CaseStudy {
    /// Assembles a case from its stack, rates and angular plateau; the
    /// angular baseline is the resonance angle of the buffer.
    pub fn from_parts(
        name: impl Into<String>,
        stack: OpticalStack,
        kinetics: KineticParameters,
        amplitude_deg: f64,
        grid: TimeGrid,
        linearize: bool,
        default_nu: u64,
    ) -> Result<Self> {
        stack.validate()?;
        kinetics.validate()?;
        grid.validate()?;
        let theta0 =
            optics::resonance_angle(BUFFER_INDEX, stack.metal_permittivity_re(), stack.n_prism)?;
        let angular = SensorgramShape::new(
            theta0,
            amplitude_deg,
            kinetics.k_s(),
            kinetics.k_d,
            kinetics.tau_s,
        )?;
        if default_nu == 0 {
            return Err(Error::invalid("nu", "must be at least 1"));
        }
        Ok(CaseStudy {
            name: name.into(),
            stack,
            angular,
            kinetics,
            grid,
            buffer_index: BUFFER_INDEX,
            linearize,
            default_nu,
        })
    }

    pub fn ideal(&self) -> Result<IdealSensorgram> {
        let points =
            kinetics::reconstruct_transmittance_sensorgram(&self.angular, &self.stack, &self.grid)?;
        let raw: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.transmittance)).collect();
        let trace: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.n_a)).collect();
        let linearized = kinetics::linearize_sensorgram(&raw, &trace, self.kinetics.tau_s)?;
        let times: Vec<f64> = raw.iter().map(|p| p.0).collect();
        let at_tau = kinetics::switch_index(&times, self.kinetics.tau_s)?;
        let t_mid = 0.5 * (raw[0].1 + raw[at_tau].1);
        let signal = if self.linearize {
            linearized.clone()
        } else {
            raw
        };
        Ok(IdealSensorgram {
            points,
            linearized,
            signal,
            t_mid,
        })
    }
}

fn kausaite2007() -> Result<CaseStudy> {
    CaseStudy::from_parts(
        "kausaite2007",
        OpticalStack::new(670.0, 1.5107, Complex64::new(-14.358, 1.044), 50.0, 70.12)?,
        KineticParameters::new(9.36e3, 7.85e-3, 274e-9, 1100.0)?,
        0.8,
        TimeGrid::new(0.0, 2200.0, 10.0)?,
        true,
        100,
    )
}

fn lahiri1999() -> Result<CaseStudy> {
    CaseStudy::from_parts(
        "lahiri1999",
        OpticalStack::new(760.0, 1.523, Complex64::new(-20.913, 1.2923), 38.0, 66.21)?,
        KineticParameters::new(3.8e-3, 15e-3, 2.1, 300.0)?,
        0.0291,
        TimeGrid::new(0.0, 1000.0, 5.0)?,
        false,
        100_000,
    )
}

pub fn resolve_case(name: &str) -> Result<CaseStudy> {
    match name {
        "kausaite2007" => kausaite2007(),
        "lahiri1999" => lahiri1999(),
        _ => Err(Error::UnknownCase {
            name: name.to_owned(),
            available: CASE_NAMES.join(", "),
        }),
    }
}
