//! Sonar-equation kernel: source level with a speed term, hybrid
//! spherical / mode-stripping transmission loss with absorption, received
//! level over ambient noise, propagation radius and incoherent summation.
//!
//! All levels are dB (re 1 µPa, or re 1 µPa at 1 m for source levels).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Received levels are evaluated no closer than this to the source, the
/// reference distance of source levels.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Frequencies the model is calibrated for, in Hz.
pub const STANDARD_FREQUENCIES: [u32; 4] = [63, 125, 400, 4000];

/// Per-frequency calibration of the propagation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyParams {
    pub frequency_hz: u32,
    /// Source level of the 835 Hp reference boat when not trawling.
    pub anchor_sl0_db: f64,
    /// Source-level increment while fishing.
    pub fishing_inc_db: f64,
    /// Transition range as a multiple of water depth.
    pub trans_mult: f64,
    /// Absorption in dB per meter.
    pub alpha_db_per_m: f64,
}

impl FrequencyParams {
    /// Built-in calibration for one of the standard frequencies.
    pub fn standard(frequency_hz: u32) -> Result<Self> {
        let (anchor_sl0_db, fishing_inc_db, trans_mult, alpha_db_per_m) = match frequency_hz {
            63 => (136.0, 5.0, 10.0, 1e-6),
            125 => (133.0, 10.0, 4.0, 1e-6),
            400 => (126.0, 15.0, 4.0, 1e-5),
            4000 => (123.0, 15.0, 2.0, 1e-4),
            other => return Err(Error::UnknownFrequency(other)),
        };
        Ok(Self {
            frequency_hz,
            anchor_sl0_db,
            fishing_inc_db,
            trans_mult,
            alpha_db_per_m,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.anchor_sl0_db,
            self.fishing_inc_db,
            self.trans_mult,
            self.alpha_db_per_m,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.trans_mult <= 0.0 || self.alpha_db_per_m < 0.0 || self.fishing_inc_db < 0.0 {
            return Err(Error::InvalidInput(format!(
                "invalid parameters for {} Hz: {self:?}",
                self.frequency_hz
            )));
        }
        Ok(())
    }

    /// Transition range for a given water depth.
    pub fn transition_range(&self, depth_m: f64) -> f64 {
        depth_m * self.trans_mult
    }
}

/// The set of configured frequencies and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    params: Vec<FrequencyParams>,
}

impl FrequencyTable {
    pub fn new(mut params: Vec<FrequencyParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Empty("frequency table"));
        }
        for p in &params {
            p.validate()?;
        }
        params.sort_by_key(|p| p.frequency_hz);
        if params.windows(2).any(|w| w[0].frequency_hz == w[1].frequency_hz) {
            return Err(Error::InvalidInput("duplicate frequency".into()));
        }
        Ok(Self { params })
    }

    pub fn standard() -> Self {
        Self {
            params: STANDARD_FREQUENCIES
                .iter()
                .map(|f| FrequencyParams::standard(*f).expect("standard frequency"))
                .collect(),
        }
    }

    pub fn get(&self, frequency_hz: u32) -> Result<&FrequencyParams> {
        self.params
            .iter()
            .find(|p| p.frequency_hz == frequency_hz)
            .ok_or(Error::UnknownFrequency(frequency_hz))
    }

    pub fn frequencies(&self) -> impl Iterator<Item = u32> + '_ {
        self.params.iter().map(|p| p.frequency_hz)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FrequencyParams> + '_ {
        self.params.iter()
    }
}

impl Default for FrequencyTable {
    fn default() -> Self {
        Self::standard()
    }
}

/// Speed dependence of the source level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoundContext {
    /// Reference speed in knots; no speed term at or below it.
    pub v0_kn: f64,
    /// dB per decade of speed above `v0_kn`.
    pub speed_coeff_db: f64,
}

impl Default for SoundContext {
    fn default() -> Self {
        Self {
            v0_kn: 3.9,
            speed_coeff_db: 15.39,
        }
    }
}

pub fn source_level(
    sl0_db: f64,
    speed_kn: f64,
    fishing: bool,
    fp: &FrequencyParams,
    ctx: &SoundContext,
) -> f64 {
    let speed_term = if speed_kn > ctx.v0_kn {
        ctx.speed_coeff_db * (speed_kn / ctx.v0_kn).log10()
    } else {
        0.0
    };
    let fishing_term = if fishing { fp.fishing_inc_db } else { 0.0 };
    sl0_db + speed_term + fishing_term
}

/// Geometric spreading loss: spherical up to `r_trans`, mode stripping
/// beyond it. Continuous at `r_trans`.
#[inline]
pub fn spreading_loss(dist_m: f64, r_trans_m: f64) -> f64 {
    if dist_m <= r_trans_m {
        20.0 * dist_m.log10()
    } else {
        15.0 * dist_m.log10() + 5.0 * r_trans_m.log10()
    }
}

/// Total transmission loss including absorption.
pub fn transmission_loss(dist_m: f64, r_trans_m: f64, alpha_db_per_m: f64) -> Result<f64> {
    if !(dist_m > 0.0) {
        return Err(Error::NonPositiveDistance(dist_m));
    }
    if !(r_trans_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "transition range must be positive, got {r_trans_m}"
        )));
    }
    Ok(spreading_loss(dist_m, r_trans_m) + alpha_db_per_m * dist_m)
}

/// Received level in excess of ambient noise.
pub fn received_level(
    sl_db: f64,
    dist_m: f64,
    r_trans_m: f64,
    alpha_db_per_m: f64,
    ambient_db: f64,
) -> Result<f64> {
    Ok(sl_db - transmission_loss(dist_m, r_trans_m, alpha_db_per_m)? - ambient_db)
}

/// Range at which the mode-stripping branch without absorption brings the
/// source down to the ambient level. Ignoring absorption makes this an
/// overestimate of the audible range.
pub fn propagation_radius(sl_db: f64, r_trans_m: f64, ambient_db: f64) -> f64 {
    10f64.powf((sl_db - 5.0 * r_trans_m.log10() - ambient_db) / 15.0)
}

#[inline]
pub fn db_to_intensity(level_db: f64) -> f64 {
    10f64.powf(level_db / 10.0)
}

#[inline]
pub fn intensity_to_db(intensity: f64) -> f64 {
    10.0 * intensity.log10()
}

/// Incoherent sum of levels: intensities add.
pub fn sum_levels(levels: &[f64]) -> Result<f64> {
    if levels.is_empty() {
        return Err(Error::Empty("level sequence"));
    }
    Ok(intensity_to_db(levels.iter().map(|l| db_to_intensity(*l)).sum()))
}
