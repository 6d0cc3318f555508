use serde::{Deserialize, Serialize};

use super::SceneError;

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_MIC_SPACING_CM: f64 = 4.0;
pub const DEFAULT_REVERB_TIME_S: f64 = 0.36;
/// Input SNR conditions, dB.
pub const SNR_GRID_DB: [f64; 5] = [-9.0, -6.0, -3.0, 0.0, 3.0];

/// Source placement relative to the two-microphone array.
///
/// Azimuth is measured from broadside; positive angles turn toward microphone
/// 1, so channel 2 hears the direct path later.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePosition {
    pub position_id: usize,
    pub azimuth_deg: f64,
    pub distance_cm: f64,
}

impl SourcePosition {
    pub fn new(position_id: usize, azimuth_deg: f64, distance_cm: f64) -> Result<Self, SceneError> {
        let p = Self {
            position_id,
            azimuth_deg,
            distance_cm,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.distance_cm > 0.0) || !self.azimuth_deg.is_finite() || !self.distance_cm.is_finite() {
            return Err(SceneError::InvalidGeometry(format!(
                "position {}: distance must be positive and finite",
                self.position_id
            )));
        }
        Ok(())
    }

    /// The twelve measured loudspeaker placements: three directions times three
    /// distances, then three far-off-axis positions at 90 cm.
    pub fn presets() -> Vec<SourcePosition> {
        let mut out = Vec::with_capacity(12);
        for distance in [70.0, 100.0, 130.0] {
            for azimuth in [-30.0, 0.0, 30.0] {
                out.push(SourcePosition {
                    position_id: out.len(),
                    azimuth_deg: azimuth,
                    distance_cm: distance,
                });
            }
        }
        for azimuth in [90.0, -75.0, -105.0] {
            out.push(SourcePosition {
                position_id: out.len(),
                azimuth_deg: azimuth,
                distance_cm: 90.0,
            });
        }
        out
    }

    pub fn preset(position_id: usize) -> Result<SourcePosition, SceneError> {
        Self::presets()
            .into_iter()
            .nth(position_id)
            .ok_or(SceneError::UnknownPosition(position_id))
    }

    /// Arrival-time difference, channel 2 minus channel 1, in seconds.
    pub fn inter_channel_delay_s(&self, mic_spacing_cm: f64) -> f64 {
        mic_spacing_cm / 100.0 * self.azimuth_deg.to_radians().sin() / SPEED_OF_SOUND
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub mic_spacing_cm: f64,
    pub reverb_time_s: f64,
    pub snr_db: f64,
    pub position: SourcePosition,
    pub seed: u64,
}

impl SceneConfig {
    pub fn new(position: SourcePosition, snr_db: f64, seed: u64) -> Self {
        Self {
            mic_spacing_cm: DEFAULT_MIC_SPACING_CM,
            reverb_time_s: DEFAULT_REVERB_TIME_S,
            snr_db,
            position,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.position.validate()?;
        if !(self.mic_spacing_cm > 0.0) {
            return Err(SceneError::InvalidGeometry("mic spacing must be positive".into()));
        }
        if !(self.reverb_time_s >= 0.0) {
            return Err(SceneError::InvalidGeometry("reverb time must be >= 0".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(SceneError::InvalidSnr(self.snr_db));
        }
        Ok(())
    }

    /// Whether the SNR sits on the default grid.
    pub fn on_default_grid(&self) -> bool {
        SNR_GRID_DB.iter().any(|g| (g - self.snr_db).abs() < 1e-9)
    }
}
