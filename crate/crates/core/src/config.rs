//! Every tunable threshold of the separation pipeline, with a canonical
//! serialized form so a stencil set can name the exact config that made it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DitherMatrix {
    /// The 8x8 recursive Bayer index matrix.
    #[default]
    Bayer8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Hue band (degrees, inclusive) treated as brown background.
    pub bg_hue_range: [f64; 2],
    pub bg_sat_max: f64,
    pub bg_val_min: f64,
    /// Saturation multiplier for non-background pixels.
    pub sat_gain: f64,
    /// Luma below this is solid black.
    pub theta_k: f64,
    /// Luma at or above this (when neutral) is paper white.
    pub theta_white: f64,
    /// Ink chroma below this counts as neutral grey.
    pub tau_neutral: f64,
    /// Winning CMY ink below this is dropped.
    pub tau_ink: f64,
    pub dither_matrix: DitherMatrix,
    pub fiducial_margin: u32,
    pub fiducial_side: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bg_hue_range: [20.0, 50.0],
            bg_sat_max: 0.5,
            bg_val_min: 0.5,
            sat_gain: 1.3,
            theta_k: 0.35,
            theta_white: 0.95,
            tau_neutral: 0.08,
            tau_ink: 0.10,
            dither_matrix: DitherMatrix::Bayer8,
            fiducial_margin: 8,
            fiducial_side: 6,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let fractions = [
            ("bg_sat_max", self.bg_sat_max),
            ("bg_val_min", self.bg_val_min),
            ("theta_k", self.theta_k),
            ("theta_white", self.theta_white),
            ("tau_neutral", self.tau_neutral),
            ("tau_ink", self.tau_ink),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if !(self.theta_k > 0.0 && self.theta_k < self.theta_white) {
            return bad(format!(
                "need 0 < theta_k < theta_white, got theta_k = {} and theta_white = {}",
                self.theta_k, self.theta_white
            ));
        }
        // NaN fails this comparison too
        if !(self.sat_gain >= 1.0 && self.sat_gain.is_finite()) {
            return bad(format!(
                "sat_gain = {} must be a finite value >= 1",
                self.sat_gain
            ));
        }
        let [lo, hi] = self.bg_hue_range;
        if !((0.0..=360.0).contains(&lo) && (0.0..=360.0).contains(&hi) && lo <= hi) {
            return bad(format!(
                "bg_hue_range [{lo}, {hi}] must be ordered degrees within [0, 360]"
            ));
        }
        if self.fiducial_side == 0 {
            return bad("fiducial_side must be at least 1".into());
        }
        Ok(())
    }

    /// TOML with fields in declaration order; equal configs give equal text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("pipeline config always serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overlays the keys of a JSON object onto this config and validates
    /// the result. Unknown keys are rejected.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self> {
        let serde_json::Value::Object(patch) = overrides else {
            if overrides.is_null() {
                return Ok(self.clone());
            }
            return Err(Error::Config("overrides must be a JSON object".into()));
        };
        let mut base = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let obj = base
            .as_object_mut()
            .expect("config serializes to an object");
        for (key, value) in patch {
            if !obj.contains_key(key) {
                return Err(Error::Config(format!("unknown config key {key:?}")));
            }
            obj.insert(key.clone(), value.clone());
        }
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn invariants_are_enforced() {
        let base = PipelineConfig::default();
        for patch in [
            json!({"theta_k": 0.0}),
            json!({"theta_k": 0.96}),
            json!({"theta_white": 1.2}),
            json!({"sat_gain": 0.9}),
            json!({"tau_ink": -0.1}),
            json!({"bg_hue_range": [50.0, 20.0]}),
            json!({"fiducial_side": 0}),
            json!({"no_such_key": 1}),
            json!({"theta_k": "high"}),
            json!([1, 2]),
        ] {
            assert!(
                matches!(base.with_overrides(&patch), Err(Error::Config(_))),
                "{patch} should be rejected"
            );
        }
    }

    #[test]
    fn overrides_apply() {
        let cfg = PipelineConfig::default()
            .with_overrides(&json!({"theta_k": 0.2, "fiducial_margin": 2}))
            .unwrap();
        assert_eq!(cfg.theta_k, 0.2);
        assert_eq!(cfg.fiducial_margin, 2);
        assert_eq!(cfg.theta_white, 0.95);
    }

    #[test]
    fn canonical_text_round_trips_and_hashes_stably() {
        let cfg = PipelineConfig::default();
        let text = cfg.canonical();
        assert!(text.contains("dither_matrix = \"bayer8\""));
        let back = PipelineConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);

        let other = PipelineConfig {
            tau_ink: 0.2,
            ..cfg.clone()
        };
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = PipelineConfig::from_toml("theta_k = 0.3\n").unwrap();
        assert_eq!(cfg.theta_k, 0.3);
        assert_eq!(cfg.sat_gain, 1.3);
        assert!(PipelineConfig::from_toml("bogus = 1\n").is_err());
    }
}
