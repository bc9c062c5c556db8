//! Physical constants and the validated experiment configuration.
//!
//! Everything here is SI. The only unit conversion in the crate is the
//! atomic-mass-unit entry of the particle mass, which is converted to
//! kilograms once when a configuration is built.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Newtonian constant of gravitation, m³·kg⁻¹·s⁻² (CODATA 2018).
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674_30e-11;
/// Reduced Planck constant, J·s (exact since the 2019 SI redefinition).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Unified atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Density of tungsten, kg·m⁻³.
pub const TUNGSTEN_DENSITY: f64 = 19_300.0;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(#[from] ValidationError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// A violated configuration invariant, named by what was checked.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{invariant} ({detail})")]
pub struct ValidationError {
    pub invariant: &'static str,
    pub detail: String,
}

impl ValidationError {
    fn new(invariant: &'static str, detail: impl Into<String>) -> Self {
        Self { invariant, detail: detail.into() }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum DomainError {
    #[error("source density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("source mass must be non-negative, got {0}")]
    NegativeMass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub gravitational_constant: f64,
    pub hbar: f64,
    pub atomic_mass_unit: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { gravitational_constant: GRAVITATIONAL_CONSTANT, hbar: HBAR, atomic_mass_unit: ATOMIC_MASS_UNIT }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (name, v) in [
            ("gravitational constant", self.gravitational_constant),
            ("hbar", self.hbar),
            ("atomic mass unit", self.atomic_mass_unit),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ValidationError::new("physical constants must be positive", format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Radius of a homogeneous sphere of mass `mass` and density `density`.
pub fn ball_radius(mass: f64, density: f64) -> Result<f64, DomainError> {
    if !(density > 0.0) {
        return Err(DomainError::NonPositiveDensity(density));
    }
    if !(mass >= 0.0) {
        return Err(DomainError::NegativeMass(mass));
    }
    Ok((3.0 * mass / (4.0 * PI * density)).cbrt())
}

/// Which source mass (and distance) an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

/// On-disk key schema. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    particle_mass_amu: f64,
    arm_separation_m: f64,
    mass_left_kg: f64,
    mass_right_kg: f64,
    dist_left_m: f64,
    dist_right_m: f64,
    source_density_kg_m3: f64,
    hold_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gravitational_constant_si: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hbar_si: Option<f64>,
}

/// Geometry and masses of the two-ball interferometer.
///
/// The left ball (`mass_left`) sits at `x = -dist_left`, the right ball at
/// `x = +dist_right`; the two arms are held at `x = ∓arm_separation/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub particle_mass_amu: f64,
    pub arm_separation: f64,
    pub mass_left: f64,
    pub mass_right: f64,
    pub dist_left: f64,
    pub dist_right: f64,
    pub source_density: f64,
    pub hold_time: f64,
    pub constants: PhysicalConstants,
    overridden_g: bool,
    overridden_hbar: bool,
}

impl ExperimentConfig {
    /// Builds and validates a configuration with default constants.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        particle_mass_amu: f64,
        arm_separation: f64,
        mass_left: f64,
        mass_right: f64,
        dist_left: f64,
        dist_right: f64,
        source_density: f64,
        hold_time: f64,
    ) -> Result<Self, ValidationError> {
        let config = Self {
            particle_mass_amu,
            arm_separation,
            mass_left,
            mass_right,
            dist_left,
            dist_right,
            source_density,
            hold_time,
            constants: PhysicalConstants::default(),
            overridden_g: false,
            overridden_hbar: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// The caesium / tungsten geometry with `d1 = Δx/2 + R1 + 1 mm` and the
    /// right ball placed on the classical null, `d2 = d1·√(M2/M1)`.
    pub fn reference() -> Self {
        let arm = 0.1;
        let (m1, m2) = (0.020, 0.040);
        let r1 = ball_radius(m1, TUNGSTEN_DENSITY).expect("positive density");
        let d1 = arm / 2.0 + r1 + 0.001;
        let d2 = d1 * (m2 / m1).sqrt();
        Self::new(133.0, arm, m1, m2, d1, d2, TUNGSTEN_DENSITY, 10.0).expect("reference geometry is feasible")
    }

    /// Same as [`ExperimentConfig::reference`] but with the rounded
    /// `d1 = 5.7 cm` quoted for the figure.
    pub fn reference_rounded() -> Self {
        let mut config = Self::reference();
        config.dist_left = 0.057;
        config.dist_right = 0.057 * (config.mass_right / config.mass_left).sqrt();
        config.validate().expect("rounded reference geometry is feasible");
        config
    }

    pub fn with_constants(mut self, constants: PhysicalConstants) -> Result<Self, ValidationError> {
        let defaults = PhysicalConstants::default();
        self.overridden_g = constants.gravitational_constant != defaults.gravitational_constant;
        self.overridden_hbar = constants.hbar != defaults.hbar;
        self.constants = constants;
        self.validate()?;
        Ok(self)
    }

    /// Particle mass in kilograms.
    pub fn particle_mass(&self) -> f64 {
        self.particle_mass_amu * self.constants.atomic_mass_unit
    }

    pub fn mass(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.mass_left,
            Side::Right => self.mass_right,
        }
    }

    pub fn distance(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.dist_left,
            Side::Right => self.dist_right,
        }
    }

    pub fn ball_radius(&self, side: Side) -> f64 {
        ball_radius(self.mass(side), self.source_density).unwrap_or(f64::NAN)
    }

    /// Copy of the configuration with one distance replaced, re-validated.
    pub fn with_distance(&self, side: Side, distance: f64) -> Result<Self, ValidationError> {
        let mut config = self.clone();
        match side {
            Side::Left => config.dist_left = distance,
            Side::Right => config.dist_right = distance,
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.constants.validate()?;
        let finite = [
            ("particle_mass_amu", self.particle_mass_amu),
            ("arm_separation_m", self.arm_separation),
            ("mass_left_kg", self.mass_left),
            ("mass_right_kg", self.mass_right),
            ("dist_left_m", self.dist_left),
            ("dist_right_m", self.dist_right),
            ("source_density_kg_m3", self.source_density),
            ("hold_time_s", self.hold_time),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(ValidationError::new("values must be finite", format!("{key} = {v}")));
            }
        }
        if !(self.particle_mass_amu > 0.0) {
            return Err(ValidationError::new(
                "particle mass must be positive",
                format!("particle_mass_amu = {}", self.particle_mass_amu),
            ));
        }
        if !(self.arm_separation > 0.0) {
            return Err(ValidationError::new(
                "arm separation must be positive",
                format!("arm_separation_m = {}", self.arm_separation),
            ));
        }
        if self.mass_left < 0.0 || self.mass_right < 0.0 {
            return Err(ValidationError::new(
                "source masses must be non-negative",
                format!("mass_left_kg = {}, mass_right_kg = {}", self.mass_left, self.mass_right),
            ));
        }
        if !(self.source_density > 0.0) {
            return Err(ValidationError::new(
                "source density must be positive",
                format!("source_density_kg_m3 = {}", self.source_density),
            ));
        }
        if self.hold_time < 0.0 {
            return Err(ValidationError::new(
                "hold time must be non-negative",
                format!("hold_time_s = {}", self.hold_time),
            ));
        }
        let half = self.arm_separation / 2.0;
        for side in [Side::Left, Side::Right] {
            let d = self.distance(side);
            if !(d > half) {
                return Err(ValidationError::new(
                    "source distance must exceed half the arm separation",
                    format!("{side} distance {d} m <= {half} m"),
                ));
            }
            let radius = self.ball_radius(side);
            if !(d - half > radius) {
                return Err(ValidationError::new(
                    "source ball must not overlap the arm",
                    format!("{side} gap {} m <= radius {radius} m", d - half),
                ));
            }
        }
        Ok(())
    }

    fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            particle_mass_amu: self.particle_mass_amu,
            arm_separation_m: self.arm_separation,
            mass_left_kg: self.mass_left,
            mass_right_kg: self.mass_right,
            dist_left_m: self.dist_left,
            dist_right_m: self.dist_right,
            source_density_kg_m3: self.source_density,
            hold_time_s: self.hold_time,
            gravitational_constant_si: self.overridden_g.then_some(self.constants.gravitational_constant),
            hbar_si: self.overridden_hbar.then_some(self.constants.hbar),
        }
    }

    /// Serializes to the same flat key/value document [`load_config`] reads.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_document()).expect("flat document of floats serializes")
    }
}

/// Parses and validates a configuration document.
pub fn load_config(source: &str) -> Result<ExperimentConfig, ConfigError> {
    let doc: ConfigDocument = toml::from_str(source).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
    let defaults = PhysicalConstants::default();
    let constants = PhysicalConstants {
        gravitational_constant: doc.gravitational_constant_si.unwrap_or(defaults.gravitational_constant),
        hbar: doc.hbar_si.unwrap_or(defaults.hbar),
        ..defaults
    };
    let config = ExperimentConfig {
        particle_mass_amu: doc.particle_mass_amu,
        arm_separation: doc.arm_separation_m,
        mass_left: doc.mass_left_kg,
        mass_right: doc.mass_right_kg,
        dist_left: doc.dist_left_m,
        dist_right: doc.dist_right_m,
        source_density: doc.source_density_kg_m3,
        hold_time: doc.hold_time_s,
        constants,
        overridden_g: doc.gravitational_constant_si.is_some(),
        overridden_hbar: doc.hbar_si.is_some(),
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    load_config(&source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIGURE_DOC: &str = r#"
particle_mass_amu = 133.0
arm_separation_m = 0.1
mass_left_kg = 0.020
mass_right_kg = 0.040
dist_left_m = 0.057
dist_right_m = 0.081
source_density_kg_m3 = 19300.0
hold_time_s = 10.0
"#;

    #[test]
    fn figure_document_is_valid() {
        let config = load_config(FIGURE_DOC).unwrap();
        assert_eq!(config.particle_mass_amu, 133.0);
        assert!((config.particle_mass() - 133.0 * ATOMIC_MASS_UNIT).abs() < 1e-40);
        assert_eq!(config.dist_right, 0.081);
    }

    #[test]
    fn overlapping_ball_is_rejected() {
        let doc = FIGURE_DOC.replace("dist_left_m = 0.057", "dist_left_m = 0.04");
        match load_config(&doc) {
            Err(ConfigError::Invalid(e)) => {
                assert!(e.invariant.contains("exceed half") || e.invariant.contains("overlap"))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        // inside the arm span but touching the ball
        let doc = FIGURE_DOC.replace("dist_left_m = 0.057", "dist_left_m = 0.055");
        match load_config(&doc) {
            Err(ConfigError::Invalid(e)) => assert!(e.invariant.contains("overlap")),
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn missing_key_is_named() {
        let doc = FIGURE_DOC.replace("mass_right_kg = 0.040\n", "");
        match load_config(&doc) {
            Err(ConfigError::Parse(msg)) => assert!(msg.contains("mass_right_kg"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let doc = format!("{FIGURE_DOC}colour = 3.0\n");
        assert!(matches!(load_config(&doc), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(load_config("particle_mass_amu = = 3"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn constant_override_round_trips() {
        let doc = format!("{FIGURE_DOC}hbar_si = 2.0e-34\n");
        let config = load_config(&doc).unwrap();
        assert_eq!(config.constants.hbar, 2.0e-34);
        assert_eq!(config.constants.gravitational_constant, GRAVITATIONAL_CONSTANT);
        assert_eq!(load_config(&config.to_toml()).unwrap(), config);
        assert!(!ExperimentConfig::reference().to_toml().contains("hbar_si"));
    }

    #[test]
    fn tungsten_radii() {
        let r1 = ball_radius(0.020, TUNGSTEN_DENSITY).unwrap();
        let r2 = ball_radius(0.040, TUNGSTEN_DENSITY).unwrap();
        assert!((r1 - 6.3e-3).abs() < 0.1e-3, "{r1}");
        assert!((r2 - 7.9e-3).abs() < 0.1e-3, "{r2}");
        assert_eq!(ball_radius(0.0, 1234.0).unwrap(), 0.0);
    }

    #[test]
    fn bad_density_is_a_domain_error() {
        assert_eq!(ball_radius(1.0, 0.0), Err(DomainError::NonPositiveDensity(0.0)));
        assert_eq!(ball_radius(1.0, -2.0), Err(DomainError::NonPositiveDensity(-2.0)));
    }

    #[test]
    fn reference_geometry() {
        let config = ExperimentConfig::reference();
        assert!((config.dist_left - 0.0573).abs() < 1e-4);
        assert!((config.dist_right - 0.081).abs() < 1e-3);
        let rounded = ExperimentConfig::reference_rounded();
        assert_eq!(rounded.dist_left, 0.057);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            1.0..300.0f64,
            0.01..0.5f64,
            0.0..0.5f64,
            0.0..0.5f64,
            0.001..0.2f64,
            0.001..0.2f64,
            1000.0..25_000.0f64,
            0.0..100.0f64,
        )
            .prop_map(|(amu, arm, m1, m2, g1, g2, rho, t)| {
                let r1 = ball_radius(m1, rho).unwrap();
                let r2 = ball_radius(m2, rho).unwrap();
                ExperimentConfig::new(amu, arm, m1, m2, arm / 2.0 + r1 + g1, arm / 2.0 + r2 + g2, rho, t).unwrap()
            })
    }

    proptest! {
        #[test]
        fn serialize_then_load_is_identity(config in arb_config()) {
            let text = config.to_toml();
            prop_assert_eq!(load_config(&text).unwrap(), config);
        }

        #[test]
        fn radius_is_monotone(m_a in 0.0..10.0f64, m_b in 0.0..10.0f64, rho_a in 1.0..3e4f64, rho_b in 1.0..3e4f64) {
            let (lo, hi) = if m_a <= m_b { (m_a, m_b) } else { (m_b, m_a) };
            prop_assert!(ball_radius(lo, rho_a).unwrap() <= ball_radius(hi, rho_a).unwrap());
            let (dense, light) = if rho_a >= rho_b { (rho_a, rho_b) } else { (rho_b, rho_a) };
            prop_assert!(ball_radius(m_a, dense).unwrap() <= ball_radius(m_a, light).unwrap());
        }
    }
}
