//! Molecular constants, unit conversions and the rigid-rotor spectrum.
//!
//! Inputs arrive in spectroscopic units (Debye, cm^-1, amu, μm, mK). Everything
//! downstream works with energies divided by ħ; the conversions below are the
//! only place those units meet SI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod consts {
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    pub const DEBYE: f64 = 3.335_64e-30;
    pub const MICROMETER: f64 = 1e-6;
    pub const MICROSECOND: f64 = 1e-6;
}

use consts::*;

/// Environment variable naming a directory of `<name>.json` molecule presets
/// that take precedence over the built-in ones.
pub const PRESET_DIR_ENV: &str = "ROTQUDIT_PRESET_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    pub name: String,
    #[serde(rename = "dipole_moment_debye")]
    pub dipole_moment: f64,
    #[serde(rename = "rotational_constant_invcm")]
    pub rotational_constant: f64,
    #[serde(rename = "mass_amu")]
    pub mass: f64,
}

impl MoleculeSpec {
    pub fn new(
        name: impl Into<String>,
        dipole_moment: f64,
        rotational_constant: f64,
        mass: f64,
    ) -> Result<Self> {
        let spec = MoleculeSpec {
            name: name.into(),
            dipole_moment,
            rotational_constant,
            mass,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("dipole_moment_debye", self.dipole_moment),
            ("rotational_constant_invcm", self.rotational_constant),
            ("mass_amu", self.mass),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "molecule `{}`: {field} must be positive, got {v}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// SrF in its X²Σ⁺ ground state.
    pub fn srf() -> Self {
        MoleculeSpec {
            name: "SrF".into(),
            dipole_moment: 3.5,
            rotational_constant: 0.25,
            mass: 106.62,
        }
    }

    /// ⁸⁷Rb¹³³Cs in its X¹Σ⁺ ground state.
    pub fn rbcs() -> Self {
        MoleculeSpec {
            name: "RbCs".into(),
            dipole_moment: 1.225,
            rotational_constant: 0.0163,
            mass: 219.90,
        }
    }

    /// Looks up a preset by (case-insensitive) name. A file
    /// `$ROTQUDIT_PRESET_DIR/<name>.json` overrides the built-ins.
    pub fn preset(name: &str) -> Result<Self> {
        if let Ok(dir) = std::env::var(PRESET_DIR_ENV) {
            let path = Path::new(&dir).join(format!("{name}.json"));
            if path.is_file() {
                return Self::from_json_file(&path);
            }
        }
        match name.to_ascii_lowercase().as_str() {
            "srf" => Ok(Self::srf()),
            "rbcs" | "87rb133cs" => Ok(Self::rbcs()),
            _ => Err(Error::Config(format!("unknown molecule preset `{name}`"))),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: MoleculeSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn dipole_si(&self) -> f64 {
        self.dipole_moment * DEBYE
    }

    pub fn mass_si(&self) -> f64 {
        self.mass * ATOMIC_MASS_UNIT
    }

    /// B as an angular frequency, rad/s.
    pub fn rotational_constant_rad_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * 100.0 * self.rotational_constant
    }

    /// d²/(4πε₀ħ) in m³·rad/s; divide by R³ to get the coupling scale.
    pub fn dipolar_coefficient(&self) -> f64 {
        let d = self.dipole_si();
        d * d / (4.0 * std::f64::consts::PI * EPSILON_0 * HBAR)
    }

    /// Same coefficient in μm³·rad/μs, the working units of the integrators.
    pub fn dipolar_coefficient_um3_per_us(&self) -> f64 {
        self.dipolar_coefficient() / MICROMETER.powi(3) * MICROSECOND
    }
}

/// Optical-tweezer geometry for the approach-and-separate trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    /// Well depth U₀/k_B, kelvin.
    #[serde(rename = "depth_kelvin")]
    pub depth: f64,
    /// α + β, μm.
    #[serde(rename = "initial_separation_um")]
    pub initial_separation: f64,
    /// β − α, μm.
    #[serde(rename = "min_separation_um")]
    pub min_separation: f64,
}

impl TrapSpec {
    pub fn new(depth: f64, initial_separation: f64, min_separation: f64) -> Result<Self> {
        let trap = TrapSpec {
            depth,
            initial_separation,
            min_separation,
        };
        trap.validate()?;
        Ok(trap)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth > 0.0) {
            return Err(Error::Config(format!("trap depth must be positive, got {}", self.depth)));
        }
        if !(self.min_separation > 0.0 && self.initial_separation > self.min_separation) {
            return Err(Error::Config(format!(
                "need initial_separation > min_separation > 0, got {} and {}",
                self.initial_separation, self.min_separation
            )));
        }
        Ok(())
    }

    /// 10 mK well, 10 μm start, 0.3 μm closest approach.
    pub fn reference() -> Self {
        TrapSpec {
            depth: 10e-3,
            initial_separation: 10.0,
            min_separation: 0.3,
        }
    }

    pub fn alpha(&self) -> f64 {
        0.5 * (self.initial_separation - self.min_separation)
    }

    pub fn beta(&self) -> f64 {
        0.5 * (self.initial_separation + self.min_separation)
    }

    pub fn depth_joules(&self) -> f64 {
        self.depth * BOLTZMANN
    }
}

/// E_rot(J)/ħ = B·J(J+1) in rad/s.
pub fn rot_energy(spec: &MoleculeSpec, j: u32) -> f64 {
    let j = f64::from(j);
    spec.rotational_constant_rad_s() * j * (j + 1.0)
}

/// d²/(4πε₀ħR³) in rad/s for `r` in μm.
pub fn ddi_strength(spec: &MoleculeSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("separation must be positive, got {r} μm")));
    }
    Ok(spec.dipolar_coefficient() / (r * MICROMETER).powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_level_is_zero() {
        assert_eq!(rot_energy(&MoleculeSpec::srf(), 0), 0.0);
    }

    #[test]
    fn srf_first_level() {
        // 2B with B = 2π·c·100·0.25 rad/s
        let expected = 2.0 * (2.0 * std::f64::consts::PI * 2.997_924_58e10 * 0.25);
        let got = rot_energy(&MoleculeSpec::srf(), 1);
        assert!((got - expected).abs() / expected < 1e-14);
        assert!((got - 9.4175e10).abs() / 9.4175e10 < 1e-4);
    }

    #[test]
    fn rbcs_second_level() {
        let spec = MoleculeSpec::rbcs();
        let b = spec.rotational_constant_rad_s();
        assert!((rot_energy(&spec, 2) - 6.0 * b).abs() / (6.0 * b) < 1e-14);
    }

    #[test]
    fn level_spacing() {
        let spec = MoleculeSpec::srf();
        let b = spec.rotational_constant_rad_s();
        for j in 0..10 {
            let gap = rot_energy(&spec, j + 1) - rot_energy(&spec, j);
            assert!((gap - 2.0 * b * f64::from(j + 1)).abs() <= 1e-15 * gap.abs() * 4.0);
        }
    }

    #[test]
    fn ddi_scaling() {
        let spec = MoleculeSpec::srf();
        let near = ddi_strength(&spec, 0.3).unwrap();
        let far = ddi_strength(&spec, 0.6).unwrap();
        assert!((near / far - 8.0).abs() < 1e-12);
        assert!(ddi_strength(&spec, 0.0).is_err());
        assert!(ddi_strength(&spec, -1.0).is_err());
    }

    #[test]
    fn ddi_srf_hand_value() {
        // d = 3.5 D = 1.167474e-29 C·m; d² = 1.3629955e-58 C²m²;
        // 4πε₀ħ = 1.1733694e-44; R³ = 2.7e-20 m³.
        // 1.3629955e-58 / 1.1733694e-44 / 2.7e-20 = 4.30225e5 rad/s
        let v = ddi_strength(&MoleculeSpec::srf(), 0.3).unwrap();
        assert!((v - 4.30225e5).abs() / 4.30225e5 < 1e-5, "{v}");
    }

    #[test]
    fn zero_dipole_gives_zero_coupling() {
        let spec = MoleculeSpec {
            dipole_moment: 0.0,
            ..MoleculeSpec::srf()
        };
        assert_eq!(ddi_strength(&spec, 0.3).unwrap(), 0.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn preset_lookup_and_json() {
        assert_eq!(MoleculeSpec::preset("srf").unwrap(), MoleculeSpec::srf());
        assert_eq!(MoleculeSpec::preset("RbCs").unwrap(), MoleculeSpec::rbcs());
        assert!(MoleculeSpec::preset("KRb-nope").is_err());

        let json = r#"{"name":"X","dipole_moment_debye":1.0,"rotational_constant_invcm":0.1,"mass_amu":50.0}"#;
        let spec = MoleculeSpec::from_json_str(json).unwrap();
        assert_eq!(spec.mass, 50.0);
        let bad = r#"{"name":"X","dipole_moment_debye":-1.0,"rotational_constant_invcm":0.1,"mass_amu":50.0}"#;
        assert!(MoleculeSpec::from_json_str(bad).is_err());
    }

    #[test]
    fn trap_geometry() {
        let trap = TrapSpec::reference();
        assert!((trap.alpha() - 4.85).abs() < 1e-12);
        assert!((trap.beta() - 5.15).abs() < 1e-12);
        assert!(TrapSpec::new(0.01, 0.3, 10.0).is_err());
        assert!(TrapSpec::new(0.0, 10.0, 0.3).is_err());
    }
}
