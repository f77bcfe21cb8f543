//! Scenario files bundled with the binary.

use crate::config::{parse_and_validate, ConfigError, ResolvedConfig};

/// A bundled scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

impl Preset {
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        parse_and_validate(self.text)
    }
}

const PRESETS: [Preset; 3] = [
    Preset {
        name: "olivine-desk",
        summary: "single-crystal olivine, 2 cm cube, shell source, 4-cell PML",
        text: include_str!("../presets/olivine-desk.toml"),
    },
    Preset {
        name: "isotropic-reflection",
        summary: "isotropic solid for reflection measurements against an enlarged domain",
        text: include_str!("../presets/isotropic-reflection.toml"),
    },
    Preset {
        name: "kelvin-voigt-demo",
        summary: "isotropic Kelvin-Voigt solid with scalar-identity viscosity",
        text: include_str!("../presets/kelvin-voigt-demo.toml"),
    },
];

pub fn scenario_presets() -> &'static [Preset] {
    &PRESETS
}

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
