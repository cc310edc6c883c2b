//! Shipped scenario configurations.

use crate::config::{parse_config, Config, ConfigErrors};

pub const PRESETS: [(&str, &str); 5] = [
    ("single_vortex", include_str!("../presets/single_vortex.toml")),
    ("counter_rotating", include_str!("../presets/counter_rotating.toml")),
    ("phase_coherence", include_str!("../presets/phase_coherence.toml")),
    ("double_charge", include_str!("../presets/double_charge.toml")),
    ("resonance_sweep", include_str!("../presets/resonance_sweep.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn preset(name: &str) -> Option<Result<Config, ConfigErrors>> {
    preset_text(name).map(parse_config)
}
