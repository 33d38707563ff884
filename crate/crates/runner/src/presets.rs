//! Built-in scenarios reproducing the published parameter sets.

use crate::scenario::{parse_scenario, ScenarioError, ScenarioSpec};

pub const PRESETS: [(&str, &str); 11] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig1a", include_str!("../presets/fig1a.toml")),
    ("fig1b", include_str!("../presets/fig1b.toml")),
    ("fig1c", include_str!("../presets/fig1c.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("bend_sweep", include_str!("../presets/bend_sweep.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn preset(name: &str) -> Option<Result<ScenarioSpec, ScenarioError>> {
    preset_text(name).map(parse_scenario)
}
