//! Checked-in sweep configurations for each figure panel and the
//! realistic-parameter CZ point.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig3a", include_str!("../../presets/fig3a.toml")),
    ("fig3b", include_str!("../../presets/fig3b.toml")),
    ("fig4a", include_str!("../../presets/fig4a.toml")),
    ("fig4b", include_str!("../../presets/fig4b.toml")),
    ("fig5a", include_str!("../../presets/fig5a.toml")),
    ("fig5b", include_str!("../../presets/fig5b.toml")),
    ("fig6a", include_str!("../../presets/fig6a.toml")),
    ("fig6b", include_str!("../../presets/fig6b.toml")),
    ("realistic", include_str!("../../presets/realistic.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
