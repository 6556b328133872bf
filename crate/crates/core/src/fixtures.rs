//! Scenario templates shipped with the engine.

pub const CONNECTNET_SCENARIO: &str = include_str!("../fixtures/connectnet.scenario");
pub const CONNECTNET_SCRIPT: &str = include_str!("../fixtures/connectnet.script.toml");
pub const BLANK_SCENARIO: &str = include_str!("../fixtures/blank.scenario");
/// Dana's initial memory as published for the ConnectNet demonstration, in
/// `[timestamp] text` dump format and the published order.
pub const DANA_LISTING: &str = include_str!("../fixtures/dana.listing");

/// A named template: the scenario file plus any files it refers to.
#[derive(Debug, Clone, Copy)]
pub struct Template {
    pub name: &'static str,
    /// `(file name, contents)`, scenario first.
    pub files: &'static [(&'static str, &'static str)],
}

pub const TEMPLATES: &[Template] = &[
    Template {
        name: "connectnet",
        files: &[
            ("connectnet.scenario", CONNECTNET_SCENARIO),
            ("connectnet.script.toml", CONNECTNET_SCRIPT),
        ],
    },
    Template {
        name: "blank",
        files: &[("blank.scenario", BLANK_SCENARIO)],
    },
];

pub fn template(name: &str) -> Option<&'static Template> {
    TEMPLATES.iter().find(|t| t.name == name)
}
