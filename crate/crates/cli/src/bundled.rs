//! Scenarios shipped with the binary, one per acceptance check.

pub struct Bundled {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(Bundled {
            name: $name,
            source: include_str!(concat!("../scenarios/", $name, ".toml")),
        }),*]
    };
}

pub const SCENARIOS: &[Bundled] = bundled![
    "weak-form-identities",
    "mass-conservation-sqrt-kernel",
    "mass-conservation-diffusive",
    "duality-constant-kernel",
    "duality-short-horizon",
    "l1-terms-constant-kernel",
    "psi-construction",
    "superlinear-moment",
    "gelation-constant",
    "gelation-multiplicative",
    "collision-model",
    "scheme-order",
    "stiffness-blowup",
];

pub fn find(name: &str) -> Option<&'static Bundled> {
    SCENARIOS.iter().find(|b| b.name == name)
}

/// The `description` line of a bundled file, if any.
pub fn description(b: &Bundled) -> &'static str {
    b.source
        .lines()
        .find_map(|l| l.strip_prefix("description = \""))
        .and_then(|l| l.strip_suffix('"'))
        .unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_validates() {
        for b in SCENARIOS {
            let s = crate::parse_str(b.source, b.name, None)
                .unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(s.file.name, b.name);
            assert!(s.warnings.is_empty(), "{}: {:?}", b.name, s.warnings);
            assert!(!description(b).is_empty(), "{}", b.name);
        }
    }
}
