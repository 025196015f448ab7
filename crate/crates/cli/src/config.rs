//! Scenario files: TOML parsing with every problem collected, and the
//! canonical form used for echoes and round-trips.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use slipcurrent_core::scenario::{BurgersSection, ScenarioConfig};
use toml::{Table, Value};

use crate::error::{CliError, Result};

/// A validated scenario and the directory its relative paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub base: PathBuf,
}

const SECTIONS: [&str; 10] =
    ["grid", "elastic", "mollify", "hold", "loading", "core", "burgers", "dislocations", "solver", "output"];

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let config = parse_str(&text, Some(&base)).map_err(CliError::Invalid)?;
    Ok(Scenario { config, base })
}

fn section<T: DeserializeOwned + Default>(table: &Table, key: &str, errors: &mut Vec<String>) -> T {
    match table.get(key) {
        None => T::default(),
        Some(v) => v.clone().try_into().unwrap_or_else(|e: toml::de::Error| {
            errors.push(format!("{key}: {}", e.message().trim()));
            T::default()
        }),
    }
}

/// Parses and validates; syntax errors stop early, every other problem is
/// reported with the key it concerns.
pub fn parse_str(text: &str, base: Option<&Path>) -> std::result::Result<ScenarioConfig, Vec<String>> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let at = e.span().map(|s| format!("line {}: ", text[..s.start].lines().count().max(1))).unwrap_or_default();
        vec![format!("{at}{}", e.message().trim())]
    })?;
    let mut errors: Vec<String> =
        table.keys().filter(|k| !SECTIONS.contains(&k.as_str())).map(|k| format!("{k}: unknown section")).collect();

    let mut burgers = Vec::new();
    match table.get("burgers") {
        None => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                match item.clone().try_into::<BurgersSection>() {
                    Ok(b) => burgers.push(b),
                    Err(e) => errors.push(format!("burgers[{i}]: {}", e.message().trim())),
                }
            }
        }
        Some(_) => errors.push("burgers: expected an array of tables".into()),
    }
    let config = ScenarioConfig {
        grid: section(&table, "grid", &mut errors),
        elastic: section(&table, "elastic", &mut errors),
        mollify: section(&table, "mollify", &mut errors),
        hold: section(&table, "hold", &mut errors),
        loading: section(&table, "loading", &mut errors),
        core: section(&table, "core", &mut errors),
        burgers,
        dislocations: section(&table, "dislocations", &mut errors),
        solver: section(&table, "solver", &mut errors),
        output: section(&table, "output", &mut errors),
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    config.validate(base)?;
    Ok(config)
}

/// Canonical TOML: every key written, in declaration order.
pub fn canonical(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| CliError::Serialize { what: "scenario", msg: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let text = "[grid]\nn = 8\n\n[[burgers]]\nvector = [1.0, 0.0, 0.0]\n";
        let c = parse_str(text, None).unwrap();
        assert_eq!(c.grid.n, Some(8));
        assert_eq!(c.elastic, Default::default());
        assert_eq!(c.solver, Default::default());
        assert_eq!(c.burgers[0].rho, 1.0);
        assert!(c.dislocations.loops.is_empty());
    }

    #[test]
    fn problems_in_several_sections_are_all_reported() {
        let text = "bogus = 1\n[grid]\nn = \"eight\"\n[elastic]\nmu = 1.0\nnu = 0.3\n[[burgers]]\nrho = 2.0\n";
        let errs = parse_str(text, None).unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("bogus")), "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("grid")), "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("elastic") && e.contains("nu")), "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("burgers[0]") && e.contains("vector")), "{errs:?}");
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let errs = parse_str("[grid]\nn = = 3\n", None).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("line 2"), "{errs:?}");
    }
}
