//! Plain-text run-configuration files.
//!
//! One `key = value` per line; `#` starts a comment anywhere on a line;
//! blank lines are skipped. Every key is optional (missing keys keep the
//! built-in defaults), unknown keys are errors, and when a key repeats the
//! last occurrence wins. The `pair` key may repeat to list several
//! input/target document pairs for experiment grids.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evolution::EvolutionConfig;
use crate::genome::StructureType;
use crate::variation::{OperatorGroup, OperatorId, RouletteMode};

/// A parsed configuration: the evolution settings plus any document pairs
/// named for experiment runs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub evolution: EvolutionConfig,
    /// (input document, target document) path pairs, in file order.
    pub pairs: Vec<(PathBuf, PathBuf)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            evolution: EvolutionConfig::new(StructureType::Type1),
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn line_err(line: usize, message: impl fmt::Display) -> ConfigError {
    ConfigError::Line {
        line,
        message: message.to_string(),
    }
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses configuration text. The result is validated as a whole, so
/// e.g. priority overrides that break a roulette table's monotonicity are
/// rejected here rather than at run time.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| line_err(line_no, format!("expected key = value, got {line:?}")))?;
        apply_key(&mut config, key.trim(), value.trim())
            .map_err(|message| line_err(line_no, message))?;
    }
    config
        .evolution
        .validate()
        .map_err(ConfigError::Invalid)?;
    Ok(config)
}

fn apply_key(config: &mut RunConfig, key: &str, value: &str) -> Result<(), String> {
    let ev = &mut config.evolution;
    match key {
        "population_size" => ev.population_size = parse_num(key, value)?,
        "max_generations" => ev.max_generations = parse_num(key, value)?,
        "tournament_k" => ev.tournament_k = parse_num(key, value)?,
        "elitism" => ev.elitism = parse_num(key, value)?,
        "seed" => ev.seed = parse_num(key, value)?,
        "structure_type" => ev.structure_type = value.parse()?,
        "p_xpath_group" => ev.operator_table.p_xpath_group = parse_num(key, value)?,
        "init_templates" => ev.init_params.init_templates = parse_num(key, value)?,
        "init_children" => ev.init_params.init_children = parse_num(key, value)?,
        "p_self" => ev.init_params.p_self = parse_num(key, value)?,
        "max_route_len" => ev.init_params.max_route_len = parse_num(key, value)?,
        "p_filter" => ev.init_params.p_filter = parse_num(key, value)?,
        "max_filter" => ev.init_params.max_filter = parse_num(key, value)?,
        "roulette.xpath" => {
            ev.operator_table
                .set_mode(OperatorGroup::XPath, parse_mode(value)?);
        }
        "roulette.structure" => {
            ev.operator_table
                .set_mode(OperatorGroup::Structure, parse_mode(value)?);
        }
        "pair" => {
            let parts: Vec<&str> = value.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(format!(
                    "pair wants two paths (input target), got {} token(s)",
                    parts.len()
                ));
            }
            config
                .pairs
                .push((PathBuf::from(parts[0]), PathBuf::from(parts[1])));
        }
        _ => {
            if let Some(rest) = key.strip_prefix("priority.") {
                let (stype_key, op_key) = rest
                    .split_once('.')
                    .ok_or_else(|| format!("priority key wants priority.<type>.<operator>, got {key:?}"))?;
                let stype: StructureType = stype_key.parse()?;
                let op = OperatorId::from_key(op_key)
                    .ok_or_else(|| format!("unknown operator {op_key:?}"))?;
                ev.operator_table
                    .set_priority(stype, op, parse_num(key, value)?)?;
            } else {
                return Err(format!("unknown key {key:?}"));
            }
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

fn parse_mode(value: &str) -> Result<RouletteMode, String> {
    match value.to_ascii_lowercase().as_str() {
        "cumulative" => Ok(RouletteMode::Cumulative),
        "normalized" => Ok(RouletteMode::Normalized),
        other => Err(format!(
            "unknown roulette mode {other:?} (expected cumulative or normalized)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::OperatorTable;

    #[test]
    fn empty_text_yields_defaults() {
        let config = parse_config("").unwrap();
        let ev = &config.evolution;
        assert_eq!(ev.population_size, 100);
        assert_eq!(ev.max_generations, 100);
        assert_eq!(ev.tournament_k, 5);
        assert_eq!(ev.elitism, 1);
        assert_eq!(ev.seed, 0);
        assert_eq!(ev.structure_type, StructureType::Type1);
        assert_eq!(ev.operator_table, OperatorTable::default());
        assert!(config.pairs.is_empty());
    }

    #[test]
    fn every_key_lands_in_its_field() {
        let text = "\
# run shape
population_size = 40
max_generations = 12
tournament_k = 3
elitism = 2
seed = 99
structure_type = 2   # numeric form works too

# variation
p_xpath_group = 0.25
roulette.structure = normalized
priority.type2.set_self = 0.05
priority.1.crossover = 0.5

# initialization
init_templates = 6
init_children = 4
p_self = 0.5
max_route_len = 2
p_filter = 0.0
max_filter = 7

pair = a.xml b.xml
pair = c.xml d.xml
";
        let config = parse_config(text).unwrap();
        let ev = &config.evolution;
        assert_eq!(ev.population_size, 40);
        assert_eq!(ev.max_generations, 12);
        assert_eq!(ev.tournament_k, 3);
        assert_eq!(ev.elitism, 2);
        assert_eq!(ev.seed, 99);
        assert_eq!(ev.structure_type, StructureType::Type2);
        assert_eq!(ev.operator_table.p_xpath_group, 0.25);
        assert_eq!(ev.init_params.init_templates, 6);
        assert_eq!(ev.init_params.init_children, 4);
        assert_eq!(ev.init_params.p_self, 0.5);
        assert_eq!(ev.init_params.max_route_len, 2);
        assert_eq!(ev.init_params.p_filter, 0.0);
        assert_eq!(ev.init_params.max_filter, 7);

        let xpath2 = ev.operator_table.xpath_group(StructureType::Type2);
        assert_eq!(xpath2.entries[0], (OperatorId::SetSelf, 0.05));
        let structure1 = ev.operator_table.structure_group(StructureType::Type1);
        assert_eq!(structure1.mode, RouletteMode::Normalized);
        assert_eq!(
            structure1
                .entries
                .iter()
                .find(|(op, _)| *op == OperatorId::Crossover)
                .unwrap()
                .1,
            0.5
        );
        // the xpath group kept its default mode
        assert_eq!(xpath2.mode, RouletteMode::Cumulative);

        assert_eq!(
            config.pairs,
            vec![
                (PathBuf::from("a.xml"), PathBuf::from("b.xml")),
                (PathBuf::from("c.xml"), PathBuf::from("d.xml")),
            ]
        );
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("seed = 1\npopsize = 10\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("popsize"), "{msg}");
    }

    #[test]
    fn malformed_lines_and_values_are_rejected() {
        assert!(parse_config("population_size\n").is_err());
        assert!(parse_config("population_size = ten\n").is_err());
        assert!(parse_config("structure_type = 4\n").is_err());
        assert!(parse_config("roulette.xpath = sorted\n").is_err());
        assert!(parse_config("pair = only_one.xml\n").is_err());
        assert!(parse_config("priority.type2.bogus_op = 0.1\n").is_err());
        // SetDescendant exists but not in Type 2's table
        assert!(parse_config("priority.type2.set_descendant = 0.1\n").is_err());
    }

    #[test]
    fn whole_config_validation_runs_after_overrides() {
        // breaking a cumulative table's monotonicity is caught
        let err = parse_config("priority.type1.set_self = 0.9\n").unwrap_err();
        assert!(err.to_string().contains("increasing"), "{err}");
        assert!(parse_config("population_size = 0\n").is_err());
        assert!(parse_config("p_xpath_group = 1.5\n").is_err());
    }

    #[test]
    fn repeated_scalar_key_keeps_the_last_value() {
        let config = parse_config("seed = 1\nseed = 2\n").unwrap();
        assert_eq!(config.evolution.seed, 2);
    }
}
