//! Built-in scenarios plus an optional directory of user scenario files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mde_core::library;

use crate::scenario::{ConfigError, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub description: String,
    /// `builtin` or the file the scenario came from.
    pub source: String,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: Vec<Entry>,
}

impl Registry {
    pub fn builtin() -> Self {
        let entries = library::builtins()
            .iter()
            .map(|b| Entry {
                name: b.name.clone(),
                description: b.description.clone(),
                source: "builtin".into(),
                scenario: Scenario::from_builtin(b),
            })
            .collect();
        Self { entries }
    }

    /// Built-ins plus every `*.json` scenario in `dir` (sorted by file name).
    /// Fails if two entries share a name.
    pub fn with_dir(dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut reg = Self::builtin();
        if let Some(dir) = dir {
            let io = |source| ConfigError::Io {
                path: dir.to_path_buf(),
                source,
            };
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            for path in files {
                let scenario = Scenario::load(&path)?;
                reg.entries.push(Entry {
                    name: scenario.name.clone(),
                    description: scenario.description.clone(),
                    source: path.display().to_string(),
                    scenario,
                });
            }
        }
        reg.check_unique()?;
        Ok(reg)
    }

    fn check_unique(&self) -> Result<(), ConfigError> {
        let mut seen: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for e in &self.entries {
            seen.entry(&e.name).or_default().push(e.source.clone());
        }
        match seen.into_iter().find(|(_, s)| s.len() > 1) {
            Some((name, sources)) => Err(ConfigError::Collision {
                name: name.into(),
                sources,
            }),
            None => Ok(()),
        }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// A scenario file path, or the name of a registry entry.
    pub fn resolve(&self, target: &str) -> Result<Scenario, ConfigError> {
        let path = Path::new(target);
        if path.is_file() {
            return Scenario::load(path);
        }
        self.get(target)
            .map(|e| e.scenario.clone())
            .ok_or_else(|| ConfigError::Unknown(target.into()))
    }
}
