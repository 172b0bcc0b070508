use std::path::Path;

use super::{build_template, Overrides, SceneTemplate, TemplateName};
use crate::error::{Error, Result};
use crate::real::Real;

/// Scene specification file.
///
/// TOML with a `template` key; every other key is a parameter override.
/// Nested tables flatten to dotted paths and purely numeric table keys become
/// indices, so these are equivalent:
///
/// ```toml
/// template = "rectangular_tumour"
/// spheroid_count = 1
/// "material[0].factors.final_factor" = 0.3
///
/// [material.0.factors]
/// final_factor = 0.3
///
/// [pattern]
/// frequency = 0.2
/// ```
///
/// An `[overrides]` table is flattened without its own prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile<T> {
    pub template: TemplateName,
    pub overrides: Overrides<T>,
}

impl<T: Real> SceneFile<T> {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::parse(origin, e))?;
        let template = table
            .get("template")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::parse(origin, "missing string key `template`"))?
            .parse()?;
        let mut overrides = Overrides::new();
        for (key, value) in &table {
            match key.as_str() {
                "template" => {}
                "overrides" => flatten_toml(value, "", &mut overrides).map_err(|e| Error::parse(origin, e))?,
                _ => flatten_toml(value, key, &mut overrides).map_err(|e| Error::parse(origin, e))?,
            }
        }
        Ok(Self { template, overrides })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn build(&self) -> Result<SceneTemplate<T>> {
        build_template(self.template, &self.overrides)
    }
}

/// Flattens nested TOML tables into `path -> number` pairs.
pub fn flatten_toml<T: Real>(
    value: &toml::Value,
    prefix: &str,
    out: &mut Overrides<T>,
) -> std::result::Result<(), String> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let path = if prefix.is_empty() {
                    k.clone()
                } else if k.chars().all(|c| c.is_ascii_digit()) {
                    format!("{prefix}[{k}]")
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_toml(v, &path, out)?;
            }
            Ok(())
        }
        toml::Value::Integer(i) => {
            out.insert(prefix.to_string(), T::from_i64(*i).ok_or_else(|| format!("{prefix}: integer out of range"))?);
            Ok(())
        }
        toml::Value::Float(f) => {
            out.insert(prefix.to_string(), T::lit(*f));
            Ok(())
        }
        other => Err(format!("{prefix}: expected a number or table, got {}", other.type_str())),
    }
}
