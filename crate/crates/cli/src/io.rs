//! Loading spaces, distributions and instance files.
//!
//! A space is given as a path to a space file or inline as a JSON object.
//! A distribution is a path to a distribution file, a bare mass array, or an
//! inline `{"space": .., "mass": [..]}` object. Relative paths inside a file
//! are resolved against that file's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pairwise_ot::dist::RawDistribution;
use pairwise_ot::space::RawSpace;
use pairwise_ot::{validate_space, CostSpace, DiscreteDistribution};
use serde::de::DeserializeOwned;
use serde_json::Value;

/// A file that could not be opened or read.
#[derive(Debug)]
pub struct Unreadable {
    pub path: PathBuf,
    pub source: std::io::Error,
}

impl fmt::Display for Unreadable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot read {}", self.path.display())
    }
}

impl std::error::Error for Unreadable {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// An input that parsed but is invalid for the command, naming the field.
#[derive(Debug)]
pub struct InvalidInput {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for InvalidInput {}

pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> anyhow::Error {
    InvalidInput {
        field: field.into(),
        reason: reason.into(),
    }
    .into()
}

/// Reads and parses a JSON file.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Unreadable {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let rel = Path::new(rel);
    if rel.is_absolute() {
        rel.to_owned()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(rel)
    }
}

/// A space with the file it came from, when any.
pub struct LoadedSpace {
    pub space: CostSpace,
    pub raw: RawSpace,
}

/// Loads a space file.
pub fn load_space(path: &Path) -> Result<LoadedSpace> {
    let raw: RawSpace = read_json(path)?;
    let space = validate_space(&raw).with_context(|| format!("invalid space in {}", path.display()))?;
    Ok(LoadedSpace { space, raw })
}

/// Parses a space reference found in `file`: a path string or an inline
/// object.
pub fn space_from_value(value: &Value, file: &Path, field: &str) -> Result<LoadedSpace> {
    match value {
        Value::String(rel) => load_space(&resolve(file, rel)),
        Value::Object(_) => {
            let raw: RawSpace = serde_json::from_value(value.clone())
                .with_context(|| format!("field `{field}` of {}", file.display()))?;
            let space = validate_space(&raw).with_context(|| format!("field `{field}` of {}", file.display()))?;
            Ok(LoadedSpace { space, raw })
        }
        _ => Err(invalid(field, "expected a space file path or a space object")),
    }
}

/// A distribution with the space its file names, if any.
struct RawDist {
    mass: Vec<f64>,
    space: Option<PathBuf>,
}

fn raw_dist_file(path: &Path) -> Result<RawDist> {
    let raw: RawDistribution = read_json(path)?;
    Ok(RawDist {
        mass: raw.mass,
        space: raw.space.map(|s| resolve(path, &s)),
    })
}

fn raw_dist_from_value(value: &Value, file: &Path, field: &str) -> Result<RawDist> {
    match value {
        Value::String(rel) => raw_dist_file(&resolve(file, rel)),
        Value::Array(_) => Ok(RawDist {
            mass: serde_json::from_value(value.clone())
                .with_context(|| format!("field `{field}` of {}", file.display()))?,
            space: None,
        }),
        Value::Object(_) => {
            let raw: RawDistribution = serde_json::from_value(value.clone())
                .with_context(|| format!("field `{field}` of {}", file.display()))?;
            Ok(RawDist {
                mass: raw.mass,
                space: raw.space.map(|s| resolve(file, &s)),
            })
        }
        _ => Err(invalid(field, "expected a distribution path, mass array or object")),
    }
}

fn bind(raw: RawDist, space: &CostSpace, field: &str) -> Result<DiscreteDistribution> {
    if let Some(path) = &raw.space {
        let named = load_space(path)?;
        if named.space.fingerprint() != space.fingerprint() {
            return Err(invalid(
                field,
                format!("names space {}, which differs from the space in use", path.display()),
            ));
        }
    }
    DiscreteDistribution::new(space, raw.mass).with_context(|| format!("field `{field}`"))
}

/// Loads distribution files from the command line, with the space either
/// given explicitly or taken from the first distribution file.
pub fn load_dists(space: Option<&Path>, dists: &[PathBuf]) -> Result<(LoadedSpace, Vec<DiscreteDistribution>)> {
    let raws: Vec<(String, RawDist)> = dists
        .iter()
        .map(|p| raw_dist_file(p).map(|r| (p.display().to_string(), r)))
        .collect::<Result<_>>()?;
    let loaded = match (space, raws.iter().find_map(|(_, r)| r.space.clone())) {
        (Some(path), _) => load_space(path)?,
        (None, Some(path)) => load_space(&path)?,
        (None, None) => return Err(invalid("space", "no --space given and no distribution file names one")),
    };
    let dists = raws
        .into_iter()
        .map(|(field, raw)| bind(raw, &loaded.space, &field))
        .collect::<Result<_>>()?;
    Ok((loaded, dists))
}

/// Parses a list of distribution references from an instance file.
pub fn dists_from_value(value: &Value, space: &CostSpace, file: &Path, field: &str) -> Result<Vec<DiscreteDistribution>> {
    let items = value
        .as_array()
        .ok_or_else(|| invalid(field, "expected an array of distributions"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let name = format!("{field}[{i}]");
            bind(raw_dist_from_value(v, file, &name)?, space, &name)
        })
        .collect()
}

/// Parses one distribution reference from an instance file.
pub fn dist_from_value(value: &Value, space: &CostSpace, file: &Path, field: &str) -> Result<DiscreteDistribution> {
    bind(raw_dist_from_value(value, file, field)?, space, field)
}

/// Field `name` of an instance object, or an error naming it.
pub fn field<'a>(obj: &'a Value, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| invalid(name, "missing from the instance file"))
}

/// Typed field `name` of an instance object.
pub fn typed_field<T: DeserializeOwned>(obj: &Value, name: &str) -> Result<T> {
    serde_json::from_value(field(obj, name)?.clone()).map_err(|e| invalid(name, e.to_string()))
}
