//! Crystal constants files: Sellmeier coefficients and validity window in
//! the same `key = value` syntax as run configs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use spdc_core::{SellmeierCoefficients, SellmeierSet};

use crate::config::parse_pairs;
use crate::Error;

/// Environment variable naming the default constants directory.
pub const CONSTANTS_DIR_VAR: &str = "SPDC_CONSTANTS_DIR";

const BUILTIN: &[(&str, &str)] = &[("bbo.sellmeier", include_str!("../data/bbo.sellmeier"))];

const KEYS: [&str; 11] = [
    "crystal.name",
    "sellmeier.o.A",
    "sellmeier.o.B",
    "sellmeier.o.C",
    "sellmeier.o.D",
    "sellmeier.e.A",
    "sellmeier.e.B",
    "sellmeier.e.C",
    "sellmeier.e.D",
    "validity.min_um",
    "validity.max_um",
];

fn error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: format!("crystal file: {key}"),
        message: message.into(),
    }
}

pub fn parse(text: &str) -> Result<SellmeierSet, Error> {
    let pairs = parse_pairs(text)?;
    if let Some(k) = pairs.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(error(
            k,
            format!("unknown key (known keys: {})", KEYS.join(", ")),
        ));
    }
    let get = |key: &str| -> Result<f64, Error> {
        let v = pairs.get(key).ok_or_else(|| error(key, "missing"))?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| error(key, format!("got `{v}`, expected a plain number")))
    };
    let coefficients = |pol: &str| -> Result<SellmeierCoefficients, Error> {
        Ok(SellmeierCoefficients {
            a: get(&format!("sellmeier.{pol}.A"))?,
            b: get(&format!("sellmeier.{pol}.B"))?,
            c: get(&format!("sellmeier.{pol}.C"))?,
            d: get(&format!("sellmeier.{pol}.D"))?,
        })
    };
    let set = SellmeierSet {
        name: pairs
            .get("crystal.name")
            .cloned()
            .ok_or_else(|| error("crystal.name", "missing"))?,
        ordinary: coefficients("o")?,
        extraordinary: coefficients("e")?,
        min_um: get("validity.min_um")?,
        max_um: get("validity.max_um")?,
    };
    set.validate(64)
        .map_err(|e| error("sellmeier", e.to_string()))?;
    Ok(set)
}

/// Where a constants file was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(PathBuf),
    /// Found in the directory named by [`CONSTANTS_DIR_VAR`].
    ConstantsDir(PathBuf),
    Builtin(&'static str),
}

impl Source {
    /// Value to record for `crystal.file` so the run resolves the same set
    /// from anywhere.
    pub fn config_value(&self, name: &str) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::ConstantsDir(_) | Source::Builtin(_) => name.to_string(),
        }
    }
}

/// Resolves `name` against `base_dir`, then the constants directory, then
/// the built-in files.
pub fn load(name: &str, base_dir: &Path) -> Result<(SellmeierSet, Source), Error> {
    let read = |path: &Path| -> Result<SellmeierSet, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })?;
        parse(&text).map_err(|e| match e {
            Error::Config { key, message } => Error::Config {
                key: format!("{}: {key}", path.display()),
                message,
            },
            other => other,
        })
    };
    let direct = base_dir.join(name);
    if direct.is_file() {
        let path = direct.canonicalize().unwrap_or(direct);
        return Ok((read(&path)?, Source::File(path)));
    }
    if let Some(dir) = std::env::var_os(CONSTANTS_DIR_VAR) {
        let path = PathBuf::from(dir).join(name);
        if path.is_file() {
            return Ok((read(&path)?, Source::ConstantsDir(path)));
        }
    }
    if let Some((builtin, text)) = BUILTIN.iter().find(|(n, _)| *n == name) {
        return Ok((parse(text)?, Source::Builtin(builtin)));
    }
    Err(Error::Config {
        key: "crystal.file".into(),
        message: format!(
            "`{name}` not found next to the config, in ${CONSTANTS_DIR_VAR}, or among the built-in files ({})",
            BUILTIN.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ),
    })
}

/// Coefficients as a flat map, for run metadata.
pub fn describe(set: &SellmeierSet) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (pol, c) in [("o", set.ordinary), ("e", set.extraordinary)] {
        for (k, v) in [("A", c.a), ("B", c.b), ("C", c.c), ("D", c.d)] {
            out.insert(format!("sellmeier.{pol}.{k}"), v);
        }
    }
    out.insert("validity.min_um".into(), set.min_um);
    out.insert("validity.max_um".into(), set.max_um);
    out
}
