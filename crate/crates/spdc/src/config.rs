//! Flat `key = value` run configuration with explicit units.
//!
//! ```text
//! task = scan-length
//! oracle = both
//! setup.w = 100 um
//! scan.from = 0.1 mm
//! ```
//!
//! `#` starts a comment. Every dimensioned value carries a unit separated
//! by whitespace. Unknown keys and duplicates are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use spdc_core::numeric::{FrequencyScheme, MatchingFactor, NumericOptions, TransverseScheme};
use spdc_core::units::{deg_to_rad, WidthConvention};
use spdc_core::QuadratureSpec;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Constants,
    JsaGrid,
    ScanLength,
    ScanWaist,
    Separability,
    Optimize,
}

impl Task {
    const NAMES: [(&'static str, Task); 6] = [
        ("constants", Task::Constants),
        ("jsa-grid", Task::JsaGrid),
        ("scan-length", Task::ScanLength),
        ("scan-waist", Task::ScanWaist),
        ("separability", Task::Separability),
        ("optimize", Task::Optimize),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES
            .iter()
            .find(|(_, t)| *t == self)
            .map(|(n, _)| *n)
            .unwrap_or("?")
    }

    fn needs_scan(self) -> bool {
        matches!(
            self,
            Task::ScanLength | Task::ScanWaist | Task::Separability
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Analytic,
    Numeric,
    Both,
}

impl Oracle {
    pub fn analytic(self) -> bool {
        matches!(self, Oracle::Analytic | Oracle::Both)
    }

    pub fn numeric(self) -> bool {
        matches!(self, Oracle::Numeric | Oracle::Both)
    }
}

/// How the crystal is cut: by the emission angle it should phase-match at
/// `lambda0`, or by the optic-axis angle directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutTarget {
    Theta0(f64),
    Alpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offset {
    Optimal,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl ScanSpec {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.from];
        }
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                if k == n - 1 {
                    return self.to;
                }
                match self.spacing {
                    Spacing::Linear => self.from + (self.to - self.from) * t,
                    Spacing::Log => (self.from.ln() + (self.to.ln() - self.from.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaistGeometry {
    /// `L` and `w` from `setup.*`.
    Fixed,
    /// `(L, w)` maximized (closed form) at every pump waist.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeMode {
    /// `(L, w)` at the configured pump waist.
    Lw,
    /// Optimum lines over the fit grid.
    Lines,
    /// Best pump waist.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalGeometry {
    Lines,
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSpec {
    pub mode: OptimizeMode,
    pub geometry: GlobalGeometry,
    pub fit: ScanSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub oracle: Oracle,
    pub crystal_file: String,
    pub lambda0: f64,
    pub cut: CutTarget,
    pub axis_plane: f64,
    pub length: f64,
    pub fiber_waist: f64,
    pub pump_waist: f64,
    pub offset: Offset,
    pub pump_width: f64,
    pub filter_width: f64,
    pub convention: WidthConvention,
    pub scan: Option<ScanSpec>,
    pub waist_geometry: WaistGeometry,
    /// Half-width of the JSA grid in wavelength, m.
    pub jsa_span: f64,
    pub jsa_points: usize,
    pub optimize: OptimizeSpec,
    pub quadrature: QuadratureSpec,
    pub numeric: NumericOptions,
    /// Check every numeric value against a refined quadrature.
    pub verify: bool,
    pub output_dir: PathBuf,
    pub output_name: String,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    /// Every key with its effective value, defaults filled in.
    pub resolved: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Length,
    Angle,
    Count,
    Real,
    Bool,
    Choice(&'static [&'static str]),
    Text,
    /// `optimal` or a length.
    Offset,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Length => write!(f, "a length like `100 um` (units: m, cm, mm, um, nm)"),
            Kind::Angle => write!(f, "an angle like `1.4 deg` (units: deg, rad, mrad)"),
            Kind::Count => write!(f, "a non-negative integer"),
            Kind::Real => write!(f, "a plain number"),
            Kind::Bool => write!(f, "`true` or `false`"),
            Kind::Choice(c) => write!(f, "one of {}", c.join(", ")),
            Kind::Text => write!(f, "a non-empty string"),
            Kind::Offset => write!(f, "`optimal` or a length like `12 um`"),
        }
    }
}

const TASKS: &[&str] = &[
    "constants",
    "jsa-grid",
    "scan-length",
    "scan-waist",
    "separability",
    "optimize",
];
const ORACLES: &[&str] = &["analytic", "numeric", "both"];
const CONVENTIONS: &[&str] = &["fwhm-intensity", "fwhm-amplitude", "sigma"];
const SPACINGS: &[&str] = &["linear", "log"];

/// `(key, kind, default)`. Keys without a default are optional or required
/// depending on the task.
const SCHEMA: &[(&str, Kind, Option<&str>)] = &[
    ("task", Kind::Choice(TASKS), None),
    ("oracle", Kind::Choice(ORACLES), Some("analytic")),
    ("crystal.file", Kind::Text, Some("bbo.sellmeier")),
    ("cut.lambda0", Kind::Length, Some("780 nm")),
    ("cut.theta0", Kind::Angle, None),
    ("cut.alpha", Kind::Angle, None),
    ("cut.axis_plane", Kind::Angle, Some("45 deg")),
    ("setup.L", Kind::Length, Some("1 mm")),
    ("setup.w", Kind::Length, Some("100 um")),
    ("setup.wP", Kind::Length, Some("100 um")),
    ("setup.h", Kind::Offset, Some("optimal")),
    ("spectrum.pump", Kind::Length, Some("5 nm")),
    ("spectrum.filter", Kind::Length, Some("17 nm")),
    (
        "spectrum.convention",
        Kind::Choice(CONVENTIONS),
        Some("fwhm-intensity"),
    ),
    ("scan.from", Kind::Length, None),
    ("scan.to", Kind::Length, None),
    ("scan.points", Kind::Count, Some("30")),
    ("scan.spacing", Kind::Choice(SPACINGS), Some("linear")),
    (
        "scan.geometry",
        Kind::Choice(&["fixed", "optimized"]),
        Some("fixed"),
    ),
    ("jsa.span", Kind::Length, Some("20 nm")),
    ("jsa.points", Kind::Count, Some("41")),
    (
        "optimize.mode",
        Kind::Choice(&["lw", "lines", "global"]),
        Some("lw"),
    ),
    (
        "optimize.geometry",
        Kind::Choice(&["lines", "optimized"]),
        Some("lines"),
    ),
    ("optimize.fit_from", Kind::Length, Some("10 um")),
    ("optimize.fit_to", Kind::Length, Some("300 um")),
    ("optimize.fit_points", Kind::Count, Some("30")),
    ("quadrature.transverse_points", Kind::Count, Some("32")),
    ("quadrature.transverse_span", Kind::Real, Some("5")),
    ("quadrature.frequency_points", Kind::Count, Some("48")),
    ("quadrature.frequency_span", Kind::Real, Some("4")),
    ("quadrature.panel_points", Kind::Count, Some("16")),
    ("quadrature.depth_points", Kind::Count, Some("32")),
    (
        "quadrature.transverse",
        Kind::Choice(&["slices", "tensor"]),
        Some("slices"),
    ),
    (
        "quadrature.scheme",
        Kind::Choice(&["tensor-gauss", "adaptive"]),
        Some("tensor-gauss"),
    ),
    ("quadrature.tolerance", Kind::Real, Some("0.005")),
    (
        "numeric.factor",
        Kind::Choice(&["sinc", "gaussian"]),
        Some("sinc"),
    ),
    ("numeric.quadratic_phases", Kind::Bool, Some("true")),
    ("numeric.verify", Kind::Bool, Some("true")),
    ("output.dir", Kind::Text, Some(".")),
    ("output.name", Kind::Text, None),
];

pub fn known_keys() -> impl Iterator<Item = &'static str> {
    SCHEMA.iter().map(|(k, _, _)| *k)
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Splits the text into key/value pairs, rejecting syntax errors and
/// duplicate keys. Values are whitespace-normalized.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_error(
                &format!("line {}", n + 1),
                "expected `key = value`",
            ));
        };
        let key = key.trim();
        let value = value.split_whitespace().collect::<Vec<_>>().join(" ");
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_')
        {
            return Err(config_error(
                &format!("line {}", n + 1),
                format!("malformed key `{key}`"),
            ));
        }
        if value.is_empty() {
            return Err(config_error(key, "empty value"));
        }
        if out.insert(key.to_string(), value).is_some() {
            return Err(config_error(key, "given more than once"));
        }
    }
    Ok(out)
}

/// Divisor from the unit to SI; dividing by an exact power of ten keeps
/// `25 um` equal to the literal `25e-6`.
fn length_divisor(unit: &str) -> Option<f64> {
    Some(match unit {
        "m" => 1.0,
        "cm" => 1e2,
        "mm" => 1e3,
        "um" | "µm" => 1e6,
        "nm" => 1e9,
        _ => return None,
    })
}

fn quantity(key: &str, value: &str, kind: Kind) -> Result<f64, Error> {
    let bad = || config_error(key, format!("got `{value}`, expected {kind}"));
    let mut parts = value.split(' ');
    let (Some(number), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let x: f64 = number.parse().map_err(|_| bad())?;
    if !x.is_finite() {
        return Err(bad());
    }
    match (kind, unit) {
        (Kind::Length | Kind::Offset, u) => length_divisor(u).map(|d| x / d).ok_or_else(bad),
        (Kind::Angle, "rad") => Ok(x),
        (Kind::Angle, "mrad") => Ok(x / 1e3),
        (Kind::Angle, "deg") => Ok(deg_to_rad(x)),
        _ => Err(bad()),
    }
}

/// Typed view over the resolved pairs.
struct Values<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Values<'_> {
    fn kind(key: &str) -> Kind {
        SCHEMA
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, kind, _)| *kind)
            .expect("key in schema")
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, Error> {
        self.raw(key)
            .ok_or_else(|| config_error(key, format!("missing, expected {}", Self::kind(key))))
    }

    fn quantity(&self, key: &str) -> Result<f64, Error> {
        quantity(key, self.required(key)?, Self::kind(key))
    }

    fn positive(&self, key: &str) -> Result<f64, Error> {
        let x = self.quantity(key)?;
        if !(x > 0.0) {
            return Err(config_error(
                key,
                format!("must be positive, got `{}`", self.required(key)?),
            ));
        }
        Ok(x)
    }

    fn count(&self, key: &str) -> Result<usize, Error> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| config_error(key, format!("got `{v}`, expected {}", Kind::Count)))
    }

    fn real(&self, key: &str) -> Result<f64, Error> {
        let v = self.required(key)?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| config_error(key, format!("got `{v}`, expected {}", Kind::Real)))
    }

    fn boolean(&self, key: &str) -> Result<bool, Error> {
        match self.required(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(config_error(
                key,
                format!("got `{v}`, expected {}", Kind::Bool),
            )),
        }
    }

    fn choice(&self, key: &str) -> Result<&str, Error> {
        let v = self.required(key)?;
        match Self::kind(key) {
            Kind::Choice(options) if options.contains(&v) => Ok(v),
            kind => Err(config_error(key, format!("got `{v}`, expected {kind}"))),
        }
    }
}

impl RunConfig {
    /// Parses configuration text. `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Error> {
        Self::from_pairs(parse_pairs(text)?, base_dir)
    }

    /// Reads a config file, or the `config` block of a JSON run summary.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if text.trim_start().starts_with('{') {
            let pairs =
                crate::output::config_from_summary(&text).map_err(|m| config_error("config", m))?;
            return Self::from_pairs(pairs, &base);
        }
        Self::parse(&text, &base)
    }

    pub fn from_pairs(given: BTreeMap<String, String>, base_dir: &Path) -> Result<Self, Error> {
        let unknown: Vec<&str> = given
            .keys()
            .map(String::as_str)
            .filter(|k| !known_keys().any(|s| s == *k))
            .collect();
        if let Some(first) = unknown.first() {
            return Err(config_error(
                first,
                format!(
                    "unknown key (known keys: {})",
                    known_keys().collect::<Vec<_>>().join(", ")
                ),
            ));
        }
        let mut map = given.clone();
        for (key, _, default) in SCHEMA {
            if let Some(d) = default {
                map.entry(key.to_string()).or_insert_with(|| d.to_string());
            }
        }
        match (
            given.contains_key("cut.theta0"),
            given.contains_key("cut.alpha"),
        ) {
            (true, true) => {
                return Err(config_error(
                    "cut.alpha",
                    "give either cut.theta0 or cut.alpha, not both",
                ))
            }
            (false, false) => {
                map.insert("cut.theta0".into(), "1.4 deg".into());
            }
            _ => {}
        }
        let v = Values { map: &map };
        let task_name = v.choice("task")?;
        let task = Task::NAMES
            .iter()
            .find(|(n, _)| *n == task_name)
            .map(|(_, t)| *t)
            .expect("validated choice");
        let oracle = match v.choice("oracle")? {
            "analytic" => Oracle::Analytic,
            "numeric" => Oracle::Numeric,
            _ => Oracle::Both,
        };
        let cut = if map.contains_key("cut.alpha") {
            CutTarget::Alpha(v.positive("cut.alpha")?)
        } else {
            CutTarget::Theta0(v.quantity("cut.theta0")?)
        };
        let convention =
            WidthConvention::from_name(v.choice("spectrum.convention")?).expect("validated choice");
        let offset = match v.required("setup.h")? {
            "optimal" => Offset::Optimal,
            s => Offset::Fixed(quantity("setup.h", s, Kind::Offset)?),
        };
        let spacing = |key: &str| -> Result<Spacing, Error> {
            Ok(if v.choice(key)? == "log" {
                Spacing::Log
            } else {
                Spacing::Linear
            })
        };

        let scan = if task.needs_scan() {
            let spec = ScanSpec {
                from: v.quantity("scan.from")?,
                to: v.quantity("scan.to")?,
                points: v.count("scan.points")?,
                spacing: spacing("scan.spacing")?,
            };
            validate_grid("scan", &spec)?;
            Some(spec)
        } else {
            None
        };
        let fit = ScanSpec {
            from: v.quantity("optimize.fit_from")?,
            to: v.quantity("optimize.fit_to")?,
            points: v.count("optimize.fit_points")?,
            spacing: Spacing::Linear,
        };
        let optimize = OptimizeSpec {
            mode: match v.choice("optimize.mode")? {
                "lw" => OptimizeMode::Lw,
                "lines" => OptimizeMode::Lines,
                _ => OptimizeMode::Global,
            },
            geometry: if v.choice("optimize.geometry")? == "lines" {
                GlobalGeometry::Lines
            } else {
                GlobalGeometry::Optimized
            },
            fit,
        };
        if task == Task::Optimize && optimize.mode != OptimizeMode::Lw {
            validate_grid("optimize.fit", &fit)?;
            if fit.points < 8 {
                return Err(config_error(
                    "optimize.fit_points",
                    "a line fit needs at least 8 points",
                ));
            }
        }

        let quadrature = QuadratureSpec {
            transverse_points: v.count("quadrature.transverse_points")?,
            transverse_span: v.real("quadrature.transverse_span")?,
            frequency_points: v.count("quadrature.frequency_points")?,
            frequency_span: v.real("quadrature.frequency_span")?,
            panel_points: v.count("quadrature.panel_points")?,
            depth_points: v.count("quadrature.depth_points")?,
            transverse: if v.choice("quadrature.transverse")? == "tensor" {
                TransverseScheme::Tensor
            } else {
                TransverseScheme::Slices
            },
            scheme: if v.choice("quadrature.scheme")? == "adaptive" {
                FrequencyScheme::Adaptive
            } else {
                FrequencyScheme::TensorGauss
            },
            tolerance: v.real("quadrature.tolerance")?,
        };
        if oracle.numeric() {
            quadrature
                .validate()
                .map_err(|e| config_error("quadrature", e.to_string()))?;
        }
        let numeric = NumericOptions {
            factor: if v.choice("numeric.factor")? == "gaussian" {
                MatchingFactor::Gaussian
            } else {
                MatchingFactor::Sinc
            },
            quadratic_phases: v.boolean("numeric.quadratic_phases")?,
            full_dispersion: false,
        };

        let jsa_points = v.count("jsa.points")?;
        if task == Task::JsaGrid && jsa_points < 2 {
            return Err(config_error(
                "jsa.points",
                format!("grid needs at least 2 points per axis, got {jsa_points}"),
            ));
        }
        if task == Task::Separability && oracle.numeric() {
            return Err(config_error(
                "oracle",
                "separability is a closed-form quantity; use `oracle = analytic`",
            ));
        }

        let output_name = map
            .get("output.name")
            .cloned()
            .unwrap_or_else(|| task.name().to_string());
        let output_dir = PathBuf::from(v.required("output.dir")?);

        let config = RunConfig {
            task,
            oracle,
            crystal_file: v.required("crystal.file")?.to_string(),
            lambda0: v.positive("cut.lambda0")?,
            cut,
            axis_plane: v.quantity("cut.axis_plane")?,
            length: v.positive("setup.L")?,
            fiber_waist: v.positive("setup.w")?,
            pump_waist: v.positive("setup.wP")?,
            offset,
            pump_width: v.positive("spectrum.pump")?,
            filter_width: v.positive("spectrum.filter")?,
            convention,
            scan,
            waist_geometry: if v.choice("scan.geometry")? == "optimized" {
                WaistGeometry::Optimized
            } else {
                WaistGeometry::Fixed
            },
            jsa_span: v.positive("jsa.span")?,
            jsa_points,
            optimize,
            quadrature,
            numeric,
            verify: v.boolean("numeric.verify")?,
            output_dir,
            output_name,
            base_dir: base_dir.to_path_buf(),
            resolved: BTreeMap::new(),
        };
        map.insert("output.name".into(), config.output_name.clone());
        Ok(RunConfig {
            resolved: map,
            ..config
        })
    }

    /// Absolute output directory.
    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    /// The resolved configuration as config text, one key per line.
    pub fn to_text(&self) -> String {
        self.resolved
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn validate_grid(prefix: &str, spec: &ScanSpec) -> Result<(), Error> {
    let key = |s: &str| format!("{prefix}{s}");
    let (from_key, to_key, points_key) = if prefix == "scan" {
        (key(".from"), key(".to"), key(".points"))
    } else {
        (key("_from"), key("_to"), key("_points"))
    };
    if spec.points == 0 {
        return Err(config_error(
            &points_key,
            "empty grid: need at least one point",
        ));
    }
    if !(spec.from > 0.0) {
        return Err(config_error(&from_key, "must be positive"));
    }
    if !(spec.to > 0.0) {
        return Err(config_error(&to_key, "must be positive"));
    }
    if spec.points > 1 && spec.from == spec.to {
        return Err(config_error(
            &to_key,
            "zero-length grid: from and to coincide",
        ));
    }
    Ok(())
}
