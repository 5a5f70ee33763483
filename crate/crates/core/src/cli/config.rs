//! Run configuration: a flat, commented `key = value` file or the
//! equivalent JSON document.
//!
//! Flat keys are dotted paths into the JSON form (`policy.base_grid = 64`
//! is `{"policy": {"base_grid": 64}}`). A value containing commas is a
//! list. When a key has both a value and dotted children, the value is the
//! section's `kind`, so
//!
//! ```text
//! surface = catenoid
//! surface.neck = 1.5
//! surface.placement = through
//! ```
//!
//! is `{"surface": {"kind": "catenoid", "neck": 1.5, "placement": "through"}}`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fibration::{ProblemConfig, Regime};
use crate::levelset::SliceGrid;
use crate::quadrature::{default_classical_grid, default_moving_grid, geometric_grid, IntegrationPolicy};
use crate::spaceform::{Curvature, SpaceForm};
use crate::surfaces::{Surface, SurfaceSpec};

/// A list of `t` values: `default`, `geometric LO HI N`, `linear LO HI N`,
/// or explicit values.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum GridSpec {
    #[default]
    Default,
    Geometric { lo: f64, hi: f64, n: usize },
    Linear { lo: f64, hi: f64, n: usize },
    Values(Vec<f64>),
}

impl GridSpec {
    pub fn resolve(&self, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>> {
        match *self {
            GridSpec::Default => Ok(default()),
            GridSpec::Geometric { lo, hi, n } => geometric_grid(lo, hi, n),
            GridSpec::Linear { lo, hi, n } => {
                if !(hi >= lo && n >= 1) || (n == 1 && hi != lo) {
                    return Err(Error::Precondition(format!("bad linear grid ({lo}, {hi}, {n})")));
                }
                Ok((0..n)
                    .map(|i| match i {
                        0 => lo,
                        _ if i == n - 1 => hi,
                        _ => lo + (hi - lo) * i as f64 / (n - 1) as f64,
                    })
                    .collect())
            }
            GridSpec::Values(ref v) => Ok(v.clone()),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Default => write!(f, "default"),
            GridSpec::Geometric { lo, hi, n } => write!(f, "geometric {lo} {hi} {n}"),
            GridSpec::Linear { lo, hi, n } => write!(f, "linear {lo} {hi} {n}"),
            GridSpec::Values(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(", "))
            }
        }
    }
}

fn parse_grid_text(text: &str) -> std::result::Result<GridSpec, String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let triple = |w: &[&str]| -> std::result::Result<(f64, f64, usize), String> {
        if w.len() != 3 {
            return Err(format!("expected `{} LO HI N`", words[0]));
        }
        let lo = w[0].parse::<f64>().map_err(|e| format!("LO: {e}"))?;
        let hi = w[1].parse::<f64>().map_err(|e| format!("HI: {e}"))?;
        let n = w[2].parse::<usize>().map_err(|e| format!("N: {e}"))?;
        Ok((lo, hi, n))
    };
    match words.first().copied() {
        Some("default") if words.len() == 1 => Ok(GridSpec::Default),
        Some("geometric") => triple(&words[1..]).map(|(lo, hi, n)| GridSpec::Geometric { lo, hi, n }),
        Some("linear") => triple(&words[1..]).map(|(lo, hi, n)| GridSpec::Linear { lo, hi, n }),
        _ => text
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(GridSpec::Values)
            .map_err(|e| format!("grid must be default, geometric LO HI N, linear LO HI N or a list: {e}")),
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GridSpec::Values(v) => v.serialize(s),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            Many(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(x) => Ok(GridSpec::Values(vec![x])),
            Raw::Many(v) => Ok(GridSpec::Values(v)),
            Raw::Text(t) => parse_grid_text(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Accepts a single value where a list is expected.
fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: DeserializeOwned,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw<T> {
        Many(Vec<T>),
        One(T),
    }
    Ok(match Raw::<T>::deserialize(d)? {
        Raw::Many(v) => v,
        Raw::One(x) => vec![x],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Divergence,
    Metric,
    Lemma,
    ClassicalA,
    ClassicalI,
    ClassicalBoundary,
    Moving,
    Area,
    Chain,
    Control,
}

impl SuiteName {
    pub const ALL: [SuiteName; 10] = [
        SuiteName::Divergence,
        SuiteName::Metric,
        SuiteName::Lemma,
        SuiteName::ClassicalA,
        SuiteName::ClassicalI,
        SuiteName::ClassicalBoundary,
        SuiteName::Moving,
        SuiteName::Area,
        SuiteName::Chain,
        SuiteName::Control,
    ];
}

/// `auto` runs every suite whose hypotheses hold and records the others as
/// skipped; an explicit list treats a failed hypothesis as a configuration
/// error.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Suites {
    #[default]
    Auto,
    List(Vec<SuiteName>),
}

impl Serialize for Suites {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Suites::Auto => s.serialize_str("auto"),
            Suites::List(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Suites {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names: Vec<String> = one_or_many(d)?;
        if names.len() == 1 && names[0] == "auto" {
            return Ok(Suites::Auto);
        }
        names
            .iter()
            .map(|n| SuiteName::deserialize(serde::de::value::StrDeserializer::<D::Error>::new(n)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Suites::List)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsetSpec {
    #[serde(deserialize_with = "one_or_many")]
    pub t: Vec<f64>,
    pub cells: usize,
    pub subdivisions: usize,
    pub far_extent: f64,
    /// Points on the emitted `dB_R` circle.
    pub boundary_samples: usize,
}

impl Default for LevelsetSpec {
    fn default() -> Self {
        let g = SliceGrid::default();
        LevelsetSpec {
            t: vec![0.01, 0.1, 0.25, 0.5, 0.75, 1.0],
            cells: g.cells,
            subdivisions: g.subdivisions,
            far_extent: g.far_extent,
            boundary_samples: 400,
        }
    }
}

impl LevelsetSpec {
    pub fn grid(&self) -> SliceGrid {
        SliceGrid {
            cells: self.cells,
            subdivisions: self.subdivisions,
            far_extent: self.far_extent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(deserialize_with = "one_or_many")]
    pub curvature: Vec<i64>,
    #[serde(rename = "R")]
    pub radius: GridSpec,
    /// Values of `s_y` as fractions of `R`.
    pub s_y_fraction: GridSpec,
    /// Levels at which `Q_{i,j}` is evaluated on feasible rows; empty for a
    /// feasibility-only sweep.
    #[serde(deserialize_with = "one_or_many")]
    pub t: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            curvature: vec![-1, 0, 1],
            radius: GridSpec::Values(vec![0.5, 1.0]),
            s_y_fraction: GridSpec::Linear { lo: 0.0, hi: 0.9, n: 10 },
            t: vec![0.01, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub curvature: i64,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(default)]
    pub s_y: f64,
    #[serde(default = "one")]
    pub weight_i: u8,
    #[serde(default = "one")]
    pub weight_j: u8,
    pub surface: SurfaceSpec,
    /// Grid for the moving-centre suite, in `(0, 1]`.
    #[serde(default)]
    pub t_grid: GridSpec,
    /// Grid for the classical suites, in `(0, R]`.
    #[serde(default)]
    pub classical_grid: GridSpec,
    /// Levels for the lemma conditions.
    #[serde(default = "default_lemma_grid")]
    pub lemma_grid: GridSpec,
    /// Levels at which the excess identity is checked.
    #[serde(default = "default_excess", deserialize_with = "one_or_many")]
    pub excess_at: Vec<f64>,
    #[serde(default)]
    pub policy: IntegrationPolicy,
    #[serde(default)]
    pub suites: Suites,
    /// Random points per sampling suite.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Random points per level for the lemma conditions.
    #[serde(default = "default_lemma_samples")]
    pub lemma_samples: usize,
    /// Level of the mean-curvature pairing of the negative control.
    #[serde(default = "one_f")]
    pub control_t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub levelsets: LevelsetSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    /// Source lines of flat-file keys, for diagnostics.
    #[serde(skip)]
    pub lines: BTreeMap<String, usize>,
}

fn one() -> u8 {
    1
}

fn one_f() -> f64 {
    1.0
}

fn default_samples() -> usize {
    1000
}

fn default_lemma_samples() -> usize {
    200
}

fn default_lemma_grid() -> GridSpec {
    GridSpec::Values(vec![0.01, 0.1, 0.5, 1.0])
}

fn default_excess() -> Vec<f64> {
    vec![0.1, 0.3, 0.6]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(0, "config", format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if is_json {
            Self::from_json(&text)
        } else {
            Self::from_flat(&text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let line = e.inner().line();
            Error::config(line, e.path().to_string(), e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_flat(text: &str) -> Result<Self> {
        let (value, lines) = flat_to_json(text)?;
        let mut cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(line_of(&lines, &path), path, e.inner().to_string())
        })?;
        cfg.lines = lines;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn line(&self, field: &str) -> usize {
        line_of(&self.lines, field)
    }

    fn field_error(&self, field: &str, message: impl Into<String>) -> Error {
        Error::config(self.line(field), field, message)
    }

    fn validate(&self) -> Result<()> {
        Curvature::from_sign(self.curvature).map_err(|e| self.field_error("curvature", e.to_string()))?;
        if self.n < 2 {
            return Err(self.field_error("n", "ambient dimension must be at least 2"));
        }
        if !(self.k >= 2 && self.k < self.n) {
            return Err(self.field_error("k", format!("need 2 <= k < n, got k = {}, n = {}", self.k, self.n)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(self.field_error("R", "radius must be positive"));
        }
        if !(self.s_y >= 0.0 && self.s_y < self.radius) {
            return Err(self.field_error("s_y", "need 0 <= s_y < R"));
        }
        Regime::new(self.weight_i, self.weight_j).map_err(|e| self.field_error("weight_i", e.to_string()))?;
        self.policy.validate().map_err(|e| self.field_error("policy", e.to_string()))?;
        if self.samples == 0 {
            return Err(self.field_error("samples", "must be positive"));
        }
        if self.lemma_samples == 0 {
            return Err(self.field_error("lemma_samples", "must be positive"));
        }
        if !(self.control_t > 0.0 && self.control_t <= 1.0) {
            return Err(self.field_error("control_t", "must lie in (0, 1]"));
        }
        for (field, grid) in [
            ("t_grid", &self.t_grid),
            ("classical_grid", &self.classical_grid),
            ("lemma_grid", &self.lemma_grid),
        ] {
            grid.resolve(Vec::new).map_err(|e| self.field_error(field, e.to_string()))?;
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<ProblemConfig> {
        let kappa = Curvature::from_sign(self.curvature).map_err(|e| self.field_error("curvature", e.to_string()))?;
        let form = SpaceForm::new(kappa, self.n).map_err(|e| self.field_error("n", e.to_string()))?;
        let regime = Regime::new(self.weight_i, self.weight_j)
            .map_err(|e| self.field_error("weight_i", e.to_string()))?;
        ProblemConfig::new(form, self.k, self.radius, self.s_y, regime).map_err(|e| match e {
            Error::Hypothesis(_) => e,
            other => self.field_error("R", other.to_string()),
        })
    }

    pub fn build_surface(&self, config: &ProblemConfig) -> Result<Surface> {
        self.surface.build(config).map_err(|e| self.field_error("surface", e.to_string()))
    }

    pub fn moving_grid(&self) -> Result<Vec<f64>> {
        self.t_grid
            .resolve(default_moving_grid)
            .map_err(|e| self.field_error("t_grid", e.to_string()))
    }

    pub fn classical_grid(&self) -> Result<Vec<f64>> {
        let r = self.radius;
        self.classical_grid
            .resolve(|| default_classical_grid(r))
            .map_err(|e| self.field_error("classical_grid", e.to_string()))
    }

    pub fn lemma_grid(&self) -> Result<Vec<f64>> {
        self.lemma_grid
            .resolve(|| default_lemma_grid().resolve(Vec::new).unwrap_or_default())
            .map_err(|e| self.field_error("lemma_grid", e.to_string()))
    }
}

/// Line of `path`, of its closest recorded ancestor, or of its first
/// recorded child; 0 when unknown.
fn line_of(lines: &BTreeMap<String, usize>, path: &str) -> usize {
    let mut p = path.split('[').next().unwrap_or("").to_string();
    let prefix = format!("{p}.");
    if let Some(l) = lines.iter().filter(|(k, _)| k.starts_with(&prefix)).map(|(_, l)| *l).min() {
        if !lines.contains_key(&p) {
            return l;
        }
    }
    loop {
        if let Some(&l) = lines.get(&p) {
            return l;
        }
        match p.rfind('.') {
            Some(i) => p.truncate(i),
            None => return 0,
        }
    }
}

fn scalar(token: &str) -> Value {
    let t = token.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(u) = t.parse::<u64>() {
        return Value::from(u);
    }
    if let Ok(x) = t.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(x) {
            return Value::Number(n);
        }
    }
    match t {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(t.to_string()),
    }
}

/// Parses the flat format into its JSON equivalent and the line of each key.
pub fn flat_to_json(text: &str) -> Result<(Value, BTreeMap<String, usize>)> {
    let mut root = Map::new();
    let mut lines = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::config(lineno, content, "expected `key = value`"));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.split('.').any(|p| p.is_empty() || p.contains(char::is_whitespace)) {
            return Err(Error::config(lineno, key, "malformed key"));
        }
        if let Some(prev) = lines.insert(key.to_string(), lineno) {
            return Err(Error::config(lineno, key, format!("duplicate key (first set on line {prev})")));
        }
        let v = if value.contains(',') {
            Value::Array(value.split(',').filter(|p| !p.trim().is_empty()).map(scalar).collect())
        } else if value.is_empty() {
            Value::Array(Vec::new())
        } else {
            scalar(value)
        };
        insert(&mut root, key, v).map_err(|m| Error::config(lineno, key, m))?;
    }
    Ok((Value::Object(root), lines))
}

fn insert(map: &mut Map<String, Value>, key: &str, v: Value) -> std::result::Result<(), String> {
    match key.split_once('.') {
        None => match map.get_mut(key) {
            Some(Value::Object(section)) => {
                section.insert("kind".into(), v);
                Ok(())
            }
            Some(_) => Err("duplicate key".into()),
            None => {
                map.insert(key.to_string(), v);
                Ok(())
            }
        },
        Some((head, rest)) => {
            let entry = map.entry(head.to_string()).or_insert_with(|| Value::Object(Map::new()));
            if !entry.is_object() {
                let kind = entry.take();
                let mut section = Map::new();
                section.insert("kind".into(), kind);
                *entry = Value::Object(section);
            }
            insert(entry.as_object_mut().expect("object"), rest, v)
        }
    }
}
