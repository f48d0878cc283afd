//! TOML run configuration.
//!
//! ```toml
//! [algebra]
//! name = "su(2)"            # or: table = "structure.json"
//!
//! [orbit]
//! z = [0.0, 0.0, 1.0]       # or: mu = [...]
//!
//! [connection]
//! label = "coadjoint-levi-civita"   # canonical | natural-torsion-free | custom
//! metric = "kahler"                 # or "killing"
//! # ell_file = "ell.json"           # required for custom
//!
//! [irreps]
//! cutoff = 10               # su(2): all 2j <= cutoff
//! builtin = ["adjoint"]     # spin-J, defining, symK, adjoint, with a trailing * for the dual
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: AlgebraSection,
    pub orbit: OrbitSection,
    #[serde(default)]
    pub connection: ConnectionSection,
    #[serde(default)]
    pub character: CharacterSection,
    #[serde(default)]
    pub spinor: SpinorSection,
    #[serde(default)]
    pub irreps: IrrepSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub oracle: OracleSection,
    /// Directory relative paths are resolved against; set by [`RunConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub name: Option<String>,
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    pub mu: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionKind {
    Canonical,
    NaturalTorsionFree,
    CoadjointLeviCivita,
    Custom,
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectionKind::Canonical => "canonical",
            ConnectionKind::NaturalTorsionFree => "natural-torsion-free",
            ConnectionKind::CoadjointLeviCivita => "coadjoint-levi-civita",
            ConnectionKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricChoice {
    Kahler,
    Killing,
}

impl fmt::Display for MetricChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricChoice::Kahler => "kahler",
            MetricChoice::Killing => "killing",
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSection {
    #[serde(default = "default_connection")]
    pub label: ConnectionKind,
    pub ell_file: Option<PathBuf>,
    #[serde(default = "default_metric")]
    pub metric: MetricChoice,
}

fn default_connection() -> ConnectionKind {
    ConnectionKind::CoadjointLeviCivita
}

fn default_metric() -> MetricChoice {
    MetricChoice::Kahler
}

impl Default for ConnectionSection {
    fn default() -> Self {
        ConnectionSection { label: default_connection(), ell_file: None, metric: default_metric() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterSection {
    /// Over the kil-orthonormal basis of 𝔨; omitted means trivial.
    pub weight: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinorSection {
    #[serde(default = "default_orientation")]
    pub orientation: i8,
}

fn default_orientation() -> i8 {
    1
}

impl Default for SpinorSection {
    fn default() -> Self {
        SpinorSection { orientation: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrrepSection {
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub builtin: Vec<String>,
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

fn default_cutoff() -> usize {
    10
}

impl Default for IrrepSection {
    fn default() -> Self {
        IrrepSection { cutoff: default_cutoff(), builtin: Vec::new(), files: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection { scale: 1.0, overrides: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    #[serde(default = "default_spectrum")]
    pub spectrum: String,
    #[serde(default = "default_report")]
    pub report: String,
}

fn default_spectrum() -> String {
    "spectrum.csv".into()
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, spectrum: default_spectrum(), report: default_report() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default)]
    pub disable: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_galerkin_two_j")]
    pub galerkin_max_two_j: usize,
    #[serde(default = "default_galerkin_angles")]
    pub galerkin_angles: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_grid() -> usize {
    64
}

fn default_galerkin_two_j() -> usize {
    6
}

fn default_galerkin_angles() -> usize {
    32
}

fn default_seed() -> u64 {
    2024
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            grid: default_grid(),
            galerkin_max_two_j: default_galerkin_two_j(),
            galerkin_angles: default_galerkin_angles(),
            seed: default_seed(),
        }
    }
}

/// Names of every check the report can contain, in report order.
pub const CHECK_NAMES: [&str; 12] = [
    "kahler_structure",
    "levi_civita_routes",
    "bracket_decomposition",
    "clifford_fock",
    "trace_criterion",
    "dirac_hermiticity",
    "self_adjointness_iff",
    "chirality_anticommutation",
    "modified_dirac",
    "divergence_quadrature",
    "galerkin_oracle",
    "metric_scaling",
];

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::from_toml(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks that need no algebra: field presence, exclusivity and the metric/connection rule.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.algebra.name, &self.algebra.table) {
            (Some(_), Some(_)) => return Err(field_err("algebra", "give either `name` or `table`, not both")),
            (None, None) => return Err(field_err("algebra", "one of `name` or `table` is required")),
            _ => {}
        }
        match (&self.orbit.mu, &self.orbit.z) {
            (Some(_), Some(_)) => return Err(field_err("orbit", "give either `mu` or `z`, not both")),
            (None, None) => return Err(field_err("orbit", "one of `mu` or `z` is required")),
            _ => {}
        }
        let conn = &self.connection;
        if conn.metric == MetricChoice::Killing
            && !matches!(conn.label, ConnectionKind::Canonical | ConnectionKind::Custom)
        {
            return Err(field_err(
                "connection.metric",
                format!("metric = \"killing\" allows only canonical or custom connections, got {}", conn.label),
            ));
        }
        match (conn.label, &conn.ell_file) {
            (ConnectionKind::Custom, None) => {
                return Err(field_err("connection.ell_file", "required when label = \"custom\""))
            }
            (ConnectionKind::Custom, Some(_)) => {}
            (_, Some(_)) => return Err(field_err("connection.ell_file", "only allowed when label = \"custom\"")),
            _ => {}
        }
        if self.spinor.orientation != 1 && self.spinor.orientation != -1 {
            return Err(field_err("spinor.orientation", "must be 1 or -1"));
        }
        if !(self.tolerances.scale > 0.0 && self.tolerances.scale.is_finite()) {
            return Err(field_err("tolerances.scale", "must be a positive number"));
        }
        for (name, v) in &self.tolerances.overrides {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(field_err(&format!("tolerances.overrides.{name}"), "unknown check"));
            }
            if !(*v > 0.0 && v.is_finite()) {
                return Err(field_err(&format!("tolerances.overrides.{name}"), "must be a positive number"));
            }
        }
        for name in &self.checks.disable {
            if !CHECK_NAMES.contains(&name.as_str()) {
                return Err(field_err("checks.disable", format!("unknown check `{name}`")));
            }
        }
        if self.oracle.grid == 0 || self.oracle.galerkin_angles == 0 {
            return Err(field_err("oracle", "grid sizes must be positive"));
        }
        Ok(())
    }

    /// Checks that need the algebra and orbit to be built.
    pub fn validate_dimensions(&self, dim: usize, dim_k: usize) -> Result<(), ConfigError> {
        let (field, v) = match (&self.orbit.mu, &self.orbit.z) {
            (Some(mu), _) => ("orbit.mu", mu),
            (_, Some(z)) => ("orbit.z", z),
            _ => unreachable!("validated"),
        };
        if v.len() != dim {
            return Err(field_err(field, format!("has {} entries, algebra has dimension {dim}", v.len())));
        }
        if let Some(w) = &self.character.weight {
            if w.len() != dim_k {
                return Err(field_err(
                    "character.weight",
                    format!("has {} entries, the stabilizer has dimension {dim_k}", w.len()),
                ));
            }
        }
        Ok(())
    }

    pub fn check_enabled(&self, name: &str) -> bool {
        !self.checks.disable.iter().any(|d| d == name)
    }

    pub fn tolerance(&self, name: &str, default: f64, cli_scale: f64) -> f64 {
        self.tolerances.overrides.get(name).copied().unwrap_or(default) * self.tolerances.scale * cli_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml(s, Path::new("."))
    }

    const BASE: &str = "[algebra]\nname = \"su(2)\"\n[orbit]\nz = [0.0, 0.0, 1.0]\n";

    #[test]
    fn defaults() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.connection.label, ConnectionKind::CoadjointLeviCivita);
        assert_eq!(c.connection.metric, MetricChoice::Kahler);
        assert_eq!(c.irreps.cutoff, 10);
        assert_eq!(c.spinor.orientation, 1);
        assert!(c.check_enabled("metric_scaling"));
        assert_eq!(c.tolerance("trace_criterion", 1e-9, 2.0), 2e-9);
    }

    #[test]
    fn killing_metric_rejects_levi_civita() {
        let s = format!("{BASE}[connection]\nlabel = \"coadjoint-levi-civita\"\nmetric = \"killing\"\n");
        match parse(&s) {
            Err(ConfigError::Field { field, .. }) => assert_eq!(field, "connection.metric"),
            other => panic!("{other:?}"),
        }
        let ok = format!("{BASE}[connection]\nlabel = \"canonical\"\nmetric = \"killing\"\n");
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn custom_needs_file() {
        let s = format!("{BASE}[connection]\nlabel = \"custom\"\n");
        assert!(matches!(parse(&s), Err(ConfigError::Field { field, .. }) if field == "connection.ell_file"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("[algebra]\nname = \"su(2)\"\n[orbit]\nz = [0.0, 0.0, 1.0]\nbogus = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn dimension_checks() {
        let c = parse(BASE).unwrap();
        assert!(c.validate_dimensions(3, 1).is_ok());
        assert!(matches!(c.validate_dimensions(8, 2), Err(ConfigError::Field { field, .. }) if field == "orbit.z"));
        let w = parse(&format!("{BASE}[character]\nweight = [0.0, 1.0]\n")).unwrap();
        assert!(
            matches!(w.validate_dimensions(3, 1), Err(ConfigError::Field { field, .. }) if field == "character.weight")
        );
    }

    #[test]
    fn unknown_check_names_rejected() {
        assert!(parse(&format!("{BASE}[checks]\ndisable = [\"nope\"]\n")).is_err());
        assert!(parse(&format!("{BASE}[tolerances.overrides]\nnope = 1.0\n")).is_err());
    }
}
