//! Run configuration. Every physical quantity is a `{ value, unit }` table;
//! a missing unit is a schema error, never a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::KnotSequence;
use crate::error::{Error, Result};
use crate::quantities::constants::{BOHR_NM, DALTON_ME, HARTREE_KHZ, INTENSITY_AU_W_PER_CM2};
use crate::quantities::AtomSpecies;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityList {
    pub values: Vec<f64>,
    pub unit: String,
}

/// Physical dimension of a configured quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Energy,
    Field,
    Mass,
    Polarizability,
    Intensity,
    /// Atomic units only (dispersion coefficients).
    AtomicUnits,
}

/// Recoil energies available to energy units `Er1`, `Er2`, `Er_rel`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecoilContext {
    pub er1: Option<f64>,
    pub er2: Option<f64>,
    pub er_rel: Option<f64>,
}

fn unit_scale(unit: &str, dim: Dim, ctx: &RecoilContext) -> Option<f64> {
    let u = unit.trim();
    Some(match (dim, u) {
        (Dim::Length, "a0" | "bohr") => 1.0,
        (Dim::Length, "nm") => 1.0 / BOHR_NM,
        (Dim::Length, "um") => 1e3 / BOHR_NM,
        (Dim::Energy, "hartree" | "Eh") => 1.0,
        (Dim::Energy, "kHz") => 1.0 / HARTREE_KHZ,
        (Dim::Energy, "Hz") => 1e-3 / HARTREE_KHZ,
        (Dim::Energy, "MHz") => 1e3 / HARTREE_KHZ,
        (Dim::Energy, "Er1") => ctx.er1?,
        (Dim::Energy, "Er2") => ctx.er2?,
        (Dim::Energy, "Er_rel") => ctx.er_rel?,
        (Dim::Field, "G") => 1.0,
        (Dim::Field, "mT") => 10.0,
        (Dim::Mass, "u" | "Da") => DALTON_ME,
        (Dim::Mass, "me") => 1.0,
        (Dim::Polarizability, "au") => 1.0,
        (Dim::Intensity, "W/cm2") => 1.0 / INTENSITY_AU_W_PER_CM2,
        (Dim::Intensity, "au") => 1.0,
        (Dim::AtomicUnits, "au") => 1.0,
        _ => return None,
    })
}

fn convert_named(field: &str, value: f64, unit: &str, dim: Dim, ctx: &RecoilContext) -> Result<f64> {
    if !value.is_finite() {
        return Err(cfg_err(field, "value is not finite"));
    }
    unit_scale(unit, dim, ctx)
        .map(|s| value * s)
        .ok_or_else(|| cfg_err(field, format!("unit '{unit}' is not a known {dim:?} unit here")))
}

impl Quantity {
    pub fn new(value: f64, unit: &str) -> Self {
        Self { value, unit: unit.into() }
    }

    /// Value in atomic units (a₀, hartree, mₑ, W/cm² → a.u.) or gauss.
    pub fn to_base(&self, field: &str, dim: Dim) -> Result<f64> {
        self.to_base_with(field, dim, &RecoilContext::default())
    }

    pub fn to_base_with(&self, field: &str, dim: Dim, ctx: &RecoilContext) -> Result<f64> {
        convert_named(field, self.value, &self.unit, dim, ctx)
    }
}

impl QuantityList {
    pub fn to_base(&self, field: &str, dim: Dim) -> Result<Vec<f64>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| convert_named(&format!("{field}[{i}]"), v, &self.unit, dim, &RecoilContext::default()))
            .collect()
    }
}

pub(crate) fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Solve,
    Sweep,
    Densities,
    Cuts,
    Map,
    Fit,
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Task::Solve),
            "sweep" => Ok(Task::Sweep),
            "densities" => Ok(Task::Densities),
            "cuts" => Ok(Task::Cuts),
            "map" => Ok(Task::Map),
            "fit" => Ok(Task::Fit),
            _ => Err(cfg_err("task", format!("unknown task '{s}' (solve, sweep, densities, cuts, map, fit)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomConfig {
    Catalog(String),
    Explicit(ExplicitAtom),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitAtom {
    pub name: String,
    pub mass: Quantity,
    pub polarizability: Quantity,
}

impl AtomConfig {
    pub fn resolve(&self, field: &str) -> Result<AtomSpecies> {
        match self {
            AtomConfig::Catalog(name) => AtomSpecies::from_catalog(name).map_err(|e| cfg_err(field, e.to_string())),
            AtomConfig::Explicit(a) => AtomSpecies::new(
                a.name.clone(),
                a.mass.to_base(&format!("{field}.mass"), Dim::Mass)?,
                a.polarizability.to_base(&format!("{field}.polarizability"), Dim::Polarizability)?,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsConfig {
    pub first: AtomConfig,
    pub second: AtomConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub wavelength: Quantity,
    /// Depth of the first atom; energy units incl. `Er1`, `Er2`, `Er_rel`.
    pub depth_first: Option<Quantity>,
    pub depth_second: Option<Quantity>,
    /// Alternative to explicit depths: V_j = α_j I.
    pub intensity: Option<Quantity>,
    /// Taylor orders to solve; the ledger needs both 2 and 6.
    #[serde(default = "default_orders")]
    pub taylor_orders: Vec<u32>,
}

fn default_orders() -> Vec<u32> {
    vec![2, 6]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    None,
    Synthetic,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongRangeConfig {
    /// Asymptote of the tabulated branch relative to its zero.
    pub dissociation: Quantity,
    pub c6: Quantity,
    pub c8: Quantity,
    pub c10: Quantity,
    /// Exchange term C r^α e^{−βr}; omitted means none.
    pub exchange_c: Option<Quantity>,
    pub exchange_alpha: Option<f64>,
    pub exchange_beta: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub kind: InteractionKind,
    /// Synthetic well depth.
    pub depth: Option<Quantity>,
    pub curve_file: Option<PathBuf>,
    pub r_sr_end: Option<Quantity>,
    pub r_lr_start: Option<Quantity>,
    pub long_range: Option<LongRangeConfig>,
    /// Tune the inner wall to this scattering length...
    pub target_a_sc: Option<Quantity>,
    /// ...or apply this inner-wall shift directly.
    pub wall_shift: Option<Quantity>,
    /// Let tuning cross a pole of a_sc into a neighbouring branch.
    #[serde(default)]
    pub allow_branch_change: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KnotConfig {
    Linear { r_max: Quantity, intervals: usize, order: usize },
    Geometric { r_max: Quantity, intervals: usize, first_width: Quantity, order: usize },
    Composite { split: Quantity, r_max: Quantity, linear_intervals: usize, geometric_intervals: usize, order: usize },
}

impl KnotConfig {
    pub fn build(&self, field: &str) -> Result<KnotSequence> {
        let len = |q: &Quantity, k: &str| q.to_base(&format!("{field}.{k}"), Dim::Length);
        let r = match self {
            KnotConfig::Linear { r_max, intervals, order } => KnotSequence::linear(0.0, len(r_max, "r_max")?, *intervals, *order),
            KnotConfig::Geometric { r_max, intervals, first_width, order } => {
                KnotSequence::geometric(0.0, len(r_max, "r_max")?, *intervals, len(first_width, "first_width")?, *order)
            }
            KnotConfig::Composite { split, r_max, linear_intervals, geometric_intervals, order } => KnotSequence::composite(
                len(split, "split")?,
                len(r_max, "r_max")?,
                *linear_intervals,
                *geometric_intervals,
                *order,
            ),
        };
        r.map_err(|e| cfg_err(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub com: KnotConfig,
    pub rel: KnotConfig,
    pub l_max: u32,
    /// Defaults to `l_max`.
    pub l_max_com: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorChoice {
    Even,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiConfig {
    #[serde(default = "default_com")]
    pub com_orbitals: usize,
    #[serde(default = "default_rel")]
    pub rel_orbitals: usize,
    #[serde(default = "default_sector")]
    pub sector: SectorChoice,
    /// Lowest CI states written per level.
    #[serde(default = "default_report")]
    pub report_states: usize,
}

fn default_com() -> usize {
    crate::solver::DEFAULT_COM_ORBITALS
}
fn default_rel() -> usize {
    crate::solver::DEFAULT_REL_ORBITALS
}
fn default_sector() -> SectorChoice {
    SectorChoice::Even
}
fn default_report() -> usize {
    10
}

impl Default for CiConfig {
    fn default() -> Self {
        Self { com_orbitals: default_com(), rel_orbitals: default_rel(), sector: default_sector(), report_states: default_report() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub a_sc: QuantityList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default = "default_density_points")]
    pub points: usize,
    /// Defaults to the REL basis extent.
    pub r_max: Option<Quantity>,
}

fn default_density_points() -> usize {
    2001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutConfig {
    #[serde(default = "default_cut_points")]
    pub points: usize,
    /// Defaults to λ/2.
    pub half_width: Option<Quantity>,
    #[serde(default = "default_cut_tag")]
    pub tag: String,
}

fn default_cut_points() -> usize {
    201
}
fn default_cut_tag() -> String {
    "1ti".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub b0: Quantity,
    pub delta_b: Quantity,
    pub a_bg: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    /// Full solves over the sweep grid (plus a_bg).
    Solve,
    /// An energies.csv written by an earlier sweep.
    File,
    /// Harmonic pseudopotential energies from the Gamma relation.
    Pseudopotential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub resonance: ResonanceConfig,
    pub source: CurveSource,
    pub energies_file: Option<PathBuf>,
    /// Level label whose energies feed the curve.
    #[serde(default = "default_map_level")]
    pub level: String,
    /// a_sc grid for `pseudopotential` curves.
    pub a_sc: Option<QuantityList>,
}

fn default_map_level() -> String {
    "CI6".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data_file: PathBuf,
    /// Subset of b0, delta_b, a_bg.
    pub free: Vec<String>,
    /// Scan half-widths, one per free parameter.
    pub half_width: Vec<Quantity>,
    #[serde(default = "default_scan")]
    pub scan_points: usize,
}

fn default_scan() -> usize {
    101
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub atoms: AtomsConfig,
    pub trap: TrapConfig,
    pub interaction: InteractionConfig,
    pub basis: Option<BasisConfig>,
    #[serde(default)]
    pub ci: CiConfig,
    pub sweep: Option<SweepConfig>,
    pub densities: Option<DensityConfig>,
    pub cuts: Option<CutConfig>,
    pub map: Option<MapConfig>,
    pub fit: Option<FitConfig>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl RunConfig {
    pub fn parse(text: &str, format: Format, path: &Path) -> Result<Self> {
        let cfg: RunConfig = match format {
            Format::Toml => toml::from_str(text).map_err(|e| {
                let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0);
                Error::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
            })?,
            Format::Json => serde_json::from_str(text)
                .map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { context: format!("reading {}", path.display()), source: e })?;
        let format = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) { Format::Json } else { Format::Toml };
        let mut cfg = Self::parse(&text, format, path)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok((cfg, text))
    }

    /// Relative data paths are taken relative to the config file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.interaction.curve_file.as_mut() {
            fix(p);
        }
        if let Some(m) = self.map.as_mut() {
            if let Some(p) = m.energies_file.as_mut() {
                fix(p);
            }
        }
        if let Some(f) = self.fit.as_mut() {
            fix(&mut f.data_file);
        }
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let t = &self.trap;
        match (&t.depth_first, &t.depth_second, &t.intensity) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            _ => return Err(cfg_err("trap", "give either depth_first and depth_second, or intensity")),
        }
        if t.taylor_orders.is_empty() {
            return Err(cfg_err("trap.taylor_orders", "at least one order is required"));
        }
        for &n in &t.taylor_orders {
            crate::potentials::lattice::check_order(n).map_err(|e| cfg_err("trap.taylor_orders", e.to_string()))?;
        }
        let i = &self.interaction;
        match i.kind {
            InteractionKind::None => {
                if i.target_a_sc.is_some() || i.wall_shift.is_some() {
                    return Err(cfg_err("interaction", "kind = \"none\" cannot be tuned"));
                }
            }
            InteractionKind::Synthetic => {}
            InteractionKind::Table => {
                if i.curve_file.is_none() || i.r_sr_end.is_none() || i.r_lr_start.is_none() || i.long_range.is_none() {
                    return Err(cfg_err("interaction", "kind = \"table\" needs curve_file, r_sr_end, r_lr_start and long_range"));
                }
            }
        }
        if i.target_a_sc.is_some() && i.wall_shift.is_some() {
            return Err(cfg_err("interaction", "target_a_sc and wall_shift are mutually exclusive"));
        }
        let needs_solve = !matches!(
            (self.task, self.map.as_ref().map(|m| m.source)),
            (Task::Map | Task::Fit, Some(CurveSource::File | CurveSource::Pseudopotential))
        );
        if needs_solve && self.basis.is_none() {
            return Err(cfg_err("basis", "required for this task"));
        }
        match self.task {
            Task::Sweep if self.sweep.is_none() => return Err(cfg_err("sweep", "task = \"sweep\" needs a [sweep] table")),
            Task::Map | Task::Fit => {
                let m = self.map.as_ref().ok_or_else(|| cfg_err("map", "map and fit tasks need a [map] table"))?;
                match m.source {
                    CurveSource::File if m.energies_file.is_none() => {
                        return Err(cfg_err("map.energies_file", "required for source = \"file\""))
                    }
                    CurveSource::Solve if self.sweep.is_none() => {
                        return Err(cfg_err("sweep", "source = \"solve\" needs a [sweep] a_sc grid"))
                    }
                    CurveSource::Pseudopotential if m.a_sc.is_none() => {
                        return Err(cfg_err("map.a_sc", "required for source = \"pseudopotential\""))
                    }
                    _ => {}
                }
                if self.task == Task::Fit {
                    let f = self.fit.as_ref().ok_or_else(|| cfg_err("fit", "task = \"fit\" needs a [fit] table"))?;
                    if f.free.is_empty() || f.free.len() != f.half_width.len() {
                        return Err(cfg_err("fit", "free and half_width must be non-empty and of equal length"));
                    }
                    for name in &f.free {
                        if !matches!(name.as_str(), "b0" | "delta_b" | "a_bg") {
                            return Err(cfg_err("fit.free", format!("unknown parameter '{name}'")));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
task = "solve"
[atoms]
first = "Rb87"
second = "K40"
[trap]
wavelength = { value = 1030.0, unit = "nm" }
depth_first = { value = 40.0, unit = "Er1" }
depth_second = { value = 37.2, unit = "Er1" }
[interaction]
kind = "none"
[basis]
l_max = 1
com = { kind = "linear", r_max = { value = 0.5, unit = "um" }, intervals = 10, order = 6 }
rel = { kind = "linear", r_max = { value = 0.6, unit = "um" }, intervals = 10, order = 6 }
"#;

    #[test]
    fn parses_toml_with_units() {
        let c = RunConfig::parse(BASE, Format::Toml, Path::new("x.toml")).unwrap();
        assert_eq!(c.task, Task::Solve);
        assert_eq!(c.trap.taylor_orders, vec![2, 6]);
        let w = c.trap.wavelength.to_base("trap.wavelength", Dim::Length).unwrap();
        assert!((w - 1030.0 / BOHR_NM).abs() < 1e-9);
        let seq = c.basis.unwrap().rel.build("basis.rel").unwrap();
        assert!((seq.breakpoints().last().unwrap() - 600.0 / BOHR_NM).abs() < 1e-9);
    }

    #[test]
    fn missing_unit_is_rejected() {
        let bad = BASE.replace("{ value = 1030.0, unit = \"nm\" }", "{ value = 1030.0 }");
        let e = RunConfig::parse(&bad, Format::Toml, Path::new("x.toml")).unwrap_err();
        match e {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 7, "{message}");
                assert!(message.contains("unit"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bare = BASE.replace("{ value = 1030.0, unit = \"nm\" }", "1030.0");
        assert!(RunConfig::parse(&bare, Format::Toml, Path::new("x.toml")).is_err());
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let q = Quantity::new(3.0, "kHz");
        assert!(matches!(q.to_base("trap.wavelength", Dim::Length), Err(Error::Config { .. })));
        // Recoil units need a context.
        assert!(Quantity::new(1.0, "Er1").to_base("x", Dim::Energy).is_err());
    }

    #[test]
    fn unknown_fields_and_cross_checks() {
        let extra = BASE.replace("kind = \"none\"", "kind = \"none\"\ncolour = 3");
        assert!(RunConfig::parse(&extra, Format::Toml, Path::new("x.toml")).is_err());
        let tuned = BASE.replace("kind = \"none\"", "kind = \"none\"\ntarget_a_sc = { value = 1.0, unit = \"a0\" }");
        assert!(matches!(RunConfig::parse(&tuned, Format::Toml, Path::new("x.toml")), Err(Error::Config { .. })));
        let sweep = BASE.replace("task = \"solve\"", "task = \"sweep\"");
        assert!(matches!(RunConfig::parse(&sweep, Format::Toml, Path::new("x.toml")), Err(Error::Config { .. })));
    }

    #[test]
    fn json_is_accepted() {
        let c = RunConfig::parse(BASE, Format::Toml, Path::new("x.toml")).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let d = RunConfig::parse(&text, Format::Json, Path::new("x.json")).unwrap();
        assert_eq!(c, d);
    }
}
