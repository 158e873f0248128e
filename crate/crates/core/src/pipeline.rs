//! Configuration-driven runs: build the system once, solve one or many
//! scattering lengths, and write CSV/JSON artifacts plus a manifest.
//!
//! Floats are written as `{:.16e}` (17 significant digits) so identical
//! configurations give byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::basis::BSplineBasis;
use crate::ci::{ledger, run_ci, CiOptions, CiResult, EnergyLedger, StateTag};
use crate::config::{
    cfg_err, CurveSource, Dim, InteractionKind, RecoilContext, RunConfig, SectorChoice, Task,
};
use crate::error::{Error, Result};
use crate::feshbach::{
    binding_energy_curve, energy_dependent_asc, fit_resonance, pseudopotential_curve, read_experimental_csv,
    BindingEnergyCurve, EnergySample, FeshbachParams, FitOptions, FitParam, FitReport, LevelCurve,
};
use crate::observables::{
    difference_cut, radial_pair_density, uniform_grid, wavefunction_cut, AbsoluteCut, CutGrid, DifferenceKind, Level,
    PairWavefunction, RadialDensity,
};
use crate::potentials::{
    build_interaction, io::read_curve_table, separate_lattice, synthetic_curve, LongRange, NoInteraction, PotentialCurve,
    SeparatedLatticePolynomial, SyntheticCurveSpec, DEFAULT_JOIN_TOLERANCE,
};
use crate::quantities::constants::{BOHR_NM, INTENSITY_AU_W_PER_CM2};
use crate::quantities::{derive_pair_parameters, hartree_to_khz, AtomSpecies, PairParameters, TrapSpec};
use crate::scattering::{extract_scattering_length, tune_to_scattering_length, ScatteringOptions, TuneOptions};
use crate::solver::{classify, solve, HamiltonianSpec, OrbitalSet, SharedPotential};

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything that does not depend on the scattering length.
pub struct System {
    pub atoms: [AtomSpecies; 2],
    pub trap: TrapSpec,
    pub pair: PairParameters,
    /// (Taylor order, separated polynomial), in configuration order.
    pub polys: Vec<(u32, SeparatedLatticePolynomial)>,
    pub com_basis: Option<Arc<BSplineBasis>>,
    pub rel_basis: Option<Arc<BSplineBasis>>,
    pub l_max: u32,
    pub l_max_com: u32,
    /// Unshifted (or fixed-shift) interaction; None for kind = "none".
    pub curve: Option<PotentialCurve>,
    pub ci: CiOptions,
    pub report_states: usize,
    pub allow_branch_change: bool,
}

impl System {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let first = cfg.atoms.first.resolve("atoms.first")?;
        let second = cfg.atoms.second.resolve("atoms.second")?;
        let t = &cfg.trap;
        let wavelength = t.wavelength.to_base("trap.wavelength", Dim::Length)?;
        let k = 2.0 * std::f64::consts::PI / wavelength;
        let mu = first.mass * second.mass / (first.mass + second.mass);
        let ctx = RecoilContext {
            er1: Some(first.recoil_energy(wavelength)),
            er2: Some(second.recoil_energy(wavelength)),
            er_rel: Some(k * k / (2.0 * mu)),
        };
        let order0 = t.taylor_orders[0];
        let trap = match (&t.depth_first, &t.depth_second, &t.intensity) {
            (Some(d1), Some(d2), None) => TrapSpec::isotropic(
                wavelength * BOHR_NM,
                d1.to_base_with("trap.depth_first", Dim::Energy, &ctx)?,
                d2.to_base_with("trap.depth_second", Dim::Energy, &ctx)?,
                order0,
            ),
            (None, None, Some(i)) => {
                let w_cm2 = i.to_base("trap.intensity", Dim::Intensity)? * INTENSITY_AU_W_PER_CM2;
                TrapSpec::from_intensity(wavelength * BOHR_NM, w_cm2, &first, &second, order0)
            }
            _ => return Err(cfg_err("trap", "give either depth_first and depth_second, or intensity")),
        }
        .map_err(|e| cfg_err("trap", e.to_string()))?;
        let pair = derive_pair_parameters(&first, &second, &trap)?;
        let polys = t
            .taylor_orders
            .iter()
            .map(|&n| Ok((n, separate_lattice(&trap.with_order(n), &pair)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.within("potentials"))?;

        let (com_basis, rel_basis, l_max, l_max_com) = match &cfg.basis {
            Some(b) => (
                Some(Arc::new(BSplineBasis::new(b.com.build("basis.com")?).map_err(|e| e.within("basis"))?)),
                Some(Arc::new(BSplineBasis::new(b.rel.build("basis.rel")?).map_err(|e| e.within("basis"))?)),
                b.l_max,
                b.l_max_com.unwrap_or(b.l_max),
            ),
            None => (None, None, 0, 0),
        };

        let curve = build_curve(cfg)?;
        let ci = CiOptions {
            com_orbitals: cfg.ci.com_orbitals,
            rel_orbitals: cfg.ci.rel_orbitals,
            sector: match cfg.ci.sector {
                SectorChoice::Even => Some(0),
                SectorChoice::All => None,
            },
            coupling: true,
        };
        Ok(Self {
            atoms: [first, second],
            trap,
            pair,
            polys,
            com_basis,
            rel_basis,
            l_max,
            l_max_com,
            curve,
            ci,
            report_states: cfg.ci.report_states,
            allow_branch_change: cfg.interaction.allow_branch_change,
        })
    }

    fn bases(&self) -> Result<(Arc<BSplineBasis>, Arc<BSplineBasis>)> {
        match (&self.com_basis, &self.rel_basis) {
            (Some(c), Some(r)) => Ok((c.clone(), r.clone())),
            _ => Err(cfg_err("basis", "required for this task")),
        }
    }

    pub fn omega_rel(&self) -> Result<f64> {
        self.pair.omega_rel.ok_or_else(|| Error::domain("anisotropic trap has no single ω_ho"))
    }

    /// COM orbital sets, one per Taylor order; they do not depend on a_sc.
    pub fn solve_com(&self) -> Result<Vec<OrbitalSet>> {
        let (cb, _) = self.bases()?;
        self.polys
            .iter()
            .map(|(_, poly)| {
                let spec = HamiltonianSpec::com(poly, self.pair.total_mass, cb.clone(), self.l_max_com);
                solve(&spec, None).map_err(|e| e.within("solver"))
            })
            .collect()
    }

    /// REL solve and CI at one interaction strength.
    pub fn solve_point(&self, com: &[OrbitalSet], target: Option<f64>) -> Result<PointSolution> {
        let (_, rb) = self.bases()?;
        let mu = self.pair.reduced_mass;
        let sopt = ScatteringOptions::default();
        let (potential, scattering, shift): (SharedPotential, _, _) = match (&self.curve, target) {
            (None, None) => (Arc::new(NoInteraction), None, None),
            (None, Some(_)) => return Err(cfg_err("interaction", "kind = \"none\" cannot be tuned")),
            (Some(c), None) => {
                let r = extract_scattering_length(c, mu, &sopt).map_err(|e| e.within("scattering"))?;
                (Arc::new(c.clone()), Some(r), Some(c.shift()))
            }
            (Some(c), Some(a)) => {
                let topt = TuneOptions {
                    length_scale: self.pair.a_ho.unwrap_or(1.0),
                    allow_branch_change: self.allow_branch_change,
                    ..TuneOptions::default()
                };
                let t = tune_to_scattering_length(c, mu, a, &sopt, &topt).map_err(|e| e.within("scattering"))?;
                (Arc::new(t.curve), Some(t.result), Some(t.shift))
            }
        };
        let mut orders = Vec::with_capacity(self.polys.len());
        for ((order, poly), com_set) in self.polys.iter().zip(com) {
            let spec = HamiltonianSpec::rel(poly, mu, potential.clone(), rb.clone(), self.l_max);
            let mut rel = solve(&spec, None).map_err(|e| e.within("solver"))?;
            if let Some(s) = &scattering {
                classify(&mut rel, s.nodes).map_err(|e| e.within("solver"))?;
            }
            let ci = run_ci(com_set, &rel, poly, &self.ci).map_err(|e| e.within("ci"))?;
            orders.push(OrderSolution { order: *order, rel, ci });
        }
        Ok(PointSolution {
            a_sc: target.or(scattering.as_ref().map(|s| s.a_sc)),
            achieved_a_sc: scattering.as_ref().map(|s| s.a_sc),
            shift,
            bound_count: scattering.as_ref().map(|s| s.nodes),
            scattering_fit_error: scattering.as_ref().map(|s| s.fit_error),
            orders,
        })
    }
}

fn build_curve(cfg: &RunConfig) -> Result<Option<PotentialCurve>> {
    let i = &cfg.interaction;
    let len = |q: &Option<crate::config::Quantity>, f: &str| q.as_ref().map(|q| q.to_base(f, Dim::Length)).transpose();
    let lr = match &i.long_range {
        Some(l) => Some(LongRange {
            de: l.dissociation.to_base("interaction.long_range.dissociation", Dim::Energy)?,
            c6: l.c6.to_base("interaction.long_range.c6", Dim::AtomicUnits)?,
            c8: l.c8.to_base("interaction.long_range.c8", Dim::AtomicUnits)?,
            c10: l.c10.to_base("interaction.long_range.c10", Dim::AtomicUnits)?,
            ex_c: l.exchange_c.as_ref().map(|q| q.to_base("interaction.long_range.exchange_c", Dim::AtomicUnits)).transpose()?.unwrap_or(0.0),
            ex_alpha: l.exchange_alpha.unwrap_or(0.0),
            ex_beta: l
                .exchange_beta
                .as_ref()
                .map(|q| q.to_base("interaction.long_range.exchange_beta", Dim::AtomicUnits))
                .transpose()?
                .unwrap_or(1.0),
        }),
        None => None,
    };
    let curve = match i.kind {
        InteractionKind::None => return Ok(None),
        InteractionKind::Synthetic => {
            let mut spec = SyntheticCurveSpec::default();
            if let Some(d) = &i.depth {
                spec.depth = d.to_base("interaction.depth", Dim::Energy)?;
            }
            if let Some(r) = len(&i.r_sr_end, "interaction.r_sr_end")? {
                spec.r_sr_end = r;
            }
            if let Some(r) = len(&i.r_lr_start, "interaction.r_lr_start")? {
                spec.r_lr_start = r;
            }
            synthetic_curve(&spec, lr)
        }
        InteractionKind::Table => {
            let path = i.curve_file.as_ref().ok_or_else(|| cfg_err("interaction.curve_file", "missing"))?;
            let table = read_curve_table(path)?;
            build_interaction(
                table,
                lr.ok_or_else(|| cfg_err("interaction.long_range", "missing"))?,
                len(&i.r_sr_end, "interaction.r_sr_end")?.ok_or_else(|| cfg_err("interaction.r_sr_end", "missing"))?,
                len(&i.r_lr_start, "interaction.r_lr_start")?.ok_or_else(|| cfg_err("interaction.r_lr_start", "missing"))?,
                DEFAULT_JOIN_TOLERANCE,
            )
        }
    }
    .map_err(|e| e.within("potentials"))?;
    Ok(Some(match len(&i.wall_shift, "interaction.wall_shift")? {
        Some(s) => curve.shift_inner_wall(s).map_err(|e| e.within("potentials"))?,
        None => curve,
    }))
}

pub struct OrderSolution {
    pub order: u32,
    pub rel: OrbitalSet,
    pub ci: CiResult,
}

pub struct PointSolution {
    /// Requested a_sc when tuned, else the extracted one.
    pub a_sc: Option<f64>,
    pub achieved_a_sc: Option<f64>,
    pub shift: Option<f64>,
    pub bound_count: Option<u32>,
    pub scattering_fit_error: Option<f64>,
    pub orders: Vec<OrderSolution>,
}

impl PointSolution {
    pub fn order(&self, n: u32) -> Option<&OrderSolution> {
        self.orders.iter().find(|o| o.order == n)
    }

    /// Energy of the lowest `tag` state at `level`.
    pub fn energy(&self, level: Level, tag: StateTag) -> Option<f64> {
        let o = self.order(level.order)?;
        if level.coupled {
            o.ci.state(tag).map(|s| s.energy)
        } else {
            o.ci.uncoupled(tag)
        }
    }

    pub fn ledger(&self, tag: StateTag) -> Result<EnergyLedger> {
        let (h, s) = match (self.order(2), self.order(6)) {
            (Some(h), Some(s)) => (h, s),
            _ => return Err(Error::IncompleteLedger { tag: tag.to_string(), level: "orders 2 and 6".into() }),
        };
        ledger(tag, &h.ci, &s.ci)
    }

    fn summary(&self, com: &[OrbitalSet], report: usize) -> PointSummary {
        let mut rows = Vec::new();
        for o in &self.orders {
            for coupled in [false, true] {
                let level = Level { order: o.order, coupled };
                let spectrum: Vec<(f64, StateTag, bool)> = if coupled {
                    o.ci.states.iter().map(|s| (s.energy, s.tag, s.ambiguous)).collect()
                } else {
                    let mut d: Vec<(f64, StateTag, bool)> = o
                        .ci
                        .configs
                        .iter()
                        .zip(&o.ci.diagonal)
                        .map(|(c, &e)| (e, o.rel.orbitals[o.ci.rel_selected[c.rel]].tag.into(), false))
                        .collect();
                    d.sort_by(|a, b| a.0.total_cmp(&b.0));
                    d
                };
                let mut seen = [false; 2];
                for (k, &(e, tag, amb)) in spectrum.iter().enumerate() {
                    let first = match tag {
                        StateTag::LeastBound => !std::mem::replace(&mut seen[0], true),
                        StateTag::FirstTrapInduced => !std::mem::replace(&mut seen[1], true),
                        StateTag::Other => false,
                    };
                    if k < report || first {
                        rows.push(EnergyRow { level, index: k, tag, ambiguous: amb, energy: e });
                    }
                }
            }
        }
        let ledgers = [StateTag::LeastBound, StateTag::FirstTrapInduced]
            .into_iter()
            .filter_map(|t| self.ledger(t).ok())
            .collect();
        PointSummary {
            a_sc: self.a_sc,
            diagnostics: PointDiagnostics {
                a_sc: self.a_sc.map(fmt_f),
                achieved_a_sc: self.achieved_a_sc.map(fmt_f),
                wall_shift: self.shift.map(fmt_f),
                bound_count: self.bound_count,
                scattering_fit_error: self.scattering_fit_error.map(fmt_f),
                com_max_residual: com.iter().map(|c| fmt_f(c.max_residual)).collect(),
                rel_max_residual: self.orders.iter().map(|o| fmt_f(o.rel.max_residual)).collect(),
                ci_configurations: self.orders.iter().map(|o| o.ci.configs.len()).collect(),
            },
            rows,
            ledgers,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnergyRow {
    pub level: Level,
    /// Rank in the level's spectrum.
    pub index: usize,
    pub tag: StateTag,
    pub ambiguous: bool,
    pub energy: f64,
}

/// What survives of a point once its orbitals are dropped.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub a_sc: Option<f64>,
    pub rows: Vec<EnergyRow>,
    pub ledgers: Vec<EnergyLedger>,
    pub diagnostics: PointDiagnostics,
}

impl PointSummary {
    pub fn sample(&self, level: Level) -> Option<EnergySample> {
        let pick = |tag| self.rows.iter().find(|r| r.level == level && r.tag == tag).map(|r| r.energy);
        Some(EnergySample { a_sc: self.a_sc?, lb: pick(StateTag::LeastBound), ti: pick(StateTag::FirstTrapInduced) })
    }
}

/// Floats are stored as formatted strings so the manifest is bit-stable.
#[derive(Debug, Clone, Serialize)]
pub struct PointDiagnostics {
    pub a_sc: Option<String>,
    pub achieved_a_sc: Option<String>,
    pub wall_shift: Option<String>,
    pub bound_count: Option<u32>,
    pub scattering_fit_error: Option<String>,
    pub com_max_residual: Vec<String>,
    pub rel_max_residual: Vec<String>,
    pub ci_configurations: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub program: &'static str,
    pub version: &'static str,
    pub task: Task,
    pub config_sha256: String,
    pub taylor_orders: Vec<u32>,
    pub com_splines: Option<usize>,
    pub rel_splines: Option<usize>,
    pub l_max: u32,
    pub l_max_com: u32,
    pub com_orbitals: usize,
    pub rel_orbitals: usize,
    pub points: Vec<PointDiagnostics>,
    pub artifacts: BTreeMap<String, String>,
}

/// Collects artifacts and writes them with one writer per file.
pub struct Output {
    dir: PathBuf,
    artifacts: BTreeMap<String, String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::domain(format!("formatting {name}: {e}"));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::domain(format!("formatting {name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::domain(format!("serializing {name}: {e}")))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn artifacts(&self) -> &BTreeMap<String, String> {
        &self.artifacts
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub const ENERGY_HEADER: [&str; 7] = ["level", "a_sc_a0", "index", "tag", "ambiguous", "energy_hartree", "energy_khz"];

fn energy_rows(points: &[PointSummary]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for p in points {
        for r in &p.rows {
            out.push(vec![
                r.level.to_string(),
                fmt_opt(p.a_sc),
                r.index.to_string(),
                r.tag.to_string(),
                r.ambiguous.to_string(),
                fmt_f(r.energy),
                fmt_f(hartree_to_khz(r.energy)),
            ]);
        }
    }
    out
}

fn ledger_rows(points: &[PointSummary]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for p in points {
        for l in &p.ledgers {
            let k = l.to_khz();
            let mut row = vec![fmt_opt(p.a_sc), l.tag.to_string()];
            row.extend([l.e2, l.e6, l.ci2, l.ci6, l.geom, l.coup2, l.coup6, l.tot].map(fmt_f));
            row.extend([k.geom, k.coup2, k.coup6, k.tot].map(fmt_f));
            out.push(row);
        }
    }
    out
}

const LEDGER_HEADER: [&str; 14] = [
    "a_sc_a0",
    "tag",
    "e2_hartree",
    "e6_hartree",
    "ci2_hartree",
    "ci6_hartree",
    "geom_hartree",
    "coup2_hartree",
    "coup6_hartree",
    "tot_hartree",
    "geom_khz",
    "coup2_khz",
    "coup6_khz",
    "tot_khz",
];

/// Reads an `energies.csv` written by a sweep into level-curve samples.
pub fn read_energy_samples(path: &Path, level: Level) -> Result<Vec<EnergySample>> {
    let perr = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| perr(0, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| perr(1, format!("missing column '{name}'")));
    let (cl, ca, ct, ce) = (col("level")?, col("a_sc_a0")?, col("tag")?, col("energy_hartree")?);
    let mut by_a: BTreeMap<u64, EnergySample> = BTreeMap::new();
    let mut order: Vec<u64> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        let lv: Level = rec[cl].parse().map_err(|e: Error| perr(line, e.to_string()))?;
        if lv != level {
            continue;
        }
        let a: f64 = rec[ca].parse().map_err(|_| perr(line, format!("bad a_sc '{}'", &rec[ca])))?;
        let tag: StateTag = rec[ct].parse().map_err(|e: Error| perr(line, e.to_string()))?;
        let e: f64 = rec[ce].parse().map_err(|_| perr(line, format!("bad energy '{}'", &rec[ce])))?;
        let key = a.to_bits();
        let s = by_a.entry(key).or_insert_with(|| {
            order.push(key);
            EnergySample { a_sc: a, lb: None, ti: None }
        });
        match tag {
            StateTag::LeastBound if s.lb.is_none() => s.lb = Some(e),
            StateTag::FirstTrapInduced if s.ti.is_none() => s.ti = Some(e),
            _ => {}
        }
    }
    if by_a.is_empty() {
        return Err(perr(0, format!("no {level} rows")));
    }
    Ok(order.into_iter().map(|k| by_a[&k]).collect())
}

/// Result of [`run`].
pub struct RunSummary {
    pub manifest: Manifest,
    pub points: Vec<PointSummary>,
    pub fit: Option<FitReport>,
    pub curve: Option<BindingEnergyCurve>,
}

/// Runs `task` and writes every artifact to `out`.
pub fn run(cfg: &RunConfig, config_text: &str, task: Task, out: &Path) -> Result<RunSummary> {
    let mut cfg = cfg.clone();
    cfg.task = task;
    cfg.validate()?;
    let sys = System::build(&cfg)?;
    let mut out = Output::new(out)?;
    let mut points: Vec<PointSummary> = Vec::new();
    let mut fit = None;
    let mut curve = None;

    let single_target = cfg
        .interaction
        .target_a_sc
        .as_ref()
        .map(|q| q.to_base("interaction.target_a_sc", Dim::Length))
        .transpose()?;

    match task {
        Task::Solve | Task::Densities | Task::Cuts => {
            let com = sys.solve_com()?;
            let p = sys.solve_point(&com, single_target)?;
            if task == Task::Densities {
                write_densities(&cfg, &sys, &com, &p, &mut out)?;
            }
            if task == Task::Cuts {
                write_cuts(&cfg, &sys, &com, &p, &mut out)?;
            }
            points.push(p.summary(&com, sys.report_states));
        }
        Task::Sweep => {
            let targets = cfg.sweep.as_ref().expect("validated").a_sc.to_base("sweep.a_sc", Dim::Length)?;
            points = sweep(&sys, &targets)?;
        }
        Task::Map | Task::Fit => {
            let m = cfg.map.as_ref().expect("validated");
            let r = &m.resonance;
            let params = FeshbachParams::new(
                r.b0.to_base("map.resonance.b0", Dim::Field)?,
                r.delta_b.to_base("map.resonance.delta_b", Dim::Field)?,
                r.a_bg.to_base("map.resonance.a_bg", Dim::Length)?,
            )
            .map_err(|e| cfg_err("map.resonance", e.to_string()))?;
            let level: Level = m.level.parse().map_err(|e: Error| cfg_err("map.level", e.to_string()))?;
            let omega = sys.omega_rel()?;
            let a_ho = sys.pair.a_ho.expect("isotropic");
            let com_zero = 1.5 * sys.pair.omega_com.expect("isotropic");
            let (lc, harmonic) = match m.source {
                CurveSource::Solve => {
                    let mut targets = cfg.sweep.as_ref().expect("validated").a_sc.to_base("sweep.a_sc", Dim::Length)?;
                    if !targets.iter().any(|&a| a == params.a_bg) {
                        targets.push(params.a_bg);
                        targets.sort_by(|a, b| a.total_cmp(b));
                    }
                    points = sweep(&sys, &targets)?;
                    let s = |lv| points.iter().filter_map(|p| p.sample(lv)).collect::<Vec<_>>();
                    (LevelCurve::new(s(level), level.to_string())?, Some(s(Level::E2)))
                }
                CurveSource::File => {
                    let path = m.energies_file.as_ref().expect("validated");
                    let samples = read_energy_samples(path, level)?;
                    let harmonic = read_energy_samples(path, Level::E2).ok();
                    (LevelCurve::new(samples, level.to_string())?, harmonic)
                }
                CurveSource::Pseudopotential => {
                    let mut a = m.a_sc.as_ref().expect("validated").to_base("map.a_sc", Dim::Length)?;
                    if !a.iter().any(|&x| x == params.a_bg) {
                        a.push(params.a_bg);
                    }
                    let lc = pseudopotential_curve(&a, omega, a_ho, com_zero).map_err(|e| e.within("feshbach"))?;
                    let h = lc.samples.clone();
                    (lc, Some(h))
                }
            };
            let bc = binding_energy_curve(&lc, &params).map_err(|e| e.within("feshbach"))?;
            write_curve(&bc, harmonic.as_deref(), com_zero, omega, a_ho, &mut out)?;
            if task == Task::Fit {
                let f = cfg.fit.as_ref().expect("validated");
                let data = read_experimental_csv(&f.data_file)?;
                let mut free = Vec::new();
                let mut half = Vec::new();
                for (name, hw) in f.free.iter().zip(&f.half_width) {
                    let (p, dim) = match name.as_str() {
                        "b0" => (FitParam::B0, Dim::Field),
                        "delta_b" => (FitParam::DeltaB, Dim::Field),
                        _ => (FitParam::ABg, Dim::Length),
                    };
                    free.push(p);
                    half.push(hw.to_base(&format!("fit.half_width[{name}]"), dim)?);
                }
                let opt = FitOptions { free, initial: params, half_width: half, scan_points: f.scan_points };
                let report = fit_resonance(&lc, &data, &opt).map_err(|e| e.within("feshbach"))?;
                out.json("fit.json", &report)?;
                fit = Some(report);
            }
            curve = Some(bc);
        }
    }

    if !points.is_empty() {
        out.csv("energies.csv", &ENERGY_HEADER, energy_rows(&points))?;
        let lr = ledger_rows(&points);
        if !lr.is_empty() {
            out.csv("ledger.csv", &LEDGER_HEADER, lr)?;
        }
    }

    let manifest = Manifest {
        program: "sitepair",
        version: env!("CARGO_PKG_VERSION"),
        task,
        config_sha256: sha256_hex(config_text.as_bytes()),
        taylor_orders: sys.polys.iter().map(|p| p.0).collect(),
        com_splines: sys.com_basis.as_ref().map(|b| b.len()),
        rel_splines: sys.rel_basis.as_ref().map(|b| b.len()),
        l_max: sys.l_max,
        l_max_com: sys.l_max_com,
        com_orbitals: sys.ci.com_orbitals,
        rel_orbitals: sys.ci.rel_orbitals,
        points: points.iter().map(|p| p.diagnostics.clone()).collect(),
        artifacts: out.artifacts().clone(),
    };
    out.json("manifest.json", &manifest)?;
    Ok(RunSummary { manifest, points, fit, curve })
}

/// Solves every target in parallel; COM sets are shared.
pub fn sweep(sys: &System, targets: &[f64]) -> Result<Vec<PointSummary>> {
    let com = sys.solve_com()?;
    targets
        .par_iter()
        .map(|&a| {
            log::info!("solving a_sc = {a} a0");
            sys.solve_point(&com, Some(a)).map(|p| p.summary(&com, sys.report_states))
        })
        .collect()
}

fn level_wavefunction<'a>(com: &'a [OrbitalSet], p: &'a PointSolution, sys: &System, level: Level, tag: StateTag) -> Result<PairWavefunction<'a>> {
    let idx = sys
        .polys
        .iter()
        .position(|(n, _)| *n == level.order)
        .ok_or_else(|| Error::IncompleteLedger { tag: tag.to_string(), level: level.to_string() })?;
    let o = &p.orders[idx];
    if level.coupled {
        let s = o.ci.state(tag).ok_or_else(|| Error::IncompleteLedger { tag: tag.to_string(), level: level.to_string() })?;
        PairWavefunction::from_ci(&com[idx], &o.rel, &o.ci, s)
    } else {
        PairWavefunction::uncoupled(&com[idx], &o.rel, tag, level.order)
    }
}

fn write_densities(cfg: &RunConfig, sys: &System, com: &[OrbitalSet], p: &PointSolution, out: &mut Output) -> Result<()> {
    let d = cfg.densities.clone().unwrap_or(crate::config::DensityConfig { points: 2001, r_max: None });
    let (_, rb) = sys.bases()?;
    let r_max = match &d.r_max {
        Some(q) => q.to_base("densities.r_max", Dim::Length)?,
        None => rb.r_max(),
    };
    let grid = uniform_grid(r_max, d.points);
    for tag in [StateTag::LeastBound, StateTag::FirstTrapInduced] {
        for level in Level::ALL {
            if !sys.polys.iter().any(|(n, _)| *n == level.order) {
                continue;
            }
            let wf = match level_wavefunction(com, p, sys, level, tag) {
                Ok(w) => w,
                Err(Error::IncompleteLedger { .. }) => continue,
                Err(e) => return Err(e),
            };
            let rho: RadialDensity = radial_pair_density(&wf, &grid).map_err(|e| e.within("observables"))?;
            out.csv(
                &format!("density_{tag}_{level}.csv"),
                &["r_a0", "rho"],
                rho.r.iter().zip(&rho.rho).map(|(r, v)| vec![fmt_f(*r), fmt_f(*v)]),
            )?;
        }
    }
    Ok(())
}

fn cut_rows(c: &AbsoluteCut) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(c.values.len());
    for (i, x1) in c.x1.iter().enumerate() {
        for (j, x2) in c.x2.iter().enumerate() {
            rows.push(vec![fmt_f(*x1), fmt_f(*x2), fmt_f(c.at(i, j))]);
        }
    }
    rows
}

fn write_cuts(cfg: &RunConfig, sys: &System, com: &[OrbitalSet], p: &PointSolution, out: &mut Output) -> Result<()> {
    let c = cfg.cuts.clone().unwrap_or(crate::config::CutConfig { points: 201, half_width: None, tag: "1ti".into() });
    let tag: StateTag = c.tag.parse().map_err(|e: Error| cfg_err("cuts.tag", e.to_string()))?;
    let hw = match &c.half_width {
        Some(q) => q.to_base("cuts.half_width", Dim::Length)?,
        None => sys.trap.half_period(),
    };
    let grid = CutGrid::square(hw, c.points, sys.pair.mu1, sys.pair.mu2);
    let header = ["x1_a0", "x2_a0", "value"];
    for level in Level::ALL {
        if !sys.polys.iter().any(|(n, _)| *n == level.order) {
            continue;
        }
        let wf = level_wavefunction(com, p, sys, level, tag)?;
        let cut = wavefunction_cut(&wf, &grid).map_err(|e| e.within("observables"))?;
        out.csv(&format!("cut_{level}.csv"), &header, cut_rows(&cut))?;
    }
    for kind in DifferenceKind::ALL {
        let (lo, hi) = kind.levels();
        if !sys.polys.iter().any(|(n, _)| *n == lo.order) || !sys.polys.iter().any(|(n, _)| *n == hi.order) {
            continue;
        }
        let a = level_wavefunction(com, p, sys, lo, tag)?;
        let b = level_wavefunction(com, p, sys, hi, tag)?;
        let cut = difference_cut(kind, &a, &b, &grid).map_err(|e| e.within("observables"))?;
        out.csv(&format!("cut_{kind}.csv"), &header, cut_rows(&cut))?;
    }
    Ok(())
}

/// curve.csv, with the energy-dependent remap from harmonic uncoupled REL
/// energies when those are available.
fn write_curve(
    bc: &BindingEnergyCurve,
    harmonic: Option<&[EnergySample]>,
    com_zero: f64,
    omega: f64,
    a_ho: f64,
    out: &mut Output,
) -> Result<()> {
    let remap = |a: f64, tag: StateTag| -> Option<(f64, Option<f64>)> {
        let h = harmonic?.iter().find(|s| s.a_sc == a)?;
        let e = if tag == StateTag::LeastBound { h.lb } else { h.ti }?;
        let a_e = energy_dependent_asc(e - com_zero, omega, a_ho).ok()?;
        Some((a_e, bc.params.b_of_a(a_e).ok()))
    };
    let rows = bc.samples.iter().map(|s| {
        let r = remap(s.a_sc, s.branch.tag());
        vec![
            s.branch.to_string(),
            fmt_f(s.a_sc),
            fmt_opt(s.b),
            fmt_f(s.e_b),
            fmt_f(hartree_to_khz(s.e_b)),
            fmt_opt(r.map(|r| r.0)),
            fmt_opt(r.and_then(|r| r.1)),
        ]
    });
    out.csv(
        "curve.csv",
        &["branch", "a_sc_a0", "b_gauss", "e_b_hartree", "e_b_khz", "a_sc_energy_dependent_a0", "b_energy_dependent_gauss"],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.0, -0.0, 1.0 / 3.0, 6.5e3, -1.234_567_890_123_456_7e-9, f64::MIN_POSITIVE, 2.0_f64.sqrt() * 1e300] {
            let s = fmt_f(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn energy_samples_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energies.csv");
        let text = "\
level,a_sc_a0,index,tag,ambiguous,energy_hartree,energy_khz
CI6,1.0e2,0,other,false,-5.0e-3,0
CI6,1.0e2,31,lb,false,-1.0e-9,0
CI6,1.0e2,32,1ti,false,2.0e-9,0
CI6,1.0e2,40,1ti,false,9.0e-9,0
E2,1.0e2,32,1ti,false,7.0e-9,0
CI6,-3.0e2,32,1ti,false,1.5e-9,0
";
        std::fs::write(&path, text).unwrap();
        let s = read_energy_samples(&path, "CI6".parse().unwrap()).unwrap();
        assert_eq!(s.len(), 2);
        // File order is kept; the first row of a tag wins.
        assert_eq!(s[0], EnergySample { a_sc: 100.0, lb: Some(-1e-9), ti: Some(2e-9) });
        assert_eq!(s[1], EnergySample { a_sc: -300.0, lb: None, ti: Some(1.5e-9) });
        assert!(matches!(read_energy_samples(&path, "E6".parse().unwrap()), Err(Error::Parse { .. })));

        std::fs::write(&path, text.replace("CI6,-3.0e2,32,1ti", "CI6,-3.0e2,32,2ti")).unwrap();
        match read_energy_samples(&path, "CI6".parse().unwrap()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }
}
