//! Magnetic-field mapping of the scattering length, binding-energy branches,
//! the harmonic-trap energy-dependent scattering length and resonance fits.

use std::path::Path;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::ci::StateTag;
use crate::error::{Error, Result};
use crate::potentials::interp::{natural_spline_slopes, Hermite};
use crate::quantities::hartree_to_khz;
use crate::roots::brent;

/// Two-channel resonance: a(B) = a_bg (1 − ΔB / (B − B₀)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeshbachParams {
    /// Resonance position, gauss.
    pub b0: f64,
    /// Width, gauss.
    pub delta_b: f64,
    /// Background scattering length, a₀.
    pub a_bg: f64,
}

/// Below this relative distance an input counts as sitting on a pole.
const POLE_TOL: f64 = 1e-14;

impl FeshbachParams {
    /// RbK values commonly used for the resonance near 547 G.
    pub const RBK_LITERATURE: FeshbachParams = FeshbachParams { b0: 546.8, delta_b: -3.0, a_bg: -185.0 };
    /// Position refit with the realistic interaction, width unchanged.
    pub const RBK_REFIT: FeshbachParams = FeshbachParams { b0: 546.66, delta_b: -3.0, a_bg: -185.0 };
    /// Position and width refit with a pseudopotential model.
    pub const RBK_PSEUDO_REFIT: FeshbachParams = FeshbachParams { b0: 546.669, delta_b: -2.92, a_bg: -185.0 };

    pub fn new(b0: f64, delta_b: f64, a_bg: f64) -> Result<Self> {
        let p = Self { b0, delta_b, a_bg };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0.is_finite() && self.delta_b.is_finite() && self.a_bg.is_finite()) {
            return Err(Error::domain("resonance parameters must be finite"));
        }
        if self.delta_b == 0.0 || self.a_bg == 0.0 {
            return Err(Error::domain("ΔB and a_bg must be non-zero"));
        }
        Ok(())
    }

    pub fn a_of_b(&self, b: f64) -> Result<f64> {
        let d = b - self.b0;
        if d.abs() <= POLE_TOL * self.b0.abs().max(1.0) {
            return Err(Error::Pole { location: self.b0, context: "a_sc(B) diverges at B = B0" });
        }
        Ok(self.a_bg * (1.0 - self.delta_b / d))
    }

    pub fn b_of_a(&self, a: f64) -> Result<f64> {
        let d = 1.0 - a / self.a_bg;
        if d.abs() <= POLE_TOL {
            return Err(Error::Pole { location: self.a_bg, context: "B(a_sc) diverges at a_sc = a_bg" });
        }
        Ok(self.delta_b / d + self.b0)
    }
}

/// Γ(z) for real z, with reflection below 1/2.
pub fn gamma_fn(z: f64) -> f64 {
    gamma(z)
}

fn near_pole(z: f64) -> bool {
    let n = z.round();
    n <= 0.0 && (z - n).abs() < 1e-8
}

/// a_sc^E from a harmonic REL energy ϵ (same units as ω) through
/// Γ(−ϵ/2ω + 3/4) / Γ(−ϵ/2ω + 1/4) = a_ho / (2 a_sc^E), with a_ho = 1/sqrt(μω).
/// The often-quoted √2 form of this relation holds for the length
/// sqrt(1/(2μω)) instead; with a_ho it halves into the factor 2 used here.
///
/// On a numerator pole the limit a_sc^E = 0 is returned; on a denominator
/// pole (unitarity) the result is a pole error.
pub fn energy_dependent_asc(epsilon: f64, omega: f64, a_ho: f64) -> Result<f64> {
    if !(omega > 0.0 && a_ho > 0.0) {
        return Err(Error::domain("ω and a_ho must be positive"));
    }
    let z = -0.5 * epsilon / omega;
    let (zn, zd) = (z + 0.75, z + 0.25);
    if near_pole(zd) {
        return Err(Error::Pole { location: epsilon, context: "a_sc^E diverges (denominator Gamma pole, unitarity)" });
    }
    if near_pole(zn) {
        return Ok(0.0);
    }
    let ratio = gamma_fn(zn) / gamma_fn(zd);
    Ok(a_ho / (2.0 * ratio))
}

/// atan(a_sc^E / a_ho): continuous and increasing inside each window.
fn asc_angle(epsilon: f64, omega: f64) -> f64 {
    let z = -0.5 * epsilon / omega;
    let (zn, zd) = (z + 0.75, z + 0.25);
    if near_pole(zn) {
        return 0.0;
    }
    (gamma_fn(zd) / (2.0 * gamma_fn(zn))).atan()
}

/// Energy window of the Gamma relation, in units of ω: window −1 is
/// (−∞, 1/2), window k ≥ 0 is (2k + 1/2, 2k + 5/2).
pub fn energy_window(k: i32) -> (f64, f64) {
    if k < 0 {
        (f64::NEG_INFINITY, 0.5)
    } else {
        (2.0 * k as f64 + 0.5, 2.0 * k as f64 + 2.5)
    }
}

/// Inverse of [`energy_dependent_asc`] inside window `k`.
pub fn energy_from_asc(a_sc: f64, omega: f64, a_ho: f64, k: i32) -> Result<f64> {
    if !(omega > 0.0 && a_ho > 0.0) {
        return Err(Error::domain("ω and a_ho must be positive"));
    }
    if k < 0 && a_sc <= 0.0 {
        return Err(Error::domain("the deep window only holds positive a_sc"));
    }
    let target = (a_sc / a_ho).atan();
    let (lo, hi) = energy_window(k);
    let eps = 1e-10;
    let hi = hi - eps;
    let mut lo = if lo.is_finite() { lo + eps } else { hi - 1.0 };
    let f = |e: f64| Ok(asc_angle(e * omega, omega) - target);
    if k >= 0 && f(lo)? >= 0.0 {
        // |a_sc| beyond what the window edge resolves.
        return Ok(omega * lo);
    }
    let mut it = 0;
    while f(lo)? > 0.0 {
        lo = hi - 2.0 * (hi - lo);
        it += 1;
        if it > 200 {
            return Err(Error::domain("no bracket for the energy-dependent inverse"));
        }
    }
    Ok(omega * brent(f, lo, hi, 1e-14, 200)?)
}

/// Binding-energy branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Real molecule: lb state, a_sc > 0.
    RM,
    /// Confinement-induced molecule: 1ti state, a_sc < 0.
    CIM,
    /// Repulsively interacting pair: 1ti state, a_sc > 0.
    RIP,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::RM, Branch::CIM, Branch::RIP];

    pub fn classify(tag: StateTag, a_sc: f64) -> Option<Branch> {
        match (tag, a_sc > 0.0) {
            (StateTag::LeastBound, true) => Some(Branch::RM),
            (StateTag::FirstTrapInduced, false) => Some(Branch::CIM),
            (StateTag::FirstTrapInduced, true) => Some(Branch::RIP),
            _ => None,
        }
    }

    pub fn tag(self) -> StateTag {
        match self {
            Branch::RM => StateTag::LeastBound,
            Branch::CIM | Branch::RIP => StateTag::FirstTrapInduced,
        }
    }

    fn positive(self) -> bool {
        self != Branch::CIM
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RM" => Ok(Branch::RM),
            "CIM" => Ok(Branch::CIM),
            "RIP" => Ok(Branch::RIP),
            other => Err(Error::domain(format!("unknown branch '{other}' (expected RM, CIM or RIP)"))),
        }
    }
}

/// Level energies (hartree) at one scattering length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub a_sc: f64,
    pub lb: Option<f64>,
    pub ti: Option<f64>,
}

/// lb and 1ti energies as continuous functions of a_sc, interpolated in
/// 1/a_sc separately on each side of the pole.
#[derive(Debug, Clone)]
pub struct LevelCurve {
    pub samples: Vec<EnergySample>,
    /// Label of the approximation level the energies come from.
    pub level: String,
    interp: Vec<((StateTag, bool), Hermite)>,
}

impl LevelCurve {
    pub fn new(mut samples: Vec<EnergySample>, level: impl Into<String>) -> Result<Self> {
        if samples.iter().any(|s| !s.a_sc.is_finite() || s.a_sc == 0.0) {
            return Err(Error::domain("level-curve samples need finite non-zero a_sc"));
        }
        samples.sort_by(|a, b| a.a_sc.total_cmp(&b.a_sc));
        let mut interp = Vec::new();
        for tag in [StateTag::LeastBound, StateTag::FirstTrapInduced] {
            for positive in [false, true] {
                let mut pts: Vec<(f64, f64)> = samples
                    .iter()
                    .filter(|s| (s.a_sc > 0.0) == positive)
                    .filter_map(|s| {
                        let e = if tag == StateTag::LeastBound { s.lb } else { s.ti };
                        e.map(|e| (1.0 / s.a_sc, e))
                    })
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                pts.dedup_by(|a, b| a.0 == b.0);
                if pts.len() < 2 {
                    continue;
                }
                let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
                let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
                let d = natural_spline_slopes(&x, &y);
                interp.push(((tag, positive), Hermite { x, y, d }));
            }
        }
        Ok(Self { samples, level: level.into(), interp })
    }

    /// Energy of `tag` at `a_sc`; linear continuation outside the sampled range.
    pub fn energy(&self, tag: StateTag, a_sc: f64) -> Result<f64> {
        let h = self
            .interp
            .iter()
            .find(|(k, _)| *k == (tag, a_sc > 0.0))
            .map(|(_, h)| h)
            .ok_or_else(|| Error::domain(format!("no {tag} samples with a_sc of this sign")))?;
        let x = 1.0 / a_sc;
        let n = h.x.len();
        Ok(if x < h.x[0] {
            h.y[0] + h.d[0] * (x - h.x[0])
        } else if x > h.x[n - 1] {
            h.y[n - 1] + h.d[n - 1] * (x - h.x[n - 1])
        } else {
            h.value(x)
        })
    }

    /// Whether `a_sc` lies inside the sampled range of `tag` on its side.
    pub fn covers(&self, tag: StateTag, a_sc: f64) -> bool {
        self.interp.iter().any(|(k, h)| {
            let x = 1.0 / a_sc;
            *k == (tag, a_sc > 0.0) && x >= h.x[0] && x <= h.x[h.x.len() - 1]
        })
    }

    /// ℰ_1ti(a_bg): an exact sample when present, else interpolated inside
    /// the sampled range.
    pub fn anchor(&self, a_bg: f64) -> Result<f64> {
        if let Some(e) = self
            .samples
            .iter()
            .find(|s| (s.a_sc - a_bg).abs() <= 1e-9 * a_bg.abs())
            .and_then(|s| s.ti)
        {
            return Ok(e);
        }
        if self.covers(StateTag::FirstTrapInduced, a_bg) {
            return self.energy(StateTag::FirstTrapInduced, a_bg);
        }
        Err(Error::Anchor(format!("no 1ti energy at or around a_bg = {a_bg} a0")))
    }

    /// Model binding energy (hartree) on `branch` at field `b`.
    pub fn binding_energy(&self, params: &FeshbachParams, branch: Branch, b: f64) -> Result<f64> {
        let a = params.a_of_b(b)?;
        Ok(self.anchor(params.a_bg)? - self.energy(branch.tag(), a)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BindingSample {
    pub a_sc: f64,
    /// None at a_sc = a_bg, where B(a_sc) diverges.
    pub b: Option<f64>,
    /// Binding energy, hartree.
    pub e_b: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BindingEnergyCurve {
    pub params: FeshbachParams,
    /// Energy zero ℰ_1ti(a_bg), hartree.
    pub anchor: f64,
    pub level: String,
    pub samples: Vec<BindingSample>,
}

impl BindingEnergyCurve {
    pub fn branch(&self, branch: Branch) -> impl Iterator<Item = &BindingSample> {
        self.samples.iter().filter(move |s| s.branch == branch)
    }
}

/// E_b(a_sc; i) = ℰ_1ti(a_bg) − ℰ_i(a_sc) on every sampled a_sc, requiring an
/// explicit sample at a_bg.
pub fn binding_energy_curve(curve: &LevelCurve, params: &FeshbachParams) -> Result<BindingEnergyCurve> {
    params.validate()?;
    let anchor = curve
        .samples
        .iter()
        .find(|s| (s.a_sc - params.a_bg).abs() <= 1e-9 * params.a_bg.abs())
        .and_then(|s| s.ti)
        .ok_or_else(|| Error::Anchor(format!("no 1ti solve at a_bg = {} a0", params.a_bg)))?;
    let mut samples = Vec::new();
    for s in &curve.samples {
        let b = params.b_of_a(s.a_sc).ok();
        for (tag, e) in [(StateTag::LeastBound, s.lb), (StateTag::FirstTrapInduced, s.ti)] {
            if let (Some(e), Some(branch)) = (e, Branch::classify(tag, s.a_sc)) {
                samples.push(BindingSample { a_sc: s.a_sc, b, e_b: anchor - e, branch });
            }
        }
    }
    Ok(BindingEnergyCurve { params: *params, anchor, level: curve.level.clone(), samples })
}

/// One measured binding energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalPoint {
    /// Field, gauss.
    pub b: f64,
    /// Binding energy, kHz.
    pub e_b: f64,
    pub branch: Branch,
    pub sigma: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ExperimentalRow {
    b_gauss: f64,
    e_b_khz: f64,
    branch: String,
    #[serde(default)]
    sigma_khz: Option<f64>,
}

/// Reads `b_gauss,e_b_khz,branch[,sigma_khz]` rows with a header line.
pub fn read_experimental_csv(path: &Path) -> Result<Vec<ExperimentalPoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).flexible(true).from_path(path).map_err(|e| {
        Error::Parse { path: path.to_path_buf(), line: 0, message: e.to_string() }
    })?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ExperimentalRow>().enumerate() {
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 2, message };
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let branch = row.branch.parse().map_err(|e: Error| parse_err(e.to_string()))?;
        if row.e_b_khz == 0.0 {
            return Err(parse_err("zero binding energy makes the relative error undefined".into()));
        }
        out.push(ExperimentalPoint { b: row.b_gauss, e_b: row.e_b_khz, branch, sigma: row.sigma_khz });
    }
    Ok(out)
}

/// Parameters that a fit may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    B0,
    DeltaB,
    ABg,
}

impl FitParam {
    fn get(self, p: &FeshbachParams) -> f64 {
        match self {
            FitParam::B0 => p.b0,
            FitParam::DeltaB => p.delta_b,
            FitParam::ABg => p.a_bg,
        }
    }

    fn set(self, p: &mut FeshbachParams, v: f64) {
        match self {
            FitParam::B0 => p.b0 = v,
            FitParam::DeltaB => p.delta_b = v,
            FitParam::ABg => p.a_bg = v,
        }
    }

    /// Finite-difference step.
    fn step(self) -> f64 {
        match self {
            FitParam::B0 | FitParam::DeltaB => 1e-6,
            FitParam::ABg => 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub free: Vec<FitParam>,
    pub initial: FeshbachParams,
    /// Half-width of the scan for each free parameter (same order).
    pub half_width: Vec<f64>,
    /// Scan points per free parameter.
    pub scan_points: usize,
}

impl FitOptions {
    /// B₀ only, ±0.5 G around the initial guess.
    pub fn position_only(initial: FeshbachParams) -> Self {
        Self { free: vec![FitParam::B0], initial, half_width: vec![0.5], scan_points: 201 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResidual {
    pub b: f64,
    pub e_exp_khz: f64,
    pub e_model_khz: f64,
    pub branch: Branch,
    /// |(E_exp − E_model) / E_exp|.
    pub delta: f64,
    /// The mapped a_sc lies outside the sampled curve.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSummary {
    pub branch: Branch,
    pub points: usize,
    pub rms_delta: f64,
    pub max_delta: f64,
}

/// Objective and residuals of one parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    pub label: String,
    pub params: FeshbachParams,
    /// Σ δ².
    pub objective: f64,
    pub points: Vec<PointResidual>,
    pub branches: Vec<BranchSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub free: Vec<FitParam>,
    pub best: Evaluation,
    /// Covariance of the free parameters from the local quadratic model.
    pub covariance: Vec<Vec<f64>>,
    /// Evaluations at reference parameter sets, for side-by-side reporting.
    pub references: Vec<Evaluation>,
    pub iterations: usize,
}

fn signed_residuals(curve: &LevelCurve, data: &[ExperimentalPoint], p: &FeshbachParams) -> Result<Vec<f64>> {
    data.iter()
        .map(|d| {
            let e = hartree_to_khz(curve.binding_energy(p, d.branch, d.b)?);
            Ok((d.e_b - e) / d.e_b)
        })
        .collect()
}

fn objective(curve: &LevelCurve, data: &[ExperimentalPoint], p: &FeshbachParams) -> f64 {
    match signed_residuals(curve, data, p) {
        Ok(r) => r.iter().map(|x| x * x).sum(),
        Err(_) => f64::INFINITY,
    }
}

/// Per-point δ(B) and per-branch summaries at `params`.
pub fn evaluate(curve: &LevelCurve, data: &[ExperimentalPoint], params: &FeshbachParams, label: &str) -> Result<Evaluation> {
    params.validate()?;
    let mut points = Vec::with_capacity(data.len());
    for d in data {
        let a = params.a_of_b(d.b)?;
        let e = hartree_to_khz(curve.binding_energy(params, d.branch, d.b)?);
        points.push(PointResidual {
            b: d.b,
            e_exp_khz: d.e_b,
            e_model_khz: e,
            branch: d.branch,
            delta: ((d.e_b - e) / d.e_b).abs(),
            extrapolated: !curve.covers(d.branch.tag(), a) || (a > 0.0) != d.branch.positive(),
        });
    }
    let branches = Branch::ALL
        .iter()
        .filter_map(|&br| {
            let ds: Vec<f64> = points.iter().filter(|p| p.branch == br).map(|p| p.delta).collect();
            (!ds.is_empty()).then(|| BranchSummary {
                branch: br,
                points: ds.len(),
                rms_delta: (ds.iter().map(|d| d * d).sum::<f64>() / ds.len() as f64).sqrt(),
                max_delta: ds.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect();
    let objective = points.iter().map(|p| p.delta * p.delta).sum();
    Ok(Evaluation { label: label.to_string(), params: *params, objective, points, branches })
}

/// Grid scan over the free parameters, then Levenberg-Marquardt refinement
/// of the relative residuals (E_exp − E_model) / E_exp.
pub fn fit_resonance(curve: &LevelCurve, data: &[ExperimentalPoint], opt: &FitOptions) -> Result<FitReport> {
    let np = opt.free.len();
    if np == 0 || np > 3 || opt.half_width.len() != np {
        return Err(Error::domain("fit needs 1-3 free parameters with one scan half-width each"));
    }
    if data.len() < np {
        return Err(Error::InconclusiveFit(format!("{} points cannot fix {np} parameters", data.len())));
    }
    opt.initial.validate()?;
    let n = opt.scan_points.max(3);
    let with = |x: &[f64]| {
        let mut p = opt.initial;
        for (k, f) in opt.free.iter().enumerate() {
            f.set(&mut p, x[k]);
        }
        p
    };
    let axis = |k: usize, i: usize| {
        let c = opt.free[k].get(&opt.initial);
        c - opt.half_width[k] + 2.0 * opt.half_width[k] * i as f64 / (n - 1) as f64
    };
    let total = n.pow(np as u32);
    let idx = |mut flat: usize| {
        let mut out = [0usize; 3];
        for o in out.iter_mut().take(np) {
            *o = flat % n;
            flat /= n;
        }
        out
    };
    let (best_flat, best_val) = (0..total)
        .into_par_iter()
        .map(|f| {
            let ii = idx(f);
            let x: Vec<f64> = (0..np).map(|k| axis(k, ii[k])).collect();
            (f, objective(curve, data, &with(&x)))
        })
        .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
    if !best_val.is_finite() {
        return Err(Error::InconclusiveFit("objective undefined on the whole scan grid".into()));
    }
    let ii = idx(best_flat);
    if let Some(k) = (0..np).find(|&k| ii[k] == 0 || ii[k] == n - 1) {
        return Err(Error::InconclusiveFit(format!(
            "minimum of {:?} not bracketed by the scan (hit {})",
            opt.free[k],
            axis(k, ii[k])
        )));
    }
    let mut x: Vec<f64> = (0..np).map(|k| axis(k, ii[k])).collect();
    let mut r = signed_residuals(curve, data, &with(&x))?;
    let mut chi2: f64 = r.iter().map(|v| v * v).sum();
    let jacobian = |x: &[f64]| -> Result<Mat<f64>> {
        let mut j = Mat::zeros(data.len(), np);
        for k in 0..np {
            let h = opt.free[k].step() * x[k].abs().max(1.0);
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[k] += h;
            xm[k] -= h;
            let rp = signed_residuals(curve, data, &with(&xp))?;
            let rm = signed_residuals(curve, data, &with(&xm))?;
            for i in 0..data.len() {
                j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Ok(j)
    };
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut jtj = Mat::<f64>::zeros(np, np);
    for it in 0..200 {
        iterations = it + 1;
        let j = jacobian(&x)?;
        jtj = j.transpose() * &j;
        let g: Vec<f64> = (0..np).map(|k| (0..data.len()).map(|i| j[(i, k)] * r[i]).sum()).collect();
        let mut accepted = false;
        let mut step_norm = 0.0;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let dx = solve_small(&a, &g.iter().map(|v| -v).collect::<Vec<_>>())?;
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let rn = match signed_residuals(curve, data, &with(&xn)) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cn: f64 = rn.iter().map(|v| v * v).sum();
            if cn <= chi2 {
                step_norm = dx.iter().zip(&opt.free).map(|(d, f)| (d / (f.step() * 1e3)).abs()).fold(0.0, f64::max);
                x = xn;
                r = rn;
                chi2 = cn;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || step_norm < 1e-6 || chi2 == 0.0 {
            break;
        }
    }
    // Curvature of Σδ² is 2 JᵀJ near the optimum.
    let evd = jtj.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let ev: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let top = ev.iter().copied().fold(0.0_f64, f64::max);
    if !(top > 0.0) || ev.iter().any(|&v| v <= 1e-12 * top) {
        return Err(Error::InconclusiveFit(format!("objective is flat along some direction (curvatures {ev:?})")));
    }
    let dof = data.len().saturating_sub(np).max(1) as f64;
    let s2 = chi2 / dof;
    let u = evd.U();
    let covariance = (0..np)
        .map(|a| (0..np).map(|b| s2 * (0..np).map(|m| u[(a, m)] * u[(b, m)] / ev[m]).sum::<f64>()).collect())
        .collect();
    let best = evaluate(curve, data, &with(&x), "fit")?;
    let mut references = Vec::new();
    for (label, p) in [
        ("literature", FeshbachParams::RBK_LITERATURE),
        ("refit_b0", FeshbachParams::RBK_REFIT),
        ("refit_b0_width", FeshbachParams::RBK_PSEUDO_REFIT),
    ] {
        let p = FeshbachParams { a_bg: best.params.a_bg, ..p };
        if let Ok(e) = evaluate(curve, data, &p, label) {
            references.push(e);
        }
    }
    Ok(FitReport { free: opt.free.clone(), best, covariance, references, iterations })
}

fn solve_small(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).chain([b[i]]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        if m[c][c] == 0.0 || !m[c][c].is_finite() {
            return Err(Error::InconclusiveFit("singular normal equations".into()));
        }
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for j in c..=n {
                m[i][j] -= f * m[c][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (m[i][n] - (i + 1..n).map(|j| m[i][j] * x[j]).sum::<f64>()) / m[i][i];
    }
    Ok(x)
}

/// lb and 1ti REL energies of the harmonic pseudopotential model (hartree),
/// optionally shifted by a constant COM energy.
pub fn pseudopotential_curve(a_values: &[f64], omega: f64, a_ho: f64, offset: f64) -> Result<LevelCurve> {
    let samples = a_values
        .iter()
        .map(|&a| {
            let ti = energy_from_asc(a, omega, a_ho, 0)? + offset;
            let lb = if a > 0.0 { Some(energy_from_asc(a, omega, a_ho, -1)? + offset) } else { None };
            Ok(EnergySample { a_sc: a, lb, ti: Some(ti) })
        })
        .collect::<Result<Vec<_>>>()?;
    LevelCurve::new(samples, "pseudopotential")
}

/// Synthetic measurements from a model curve at known parameters.
pub fn synthetic_data(curve: &LevelCurve, params: &FeshbachParams, fields: &[(Branch, f64)]) -> Result<Vec<ExperimentalPoint>> {
    fields
        .iter()
        .map(|&(branch, b)| {
            Ok(ExperimentalPoint { b, e_b: hartree_to_khz(curve.binding_energy(params, branch, b)?), branch, sigma: None })
        })
        .collect()
}
