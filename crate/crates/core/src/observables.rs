//! Radial pair densities and wavefunction cuts in absolute (laboratory)
//! coordinates, including the differences between approximation levels.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::AngularChannel;
use crate::ci::{CIState, CiResult, StateTag};
use crate::error::{Error, Result};
use crate::solver::{OrbitalSet, OrbitalTag};

/// Approximation level: Taylor order and whether Ŵ was diagonalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Level {
    pub order: u32,
    pub coupled: bool,
}

impl Level {
    pub const E2: Level = Level { order: 2, coupled: false };
    pub const CI2: Level = Level { order: 2, coupled: true };
    pub const E6: Level = Level { order: 6, coupled: false };
    pub const CI6: Level = Level { order: 6, coupled: true };
    pub const ALL: [Level; 4] = [Level::E2, Level::CI2, Level::E6, Level::CI6];
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", if self.coupled { "CI" } else { "E" }, self.order)
    }
}

impl std::str::FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (coupled, rest) = match s.strip_prefix("CI") {
            Some(r) => (true, r),
            None => (false, s.strip_prefix('E').unwrap_or("")),
        };
        match rest.parse::<u32>() {
            Ok(order) if order >= 2 && order % 2 == 0 => Ok(Level { order, coupled }),
            _ => Err(Error::domain(format!("unknown level '{s}' (expected E2, CI2, E6 or CI6)"))),
        }
    }
}

/// A two-atom state as a sum of COM × REL orbital products.
#[derive(Debug, Clone)]
pub struct PairWavefunction<'a> {
    pub com: &'a OrbitalSet,
    pub rel: &'a OrbitalSet,
    /// (coefficient, COM orbital, REL orbital), indices into the sets.
    pub terms: Vec<(f64, usize, usize)>,
    pub tag: StateTag,
    pub level: Level,
}

impl<'a> PairWavefunction<'a> {
    /// A CI eigenvector of `result`.
    pub fn from_ci(com: &'a OrbitalSet, rel: &'a OrbitalSet, result: &CiResult, state: &CIState) -> Result<Self> {
        if state.coeffs.len() != result.configs.len() {
            return Err(Error::Incompatible("state does not belong to this CI result".into()));
        }
        let terms = result
            .configs
            .iter()
            .zip(&state.coeffs)
            .filter(|(_, c)| **c != 0.0)
            .map(|(cf, &c)| (c, result.com_selected[cf.com], result.rel_selected[cf.rel]))
            .collect();
        Ok(Self { com, rel, terms, tag: state.tag, level: Level { order: state.taylor_order, coupled: true }, })
    }

    /// The uncoupled product of the lowest COM orbital and the tagged REL orbital.
    pub fn uncoupled(com: &'a OrbitalSet, rel: &'a OrbitalSet, tag: StateTag, order: u32) -> Result<Self> {
        let rt = match tag {
            StateTag::LeastBound => OrbitalTag::LeastBound,
            StateTag::FirstTrapInduced => OrbitalTag::FirstTrapInduced,
            StateTag::Other => return Err(Error::domain("uncoupled product needs an lb or 1ti tag")),
        };
        let j = rel.tagged(rt).ok_or_else(|| Error::IncompleteLedger { tag: tag.to_string(), level: format!("E{order}") })?;
        if com.orbitals.is_empty() {
            return Err(Error::domain("empty COM orbital set"));
        }
        Ok(Self { com, rel, terms: vec![(1.0, 0, j)], tag, level: Level { order, coupled: false } })
    }

    /// Ψ(R, r) at Cartesian COM and REL points.
    pub fn value(&self, big_r: [f64; 3], r: [f64; 3]) -> Result<f64> {
        let mut v = 0.0;
        for &(c, i, j) in &self.terms {
            let a = self.com.orbitals[i].value(&self.com.basis, big_r)?;
            if a == 0.0 {
                continue;
            }
            v += c * a * self.rel.orbitals[j].value(&self.rel.basis, r)?;
        }
        Ok(v)
    }

    fn same_bases(&self, other: &PairWavefunction<'_>) -> bool {
        self.com.basis.knots() == other.com.basis.knots() && self.rel.basis.knots() == other.rel.basis.knots()
    }

    /// Per COM orbital, the REL function Σ c u_{j,ch} by channel, as coefficient vectors.
    fn rel_components(&self) -> Vec<BTreeMap<AngularChannel, Vec<f64>>> {
        self.grouped().into_values().collect()
    }

    /// Ψ regrouped as Σ_i φ_i(R) F_i(r), for repeated evaluation.
    pub fn evaluator(&self) -> PairEvaluator<'_> {
        let groups = self.grouped().into_iter().map(|(i, g)| (i, g.into_iter().collect())).collect();
        PairEvaluator { wf: self, groups }
    }

    fn grouped(&self) -> BTreeMap<usize, BTreeMap<AngularChannel, Vec<f64>>> {
        let mut groups: BTreeMap<usize, BTreeMap<AngularChannel, Vec<f64>>> = BTreeMap::new();
        for &(c, i, j) in &self.terms {
            let orb = &self.rel.orbitals[j];
            let g = groups.entry(i).or_default();
            for (k, ch) in orb.channels.iter().enumerate() {
                let acc = g.entry(*ch).or_insert_with(|| vec![0.0; orb.splines()]);
                for (a, b) in acc.iter_mut().zip(orb.channel_coeffs(k)) {
                    *a += c * b;
                }
            }
        }
        groups
    }
}

/// A [`PairWavefunction`] with its REL orbitals summed per COM orbital.
pub struct PairEvaluator<'w> {
    wf: &'w PairWavefunction<'w>,
    groups: Vec<(usize, Vec<(AngularChannel, Vec<f64>)>)>,
}

impl PairEvaluator<'_> {
    /// Ψ(R, r); agrees with [`PairWavefunction::value`].
    pub fn value(&self, big_r: [f64; 3], r: [f64; 3]) -> Result<f64> {
        let basis = &self.wf.rel.basis;
        let rr = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if rr > basis.r_max() {
            return Ok(0.0);
        }
        let dir = if rr > 0.0 { [r[0] / rr, r[1] / rr, r[2] / rr] } else { [0.0; 3] };
        let mut v = 0.0;
        for (i, chans) in &self.groups {
            let a = self.wf.com.orbitals[*i].value(&self.wf.com.basis, big_r)?;
            if a == 0.0 {
                continue;
            }
            let mut f = 0.0;
            for (ch, c) in chans {
                f += if rr == 0.0 {
                    // Only l = 0 survives; u/r → u'(0).
                    if ch.l == 0 { basis.combine(c, 0.0, 1)? / (4.0 * std::f64::consts::PI).sqrt() } else { 0.0 }
                } else {
                    basis.combine(c, rr, 0)? / rr * crate::angular::real_ylm_dir(*ch, dir)
                };
            }
            v += a * f;
        }
        Ok(v)
    }
}

/// ρ(r) with the COM coordinates and REL angles integrated out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialDensity {
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    /// ∫ρ dr before normalization (exact quadrature).
    pub norm: f64,
    pub tag: StateTag,
    pub level: Level,
}

impl RadialDensity {
    pub fn trapezoid_norm(&self) -> f64 {
        self.r.windows(2).zip(self.rho.windows(2)).map(|(r, p)| 0.5 * (r[1] - r[0]) * (p[0] + p[1])).sum()
    }

    pub fn max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    /// Position of the outermost local maximum above `fraction`·max ρ.
    pub fn outermost_peak(&self, fraction: f64) -> Option<f64> {
        let floor = fraction * self.max();
        (1..self.rho.len().saturating_sub(1))
            .rev()
            .find(|&i| self.rho[i] >= floor && self.rho[i] >= self.rho[i - 1] && self.rho[i] >= self.rho[i + 1])
            .map(|i| self.r[i])
    }

    /// Value at the grid point nearest to `r`.
    pub fn at(&self, r: f64) -> f64 {
        let i = self.r.partition_point(|&x| x < r).min(self.r.len() - 1);
        self.rho[i]
    }
}

/// `n` equally spaced radii on [0, r_max].
pub fn uniform_grid(r_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect()
}

/// COM orthonormality removes cross terms between different COM orbitals and
/// real-harmonic orthonormality those between REL channels, so
/// ρ(r) = Σ_COM Σ_ch (Σ_terms c u_ch(r))².
pub fn radial_pair_density(wf: &PairWavefunction<'_>, grid: &[f64]) -> Result<RadialDensity> {
    let basis = &wf.rel.basis;
    if let Some(&bad) = grid.iter().find(|&&r| !(0.0..=basis.r_max()).contains(&r)) {
        return Err(Error::domain(format!("density grid point {bad} outside [0, {}]", basis.r_max())));
    }
    let comps = wf.rel_components();
    let eval = |r: f64| -> Result<f64> {
        let mut s = 0.0;
        for g in &comps {
            for c in g.values() {
                let u = basis.combine(c, r, 0)?;
                s += u * u;
            }
        }
        Ok(s)
    };
    let q = basis.quadrature();
    let mut norm = 0.0;
    for (&r, &w) in q.nodes.iter().zip(&q.weights) {
        norm += w * eval(r)?;
    }
    if !(norm > 0.0) {
        return Err(Error::domain("state has zero norm"));
    }
    let rho = grid.par_iter().map(|&r| eval(r).map(|v| v / norm)).collect::<Result<Vec<_>>>()?;
    Ok(RadialDensity { r: grid.to_vec(), rho, norm, tag: wf.tag, level: wf.level })
}

/// Difference fields between approximation levels (lower minus higher order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifferenceKind {
    Geom,
    Coup2,
    Coup6,
    Tot,
}

impl DifferenceKind {
    pub const ALL: [DifferenceKind; 4] = [Self::Geom, Self::Coup2, Self::Coup6, Self::Tot];

    /// (minuend, subtrahend) levels.
    pub fn levels(self) -> (Level, Level) {
        match self {
            Self::Geom => (Level::E2, Level::E6),
            Self::Coup2 => (Level::E2, Level::CI2),
            Self::Coup6 => (Level::E6, Level::CI6),
            Self::Tot => (Level::E2, Level::CI6),
        }
    }
}

impl std::fmt::Display for DifferenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Geom => "geom",
            Self::Coup2 => "coup2",
            Self::Coup6 => "coup6",
            Self::Tot => "tot",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CutContent {
    Wavefunction(Level),
    Difference(DifferenceKind),
}

/// Values on an (x₁, x₂) grid with y = z = 0 for both atoms, x₁ outer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbsoluteCut {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<f64>,
    pub content: CutContent,
    pub tag: StateTag,
}

impl AbsoluteCut {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.x2.len() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise difference of two cuts on the same grid.
    pub fn minus(&self, other: &AbsoluteCut, content: CutContent) -> Result<AbsoluteCut> {
        if self.x1 != other.x1 || self.x2 != other.x2 {
            return Err(Error::Incompatible("cuts on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(AbsoluteCut { x1: self.x1.clone(), x2: self.x2.clone(), values, content, tag: self.tag })
    }
}

/// Grid axes and the mass fractions μ_j = m_j / M.
#[derive(Debug, Clone, PartialEq)]
pub struct CutGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub mu1: f64,
    pub mu2: f64,
}

impl CutGrid {
    /// `n`×`n` points over [−half_width, half_width]².
    pub fn square(half_width: f64, n: usize, mu1: f64, mu2: f64) -> Self {
        let n = n.max(2);
        let axis: Vec<f64> = (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect();
        Self { x1: axis.clone(), x2: axis, mu1, mu2 }
    }

    /// (X, x) from (x₁, x₂), inverting x₁ = X + μ₂x, x₂ = X − μ₁x.
    pub fn to_com_rel(&self, x1: f64, x2: f64) -> (f64, f64) {
        (self.mu1 * x1 + self.mu2 * x2, x1 - x2)
    }
}

/// Ψ on the cut, with the global sign chosen so the largest-|Ψ| point is positive.
pub fn wavefunction_cut(wf: &PairWavefunction<'_>, grid: &CutGrid) -> Result<AbsoluteCut> {
    let ev = wf.evaluator();
    let rows = grid
        .x1
        .par_iter()
        .map(|&x1| {
            grid.x2
                .iter()
                .map(|&x2| {
                    let (big_x, x) = grid.to_com_rel(x1, x2);
                    ev.value([big_x, 0.0, 0.0], [x, 0.0, 0.0])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values: Vec<f64> = rows.into_iter().flatten().collect();
    fix_phase(&mut values);
    Ok(AbsoluteCut { x1: grid.x1.clone(), x2: grid.x2.clone(), values, content: CutContent::Wavefunction(wf.level), tag: wf.tag })
}

/// Flips the sign so that the entry of largest magnitude is positive.
pub fn fix_phase(values: &mut [f64]) {
    let peak = values.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if peak < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
}

/// ΔF of `kind` from the two states it compares.
pub fn difference_cut(kind: DifferenceKind, lower: &PairWavefunction<'_>, higher: &PairWavefunction<'_>, grid: &CutGrid) -> Result<AbsoluteCut> {
    let (la, lb) = kind.levels();
    if lower.level != la || higher.level != lb {
        return Err(Error::Incompatible(format!(
            "ΔF_{kind} needs {la} − {lb}, got {} − {}",
            lower.level, higher.level
        )));
    }
    if lower.tag != higher.tag {
        return Err(Error::Incompatible(format!("states tagged {} and {}", lower.tag, higher.tag)));
    }
    check_compatible(lower, higher)?;
    let a = wavefunction_cut(lower, grid)?;
    let b = wavefunction_cut(higher, grid)?;
    a.minus(&b, CutContent::Difference(kind))
}

/// Both states must be expanded on the same COM and REL B-spline bases.
pub fn check_compatible(a: &PairWavefunction<'_>, b: &PairWavefunction<'_>) -> Result<()> {
    if a.same_bases(b) {
        Ok(())
    } else {
        Err(Error::Incompatible("states use different orbital bases".into()))
    }
}
