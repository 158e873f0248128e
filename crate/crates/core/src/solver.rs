//! Galerkin eigensolution of the uncoupled centre-of-mass (COM) and relative
//! (REL) Hamiltonians on a B-spline × real-harmonic basis.
//!
//! Each lattice monomial of a single coordinate keeps the per-axis parity, so
//! the problem splits into the eight parity classes of [`AngularChannel`].
//! Every class is solved densely; within a class the basis is ordered
//! channel-major, index = channel · n_splines + spline.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{AngularChannel, AngularTables};
use crate::basis::{BSplineBasis, SymBanded};
use crate::error::{Error, Result};
use crate::potentials::{RadialPotential, SeparatedLatticePolynomial};
use crate::quantities::Axis;

pub type SharedPotential = Arc<dyn RadialPotential>;

/// Default numbers of orbitals kept for the CI expansion.
pub const DEFAULT_COM_ORBITALS: usize = 60;
pub const DEFAULT_REL_ORBITALS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotionKind {
    Com,
    Rel,
}

#[derive(Clone)]
pub struct HamiltonianSpec {
    pub kind: MotionKind,
    /// M for COM, μ for REL.
    pub mass: f64,
    /// Single-coordinate lattice monomials per axis, (power, weight).
    pub lattice: [Vec<(u32, f64)>; 3],
    pub interaction: Option<SharedPotential>,
    pub l_max: u32,
    /// When false, angular matrices of the lattice are cut to their diagonal.
    pub channel_coupling: bool,
    pub basis: Arc<BSplineBasis>,
}

impl std::fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("kind", &self.kind)
            .field("mass", &self.mass)
            .field("lattice", &self.lattice)
            .field("interaction", &self.interaction.is_some())
            .field("l_max", &self.l_max)
            .field("channel_coupling", &self.channel_coupling)
            .field("splines", &self.basis.len())
            .finish()
    }
}

impl HamiltonianSpec {
    pub fn com(poly: &SeparatedLatticePolynomial, total_mass: f64, basis: Arc<BSplineBasis>, l_max: u32) -> Self {
        Self {
            kind: MotionKind::Com,
            mass: total_mass,
            lattice: poly.axes.clone().map(|a| a.com),
            interaction: None,
            l_max,
            channel_coupling: true,
            basis,
        }
    }

    pub fn rel(
        poly: &SeparatedLatticePolynomial,
        reduced_mass: f64,
        interaction: SharedPotential,
        basis: Arc<BSplineBasis>,
        l_max: u32,
    ) -> Self {
        Self {
            kind: MotionKind::Rel,
            mass: reduced_mass,
            lattice: poly.axes.clone().map(|a| a.rel),
            interaction: Some(interaction),
            l_max,
            channel_coupling: true,
            basis,
        }
    }

    /// Isotropic oscillator ½ m ω² r² split evenly over the axes.
    pub fn harmonic(kind: MotionKind, mass: f64, omega: f64, basis: Arc<BSplineBasis>, l_max: u32) -> Self {
        let w = 0.5 * mass * omega * omega;
        Self {
            kind,
            mass,
            lattice: [vec![(2, w)], vec![(2, w)], vec![(2, w)]],
            interaction: None,
            l_max,
            channel_coupling: true,
            basis,
        }
    }

    pub fn with_interaction(mut self, v: SharedPotential) -> Self {
        self.interaction = Some(v);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::domain("mass must be positive"));
        }
        match (self.kind, self.interaction.is_some()) {
            (MotionKind::Rel, false) => return Err(Error::domain("REL Hamiltonian needs an interaction curve")),
            (MotionKind::Com, true) => return Err(Error::domain("COM Hamiltonian cannot carry an interaction")),
            _ => {}
        }
        for (c, terms) in self.lattice.iter().enumerate() {
            for &(q, w) in terms {
                if q % 2 == 1 {
                    return Err(Error::Symmetry(format!("odd single-coordinate power {q} on axis {c}")));
                }
                if !w.is_finite() {
                    return Err(Error::domain(format!("non-finite lattice weight for power {q}")));
                }
            }
        }
        Ok(())
    }

    fn max_power(&self) -> u32 {
        self.lattice.iter().flatten().map(|t| t.0).max().unwrap_or(0)
    }
}

/// Radial building blocks shared by all sectors.
struct RadialParts {
    s: SymBanded,
    kinetic: SymBanded,
    centrifugal: SymBanded,
    interaction: Option<SymBanded>,
    moments: BTreeMap<u32, SymBanded>,
}

impl RadialParts {
    fn new(spec: &HamiltonianSpec) -> Result<Self> {
        let b = &spec.basis;
        let inv2m = 0.5 / spec.mass;
        let interaction = match &spec.interaction {
            Some(v) => Some(b.radial_matrix(|r| v.value(r))?),
            None => None,
        };
        let mut moments = BTreeMap::new();
        for &(q, _) in spec.lattice.iter().flatten() {
            moments.entry(q).or_insert_with(|| b.moment(q as i32));
        }
        Ok(Self {
            s: b.overlap(),
            kinetic: b.derivative_overlap().scaled(inv2m),
            centrifugal: b.moment(-2).scaled(inv2m),
            interaction,
            moments,
        })
    }
}

/// Dense H and S of one parity class.
#[derive(Debug, Clone)]
pub struct SectorProblem {
    pub parity_class: u8,
    pub channels: Vec<AngularChannel>,
    pub h: Mat<f64>,
    pub s: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub kind: MotionKind,
    pub splines: usize,
    pub sectors: Vec<SectorProblem>,
}

/// Builds H and S for every non-empty parity class.
pub fn assemble(spec: &HamiltonianSpec) -> Result<Assembled> {
    spec.validate()?;
    let tables = AngularTables::new(spec.l_max, spec.max_power())?;
    let parts = RadialParts::new(spec)?;
    // Overlap must be positive definite before anything else.
    parts.s.cholesky()?;
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, ch) in tables.channels.iter().enumerate() {
        by_class.entry(ch.parity_class()).or_default().push(i);
    }
    let sectors = by_class
        .into_par_iter()
        .map(|(class, idx)| sector_problem(spec, &tables, &parts, class, &idx))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assembled { kind: spec.kind, splines: spec.basis.len(), sectors })
}

fn sector_problem(
    spec: &HamiltonianSpec,
    tables: &AngularTables,
    parts: &RadialParts,
    class: u8,
    idx: &[usize],
) -> Result<SectorProblem> {
    let n = spec.basis.len();
    let bw = parts.s.bandwidth();
    let dim = n * idx.len();
    let mut h = Mat::<f64>::zeros(dim, dim);
    let mut s = Mat::<f64>::zeros(dim, dim);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate().take(a + 1) {
            // Angular weights of every radial moment for this channel pair.
            let mut weights: Vec<(&SymBanded, f64)> = Vec::new();
            for axis in Axis::ALL {
                for &(q, w) in &spec.lattice[axis.index()] {
                    if !spec.channel_coupling && ia != ib {
                        continue;
                    }
                    let ang = tables.get(axis, q)?[(ia, ib)];
                    if ang != 0.0 {
                        weights.push((&parts.moments[&q], w * ang));
                    }
                }
            }
            let diag = ia == ib;
            if weights.is_empty() && !diag {
                continue;
            }
            let l = tables.channels[ia].l as f64;
            let cent = l * (l + 1.0);
            for i in 0..n {
                let lo = i.saturating_sub(bw);
                let hi = (i + bw).min(n - 1);
                for j in lo..=hi {
                    let mut v: f64 = weights.iter().map(|(m, w)| w * m.get(i, j)).sum();
                    if diag {
                        v += parts.kinetic.get(i, j) + cent * parts.centrifugal.get(i, j);
                        if let Some(vi) = &parts.interaction {
                            v += vi.get(i, j);
                        }
                        s[(a * n + i, a * n + j)] = parts.s.get(i, j);
                    }
                    h[(a * n + i, b * n + j)] = v;
                    h[(b * n + j, a * n + i)] = v;
                }
            }
        }
    }
    Ok(SectorProblem { parity_class: class, channels: idx.iter().map(|&i| tables.channels[i]).collect(), h, s })
}

/// Dense Cholesky S = L Lᵀ that reports the failing pivot.
fn cholesky(s: &Mat<f64>) -> Result<Mat<f64>> {
    let n = s.nrows();
    let mut l = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::Conditioning { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(l)
}

/// Generalized symmetric-definite eigenpairs H c = ε S c, ascending, the
/// lowest `count` of them; each c is S-normalized.
pub fn eigensolve(h: &Mat<f64>, s: &Mat<f64>, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = h.nrows();
    if h.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(Error::domain("H and S dimensions disagree"));
    }
    if count > n {
        return Err(Error::domain(format!("requested {count} eigenpairs of a {n}-dimensional problem")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let l = cholesky(s)?;
    // A = L⁻¹ H L⁻ᵀ.
    let mut a = h.clone();
    solve_lower_triangular_in_place(l.as_ref(), a.as_mut(), Par::Seq);
    let mut at = a.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), at.as_mut(), Par::Seq);
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (at[(i, j)] + at[(j, i)]);
            at[(i, j)] = m;
            at[(j, i)] = m;
        }
    }
    let evd = at.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = evd.S().column_vector();
    let mut y = evd.U().subcols(0, count).to_owned();
    solve_upper_triangular_in_place(l.transpose(), y.as_mut(), Par::Seq);
    Ok((0..count).map(|k| (vals[k], y.col(k).iter().copied().collect())).collect())
}

/// ‖H c − ε S c‖ / ‖c‖.
pub fn residual(h: &Mat<f64>, s: &Mat<f64>, energy: f64, c: &[f64]) -> f64 {
    let n = c.len();
    let mut num = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        for j in 0..n {
            r += (h[(i, j)] - energy * s[(i, j)]) * c[j];
        }
        num += r * r;
    }
    num.sqrt() / c.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitalTag {
    LeastBound,
    FirstTrapInduced,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Orbital {
    pub kind: MotionKind,
    pub energy: f64,
    pub parity_class: u8,
    pub channels: Vec<AngularChannel>,
    /// Channel-major coefficients, channels.len() × n_splines.
    pub coeffs: Vec<f64>,
    pub dominant: AngularChannel,
    /// Weight of the dominant channel, Σ over its splines of c S c.
    pub dominant_weight: f64,
    pub nodes: u32,
    pub tag: Option<OrbitalTag>,
}

impl Orbital {
    pub fn splines(&self) -> usize {
        self.coeffs.len() / self.channels.len()
    }

    pub fn channel_coeffs(&self, k: usize) -> &[f64] {
        let n = self.splines();
        &self.coeffs[k * n..(k + 1) * n]
    }

    /// Reduced radial function u_k(r) of channel k.
    pub fn radial(&self, basis: &BSplineBasis, k: usize, r: f64) -> Result<f64> {
        basis.combine(self.channel_coeffs(k), r, 0)
    }

    /// ψ at a Cartesian point.
    pub fn value(&self, basis: &BSplineBasis, p: [f64; 3]) -> Result<f64> {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if r == 0.0 {
            // Only l = 0 survives; u/r → u'(0).
            return Ok(self
                .channels
                .iter()
                .enumerate()
                .filter(|(_, ch)| ch.l == 0)
                .map(|(k, _)| basis.combine(self.channel_coeffs(k), 0.0, 1).unwrap_or(0.0))
                .sum::<f64>()
                / (4.0 * std::f64::consts::PI).sqrt());
        }
        if r > basis.r_max() {
            return Ok(0.0);
        }
        let dir = [p[0] / r, p[1] / r, p[2] / r];
        let mut v = 0.0;
        for (k, ch) in self.channels.iter().enumerate() {
            v += self.radial(basis, k, r)? / r * crate::angular::real_ylm_dir(*ch, dir);
        }
        Ok(v)
    }

    /// Σ_k c_kᵀ S c_k.
    pub fn norm(&self, overlap: &SymBanded) -> f64 {
        (0..self.channels.len()).map(|k| overlap.bilinear(self.channel_coeffs(k), self.channel_coeffs(k))).sum()
    }
}

/// A same-sign lobe counts only if its peak reaches this fraction of max|u|.
/// Where the true function has decayed, a finite spline basis leaves small
/// oscillating residues that must not be read as nodes.
pub const NODE_LOBE_FRACTION: f64 = 1e-4;

/// Radial nodes of u sampled at the quadrature nodes.
pub fn count_nodes(basis: &BSplineBasis, coeffs: &[f64]) -> u32 {
    let mut u = Vec::with_capacity(basis.nodes().len());
    basis.for_each_node(|_, _, off, vals, _| {
        let n = coeffs.len() as isize;
        let s: f64 = vals
            .iter()
            .enumerate()
            .filter_map(|(a, v)| {
                let i = off + a as isize;
                (i >= 0 && i < n).then(|| v * coeffs[i as usize])
            })
            .sum();
        u.push(s);
    });
    count_sign_changes(&u)
}

/// Sign changes between significant lobes; small lobes merge into their
/// neighbours.
pub fn count_sign_changes(u: &[f64]) -> u32 {
    let umax = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if umax == 0.0 {
        return 0;
    }
    let mut lobes: Vec<(f64, f64)> = Vec::new();
    for &x in u {
        if x == 0.0 {
            continue;
        }
        let s = x.signum();
        match lobes.last_mut() {
            Some(l) if l.0 == s => l.1 = l.1.max(x.abs()),
            _ => lobes.push((s, x.abs())),
        }
    }
    let mut signs: Vec<f64> = Vec::new();
    for (s, peak) in lobes {
        if peak >= NODE_LOBE_FRACTION * umax && signs.last() != Some(&s) {
            signs.push(s);
        }
    }
    signs.len().saturating_sub(1) as u32
}

/// All orbitals of a Hamiltonian, sorted by energy.
#[derive(Debug, Clone)]
pub struct OrbitalSet {
    pub kind: MotionKind,
    pub basis: Arc<BSplineBasis>,
    pub l_max: u32,
    pub orbitals: Vec<Orbital>,
    /// Largest relative residual ‖Hc − εSc‖/(‖c‖‖H‖) over returned pairs.
    pub max_residual: f64,
}

impl OrbitalSet {
    pub fn tagged(&self, tag: OrbitalTag) -> Option<usize> {
        self.orbitals.iter().position(|o| o.tag == Some(tag))
    }
}

/// Solves every parity class, keeping at most `per_sector` orbitals in each
/// (all when None).
pub fn solve(spec: &HamiltonianSpec, per_sector: Option<usize>) -> Result<OrbitalSet> {
    let asm = assemble(spec)?;
    let basis = &spec.basis;
    let overlap = basis.overlap();
    let n = basis.len();
    let per = asm
        .sectors
        .par_iter()
        .map(|sec| -> Result<(Vec<Orbital>, f64)> {
            let dim = sec.h.nrows();
            let count = per_sector.map_or(dim, |c| c.min(dim));
            let pairs = eigensolve(&sec.h, &sec.s, count)?;
            let hnorm = sec.h.norm_max() * dim as f64;
            let mut worst = 0.0_f64;
            let mut out = Vec::with_capacity(pairs.len());
            for (k, (e, c)) in pairs.into_iter().enumerate() {
                // Residuals of a few representative pairs keep this cheap.
                if k < 4 || k + 1 == count {
                    worst = worst.max(residual(&sec.h, &sec.s, e, &c) / hnorm);
                }
                let weights: Vec<f64> =
                    (0..sec.channels.len()).map(|ch| overlap.bilinear(&c[ch * n..(ch + 1) * n], &c[ch * n..(ch + 1) * n])).collect();
                let (dk, dw) = weights
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
                let nodes = count_nodes(basis, &c[dk * n..(dk + 1) * n]);
                out.push(Orbital {
                    kind: spec.kind,
                    energy: e,
                    parity_class: sec.parity_class,
                    channels: sec.channels.clone(),
                    coeffs: c,
                    dominant: sec.channels[dk],
                    dominant_weight: dw,
                    nodes,
                    tag: None,
                });
            }
            Ok((out, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_residual = per.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut orbitals: Vec<Orbital> = per.into_iter().flat_map(|p| p.0).collect();
    orbitals.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    log::debug!("{:?}: {} orbitals, max residual {max_residual:.2e}", spec.kind, orbitals.len());
    Ok(OrbitalSet { kind: spec.kind, basis: spec.basis.clone(), l_max: spec.l_max, orbitals, max_residual })
}

/// Tags the least-bound (lb) and first trap-induced (1ti) REL orbitals.
///
/// Candidates are s-dominated orbitals of the fully even class, taken in
/// energy order for as long as their node counts keep increasing (the top of
/// a finite basis spectrum is not a physical ladder). lb is the candidate
/// with `bound_count − 1` nodes, 1ti the one with `bound_count` nodes.
pub fn classify(set: &mut OrbitalSet, bound_count: u32) -> Result<()> {
    if set.kind != MotionKind::Rel {
        return Err(Error::domain("classification applies to REL orbitals"));
    }
    if bound_count == 0 {
        return Err(Error::Classification {
            message: "interaction supports no bound state, lb undefined".into(),
            table: String::new(),
        });
    }
    for o in set.orbitals.iter_mut() {
        o.tag = None;
    }
    let cands: Vec<usize> = (0..set.orbitals.len())
        .filter(|&i| {
            let o = &set.orbitals[i];
            o.parity_class == 0 && o.dominant.l == 0
        })
        .collect();
    let mut ladder: Vec<usize> = Vec::new();
    for &i in &cands {
        if let Some(&p) = ladder.last() {
            if set.orbitals[i].nodes <= set.orbitals[p].nodes {
                break;
            }
        }
        ladder.push(i);
    }
    let find = |n: u32| ladder.iter().copied().find(|&i| set.orbitals[i].nodes == n);
    match (find(bound_count - 1), find(bound_count)) {
        (Some(lb), Some(ti)) => {
            set.orbitals[lb].tag = Some(OrbitalTag::LeastBound);
            set.orbitals[ti].tag = Some(OrbitalTag::FirstTrapInduced);
            Ok(())
        }
        _ => Err(Error::Classification {
            message: format!("no ladder states with {} and {bound_count} nodes", bound_count - 1),
            table: cands
                .iter()
                .take(ladder.len() + 8)
                .map(|&i| format!("{:>5} {:>+.10e} {:>4}", i, set.orbitals[i].energy, set.orbitals[i].nodes))
                .collect::<Vec<_>>()
                .join("\n"),
        }),
    }
}
