//! Configuration interaction: products of COM and REL orbitals coupled by the
//! non-separable lattice monomials X_c^a x_c^b, and the energy ledger that
//! compares harmonic/sextic and uncoupled/coupled results.

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::AngularTables;
use crate::basis::SymBanded;
use crate::error::{Error, Result};
use crate::potentials::SeparatedLatticePolynomial;
use crate::quantities::{hartree_to_khz, Axis};
use crate::solver::{MotionKind, OrbitalSet, OrbitalTag};

/// Below this gap between the two largest |C̃|² the state tag is flagged.
pub const AMBIGUITY_GAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    /// Position in the selected COM orbitals.
    pub com: usize,
    /// Position in the selected REL orbitals.
    pub rel: usize,
    /// Per-axis parity of the product (XOR of the orbital classes).
    pub parity_class: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateTag {
    #[serde(rename = "lb")]
    LeastBound,
    #[serde(rename = "1ti")]
    FirstTrapInduced,
    #[serde(rename = "other")]
    Other,
}

impl std::fmt::Display for StateTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StateTag::LeastBound => "lb",
            StateTag::FirstTrapInduced => "1ti",
            StateTag::Other => "other",
        })
    }
}

impl std::str::FromStr for StateTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lb" => Ok(StateTag::LeastBound),
            "1ti" => Ok(StateTag::FirstTrapInduced),
            "other" => Ok(StateTag::Other),
            _ => Err(Error::domain(format!("unknown state tag '{s}' (expected lb, 1ti or other)"))),
        }
    }
}

impl From<Option<OrbitalTag>> for StateTag {
    fn from(t: Option<OrbitalTag>) -> Self {
        match t {
            Some(OrbitalTag::LeastBound) => StateTag::LeastBound,
            Some(OrbitalTag::FirstTrapInduced) => StateTag::FirstTrapInduced,
            None => StateTag::Other,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CIState {
    pub energy: f64,
    pub coeffs: Vec<f64>,
    /// Index of the dominant configuration.
    pub dominant: usize,
    pub dominant_weight: f64,
    pub tag: StateTag,
    /// Set when the two largest weights differ by less than [`AMBIGUITY_GAP`].
    pub ambiguous: bool,
    pub taylor_order: u32,
}

/// Cartesian product of COM and REL orbitals, COM-major, optionally
/// restricted to one total parity class.
pub fn build_configurations(com_classes: &[u8], rel_classes: &[u8], sector: Option<u8>) -> Result<Vec<Configuration>> {
    if com_classes.is_empty() || rel_classes.is_empty() {
        return Err(Error::domain("configuration product needs COM and REL orbitals"));
    }
    let mut out = Vec::new();
    for (i, &ci) in com_classes.iter().enumerate() {
        for (j, &cj) in rel_classes.iter().enumerate() {
            let parity_class = ci ^ cj;
            if sector.is_none_or(|s| s == parity_class) {
                out.push(Configuration { com: i, rel: j, parity_class });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Symmetry(format!("no configuration in parity class {sector:?}")));
    }
    Ok(out)
}

/// ⟨i| c^p |j⟩ for the selected orbitals of a set, per axis and power.
#[derive(Debug, Clone)]
pub struct MomentTables {
    pub max_power: u32,
    /// [axis][p], each selected × selected.
    pub tables: [Vec<Mat<f64>>; 3],
}

impl MomentTables {
    pub fn get(&self, axis: Axis, p: u32) -> &Mat<f64> {
        &self.tables[axis.index()][p as usize]
    }
}

pub fn moment_tables(set: &OrbitalSet, selected: &[usize], max_power: u32) -> Result<MomentTables> {
    let ang = AngularTables::new(set.l_max, max_power)?;
    let basis = &set.basis;
    let radial: Vec<SymBanded> = (0..=max_power).map(|p| basis.moment(p as i32)).collect();
    let orbs: Vec<_> = selected.iter().map(|&k| &set.orbitals[k]).collect();
    let global: Vec<Vec<usize>> = orbs
        .iter()
        .map(|o| {
            o.channels
                .iter()
                .map(|ch| ang.index_of(*ch).ok_or_else(|| Error::Incompatible(format!("channel {ch} beyond l_max"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = orbs.len();
    let mut tables: [Vec<Mat<f64>>; 3] = Default::default();
    for axis in Axis::ALL {
        for p in 0..=max_power {
            let a = ang.get(axis, p)?;
            let m = &radial[p as usize];
            // Column j: radial moment applied to every channel of orbital j.
            let cols: Vec<Vec<Vec<f64>>> = orbs
                .par_iter()
                .map(|o| (0..o.channels.len()).map(|k| m.matvec(o.channel_coeffs(k))).collect())
                .collect();
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let oi = orbs[i];
                    (0..n)
                        .map(|j| {
                            let mut v = 0.0;
                            for (ki, &gi) in global[i].iter().enumerate() {
                                for (kj, &gj) in global[j].iter().enumerate() {
                                    let w = a[(gi, gj)];
                                    if w != 0.0 {
                                        v += w * dot(oi.channel_coeffs(ki), &cols[j][kj]);
                                    }
                                }
                            }
                            v
                        })
                        .collect()
                })
                .collect();
            tables[axis.index()].push(Mat::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + rows[j][i])));
        }
    }
    Ok(MomentTables { max_power, tables })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// W[k, k'] = Σ_c Σ_(a,b) w_ab ⟨ψ|X_c^a|ψ'⟩⟨φ|x_c^b|φ'⟩ over the configurations.
pub fn assemble_w(
    configs: &[Configuration],
    poly: &SeparatedLatticePolynomial,
    com: &MomentTables,
    rel: &MomentTables,
) -> Result<Mat<f64>> {
    for axis in Axis::ALL {
        for &(a, b, _) in &poly.axis(axis).coupling {
            if a > com.max_power || b > rel.max_power {
                return Err(Error::AngularDegree { degree: a.max(b), max: com.max_power.min(rel.max_power) });
            }
        }
    }
    let n = configs.len();
    let terms: Vec<(Axis, u32, u32, f64)> = Axis::ALL
        .iter()
        .flat_map(|&ax| poly.axis(ax).coupling.iter().map(move |&(a, b, w)| (ax, a, b, w)))
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let ck = configs[k];
            (0..=k)
                .map(|l| {
                    let cl = configs[l];
                    terms
                        .iter()
                        .map(|&(ax, a, b, w)| w * com.get(ax, a)[(ck.com, cl.com)] * rel.get(ax, b)[(ck.rel, cl.rel)])
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(Mat::from_fn(n, n, |i, j| if j <= i { rows[i][j] } else { rows[j][i] }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiOptions {
    pub com_orbitals: usize,
    pub rel_orbitals: usize,
    /// Total parity class to diagonalize; None keeps every configuration.
    pub sector: Option<u8>,
    /// Include Ŵ; when false the CI matrix is diagonal.
    pub coupling: bool,
}

impl Default for CiOptions {
    fn default() -> Self {
        Self {
            com_orbitals: crate::solver::DEFAULT_COM_ORBITALS,
            rel_orbitals: crate::solver::DEFAULT_REL_ORBITALS,
            sector: Some(0),
            coupling: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CiResult {
    pub taylor_order: u32,
    /// Orbital-set indices of the selected COM and REL orbitals.
    pub com_selected: Vec<usize>,
    pub rel_selected: Vec<usize>,
    pub configs: Vec<Configuration>,
    /// Uncoupled energies ε_i + ϵ_j per configuration.
    pub diagonal: Vec<f64>,
    pub states: Vec<CIState>,
    /// Uncoupled energy of the ground COM orbital with the lb / 1ti REL orbital.
    pub uncoupled_lb: Option<f64>,
    pub uncoupled_ti: Option<f64>,
}

impl CiResult {
    /// Lowest CI state carrying `tag`.
    pub fn state(&self, tag: StateTag) -> Option<&CIState> {
        self.states.iter().find(|s| s.tag == tag)
    }

    pub fn uncoupled(&self, tag: StateTag) -> Option<f64> {
        match tag {
            StateTag::LeastBound => self.uncoupled_lb,
            StateTag::FirstTrapInduced => self.uncoupled_ti,
            StateTag::Other => None,
        }
    }
}

/// COM: the lowest `n` orbitals. REL: `n` orbitals upward from lb (or from
/// the bottom when nothing is tagged).
pub fn select_orbitals(com: &OrbitalSet, rel: &OrbitalSet, opt: &CiOptions) -> (Vec<usize>, Vec<usize>) {
    let cs: Vec<usize> = (0..com.orbitals.len().min(opt.com_orbitals)).collect();
    let start = rel.tagged(OrbitalTag::LeastBound).unwrap_or(0);
    let rs: Vec<usize> = (start..rel.orbitals.len().min(start + opt.rel_orbitals)).collect();
    (cs, rs)
}

/// Full CI on the selected orbitals.
pub fn run_ci(com: &OrbitalSet, rel: &OrbitalSet, poly: &SeparatedLatticePolynomial, opt: &CiOptions) -> Result<CiResult> {
    if com.kind != MotionKind::Com || rel.kind != MotionKind::Rel {
        return Err(Error::Incompatible("CI needs one COM and one REL orbital set".into()));
    }
    let (cs, rs) = select_orbitals(com, rel, opt);
    let com_classes: Vec<u8> = cs.iter().map(|&i| com.orbitals[i].parity_class).collect();
    let rel_classes: Vec<u8> = rs.iter().map(|&i| rel.orbitals[i].parity_class).collect();
    let configs = build_configurations(&com_classes, &rel_classes, opt.sector)?;
    let diagonal: Vec<f64> =
        configs.iter().map(|c| com.orbitals[cs[c.com]].energy + rel.orbitals[rs[c.rel]].energy).collect();
    let n = configs.len();
    let mut h = if opt.coupling && poly.has_coupling() {
        let max_a = poly.axes.iter().flat_map(|a| a.coupling.iter().map(|t| t.0)).max().unwrap_or(0);
        let max_b = poly.axes.iter().flat_map(|a| a.coupling.iter().map(|t| t.1)).max().unwrap_or(0);
        let mc = moment_tables(com, &cs, max_a)?;
        let mr = moment_tables(rel, &rs, max_b)?;
        assemble_w(&configs, poly, &mc, &mr)?
    } else {
        Mat::zeros(n, n)
    };
    for k in 0..n {
        h[(k, k)] += diagonal[k];
    }
    let rel_tags: Vec<StateTag> = rs.iter().map(|&i| rel.orbitals[i].tag.into()).collect();
    let states = diagonalize_ci(&h, &configs, &rel_tags, poly.order)?;
    let e_com0 = com.orbitals[cs[0]].energy;
    let uncoupled_for = |tag: OrbitalTag| rel.tagged(tag).map(|j| e_com0 + rel.orbitals[j].energy);
    Ok(CiResult {
        taylor_order: poly.order,
        com_selected: cs,
        rel_selected: rs,
        configs,
        diagonal,
        states,
        uncoupled_lb: uncoupled_for(OrbitalTag::LeastBound),
        uncoupled_ti: uncoupled_for(OrbitalTag::FirstTrapInduced),
    })
}

/// Full spectrum of a symmetric CI matrix, tagged by the REL orbital of the
/// dominant configuration.
pub fn diagonalize_ci(h: &Mat<f64>, configs: &[Configuration], rel_tags: &[StateTag], taylor_order: u32) -> Result<Vec<CIState>> {
    let n = h.nrows();
    if h.ncols() != n || configs.len() != n {
        return Err(Error::domain("CI matrix and configuration list disagree"));
    }
    let diagonal = (0..n).all(|i| (0..i).all(|j| h[(i, j)] == 0.0 && h[(j, i)] == 0.0));
    let (vals, u) = if diagonal {
        // Exact: the configurations themselves are the eigenvectors.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| h[(a, a)].total_cmp(&h[(b, b)]));
        (order.iter().map(|&i| h[(i, i)]).collect::<Vec<_>>(), Mat::from_fn(n, n, |i, k| if i == order[k] { 1.0 } else { 0.0 }))
    } else {
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        (evd.S().column_vector().iter().copied().collect(), evd.U().to_owned())
    };
    let mut states = Vec::with_capacity(n);
    for k in 0..n {
        let coeffs: Vec<f64> = u.col(k).iter().copied().collect();
        let (mut d, mut top, mut second) = (0, -1.0, -1.0);
        for (i, c) in coeffs.iter().enumerate() {
            let w = c * c;
            if w > top {
                second = top;
                top = w;
                d = i;
            } else if w > second {
                second = w;
            }
        }
        let ambiguous = top - second.max(0.0) < AMBIGUITY_GAP;
        if ambiguous {
            log::debug!("CI state {k}: dominant weight {top:.3} vs {second:.3}, tag uncertain");
        }
        states.push(CIState {
            energy: vals[k],
            coeffs,
            dominant: d,
            dominant_weight: top,
            tag: rel_tags[configs[d].rel],
            ambiguous,
            taylor_order,
        });
    }
    Ok(states)
}

/// Energy differences between the harmonic (2) and sextic (6) truncations,
/// each without (E) and with (ℰ) the coupling term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub tag: StateTag,
    pub e2: f64,
    pub e6: f64,
    pub ci2: f64,
    pub ci6: f64,
    /// E^(2) − E^(6).
    pub geom: f64,
    /// E^(2) − ℰ^(2).
    pub coup2: f64,
    /// E^(6) − ℰ^(6).
    pub coup6: f64,
    /// Δ_geom + Δ_coup^(6) = E^(2) − ℰ^(6).
    pub tot: f64,
}

impl EnergyLedger {
    pub fn from_energies(tag: StateTag, e2: f64, e6: f64, ci2: f64, ci6: f64) -> Self {
        let geom = e2 - e6;
        let coup2 = e2 - ci2;
        let coup6 = e6 - ci6;
        Self { tag, e2, e6, ci2, ci6, geom, coup2, coup6, tot: geom + coup6 }
    }

    /// Same ledger with every energy converted to kHz.
    pub fn to_khz(&self) -> Self {
        let k = hartree_to_khz;
        Self {
            tag: self.tag,
            e2: k(self.e2),
            e6: k(self.e6),
            ci2: k(self.ci2),
            ci6: k(self.ci6),
            geom: k(self.geom),
            coup2: k(self.coup2),
            coup6: k(self.coup6),
            tot: k(self.tot),
        }
    }

    /// Same ledger in units of `omega`.
    pub fn in_units(&self, omega: f64) -> Self {
        let f = |x: f64| x / omega;
        Self {
            tag: self.tag,
            e2: f(self.e2),
            e6: f(self.e6),
            ci2: f(self.ci2),
            ci6: f(self.ci6),
            geom: f(self.geom),
            coup2: f(self.coup2),
            coup6: f(self.coup6),
            tot: f(self.tot),
        }
    }
}

/// Ledger for `tag` from the harmonic and sextic CI runs.
pub fn ledger(tag: StateTag, harmonic: &CiResult, sextic: &CiResult) -> Result<EnergyLedger> {
    let missing = |level: &str| Error::IncompleteLedger { tag: tag.to_string(), level: level.into() };
    let e2 = harmonic.uncoupled(tag).ok_or_else(|| missing("E2"))?;
    let e6 = sextic.uncoupled(tag).ok_or_else(|| missing("E6"))?;
    let ci2 = harmonic.state(tag).ok_or_else(|| missing("CI2"))?.energy;
    let ci6 = sextic.state(tag).ok_or_else(|| missing("CI6"))?.energy;
    Ok(EnergyLedger::from_energies(tag, e2, e6, ci2, ci6))
}

#[cfg(test)]
pub(crate) mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::basis::{BSplineBasis, KnotSequence};
    use crate::potentials::{separate_lattice, NoInteraction};
    use crate::quantities::{derive_pair_parameters, AtomSpecies, TrapSpec};
    use crate::solver::{solve, HamiltonianSpec};

    #[test]
    fn product_order_and_parity_filter() {
        let c = build_configurations(&[0, 1], &[0, 1, 0], None).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!((c[0].com, c[0].rel), (0, 0));
        assert_eq!((c[3].com, c[3].rel), (1, 0));
        let f = build_configurations(&[0, 1], &[0, 1, 0, 1], Some(0)).unwrap();
        assert_eq!(f.len(), 4);
        assert!(matches!(build_configurations(&[0], &[0], Some(3)), Err(Error::Symmetry(_))));
    }

    #[test]
    fn ledger_identity() {
        let l = EnergyLedger::from_energies(StateTag::FirstTrapInduced, 3.1, 2.9, 3.05, 2.7);
        assert_eq!(l.tot - (l.geom + l.coup6), 0.0);
        assert!((l.tot - (3.1 - 2.7)).abs() < 1e-15);
    }

    /// Small toy system: orbitals of Rb-K in a weak sextic trap, tiny bases.
    pub(crate) fn toy(order: u32, l_max: u32) -> (OrbitalSet, OrbitalSet, SeparatedLatticePolynomial) {
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let k = AtomSpecies::from_catalog("K40").unwrap();
        let lam = crate::quantities::nm_to_bohr(1030.0);
        let er = rb.recoil_energy(lam);
        let trap = TrapSpec::isotropic(1030.0, 40.0 * er, 37.2 * er, order).unwrap();
        let pair = derive_pair_parameters(&rb, &k, &trap).unwrap();
        let poly = separate_lattice(&trap, &pair).unwrap();
        let bc = Arc::new(BSplineBasis::new(KnotSequence::linear(0.0, 0.5 * lam, 12, 6).unwrap()).unwrap());
        let br = Arc::new(BSplineBasis::new(KnotSequence::linear(0.0, 0.6 * lam, 14, 6).unwrap()).unwrap());
        let com = solve(&HamiltonianSpec::com(&poly, pair.total_mass, bc, l_max), Some(6)).unwrap();
        let rel = solve(&HamiltonianSpec::rel(&poly, pair.reduced_mass, Arc::new(NoInteraction), br, l_max), Some(6)).unwrap();
        (com, rel, poly)
    }

    #[test]
    fn harmonic_homonuclear_is_separable() {
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let trap = TrapSpec::isotropic(1030.0, 1e-11, 1e-11, 2).unwrap();
        let pair = derive_pair_parameters(&rb, &rb, &trap).unwrap();
        let poly = separate_lattice(&trap, &pair).unwrap();
        assert!(!poly.has_coupling());
        let lam = crate::quantities::nm_to_bohr(1030.0);
        let b = Arc::new(BSplineBasis::new(KnotSequence::linear(0.0, 0.5 * lam, 12, 6).unwrap()).unwrap());
        let com = solve(&HamiltonianSpec::com(&poly, pair.total_mass, b.clone(), 1), Some(4)).unwrap();
        let rel = solve(&HamiltonianSpec::rel(&poly, pair.reduced_mass, Arc::new(NoInteraction), b, 1), Some(4)).unwrap();
        let r = run_ci(&com, &rel, &poly, &CiOptions { com_orbitals: 6, rel_orbitals: 6, sector: None, coupling: true }).unwrap();
        let mut d = r.diagonal.clone();
        d.sort_by(f64::total_cmp);
        for (s, e) in r.states.iter().zip(&d) {
            assert!((s.energy - e).abs() <= 1e-10 * e.abs(), "{} vs {e}", s.energy);
            assert!((s.dominant_weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_match_brute_force_quadrature() {
        let (com, rel, poly) = toy(6, 2);
        let (cs, rs) = (vec![0, 1, 2, 3], vec![0, 1, 2, 3]);
        let mc = moment_tables(&com, &cs, 5).unwrap();
        let mr = moment_tables(&rel, &rs, 5).unwrap();
        let com_classes: Vec<u8> = cs.iter().map(|&i| com.orbitals[i].parity_class).collect();
        let rel_classes: Vec<u8> = rs.iter().map(|&i| rel.orbitals[i].parity_class).collect();
        let configs = build_configurations(&com_classes, &rel_classes, None).unwrap();
        let w = assemble_w(&configs, &poly, &mc, &mr).unwrap();
        // Brute force: both orbitals sampled pointwise on spherical product grids.
        let gc = sphere_grid(&com.basis, 6);
        let gr = sphere_grid(&rel.basis, 6);
        let vals = |set: &OrbitalSet, sel: &[usize], g: &[([f64; 3], f64)]| -> Vec<Vec<f64>> {
            sel.iter().map(|&i| g.iter().map(|(p, _)| set.orbitals[i].value(&set.basis, *p).unwrap()).collect()).collect()
        };
        let vc = vals(&com, &cs, &gc);
        let vr = vals(&rel, &rs, &gr);
        let picks = [(0usize, 0usize), (0, 5), (3, 12), (7, 9), (10, 15)];
        let wmax = (0..w.nrows()).map(|i| w[(i, i)].abs()).fold(1e-300, f64::max);
        for &(k, l) in &picks {
            let (ck, cl) = (configs[k], configs[l]);
            // The product grid factorizes per monomial X_c^a x_c^b.
            let grid_moment = |g: &[([f64; 3], f64)], v: &[Vec<f64>], i: usize, j: usize, c: usize, p: u32| -> f64 {
                g.iter().enumerate().map(|(n, (pt, wt))| v[i][n] * v[j][n] * wt * pt[c].powi(p as i32)).sum()
            };
            let mut sum = 0.0;
            for (c, ax) in poly.axes.iter().enumerate() {
                for &(a, b, wab) in &ax.coupling {
                    sum += wab
                        * grid_moment(&gc, &vc, ck.com, cl.com, c, a)
                        * grid_moment(&gr, &vr, ck.rel, cl.rel, c, b);
                }
            }
            assert!((sum - w[(k, l)]).abs() < 1e-8 * wmax, "({k},{l}): {sum} vs {}", w[(k, l)]);
        }
    }

    /// Per-interval Gauss-Legendre in r (the basis rule), Gauss-Legendre in
    /// cos θ and uniform in φ.
    fn sphere_grid(basis: &crate::basis::BSplineBasis, na: usize) -> Vec<([f64; 3], f64)> {
        let (ct, wt) = crate::basis::gauss_legendre(na);
        let nphi = 2 * na;
        let q = basis.quadrature();
        let mut out = Vec::new();
        for (&r, &wi) in q.nodes.iter().zip(&q.weights) {
            let wr = wi * r * r;
            for (c, wc) in ct.iter().zip(&wt) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..nphi {
                    let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nphi as f64;
                    let wphi = 2.0 * std::f64::consts::PI / nphi as f64;
                    out.push(([r * s * phi.cos(), r * s * phi.sin(), r * c], wr * wc * wphi));
                }
            }
        }
        out
    }

    #[test]
    fn harmonic_heteronuclear_couples_linear_terms_only() {
        let (_, _, poly) = toy(2, 0);
        for ax in &poly.axes {
            assert_eq!(ax.coupling.len(), 1);
            assert_eq!((ax.coupling[0].0, ax.coupling[0].1), (1, 1));
        }
    }

    #[test]
    fn more_configurations_never_raise_the_ground_state() {
        let (com, rel, poly) = toy(6, 1);
        let mut last = f64::INFINITY;
        for n in [2, 4, 6] {
            let r = run_ci(&com, &rel, &poly, &CiOptions { com_orbitals: n, rel_orbitals: n, sector: Some(0), coupling: true })
                .unwrap();
            let e = r.states[0].energy;
            assert!(e <= last + 1e-15 * e.abs(), "{n}: {e} > {last}");
            last = e;
        }
    }

    #[test]
    fn uncoupled_ci_is_diagonal() {
        let (com, rel, poly) = toy(6, 1);
        let r = run_ci(&com, &rel, &poly, &CiOptions { com_orbitals: 4, rel_orbitals: 4, sector: None, coupling: false }).unwrap();
        let mut d = r.diagonal.clone();
        d.sort_by(f64::total_cmp);
        for (s, e) in r.states.iter().zip(&d) {
            assert_eq!(s.energy, *e);
        }
    }
}
