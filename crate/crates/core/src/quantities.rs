//! Units, constants, the atom catalog and derived trap parameters.
//!
//! Everything inside the crate is expressed in Hartree atomic units
//! (ħ = mₑ = e = a₀ = 1). Conversions happen only at I/O boundaries.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
pub mod constants {
    /// Bohr radius in nanometres.
    pub const BOHR_NM: f64 = 5.291_772_109_03e-2;
    /// Hartree energy divided by Planck's constant, in kHz.
    pub const HARTREE_KHZ: f64 = 6.579_683_920_502e12;
    /// Unified atomic mass unit in electron masses.
    pub const DALTON_ME: f64 = 1_822.888_486_209;
    /// Atomic unit of intensity, E_h / (t_au a₀²), in W/cm².
    pub const INTENSITY_AU_W_PER_CM2: f64 = 6.436_409_9e15;
}

use constants::*;

/// An atom as seen by the trap: mass and static dipole polarizability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub name: String,
    /// Mass in electron masses.
    pub mass: f64,
    /// Static polarizability in a₀³.
    pub polarizability: f64,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, mass: f64, polarizability: f64) -> Result<Self> {
        let name = name.into();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("atom {name}: mass must be positive, got {mass}")));
        }
        if !(polarizability > 0.0 && polarizability.is_finite()) {
            return Err(Error::domain(format!(
                "atom {name}: polarizability must be positive, got {polarizability}"
            )));
        }
        Ok(Self { name, mass, polarizability })
    }

    /// Looks up one of the built-in isotopes (`Rb87`, `K40`, `Li6`, `Li7`, `Cs133`).
    pub fn from_catalog(name: &str) -> Result<Self> {
        CATALOG
            .iter()
            .find(|entry| entry.0.eq_ignore_ascii_case(name))
            .map(|&(n, mass_u, alpha)| Self { name: n.to_string(), mass: mass_u * DALTON_ME, polarizability: alpha })
            .ok_or_else(|| Error::domain(format!("unknown atom '{name}' (catalog: Rb87, K40, Li6, Li7, Cs133)")))
    }

    pub fn mass_dalton(&self) -> f64 {
        self.mass / DALTON_ME
    }

    /// Recoil energy k²/(2m) for a lattice of the given wavelength (a₀).
    pub fn recoil_energy(&self, wavelength: f64) -> f64 {
        let k = 2.0 * PI / wavelength;
        k * k / (2.0 * self.mass)
    }
}

/// Isotope masses (u) from the AME tables; static polarizabilities (a₀³).
const CATALOG: &[(&str, f64, f64)] = &[
    ("Rb87", 86.909_180_527, 324.0),
    ("K40", 39.963_998_48, 301.0),
    ("Li6", 6.015_122_887_4, 164.1),
    ("Li7", 7.016_003_436_6, 164.1),
    ("Cs133", 132.905_451_961, 401.0),
];

/// Cartesian axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Lattice description: one wavelength per axis, one depth per atom and axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    /// Wavelength per axis, a₀.
    pub wavelength: [f64; 3],
    /// `depth[atom][axis]` in hartree.
    pub depth: [[f64; 3]; 2],
    /// Taylor truncation order of sin²; only 2 and 6 are supported downstream.
    pub taylor_order: u32,
}

impl TrapSpec {
    /// Isotropic cubic lattice with depths given in hartree.
    pub fn isotropic(wavelength_nm: f64, depth1: f64, depth2: f64, taylor_order: u32) -> Result<Self> {
        let spec = Self {
            wavelength: [wavelength_nm / BOHR_NM; 3],
            depth: [[depth1; 3], [depth2; 3]],
            taylor_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Isotropic lattice whose depths are `V_j = α_j · I` with the intensity in W/cm²
    /// converted to atomic units.
    pub fn from_intensity(
        wavelength_nm: f64,
        intensity_w_cm2: f64,
        a1: &AtomSpecies,
        a2: &AtomSpecies,
        taylor_order: u32,
    ) -> Result<Self> {
        let i_au = intensity_w_cm2 / INTENSITY_AU_W_PER_CM2;
        Self::isotropic(wavelength_nm, a1.polarizability * i_au, a2.polarizability * i_au, taylor_order)
    }

    pub fn validate(&self) -> Result<()> {
        for (c, &l) in self.wavelength.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::domain(format!("wavelength on axis {c} must be positive, got {l}")));
            }
        }
        for (j, row) in self.depth.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::domain(format!("depth of atom {} on axis {c} must be positive, got {v}", j + 1)));
                }
            }
        }
        if self.taylor_order < 2 || self.taylor_order % 2 != 0 {
            return Err(Error::domain(format!("Taylor order must be an even integer >= 2, got {}", self.taylor_order)));
        }
        Ok(())
    }

    pub fn wave_number(&self, axis: Axis) -> f64 {
        2.0 * PI / self.wavelength[axis.index()]
    }

    pub fn is_isotropic(&self) -> bool {
        let w = self.wavelength[0];
        self.wavelength.iter().all(|&l| l == w)
            && self.depth.iter().all(|row| row.iter().all(|&v| v == row[0]))
    }

    pub fn with_order(&self, taylor_order: u32) -> Self {
        Self { taylor_order, ..self.clone() }
    }

    /// Half a lattice period along x, the extent of one site.
    pub fn half_period(&self) -> f64 {
        0.5 * self.wavelength[0]
    }
}

/// Masses, mass fractions and the mean oscillator scales of a trapped pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairParameters {
    pub m1: f64,
    pub m2: f64,
    pub total_mass: f64,
    pub reduced_mass: f64,
    /// μ₁ = μ/m₂ = m₁/M.
    pub mu1: f64,
    /// μ₂ = μ/m₁ = m₂/M.
    pub mu2: f64,
    /// Mean relative-motion frequency ω_ho (hartree); `None` for anisotropic traps.
    pub omega_rel: Option<f64>,
    /// Mean centre-of-mass frequency Ω_ho (hartree); `None` for anisotropic traps.
    pub omega_com: Option<f64>,
    /// Oscillator length 1/sqrt(μ ω_ho) in a₀.
    pub a_ho: Option<f64>,
    /// Recoil energy of each atom along x (hartree).
    pub recoil: [f64; 2],
}

impl PairParameters {
    /// Interaction parameter ξ = a_sc / a_ho.
    pub fn xi(&self, a_sc: f64) -> Option<f64> {
        self.a_ho.map(|a| a_sc / a)
    }

    pub fn omega_rel_khz(&self) -> Option<f64> {
        self.omega_rel.map(|w| w * HARTREE_KHZ)
    }

    pub fn omega_com_khz(&self) -> Option<f64> {
        self.omega_com.map(|w| w * HARTREE_KHZ)
    }

    /// Recoil energy k²/(2μ) of the relative particle along x (hartree).
    pub fn relative_recoil(&self, trap: &TrapSpec) -> f64 {
        let k = trap.wave_number(Axis::X);
        k * k / (2.0 * self.reduced_mass)
    }
}

/// Derives masses, mass fractions and the mean harmonic frequencies of the pair.
pub fn derive_pair_parameters(a1: &AtomSpecies, a2: &AtomSpecies, trap: &TrapSpec) -> Result<PairParameters> {
    for a in [a1, a2] {
        if !(a.mass > 0.0 && a.mass.is_finite()) {
            return Err(Error::domain(format!("atom {}: mass must be positive", a.name)));
        }
    }
    trap.validate()?;
    let (m1, m2) = (a1.mass, a2.mass);
    let total = m1 + m2;
    let mu = m1 * m2 / total;
    let mu1 = m1 / total;
    let mu2 = m2 / total;

    let (omega_rel, omega_com, a_ho) = if trap.is_isotropic() {
        let k = trap.wave_number(Axis::X);
        let v1 = trap.depth[0][0];
        let v2 = trap.depth[1][0];
        let w = k * (2.0 * (v1 * mu2 * mu2 + v2 * mu1 * mu1) / mu).sqrt();
        let big_w = k * (2.0 * (v1 + v2) / total).sqrt();
        (Some(w), Some(big_w), Some(1.0 / (mu * w).sqrt()))
    } else {
        (None, None, None)
    };

    Ok(PairParameters {
        m1,
        m2,
        total_mass: total,
        reduced_mass: mu,
        mu1,
        mu2,
        omega_rel,
        omega_com,
        a_ho,
        recoil: [a1.recoil_energy(trap.wavelength[0]), a2.recoil_energy(trap.wavelength[0])],
    })
}

/// Units understood by [`convert`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unit {
    Hartree,
    KiloHertz,
    /// Recoil energy k²/(2m) of a particle of mass `mass` (mₑ) at `wavelength` (a₀).
    Recoil { mass: f64, wavelength: f64 },
    Bohr,
    Nanometer,
    Gauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Energy,
    Length,
    Field,
}

impl Unit {
    fn dimension(self) -> Dimension {
        match self {
            Unit::Hartree | Unit::KiloHertz | Unit::Recoil { .. } => Dimension::Energy,
            Unit::Bohr | Unit::Nanometer => Dimension::Length,
            Unit::Gauss => Dimension::Field,
        }
    }

    /// Size of one of this unit expressed in the base unit of its dimension
    /// (hartree, a₀, G).
    fn scale(self) -> Result<f64> {
        Ok(match self {
            Unit::Hartree | Unit::Bohr | Unit::Gauss => 1.0,
            Unit::KiloHertz => 1.0 / HARTREE_KHZ,
            Unit::Nanometer => 1.0 / BOHR_NM,
            Unit::Recoil { mass, wavelength } => {
                if !(mass > 0.0 && wavelength > 0.0) {
                    return Err(Error::domain("recoil unit needs positive mass and wavelength"));
                }
                let k = 2.0 * PI / wavelength;
                k * k / (2.0 * mass)
            }
        })
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Hartree => write!(f, "hartree"),
            Unit::KiloHertz => write!(f, "kHz"),
            Unit::Recoil { mass, wavelength } => write!(f, "E_r(m={mass}, lambda={wavelength} a0)"),
            Unit::Bohr => write!(f, "a0"),
            Unit::Nanometer => write!(f, "nm"),
            Unit::Gauss => write!(f, "G"),
        }
    }
}

/// Linear conversion between two units of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::UnknownUnit { from: from.to_string(), to: to.to_string() });
    }
    Ok(value * from.scale()? / to.scale()?)
}

pub fn hartree_to_khz(e: f64) -> f64 {
    e * HARTREE_KHZ
}

pub fn khz_to_hartree(e: f64) -> f64 {
    e / HARTREE_KHZ
}

pub fn nm_to_bohr(l: f64) -> f64 {
    l / BOHR_NM
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rbk_trap(v_rb: f64) -> (AtomSpecies, AtomSpecies, TrapSpec) {
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let k = AtomSpecies::from_catalog("K40").unwrap();
        let er = rb.recoil_energy(nm_to_bohr(1030.0));
        let v_k = v_rb * k.polarizability / rb.polarizability;
        let trap = TrapSpec::isotropic(1030.0, v_rb * er, v_k * er, 2).unwrap();
        (rb, k, trap)
    }

    #[test]
    fn rbk_mean_frequency() {
        let (rb, k, trap) = rbk_trap(40.0);
        let p = derive_pair_parameters(&rb, &k, &trap).unwrap();
        assert_relative_eq!(p.omega_rel_khz().unwrap(), 35.7, max_relative = 5e-3);
        let zero_point = 1.5 * (p.omega_rel.unwrap() + p.omega_com.unwrap());
        assert_relative_eq!(hartree_to_khz(zero_point), 100.65, max_relative = 1e-3);
    }

    #[test]
    fn mass_fractions_sum_to_one() {
        let (rb, k, trap) = rbk_trap(27.5);
        let p = derive_pair_parameters(&rb, &k, &trap).unwrap();
        assert!((p.mu1 + p.mu2 - 1.0).abs() < 1e-12);
        assert_relative_eq!(p.mu1, p.reduced_mass / p.m2, max_relative = 1e-14);
    }

    #[test]
    fn identical_atoms_reduce_to_single_particle_relation() {
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let v0 = 1e-11;
        let trap = TrapSpec::isotropic(1064.0, v0, v0, 2).unwrap();
        let p = derive_pair_parameters(&rb, &rb, &trap).unwrap();
        let k = trap.wave_number(Axis::X);
        let expected = k * (2.0 * v0 / rb.mass).sqrt();
        assert_relative_eq!(p.omega_rel.unwrap(), expected, max_relative = 1e-13);
        assert_relative_eq!(p.omega_rel.unwrap(), p.omega_com.unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn frequencies_scale_with_sqrt_depth() {
        let (rb, k, trap) = rbk_trap(30.0);
        let mut doubled = trap.clone();
        for row in doubled.depth.iter_mut() {
            for v in row.iter_mut() {
                *v *= 2.0;
            }
        }
        let p = derive_pair_parameters(&rb, &k, &trap).unwrap();
        let q = derive_pair_parameters(&rb, &k, &doubled).unwrap();
        assert_relative_eq!(q.omega_rel.unwrap() / p.omega_rel.unwrap(), 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(q.omega_com.unwrap() / p.omega_com.unwrap(), 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn anisotropic_trap_leaves_frequencies_unset() {
        let (rb, k, mut trap) = rbk_trap(40.0);
        trap.depth[0][2] *= 1.5;
        let p = derive_pair_parameters(&rb, &k, &trap).unwrap();
        assert!(p.omega_rel.is_none() && p.omega_com.is_none() && p.a_ho.is_none());
        assert!((p.mu1 + p.mu2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        assert!(AtomSpecies::new("x", 0.0, 1.0).is_err());
        assert!(AtomSpecies::new("x", 1.0, -1.0).is_err());
        assert!(TrapSpec::isotropic(1030.0, -1.0, 1.0, 2).is_err());
        assert!(TrapSpec::isotropic(1030.0, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn conversions() {
        assert_eq!(convert(0.0, Unit::Hartree, Unit::KiloHertz).unwrap(), 0.0);
        assert_relative_eq!(convert(1.0, Unit::Hartree, Unit::KiloHertz).unwrap(), 6.579684e12, max_relative = 1e-6);
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let recoil = Unit::Recoil { mass: rb.mass, wavelength: nm_to_bohr(1030.0) };
        let er_khz = convert(1.0, recoil, Unit::KiloHertz).unwrap();
        assert!((er_khz - 2.16).abs() < 0.01, "E_r = {er_khz} kHz");
        assert_relative_eq!(convert(1.0, Unit::Nanometer, Unit::Bohr).unwrap(), 18.897_261_246, max_relative = 1e-9);
        assert!(matches!(convert(1.0, Unit::Gauss, Unit::Hartree), Err(Error::UnknownUnit { .. })));
    }

    #[test]
    fn intensity_convention_matches_recoil_scale() {
        // 200 W/cm² on Rb at 1030 nm is about 30 Rb recoils with V = α·I in atomic units.
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let k = AtomSpecies::from_catalog("K40").unwrap();
        let trap = TrapSpec::from_intensity(1030.0, 200.0, &rb, &k, 2).unwrap();
        let er = rb.recoil_energy(trap.wavelength[0]);
        let ratio = trap.depth[0][0] / er;
        assert!((ratio - 30.0).abs() < 1.0, "V_Rb = {ratio} E_r");
    }

    #[test]
    fn table_two_interaction_parameter() {
        let rb = AtomSpecies::from_catalog("Rb87").unwrap();
        let k = AtomSpecies::from_catalog("K40").unwrap();
        let mu = rb.mass * k.mass / (rb.mass + k.mass);
        let kk = 2.0 * PI / nm_to_bohr(1000.0);
        let er_rel = kk * kk / (2.0 * mu);
        let trap = TrapSpec::isotropic(1000.0, 10.0 * er_rel, 10.0 * er_rel, 2).unwrap();
        let p = derive_pair_parameters(&rb, &k, &trap).unwrap();
        assert_relative_eq!(p.xi(6500.0).unwrap(), 3.34, max_relative = 1e-2);
    }
}
