//! Solver results against independent finite-difference and closed-form oracles.

mod common;

use std::sync::Arc;

use common::{fd_levels, rbk};

use sitepair::basis::{BSplineBasis, KnotSequence};
use sitepair::feshbach::energy_from_asc;
use sitepair::potentials::{separate_lattice, RadialPotential, SquareWell};
use sitepair::solver::{solve, HamiltonianSpec, MotionKind};

#[test]
fn fd_oracle_reproduces_oscillator() {
    let e = fd_levels(|x| 0.5 * x * x, 1.0, -10.0, 10.0, 2000, 3);
    for (k, x) in e.iter().enumerate() {
        assert!((x - (k as f64 + 0.5)).abs() < 1e-9, "{k}: {x}");
    }
}

fn rbk_sextic() -> (sitepair::potentials::SeparatedLatticePolynomial, f64) {
    let (trap, pair) = rbk(1030.0, 40.0, 37.2, 6);
    (separate_lattice(&trap, &pair).unwrap(), pair.total_mass)
}

#[test]
fn sextic_com_matches_separable_finite_difference() {
    let (poly, mass) = rbk_sextic();
    let terms = poly.axes[0].com.clone();
    let v1 = |x: f64| terms.iter().map(|&(p, w)| w * x.powi(p as i32)).sum::<f64>();
    let e1 = fd_levels(v1, mass, -6000.0, 6000.0, 3000, 2);

    let basis = Arc::new(BSplineBasis::new(KnotSequence::linear(0.0, 6000.0, 50, 8).unwrap()).unwrap());
    // Cubic anharmonicity couples l to l ± 4; the p-like triplet needs odd l up to 9.
    let spec = HamiltonianSpec::com(&poly, mass, basis, 10);
    let set = solve(&spec, Some(4)).unwrap();
    let ground = 3.0 * e1[0];
    let first = 2.0 * e1[0] + e1[1];
    let got0 = set.orbitals[0].energy;
    assert!(((got0 - ground) / ground).abs() < 1e-7, "{got0} vs {ground}");
    // The first excitation is triply degenerate (one quantum along any axis).
    for o in &set.orbitals[1..4] {
        assert!(((o.energy - first) / first).abs() < 1e-7, "{} vs {first}", o.energy);
    }
}

struct GaussianWell {
    depth: f64,
    width: f64,
}

impl RadialPotential for GaussianWell {
    fn value(&self, r: f64) -> f64 {
        -self.depth * (-(r / self.width).powi(2)).exp()
    }
    fn inner_radius(&self) -> f64 {
        0.0
    }
    fn range(&self) -> f64 {
        8.0 * self.width
    }
}

#[test]
fn rel_interaction_only_matches_finite_difference() {
    let well = GaussianWell { depth: 12.0, width: 1.0 };
    let r_max = 14.0;
    let fd = fd_levels(|r| well.value(r), 0.7, 0.0, r_max, 3333, 5);
    assert!(fd[0] < 0.0 && fd[1] > 0.0, "{fd:?}");

    let basis = Arc::new(BSplineBasis::new(KnotSequence::linear(0.0, r_max, 80, 8).unwrap()).unwrap());
    let spec = HamiltonianSpec {
        kind: MotionKind::Rel,
        mass: 0.7,
        lattice: [vec![], vec![], vec![]],
        interaction: Some(Arc::new(well)),
        l_max: 0,
        channel_coupling: true,
        basis,
    };
    let set = solve(&spec, Some(5)).unwrap();
    for (k, e) in fd.iter().enumerate() {
        let got = set.orbitals[k].energy;
        assert!((got - e).abs() < 1e-8 * e.abs().max(1.0), "{k}: {got} vs {e}");
        assert_eq!(set.orbitals[k].nodes, k as u32);
    }
}

/// Zero-energy scattering length of a square well.
fn square_well_asc(depth: f64, radius: f64, mu: f64) -> f64 {
    let x = (2.0 * mu * depth).sqrt() * radius;
    radius * (1.0 - x.tan() / x)
}

#[test]
fn harmonic_square_well_follows_gamma_relation() {
    let r0 = 0.01;
    for (kr, window_state) in [(1.50, 0usize), (1.545, 0), (1.60, 1), (1.65, 1)] {
        let depth = (kr / r0) * (kr / r0) / 2.0;
        let a = square_well_asc(depth, r0, 1.0);
        assert!(a.abs() <= 0.3, "{a}");
        let knots = KnotSequence::composite(r0, 9.0, 24, 70, 8).unwrap();
        let basis = Arc::new(BSplineBasis::new(knots).unwrap());
        let spec = HamiltonianSpec::harmonic(MotionKind::Rel, 1.0, 1.0, basis, 0)
            .with_interaction(Arc::new(SquareWell { depth, radius: r0 }));
        let set = solve(&spec, Some(3)).unwrap();
        // With a bound state in the well, the first trap state is the second level.
        let e = set.orbitals[window_state].energy;
        let expect = energy_from_asc(a, 1.0, 1.0, 0).unwrap();
        assert!(((e - expect) / expect).abs() < 2e-3, "a = {a}: {e} vs {expect}");
    }
}

