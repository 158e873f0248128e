//! Interatomic interaction curves and the separated lattice polynomial.

mod curve;
pub mod interp;
pub mod io;
pub mod lattice;
pub mod synthetic;

pub use curve::{
    build_interaction, HardSphere, LongRange, NoInteraction, PotentialCurve, RadialPotential, ShortRangeTable,
    SquareWell, WallShift, DEFAULT_JOIN_TOLERANCE,
};
pub use lattice::{separate_lattice, AxisPolynomial, SeparatedLatticePolynomial};
pub use synthetic::{synthetic_curve, SyntheticCurveSpec, SyntheticShortRange};

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_table(end_value: f64) -> ShortRangeTable {
        // Wall, well, then a flat-ish approach ending at `end_value`.
        let r: Vec<f64> = (0..40).map(|i| 4.0 + 0.4 * i as f64).collect();
        let v = r
            .iter()
            .map(|&x| {
                let base = 5.0 * (-(x - 4.0)).exp() - 0.01 * (-(x - 8.0) * (x - 8.0) / 4.0).exp();
                base + end_value * (x - 4.0) / 15.6
            })
            .collect();
        ShortRangeTable::new(r, v).unwrap()
    }

    fn lr0() -> LongRange {
        LongRange { de: 0.0, c6: 0.0, c8: 0.0, c10: 0.0, ex_c: 0.0, ex_alpha: 0.0, ex_beta: 1.0 }
    }

    #[test]
    fn zero_offset_when_branches_agree() {
        let t = flat_table(0.0);
        let end = *t.r.last().unwrap();
        let mut tv = t.clone();
        let last = tv.v.len() - 1;
        tv.v[last] = 0.0;
        let c = build_interaction(tv, lr0(), end, end + 0.5, 1e-12).unwrap();
        assert_eq!(c.merge_offset(), 0.0);
    }

    #[test]
    fn merge_offset_is_half_the_gap() {
        let eps = 1e-4;
        let mut t = flat_table(0.0);
        let last = t.v.len() - 1;
        t.v[last] = 2.0 * eps;
        let end = t.r[last];
        let c = build_interaction(t.clone(), lr0(), end, end + 0.4, 1e-12).unwrap();
        assert!((c.merge_offset().abs() - eps).abs() < 1e-15);
        // The short-range branch moves toward the long-range one.
        assert!(c.value(end) < 2.0 * eps);
        assert!((c.value(end) - eps).abs() < 1e-15);
    }

    #[test]
    fn rejects_inverted_joins_and_unsorted_tables() {
        let t = flat_table(0.0);
        assert!(build_interaction(t.clone(), lr0(), 15.0, 14.0, 1e-12).is_err());
        assert!(ShortRangeTable::new(vec![1.0, 3.0, 2.0, 4.0], vec![0.0; 4]).is_err());
    }

    #[test]
    fn c6_tail_value() {
        let lr = LongRange { c8: 0.0, c10: 0.0, ex_c: 0.0, ..LongRange::rbk(0.0) };
        let expected = -4292.0 / 40f64.powi(6);
        assert!((lr.value(40.0) - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn zero_shift_is_identity_and_outside_window_untouched() {
        let c = synthetic_curve(&SyntheticCurveSpec::default(), None).unwrap();
        let same = c.shift_inner_wall(0.0).unwrap();
        let shifted = c.shift_inner_wall(0.05).unwrap();
        let (_, rb) = c.default_window();
        for i in 0..400 {
            let r = 2.0 + 0.1 * i as f64;
            assert_eq!(same.value(r).to_bits(), c.value(r).to_bits());
            if r >= rb {
                assert_eq!(shifted.value(r).to_bits(), c.value(r).to_bits());
            }
        }
        // Wall pushed outward: higher potential at the old turning point.
        let rt = c.inner_turning_point();
        assert!(shifted.value(rt) > c.value(rt));
    }

    #[test]
    fn excessive_shift_rejected() {
        let c = synthetic_curve(&SyntheticCurveSpec::default(), None).unwrap();
        let (a, b) = c.default_window();
        assert!(c.shift_inner_wall(WallShift::max_shift(a, b) * 1.01).is_err());
        assert!(c.shift_inner_wall_window(0.01, a, c.r_e() + 1.0).is_err());
    }

    #[test]
    fn shifted_curve_is_c1() {
        let c = synthetic_curve(&SyntheticCurveSpec::default(), None).unwrap().shift_inner_wall(0.3).unwrap();
        let w = c.wall_shift().unwrap();
        let h = 1e-5;
        for r in [w.r_a, w.r_b] {
            let left = (c.value(r) - c.value(r - h)) / h;
            let right = (c.value(r + h) - c.value(r)) / h;
            assert!((left - right).abs() < 1e-3 * left.abs() + 1e-7, "{left} {right}");
        }
    }
}
