use std::f64::consts::PI;

use proptest::prelude::*;
use qpgreen::lattice::{fourier_green, fourier_jmax, windowed_green, EvalPoint, QuasiPeriodicity, WindowProfile};
use qpgreen::wood::{modified_green, GrazingSet, ShiftConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quasi_periodicity_defect_tracks_oracle_error(
        x in -0.5f64..0.5,
        y in -0.5f64..0.5,
        z in 0.2f64..1.4,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let qp = QuasiPeriodicity::new(2.5, 1.0, 1.0, alpha, beta).unwrap();
        prop_assume!(qp.wood_modes(4, 1e-2).is_empty());
        let w = WindowProfile::assembly();
        let a = 30.0;
        let pt = EvalPoint::new(x, y, z);
        let here = windowed_green(&qp, &w, a, pt).unwrap();
        let there = windowed_green(&qp, &w, a, pt.shifted(1.0, 0.0, 0.0)).unwrap();
        let defect = (there - here * num_complex::Complex64::from_polar(1.0, alpha)).norm();
        let exact = fourier_green(&qp, pt, fourier_jmax(&qp, z)).unwrap();
        let there_exact = fourier_green(&qp, pt.shifted(1.0, 0.0, 0.0), fourier_jmax(&qp, z)).unwrap();
        let err = (here - exact).norm().max((there - there_exact).norm());
        prop_assert!(defect <= 2.0 * err + 1e-14, "defect {defect:e}, oracle error {err:e}");
    }
}

#[test]
fn oracle_is_stable_in_truncation() {
    let qp = QuasiPeriodicity::new(2.5, 1.0, 1.2, 0.4, -0.7).unwrap();
    for z in [0.2, 0.7, 1.4] {
        let pt = EvalPoint::new(0.1, -0.3, z);
        let j = fourier_jmax(&qp, z);
        let g = fourier_green(&qp, pt, j).unwrap();
        let g2 = fourier_green(&qp, pt, 2 * j).unwrap();
        assert!((g - g2).norm() <= 1e-10 * g.norm());
    }
}

#[test]
fn modified_kernel_stays_finite_through_wood() {
    let sc = ShiftConfig::default();
    let w = WindowProfile::assembly();
    let pt = EvalPoint::new(0.2, 0.1, 0.5);
    let values: Vec<_> = [-1e-6, 0.0, 1e-6]
        .iter()
        .map(|dk| {
            let qp = QuasiPeriodicity::normal(2.0 * PI + dk, 1.0, 1.0).unwrap();
            let grazing = GrazingSet::detect(&qp, &sc);
            assert!(!grazing.is_empty());
            modified_green(&qp, &w, &sc, &grazing, 40.0, pt).unwrap()
        })
        .collect();
    // Both sides differ from the exact-Wood value by the window truncation error, not by a jump.
    for v in &values {
        assert!(v.norm().is_finite());
    }
    assert!((values[0] - values[1]).norm() < 1e-2 * values[1].norm());
    assert!((values[2] - values[1]).norm() < 1e-2 * values[1].norm());
}
