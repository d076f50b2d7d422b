//! Closed-form ellipse values at phi = pi/8.01, checked against the quoted four-decimal values.

use std::f64::consts::PI;

use trajaccel::lab::{composite_rotation_bounds, elliptical_rotation};

fn r4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[test]
fn ellipse_intervals_at_pi_over_8_01() {
    let e = elliptical_rotation(0.5, PI / 8.01).unwrap();
    assert_eq!((r4(e.ratio_interval.0), r4(e.ratio_interval.1)), (0.5679, 1.7608));
    assert_eq!((r4(e.chi_interval.0), r4(e.chi_interval.1)), (0.1980, 0.7564));
}

#[test]
fn composite_interval_at_pi_over_8_01() {
    let (lo, hi) = composite_rotation_bounds(PI / 3.0, PI / 8.01, 0.5).unwrap();
    assert_eq!((r4(lo), r4(hi)), (0.2908, 0.8492));
}
