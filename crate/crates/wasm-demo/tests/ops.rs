use omo_wasm_demo::ops::{loss_surface, ome_curves, regret_gap};

#[test]
fn saddle_surface_corner_values() {
    let n = 5;
    let s = loss_surface("saddle", 1.0, 1.0, n).unwrap();
    assert_eq!(s.len(), n * n);
    // x = (0,0) is the first cell, x = (1,1) = o the last
    assert!((s[0] + 2.0 / 3.0).abs() < 1e-12);
    assert!(s[n * n - 1].abs() < 1e-12);
    // r³/3 − r²/2 + rc − c²/2 + c³/3 − 2/3 at r = 0.5, c = 0
    let (r, c) = (0.5f64, 0.0f64);
    let closed = r.powi(3) / 3.0 - r * r / 2.0 + r * c - c * c / 2.0 + c.powi(3) / 3.0 - 2.0 / 3.0;
    assert!((s[2] - closed).abs() < 1e-12);
}

#[test]
fn rotation_gap_is_twice_area() {
    let r = regret_gap("rotation2d", [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]).unwrap();
    let (rn, rs, lp, bound) = (r[0], r[1], r[2], r[3]);
    // o → x → u → o runs clockwise here
    assert!((lp + 1.0).abs() < 1e-12);
    assert!((rs - rn - lp).abs() < 1e-12);
    assert!(lp.abs() <= bound);
}

#[test]
fn saddle_gap_within_bound() {
    for (u, x) in [([0.2, 0.7], [0.8, 0.1]), ([0.0, 0.0], [1.0, 0.3]), ([0.5, 0.5], [0.5, 0.5])] {
        let r = regret_gap("saddle", [1.0, 1.0], u, x).unwrap();
        assert!((r[1] - r[0]).abs() <= r[3] + 1e-12, "{r:?}");
    }
}

#[test]
fn ome_layout_and_determinism() {
    let a = ome_curves("supply-chain", 3, 40, 2).unwrap();
    assert_eq!(a.len(), 3 * 40 + 1);
    assert!(a[120] > 0.0);
    assert_eq!(a, ome_curves("supply-chain", 3, 40, 2).unwrap());
}

#[test]
fn bad_inputs() {
    assert!(loss_surface("nope", 0.0, 0.0, 4).is_err());
    assert!(loss_surface("saddle", 0.0, 0.0, 1).is_err());
    assert!(ome_curves("mln", 0, 0, 2).is_err());
    assert!(ome_curves("unknown", 0, 10, 2).is_err());
}
