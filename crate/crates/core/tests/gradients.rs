//! Analytic energy gradients against central finite differences.

mod common;

use common::{data_errors, instance, smooth_error, sparse_error, spatial_error, sum_error, Instance, M, TOL, TRIALS};
use pigment_core::solver::e_data;
use pigment_core::{RenderContext, WavelengthGrid};

fn check(name: &str, f: impl Fn(&Instance) -> f64) {
    for seed in 0..TRIALS {
        let e = f(&instance(seed));
        assert!(e < TOL, "{name} seed {seed}: relative error {e:.3e}");
    }
}

#[test]
fn data_gradient_wrt_weights_and_palette() {
    check("E_data/W", |i| data_errors(i).0);
    check("E_data/H", |i| data_errors(i).1);
}

#[test]
fn sum_gradient() {
    check("E_sum", sum_error);
}

#[test]
fn smooth_gradient() {
    check("E_smooth", smooth_error);
}

#[test]
fn sparse_gradient() {
    check("E_sparse", sparse_error);
}

#[test]
fn spatial_gradient() {
    check("E_spatial", spatial_error);
}

#[test]
fn data_energy_first_order_taylor() {
    let ctx = RenderContext::standard(WavelengthGrid::Bands8);
    let inst = instance(7);
    let w = &inst.w[..M];
    let image = &inst.image[..1];
    let (e0, g, _) = e_data(w, &inst.h, M, image, &ctx).unwrap();
    let remainder = |delta: f64| {
        let mut wp = w.to_vec();
        wp[1] += delta;
        let e = e_data(&wp, &inst.h, M, image, &ctx).unwrap().0;
        (e - e0 - g[1] * delta).abs()
    };
    let (r1, r2) = (remainder(0.01), remainder(0.005));
    assert!(r1 < 1e-3 * (e0.abs() + 1.0), "remainder {r1}");
    // Halving the step quarters a second-order remainder.
    let ratio = r1 / r2;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}
