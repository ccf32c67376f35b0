//! Finite-element spectra against closed forms. The reference values are
//! squares of Bessel zeros and separable rectangle eigenvalues, frozen here.

use std::f64::consts::PI;

use zaremba::analysis::extrapolate_lowest;
use zaremba::geometry::{build_rectangle, build_uniform_disk, BoundaryTag, DomainSpec};
use zaremba::mesh::mesh_unstructured;

fn extrapolated(spec: &DomainSpec, h: f64, seed: u64, count: usize) -> Vec<f64> {
    extrapolate_lowest(&mesh_unstructured(spec, h, seed).unwrap(), &spec.weight, count, 1e-10)
        .unwrap()
        .values
}

fn assert_close(got: &[f64], want: &[f64], rel: f64) {
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= rel * w.max(1.0), "mode {i}: {g} vs {w}");
    }
}

#[test]
fn dirichlet_disk() {
    let want = [
        5.783185962946785,
        14.681970642123892,
        14.681970642123892,
        26.374616427163392,
        26.374616427163392,
        30.471262343662087,
    ];
    assert_close(&extrapolated(&build_uniform_disk(BoundaryTag::Dirichlet), 0.1, 3, 6), &want, 1e-3);
}

#[test]
fn neumann_disk() {
    let want = [0.0, 3.389957716671888, 3.389957716671888, 9.328363213746355, 9.328363213746355];
    assert_close(&extrapolated(&build_uniform_disk(BoundaryTag::Neumann), 0.1, 4, 5), &want, 1e-3);
}

#[test]
fn mixed_square() {
    // Neumann on the left side of [0, pi]^2: (m + 1/2)^2 + n^2
    use BoundaryTag::*;
    let spec = build_rectangle(0.0, 0.0, PI, PI, [Dirichlet, Dirichlet, Dirichlet, Neumann]).unwrap();
    let want = [1.25, 3.25, 4.25, 6.25, 7.25, 9.25];
    assert_close(&extrapolated(&spec, 0.2, 5, 6), &want, 1e-3);
}
