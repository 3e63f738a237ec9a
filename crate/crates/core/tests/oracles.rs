//! Full quadratures against independent one-dimensional reductions and alternative
//! algebraic forms of the same integrand.

use thermotopo::invariants::{
    nt_chern_2d, nt_chern_2d_reduced, second_chern, second_chern_nt_reduced, wedge_density, IntegrandOptions, QuadratureGrid, Rule, WedgeForm,
};
use thermotopo::{Embedding, Family, ModelSpec};

#[test]
fn nt_chern_matches_berry_reduction() {
    let opts = IntegrandOptions::default();
    for (r, t) in [(2.0, 0.5), (2.0, 3.0), (0.5, 0.5), (1.5, 1.2)] {
        let spec = ModelSpec::new(Family::NH2, 1.0, Embedding::Sphere2D { radius: r }).unwrap();
        let grid = QuadratureGrid::for_embedding(&spec.embedding, &[200, 16], Rule::Trapezoid).unwrap();
        let full = nt_chern_2d(&spec, r, t, &grid, &opts).unwrap().value;
        let reduced = nt_chern_2d_reduced(&spec, r, t, 2000).unwrap().value;
        assert!((full - reduced).abs() < 1e-3, "R={r} T={t}: {full} vs {reduced}");
    }
}

#[test]
fn nt_second_chern_matches_one_dimensional_reduction() {
    let opts = IntegrandOptions::default();
    for (r, t) in [(2.0, 0.5), (2.0, 1.0)] {
        let spec = ModelSpec::new(Family::NH4, 1.0, Embedding::S4 { radius: r }).unwrap();
        let grid = QuadratureGrid::for_embedding(&spec.embedding, &[32, 32, 8, 8], Rule::Trapezoid).unwrap();
        let full = second_chern(&spec, r, t, &grid, false, WedgeForm::Symmetric, &opts).unwrap().value;
        let reduced = second_chern_nt_reduced(&spec, r, t, 2000).unwrap().value;
        assert!((full - reduced).abs() < 1e-2, "R={r} T={t}: {full} vs {reduced}");
    }
}

#[test]
fn wedge_forms_agree() {
    let opts = IntegrandOptions::default();
    let spec = ModelSpec::new(Family::NH4, 1.0, Embedding::S4 { radius: 2.0 }).unwrap();
    for p in [[0.7, 0.4, 0.3, 1.9], [2.1, 1.1, 4.0, 0.2]] {
        let a = wedge_density(&spec, &p, 0.7, WedgeForm::Symmetric, &opts).unwrap();
        let b = wedge_density(&spec, &p, 0.7, WedgeForm::Full, &opts).unwrap();
        assert!((a - b).norm() < 1e-6 * (1.0 + a.norm()), "{a} vs {b}");
    }
}
