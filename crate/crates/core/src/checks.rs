//! Self-check suites: matrix-algebra identities, eigensystem and functional-calculus
//! residuals, generic-versus-closed-form connections, the four-band trace displays and
//! band monodromy. Points are drawn from a seeded RNG, so a suite is reproducible.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::Result;
use crate::invariants::{trace_component_checks, IntegrandOptions};
use crate::linalg::{anticommutator, c64, commutator, matrix_sqrt_biortho, max_abs, CMat, C64, DEFAULT_STENCIL};
use crate::models::{dirac_basis, eigensystem, gell_mann_basis, hamiltonian, pauli_basis, Embedding, Family, ModelSpec};
use crate::thermal::{density_matrix, WeightConvention};
use crate::uhlmann::{connection_closed_2d, connection_components_4d, connection_generic_at, loop_monodromy};

/// Largest residual of one suite against its tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    /// Number of sampled points (0 for point-free identities).
    pub points: usize,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.residual < self.tolerance
    }
}

/// How many random points each sampled suite uses.
#[derive(Clone, Copy, Debug)]
pub struct CheckSizes {
    pub connection_points: usize,
    pub trace_points: usize,
    pub thermal_states: usize,
}

impl Default for CheckSizes {
    fn default() -> Self {
        Self { connection_points: 200, trace_points: 50, thermal_states: 100 }
    }
}

fn outcome(name: &'static str, residual: f64, tolerance: f64, points: usize) -> CheckOutcome {
    CheckOutcome { name, residual, tolerance, points }
}

/// NaN-propagating maximum, so a NaN residual can never pass.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Pauli product rule, Gell-Mann orthonormality and structure constants, Clifford
/// anticommutators.
pub fn algebra_checks() -> Vec<CheckOutcome> {
    let i = c64(0.0, 1.0);
    let s = pauli_basis();
    let eps = |a: usize, b: usize, c: usize| (a as f64 - b as f64) * (b as f64 - c as f64) * (c as f64 - a as f64) / 2.0;
    let mut pauli = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let mut rhs = CMat::identity(2, 2) * C64::from(if a == b { 1.0 } else { 0.0 });
            for (c, sc) in s.iter().enumerate() {
                rhs += sc * (i * eps(a, b, c));
            }
            pauli = worst(pauli, max_abs(&(&s[a] * &s[b] - rhs)));
        }
    }

    let l = gell_mann_basis();
    let mut gm = 0.0f64;
    for a in 0..8 {
        for b in 0..8 {
            gm = worst(gm, ((&l[a] * &l[b]).trace() - if a == b { 2.0 } else { 0.0 }).norm());
            // Structure constants read off the trace form must rebuild the commutator.
            let comm = commutator(&l[a], &l[b]);
            let mut rhs = CMat::zeros(3, 3);
            for lc in &l {
                let f = (&comm * lc).trace() / (i * 4.0);
                gm = worst(gm, f.im.abs());
                rhs += lc * (i * 2.0 * f.re);
            }
            gm = worst(gm, max_abs(&(comm - rhs)));
        }
    }
    let f123 = (commutator(&l[0], &l[1]) * &l[2]).trace() / (i * 4.0);
    gm = worst(gm, (f123 - 1.0).norm());

    let g = dirac_basis();
    let mut clifford = 0.0f64;
    for a in 0..5 {
        for b in 0..5 {
            let want = CMat::identity(4, 4) * C64::from(if a == b { 2.0 } else { 0.0 });
            clifford = worst(clifford, max_abs(&(anticommutator(&g[a], &g[b]) - want)));
        }
        clifford = worst(clifford, max_abs(&(&g[a] - g[a].adjoint())));
    }
    vec![outcome("pauli_identities", pauli, 1e-12, 0), outcome("gell_mann_identities", gm, 1e-12, 0), outcome("clifford_identities", clifford, 1e-12, 0)]
}

/// Radius in [0.2, 3] at least 0.2γ away from the exceptional manifold.
fn radius(rng: &mut StdRng) -> f64 {
    loop {
        let r: f64 = rng.random_range(0.2..3.0);
        if (r - 1.0).abs() > 0.2 {
            return r;
        }
    }
}

/// Random interior point of an embedding, kept `margin` away from coordinate poles.
fn point(rng: &mut StdRng, e: &Embedding, margin: f64) -> Vec<f64> {
    e.bounds().iter().map(|&(a, b)| rng.random_range(a + margin..b - margin)).collect()
}

/// Biorthonormality and reconstruction of eigensystems, and `(√ρ)² = ρ`, on random
/// thermal states of every family. NH3 points on the exceptional surface are skipped.
pub fn thermal_checks(seed: u64, states: usize) -> Result<Vec<CheckOutcome>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut biortho, mut recon, mut root, mut used) = (0.0f64, 0.0f64, 0.0f64, 0);
    for k in 0..states {
        let r = radius(&mut rng);
        let (family, emb) = match k % 4 {
            0 => (Family::NH2, Embedding::Sphere2D { radius: r }),
            1 => (Family::NH3, Embedding::S3 { radius: r }),
            2 => (Family::Hermitian3, Embedding::S3 { radius: r }),
            _ => (Family::NH4, Embedding::S4 { radius: r }),
        };
        let spec = ModelSpec::new(family, 1.0, emb)?;
        let p = point(&mut rng, &emb, 0.05);
        let t = rng.random_range(0.05..5.0);
        let Ok(es) = eigensystem(&spec, &p) else { continue };
        used += 1;
        biortho = worst(biortho, es.biorthonormality_residual());
        recon = worst(recon, es.reconstruction_residual(&hamiltonian(&spec, &p)?));
        let state = density_matrix(&es, t, WeightConvention::Abs)?;
        let sq = matrix_sqrt_biortho(&state.weights, &es)?;
        root = worst(root, max_abs(&(&sq * &sq - &state.rho)));
    }
    Ok(vec![
        outcome("biorthonormality", biortho, 1e-10, used),
        outcome("reconstruction", recon, 1e-9, used),
        outcome("sqrt_rho_squared", root, 1e-10, used),
    ])
}

fn rel(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(1.0)
}

/// Generic connection against the two-band and four-band closed forms, the four
/// displayed trace products and their coefficient ratios.
pub fn connection_checks(seed: u64, sizes: CheckSizes) -> Result<Vec<CheckOutcome>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let conv = WeightConvention::Abs;
    let h = DEFAULT_STENCIL;
    let mut two = 0.0f64;
    for _ in 0..sizes.connection_points {
        let emb = Embedding::Sphere2D { radius: radius(&mut rng) };
        let spec = ModelSpec::new(Family::NH2, 1.0, emb)?;
        let p = point(&mut rng, &emb, 0.05);
        let t = rng.random_range(0.1..3.0);
        for mu in 0..2 {
            two = worst(two, rel(&connection_generic_at(&spec, &p, mu, t, conv, h)?, &connection_closed_2d(&spec, &p, mu, t, conv, h)?));
        }
    }
    let opts = IntegrandOptions::default();
    let (mut four, mut traces, mut ratios) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..sizes.connection_points.max(sizes.trace_points) {
        let emb = Embedding::S4 { radius: radius(&mut rng) };
        let spec = ModelSpec::new(Family::NH4, 1.0, emb)?;
        let p = point(&mut rng, &emb, 0.1);
        let t = rng.random_range(0.1..3.0);
        if k < sizes.connection_points {
            for (mu, closed) in connection_components_4d(&spec, &p, t, conv, h)?.iter().enumerate() {
                four = worst(four, rel(&connection_generic_at(&spec, &p, mu, t, conv, h)?, closed));
            }
        }
        if k < sizes.trace_points {
            let report = trace_component_checks(&spec, &p, t, &opts)?;
            traces = worst(traces, report.max_relative());
            ratios = report.ratio.iter().fold(ratios, |a, &b| worst(a, b));
        }
    }
    Ok(vec![
        outcome("connection_nh2_generic_vs_closed", two, 1e-5, sizes.connection_points),
        outcome("connection_nh4_generic_vs_closed", four, 1e-5, sizes.connection_points),
        outcome("trace_displays", traces, 1e-4, sizes.trace_points),
        outcome("trace_ratios", ratios, 1e-4, sizes.trace_points),
    ])
}

/// A loop around the exceptional ring swaps the two bands once and restores them after
/// two windings; a loop that misses it never swaps.
pub fn monodromy_checks() -> Result<Vec<CheckOutcome>> {
    let around = ModelSpec::new(Family::NH2, 1.0, Embedding::Loop2D { r: 2.0, d: 2.5 })?;
    let away = ModelSpec::new(Family::NH2, 1.0, Embedding::Loop2D { r: 0.5, d: 2.5 })?;
    let cases = [(&around, 1, vec![1, 0]), (&around, 2, vec![0, 1]), (&away, 1, vec![0, 1])];
    let mut wrong = 0;
    for (spec, windings, want) in cases {
        if loop_monodromy(spec, windings, 400)? != want {
            wrong += 1;
        }
    }
    Ok(vec![outcome("band_monodromy", wrong as f64, 0.5, 3)])
}

/// Every suite, in a fixed order.
pub fn run_all(seed: u64, sizes: CheckSizes) -> Result<Vec<CheckOutcome>> {
    let mut out = algebra_checks();
    out.extend(thermal_checks(seed, sizes.thermal_states)?);
    out.extend(connection_checks(seed.wrapping_add(1), sizes)?);
    out.extend(monodromy_checks()?);
    Ok(out)
}
