//! Uhlmann connection, holonomy (Uhlmann phase) and curvature.
//!
//! Sign convention. The connection is taken as
//!
//! ```text
//! A_U = −Σ_{m≠n} Π_m [∂√ρ, √ρ] Π_n / (P_m + P_n)
//! ```
//!
//! with Π the (level) spectral projectors. This is the orientation in which the
//! closed form reads `A_U = f(T)[Π₁, ∂Π₁]` (Π₁ the upper-band projector) and in which
//! `Tr(ρF_U)` equals `tanh³(E/T)` times the biorthogonal Berry curvature of the
//! lower band, so that `C_U = (i/2π)∫λ Tr(ρF_U) = +1` outside the exceptional ring.
//! Holonomy phases do not depend on this sign.
//!
//! Diagonal blocks `Π_m[∂√ρ,√ρ]Π_m` vanish identically (`Π_m√ρ = √P_m Π_m`), so only
//! `m ≠ n` is summed; for the same reason the Boltzmann weights inside `√ρ(x ± h)` are
//! held at their value at `x` — their derivative only ever feeds those diagonal blocks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{match_levels, max_abs, path_ordered_exp, CMat, EigenSystem, C64, DEFAULT_STENCIL};
use crate::models::{analytic_eigensystem, eigensystem, Embedding, Family, ModelSpec};
use crate::thermal::{density_matrix, effective_energy, f_factor, WeightConvention};

/// Connection values sampled at a list of parameter points, one matrix per direction.
#[derive(Clone, Debug)]
pub struct ConnectionField {
    pub points: Vec<Vec<f64>>,
    pub components: Vec<Vec<CMat>>,
}

/// Level weights, level projectors and `√ρ` at one point.
struct LevelData {
    eigsys: EigenSystem,
    weights: Vec<f64>,
    projectors: Vec<CMat>,
}

fn level_data(spec: &ModelSpec, p: &[f64], t: f64, conv: WeightConvention) -> Result<LevelData> {
    let eigsys = eigensystem(spec, p)?;
    let state = density_matrix(&eigsys, t, conv)?;
    let nl = eigsys.levels().len();
    let weights = (0..nl).map(|l| state.level_weight(l)).collect();
    let projectors = (0..nl).map(|l| eigsys.level_projector(l)).collect();
    Ok(LevelData { eigsys, weights, projectors })
}

fn shifted(p: &[f64], direction: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[direction] += h;
    q
}

/// Generic Uhlmann connection component `A_U^μ` at `p`, built from `√ρ` by central
/// differences with energy-matched levels at the stencil points.
pub fn connection_generic_at(spec: &ModelSpec, p: &[f64], direction: usize, t: f64, conv: WeightConvention, h: f64) -> Result<CMat> {
    let center = level_data(spec, p, t, conv)?;
    let nl = center.weights.len();
    let n = spec.dim();
    let sqrt_w: Vec<f64> = center.weights.iter().map(|w| w.sqrt()).collect();
    let s0 = center.projectors.iter().zip(&sqrt_w).fold(CMat::zeros(n, n), |acc, (pr, s)| acc + pr * C64::from(*s));

    let sqrt_rho_near = |sign: f64| -> Result<CMat> {
        let es = eigensystem(spec, &shifted(p, direction, sign * h))?;
        let map = match_levels(&center.eigsys, &es)?;
        Ok((0..nl).fold(CMat::zeros(n, n), |acc, l| acc + es.level_projector(map[l]) * C64::from(sqrt_w[l])))
    };
    let ds = (sqrt_rho_near(1.0)? - sqrt_rho_near(-1.0)?) / C64::from(2.0 * h);
    let comm = &ds * &s0 - &s0 * &ds;

    let mut a = CMat::zeros(n, n);
    for m in 0..nl {
        for k in 0..nl {
            if m == k {
                continue;
            }
            let sum = center.weights[m] + center.weights[k];
            if sum < 1e-300 {
                return Err(Error::DenominatorUnderflow { sum });
            }
            a -= &center.projectors[m] * &comm * &center.projectors[k] / C64::from(sum);
        }
    }
    Ok(a)
}

/// All components of the generic connection at each point (points evaluated in parallel).
pub fn connection_generic(spec: &ModelSpec, points: &[Vec<f64>], t: f64, conv: WeightConvention, h: f64) -> Result<ConnectionField> {
    let dim = spec.embedding.param_dim();
    let components = points
        .par_iter()
        .map(|p| (0..dim).map(|mu| connection_generic_at(spec, p, mu, t, conv, h)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ConnectionField { points: points.to_vec(), components })
}

/// Closed-form eigensystems at `p ± h e_μ`, bands re-ordered to continue those at `p`
/// and right vectors rephased so `⟨u_n^L(p)|u_n(p±h)⟩` is real and positive.
fn smoothed_neighbours(spec: &ModelSpec, p: &[f64], center: &EigenSystem, direction: usize, h: f64) -> Result<[(CMat, CMat); 2]> {
    let mut out = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let es = analytic_eigensystem(spec, &shifted(p, direction, sign * h))?;
        let map = match_levels(center, &es)?;
        let order: Vec<usize> = (0..center.dim())
            .map(|b| {
                let l = center.level_of(b);
                es.levels()[map[l]][center.labels()[b]]
            })
            .collect();
        let n = center.dim();
        let mut right = CMat::zeros(n, n);
        let mut left = CMat::zeros(n, n);
        for (k, &o) in order.iter().enumerate() {
            let r = es.right().column(o).into_owned();
            let l = es.left().row(o).into_owned();
            let ov = (center.left().row(k) * &r)[(0, 0)];
            let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::from(1.0) };
            right.set_column(k, &(r * phase));
            left.set_row(k, &(l / phase));
        }
        out.push((right, left));
    }
    let minus = out.pop().unwrap();
    let plus = out.pop().unwrap();
    Ok([plus, minus])
}

/// Closed-form connection of the two-band model,
/// `A^μ = f(T)(|u₁⟩⟨u₂^L|⟨∂u₁^L|u₂⟩ − |u₂⟩⟨u₁^L|⟨u₂^L|∂u₁⟩)`,
/// with `f = 1 − sech(|Ẽ₁|/T)` and eigenvector derivatives from the analytic
/// eigenvectors by gauge-smoothed central differences.
pub fn connection_closed_2d(spec: &ModelSpec, p: &[f64], direction: usize, t: f64, conv: WeightConvention, h: f64) -> Result<CMat> {
    if spec.family != Family::NH2 {
        return Err(Error::NoClosedForm(format!("two-band closed form requested for {}", spec.family)));
    }
    let es = analytic_eigensystem(spec, p)?;
    let [(rp, lp), (rm, lm)] = smoothed_neighbours(spec, p, &es, direction, h)?;
    let d_right = (rp - rm) / C64::from(2.0 * h);
    let d_left = (lp - lm) / C64::from(2.0 * h);
    let (u1, u2) = (es.right().column(0), es.right().column(1));
    let (l1, l2) = (es.left().row(0), es.left().row(1));
    let dl1_u2 = (d_left.row(0) * u2)[(0, 0)];
    let l2_du1 = (l2 * d_right.column(0))[(0, 0)];
    let f = f_factor(C64::from(effective_energy(es.energy(0), conv)), t);
    Ok((u1 * l2 * dl1_u2 - u2 * l1 * l2_du1) * C64::from(f))
}

/// Closed-form components `(A^{θ₁}, A^{θ₂}, A^{φ₁}, A^{φ₂})` of the four-band model on S⁴:
/// `A^μ = −f(T) Σ_{m≠n} Σ_{j,k∈{α,β}} ⟨u_m^{Lj}|∂_μ u_n^k⟩ |u_m^j⟩⟨u_n^{Lk}|`
/// from the listed degenerate eigenvectors.
pub fn connection_components_4d(spec: &ModelSpec, p: &[f64], t: f64, conv: WeightConvention, h: f64) -> Result<[CMat; 4]> {
    if !matches!((spec.family, spec.embedding), (Family::NH4, Embedding::S4 { .. })) {
        return Err(Error::NoClosedForm(format!("four-band components requested for {} on {}", spec.family, spec.embedding)));
    }
    let es = analytic_eigensystem(spec, p)?;
    let f = f_factor(C64::from(effective_energy(es.energy(0), conv)), t);
    let mut out: Vec<CMat> = Vec::with_capacity(4);
    for mu in 0..4 {
        let [(rp, _), (rm, _)] = smoothed_neighbours(spec, p, &es, mu, h)?;
        let d_right = (rp - rm) / C64::from(2.0 * h);
        let mut a = CMat::zeros(4, 4);
        for (lm_, ln_) in [(0usize, 1usize), (1, 0)] {
            for &bm in &es.levels()[lm_] {
                for &bn in &es.levels()[ln_] {
                    let coeff = (es.left().row(bm) * d_right.column(bn))[(0, 0)];
                    a -= es.right().column(bm) * es.left().row(bn) * (coeff * f);
                }
            }
        }
        out.push(a);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()])
}

/// How the loop transport is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TransportMode {
    /// Ordered product of per-step exponentials.
    #[default]
    Ordered,
    /// `exp(Σ_k A_k dθ)` — ignores path ordering; kept for comparison only.
    Naive,
}

#[derive(Clone, Copy, Debug)]
pub struct PhaseOptions {
    pub windings: usize,
    pub samples_per_winding: usize,
    pub stencil: f64,
    pub mode: TransportMode,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self { windings: 2, samples_per_winding: 800, stencil: DEFAULT_STENCIL, mode: TransportMode::Ordered }
    }
}

/// Result of transporting ρ₀ around a loop.
#[derive(Clone, Debug)]
pub struct Holonomy {
    pub transport: CMat,
    /// `arg Tr(ρ₀ V)` in (−π, π].
    pub phase: f64,
    /// Continuous phase of `Tr(ρ₀ V_partial)` accumulated from 0 along the path.
    pub unwrapped_phase: f64,
    /// `Tr(ρ₀ V)` itself.
    pub overlap: C64,
}

fn wrap(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if y <= -std::f64::consts::PI {
        y + two_pi
    } else {
        y
    }
}

/// Uhlmann holonomy of the loop embedding, anchored at the θ = 0 density matrix.
pub fn uhlmann_phase(spec: &ModelSpec, t: f64, conv: WeightConvention, opts: &PhaseOptions) -> Result<Holonomy> {
    if !spec.embedding.is_loop() {
        return Err(Error::InvalidInput(format!("the Uhlmann phase needs a loop embedding, got {}", spec.embedding)));
    }
    if opts.windings == 0 || opts.samples_per_winding < 4 {
        return Err(Error::InvalidInput("need at least one winding and four samples per winding".into()));
    }
    let dt = 2.0 * std::f64::consts::PI / opts.samples_per_winding as f64;
    let total = opts.windings * opts.samples_per_winding;
    let samples = (0..total)
        .into_par_iter()
        .map(|k| connection_generic_at(spec, &[(k as f64 + 0.5) * dt], 0, t, conv, opts.stencil))
        .collect::<Result<Vec<_>>>()?;
    let rho0 = density_matrix(&eigensystem(spec, &[0.0])?, t, conv)?.rho;

    let transport = match opts.mode {
        TransportMode::Ordered => path_ordered_exp(&samples, dt)?,
        TransportMode::Naive => (samples.iter().sum::<CMat>() * C64::from(dt)).exp(),
    };
    let mut partial = CMat::identity(spec.dim(), spec.dim());
    let mut prev = rho0.trace().arg();
    let mut unwrapped = 0.0;
    for a in &samples {
        partial = (a * C64::from(dt)).exp() * partial;
        let arg = (&rho0 * &partial).trace().arg();
        unwrapped += wrap(arg - prev);
        prev = arg;
    }
    let overlap = (&rho0 * &transport).trace();
    Ok(Holonomy { phase: wrap(overlap.arg()), unwrapped_phase: unwrapped, overlap, transport })
}

/// Band monodromy of a loop embedding after `windings` traversals, from overlap tracking.
pub fn loop_monodromy(spec: &ModelSpec, windings: usize, samples_per_winding: usize) -> Result<Vec<usize>> {
    let dt = 2.0 * std::f64::consts::PI / samples_per_winding as f64;
    let systems = (0..=windings * samples_per_winding).map(|k| eigensystem(spec, &[k as f64 * dt])).collect::<Result<Vec<_>>>()?;
    let perms = crate::linalg::track_bands(&systems)?;
    Ok(crate::linalg::monodromy(&perms))
}

/// Curvature `F^{μν} = ∂_μA^ν − ∂_νA^μ + [A^μ, A^ν]` of a connection given as a
/// component function, by central differences of step `h`. Exactly antisymmetric:
/// for μ > ν the value is computed as `−F^{νμ}`.
pub fn curvature<F>(conn: &F, p: &[f64], mu: usize, nu: usize, h: f64) -> Result<CMat>
where
    F: Fn(&[f64], usize) -> Result<CMat>,
{
    if mu == nu {
        let a = conn(p, mu)?;
        return Ok(CMat::zeros(a.nrows(), a.ncols()));
    }
    if mu > nu {
        return Ok(-curvature(conn, p, nu, mu, h)?);
    }
    let d = |along: usize, comp: usize| -> Result<CMat> {
        Ok((conn(&shifted(p, along, h), comp)? - conn(&shifted(p, along, -h), comp)?) / C64::from(2.0 * h))
    };
    let (a_mu, a_nu) = (conn(p, mu)?, conn(p, nu)?);
    Ok(d(mu, nu)? - d(nu, mu)? + &a_mu * &a_nu - &a_nu * &a_mu)
}

/// Curvature sampled from a connection that is only known on a regular lattice:
/// `field[i][j]` holds the components at node `(i, j)` with spacings `(h_mu, h_nu)`.
/// Returns F at interior nodes (boundary rows/columns are omitted).
pub fn curvature_on_lattice(field: &[Vec<[CMat; 2]>], h_mu: f64, h_nu: f64) -> Vec<Vec<CMat>> {
    let (ni, nj) = (field.len(), field.first().map_or(0, |r| r.len()));
    let mut out = Vec::new();
    for i in 1..ni.saturating_sub(1) {
        let mut row = Vec::new();
        for j in 1..nj.saturating_sub(1) {
            let d_mu_anu = (&field[i + 1][j][1] - &field[i - 1][j][1]) / C64::from(2.0 * h_mu);
            let d_nu_amu = (&field[i][j + 1][0] - &field[i][j - 1][0]) / C64::from(2.0 * h_nu);
            let [a_mu, a_nu] = &field[i][j];
            row.push(d_mu_anu - d_nu_amu + a_mu * a_nu - a_nu * a_mu);
        }
        out.push(row);
    }
    out
}

/// Largest entry of `A + A†` — zero for a Hermitian model.
pub fn anti_hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a + a.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::models::Embedding;
    use crate::thermal::WeightConvention::Abs;
    use std::f64::consts::PI;

    fn fig1() -> ModelSpec {
        ModelSpec::new(Family::NH2, 1.0, Embedding::Loop2D { r: 2.0, d: 2.5 }).unwrap()
    }

    #[test]
    fn infinite_temperature_connection_vanishes() {
        let a = connection_generic_at(&fig1(), &[1.0], 0, 1e12, Abs, 1e-5).unwrap();
        assert!(max_abs(&a) < 1e-9);
    }

    #[test]
    fn generic_matches_closed_form_on_the_loop() {
        for &th in &[0.0, 1.0, 2.5, 4.0, 3.0 * PI / 2.0 + 0.01] {
            let g = connection_generic_at(&fig1(), &[th], 0, 0.5, Abs, 1e-5).unwrap();
            let c = connection_closed_2d(&fig1(), &[th], 0, 0.5, Abs, 1e-5).unwrap();
            assert!(max_abs(&(&g - &c)) < 1e-6, "θ = {th}: {}", max_abs(&(g - c)));
            assert!(c.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn closed_form_vanishes_with_f() {
        let c = connection_closed_2d(&fig1(), &[0.3], 0, 1e12, Abs, 1e-5).unwrap();
        assert!(max_abs(&c) < 1e-9);
    }

    #[test]
    fn hermitian_connection_is_anti_hermitian() {
        let spec = ModelSpec::new(Family::NH2, 0.0, Embedding::Sphere2D { radius: 1.5 }).unwrap();
        for mu in 0..2 {
            let a = connection_generic_at(&spec, &[0.8, 2.1], mu, 0.7, Abs, 1e-5).unwrap();
            assert!(anti_hermiticity_defect(&a) < 1e-8);
        }
    }

    #[test]
    fn curvature_is_antisymmetric_and_zero_for_zero_field() {
        let zero = |_: &[f64], _: usize| Ok(CMat::zeros(2, 2));
        assert_eq!(max_abs(&curvature(&zero, &[0.1, 0.2], 0, 1, 1e-4).unwrap()), 0.0);
        let spec = ModelSpec::new(Family::NH2, 1.0, Embedding::Sphere2D { radius: 2.0 }).unwrap();
        let conn = |p: &[f64], mu: usize| connection_generic_at(&spec, p, mu, 0.5, Abs, 1e-5);
        let f01 = curvature(&conn, &[0.9, 0.4], 0, 1, 1e-4).unwrap();
        let f10 = curvature(&conn, &[0.9, 0.4], 1, 0, 1e-4).unwrap();
        assert!(max_abs(&(f01 + f10)) < 1e-10);
    }

    #[test]
    fn pure_gauge_has_no_curvature() {
        // g(θ, φ) = exp(iθσ_z/2)·exp(iφσ_x/2); A = g⁻¹∂g.
        let [sx, _, sz] = crate::models::pauli_basis();
        let g = |p: &[f64]| (&sz * c64(0.0, p[0] / 2.0)).exp() * (&sx * c64(0.0, p[1] / 2.0)).exp();
        let conn = |p: &[f64], mu: usize| {
            let gi = g(p).try_inverse().unwrap();
            let dg = crate::linalg::finite_diff(|q: &[f64]| Ok(g(q)), p, mu, 1e-6)?;
            Ok(gi * dg)
        };
        let f = curvature(&conn, &[0.7, 1.3], 0, 1, 1e-4).unwrap();
        assert!(max_abs(&f) < 1e-6);
    }

    #[test]
    fn lattice_curvature_agrees_with_pointwise() {
        let spec = ModelSpec::new(Family::NH2, 1.0, Embedding::Sphere2D { radius: 2.0 }).unwrap();
        let h = 1e-3;
        let conn = |p: &[f64], mu: usize| connection_generic_at(&spec, p, mu, 0.5, Abs, 1e-5);
        let field: Vec<Vec<[CMat; 2]>> = (0..3)
            .map(|i| (0..3).map(|j| {
                let p = [0.9 + (i as f64 - 1.0) * h, 0.4 + (j as f64 - 1.0) * h];
                [conn(&p, 0).unwrap(), conn(&p, 1).unwrap()]
            }).collect())
            .collect();
        let lat = curvature_on_lattice(&field, h, h);
        let direct = curvature(&conn, &[0.9, 0.4], 0, 1, h).unwrap();
        assert!(max_abs(&(&lat[0][0] - direct)) < 1e-9);
    }

    #[test]
    fn wrap_is_half_open() {
        assert!((wrap(PI) - PI).abs() < 1e-15);
        assert!((wrap(-PI) - PI).abs() < 1e-15);
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
