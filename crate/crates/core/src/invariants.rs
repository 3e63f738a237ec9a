//! Quadrature engines for the thermal and NT invariants.
//!
//! Every integral goes through [`QuadratureGrid`]. The first grid axis is the
//! "polar" coordinate (θ, α or θ₁); integrands are evaluated column by column along
//! it so that thermal weights can follow one band continuously from the top of the
//! spectrum (this is what makes the signed restoring weights vanish-integrate outside
//! the exceptional manifold). Nodes inside a column are evaluated in parallel and all
//! sums are taken in index order, so results are bit-stable across thread counts.
//!
//! Points where the eigensolver guard trips, a restoring weight diverges or an
//! integrand is not finite are skipped and counted in
//! [`InvariantResult::excluded_points`]; more than 5% skipped is an error.
//!
//! Symmetry reduction: all families here are covariant under the diagonal phase
//! rotations generated by the azimuthal angles (φ, φ₁, φ₂), so every integrand is
//! independent of them. With [`IntegrandOptions::reduced`] the azimuthal axes are
//! replaced by a single column times their period.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{finite_diff, CMat, EigenSystem, C64, DEFAULT_STENCIL};
use crate::models::{analytic_eigensystem, eigensystem, hamiltonian, Embedding, Family, ModelSpec};
use crate::thermal::{dd_restoring_weight, density_matrix, effective_energy, f_factor, lambda_weight, WeightConvention, WeightOrder};
use crate::uhlmann::{connection_generic_at, curvature};

/// Default outer central-difference step for curvatures (the connection itself uses
/// [`DEFAULT_STENCIL`]).
pub const CURVATURE_STEP: f64 = 1e-4;

/// Fraction of skipped nodes above which an integral is rejected.
const MAX_EXCLUDED_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// Composite rule on nodes offset by half a step, `x_k = a + (k + ½)h`. Exact
    /// trapezoid for periodic axes; keeps nodes off the poles of polar axes.
    #[default]
    Trapezoid,
    /// Composite Simpson on the closed grid `x_k = a + kh`, `k = 0..=n` (n even).
    Simpson,
}

/// Tensor-product quadrature grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub dims: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub rule: Rule,
}

impl QuadratureGrid {
    pub const MIN_NODES: usize = 8;

    pub fn new(dims: Vec<usize>, bounds: Vec<(f64, f64)>, rule: Rule) -> Result<Self> {
        if dims.is_empty() || dims.len() != bounds.len() {
            return Err(Error::InvalidConfig(format!("grid has {} counts for {} intervals", dims.len(), bounds.len())));
        }
        if let Some(n) = dims.iter().find(|&&n| n < Self::MIN_NODES) {
            return Err(Error::InvalidConfig(format!("grid counts must be at least {}, got {n}", Self::MIN_NODES)));
        }
        if rule == Rule::Simpson && dims.iter().any(|n| n % 2 != 0) {
            return Err(Error::InvalidConfig("Simpson's rule needs even interval counts".into()));
        }
        if bounds.iter().any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidConfig("grid intervals must be finite with start < end".into()));
        }
        Ok(Self { dims, bounds, rule })
    }

    /// Grid over the natural domain of an embedding.
    pub fn for_embedding(embedding: &Embedding, dims: &[usize], rule: Rule) -> Result<Self> {
        Self::new(dims.to_vec(), embedding.bounds(), rule)
    }

    /// Grid restricted to the given axes.
    pub fn select(&self, axes: &[usize]) -> Result<Self> {
        Self::new(axes.iter().map(|&a| self.dims[a]).collect(), axes.iter().map(|&a| self.bounds[a]).collect(), self.rule)
    }

    /// `(node, weight)` pairs along one axis.
    pub fn nodes(&self, axis: usize) -> Vec<(f64, f64)> {
        let n = self.dims[axis];
        let (a, b) = self.bounds[axis];
        let h = (b - a) / n as f64;
        match self.rule {
            Rule::Trapezoid => (0..n).map(|k| (a + (k as f64 + 0.5) * h, h)).collect(),
            Rule::Simpson => (0..=n)
                .map(|k| {
                    let c = if k == 0 || k == n {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    (a + k as f64 * h, c * h / 3.0)
                })
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        (0..self.dims.len()).map(|a| self.nodes(a).len()).product()
    }

    /// Comparison grid for `refinement_delta`: every count halved when that keeps the
    /// grid valid, otherwise every count doubled.
    pub fn comparison(&self) -> Self {
        let halved: Vec<usize> = self.dims.iter().map(|n| n / 2).collect();
        let ok = halved.iter().all(|&n| n >= Self::MIN_NODES && (self.rule == Rule::Trapezoid || n % 2 == 0));
        let dims = if ok { halved } else { self.dims.iter().map(|n| n * 2).collect() };
        Self { dims, bounds: self.bounds.clone(), rule: self.rule }
    }
}

/// An integrated invariant with its convergence diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub value: f64,
    pub grid: QuadratureGrid,
    /// `|value − value on the comparison grid|` (see [`QuadratureGrid::comparison`]).
    pub refinement_delta: f64,
    pub excluded_points: usize,
}

/// Numerical knobs shared by the integrands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrandOptions {
    pub convention: WeightConvention,
    pub connection_step: f64,
    pub curvature_step: f64,
    /// Collapse azimuthal axes to one column (exact by symmetry).
    pub reduced: bool,
}

impl Default for IntegrandOptions {
    fn default() -> Self {
        Self { convention: WeightConvention::Abs, connection_step: DEFAULT_STENCIL, curvature_step: CURVATURE_STEP, reduced: true }
    }
}

fn excludable(e: &Error) -> bool {
    matches!(e, Error::NearExceptionalPoint { .. } | Error::DivergentWeight { .. } | Error::DenominatorUnderflow { .. } | Error::NonFinite)
}

/// Integrates over `grid`. `column(trailing, axis0)` returns one value per axis-0 node
/// for the given trailing-axis coordinates. Returns `(sum, excluded)`.
fn integrate_columns<F>(grid: &QuadratureGrid, column: &F) -> Result<(f64, usize)>
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<Result<f64>>> + Sync,
{
    let axis0 = grid.nodes(0);
    let xs0: Vec<f64> = axis0.iter().map(|n| n.0).collect();
    let mut combos: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for axis in 1..grid.dims.len() {
        let nodes = grid.nodes(axis);
        combos = combos
            .into_iter()
            .flat_map(|(x, w)| nodes.iter().map(move |&(xn, wn)| ([x.as_slice(), &[xn]].concat(), w * wn)))
            .collect();
    }
    let columns: Vec<Result<Vec<Result<f64>>>> = combos.par_iter().map(|(x, _)| column(x, &xs0)).collect();

    let (mut sum, mut excluded, mut first_error) = (0.0, 0usize, None);
    for ((_, w), col) in combos.iter().zip(columns) {
        for (&(_, w0), v) in axis0.iter().zip(col?) {
            match v {
                Ok(v) if v.is_finite() => sum += w * w0 * v,
                Ok(_) => {
                    excluded += 1;
                    first_error.get_or_insert(Error::NonFinite);
                }
                Err(e) if excludable(&e) => {
                    excluded += 1;
                    first_error.get_or_insert(e);
                }
                Err(e) => return Err(e),
            }
        }
    }
    if excluded as f64 > MAX_EXCLUDED_FRACTION * grid.node_count() as f64 {
        return Err(first_error.unwrap_or(Error::NonFinite));
    }
    Ok((sum, excluded))
}

/// Runs `integral` on `grid` and on its comparison grid.
fn with_refinement<F>(grid: &QuadratureGrid, scale: f64, integral: F) -> Result<InvariantResult>
where
    F: Fn(&QuadratureGrid) -> Result<(f64, usize)>,
{
    let (value, excluded_points) = integral(grid)?;
    let (coarse, _) = integral(&grid.comparison())?;
    Ok(InvariantResult { value: value * scale, grid: grid.clone(), refinement_delta: ((value - coarse) * scale).abs(), excluded_points })
}

/// Signed effective energies of the band continued along a column from the top of the
/// spectrum at its first point (nearest-eigenvalue continuation).
pub fn tracked_energies(spec: &ModelSpec, points: &[Vec<f64>], conv: WeightConvention) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len());
    let mut prev: Option<C64> = None;
    for (step, p) in points.iter().enumerate() {
        let es = eigensystem(spec, p)?;
        let levels: Vec<C64> = (0..es.levels().len()).map(|l| es.level_energy(l)).collect();
        let e = match prev {
            None => *levels
                .iter()
                .max_by(|a, b| effective_energy(**a, conv).total_cmp(&effective_energy(**b, conv)))
                .unwrap(),
            Some(pe) => {
                let mut d: Vec<(f64, C64)> = levels.iter().map(|&e| ((e - pe).norm(), e)).collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0));
                if d.len() > 1 && d[0].0 > 0.5 * d[1].0 {
                    return Err(Error::AmbiguousTracking { step, best: d[0].0, second: d[1].0 });
                }
                d[0].1
            }
        };
        out.push(effective_energy(e, conv));
        prev = Some(e);
    }
    Ok(out)
}

fn column_points(axis0: &[f64], trailing: &[f64], fixed_tail: &[f64]) -> Vec<Vec<f64>> {
    axis0.iter().map(|&x| [&[x], trailing, fixed_tail].concat()).collect()
}

fn sphere_spec(spec: &ModelSpec, r: f64, expect: &str) -> Result<ModelSpec> {
    let spec = spec.with_embedding(spec.embedding.with_radius(r));
    spec.validate()?;
    let ok = matches!(
        (expect, spec.embedding),
        ("Sphere2D", Embedding::Sphere2D { .. }) | ("S3", Embedding::S3 { .. }) | ("S4", Embedding::S4 { .. })
    );
    if !ok {
        return Err(Error::IncompatibleEmbedding { family: spec.family.to_string(), embedding: spec.embedding.to_string() });
    }
    Ok(spec)
}

/// Azimuthal axes collapsed when `reduced`: the integration grid, the coordinates the
/// collapsed axes are held at, and the period factor.
fn reduce(grid: &QuadratureGrid, polar_axes: usize, reduced: bool) -> Result<(QuadratureGrid, Vec<f64>, f64)> {
    if !reduced {
        return Ok((grid.clone(), Vec::new(), 1.0));
    }
    let axes: Vec<usize> = (0..polar_axes).collect();
    let sub = grid.select(&axes)?;
    let mut fixed = Vec::new();
    let mut factor = 1.0;
    for a in polar_axes..grid.dims.len() {
        let (lo, hi) = grid.bounds[a];
        fixed.push(grid.nodes(a)[0].0);
        factor *= hi - lo;
    }
    Ok((sub, fixed, factor))
}

fn chern_2d(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, opts: &IntegrandOptions, weighted: bool) -> Result<InvariantResult> {
    let spec = sphere_spec(spec, r, "Sphere2D")?;
    if grid.dims.len() != 2 {
        return Err(Error::InvalidConfig("a sphere integral needs a two-axis grid".into()));
    }
    let (sub, fixed, factor) = reduce(grid, 1, opts.reduced)?;
    let column = |trailing: &[f64], xs: &[f64]| -> Result<Vec<Result<f64>>> {
        let points = column_points(xs, trailing, &fixed);
        let energies = if weighted { Some(tracked_energies(&spec, &points, opts.convention)?) } else { None };
        Ok(points
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let lambda = match &energies {
                    Some(e) => lambda_weight(WeightOrder::Chern1, e[k], t, 0.0)?,
                    None => 1.0,
                };
                let rho = density_matrix(&eigensystem(&spec, p)?, t, opts.convention)?.rho;
                let conn = |q: &[f64], mu: usize| connection_generic_at(&spec, q, mu, t, opts.convention, opts.connection_step);
                let f = curvature(&conn, p, 0, 1, opts.curvature_step)?;
                Ok((C64::i() * lambda * (rho * f).trace()).re / (2.0 * PI))
            })
            .collect())
    };
    let mut res = with_refinement(&sub, factor, |g| integrate_columns(g, &column))?;
    res.grid = grid.clone();
    Ok(res)
}

/// Thermal Uhlmann-Chern number `C_U = (i/2π)∫ λ Tr(ρF^{θφ}) dθ dφ` on the sphere of
/// radius `r`, with `1/λ = tanh³(Ẽ/T)` of the band tracked from the north pole.
pub fn thermal_chern_2d(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, opts: &IntegrandOptions) -> Result<InvariantResult> {
    chern_2d(spec, r, t, grid, opts, true)
}

/// NT Uhlmann-Chern number `(i/2π)∫ Tr(ρF^{θφ})`.
pub fn nt_chern_2d(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, opts: &IntegrandOptions) -> Result<InvariantResult> {
    chern_2d(spec, r, t, grid, opts, false)
}

/// Independent 1D oracle for the NT Chern number of the two-band model on a sphere:
/// `Tr(ρF) = tanh³(|E|/T)·Ω(θ)` where `Ω` is the biorthogonal Berry curvature of the
/// lower band, so `C^{nt} = (i/2π)·2π∫ tanh³ Ω dθ`. The Berry curvature is taken from
/// projectors, `Ω = Tr(P[∂_θP, ∂_φP])`.
pub fn nt_chern_2d_reduced(spec: &ModelSpec, r: f64, t: f64, nodes: usize) -> Result<InvariantResult> {
    let spec = sphere_spec(spec, r, "Sphere2D")?;
    let grid = QuadratureGrid::new(vec![nodes], vec![(0.0, PI)], Rule::Trapezoid)?;
    let h = 1e-5;
    let column = |_: &[f64], xs: &[f64]| -> Result<Vec<Result<f64>>> {
        Ok(xs
            .par_iter()
            .map(|&th| {
                let p = [th, 0.3];
                let es = eigensystem(&spec, &p)?;
                let lower = |q: &[f64]| -> Result<CMat> {
                    let e = eigensystem(&spec, q)?;
                    let l = (0..e.levels().len()).min_by(|a, b| e.level_energy(*a).re.total_cmp(&e.level_energy(*b).re)).unwrap();
                    Ok(e.level_projector(l))
                };
                let pl = lower(&p)?;
                let dt = finite_diff(lower, &p, 0, h)?;
                let dp = finite_diff(lower, &p, 1, h)?;
                let omega = (&pl * (&dt * &dp - &dp * &dt)).trace();
                let th3 = (es.energy(0).norm() / t).tanh().powi(3);
                Ok((C64::i() * omega * th3).re)
            })
            .collect())
    };
    with_refinement(&grid, 1.0, |g| integrate_columns(g, &column))
}

/// Which Bures-metric formula applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuresForm {
    /// `½Σ ⟨m|∂ρ|n⟩⟨n|∂ρ|m⟩/(P_m+P_n)` including the weight derivatives on the diagonal.
    Hermitian,
    /// The non-Hermitian rewriting in terms of `P_m⟨∂u_m|u_n⟩ + P_n⟨u_m|∂u_n⟩` — only the
    /// inter-level (eigenvector) part, with the same overall ½.
    Biorthogonal,
}

impl BuresForm {
    pub fn for_family(family: Family) -> Self {
        if family == Family::Hermitian3 {
            Self::Hermitian
        } else {
            Self::Biorthogonal
        }
    }
}

fn d_effective(e: C64, de: C64, conv: WeightConvention) -> f64 {
    match conv {
        WeightConvention::Re => de.re,
        WeightConvention::Abs => {
            let x = effective_energy(e, conv);
            if x == 0.0 {
                0.0
            } else {
                x.signum() * (e.conj() * de).re / e.norm()
            }
        }
    }
}

/// Bures metric `G^{μν}` over the embedding coordinates at `p` (complex in general;
/// real symmetric for Hermitian models).
///
/// Uses `⟨u_m^L|∂u_n⟩ = ⟨u_m^L|∂H|u_n⟩/(E_n − E_m)` between different levels and
/// Hellmann–Feynman derivatives of the weights, so each point needs one eigensystem.
pub fn bures_metric(spec: &ModelSpec, p: &[f64], t: f64, conv: WeightConvention, h: f64) -> Result<CMat> {
    bures_metric_with(spec, p, t, conv, h, BuresForm::for_family(spec.family))
}

pub fn bures_metric_with(spec: &ModelSpec, p: &[f64], t: f64, conv: WeightConvention, h: f64, form: BuresForm) -> Result<CMat> {
    let es = eigensystem(spec, p)?;
    let state = density_matrix(&es, t, conv)?;
    let w = &state.weights;
    let n = es.dim();
    let d = p.len();
    let mut xs = Vec::with_capacity(d);
    for mu in 0..d {
        let dh = finite_diff(|q: &[f64]| hamiltonian(spec, q), p, mu, h)?;
        let dm = es.left() * dh * es.right();
        let mut x = CMat::zeros(n, n);
        if form == BuresForm::Hermitian {
            let det: Vec<f64> = (0..n)
                .map(|b| {
                    let level = &es.levels()[es.level_of(b)];
                    let de = level.iter().map(|&k| dm[(k, k)]).sum::<C64>() / level.len() as f64;
                    d_effective(es.level_energy(es.level_of(b)), de, conv)
                })
                .collect();
            let mean: f64 = w.iter().zip(&det).map(|(a, b)| a * b).sum();
            for b in 0..n {
                x[(b, b)] = C64::from(-w[b] * (det[b] - mean) / t);
            }
        }
        for m in 0..n {
            for k in 0..n {
                if es.level_of(m) != es.level_of(k) {
                    x[(m, k)] = dm[(m, k)] * (w[k] - w[m]) / (es.energy(k) - es.energy(m));
                }
            }
        }
        xs.push(x);
    }
    let mut g = CMat::zeros(d, d);
    for mu in 0..d {
        for nu in mu..d {
            let mut s = C64::from(0.0);
            for m in 0..n {
                for k in 0..n {
                    let num = xs[mu][(m, k)] * xs[nu][(k, m)];
                    if num == C64::from(0.0) {
                        continue;
                    }
                    let sum = w[m] + w[k];
                    if sum < 1e-300 {
                        return Err(Error::DenominatorUnderflow { sum });
                    }
                    s += num / sum;
                }
            }
            g[(mu, nu)] = s * 0.5;
            g[(nu, mu)] = s * 0.5;
        }
    }
    Ok(g)
}

/// Thermal three-form `M_B = 4√(G^{αα}(G^{φ₁φ₁}G^{φ₂φ₂} − G^{φ₁φ₂}G^{φ₂φ₁}))`, the Gram
/// determinant of the metric block; principal root, real part (non-negative by
/// construction). For Hermitian models `G^{φ₂φ₁} = G^{φ₁φ₂}` is real and this is the
/// `|G^{φ₁φ₂}|²` form; for the complex non-Hermitian metric the two differ, see
/// [`three_form_modulus`].
pub fn three_form(g: &CMat) -> f64 {
    root_form(g[(0, 0)] * (g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)]))
}

/// `4√(G^{αα}(G^{φ₁φ₁}G^{φ₂φ₂} − |G^{φ₁φ₂}|²))` with the modulus taken literally.
pub fn three_form_modulus(g: &CMat) -> f64 {
    root_form(g[(0, 0)] * (g[(1, 1)] * g[(2, 2)] - C64::from(g[(1, 2)].norm_sqr())))
}

fn root_form(det: C64) -> f64 {
    let det = if det.im == 0.0 && det.re < 0.0 && det.re > -1e-14 { C64::from(0.0) } else { det };
    (det.sqrt() * 4.0).re
}

/// Weight multiplying `M_B` in the DD integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DdWeighting {
    /// NT invariant.
    None,
    /// `1/κ(E₊/T)`, which returns the pure-state three-form exactly.
    #[default]
    Restoring,
    /// The closed-form `λ₁(E,T)` including its `sin2α`.
    AsPrinted,
}

/// Thermal Dixmier-Douady invariant `(1/2π²)∫ w·M_B dα dφ₁ dφ₂` on S³ of radius `r`.
pub fn dd_invariant(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, weighting: DdWeighting, opts: &IntegrandOptions) -> Result<InvariantResult> {
    let spec = sphere_spec(spec, r, "S3")?;
    if grid.dims.len() != 3 {
        return Err(Error::InvalidConfig("an S³ integral needs a three-axis grid".into()));
    }
    let (sub, fixed, factor) = reduce(grid, 1, opts.reduced)?;
    let column = |trailing: &[f64], xs: &[f64]| -> Result<Vec<Result<f64>>> {
        let points = column_points(xs, trailing, &fixed);
        Ok(points
            .par_iter()
            .map(|p| {
                let m = three_form(&bures_metric(&spec, p, t, opts.convention, opts.connection_step)?);
                let w = match weighting {
                    DdWeighting::None => 1.0,
                    _ => {
                        let es = eigensystem(&spec, p)?;
                        let top = es.energies().iter().map(|&e| effective_energy(e, opts.convention)).fold(f64::NEG_INFINITY, f64::max);
                        if weighting == DdWeighting::Restoring {
                            dd_restoring_weight(top, t)?
                        } else {
                            lambda_weight(WeightOrder::Dd, top, t, p[0])?
                        }
                    }
                };
                Ok(w * m / (2.0 * PI * PI))
            })
            .collect())
    };
    let mut res = with_refinement(&sub, factor, |g| integrate_columns(g, &column))?;
    res.grid = grid.clone();
    Ok(res)
}

/// `(i/2π)∫ λ Tr(ρF^{μν})` over the (μ, ν) sub-torus of S⁴, the remaining coordinates
/// held at a generic point. Returns one result per coordinate pair in the order
/// (01, 02, 03, 12, 13, 23).
pub fn first_chern_4d_components(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, weighted: bool, opts: &IntegrandOptions) -> Result<Vec<InvariantResult>> {
    let spec = sphere_spec(spec, r, "S4")?;
    if grid.dims.len() != 4 {
        return Err(Error::InvalidConfig("an S⁴ integral needs a four-axis grid".into()));
    }
    let generic: Vec<f64> = grid.bounds.iter().map(|(a, b)| a + 0.37 * (b - a)).collect();
    let mut out = Vec::new();
    for mu in 0..4 {
        for nu in mu + 1..4 {
            let sub = grid.select(&[mu, nu])?;
            let column = |trailing: &[f64], xs: &[f64]| -> Result<Vec<Result<f64>>> {
                let points: Vec<Vec<f64>> = xs
                    .iter()
                    .map(|&x| {
                        let mut p = generic.clone();
                        p[mu] = x;
                        p[nu] = trailing[0];
                        p
                    })
                    .collect();
                let energies = if weighted { Some(tracked_energies(&spec, &points, opts.convention)?) } else { None };
                Ok(points
                    .par_iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let lambda = match &energies {
                            Some(e) => lambda_weight(WeightOrder::Chern1, e[k], t, 0.0)?,
                            None => 1.0,
                        };
                        let rho = density_matrix(&eigensystem(&spec, p)?, t, opts.convention)?.rho;
                        let conn = |q: &[f64], c: usize| connection_generic_at(&spec, q, c, t, opts.convention, opts.connection_step);
                        let f = curvature(&conn, p, mu, nu, opts.curvature_step)?;
                        Ok((C64::i() * lambda * (rho * f).trace()).re / (2.0 * PI))
                    })
                    .collect())
            };
            out.push(with_refinement(&sub, 1.0, |g| integrate_columns(g, &column))?);
        }
    }
    Ok(out)
}

/// First Chern number on S⁴: the sub-torus value of largest magnitude.
pub fn first_chern_4d(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, weighted: bool, opts: &IntegrandOptions) -> Result<InvariantResult> {
    let parts = first_chern_4d_components(spec, r, t, grid, weighted, opts)?;
    let mut best = parts.into_iter().max_by(|a, b| a.value.abs().total_cmp(&b.value.abs())).unwrap();
    best.grid = grid.clone();
    Ok(best)
}

/// How `Tr(ρF∧F)` is assembled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WedgeForm {
    /// `6 Tr(ρF^{φ₁φ₂}F^{θ₁θ₂})`, using the symmetry of the three pairings.
    #[default]
    Symmetric,
    /// The full antisymmetrized sum over coordinate pairings (verification path).
    Full,
}

/// `Tr(ρF∧F)` per unit `dθ₁dθ₂dφ₁dφ₂` at `p`.
pub fn wedge_density(spec: &ModelSpec, p: &[f64], t: f64, form: WedgeForm, opts: &IntegrandOptions) -> Result<C64> {
    let rho = density_matrix(&eigensystem(spec, p)?, t, opts.convention)?.rho;
    let conn = |q: &[f64], c: usize| connection_generic_at(spec, q, c, t, opts.convention, opts.connection_step);
    let f = |a: usize, b: usize| curvature(&conn, p, a, b, opts.curvature_step);
    match form {
        WedgeForm::Symmetric => Ok((&rho * f(2, 3)? * f(0, 1)?).trace() * 6.0),
        WedgeForm::Full => {
            let (f01, f23, f02, f13, f03, f12) = (f(0, 1)?, f(2, 3)?, f(0, 2)?, f(1, 3)?, f(0, 3)?, f(1, 2)?);
            let sym = |a: &CMat, b: &CMat| (&rho * (a * b + b * a)).trace();
            Ok(sym(&f01, &f23) - sym(&f02, &f13) + sym(&f03, &f12))
        }
    }
}

/// Second thermal Uhlmann-Chern number `(1/8π²)∫ λ₂ Tr(ρF∧F)` on S⁴ of radius `r`,
/// with `1/λ₂ = tanh⁵(Ẽ/T)` of the band tracked along θ₁ (or without λ₂ when not
/// `weighted`). Coordinates are ordered (θ₁, θ₂, φ₁, φ₂).
pub fn second_chern(spec: &ModelSpec, r: f64, t: f64, grid: &QuadratureGrid, weighted: bool, form: WedgeForm, opts: &IntegrandOptions) -> Result<InvariantResult> {
    let spec = sphere_spec(spec, r, "S4")?;
    if grid.dims.len() != 4 {
        return Err(Error::InvalidConfig("an S⁴ integral needs a four-axis grid".into()));
    }
    let (sub, fixed, factor) = reduce(grid, 2, opts.reduced)?;
    let column = |trailing: &[f64], xs: &[f64]| -> Result<Vec<Result<f64>>> {
        let points = column_points(xs, trailing, &fixed);
        let energies = if weighted { Some(tracked_energies(&spec, &points, opts.convention)?) } else { None };
        Ok(points
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let lambda = match &energies {
                    Some(e) => lambda_weight(WeightOrder::Chern2, e[k], t, 0.0)?,
                    None => 1.0,
                };
                Ok((wedge_density(&spec, p, t, form, opts)? * lambda).re / (8.0 * PI * PI))
            })
            .collect())
    };
    let mut res = with_refinement(&sub, factor, |g| integrate_columns(g, &column))?;
    res.grid = grid.clone();
    Ok(res)
}

/// `⟨u₁^{Lj}|∂_{θ₁}u₂^j⟩` for j = α, β, from the listed S⁴ eigenvectors (normalized by
/// their complex norms), plus the eigensystem at `p`.
fn listed_overlaps(spec: &ModelSpec, p: &[f64], h: f64) -> Result<([C64; 2], EigenSystem)> {
    let es = analytic_eigensystem(spec, p)?;
    let mut pp = p.to_vec();
    let mut pm = p.to_vec();
    pp[0] += h;
    pm[0] -= h;
    let (rp, rm) = (analytic_eigensystem(spec, &pp)?, analytic_eigensystem(spec, &pm)?);
    let b = |j: usize| ((es.left().row(j) * (rp.right().column(j + 2) - rm.right().column(j + 2))) / C64::from(2.0 * h))[(0, 0)];
    Ok(([b(0), b(1)], es))
}

/// Reduced one-dimensional NT second Chern number,
/// `C₂^{nt} = 6R⁶ tanh⁵(|E|/T) ∫ sin⁶θ₁/(N₁N₂)³ ⟨u₁^α|∂_{θ₁}u₂^α⟩ dθ₁`
/// (the θ₂ and azimuthal integrals done in closed form), on `nodes` midpoint nodes.
pub fn second_chern_nt_reduced(spec: &ModelSpec, r: f64, t: f64, nodes: usize) -> Result<InvariantResult> {
    let spec = sphere_spec(spec, r, "S4")?;
    let grid = QuadratureGrid::new(vec![nodes], vec![(0.0, PI)], Rule::Trapezoid)?;
    let column = |_: &[f64], xs: &[f64]| -> Result<Vec<Result<f64>>> {
        Ok(xs
            .par_iter()
            .map(|&th| {
                let ([ba, _], es) = listed_overlaps(&spec, &[th, 0.3, 0.7, 1.3], 1e-6)?;
                let (n1, n2) = (es.norms()[0], es.norms()[2]);
                let th5 = (es.energy(0).norm() / t).tanh().powi(5);
                let v = ba * (6.0 * r.powi(6) * th5 * th.sin().powi(6)) / (n1 * n2).powi(3);
                Ok(v.re)
            })
            .collect())
    };
    with_refinement(&grid, 1.0, |g| integrate_columns(g, &column))
}

/// The four displayed trace products against their closed forms at one S⁴ point.
#[derive(Clone, Debug)]
pub struct TraceReport {
    /// `Tr[ρ D_φ D_θ]`, `Tr[ρ D_φ C_θ]`, `Tr[ρ C_φ D_θ]`, `Tr[ρ C_φ C_θ]` with
    /// `D = ∂A − ∂A` and `C = [A, A]` over the (φ₁, φ₂) and (θ₁, θ₂) pairs.
    pub numeric: [C64; 4],
    /// `(4f², −2f³, −2f³, f⁴)·tanh(|E|/T) R⁶ sin⁶θ₁ sin2θ₂/(N₁N₂)³ (⟨u₁^α|∂u₂^α⟩ + ⟨u₁^β|∂u₂^β⟩)`.
    pub closed: [C64; 4],
    /// `|numeric − closed| / max(|closed|)` per trace.
    pub relative: [f64; 4],
    /// Residuals of the coefficient ratios `t₂/t₁ = t₃/t₁ = −f/2`, `t₄/t₁ = f²/4`.
    pub ratio: [f64; 3],
}

impl TraceReport {
    pub fn max_relative(&self) -> f64 {
        self.relative.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn trace_component_checks(spec: &ModelSpec, p: &[f64], t: f64, opts: &IntegrandOptions) -> Result<TraceReport> {
    let radius = match spec.embedding {
        Embedding::S4 { radius } if spec.family == Family::NH4 => radius,
        _ => return Err(Error::IncompatibleEmbedding { family: spec.family.to_string(), embedding: spec.embedding.to_string() }),
    };
    let conn = |q: &[f64], c: usize| connection_generic_at(spec, q, c, t, opts.convention, opts.connection_step);
    let h = opts.curvature_step;
    let d = |a: usize, b: usize| -> Result<CMat> { Ok(finite_diff(|q: &[f64]| conn(q, b), p, a, h)? - finite_diff(|q: &[f64]| conn(q, a), p, b, h)?) };
    let a: Vec<CMat> = (0..4).map(|c| conn(p, c)).collect::<Result<_>>()?;
    let c = |i: usize, j: usize| &a[i] * &a[j] - &a[j] * &a[i];
    let rho = density_matrix(&eigensystem(spec, p)?, t, opts.convention)?.rho;
    let (dp, dt, cp, ct) = (d(2, 3)?, d(0, 1)?, c(2, 3), c(0, 1));
    let tr = |x: &CMat, y: &CMat| (&rho * x * y).trace();
    let numeric = [tr(&dp, &dt), tr(&dp, &ct), tr(&cp, &dt), tr(&cp, &ct)];

    let ([ba, bb], es) = listed_overlaps(spec, p, 1e-6)?;
    let e = es.energy(0);
    let f = f_factor(e, t);
    let (n1, n2) = (es.norms()[0], es.norms()[2]);
    let common = (ba + bb) * ((e.norm() / t).tanh() * radius.powi(6) * p[0].sin().powi(6) * (2.0 * p[1]).sin()) / (n1 * n2).powi(3);
    let closed = [common * 4.0 * f * f, common * (-2.0 * f.powi(3)), common * (-2.0 * f.powi(3)), common * f.powi(4)];
    let scale = closed.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let relative = std::array::from_fn(|k| (numeric[k] - closed[k]).norm() / scale);
    let r = |k: usize, want: f64| (numeric[k] / numeric[0] - want).norm();
    let ratio = [r(1, -f / 2.0), r(2, -f / 2.0), r(3, f * f / 4.0)];
    Ok(TraceReport { numeric, closed, relative, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn grid_validation() {
        assert!(QuadratureGrid::new(vec![4], vec![(0.0, 1.0)], Rule::Trapezoid).is_err());
        assert!(QuadratureGrid::new(vec![9], vec![(0.0, 1.0)], Rule::Simpson).is_err());
        assert!(QuadratureGrid::new(vec![8], vec![(1.0, 0.0)], Rule::Trapezoid).is_err());
        assert!(QuadratureGrid::new(vec![8, 8], vec![(0.0, 1.0)], Rule::Trapezoid).is_err());
        let g = QuadratureGrid::new(vec![16, 8], vec![(0.0, 1.0), (0.0, 2.0)], Rule::Trapezoid).unwrap();
        assert_eq!(g.comparison().dims, vec![32, 16]);
        let g = QuadratureGrid::new(vec![32, 16], vec![(0.0, 1.0), (0.0, 2.0)], Rule::Trapezoid).unwrap();
        assert_eq!(g.comparison().dims, vec![16, 8]);
    }

    #[test]
    fn rules_integrate_polynomials() {
        let f = |x: f64| 3.0 * x * x * x - x + 2.0;
        let exact = 3.0 / 4.0 * 16.0 - 2.0 + 4.0;
        let s = QuadratureGrid::new(vec![8], vec![(0.0, 2.0)], Rule::Simpson).unwrap();
        let v: f64 = s.nodes(0).iter().map(|(x, w)| w * f(*x)).sum();
        assert!(approx(v, exact, 1e-12));
        let t = QuadratureGrid::new(vec![1024], vec![(0.0, 2.0)], Rule::Trapezoid).unwrap();
        let v: f64 = t.nodes(0).iter().map(|(x, w)| w * f(*x)).sum();
        assert!(approx(v, exact, 1e-4));
    }

    #[test]
    fn column_integration_is_separable() {
        let g = QuadratureGrid::new(vec![8, 8, 8], vec![(0.0, 1.0), (0.0, PI), (0.0, 2.0 * PI)], Rule::Trapezoid).unwrap();
        let col = |tr: &[f64], xs: &[f64]| Ok(xs.iter().map(|x| Ok(x * tr[0].sin().powi(2))).collect());
        let (v, ex) = integrate_columns(&g, &col).unwrap();
        assert_eq!(ex, 0);
        assert!(approx(v, 0.5 * PI / 2.0 * 2.0 * PI, 1e-12));
    }

    #[test]
    fn excluded_points_are_counted_and_capped() {
        let g = QuadratureGrid::new(vec![100], vec![(0.0, 1.0)], Rule::Trapezoid).unwrap();
        let col = |_: &[f64], xs: &[f64]| {
            Ok(xs.iter().enumerate().map(|(k, _)| if k == 3 { Err(Error::DivergentWeight { tanh: 0.0 }) } else { Ok(1.0) }).collect())
        };
        let (v, ex) = integrate_columns(&g, &col).unwrap();
        assert_eq!(ex, 1);
        assert!(approx(v, 0.99, 1e-12));
        let bad = |_: &[f64], xs: &[f64]| Ok(xs.iter().map(|_| Ok(f64::NAN)).collect());
        assert!(matches!(integrate_columns(&g, &bad), Err(Error::NonFinite)));
    }

    #[test]
    fn hermitian_bures_metric_at_low_temperature_is_the_quantum_metric() {
        let spec = ModelSpec::new(Family::Hermitian3, 0.0, Embedding::S3 { radius: 1.0 }).unwrap();
        let p = [0.6, 0.3, 1.1];
        let g = bures_metric(&spec, &p, 0.01, WeightConvention::Abs, 1e-6).unwrap();
        // Pure-state metric Re⟨∂u|(1 − |u⟩⟨u|)|∂u⟩ of the ground state.
        let ground = |q: &[f64]| -> Result<CMat> {
            let es = eigensystem(&spec, q)?;
            Ok(es.projector(es.dim() - 1))
        };
        let pr = ground(&p).unwrap();
        for mu in 0..3 {
            for nu in 0..3 {
                let dm = finite_diff(ground, &p, mu, 1e-5).unwrap();
                let dn = finite_diff(ground, &p, nu, 1e-5).unwrap();
                let q = 0.5 * (&pr * (&dm * &dn + &dn * &dm)).trace().re;
                assert!((g[(mu, nu)].re - q).abs() < 1e-6, "{mu}{nu}: {} vs {q}", g[(mu, nu)]);
                assert!((g[(mu, nu)] - g[(nu, mu)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bures_metric_vanishes_at_infinite_temperature() {
        let spec = ModelSpec::new(Family::Hermitian3, 0.0, Embedding::S3 { radius: 1.0 }).unwrap();
        let g = bures_metric(&spec, &[0.6, 0.3, 1.1], 1e9, WeightConvention::Abs, 1e-6).unwrap();
        assert!(crate::linalg::max_abs(&g) < 1e-12);
    }

    #[test]
    fn tracked_energy_flips_inside_the_ring() {
        let spec = ModelSpec::new(Family::NH2, 1.0, Embedding::Sphere2D { radius: 0.5 }).unwrap();
        let pts: Vec<Vec<f64>> = (0..16).map(|k| vec![(k as f64 + 0.5) * PI / 16.0, 0.0]).collect();
        let e = tracked_energies(&spec, &pts, WeightConvention::Abs).unwrap();
        assert!(e[0] > 0.0 && e[15] < 0.0);
        let spec = spec.with_embedding(Embedding::Sphere2D { radius: 2.0 });
        let e = tracked_energies(&spec, &pts, WeightConvention::Abs).unwrap();
        assert!(e.iter().all(|x| *x > 0.0));
    }
}
