//! Dense complex linear algebra for the small (n ≤ 4) matrices that carry every
//! Hamiltonian, density matrix and connection in this crate.
//!
//! The central object is [`EigenSystem`]: matched right eigenvectors (columns) and
//! left covectors (rows of the inverse eigenvector matrix), so that
//! `⟨u_m^L|u_n⟩ = δ_mn` holds by construction even when `H` is not Hermitian.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default grouping tolerance for degenerate eigenvalues (absolute, in units of γ).
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
/// Beyond this condition number of the eigenvector matrix the point is treated as an EP.
pub const MAX_CONDITION: f64 = 1e12;
/// Default central-difference step in loop-parameter units.
pub const DEFAULT_STENCIL: f64 = 1e-5;
/// Maximum allowed disagreement between a path-ordered product and its half-resolution twin.
pub const RESOLUTION_TOL: f64 = 1e-4;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Build a square complex matrix from row-major entries.
pub fn from_rows(n: usize, entries: &[C64]) -> CMat {
    assert_eq!(entries.len(), n * n, "entry count must be n*n");
    CMat::from_row_slice(n, n, entries)
}

/// Kronecker product of two square matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Biorthogonal eigensystem of a (generally non-Hermitian) matrix.
///
/// Bands are sorted by descending real part, so band 0 is the "upper" band `E₁`.
/// Bands whose energies agree within the degeneracy tolerance form a level; levels
/// share one Boltzmann weight and one spectral projector.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    energies: Vec<C64>,
    right: CMat,
    left: CMat,
    norms: Vec<C64>,
    levels: Vec<Vec<usize>>,
    labels: Vec<usize>,
    min_gap: f64,
}

impl EigenSystem {
    /// Assemble from right eigenvectors (columns of `right`); the left covectors are the
    /// rows of `right⁻¹`, which biorthonormalizes degenerate blocks jointly.
    pub fn from_right(energies: Vec<C64>, right: CMat, norms: Vec<C64>, degeneracy_tol: f64) -> Result<Self> {
        let n = energies.len();
        if right.nrows() != n || right.ncols() != n || norms.len() != n {
            return Err(Error::InvalidInput("eigensystem shapes do not agree".into()));
        }
        let condition = condition_number(&right);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::NearExceptionalPoint { condition });
        }
        let left = right
            .clone()
            .try_inverse()
            .ok_or(Error::NearExceptionalPoint { condition: f64::INFINITY })?;

        let levels = group_levels(&energies, degeneracy_tol);
        let mut labels = vec![0; n];
        for level in &levels {
            for (k, &b) in level.iter().enumerate() {
                labels[b] = k;
            }
        }
        let mut min_gap = f64::INFINITY;
        for (i, li) in levels.iter().enumerate() {
            for lj in levels.iter().skip(i + 1) {
                min_gap = min_gap.min((energies[li[0]] - energies[lj[0]]).norm());
            }
        }
        Ok(Self { energies, right, left, norms, levels, labels, min_gap })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }
    pub fn energies(&self) -> &[C64] {
        &self.energies
    }
    pub fn energy(&self, band: usize) -> C64 {
        self.energies[band]
    }
    /// Right eigenvectors as columns.
    pub fn right(&self) -> &CMat {
        &self.right
    }
    /// Left covectors as rows.
    pub fn left(&self) -> &CMat {
        &self.left
    }
    pub fn right_vec(&self, band: usize) -> CVec {
        self.right.column(band).into_owned()
    }
    /// Left covector of `band` as a row-shaped matrix.
    pub fn left_row(&self, band: usize) -> CMat {
        self.left.rows(band, 1).into_owned()
    }
    pub fn norms(&self) -> &[C64] {
        &self.norms
    }
    /// Degenerate groups of band indices.
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }
    /// Position of each band inside its level (0 = α, 1 = β for the 4-band model).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
    pub fn level_of(&self, band: usize) -> usize {
        self.levels.iter().position(|l| l.contains(&band)).expect("band belongs to a level")
    }
    /// Energy of a level (mean over its members).
    pub fn level_energy(&self, level: usize) -> C64 {
        let l = &self.levels[level];
        l.iter().map(|&b| self.energies[b]).sum::<C64>() / l.len() as f64
    }
    /// Smallest gap between distinct levels — the distance to the nearest EP.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// `|u_n⟩⟨u_n^L|`.
    pub fn projector(&self, band: usize) -> CMat {
        self.right.column(band) * self.left.row(band)
    }

    /// Spectral projector of a level (sum over degenerate members).
    pub fn level_projector(&self, level: usize) -> CMat {
        let n = self.dim();
        let mut p = CMat::zeros(n, n);
        for &b in &self.levels[level] {
            p += self.projector(b);
        }
        p
    }

    /// `Σ_n g(n) |u_n⟩⟨u_n^L|` — biorthogonal functional calculus.
    pub fn apply<F: Fn(usize) -> C64>(&self, g: F) -> CMat {
        let mut scaled = self.right.clone();
        for j in 0..self.dim() {
            let w = g(j);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
        }
        scaled * &self.left
    }

    /// `max |⟨u_m^L|u_n⟩ − δ_mn|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let g = &self.left * &self.right;
        max_abs(&(g - CMat::identity(self.dim(), self.dim())))
    }

    /// `max |H − Σ E_n |u_n⟩⟨u_n^L||`.
    pub fn reconstruction_residual(&self, h: &CMat) -> f64 {
        let rebuilt = self.apply(|n| self.energies[n]);
        max_abs(&(h - rebuilt))
    }

    /// Reorder bands by `order` (new band k = old band `order[k]`).
    pub fn permuted(&self, order: &[usize], degeneracy_tol: f64) -> Result<Self> {
        let n = self.dim();
        let mut right = CMat::zeros(n, n);
        for (k, &o) in order.iter().enumerate() {
            right.set_column(k, &self.right.column(o));
        }
        let energies = order.iter().map(|&o| self.energies[o]).collect();
        let norms = order.iter().map(|&o| self.norms[o]).collect();
        Self::from_right(energies, right, norms, degeneracy_tol)
    }
}

/// Condition number of a matrix after normalizing its columns.
fn condition_number(v: &CMat) -> f64 {
    let mut m = v.clone();
    for mut col in m.column_iter_mut() {
        let nrm = col.norm();
        if nrm == 0.0 {
            return f64::INFINITY;
        }
        col /= C64::from(nrm);
    }
    let s = m.singular_values();
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Group indices whose energies agree within `tol` (transitively), preserving order.
fn group_levels(energies: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = energies.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (energies[i] - energies[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut root_of_level: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of_level.iter().position(|&x| x == r) {
            Some(k) => levels[k].push(i),
            None => {
                root_of_level.push(r);
                levels.push(vec![i]);
            }
        }
    }
    levels
}

/// Sort key: descending real part, then descending imaginary part.
fn band_order(energies: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..energies.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ea, eb) = (energies[a], energies[b]);
        eb.re.partial_cmp(&ea.re).unwrap().then(eb.im.partial_cmp(&ea.im).unwrap())
    });
    idx
}

/// Fix the phase of a vector so its largest component is real and positive, and give it unit norm.
fn canonical_gauge(v: &mut CVec) {
    let (mut best, mut big) = (0usize, -1.0);
    for (i, z) in v.iter().enumerate() {
        if z.norm() > big + 1e-12 {
            big = z.norm();
            best = i;
        }
    }
    let phase = v[best] / v[best].norm();
    let nrm = v.norm();
    for z in v.iter_mut() {
        *z /= phase * nrm;
    }
}

/// Biorthogonal eigendecomposition of a finite complex matrix (n ≤ 4).
///
/// n = 2 uses the characteristic roots in closed form; larger matrices take their
/// eigenvalues from a complex Schur form and their right vectors from the null space
/// of `H − E·I` (joint null space for degenerate clusters).
pub fn eig_biorthogonal(h: &CMat, degeneracy_tol: f64) -> Result<EigenSystem> {
    if !is_finite(h) {
        return Err(Error::NonFinite);
    }
    let n = h.nrows();
    if n != h.ncols() || !(2..=4).contains(&n) {
        return Err(Error::InvalidInput(format!("expected a square matrix of dimension 2..=4, got {}x{}", h.nrows(), h.ncols())));
    }
    let (energies, mut vectors) = if n == 2 { eig2(h, degeneracy_tol)? } else { eig_dense(h, degeneracy_tol)? };

    let order = band_order(&energies);
    let mut right = CMat::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (k, &o) in order.iter().enumerate() {
        canonical_gauge(&mut vectors[o]);
        right.set_column(k, &vectors[o]);
        sorted.push(energies[o]);
    }
    EigenSystem::from_right(sorted, right, vec![C64::from(1.0); n], degeneracy_tol)
}

fn eig2(h: &CMat, tol: f64) -> Result<(Vec<C64>, Vec<CVec>)> {
    let (a, b, c, d) = (h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    let half_tr = (a + d) / 2.0;
    let s = (((a - d) / 2.0).powi(2) + b * c).sqrt();
    let (e1, e2) = (half_tr + s, half_tr - s);
    if (e1 - e2).norm() < tol {
        let scalar = CMat::identity(2, 2) * half_tr;
        if max_abs(&(h - scalar)) < tol {
            let basis = vec![CVec::from_vec(vec![C64::from(1.0), C64::from(0.0)]), CVec::from_vec(vec![C64::from(0.0), C64::from(1.0)])];
            return Ok((vec![half_tr, half_tr], basis));
        }
        return Err(Error::NearExceptionalPoint { condition: f64::INFINITY });
    }
    let vec_for = |e: C64| {
        let v1 = CVec::from_vec(vec![b, e - a]);
        let v2 = CVec::from_vec(vec![e - d, c]);
        if v1.norm() >= v2.norm() {
            v1
        } else {
            v2
        }
    };
    Ok((vec![e1, e2], vec![vec_for(e1), vec_for(e2)]))
}

fn eig_dense(h: &CMat, tol: f64) -> Result<(Vec<C64>, Vec<CVec>)> {
    let n = h.nrows();
    let schur = Schur::try_new(h.clone(), f64::EPSILON, 0).ok_or(Error::NonFinite)?;
    let (_, t) = schur.unpack();
    let raw: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = max_abs(h).max(1.0);

    let mut energies = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for cluster in group_levels(&raw, tol) {
        let k = cluster.len();
        let e = cluster.iter().map(|&i| raw[i]).sum::<C64>() / k as f64;
        let shifted = h - CMat::identity(n, n) * e;
        let svd = SVD::new(shifted, false, true);
        let v_t = svd.v_t.as_ref().expect("v_t requested");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
        // A diagonalizable cluster of multiplicity k has a k-dimensional null space.
        if svd.singular_values[idx[k - 1]] > 1e-6 * scale {
            return Err(Error::NearExceptionalPoint { condition: f64::INFINITY });
        }
        for &i in idx.iter().take(k) {
            energies.push(e);
            vectors.push(v_t.row(i).adjoint());
        }
    }
    Ok((energies, vectors))
}

/// `√ρ = Σ_n √P_n |u_n⟩⟨u_n^L|` in the biorthogonal functional calculus.
pub fn matrix_sqrt_biortho(weights: &[f64], eigsys: &EigenSystem) -> Result<CMat> {
    if weights.len() != eigsys.dim() {
        return Err(Error::InvalidInput("one weight per band is required".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be non-negative, got {w}")));
    }
    Ok(eigsys.apply(|n| C64::from(weights[n].sqrt())))
}

/// `exp(A_N·dt) ⋯ exp(A_1·dt)` — later samples act on the left.
pub fn ordered_product(samples: &[CMat], step: f64) -> CMat {
    let n = samples.first().map_or(2, |a| a.nrows());
    samples.iter().fold(CMat::identity(n, n), |acc, a| (a * C64::from(step)).exp() * acc)
}

/// Path-ordered exponential along sampled connection values, guarded by a
/// half-resolution comparison (pairs of samples merged into one double step).
pub fn path_ordered_exp(samples: &[CMat], step: f64) -> Result<CMat> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let fine = ordered_product(samples, step);
    if samples.len() >= 4 {
        let coarse_samples: Vec<CMat> = samples.chunks(2).map(|c| c.iter().sum::<CMat>() / C64::from(c.len() as f64)).collect();
        let mut coarse = CMat::identity(fine.nrows(), fine.ncols());
        for (a, chunk) in coarse_samples.iter().zip(samples.chunks(2)) {
            coarse = (a * C64::from(step * chunk.len() as f64)).exp() * coarse;
        }
        let disagreement = max_abs(&(&fine - coarse));
        if disagreement > RESOLUTION_TOL {
            return Err(Error::ResolutionTooCoarse { disagreement });
        }
    }
    Ok(fine)
}

/// Match bands of consecutive eigensystems by maximal biorthogonal overlap.
///
/// Returns one permutation per consecutive pair: `perm[k][n]` is the band at step
/// `k+1` continuing band `n` of step `k`. Degenerate levels are matched as blocks via
/// their projectors, members keeping their in-level order.
pub fn track_bands(systems: &[EigenSystem]) -> Result<Vec<Vec<usize>>> {
    let mut perms = Vec::with_capacity(systems.len().saturating_sub(1));
    for (step, pair) in systems.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if a.dim() != b.dim() || a.levels().len() != b.levels().len() {
            return Err(Error::AmbiguousTracking { step, best: 0.0, second: 0.0 });
        }
        let nl = a.levels().len();
        let mut level_perm = vec![usize::MAX; nl];
        for (la, slot) in level_perm.iter_mut().enumerate() {
            let mut scores: Vec<(f64, usize)> = (0..nl)
                .map(|lb| {
                    let rank = a.levels()[la].len();
                    if b.levels()[lb].len() != rank {
                        return (0.0, lb);
                    }
                    let s = if rank == 1 {
                        (a.left_row(a.levels()[la][0]) * b.right.column(b.levels()[lb][0]))[(0, 0)].norm()
                    } else {
                        (a.level_projector(la) * b.level_projector(lb)).trace().norm() / rank as f64
                    };
                    (s, lb)
                })
                .collect();
            scores.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            let best = scores[0].0;
            let second = scores.get(1).map_or(0.0, |s| s.0);
            if best < 0.7 || best - second < 0.1 {
                return Err(Error::AmbiguousTracking { step, best, second });
            }
            *slot = scores[0].1;
        }
        let mut seen = vec![false; nl];
        for &l in &level_perm {
            if seen[l] {
                return Err(Error::AmbiguousTracking { step, best: 1.0, second: 1.0 });
            }
            seen[l] = true;
        }
        let mut perm = vec![0; a.dim()];
        for (la, &lb) in level_perm.iter().enumerate() {
            for (k, &band) in a.levels()[la].iter().enumerate() {
                perm[band] = b.levels()[lb][k];
            }
        }
        perms.push(perm);
    }
    Ok(perms)
}

/// Compose per-step permutations into the net band monodromy.
pub fn monodromy(perms: &[Vec<usize>]) -> Vec<usize> {
    let n = perms.first().map_or(0, |p| p.len());
    let mut net: Vec<usize> = (0..n).collect();
    for p in perms {
        for x in net.iter_mut() {
            *x = p[*x];
        }
    }
    net
}

/// Match each level of `center` to the level of `other` with the nearest energy.
///
/// Used for stencil neighbours, where eigenvalue continuity is the physical criterion
/// (it stays valid where a sign convention flips between neighbouring points).
pub fn match_levels(center: &EigenSystem, other: &EigenSystem) -> Result<Vec<usize>> {
    let nl = center.levels().len();
    if other.levels().len() != nl {
        return Err(Error::AmbiguousTracking { step: 0, best: 0.0, second: 0.0 });
    }
    let mut out = Vec::with_capacity(nl);
    let mut used = vec![false; nl];
    for l in 0..nl {
        let e = center.level_energy(l);
        let (best, _) = (0..nl)
            .map(|k| (k, (other.level_energy(k) - e).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if used[best] {
            return Err(Error::AmbiguousTracking { step: 0, best: 0.0, second: 0.0 });
        }
        used[best] = true;
        out.push(best);
    }
    Ok(out)
}

/// Central difference `(f(x+h e_d) − f(x−h e_d)) / 2h` of a matrix-valued field.
pub fn finite_diff<F>(field: F, point: &[f64], direction: usize, h: f64) -> Result<CMat>
where
    F: Fn(&[f64]) -> Result<CMat>,
{
    if direction >= point.len() {
        return Err(Error::InvalidInput(format!("direction {direction} out of range for a {}-dimensional point", point.len())));
    }
    let mut xp = point.to_vec();
    let mut xm = point.to_vec();
    xp[direction] += h;
    xm[direction] -= h;
    Ok((field(&xp)? - field(&xm)?) / C64::from(2.0 * h))
}
