//! Model Hamiltonians and their parameter-space embeddings.
//!
//! | family       | Hamiltonian                          | embeddings        |
//! |--------------|--------------------------------------|-------------------|
//! | `NH2`        | `q·σ + iγσ_z`                        | `Loop2D`, `Sphere2D` |
//! | `NH3`        | `q·(Λ₁,Λ₂,Λ₆,Λ₇) + iγΛ₈`             | `S3`              |
//! | `Hermitian3` | same with γ = 0                      | `S3`              |
//! | `NH4`        | `Σ q_μ Γ_μ + iγΓ₄`                   | `Loop4D`, `S4`    |
//!
//! Parameter points are plain coordinate slices in the order listed on
//! [`Embedding::coordinates`]; angles are in radians and lengths in units of γ.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, eig_biorthogonal, CMat, CVec, EigenSystem, C64, DEFAULT_DEGENERACY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    NH2,
    NH3,
    NH4,
    Hermitian3,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nh2" => Ok(Family::NH2),
            "nh3" => Ok(Family::NH3),
            "nh4" => Ok(Family::NH4),
            "hermitian3" | "h3" => Ok(Family::Hermitian3),
            other => Err(Error::InvalidConfig(format!("unknown model family `{other}`"))),
        }
    }
}

impl Family {
    pub fn dim(self) -> usize {
        match self {
            Family::NH2 => 2,
            Family::NH3 | Family::Hermitian3 => 3,
            Family::NH4 => 4,
        }
    }
}

/// Where in q-space the model is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Embedding {
    /// `q = (r sinθ + d, 0, r cosθ)`.
    Loop2D { r: f64, d: f64 },
    /// `q = R(sinθ cosφ, sinθ sinφ, cosθ)`.
    Sphere2D { radius: f64 },
    /// `Ω₁ = R cosα`, `Ω₂ = R sinα` with phases φ₁, φ₂.
    S3 { radius: f64 },
    /// `q = ((r sinθ + d)/√2, (r sinθ + d)/√2, 0, r cosθ, 0)`.
    Loop4D { r: f64, d: f64 },
    /// `q = R(s₁s₂cosφ₂, s₁c₂cosφ₁, s₁c₂sinφ₁, cosθ₁, s₁s₂sinφ₂)`.
    S4 { radius: f64 },
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Embedding::Loop2D { .. } => "Loop2D",
            Embedding::Sphere2D { .. } => "Sphere2D",
            Embedding::S3 { .. } => "S3",
            Embedding::Loop4D { .. } => "Loop4D",
            Embedding::S4 { .. } => "S4",
        };
        f.write_str(name)
    }
}

impl Embedding {
    /// Coordinate names in parameter-point order.
    pub fn coordinates(&self) -> &'static [&'static str] {
        match self {
            Embedding::Loop2D { .. } | Embedding::Loop4D { .. } => &["theta"],
            Embedding::Sphere2D { .. } => &["theta", "phi"],
            Embedding::S3 { .. } => &["alpha", "phi1", "phi2"],
            Embedding::S4 { .. } => &["theta1", "theta2", "phi1", "phi2"],
        }
    }

    pub fn param_dim(&self) -> usize {
        self.coordinates().len()
    }

    /// Integration / loop domain of each coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Embedding::Loop2D { .. } | Embedding::Loop4D { .. } => vec![(0.0, 2.0 * PI)],
            Embedding::Sphere2D { .. } => vec![(0.0, PI), (0.0, 2.0 * PI)],
            Embedding::S3 { .. } => vec![(0.0, PI / 2.0), (0.0, 2.0 * PI), (0.0, 2.0 * PI)],
            Embedding::S4 { .. } => vec![(0.0, PI), (0.0, PI / 2.0), (0.0, 2.0 * PI), (0.0, 2.0 * PI)],
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self, Embedding::Loop2D { .. } | Embedding::Loop4D { .. })
    }

    fn lengths(&self) -> Vec<f64> {
        match *self {
            Embedding::Loop2D { r, d } | Embedding::Loop4D { r, d } => vec![r, d],
            Embedding::Sphere2D { radius } | Embedding::S3 { radius } | Embedding::S4 { radius } => vec![radius],
        }
    }

    /// Same embedding with its radius (sphere radius, or loop radius `r`) replaced.
    pub fn with_radius(self, value: f64) -> Self {
        match self {
            Embedding::Loop2D { d, .. } => Embedding::Loop2D { r: value, d },
            Embedding::Loop4D { d, .. } => Embedding::Loop4D { r: value, d },
            Embedding::Sphere2D { .. } => Embedding::Sphere2D { radius: value },
            Embedding::S3 { .. } => Embedding::S3 { radius: value },
            Embedding::S4 { .. } => Embedding::S4 { radius: value },
        }
    }

    /// Same loop with its centre displacement replaced; spheres are returned unchanged.
    pub fn with_displacement(self, value: f64) -> Self {
        match self {
            Embedding::Loop2D { r, .. } => Embedding::Loop2D { r, d: value },
            Embedding::Loop4D { r, .. } => Embedding::Loop4D { r, d: value },
            other => other,
        }
    }
}

/// A model family, its gain/loss rate γ and an embedding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub gamma: f64,
    pub embedding: Embedding,
}

impl ModelSpec {
    /// Validated constructor. γ = 0 is accepted: it is the Hermitian limit of every family.
    pub fn new(family: Family, gamma: f64, embedding: Embedding) -> Result<Self> {
        let spec = Self { family, gamma, embedding };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be finite and non-negative, got {}", self.gamma)));
        }
        if let Some(x) = self.embedding.lengths().into_iter().find(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(format!("geometric parameters must be finite and non-negative, got {x}")));
        }
        let ok = matches!(
            (self.family, self.embedding),
            (Family::NH2, Embedding::Loop2D { .. } | Embedding::Sphere2D { .. })
                | (Family::NH3 | Family::Hermitian3, Embedding::S3 { .. })
                | (Family::NH4, Embedding::Loop4D { .. } | Embedding::S4 { .. })
        );
        if !ok {
            return Err(Error::IncompatibleEmbedding { family: self.family.to_string(), embedding: self.embedding.to_string() });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Effective γ entering the Hamiltonian (zero for the Hermitian reference model).
    pub fn effective_gamma(&self) -> f64 {
        if self.family == Family::Hermitian3 {
            0.0
        } else {
            self.gamma
        }
    }

    pub fn with_embedding(self, embedding: Embedding) -> Self {
        Self { embedding, ..self }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.embedding.param_dim() {
            return Err(Error::InvalidInput(format!("{} expects {} coordinates, got {}", self.embedding, self.embedding.param_dim(), p.len())));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("parameter point has non-finite coordinates".into()));
        }
        Ok(())
    }
}

fn m(n: usize, entries: &[(f64, f64)]) -> CMat {
    let e: Vec<C64> = entries.iter().map(|&(re, im)| c64(re, im)).collect();
    CMat::from_row_slice(n, n, &e)
}

/// σ_x, σ_y, σ_z.
pub fn pauli_basis() -> [CMat; 3] {
    let (o, z, i, mi) = ((1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, -1.0));
    [m(2, &[z, o, o, z]), m(2, &[z, mi, i, z]), m(2, &[o, z, z, (-1.0, 0.0)])]
}

/// Standard Gell-Mann matrices Λ₁ … Λ₈ (`Tr Λ_aΛ_b = 2δ_ab`).
pub fn gell_mann_basis() -> [CMat; 8] {
    let (o, z, i, mi) = ((1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, -1.0));
    let s = 1.0 / 3f64.sqrt();
    [
        m(3, &[z, o, z, o, z, z, z, z, z]),
        m(3, &[z, mi, z, i, z, z, z, z, z]),
        m(3, &[o, z, z, z, (-1.0, 0.0), z, z, z, z]),
        m(3, &[z, z, o, z, z, z, o, z, z]),
        m(3, &[z, z, mi, z, z, z, i, z, z]),
        m(3, &[z, z, z, z, z, o, z, o, z]),
        m(3, &[z, z, z, z, z, mi, z, i, z]),
        m(3, &[(s, 0.0), z, z, z, (s, 0.0), z, z, z, (-2.0 * s, 0.0)]),
    ]
}

/// Five mutually anticommuting 4×4 Dirac matrices.
///
/// With σ = (X, Y, Z): Γ₁ = Y⊗Y, Γ₂ = I⊗X, Γ₃ = −Z⊗Y, Γ₄ = I⊗Z, Γ₅ = X⊗Y.
/// This is the unique assignment (up to the basis choice of the tensor factors) for
/// which the closed-form loop and S⁴ eigenvectors used by
/// [`analytic_eigensystem`] are exact eigenvectors.
pub fn dirac_basis() -> [CMat; 5] {
    let [x, y, z] = pauli_basis();
    let id = CMat::identity(2, 2);
    [y.kronecker(&y), id.kronecker(&x), -z.kronecker(&y), id.kronecker(&z), x.kronecker(&y)]
}

struct Bases {
    pauli: [CMat; 3],
    gell_mann: [CMat; 8],
    dirac: [CMat; 5],
}

fn bases() -> &'static Bases {
    static B: OnceLock<Bases> = OnceLock::new();
    B.get_or_init(|| Bases { pauli: pauli_basis(), gell_mann: gell_mann_basis(), dirac: dirac_basis() })
}

/// The real coefficient vector `q` at a parameter point (`Ω`-components for S³).
pub fn q_vector(spec: &ModelSpec, p: &[f64]) -> Result<Vec<f64>> {
    spec.check_point(p)?;
    Ok(match spec.embedding {
        Embedding::Loop2D { r, d } => vec![r * p[0].sin() + d, 0.0, r * p[0].cos()],
        Embedding::Sphere2D { radius } => {
            let (st, ct) = p[0].sin_cos();
            let (sp, cp) = p[1].sin_cos();
            vec![radius * st * cp, radius * st * sp, radius * ct]
        }
        Embedding::S3 { radius } => {
            let (o1, o2) = (radius * p[0].cos(), radius * p[0].sin());
            vec![o1 * p[1].cos(), o1 * p[1].sin(), o2 * p[2].cos(), o2 * p[2].sin()]
        }
        Embedding::Loop4D { r, d } => {
            let a = (r * p[0].sin() + d) * FRAC_1_SQRT_2;
            vec![a, a, 0.0, r * p[0].cos(), 0.0]
        }
        Embedding::S4 { radius } => {
            let (s1, c1) = p[0].sin_cos();
            let (s2, c2) = p[1].sin_cos();
            let (sp1, cp1) = p[2].sin_cos();
            let (sp2, cp2) = p[3].sin_cos();
            vec![radius * s1 * s2 * cp2, radius * s1 * c2 * cp1, radius * s1 * c2 * sp1, radius * c1, radius * s1 * s2 * sp2]
        }
    })
}

/// Model Hamiltonian at an embedded parameter point.
pub fn hamiltonian(spec: &ModelSpec, p: &[f64]) -> Result<CMat> {
    spec.validate()?;
    let q = q_vector(spec, p)?;
    let b = bases();
    let g = C64::new(0.0, spec.effective_gamma());
    let h = match spec.family {
        Family::NH2 => {
            let mut h = &b.pauli[2] * g;
            for (qi, s) in q.iter().zip(&b.pauli) {
                h += s * C64::from(*qi);
            }
            h
        }
        Family::NH3 | Family::Hermitian3 => {
            let mut h = &b.gell_mann[7] * g;
            for (qi, k) in q.iter().zip([0usize, 1, 5, 6]) {
                h += &b.gell_mann[k] * C64::from(*qi);
            }
            h
        }
        Family::NH4 => {
            let mut h = &b.dirac[3] * g;
            for (qi, gm) in q.iter().zip(&b.dirac) {
                h += gm * C64::from(*qi);
            }
            h
        }
    };
    Ok(h)
}

/// Numerical biorthogonal eigensystem of the model at `p`.
pub fn eigensystem(spec: &ModelSpec, p: &[f64]) -> Result<EigenSystem> {
    eig_biorthogonal(&hamiltonian(spec, p)?, DEFAULT_DEGENERACY_TOL * spec.gamma.max(1.0))
}

/// Closed-form eigensystem (two-band model on any embedding, four-band model on
/// the loop and on S⁴). Bands are ordered `E₁ = +√(…)` (principal branch) first.
///
/// Right vectors are the textbook ones divided by the complex norm
/// `N = √(Σ_i v_i²)` taken with the phase factors stripped; left covectors follow
/// from biorthonormality.
pub fn analytic_eigensystem(spec: &ModelSpec, p: &[f64]) -> Result<EigenSystem> {
    spec.validate()?;
    let q = q_vector(spec, p)?;
    let g = spec.effective_gamma();
    let ig = c64(0.0, g);
    let tol = DEFAULT_DEGENERACY_TOL * g.max(1.0);
    match (spec.family, spec.embedding) {
        (Family::NH2, _) => {
            let qz = c64(q[2], 0.0) + ig;
            let e = (c64(q[0] * q[0] + q[1] * q[1], 0.0) + qz * qz).sqrt();
            let scale = q.iter().map(|x| x.abs()).fold(g, f64::max).max(1e-300);
            let mut right = CMat::zeros(2, 2);
            let mut norms = Vec::new();
            for (k, en) in [e, -e].into_iter().enumerate() {
                let mut v = CVec::from_vec(vec![c64(q[0], -q[1]), en - qz]);
                if v.norm() < 1e-8 * scale {
                    v = CVec::from_vec(vec![en + qz, c64(q[0], q[1])]);
                }
                let n = v.iter().map(|z| z * z).sum::<C64>().sqrt();
                let n = if n.norm() > 1e-12 * v.norm() { n } else { C64::from(v.norm()) };
                right.set_column(k, &(v / n));
                norms.push(n);
            }
            EigenSystem::from_right(vec![e, -e], right, norms, tol)
        }
        (Family::NH4, Embedding::Loop4D { r, d }) => {
            let th = p[0];
            let a = r * th.sin() + d;
            let shift = c64(r * th.cos(), g);
            let e = (c64(a * a, 0.0) + shift * shift).sqrt();
            let mut right = CMat::zeros(4, 4);
            let mut norms = Vec::new();
            for (k, en) in [e, -e].into_iter().enumerate() {
                let cc = (en + shift) * SQRT_2;
                let a = C64::from(a);
                let n = (a * a * 2.0 + cc * cc).sqrt();
                let alpha = CVec::from_vec(vec![C64::from(0.0), a, cc, a]) / n;
                let beta = CVec::from_vec(vec![cc, a, C64::from(0.0), -a]) / n;
                right.set_column(2 * k, &alpha);
                right.set_column(2 * k + 1, &beta);
                norms.extend([n, n]);
            }
            EigenSystem::from_right(vec![e, e, -e, -e], right, norms, tol)
        }
        (Family::NH4, Embedding::S4 { radius }) => {
            let (s1, c1) = p[0].sin_cos();
            let (s2, c2) = p[1].sin_cos();
            let (p1, p2) = (p[2], p[3]);
            let shift = c64(radius * c1, g);
            let e = (c64(radius * radius - g * g, 2.0 * g * radius * c1)).sqrt();
            let rs = radius * s1;
            let ph = |x: f64| C64::from_polar(1.0, x);
            let mut right = CMat::zeros(4, 4);
            let mut norms = Vec::new();
            for (k, en) in [e, -e].into_iter().enumerate() {
                let cc = en + shift;
                let n = (c64(rs * rs, 0.0) + cc * cc).sqrt();
                let alpha = CVec::from_vec(vec![C64::from(0.0), ph(-(p1 - p2)) * (rs * s2), cc * ph(-p1), C64::from(rs * c2)]) / n;
                let beta = CVec::from_vec(vec![cc * ph(p2), ph(-(p1 - p2)) * (rs * c2), C64::from(0.0), C64::from(-rs * s2)]) / n;
                right.set_column(2 * k, &alpha);
                right.set_column(2 * k + 1, &beta);
                norms.extend([n, n]);
            }
            EigenSystem::from_right(vec![e, e, -e, -e], right, norms, tol)
        }
        (family, embedding) => Err(Error::NoClosedForm(format!("{family} on {embedding}"))),
    }
}
