//! Finite-temperature density matrices over biorthogonal eigenbases and the scalar
//! thermal factors (f, λ, λ₁, λ₂) used by every invariant.
//!
//! Non-Hermitian spectra are complex, so the Boltzmann factor needs a real
//! "effective energy" per band. Two conventions are offered:
//!
//! - [`WeightConvention::Abs`] (default): `Ẽ = sign(Re E)·|E|`. On the real axis this is
//!   `E` itself; off it, it keeps the modulus that also enters `f = 1 − sech(|E|/T)`.
//! - [`WeightConvention::Re`]: `Ẽ = Re E`.
//!
//! The same `Ẽ` feeds `f`, so weights and the closed-form connection coefficient stay
//! mutually consistent under either choice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, EigenSystem, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightConvention {
    Re,
    #[default]
    Abs,
}

impl std::str::FromStr for WeightConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "re" => Ok(Self::Re),
            "abs" => Ok(Self::Abs),
            other => Err(Error::InvalidConfig(format!("weight convention must be `re` or `abs`, got `{other}`"))),
        }
    }
}

/// Relative size below which `Re E` counts as zero (a purely imaginary level).
const REAL_PART_TOL: f64 = 1e-9;

/// Real energy entering the Boltzmann factor.
pub fn effective_energy(e: C64, conv: WeightConvention) -> f64 {
    match conv {
        WeightConvention::Re => e.re,
        WeightConvention::Abs => {
            if e.re.abs() <= REAL_PART_TOL * e.norm().max(1.0) {
                0.0
            } else {
                e.re.signum() * e.norm()
            }
        }
    }
}

/// Normalized Boltzmann weights `e^{−Ẽ_n/T}/Z`, one per band (degenerate bands each
/// carry a weight, so `Z` counts multiplicity).
pub fn boltzmann_weights(energies: &[C64], t: f64, conv: WeightConvention) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {t}")));
    }
    let x: Vec<f64> = energies.iter().map(|&e| effective_energy(e, conv)).collect();
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = x.iter().map(|xi| (-(xi - min) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|wi| wi / z).collect())
}

/// A thermal state: temperature, weights, eigenbasis and the assembled ρ.
#[derive(Clone, Debug)]
pub struct ThermalState {
    pub temperature: f64,
    pub weights: Vec<f64>,
    pub eigsys: EigenSystem,
    pub rho: CMat,
}

impl ThermalState {
    /// Weight of a level (shared by its degenerate members).
    pub fn level_weight(&self, level: usize) -> f64 {
        self.weights[self.eigsys.levels()[level][0]]
    }
}

/// `ρ = Σ_n P_n |u_n⟩⟨u_n^L|`; degenerate members share their level's weight.
pub fn density_matrix(eigsys: &EigenSystem, t: f64, conv: WeightConvention) -> Result<ThermalState> {
    let level_e: Vec<C64> = eigsys.energies().iter().enumerate().map(|(b, _)| eigsys.level_energy(eigsys.level_of(b))).collect();
    let weights = boltzmann_weights(&level_e, t, conv)?;
    let rho = eigsys.apply(|n| C64::from(weights[n]));
    Ok(ThermalState { temperature: t, weights, eigsys: eigsys.clone(), rho })
}

/// `f = 1 − sech(|E|/T)`.
pub fn f_factor(e: C64, t: f64) -> f64 {
    let x = e.norm() / t;
    1.0 - 1.0 / x.cosh()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightOrder {
    /// `1/λ = tanh³(E/T)`.
    Chern1,
    /// `λ₁ = 2√2 sin2α sinh²(E/2T) sinh(E/T) / √(cosh(E/T)(1 + 2cosh(E/T))³)`.
    Dd,
    /// `1/λ₂ = tanh⁵(E/T)`.
    Chern2,
}

/// `κ(x) = 4√2 sinh²(x/2) sinh x / √(cosh x (1 + 2cosh x)³)`, the factor by which the
/// thermal Bures three-form of the three-level model falls below its pure-state value.
/// Evaluated as `2√2 (1 − sech x) tanh x / (2 + sech x)^{3/2}` to stay finite for large x.
pub fn bures_suppression(x: f64) -> f64 {
    let sech = 1.0 / x.abs().cosh();
    let v = 2.0 * 2f64.sqrt() * (1.0 - sech) * x.abs().tanh() / (2.0 + sech).powf(1.5);
    v * x.signum()
}

/// Point-wise thermal weight.
///
/// `energy` is the signed effective energy of the band the weight refers to (for
/// `Chern1`/`Chern2` it must follow that band continuously over the integration
/// domain). `extra` is the S³ angle α for `Dd` and is ignored otherwise.
pub fn lambda_weight(order: WeightOrder, energy: f64, t: f64, extra: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {t}")));
    }
    let x = energy / t;
    match order {
        WeightOrder::Chern1 | WeightOrder::Chern2 => {
            let th = x.tanh();
            if th.abs() < 1e-8 {
                return Err(Error::DivergentWeight { tanh: th });
            }
            Ok(if order == WeightOrder::Chern1 { th.powi(-3) } else { th.powi(-5) })
        }
        WeightOrder::Dd => Ok((2.0 * extra).sin() / 2.0 * bures_suppression(x)),
    }
}

/// Weight restoring the pure-state Bures three-form at temperature T: `1/κ(E/T)`.
pub fn dd_restoring_weight(energy: f64, t: f64) -> Result<f64> {
    let k = bures_suppression(energy / t);
    if k.abs() < 1e-8 {
        return Err(Error::DivergentWeight { tanh: (energy / t).tanh() });
    }
    Ok(1.0 / k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, eig_biorthogonal, max_abs, DEFAULT_DEGENERACY_TOL};
    use proptest::prelude::*;

    fn pm1() -> [C64; 2] {
        [c64(1.0, 0.0), c64(-1.0, 0.0)]
    }

    #[test]
    fn weights_limits_and_closed_form() {
        let hot = boltzmann_weights(&pm1(), 1e9, WeightConvention::Abs).unwrap();
        assert!((hot[0] - 0.5).abs() < 1e-8 && (hot[1] - 0.5).abs() < 1e-8);
        let cold = boltzmann_weights(&pm1(), 1e-3, WeightConvention::Abs).unwrap();
        assert!(cold[0] < 1e-300 && (cold[1] - 1.0).abs() < 1e-15);
        let w = boltzmann_weights(&pm1(), 1.0, WeightConvention::Re).unwrap();
        let e = std::f64::consts::E;
        assert!((w[0] - 1.0 / e / (e + 1.0 / e)).abs() < 1e-15);
        assert!((w[0] - 0.119_203).abs() < 1e-6 && (w[1] - 0.880_797).abs() < 1e-6);
        assert!(boltzmann_weights(&pm1(), 0.0, WeightConvention::Abs).is_err());
    }

    #[test]
    fn effective_energy_conventions() {
        let e = c64(0.5, 1.2);
        assert_eq!(effective_energy(e, WeightConvention::Re), 0.5);
        assert!((effective_energy(e, WeightConvention::Abs) - 1.3).abs() < 1e-15);
        assert!((effective_energy(-e, WeightConvention::Abs) + 1.3).abs() < 1e-15);
        assert_eq!(effective_energy(c64(1e-17, 2.0), WeightConvention::Abs), 0.0);
    }

    #[test]
    fn f_factor_values() {
        assert!((f_factor(c64(1.0, 0.0), 1.0) - 0.351_945_3).abs() < 1e-6);
        assert_eq!(f_factor(c64(0.0, 0.0), 1.0), 0.0);
        assert!((f_factor(c64(800.0, 0.0), 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_limits() {
        assert!((lambda_weight(WeightOrder::Chern1, 50.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambda_weight(WeightOrder::Chern2, 50.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(lambda_weight(WeightOrder::Chern1, 1e-10, 1.0, 0.0), Err(Error::DivergentWeight { .. })));
        // Large-x limit of the printed λ₁ at α = π/4: 2√2/(4√2) = 1/2 exactly.
        let v = lambda_weight(WeightOrder::Dd, 1e3, 1.0, std::f64::consts::FRAC_PI_4).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bures_suppression_matches_its_defining_expression() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.0] {
            let direct = 4.0 * 2f64.sqrt() * (x / 2.0f64).sinh().powi(2) * x.sinh() / (x.cosh() * (1.0 + 2.0 * x.cosh()).powi(3)).sqrt();
            assert!((bures_suppression(x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn thermal_factor_temperature_derivatives() {
        // d f/dT = −sech(x) tanh(x) · |E|/T², x = |E|/T
        // d(1/λ)/dT for Chern1: 3 tanh²(x) sech²(x) · (−E/T²)
        for k in 0..20 {
            let e = 0.3 + 0.17 * k as f64;
            let t = 0.2 + 0.11 * k as f64;
            let h = 1e-5;
            let num = (f_factor(c64(e, 0.0), t + h) - f_factor(c64(e, 0.0), t - h)) / (2.0 * h);
            let x = e / t;
            let exact = -(1.0 / x.cosh()) * x.tanh() * e / (t * t);
            assert!((num - exact).abs() < 1e-6);
            let inv = |tt: f64| 1.0 / lambda_weight(WeightOrder::Chern1, e, tt, 0.0).unwrap();
            let num = (inv(t + h) - inv(t - h)) / (2.0 * h);
            let exact = 3.0 * x.tanh().powi(2) / x.cosh().powi(2) * (-e / (t * t));
            assert!((num - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn ground_state_limit() {
        let h = crate::linalg::from_rows(2, &[c64(0.3, 0.5), c64(1.0, 0.0), c64(0.7, 0.0), c64(-0.3, -0.5)]);
        let es = eig_biorthogonal(&h, DEFAULT_DEGENERACY_TOL).unwrap();
        let st = density_matrix(&es, 0.01, WeightConvention::Re).unwrap();
        let lowest = (0..2).min_by(|&a, &b| es.energy(a).re.partial_cmp(&es.energy(b).re).unwrap()).unwrap();
        assert!(max_abs(&(&st.rho - es.projector(lowest))) < 1e-3);
        assert!((st.rho.trace() - 1.0).norm() < 1e-10);
        let hot = density_matrix(&es, 1e9, WeightConvention::Abs).unwrap();
        assert!(max_abs(&(hot.rho - CMat::identity(2, 2) * C64::from(0.5))) < 1e-8);
    }

    proptest! {
        #[test]
        fn weights_are_permutation_equivariant(
            e in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..5),
            t in 0.05f64..5.0,
            shift in 0usize..4,
        ) {
            let energies: Vec<C64> = e.iter().map(|&(a, b)| c64(a, b)).collect();
            let n = energies.len();
            let rotated: Vec<C64> = (0..n).map(|i| energies[(i + shift) % n]).collect();
            for conv in [WeightConvention::Re, WeightConvention::Abs] {
                let w = boltzmann_weights(&energies, t, conv).unwrap();
                let wr = boltzmann_weights(&rotated, t, conv).unwrap();
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for i in 0..n {
                    prop_assert!((wr[i] - w[(i + shift) % n]).abs() < 1e-14);
                }
                // Monotone: lower effective energy never gets a smaller weight.
                for i in 0..n {
                    for j in 0..n {
                        if effective_energy(energies[i], conv) < effective_energy(energies[j], conv) {
                            prop_assert!(w[i] >= w[j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn f_is_monotone_in_energy(a in 0.0f64..10.0, b in 0.0f64..10.0, t in 0.05f64..5.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(f_factor(c64(lo, 0.0), t) <= f_factor(c64(hi, 0.0), t));
            prop_assert!((0.0..1.0).contains(&f_factor(c64(hi, 0.0), t)) || f_factor(c64(hi, 0.0), t) == 1.0);
        }
    }
}
