//! Physical and basis parameters, and the Gol'dman–Krivchenkov (GK)
//! reference oscillator `-d²/dr² + B r² + (γ(γ+1) + A)/r²`.
//!
//! `γ = l + (N−3)/2` is the canonical angular parameter; the `(N, l)`
//! constructors are sugar for it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

/// Angular/oscillator data of a radial channel, without the dummy
/// parameter `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    gamma: f64,
    b: f64,
}

impl Sector {
    pub fn new(gamma: f64, b: f64) -> Result<Self> {
        if !(gamma >= -1.0) || !gamma.is_finite() {
            return Err(Error::domain("Sector", format!("gamma = {gamma} must be >= -1")));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain("Sector", format!("B = {b} must be positive")));
        }
        Ok(Sector { gamma, b })
    }

    /// `γ = l + (N−3)/2`. Only `l = 0` is meaningful for `N = 1`.
    pub fn from_dimension(dim: u32, l: u32, b: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("Sector", "dimension N must be >= 1"));
        }
        if dim == 1 && l != 0 {
            return Err(Error::domain("Sector", "l must be 0 when N = 1"));
        }
        Sector::new(f64::from(l) + (f64::from(dim) - 3.0) / 2.0, b)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn beta(&self) -> f64 {
        self.b.sqrt()
    }

    /// Smallest admissible `A`: the larger of `−1/4` and `−(γ+½)²`.
    pub fn a_min(&self) -> f64 {
        let h = self.gamma + 0.5;
        (-0.25f64).max(-h * h)
    }

    /// True for `γ ∈ [−1, −½)`, where the basis behaves as `r^{−γ}` at the
    /// origin rather than as the regular `r^{γ+1}`.
    pub fn attractive_singularity(&self) -> bool {
        self.gamma < -0.5
    }

    pub fn with_a(self, a: f64) -> Result<ChannelSpec> {
        ChannelSpec::from_sector(self, a)
    }
}

/// A radial channel together with the basis parameter `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    sector: Sector,
    a: f64,
    zeta: f64,
}

impl ChannelSpec {
    pub fn new(gamma: f64, a: f64, b: f64) -> Result<Self> {
        Self::from_sector(Sector::new(gamma, b)?, a)
    }

    pub fn from_dimension(dim: u32, l: u32, a: f64, b: f64) -> Result<Self> {
        Self::from_sector(Sector::from_dimension(dim, l, b)?, a)
    }

    pub fn from_sector(sector: Sector, a: f64) -> Result<Self> {
        if !(a >= -0.25) || !a.is_finite() {
            return Err(Error::domain("ChannelSpec", format!("A = {a} must be >= -1/4")));
        }
        let zeta = zeta_of(a, sector.gamma)?;
        Ok(ChannelSpec { sector, a, zeta })
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn gamma(&self) -> f64 {
        self.sector.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.sector.b
    }

    pub fn beta(&self) -> f64 {
        self.sector.beta()
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Matrix elements of `r⁻²` need `ζ > 1`.
    pub(crate) fn require_inverse_square(&self, op: &'static str) -> Result<()> {
        if self.zeta > 1.0 {
            Ok(())
        } else {
            Err(Error::domain(op, format!("r^-2 elements need zeta > 1 (zeta = {})", self.zeta)))
        }
    }
}

/// Coupling pair of the non-polynomial term `λ r²/(1 + g r²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    lambda: f64,
    g: f64,
}

impl PotentialParams {
    pub fn new(lambda: f64, g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::domain("PotentialParams", format!("g = {g} must be positive")));
        }
        if !lambda.is_finite() {
            return Err(Error::domain("PotentialParams", "lambda must be finite"));
        }
        Ok(PotentialParams { lambda, g })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// `λ r²/(1 + g r²)`.
    pub fn eval(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.lambda * r2 / (1.0 + self.g * r2)
    }
}

/// `ζ = 1 + √(A + (γ+½)²)`.
pub fn zeta_of(a: f64, gamma: f64) -> Result<f64> {
    let h = gamma + 0.5;
    let radicand = a + h * h;
    if !(radicand >= 0.0) {
        return Err(Error::domain("zeta_of", format!("A + (gamma + 1/2)^2 = {radicand} is negative")));
    }
    Ok(1.0 + radicand.sqrt())
}

/// `ε_n = 2β(2n + ζ)`.
pub fn gk_energy(n: usize, channel: &ChannelSpec) -> f64 {
    2.0 * channel.beta() * (2.0 * n as f64 + channel.zeta())
}

/// Normalized GK eigenfunction
/// `ψ_n(r) = (−1)^n √(2β^ζ (ζ)_n/(n! Γ(ζ))) r^{ζ−½} e^{−βr²/2} ₁F₁(−n; ζ; βr²)`,
/// evaluated through the generalized Laguerre recurrence
/// (`₁F₁(−n; ζ; x) = n!/(ζ)_n · L_n^{(ζ−1)}(x)`), which stays stable for the
/// basis sizes used here.
pub fn gk_wavefunction(n: usize, channel: &ChannelSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("gk_wavefunction", format!("r = {r} must be positive")));
    }
    let zeta = channel.zeta();
    let beta = channel.beta();
    let x = beta * r * r;
    let alpha = zeta - 1.0;

    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }

    let ln_norm = 0.5
        * (std::f64::consts::LN_2 + zeta * beta.ln() + ln_gamma(n as f64 + 1.0)? - ln_gamma(n as f64 + zeta)?);
    let ln_envelope = (zeta - 0.5) * r.ln() - 0.5 * x;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * (ln_norm + ln_envelope).exp() * cur)
}

/// A GK eigenstate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GkState {
    pub n: usize,
    pub channel: ChannelSpec,
}

impl GkState {
    pub fn energy(&self) -> f64 {
        gk_energy(self.n, &self.channel)
    }

    pub fn wavefunction(&self, r: f64) -> Result<f64> {
        gk_wavefunction(self.n, &self.channel, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{hyp1f1_terminating, pochhammer};

    #[test]
    fn zeta_values() {
        assert_eq!(zeta_of(0.0, 0.0).unwrap(), 1.5);
        assert_eq!(zeta_of(0.0, 2.0).unwrap(), 3.5);
        assert_eq!(zeta_of(-0.25, 0.0).unwrap(), 1.0);
        assert_eq!(zeta_of(-0.25, -1.0).unwrap(), 1.0);
        assert!(zeta_of(-0.25, -0.5).is_err());
    }

    #[test]
    fn dimension_sugar() {
        for dim in 1..6u32 {
            for l in 0..4u32 {
                if dim == 1 && l > 0 {
                    assert!(Sector::from_dimension(dim, l, 1.0).is_err());
                    continue;
                }
                let s = Sector::from_dimension(dim, l, 1.0).unwrap();
                assert_eq!(s.gamma() + 0.5, f64::from(l) + f64::from(dim) / 2.0 - 1.0);
            }
        }
        assert!(Sector::from_dimension(0, 0, 1.0).is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(ChannelSpec::new(-1.1, 0.0, 1.0).is_err());
        assert!(ChannelSpec::new(0.0, -0.3, 1.0).is_err());
        assert!(ChannelSpec::new(0.0, 0.0, 0.0).is_err());
        assert!(PotentialParams::new(1.0, 0.0).is_err());
        assert!(PotentialParams::new(-5.0, 0.1).is_ok());
        let c = ChannelSpec::new(-0.5, -0.25, 1.0);
        assert!(c.is_err());
        let c = ChannelSpec::new(0.0, -0.25, 1.0).unwrap();
        assert_eq!(c.zeta(), 1.0);
        assert!(c.require_inverse_square("t").is_err());
        assert!(Sector::new(-0.7, 1.0).unwrap().attractive_singularity());
        assert!(!Sector::new(0.0, 1.0).unwrap().attractive_singularity());
    }

    #[test]
    fn energies() {
        let c = ChannelSpec::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(gk_energy(0, &c), 3.0);
        assert_eq!(gk_energy(1, &c), 7.0);
        let c4 = ChannelSpec::new(0.0, 0.0, 4.0).unwrap();
        assert_eq!(gk_energy(0, &c4), 6.0);
        assert_eq!(GkState { n: 3, channel: c }.energy(), 2.0 * (6.0 + 1.5));
    }

    #[test]
    fn wavefunction_matches_hypergeometric_form() {
        let c = ChannelSpec::new(1.0, 0.3, 2.0).unwrap();
        let (zeta, beta) = (c.zeta(), c.beta());
        for n in 0..6 {
            for &r in &[0.2f64, 0.7, 1.3, 2.1] {
                let norm = (2.0 * beta.powf(zeta) * pochhammer(zeta, n)
                    / ((1..=n).product::<usize>() as f64 * ln_gamma(zeta).unwrap().exp()))
                .sqrt();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let direct = sign
                    * norm
                    * r.powf(zeta - 0.5)
                    * (-beta * r * r / 2.0).exp()
                    * hyp1f1_terminating(n, zeta, beta * r * r);
                let v = gk_wavefunction(n, &c, r).unwrap();
                assert!((v - direct).abs() < 1e-12 * (1.0 + direct.abs()), "n={n} r={r}: {v} vs {direct}");
            }
        }
    }

    #[test]
    fn first_excited_state_has_one_node() {
        let c = ChannelSpec::new(0.0, 0.0, 1.0).unwrap();
        // 1 − βr²/ζ vanishes at r = √1.5
        let samples: Vec<f64> = (1..400).map(|i| gk_wavefunction(1, &c, i as f64 * 0.02).unwrap()).collect();
        let changes = samples.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert_eq!(changes, 1);
        assert!(gk_wavefunction(1, &c, 1.5f64.sqrt()).unwrap().abs() < 1e-14);
        assert!(gk_wavefunction(0, &c, -1.0).is_err());
    }
}
