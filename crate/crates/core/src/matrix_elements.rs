//! Closed-form Hamiltonian matrix elements in the GK basis and assembly of
//! the Ritz matrix.
//!
//! The element of `r²/(1 + g r²)` is evaluated as
//!
//! ```text
//! ⟨m|r²/(1+gr²)|n⟩ = (−1)^{m+n} N_m N_n [ ζ z^ζ e^z Γ(−ζ, z)/g · F_m F_n − S_{mn}/β ]
//!
//!   z     = β/g
//!   N_k   = √((ζ)_k / k!)
//!   F_k   = ₁F₁(−k; ζ; −z)
//!   S_{mn} = Σ_i Σ_j (−n)_i (−m)_j / ((ζ)_i (ζ)_j i! j!) · T_{i+j}
//!   T_s   = Σ_{k=1}^{s} (−z)^k (ζ)_{s+1−k}
//! ```
//!
//! so that a single incomplete gamma function is needed per matrix. The two
//! bracketed terms cancel heavily; the whole table is accumulated in MPFR and
//! the working precision is raised until every entry keeps at least 64
//! significant bits after cancellation.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gk_energy, ChannelSpec, PotentialParams};
use crate::specfun::extended::{exponent, gamma_upper_ext};
use crate::specfun::ExtendedReal;

const START_PRECISION: u32 = 128;
const MAX_PRECISION: u32 = 16_384;
const RETAINED_BITS: i64 = 64;

/// Table of `⟨ψ_m| r²/(1+gr²) |ψ_n⟩` for `m, n < dim`, with both index
/// orders evaluated independently.
#[derive(Clone, Debug)]
pub struct NonPolyTable {
    values: Vec<Vec<f64>>,
    precision: u32,
}

impl NonPolyTable {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Entry as evaluated with the sum over `n`'s series outermost.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m][n]
    }

    /// Working precision (bits) that met the cancellation budget.
    pub fn precision(&self) -> u32 {
        self.precision
    }
}

/// Evaluate the non-polynomial table in the closed form.
pub fn nonpoly_table(dim: usize, channel: &ChannelSpec, g: f64) -> Result<NonPolyTable> {
    if dim == 0 {
        return Err(Error::domain("nonpoly_table", "dimension must be positive"));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::domain("nonpoly_table", format!("g = {g} must be positive")));
    }
    let mut prec = START_PRECISION;
    loop {
        let (values, deficit) = nonpoly_at_precision(dim, channel, g, prec)?;
        if deficit <= 0 {
            return Ok(NonPolyTable { values, precision: prec });
        }
        prec += u32::try_from(deficit).unwrap_or(MAX_PRECISION) + 32;
        if prec > MAX_PRECISION {
            return Err(Error::NoConvergence { op: "nonpoly_table precision", iterations: prec as usize });
        }
    }
}

/// Returns the table and the worst shortfall (bits) against the retained
/// precision budget; nonpositive means every entry is good.
fn nonpoly_at_precision(dim: usize, channel: &ChannelSpec, g: f64, w: u32) -> Result<(Vec<Vec<f64>>, i64)> {
    let f = |x: f64| Float::with_val(w, x);

    let shifted = Float::with_val(w, f(channel.gamma()) + 0.5f64);
    let radicand = Float::with_val(w, shifted.square_ref()) + f(channel.a());
    if radicand < 0 {
        return Err(Error::domain("nonpoly_table", "A + (gamma + 1/2)^2 is negative"));
    }
    let zeta = radicand.sqrt() + 1u32;
    let beta = f(channel.b()).sqrt();
    let gf = f(g);
    let z = Float::with_val(w, &beta / &gf);

    // ζ z^ζ e^z Γ(−ζ, z) / g
    let neg_zeta = Float::with_val(w, -&zeta);
    let upper = gamma_upper_ext(&neg_zeta, &z)?;
    let ln_z = z.clone().ln();
    let scale = (Float::with_val(w, &zeta * &ln_z) + &z).exp();
    let lead = Float::with_val(w, &zeta * &upper) * scale / &gf;

    let top = 2 * dim;
    let mut poch = Vec::with_capacity(top);
    poch.push(f(1.0));
    for k in 1..top {
        let next = Float::with_val(w, &poch[k - 1] * Float::with_val(w, &zeta + (k - 1) as u32));
        poch.push(next);
    }
    let mut neg_z_pow = Vec::with_capacity(top);
    neg_z_pow.push(f(1.0));
    for k in 1..top {
        let next = Float::with_val(w, &neg_z_pow[k - 1] * &z);
        neg_z_pow.push(-next);
    }

    // T_s and Σ|terms| for s < 2 dim − 1
    let mut t = Vec::with_capacity(top);
    let mut t_abs = Vec::with_capacity(top);
    for s in 0..top - 1 {
        let mut acc = f(0.0);
        let mut acc_abs = f(0.0);
        for k in 1..=s {
            let term = Float::with_val(w, &neg_z_pow[k] * &poch[s + 1 - k]);
            acc_abs += Float::with_val(w, term.abs_ref());
            acc += term;
        }
        t.push(acc);
        t_abs.push(acc_abs);
    }

    // c[n][i] = (−n)_i / ((ζ)_i i!) = (−1)^i C(n, i)/(ζ)_i
    let mut coeffs: Vec<Vec<Float>> = Vec::with_capacity(dim);
    for n in 0..dim {
        let mut row = Vec::with_capacity(n + 1);
        let mut binom = f(1.0);
        for i in 0..=n {
            if i > 0 {
                binom *= (n + 1 - i) as u32;
                binom /= i as u32;
            }
            let mut c = Float::with_val(w, &binom / &poch[i]);
            if i % 2 == 1 {
                c = -c;
            }
            row.push(c);
        }
        coeffs.push(row);
    }

    // F_n = ₁F₁(−n; ζ; −z), every term positive
    let hyp: Vec<Float> = coeffs
        .iter()
        .map(|row| {
            let mut acc = f(0.0);
            for (i, c) in row.iter().enumerate() {
                acc += Float::with_val(w, c * &neg_z_pow[i]);
            }
            acc
        })
        .collect();

    let norms: Vec<Float> = (0..dim)
        .map(|n| {
            let mut fact = f(1.0);
            for k in 2..=n {
                fact *= k as u32;
            }
            Float::with_val(w, &poch[n] / fact).sqrt()
        })
        .collect();

    // U[m][i] = Σ_j c[m][j] T[i+j]
    let mut u = Vec::with_capacity(dim);
    let mut u_abs = Vec::with_capacity(dim);
    for row in &coeffs {
        let mut ur = Vec::with_capacity(dim);
        let mut ur_abs = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut acc = f(0.0);
            let mut acc_abs = f(0.0);
            for (j, c) in row.iter().enumerate() {
                acc += Float::with_val(w, c * &t[i + j]);
                acc_abs += Float::with_val(w, c.abs_ref()) * &t_abs[i + j];
            }
            ur.push(acc);
            ur_abs.push(acc_abs);
        }
        u.push(ur);
        u_abs.push(ur_abs);
    }

    let beta64 = channel.beta();
    let mut values = vec![vec![0.0; dim]; dim];
    let mut deficit = i64::MIN;
    for m in 0..dim {
        for n in 0..dim {
            // S_{mn} with n's series outermost
            let mut s = f(0.0);
            let mut s_abs = f(0.0);
            for (i, c) in coeffs[n].iter().enumerate() {
                s += Float::with_val(w, c * &u[m][i]);
                s_abs += Float::with_val(w, c.abs_ref()) * &u_abs[m][i];
            }
            let first = Float::with_val(w, &lead * &hyp[m]) * &hyp[n];
            let second = Float::with_val(w, &s / &beta);
            let norm = Float::with_val(w, &norms[m] * &norms[n]);
            let mut value = Float::with_val(w, &first - &second) * &norm;
            if (m + n) % 2 == 1 {
                value = -value;
            }
            let magnitude = (first.abs() + s_abs / &beta) * &norm;

            let upper_scale = (1.0 / g).min((2.0 * m.max(n) as f64 + channel.zeta()) / beta64);
            let floor = upper_scale * 2f64.powi(-60);
            let reference = value.to_f64().abs().max(floor);
            let lost = exponent(&magnitude) - i64::from(libm::ilogb(reference));
            deficit = deficit.max(lost + RETAINED_BITS - i64::from(w));

            values[m][n] = ExtendedReal::from_float(value).to_f64();
        }
    }
    Ok((values, deficit))
}

/// `⟨ψ_m| r²/(1 + g r²) |ψ_n⟩` in closed form.
pub fn me_nonpoly(m: usize, n: usize, channel: &ChannelSpec, g: f64) -> Result<f64> {
    let table = nonpoly_table(m.max(n) + 1, channel, g)?;
    Ok(table.get(m, n))
}

/// The same element from the raw double sum with one incomplete gamma
/// function per term:
///
/// ```text
/// (−1)^{m+n} β^ζ e^{β/g} / (g^{ζ+1} Γ(ζ)) √((ζ)_n (ζ)_m/(n! m!))
///   Σ_i Σ_j (−n)_i (−m)_j/((ζ)_i (ζ)_j i! j!) (β/g)^{i+j} Γ(ζ+i+j+1) Γ(−ζ−i−j, β/g)
/// ```
///
/// The alternating sum cancels heavily for small `z` and large indices, so
/// it is carried out at a fixed 512 bits. Kept as an independent
/// cross-check of the production route rather than for speed.
pub fn me_nonpoly_series(m: usize, n: usize, channel: &ChannelSpec, g: f64) -> Result<f64> {
    const PREC: u32 = 512;
    if !(g > 0.0) {
        return Err(Error::domain("me_nonpoly_series", format!("g = {g} must be positive")));
    }
    let f = |x: f64| Float::with_val(PREC, x);
    let zeta = f(channel.zeta());
    let beta = f(channel.beta());
    let gg = f(g);
    let z = Float::with_val(PREC, &beta / &gg);
    let lgam = |x: &Float| Float::with_val(PREC, x.ln_gamma_ref());
    let lg_zeta = lgam(&zeta);
    let lg_int = |k: usize| lgam(&f(k as f64 + 1.0));
    let lg_shift = |k: usize| lgam(&Float::with_val(PREC, &zeta + k as f64));

    // ζ ln β + z − (ζ+1) ln g − lnΓ(ζ) + ½ ln[(ζ)_n (ζ)_m / (n! m!)]
    let mut ln_pref = Float::with_val(PREC, beta.ln_ref()) * &zeta;
    ln_pref += &z;
    ln_pref -= Float::with_val(PREC, &zeta + 1.0) * Float::with_val(PREC, gg.ln_ref());
    ln_pref -= &lg_zeta;
    let half = Float::with_val(PREC, lg_shift(n) + lg_shift(m)) - Float::with_val(PREC, 2 * &lg_zeta)
        - lg_int(n)
        - lg_int(m);
    ln_pref += half / 2u32;

    // (−k)_i / ((ζ)_i i!)
    let coeff = |k: usize, i: usize| -> Float {
        let ln = Float::with_val(PREC, lg_int(k) - lg_int(i)) - lg_int(k - i) - (lg_shift(i) - lg_zeta.clone());
        let mag = ln.exp();
        if i % 2 == 0 { mag } else { -mag }
    };
    let ln_z = Float::with_val(PREC, z.ln_ref());
    let terms: Vec<Float> = (0..=m + n)
        .map(|s| {
            let a = -Float::with_val(PREC, &zeta + s as f64);
            let upper = gamma_upper_ext(&a, &z)?;
            let ln_mag =
                Float::with_val(PREC, &ln_z * s as f64) + lgam(&Float::with_val(PREC, &zeta + (s + 1) as f64)) + &ln_pref;
            Ok(ln_mag.exp() * upper)
        })
        .collect::<Result<_>>()?;
    let mut sum = Float::with_val(PREC, 0);
    for i in 0..=n {
        let ci = coeff(n, i);
        for j in 0..=m {
            sum += Float::with_val(PREC, &ci * &coeff(m, j)) * &terms[i + j];
        }
    }
    if (m + n) % 2 == 1 {
        sum = -sum;
    }
    Ok(sum.to_f64())
}

/// `⟨ψ_m| r⁻² |ψ_n⟩`: `β/(ζ−1)` on the diagonal and
/// `(−1)^{m+n} β/(ζ−1) √(n! (ζ)_m / (m! (ζ)_n))` for `n > m`, mirrored below.
pub fn me_inv_r2(m: usize, n: usize, channel: &ChannelSpec) -> Result<f64> {
    channel.require_inverse_square("me_inv_r2")?;
    let zeta = channel.zeta();
    let diag = channel.beta() / (zeta - 1.0);
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let ratio: f64 = (lo + 1..=hi).map(|j| j as f64 / (zeta + j as f64 - 1.0)).product();
    let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * diag * ratio.sqrt())
}

/// Symmetric Ritz matrix `H[m][n] = ⟨ψ_m|H|ψ_n⟩` in the GK basis of a channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RitzProblem {
    dim: usize,
    channel: ChannelSpec,
    potential: PotentialParams,
    h: Vec<Vec<f64>>,
    asymmetry: f64,
    precision: u32,
}

impl RitzProblem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    pub fn potential(&self) -> &PotentialParams {
        &self.potential
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.h
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.h[m][n]
    }

    /// Largest `|H[m][n] − H[n][m]| / (1 + |H[m][n]|)` before averaging.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Bits of working precision used for the non-polynomial elements.
    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Leading `k × k` block, the Ritz matrix of the first `k` basis states.
    pub fn leading_block(&self, k: usize) -> Vec<Vec<f64>> {
        self.h[..k].iter().map(|row| row[..k].to_vec()).collect()
    }
}

/// `H[m][n] = 2β(2n+ζ) δ_{mn} + λ ⟨r²/(1+gr²)⟩_{mn} − A ⟨r⁻²⟩_{mn}`,
/// symmetrized by averaging the two evaluation orders. The `r⁻²` term is
/// skipped when `A = 0`.
pub fn build_ritz(dim: usize, channel: &ChannelSpec, potential: &PotentialParams) -> Result<RitzProblem> {
    if dim == 0 {
        return Err(Error::domain("build_ritz", "dimension must be positive"));
    }
    let a = channel.a();
    if a != 0.0 {
        channel.require_inverse_square("build_ritz")?;
    }
    let table = nonpoly_table(dim, channel, potential.g())?;
    let lambda = potential.lambda();

    let mut raw = vec![vec![0.0; dim]; dim];
    for (m, row) in raw.iter_mut().enumerate() {
        for (n, entry) in row.iter_mut().enumerate() {
            let mut v = lambda * table.get(m, n);
            if m == n {
                v += gk_energy(n, channel);
            }
            if a != 0.0 {
                v -= a * me_inv_r2(m, n, channel)?;
            }
            *entry = v;
        }
    }

    let mut asymmetry: f64 = 0.0;
    let mut h = raw.clone();
    for m in 0..dim {
        for n in 0..m {
            let (x, y) = (raw[m][n], raw[n][m]);
            asymmetry = asymmetry.max((x - y).abs() / (1.0 + x.abs()));
            let avg = 0.5 * (x + y);
            h[m][n] = avg;
            h[n][m] = avg;
        }
    }
    if h.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("build_ritz", "non-finite matrix entry"));
    }
    Ok(RitzProblem { dim, channel: *channel, potential: *potential, h, asymmetry, precision: table.precision() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(gamma: f64, a: f64) -> ChannelSpec {
        ChannelSpec::new(gamma, a, 1.0).unwrap()
    }

    #[test]
    fn nonpoly_symmetric_in_indices() {
        let c = ch(0.0, 0.0);
        let a = me_nonpoly(0, 1, &c, 1.0).unwrap();
        let b = me_nonpoly(1, 0, &c, 1.0).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn nonpoly_ground_state_fixture() {
        // 40-digit quadrature of ψ₀² r²/(1+r²), ζ = 1.5, β = 1
        let v = me_nonpoly(0, 0, &ch(0.0, 0.0), 1.0).unwrap();
        assert!((v - 0.515_744_312_282_624_212_1).abs() < 1e-15, "{v}");
    }

    #[test]
    fn nonpoly_small_g_limit() {
        // ⟨r²⟩₀ = ζ/β
        let v = me_nonpoly(0, 0, &ch(0.0, 0.0), 1e-6).unwrap();
        assert!((v - 1.5).abs() < 1e-4);
        assert!((v - 1.499_996_250_013_124_9).abs() < 1e-13, "{v}");
    }

    #[test]
    fn inverse_square_closed_form() {
        let c = ch(0.0, 0.0);
        assert!((me_inv_r2(0, 0, &c).unwrap() - 2.0).abs() < 1e-15);
        for k in 0..6 {
            assert!((me_inv_r2(k, k, &c).unwrap() - 2.0).abs() < 1e-15);
        }
        // quadrature of r⁻² ψ₀ ψ₁ = −2/√1.5
        let v = me_inv_r2(0, 1, &c).unwrap();
        assert!((v + 1.632_993_161_855_452_065).abs() < 1e-15);
        assert_eq!(me_inv_r2(3, 1, &c).unwrap(), me_inv_r2(1, 3, &c).unwrap());
        assert!(me_inv_r2(0, 0, &ch(0.0, -0.25)).is_err());
    }

    #[test]
    fn unperturbed_matrix_is_diagonal() {
        let p = PotentialParams::new(0.0, 1.0).unwrap();
        let c = ch(1.0, 0.0);
        let r = build_ritz(5, &c, &p).unwrap();
        for m in 0..5 {
            for n in 0..5 {
                let expect = if m == n { gk_energy(n, &c) } else { 0.0 };
                assert_eq!(r.get(m, n), expect);
            }
        }
    }

    #[test]
    fn small_matrix_fixture() {
        // entries from 40-digit quadrature
        let p = PotentialParams::new(1.0, 1.0).unwrap();
        let r = build_ritz(2, &ch(0.0, 0.0), &p).unwrap();
        assert!((r.get(0, 0) - 3.515_744_312_282_624_212).abs() < 1e-13);
        assert!((r.get(0, 1) - 0.171_986_202_362_378_830_8).abs() < 1e-13);
        assert!((r.get(1, 0) - r.get(0, 1)).abs() == 0.0);
        assert!((r.get(1, 1) - 7.648_934_634_510_934_217).abs() < 1e-13);
    }

    #[test]
    fn raw_series_agrees_for_moderate_sizes() {
        let c = ch(1.0, 0.3);
        for &g in &[0.5, 2.0, 10.0] {
            for m in 0..5 {
                for n in 0..5 {
                    let closed = me_nonpoly(m, n, &c, g).unwrap();
                    let raw = me_nonpoly_series(m, n, &c, g).unwrap();
                    assert!((closed - raw).abs() <= 1e-9 * closed.abs().max(1e-3), "g={g} m={m} n={n}: {closed} vs {raw}");
                }
            }
        }
    }

    #[test]
    fn small_g_raises_precision() {
        let c = ch(0.0, 0.0);
        let t = nonpoly_table(20, &c, 0.01).unwrap();
        assert!(t.precision() > START_PRECISION);
        for m in 0..20 {
            let cap = (1.0f64 / 0.01).min(2.0 * m as f64 + c.zeta());
            assert!(t.get(m, m) > 0.0 && t.get(m, m) < cap, "m={m}: {}", t.get(m, m));
        }
    }
}
