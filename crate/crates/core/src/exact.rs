//! Quasi-exact solutions `ψ = r^{γ+1} e^{−r²/2} Σ_{i≤n} α_i r^{2i}` of the
//! radial equation with `B = 1`.
//!
//! Substituting the ansatz gives the three-term relation
//! `c_{i+1} α_{i+1} + b_i α_i + a_{i−1} α_{i−1} = 0` (`i = 0..n`), where
//!
//! ```text
//! a_k = g(E − 4k − 2γ − 3) − λ
//! b_k = E − 4k − 2γ − 3 + g c_k
//! c_k = 2k(2k + 2γ + 1)
//! ```
//!
//! and the `r^{2n+2}` term forces `λ = g(E − 4n − 2γ − 3)`, after which
//! `a_k = 4g(n − k)` no longer depends on `E`. The determinant of the
//! `(n+1)×(n+1)` tridiagonal system is then the characteristic polynomial of
//! a matrix that is similar to a symmetric one (`c_k a_{k−1} > 0`), so its
//! `n+1` roots are real and simple. One of them, `E = 4n + 2γ + 3`, has
//! `λ = 0`: it is the plain oscillator state and is not reported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SCAN_POINTS: usize = 400;
const MAX_SPLIT_DEPTH: usize = 60;
const NODE_TOLERANCE: f64 = 1e-12;

/// Coefficients of the tridiagonal condition with `λ` eliminated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TridiagCoeffs {
    n: usize,
    gamma: f64,
    g: f64,
}

impl TridiagCoeffs {
    pub fn new(n: usize, gamma: f64, g: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("TridiagCoeffs", "order n must be >= 1"));
        }
        if !(gamma >= -1.0) || !gamma.is_finite() {
            return Err(Error::domain("TridiagCoeffs", format!("gamma = {gamma} must be >= -1")));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::domain("TridiagCoeffs", format!("g = {g} must be positive")));
        }
        Ok(TridiagCoeffs { n, gamma, g })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// `a_k = 4g(n − k)`.
    pub fn a(&self, k: usize) -> f64 {
        4.0 * self.g * (self.n as f64 - k as f64)
    }

    /// `b_k(E) = E − d_k`.
    pub fn b(&self, k: usize, energy: f64) -> f64 {
        energy - self.shift(k)
    }

    pub fn c(&self, k: usize) -> f64 {
        let kf = k as f64;
        2.0 * kf * (2.0 * kf + 2.0 * self.gamma + 1.0)
    }

    /// `d_k = 4k + 2γ + 3 − g c_k`, so that `b_k = E − d_k`.
    fn shift(&self, k: usize) -> f64 {
        4.0 * k as f64 + 2.0 * self.gamma + 3.0 - self.g * self.c(k)
    }

    /// `λ = g(E − 4n − 2γ − 3)`.
    pub fn lambda(&self, energy: f64) -> f64 {
        self.g * (energy - self.harmonic_root())
    }

    /// The trivial root `4n + 2γ + 3`.
    pub fn harmonic_root(&self) -> f64 {
        4.0 * self.n as f64 + 2.0 * self.gamma + 3.0
    }

    /// Continuant `P_n(E)`, `P_k = b_k P_{k−1} − c_k a_{k−1} P_{k−2}`.
    pub fn continuant(&self, energy: f64) -> f64 {
        let mut prev = 1.0;
        let mut cur = self.b(0, energy);
        for k in 1..=self.n {
            let next = self.b(k, energy) * cur - self.c(k) * self.a(k - 1) * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Number of roots of `P_n` strictly below `energy` (Sturm count on the
    /// LU pivots).
    fn roots_below(&self, energy: f64) -> usize {
        let mut count = 0;
        let mut u = self.b(0, energy);
        for k in 0..=self.n {
            if k > 0 {
                let prev = if u == 0.0 { f64::EPSILON * (1.0 + energy.abs()) } else { u };
                u = self.b(k, energy) - self.c(k) * self.a(k - 1) / prev;
            }
            if u > 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Default scan window widened to a Gershgorin enclosure of all roots.
    fn scan_interval(&self) -> (f64, f64) {
        let n = self.n as f64;
        let base = 2.0 * self.gamma + 3.0;
        let mut lo = base - 4.0 * n - 8.0 * self.g * n * (n + self.gamma + 2.0);
        let mut hi = base + 4.0 * n;
        for k in 0..=self.n {
            let left = if k > 0 { (self.c(k) * self.a(k - 1)).sqrt() } else { 0.0 };
            let right = if k < self.n { (self.c(k + 1) * self.a(k)).sqrt() } else { 0.0 };
            lo = lo.min(self.shift(k) - left - right);
            hi = hi.max(self.shift(k) + left + right);
        }
        let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        (lo - pad, hi + pad)
    }
}

/// `Π_{k=1}^{n} u_k` with `u_0 = b_0`, `u_k = b_k − c_k a_{k−1}/u_{k−1}`.
///
/// Errors with [`Error::Pole`] if an intermediate pivot `u_k` (`k < n`)
/// vanishes, which happens exactly at roots of lower-order conditions.
pub fn det_condition(n: usize, gamma: f64, g: f64, energy: f64) -> Result<f64> {
    let t = TridiagCoeffs::new(n, gamma, g)?;
    if !energy.is_finite() {
        return Err(Error::domain("det_condition", "energy must be finite"));
    }
    let mut u = t.b(0, energy);
    let mut product = 1.0;
    for k in 1..=n {
        if u == 0.0 {
            return Err(Error::Pole { index: k - 1, energy });
        }
        u = t.b(k, energy) - t.c(k) * t.a(k - 1) / u;
        product *= u;
    }
    Ok(product)
}

/// A closed-form eigenpair with the coupling it requires.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub energy: f64,
    pub lambda: f64,
    pub g: f64,
    pub gamma: f64,
    /// `α_0 = 1`, …, `α_n`.
    pub alphas: Vec<f64>,
    /// Positive zeros of the radial function.
    pub nodes: usize,
    /// Radial excitation index of the state in its channel (equal to
    /// `nodes`).
    pub level_label: usize,
}

impl ExactSolution {
    /// Unnormalized `r^{γ+1} e^{−r²/2} Σ α_i r^{2i}`.
    pub fn wavefunction(&self, r: f64) -> f64 {
        let x = r * r;
        let poly = self.alphas.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        r.powf(self.gamma + 1.0) * (-0.5 * x).exp() * poly
    }
}

/// All non-trivial quasi-exact solutions of order `n`, ascending in `E`.
///
/// Roots are isolated by scanning the continuant at 400 points, splitting
/// any cell whose Sturm count shows more than one root, bisecting each
/// bracket and finishing with secant steps to `1e−12` relative.
pub fn exact_spectrum(n: usize, gamma: f64, g: f64) -> Result<Vec<ExactSolution>> {
    let t = TridiagCoeffs::new(n, gamma, g)?;
    let (lo, hi) = t.scan_interval();
    let mut roots = Vec::with_capacity(n + 1);
    let step = (hi - lo) / SCAN_POINTS as f64;
    for i in 0..SCAN_POINTS {
        let a = lo + step * i as f64;
        let b = if i + 1 == SCAN_POINTS { hi } else { a + step };
        isolate(&t, a, b, 0, &mut roots);
    }
    if roots.len() != n + 1 {
        return Err(Error::IncompleteScan { lo, hi, found: roots.len().saturating_sub(1), expected: n });
    }
    let trivial = t.harmonic_root();
    let drop = roots
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - trivial).abs().total_cmp(&(y.1 - trivial).abs()))
        .map(|(i, _)| i)
        .expect("n + 1 >= 2 roots");
    roots.remove(drop);

    roots
        .into_iter()
        .map(|energy| {
            let alphas = recover_alphas(n, gamma, g, energy)?;
            let nodes = count_nodes(&alphas);
            Ok(ExactSolution { energy, lambda: t.lambda(energy), g, gamma, alphas, nodes, level_label: nodes })
        })
        .collect()
}

fn isolate(t: &TridiagCoeffs, a: f64, b: f64, depth: usize, out: &mut Vec<f64>) {
    let inside = t.roots_below(b) - t.roots_below(a);
    match inside {
        0 => {}
        1 if t.continuant(a).signum() != t.continuant(b).signum() || depth >= MAX_SPLIT_DEPTH => {
            out.push(polish(t, a, b));
        }
        _ if depth >= MAX_SPLIT_DEPTH => {
            for _ in 0..inside {
                out.push(0.5 * (a + b));
            }
        }
        _ => {
            let mid = 0.5 * (a + b);
            isolate(t, a, mid, depth + 1, out);
            isolate(t, mid, b, depth + 1, out);
        }
    }
}

fn polish(t: &TridiagCoeffs, mut a: f64, mut b: f64) -> f64 {
    let mut fa = t.continuant(a);
    if fa == 0.0 {
        return a;
    }
    // bisection down to a narrow bracket, then safeguarded secant
    for _ in 0..200 {
        if (b - a).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = t.continuant(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let mut fb = t.continuant(b);
    for _ in 0..60 {
        if fb == 0.0 {
            return b;
        }
        let mut x = b - fb * (b - a) / (fb - fa);
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let fx = t.continuant(x);
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a).abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Coefficients `α_0 = 1, α_1, …, α_n` of the polynomial factor at a root
/// `E`, from the three-term relation.
///
/// Plain forward recursion amplifies the rounding error already in `E`
/// without bound as `n` grows, so the relation is run forward from the top
/// row and backward from the bottom row and the halves are joined at the
/// row `k` where they agree best. That row is then the only one not imposed
/// by construction, and its residual is the consistency check. For `k ≥ 1`
/// the first row holds, i.e. `α_1 = −(E − 2γ − 3)/(6 + 4γ)`.
pub fn recover_alphas(n: usize, gamma: f64, g: f64, energy: f64) -> Result<Vec<f64>> {
    let t = TridiagCoeffs::new(n, gamma, g)?;
    if !energy.is_finite() {
        return Err(Error::domain("recover_alphas", "energy must be finite"));
    }
    let mut forward = vec![0.0; n + 1];
    forward[0] = 1.0;
    forward[1] = -t.b(0, energy) / t.c(1);
    for i in 1..n {
        forward[i + 1] = -(t.b(i, energy) * forward[i] + t.a(i - 1) * forward[i - 1]) / t.c(i + 1);
    }
    let mut backward = vec![0.0; n + 2];
    backward[n] = 1.0;
    for i in (1..=n).rev() {
        backward[i - 1] = -(t.c(i + 1) * backward[i + 1] + t.b(i, energy) * backward[i]) / t.a(i - 1);
    }

    let row = |alphas: &[f64], k: usize| {
        let terms = [
            if k < n { t.c(k + 1) * alphas[k + 1] } else { 0.0 },
            t.b(k, energy) * alphas[k],
            if k > 0 { t.a(k - 1) * alphas[k - 1] } else { 0.0 },
        ];
        let scale: f64 = terms.iter().map(|x| x.abs()).sum();
        (terms.iter().sum::<f64>().abs(), scale)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=n {
        if forward[k] == 0.0 || backward[k] == 0.0 {
            continue;
        }
        let factor = forward[k] / backward[k];
        let joined: Vec<f64> = (0..=n).map(|i| if i <= k { forward[i] } else { backward[i] * factor }).collect();
        let (res, scale) = row(&joined, k);
        let rel = if scale > 0.0 { res / scale } else { 0.0 };
        if best.as_ref().map_or(true, |(r, _)| rel < *r) {
            best = Some((rel, joined));
        }
    }
    let (residual, alphas) = best.ok_or(Error::Inconsistent { energy, residual: f64::INFINITY })?;
    if !(residual <= 1e-8) {
        return Err(Error::Inconsistent { energy, residual });
    }
    Ok(alphas)
}

/// Horner evaluation of `Σ p_i x^i`.
fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Number of zeros of `Σ α_i x^i` on `x > 0` at which it changes sign.
///
/// Distinct positive roots are isolated with a Sturm chain and bisection on
/// `(0, 1 + max|α_i/α_n|]`; a root counts as a node when the polynomial has
/// opposite signs on the two sides of its isolating interval, so even
/// multiplicities (touching zeros) are excluded.
pub fn count_nodes(alphas: &[f64]) -> usize {
    let mut p: Vec<f64> = alphas.to_vec();
    while p.len() > 1 && p.last() == Some(&0.0) {
        p.pop();
    }
    if p.len() <= 1 {
        return 0;
    }
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let p: Vec<f64> = p.iter().map(|c| c / scale).collect();
    let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();

    let mut chain = vec![p.clone(), dp];
    while let Some(r) = neg_remainder(&chain[chain.len() - 2], &chain[chain.len() - 1]) {
        chain.push(r);
    }
    let lead = *p.last().unwrap();
    let bound = 1.0 + p.iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let variations = |x: f64| sign_changes(chain.iter().map(|q| poly_eval(q, x)));
    let at_zero = sign_changes(chain.iter().map(|q| last_nonzero_low(q)));

    let mut nodes = 0;
    let mut stack = vec![(0.0, bound, at_zero, variations(bound), 0usize)];
    while let Some((a, b, va, vb, depth)) = stack.pop() {
        let inside = va.saturating_sub(vb);
        if inside == 0 {
            continue;
        }
        if inside == 1 || depth > 200 {
            let left = if a == 0.0 { last_nonzero_low(&p) } else { poly_eval(&p, a) };
            if left.signum() != poly_eval(&p, b).signum() {
                nodes += 1;
            }
            continue;
        }
        let mid = 0.5 * (a + b);
        let vm = variations(mid);
        stack.push((a, mid, va, vm, depth + 1));
        stack.push((mid, b, vm, vb, depth + 1));
    }
    nodes
}

/// `−(a mod b)` with small trailing coefficients trimmed; `None` once the
/// remainder vanishes.
fn neg_remainder(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    if b.len() < 2 {
        return None;
    }
    let mut r = a.to_vec();
    let lead = *b.last().unwrap();
    while r.len() >= b.len() {
        let q = r.last().unwrap() / lead;
        let shift = r.len() - b.len();
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= q * bc;
        }
        r.pop();
    }
    let size = a.iter().chain(b).fold(0.0f64, |m, c| m.max(c.abs()));
    while r.last().is_some_and(|c| c.abs() <= NODE_TOLERANCE * size) {
        r.pop();
    }
    if r.is_empty() {
        return None;
    }
    let norm = r.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    Some(r.iter().map(|c| -c / norm).collect())
}

/// Sign of `q(x)` as `x → 0⁺`.
fn last_nonzero_low(q: &[f64]) -> f64 {
    q.iter().copied().find(|c| *c != 0.0).unwrap_or(0.0)
}

fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for v in values.filter(|v| *v != 0.0) {
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e_pm(gamma: f64, g: f64) -> (f64, f64) {
        let root = (g * g * (7.0 + 2.0 * gamma).powi(2) + g * (8.0 * gamma - 4.0) + 4.0).sqrt();
        let base = 5.0 + 2.0 * gamma - g * (13.0 + 6.0 * gamma);
        (base + root, base - root)
    }

    #[test]
    fn coefficients() {
        let t = TridiagCoeffs::new(3, 1.0, 0.5).unwrap();
        assert_eq!(t.c(0), 0.0);
        assert_eq!(t.c(2), 4.0 * 7.0);
        assert_eq!(t.a(3), 0.0);
        assert_eq!(t.a(1), 4.0);
        assert!(TridiagCoeffs::new(0, 0.0, 1.0).is_err());
        assert!(TridiagCoeffs::new(1, -1.5, 1.0).is_err());
    }

    #[test]
    fn determinant_condition_examples() {
        assert!(det_condition(1, 0.0, 1.0, -3.0).unwrap().abs() < 1e-12);
        // u_1 = −1 − 6·4/(−3) = 7
        assert!((det_condition(1, 0.0, 1.0, 0.0).unwrap() - 7.0).abs() < 1e-12);
        assert!(det_condition(2, 1.0, 0.1, 7.382542442102665).unwrap().abs() < 1e-9);
        assert!(matches!(det_condition(2, 0.0, 1.0, 3.0), Err(Error::Pole { index: 0, .. })));
    }

    #[test]
    fn first_order_family() {
        for &(gamma, g) in &[(0.0, 0.1), (2.0, 0.1), (0.0, 1.0), (2.0, 1.0), (0.0, 10.0), (2.0, 10.0)] {
            let sols = exact_spectrum(1, gamma, g).unwrap();
            assert_eq!(sols.len(), 1);
            let s = &sols[0];
            let e = (3.0 + 2.0 * gamma) * (1.0 - 2.0 * g);
            assert!((s.energy - e).abs() <= 1e-12 * e.abs().max(1.0), "{s:?}");
            let lam = -(4.0 * g + 2.0 * g * g * (3.0 + 2.0 * gamma));
            assert!((s.lambda - lam).abs() <= 1e-12 * lam.abs());
            assert!((s.alphas[1] - g).abs() < 1e-12);
            assert_eq!(s.nodes, 0);
        }
    }

    #[test]
    fn second_order_family() {
        let sols = exact_spectrum(2, 1.0, 0.1).unwrap();
        let (ep, em) = e_pm(1.0, 0.1);
        assert!((sols[0].energy - em).abs() < 1e-12 && (sols[1].energy - ep).abs() < 1e-12);
        assert!((sols[1].energy - 7.382542442102665).abs() < 1e-12);
        assert!((sols[0].energy - 2.817457557897335).abs() < 1e-12);
        assert!((sols[1].lambda + 0.561_745_755_789_733_45).abs() < 1e-12);
        assert!((sols[0].lambda + 1.018_254_244_210_266_5).abs() < 1e-12);
        assert_eq!((sols[0].nodes, sols[1].nodes), (0, 1));

        let g1 = exact_spectrum(2, 0.0, 1.0).unwrap();
        assert!((g1[0].energy + 15.0).abs() < 1e-11 && (g1[1].energy + 1.0).abs() < 1e-11);
        assert!((g1[0].lambda + 26.0).abs() < 1e-11 && (g1[1].lambda + 12.0).abs() < 1e-11);
    }

    #[test]
    fn alphas_factor_as_products() {
        let (gamma, g) = (1.0, 0.1);
        for s in exact_spectrum(2, gamma, g).unwrap() {
            let a = -(s.energy + (2.0 * g - 1.0) * (3.0 + 2.0 * gamma)) / (6.0 + 4.0 * gamma);
            // (1 + g x)(1 + a x)
            let expected = [1.0, g + a, g * a];
            for (x, y) in s.alphas.iter().zip(expected) {
                assert!((x - y).abs() < 1e-12, "{:?} vs {expected:?}", s.alphas);
            }
        }
        let a = recover_alphas(1, 0.0, 1.0, -3.0).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-15 && (a[1] - 1.0).abs() < 1e-15);
        assert!(matches!(recover_alphas(2, 1.0, 0.1, 5.0), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn node_counting() {
        assert_eq!(count_nodes(&[1.0, 1.0]), 0);
        assert_eq!(count_nodes(&[1.0, -1.0]), 1);
        // (1 − x)(2 − x)(3 − x)
        assert_eq!(count_nodes(&[6.0, -11.0, 6.0, -1.0]), 3);
        // (1 + x)(x − 2)²: touches without a sign change
        assert_eq!(count_nodes(&[4.0, 0.0, -3.0, 1.0]), 0);
        // x² − 2x + 0.5 → 2 ± √2·… both positive
        assert_eq!(count_nodes(&[0.5, -2.0, 1.0]), 2);
        assert_eq!(count_nodes(&[3.0]), 0);
    }

    #[test]
    fn higher_orders_are_complete_and_ordered() {
        for n in 1..=8 {
            for &(gamma, g) in &[(-1.0, 0.3), (0.0, 2.0), (1.5, 0.05), (4.0, 20.0)] {
                let sols = exact_spectrum(n, gamma, g).unwrap();
                assert_eq!(sols.len(), n);
                for (k, s) in sols.iter().enumerate() {
                    assert_eq!(s.nodes, k, "n={n} gamma={gamma} g={g}: {sols:?}");
                    assert!(s.lambda < 0.0);
                }
            }
        }
    }

    #[test]
    fn wavefunction_solves_the_radial_equation() {
        for n in 1..=4 {
            for s in exact_spectrum(n, 0.5, 0.7).unwrap() {
                for &r in &[0.3, 0.9, 1.6, 2.4] {
                    let f = |x: f64| s.wavefunction(x);
                    let fd = |h: f64| (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
                    // Richardson-extrapolated second difference
                    let d2 = (4.0 * fd(5e-4) - fd(1e-3)) / 3.0;
                    let v = r * r + s.gamma * (s.gamma + 1.0) / (r * r) + s.lambda * r * r / (1.0 + s.g * r * r);
                    let res = -d2 + (v - s.energy) * f(r);
                    let scale = d2.abs() + (v.abs() + s.energy.abs()) * f(r).abs();
                    assert!(res.abs() < 1e-8 * scale, "n={n} r={r} res={res} scale={scale}");
                }
            }
        }
    }
}
