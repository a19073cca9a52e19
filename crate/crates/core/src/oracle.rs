//! Independent reference values: adaptive Gauss–Kronrod quadrature of the
//! matrix-element integrands and an outward-shooting radial eigenvalue
//! solver. Nothing on the production bound path calls into this module.

use std::collections::BinaryHeap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gk_wavefunction, ChannelSpec, PotentialParams};

// Kronrod 15-point abscissae and weights; the Gauss 7-point rule uses the
// odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 5000;

pub const QUAD_TOLERANCE: f64 = 1e-12;

/// Integral estimate with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment { a, b, value: kron * half, error: ((kron - gauss) * half).abs() }
}

/// Globally adaptive G7–K15 quadrature on `[a, b]`: the segment with the
/// largest error estimate is bisected until the total estimate falls below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integrate", "limits must be finite"));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0 });
    }
    let first = kronrod(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { value, error_estimate: error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { value, error_estimate: error });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    if !value.is_finite() {
        return Err(Error::Quadrature { value, error_estimate: error });
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error_estimate: error })
}

/// `∫_a^∞ f` through `x = a + t/(1 − t)`, `t ∈ [0, 1)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult> {
    integrate(
        |t| {
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// `Γ(a, z)` by direct quadrature of `∫_z^∞ t^{a−1} e^{−t} dt`.
pub fn quad_gamma_upper(a: f64, z: f64) -> Result<QuadResult> {
    if !(z > 0.0) {
        return Err(Error::domain("quad_gamma_upper", "z must be positive"));
    }
    // scale out z^{a−1} e^{−z} so the tolerance is relative
    let scale = ((a - 1.0) * z.ln() - z).exp();
    let r = integrate_semi_infinite(|s| (1.0 + s / z).powf(a - 1.0) * (-s).exp(), 0.0, 0.0, QUAD_TOLERANCE)?;
    Ok(QuadResult { value: r.value * scale, error_estimate: r.error_estimate * scale })
}

/// Which operator a quadrature matrix element is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    /// `r²/(1 + g r²)`
    Nonpoly,
    InvR2,
    Overlap,
}

/// `⟨ψ_m | op | ψ_n⟩` by adaptive quadrature of the GK eigenfunctions.
///
/// The integration runs over `[0, R]` with `βR² = 4 max(m,n) + 2ζ + 100`,
/// beyond which the integrand is below `e^{−100}` relative. For `r⁻²` the
/// integrand behaves like `r^{2ζ−3}` at the origin; the substitution
/// `r = u^q`, `q = 1/(2ζ−2)`, turns that into a bounded function.
pub fn quad_matrix_element(kind: ElementKind, m: usize, n: usize, channel: &ChannelSpec, g: f64) -> Result<QuadResult> {
    if kind == ElementKind::Nonpoly && !(g > 0.0) {
        return Err(Error::domain("quad_matrix_element", "g must be positive"));
    }
    if kind == ElementKind::InvR2 {
        channel.require_inverse_square("quad_matrix_element")?;
    }
    let beta = channel.beta();
    let r_max = ((4.0 * m.max(n) as f64 + 2.0 * channel.zeta() + 100.0) / beta).sqrt();
    let weight = |r: f64| match kind {
        ElementKind::Nonpoly => r * r / (1.0 + g * r * r),
        ElementKind::InvR2 => 1.0 / (r * r),
        ElementKind::Overlap => 1.0,
    };
    let density = |r: f64| -> f64 {
        match (gk_wavefunction(m, channel, r), gk_wavefunction(n, channel, r)) {
            (Ok(a), Ok(b)) => a * b * weight(r),
            _ => 0.0,
        }
    };
    let tol = QUAD_TOLERANCE;
    if kind == ElementKind::InvR2 {
        let q = 1.0 / (2.0 * channel.zeta() - 2.0);
        let u_max = r_max.powf(1.0 / q);
        integrate(|u: f64| density(u.powf(q)) * q * u.powf(q - 1.0), 0.0, u_max, tol * 1e-3, tol)
    } else {
        integrate(density, 0.0, r_max, tol * 1e-3, tol)
    }
}

/// Control parameters for [`shoot_eigenvalue`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub r_min: f64,
    /// Starting outer radius; raised as needed so the WKB decay factor
    /// between the outer turning point and `r_max` is below `1e−14`.
    pub r_max: f64,
    pub step_tolerance: f64,
    pub energy_tolerance: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig { r_min: 1e-6, r_max: 12.0, step_tolerance: 1e-12, energy_tolerance: 1e-10 }
    }
}

impl ShootingConfig {
    fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(Error::domain("ShootingConfig", "need 0 < r_min < r_max"));
        }
        if !(self.step_tolerance > 0.0 && self.energy_tolerance > 0.0) {
            return Err(Error::domain("ShootingConfig", "tolerances must be positive"));
        }
        Ok(())
    }
}

const MAX_STEPS: usize = 2_000_000;

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct Radial {
    gamma: f64,
    potential: PotentialParams,
}

impl Radial {
    fn v(&self, r: f64) -> f64 {
        r * r + self.gamma * (self.gamma + 1.0) / (r * r) + self.potential.eval(r)
    }

    /// Sign changes of the regular outward solution on `(r_min, r_max]`.
    fn nodes(&self, energy: f64, cfg: &ShootingConfig, r_max: f64) -> Result<usize> {
        let gamma = self.gamma;
        let c = -energy / (4.0 * gamma + 6.0);
        let r0 = cfg.r_min;
        let mut y = [
            r0.powf(gamma + 1.0) * (1.0 + c * r0 * r0),
            r0.powf(gamma) * ((gamma + 1.0) + c * (gamma + 3.0) * r0 * r0),
        ];
        let rhs = |r: f64, y: &[f64; 2]| [y[1], (self.v(r) - energy) * y[0]];

        let mut r = r0;
        let mut h = r0;
        let mut nodes = 0;
        let mut steps = 0;
        let mut k = [[0.0; 2]; 7];
        k[0] = rhs(r, &y);
        while r < r_max {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::NoConvergence { op: "shooting integration", iterations: MAX_STEPS });
            }
            h = h.min(r_max - r);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    ys[0] += h * A[s][j] * kj[0];
                    ys[1] += h * A[s][j] * kj[1];
                }
                k[s] = rhs(r + C[s] * h, &ys);
            }
            let mut y5 = y;
            let mut err = [0.0; 2];
            for s in 0..7 {
                y5[0] += h * B5[s] * k[s][0];
                y5[1] += h * B5[s] * k[s][1];
                err[0] += h * (B5[s] - B4[s]) * k[s][0];
                err[1] += h * (B5[s] - B4[s]) * k[s][1];
            }
            // ψ' measured in units of the local wave number
            let wave = (self.v(r + h) - energy).abs().sqrt() + 1.0 / (r + h);
            let size = y[0].abs().max(y5[0].abs()) + (y[1].abs().max(y5[1].abs())) / wave;
            let norm = (err[0].abs() + err[1].abs() / wave) / (cfg.step_tolerance * size).max(f64::MIN_POSITIVE);
            if norm <= 1.0 {
                r += h;
                if y5[0] != 0.0 && y[0] != 0.0 && y5[0].signum() != y[0].signum() {
                    nodes += 1;
                }
                y = y5;
                k[0] = k[6];
                let big = y[0].abs().max(y[1].abs());
                if big > 1e150 {
                    y[0] /= big;
                    y[1] /= big;
                    k[0] = rhs(r, &y);
                }
            }
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h < 1e-14 * r {
                return Err(Error::NoConvergence { op: "shooting step size", iterations: steps });
            }
        }
        Ok(nodes)
    }
}

/// The `k`-th eigenvalue (`k = 0` lowest) of
/// `−ψ'' + (r² + γ(γ+1)/r² + λr²/(1+gr²)) ψ = E ψ`, `ψ ~ r^{γ+1}` at the
/// origin, by node-counting bisection on `E`.
///
/// The bracket comes from `λr²/(1+gr²) ∈ [min(0, λ/g), max(0, λ/g)]`, which
/// pins `E_k` to within that range of the oscillator value `4k + 2γ + 3`.
pub fn shoot_eigenvalue(k: usize, gamma: f64, potential: &PotentialParams, cfg: &ShootingConfig) -> Result<f64> {
    cfg.validate()?;
    if !(gamma >= -1.0) {
        return Err(Error::domain("shoot_eigenvalue", format!("gamma = {gamma} must be >= -1")));
    }
    let shift = potential.lambda() / potential.g();
    let base = 4.0 * k as f64 + 2.0 * gamma + 3.0;
    let mut lo = base + shift.min(0.0) - 1.0;
    let mut hi = base + shift.max(0.0) + 1.0;
    // outer turning point of r² + λ/g at E_hi, plus 2·ln(1e14) of decay
    let turning = (hi - shift.min(0.0)).max(0.0);
    let r_max = cfg.r_max.max((turning + 2.0 * 14.0 * std::f64::consts::LN_10).sqrt());
    let radial = Radial { gamma, potential: *potential };

    let nodes_lo = radial.nodes(lo, cfg, r_max)?;
    let nodes_hi = radial.nodes(hi, cfg, r_max)?;
    if nodes_lo > k || nodes_hi <= k {
        return Err(Error::Bracket { e_lo: lo, e_hi: hi, nodes_lo, nodes_hi });
    }
    while hi - lo > cfg.energy_tolerance * (1.0 + lo.abs().min(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if radial.nodes(mid, cfg, r_max)? > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One pinned reference value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub kind: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub value: f64,
    pub error_estimate: f64,
    pub generator_version: String,
}

impl FixtureRecord {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(serde_json::Value::as_f64)
    }
}

/// `$NPO_FIXTURES`, or `./fixtures`.
pub fn fixtures_dir() -> PathBuf {
    std::env::var_os("NPO_FIXTURES").map_or_else(|| PathBuf::from("fixtures"), PathBuf::from)
}

pub fn read_fixtures(path: &Path) -> Result<Vec<FixtureRecord>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_fixtures(path: &Path, records: &[FixtureRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(records)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn record(kind: &str, params: &[(&str, f64)], r: QuadResult) -> FixtureRecord {
    let params = params.iter().map(|(k, v)| ((*k).to_string(), serde_json::json!(v))).collect();
    FixtureRecord {
        kind: kind.to_string(),
        params,
        value: r.value,
        error_estimate: r.error_estimate,
        generator_version: crate::VERSION.to_string(),
    }
}

/// Quadrature values of matrix elements and incomplete gamma functions at
/// a fixed parameter grid; the content of the pinned fixture file.
pub fn generate_quadrature_fixtures() -> Result<Vec<FixtureRecord>> {
    let mut out = Vec::new();
    let elements: [(f64, f64, f64, f64, usize, usize); 9] = [
        (0.0, 0.0, 1.0, 1.0, 0, 0),
        (0.0, 0.0, 1.0, 1.0, 0, 1),
        (0.0, 0.0, 1.0, 1.0, 1, 1),
        (0.0, 0.0, 1.0, 2.0, 0, 0),
        (1.0, 0.0, 1.0, 0.1, 2, 3),
        (0.0, -0.2, 2.0, 5.0, 1, 4),
        (2.0, 0.7, 1.0, 0.5, 3, 3),
        (-0.7, 0.3, 1.0, 10.0, 0, 2),
        (0.5, 0.0, 0.5, 100.0, 5, 5),
    ];
    for (gamma, a, b, g, m, n) in elements {
        let channel = ChannelSpec::new(gamma, a, b)?;
        let params = [("gamma", gamma), ("A", a), ("B", b), ("g", g), ("m", m as f64), ("n", n as f64)];
        out.push(record("nonpoly", &params, quad_matrix_element(ElementKind::Nonpoly, m, n, &channel, g)?));
        if channel.zeta() > 1.0 {
            out.push(record("inv_r2", &params, quad_matrix_element(ElementKind::InvR2, m, n, &channel, g)?));
        }
    }
    for (a, z) in [(-1.5, 2.0), (-2.5, 0.1), (-4.0, 1.0), (-3.75, 10.0), (-0.5, 0.5), (0.5, 3.0)] {
        out.push(record("gamma_upper", &[("a", a), ("z", z)], quad_gamma_upper(a, z)?));
    }
    Ok(out)
}
