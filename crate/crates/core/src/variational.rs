//! Dense symmetric eigensolution and minimization of Ritz values over the
//! dummy parameter `A`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_elements::build_ritz;
use crate::model::{PotentialParams, Sector};

const MAX_SWEEPS: usize = 100;
const COARSE_POINTS: usize = 25;
const A_TOLERANCE: f64 = 1e-6;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

pub const DEFAULT_A_MAX: f64 = 10.0;

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations.
pub fn sym_eigen(h: &[Vec<f64>]) -> Result<SymEigen> {
    let n = h.len();
    if h.iter().any(|row| row.len() != n) {
        return Err(Error::domain("sym_eigen", "matrix must be square"));
    }
    if h.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("sym_eigen", "matrix has non-finite entries"));
    }
    let mut a: Vec<Vec<f64>> = h.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| a[p][q].abs()).sum();
        if off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && a[p][p].abs() + g == a[p][p].abs() && a[q][q].abs() + g == a[q][q].abs() {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { op: "sym_eigen", iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    Ok(SymEigen { values, vectors })
}

/// All eigenvalues, ascending.
pub fn sym_eigenvalues(h: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(sym_eigen(h)?.values)
}

/// The `(level+1)`-th Ritz value of the `dim`-state GK basis built with
/// parameter `a`: an upper bound to the level-th eigenvalue in the sector.
pub fn bound_at_a(level: usize, dim: usize, a: f64, sector: &Sector, potential: &PotentialParams) -> Result<f64> {
    if level >= dim {
        return Err(Error::domain("bound_at_a", format!("level {level} needs dim > {level}, got {dim}")));
    }
    let channel = sector.with_a(a)?;
    let ritz = build_ritz(dim, &channel, potential)?;
    Ok(sym_eigenvalues(ritz.matrix())?[level])
}

/// Outcome of minimizing a Ritz value over `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub level: usize,
    pub bound: f64,
    pub optimal_a: f64,
    pub dim: usize,
    /// `(D, bound)` for `D = level+1 ..= dim` at the optimal `A`.
    pub history: Vec<(usize, f64)>,
    pub evaluations: usize,
}

/// Minimize the level's Ritz value over `A ∈ [A_min, a_max]` with a
/// 25-point uniform scan (plus `A = 0`) and golden-section refinement to
/// `|ΔA| ≤ 1e-6`. The smallest value seen at any probe is reported, so the
/// result is an upper bound regardless of how well the optimizer did.
pub fn minimize_over_a(
    level: usize,
    dim: usize,
    sector: &Sector,
    potential: &PotentialParams,
    a_max: f64,
) -> Result<BoundResult> {
    if level >= dim {
        return Err(Error::domain("minimize_over_a", format!("level {level} needs dim > {level}, got {dim}")));
    }
    let a_lo = sector.a_min();
    if !(a_max > a_lo) {
        return Err(Error::domain("minimize_over_a", format!("A_max = {a_max} must exceed A_min = {a_lo}")));
    }
    let eval = |a: f64| bound_at_a(level, dim, a, sector, potential);

    let mut grid: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| a_lo + (a_max - a_lo) * i as f64 / (COARSE_POINTS - 1) as f64)
        .collect();
    if a_lo < 0.0 && a_max > 0.0 {
        grid.push(0.0);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    // Points where the basis degenerates (ζ = 1 with A ≠ 0) are skipped.
    let scanned: Vec<(f64, Option<f64>)> = grid
        .par_iter()
        .map(|&a| match eval(a) {
            Ok(e) => Ok((a, Some(e))),
            Err(Error::Domain { .. }) => Ok((a, None)),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut evaluations = scanned.len();

    let (best_idx, mut best_a, mut best_e) = scanned
        .iter()
        .enumerate()
        .filter_map(|(i, &(a, e))| e.map(|e| (i, a, e)))
        .min_by(|x, y| x.2.total_cmp(&y.2))
        .ok_or_else(|| Error::domain("minimize_over_a", "no admissible A in the scan range"))?;

    let mut lo = scanned[best_idx.saturating_sub(1)].0;
    let mut hi = scanned[(best_idx + 1).min(scanned.len() - 1)].0;
    let probe = |a: f64, evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        match eval(a) {
            Ok(e) => Ok(e),
            Err(Error::Domain { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = probe(x1, &mut evaluations)?;
    let mut f2 = probe(x2, &mut evaluations)?;
    for (a, e) in [(x1, f1), (x2, f2)] {
        if e < best_e {
            best_a = a;
            best_e = e;
        }
    }
    while hi - lo > A_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = probe(x1, &mut evaluations)?;
            if f1 < best_e {
                best_a = x1;
                best_e = f1;
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = probe(x2, &mut evaluations)?;
            if f2 < best_e {
                best_a = x2;
                best_e = f2;
            }
        }
    }

    let history = history_at(level, dim, best_a, sector, potential)?;
    Ok(BoundResult { level, bound: best_e, optimal_a: best_a, dim, history, evaluations })
}

/// Ritz values of the leading blocks at fixed `A`, for
/// `D = level+1 ..= dim`. Non-increasing by Cauchy interlacing.
pub fn history_at(
    level: usize,
    dim: usize,
    a: f64,
    sector: &Sector,
    potential: &PotentialParams,
) -> Result<Vec<(usize, f64)>> {
    let ritz = build_ritz(dim, &sector.with_a(a)?, potential)?;
    (level + 1..=dim)
        .map(|d| Ok((d, sym_eigenvalues(&ritz.leading_block(d))?[level])))
        .collect()
}
