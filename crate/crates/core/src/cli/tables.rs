//! The published comparison tables, recomputed row by row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::exact_spectrum;
use crate::model::{PotentialParams, Sector};
use crate::perturbation::first_order_coefficient;
use crate::variational::{bound_at_a, minimize_over_a, DEFAULT_A_MAX};

/// One compared quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: u8,
    pub parameters: String,
    pub quantity: String,
    pub computed: f64,
    /// As printed.
    pub published: String,
    /// Absolute or relative difference, whichever `tolerance` refers to;
    /// for brackets the distance outside the interval.
    pub diff: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

struct Check {
    quantity: String,
    computed: f64,
    published: String,
    diff: f64,
    tolerance: f64,
    note: String,
}

fn abs_check(quantity: impl Into<String>, computed: f64, published: &str, tolerance: f64) -> Check {
    let p: f64 = published.parse().expect("printed value");
    Check { quantity: quantity.into(), computed, published: published.to_string(), diff: (computed - p).abs(), tolerance, note: String::new() }
}

fn rel_check(quantity: impl Into<String>, computed: f64, published: &str, tolerance: f64) -> Check {
    let p: f64 = published.parse().expect("printed value");
    Check {
        quantity: quantity.into(),
        computed,
        published: published.to_string(),
        diff: ((computed - p) / p).abs(),
        tolerance,
        note: String::new(),
    }
}

/// Tolerance of one unit in the last printed decimal.
fn last_digit(printed: &str) -> f64 {
    let decimals = printed.split('.').nth(1).map_or(0, str::len);
    10f64.powi(-(decimals as i32))
}

fn with_note(mut c: Check, note: &str) -> Check {
    c.note = note.to_string();
    c
}

/// Exactly solvable first-order states: `(g, γ, λ, E)`.
const TABLE1: [(f64, f64, &str, &str); 6] = [
    (0.1, 0.0, "-0.46", "2.4"),
    (0.1, 2.0, "-0.54", "5.6"),
    (1.0, 0.0, "-10.0", "-3.0"),
    (1.0, 2.0, "-18.0", "-7.0"),
    (10.0, 0.0, "-640", "-57.0"),
    (10.0, 2.0, "-1440", "-133.0"),
];

/// Second-order states: `(printed g, g used, γ, λ, E, level, note)`.
const TABLE2: [(f64, f64, f64, &str, &str, usize, &str); 4] = [
    (0.1, 1.0, 0.0, "-26", "-15.0", 0, "printed under g=0.1; satisfies the n=2 condition only at g=1, evaluated there"),
    (0.1, 1.0, 0.0, "-12", "-1.0", 1, "printed under g=0.1; satisfies the n=2 condition only at g=1, evaluated there"),
    (0.1, 0.1, 1.0, "-0.56174575578973345189", "7.382542442102665", 1, ""),
    (0.1, 0.1, 1.0, "-1.0182542442102665481", "2.817457557897335", 0, ""),
];

/// Second-order states need `ψ_0..ψ_2`.
pub const TABLE2_DIM: usize = 3;

type ConvergenceBlock = (f64, usize, &'static [(usize, &'static str)]);

/// `(g, level, [(D, printed E_var)])`, odd states of the 1-D problem (`γ = 0`).
const TABLE3: [ConvergenceBlock; 6] = [
    (1.0, 0, &[(1, "3.51158094"), (5, "3.50740682"), (10, "3.50738865"), (15, "3.50738836"), (16, "3.50738835")]),
    (1.0, 1, &[(1, "7.65220193"), (5, "7.64828294"), (10, "7.64820250"), (15, "7.64820129"), (19, "7.64820124")]),
    (10.0, 0, &[(1, "3.08809337"), (5, "3.08809139"), (10, "3.08809096"), (15, "3.08809088"), (19, "3.08809086")]),
    (10.0, 1, &[(1, "7.09037623"), (5, "7.09037144"), (10, "7.09037060"), (15, "7.09037046"), (19, "7.09037043")]),
    (100.0, 0, &[(1, "3.009831772"), (5, "3.009831771"), (10, "3.009831771"), (15, "3.009831771")]),
    (100.0, 1, &[(1, "7.00984496"), (5, "7.00984495"), (10, "7.00984495"), (15, "7.00984495")]),
];

const TABLE3_NOTES: [(f64, usize, usize, &str); 1] = [(
    10.0,
    0,
    1,
    "printed value lies below the smallest 1x1 Ritz value over all admissible A (3.0880966566 at A=-0.0027); misprint",
)];

const TABLE5_NOTES: [(f64, usize, &str); 1] = [(
    0.5,
    1,
    "40-digit quadrature gives 1.0589126269724512; the printed value is off in the 12th digit",
)];

struct Table4Row {
    lambda: f64,
    g_printed: f64,
    g: f64,
    l: u32,
    e_var: &'static str,
    bracket: (Option<&'static str>, &'static str),
}

const fn t4(lambda: f64, g_printed: f64, g: f64, l: u32, e_var: &'static str, lo: Option<&'static str>, hi: &'static str) -> Table4Row {
    Table4Row { lambda, g_printed, g, l, e_var, bracket: (lo, hi) }
}

const TABLE4: [Table4Row; 21] = [
    t4(0.1, 0.1, 0.1, 1, "5.186373002931507", Some("5.1863730029314"), "5.1863730029316"),
    t4(0.1, 0.1, 0.1, 2, "7.243961840421887", Some("7.2439618404138"), "7.2439618404260"),
    t4(0.1, 0.1, 0.1, 3, "9.294359110874627", Some("9.29435911086337"), "9.29435911088159"),
    t4(0.1, 0.5, 0.5, 1, "5.100857624300696", Some("5.100842"), "5.100865"),
    t4(0.1, 0.5, 0.5, 2, "7.11898087156427", Some("7.11890"), "7.118901"),
    t4(0.1, 0.5, 0.5, 3, "9.131812401691521", Some("9.131799"), "9.131838"),
    t4(0.1, 1.0, 1.0, 1, "5.065569521783354", Some("5.06428"), "5.06609"),
    t4(0.1, 1.0, 1.0, 2, "7.073726361909647", Some("7.0730"), "7.0744"),
    t4(0.1, 1.0, 1.0, 3, "9.078911720303639", Some("9.0787"), "9.07892"),
    t4(0.5, 1.0, 0.1, 1, "5.893595152339402", Some("5.89359515233919"), "5.89359515233945"),
    t4(0.5, 1.0, 0.1, 2, "8.1778716934677", Some("8.177871693435"), "8.177871693485"),
    t4(0.5, 1.0, 0.1, 3, "10.429204118147453", Some("10.4292041181366"), "10.4292041181548"),
    t4(1.0, 0.1, 0.1, 1, "6.704238892478644", Some("6.7042388924777"), "6.7042388924788"),
    t4(1.0, 0.1, 0.1, 2, "9.261914780826569", Some("9.2619147807"), "9.2619147809"),
    t4(1.0, 0.1, 0.1, 3, "11.760620962669972", Some("11.7606209626312"), "11.7606209626917"),
    t4(1.0, 1.0, 1.0, 1, "5.65139331725017", Some("5.6503"), "5.6521"),
    t4(1.0, 1.0, 1.0, 2, "7.73482804292358", Some("7.734"), "7.736"),
    t4(1.0, 1.0, 1.0, 3, "9.787669778509466", Some("9.7875"), "9.7881"),
    t4(100.0, 100.0, 100.0, 1, "5.993438873366758", None, "6.389"),
    t4(100.0, 100.0, 100.0, 2, "7.996024673021835", Some("7.9947"), "8.037800"),
    t4(100.0, 100.0, 100.0, 3, "9.997153638602487", Some("9.9969"), "10.0113"),
];

/// Basis size at which the printed sixteen-digit values are reproduced
/// with `A = 0`; the bracket test uses the stated size with `A` optimized.
pub const TABLE4_DIGITS_DIM: usize = 15;
pub const TABLE4_DIM: usize = 18;

const TABLE4_DIGIT_NOTE: &str =
    "no basis size D in 8..30 at A=0 reproduces the printed digits; the printed value is not converged to 1e-12";
const TABLE4_NOTES: [(f64, f64, u32, &str); 5] = [
    (100.0, 100.0, 1, TABLE4_DIGIT_NOTE),
    (100.0, 100.0, 2, TABLE4_DIGIT_NOTE),
    (100.0, 100.0, 3, TABLE4_DIGIT_NOTE),
    (1.0, 1.0, 3, TABLE4_DIGIT_NOTE),
    (0.1, 0.5, 2, "printed upper bracket end 7.118901 lies below the printed E_var 7.11898087; bracket misprint"),
];

/// `(g, [coefficients for n = 0, 1, 2])`, `N = 3`, `l = 0`.
const TABLE5: [(f64, [&str; 3]); 8] = [
    (0.5, ["0.741907668608869", "1.058912626973532", "1.216304645477702"]),
    (1.0, ["0.515744312282624", "0.648934634510945", "0.712059158182293"]),
    (2.0, ["0.327839771209399", "0.374239389891732", "0.396830711146285"]),
    (5.0, ["0.160824698125120", "0.169855585054398", "0.174677060833675"]),
    (10.0, ["0.088111301584084", "0.090376621370169", "0.091681154216976"]),
    (20.0, ["0.046566260901426", "0.047083627877117", "0.047401822090664"]),
    (100.0, ["0.009831778572526", "0.009844958882145", "0.009853945311642"]),
    (500.0, ["0.001992603359200", "0.001992880765846", "0.001993079888610"]),
];

/// Printed first-order coefficients as `(g, n, value)`, for `γ = 0`.
pub fn table5_cells() -> Vec<(f64, usize, f64)> {
    TABLE5
        .iter()
        .flat_map(|&(g, cs)| cs.into_iter().enumerate().map(move |(n, c)| (g, n, c.parse().expect("printed value"))))
        .collect()
}

pub const TABLE_IDS: [u8; 5] = [1, 2, 3, 4, 5];

/// Recompute every row of a table. `tolerance` replaces the per-row
/// default when given.
pub fn compute_table(table: u8, tolerance: Option<f64>) -> Result<Vec<TableRow>> {
    let groups: Vec<(String, Vec<Check>)> = match table {
        1 => TABLE1.par_iter().map(|&(g, gamma, lam, e)| table1_row(g, gamma, lam, e)).collect::<Result<_>>()?,
        2 => TABLE2.par_iter().map(table2_row).collect::<Result<_>>()?,
        3 => {
            let jobs: Vec<(f64, usize, usize, &str)> = TABLE3
                .iter()
                .flat_map(|&(g, k, rows)| rows.iter().map(move |&(d, e)| (g, k, d, e)))
                .collect();
            jobs.par_iter().map(|&(g, k, d, e)| table3_row(g, k, d, e)).collect::<Result<_>>()?
        }
        4 => TABLE4.par_iter().map(table4_row).collect::<Result<_>>()?,
        5 => {
            let jobs: Vec<(f64, usize, &str)> =
                TABLE5.iter().flat_map(|&(g, cs)| cs.into_iter().enumerate().map(move |(n, c)| (g, n, c))).collect();
            jobs.par_iter().map(|&(g, n, c)| table5_row(g, n, c)).collect::<Result<_>>()?
        }
        _ => return Err(crate::Error::domain("compute_table", format!("no table {table}"))),
    };
    Ok(groups
        .into_iter()
        .flat_map(|(parameters, checks)| {
            checks.into_iter().map(move |c| {
                let tol = tolerance.unwrap_or(c.tolerance);
                TableRow {
                    table,
                    parameters: parameters.clone(),
                    quantity: c.quantity,
                    computed: c.computed,
                    published: c.published,
                    diff: c.diff,
                    tolerance: tol,
                    pass: c.diff <= tol,
                    note: c.note,
                }
            })
        })
        .collect())
}

fn table1_row(g: f64, gamma: f64, lam: &str, e: &str) -> Result<(String, Vec<Check>)> {
    let sols = exact_spectrum(1, gamma, g)?;
    let s = &sols[0];
    let closed = (3.0 + 2.0 * gamma) * (1.0 - 2.0 * g);
    let potential = PotentialParams::new(s.lambda, g)?;
    let var = minimize_over_a(0, 2, &Sector::new(gamma, 1.0)?, &potential, DEFAULT_A_MAX)?;
    let checks = vec![
        rel_check("E_exact", s.energy, e, 1e-12),
        rel_check("E_exact vs (3+2gamma)(1-2g)", s.energy, &closed.to_string(), 1e-12),
        rel_check("lambda", s.lambda, lam, 1e-12),
        abs_check("E_var[D=2]", var.bound, e, 1e-9),
    ];
    Ok((format!("g={g} gamma={gamma}"), checks))
}

fn table2_row(row: &(f64, f64, f64, &str, &str, usize, &str)) -> Result<(String, Vec<Check>)> {
    let &(g_printed, g, gamma, lam, e, level, note) = row;
    let sols = exact_spectrum(2, gamma, g)?;
    let s = &sols[level];
    let potential = PotentialParams::new(s.lambda, g)?;
    let var = minimize_over_a(level, TABLE2_DIM, &Sector::new(gamma, 1.0)?, &potential, DEFAULT_A_MAX)?;
    let checks = vec![
        with_note(abs_check("E_exact", s.energy, e, 1e-12), note),
        with_note(rel_check("lambda", s.lambda, lam, 1e-12), note),
        with_note(abs_check(format!("E_var[D={TABLE2_DIM}]"), var.bound, e, 1e-9), note),
        with_note(abs_check("optimal_A", var.optimal_a, "0", 1e-3), note),
    ];
    let params = if g_printed == g {
        format!("g={g} gamma={gamma} level={level}")
    } else {
        format!("g={g} (printed {g_printed}) gamma={gamma} level={level}")
    };
    Ok((params, checks))
}

fn table3_row(g: f64, level: usize, d: usize, printed: &str) -> Result<(String, Vec<Check>)> {
    // a level-k value needs at least k+1 states
    let dim = d.max(level + 1);
    let sector = Sector::new(0.0, 1.0)?;
    let r = minimize_over_a(level, dim, &sector, &PotentialParams::new(1.0, g)?, DEFAULT_A_MAX)?;
    let note = TABLE3_NOTES.iter().find(|n| n.0 == g && n.1 == level && n.2 == d).map_or("", |n| n.3);
    let check = with_note(abs_check(format!("E_var[D={d}]"), r.bound, printed, last_digit(printed)), note);
    Ok((format!("g={g} level={level} D={d} dim={dim} A*={:.6}", r.optimal_a), vec![check]))
}

fn table4_row(row: &Table4Row) -> Result<(String, Vec<Check>)> {
    let sector = Sector::from_dimension(3, row.l, 1.0)?;
    let potential = PotentialParams::new(row.lambda, row.g)?;
    let digits = bound_at_a(0, TABLE4_DIGITS_DIM, 0.0, &sector, &potential)?;
    let best = minimize_over_a(0, TABLE4_DIM, &sector, &potential, DEFAULT_A_MAX)?;
    let note = |quantity: &str| {
        TABLE4_NOTES
            .iter()
            .find(|n| n.0 == row.lambda && n.1 == row.g && n.2 == row.l)
            .filter(|n| (n.3 == TABLE4_DIGIT_NOTE) == (quantity == "digits"))
            .map_or("", |n| n.3)
    };
    let mut checks = vec![with_note(
        rel_check(format!("E_var[D={TABLE4_DIGITS_DIM},A=0]"), digits, row.e_var, 1e-12),
        note("digits"),
    )];
    let (lo, hi) = row.bracket;
    if let Some(lo) = lo {
        let (l, h): (f64, f64) = (lo.parse().expect("bracket"), hi.parse().expect("bracket"));
        let outside = (l - best.bound).max(best.bound - h).max(0.0);
        checks.push(Check {
            quantity: format!("E_var[D={TABLE4_DIM},A*={:.6}] in published bracket", best.optimal_a),
            computed: best.bound,
            published: format!("{lo}<E<{hi}"),
            diff: outside,
            tolerance: 0.0,
            note: note("bracket").to_string(),
        });
    }
    let params = if row.g_printed == row.g {
        format!("lambda={} g={} N=3 l={}", row.lambda, row.g, row.l)
    } else {
        format!("lambda={} g={} (printed {}) N=3 l={}", row.lambda, row.g, row.g_printed, row.l)
    };
    let relabel = "printed under g=1; the printed digits are those of g=0.1";
    if row.g_printed != row.g {
        for c in &mut checks {
            if c.note.is_empty() {
                c.note = relabel.to_string();
            }
        }
    }
    Ok((params, checks))
}

fn table5_row(g: f64, n: usize, printed: &str) -> Result<(String, Vec<Check>)> {
    let c = first_order_coefficient(n, &Sector::from_dimension(3, 0, 1.0)?, g)?;
    let note = TABLE5_NOTES.iter().find(|m| m.0 == g && m.1 == n).map_or("", |m| m.2);
    Ok((format!("g={g} n={n}"), vec![with_note(rel_check("coefficient", c, printed, 1e-12), note)]))
}

/// Rows whose failure is explained by a misprint or an unconverged printed
/// value, identified by a non-empty note that is not a relabeling remark.
pub fn is_documented_discrepancy(row: &TableRow) -> bool {
    TABLE3_NOTES.iter().any(|n| n.3 == row.note) || TABLE4_NOTES.iter().any(|n| n.3 == row.note)
        || TABLE5_NOTES.iter().any(|n| n.2 == row.note)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_tolerance() {
        assert_eq!(last_digit("3.50738835"), 1e-8);
        assert_eq!(last_digit("3.009831771"), 1e-9);
        assert_eq!(last_digit("-57"), 1.0);
    }

    #[test]
    fn table_one_passes() {
        let rows = compute_table(1, None).unwrap();
        assert_eq!(rows.len(), 24);
        assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
        assert!(compute_table(9, None).is_err());
    }
}
