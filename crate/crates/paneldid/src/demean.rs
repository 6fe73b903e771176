//! Residualization with respect to high-dimensional fixed effects (the
//! "within" transformation) by alternating projections.
//!
//! Each sweep subtracts group means factor by factor; with unit-specific
//! linear trends enabled, the sweep also projects out the per-unit span of
//! `{1, t}`. Sweeping repeats until the largest correction any factor would
//! still apply falls below the tolerance, so a single factor converges in
//! one sweep exactly. This scales to many units without ever materializing
//! dummy columns.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense level assignment of one categorical factor: `assignment[row]` is
/// the row's level index in `0..n_levels`.
#[derive(Debug, Clone)]
pub struct FactorLevels {
    name: String,
    assignment: Vec<usize>,
    n_levels: usize,
}

impl FactorLevels {
    pub fn new(name: impl Into<String>, assignment: Vec<usize>, n_levels: usize) -> Self {
        Self { name: name.into(), assignment, n_levels }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

/// Per-unit `{1, t}` trend projection data.
#[derive(Debug, Clone)]
pub struct UnitTrends {
    pub unit_assignment: Vec<usize>,
    pub n_units: usize,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct DemeanOptions {
    /// Convergence tolerance on the maximum remaining group-mean magnitude.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DemeanOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000 }
    }
}

/// Diagnostics from a demeaning run.
#[derive(Debug, Clone, Default)]
pub struct DemeanReport {
    /// Sweeps performed, maximized over columns.
    pub iterations: usize,
    /// Factors with single-row levels: those rows are residualized to zero
    /// and carry no identifying variation. `(factor name, level count)`.
    pub singleton_levels: Vec<(String, usize)>,
}

// Precomputed per-unit sums for the trend projection: with s0 = n_i,
// s1 = sum t, s2 = sum t^2, the {1, t} projection of v solves the 2x2
// normal equations. Units where t has no within-variation degrade to a
// mean-only projection.
struct TrendPrecomp {
    s0: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    det: Vec<f64>,
}

fn trend_precomp(trends: &UnitTrends) -> TrendPrecomp {
    let n_units = trends.n_units;
    let mut s0 = vec![0.0; n_units];
    let mut s1 = vec![0.0; n_units];
    let mut s2 = vec![0.0; n_units];
    for (&u, &t) in trends.unit_assignment.iter().zip(&trends.times) {
        s0[u] += 1.0;
        s1[u] += t;
        s2[u] += t * t;
    }
    let det = (0..n_units).map(|u| s0[u] * s2[u] - s1[u] * s1[u]).collect();
    TrendPrecomp { s0, s1, s2, det }
}

// Fitted per-unit {1,t} values for a column; returns max |fitted|.
fn trend_fit(
    col: &[f64],
    trends: &UnitTrends,
    pre: &TrendPrecomp,
    fitted: &mut [f64],
) -> f64 {
    let n_units = trends.n_units;
    let mut sv = vec![0.0; n_units];
    let mut stv = vec![0.0; n_units];
    for ((&u, &t), &v) in trends.unit_assignment.iter().zip(&trends.times).zip(col) {
        sv[u] += v;
        stv[u] += t * v;
    }
    let mut alpha = vec![0.0; n_units];
    let mut beta = vec![0.0; n_units];
    for u in 0..n_units {
        // Relative threshold: units with one row or constant t are rank one.
        let scale = (pre.s0[u] * pre.s2[u]).max(1.0);
        if pre.det[u].abs() > 1e-12 * scale {
            alpha[u] = (pre.s2[u] * sv[u] - pre.s1[u] * stv[u]) / pre.det[u];
            beta[u] = (pre.s0[u] * stv[u] - pre.s1[u] * sv[u]) / pre.det[u];
        } else if pre.s0[u] > 0.0 {
            alpha[u] = sv[u] / pre.s0[u];
            beta[u] = 0.0;
        }
    }
    let mut max_fit = 0.0_f64;
    for (i, (&u, &t)) in trends.unit_assignment.iter().zip(&trends.times).enumerate() {
        let f = alpha[u] + beta[u] * t;
        fitted[i] = f;
        max_fit = max_fit.max(f.abs());
    }
    max_fit
}

/// Residualize `columns` in place against all factors (plus unit trends if
/// given). Returns the iteration count and singleton diagnostics.
///
/// On return, the group mean of every column within every factor level is
/// below `opts.tol` in absolute value. Deterministic regardless of internal
/// parallelism: columns are independent and each is processed serially.
pub fn demean(
    columns: &mut [Vec<f64>],
    factors: &[FactorLevels],
    trends: Option<&UnitTrends>,
    opts: &DemeanOptions,
) -> Result<DemeanReport> {
    if opts.tol <= 0.0 {
        return Err(Error::Invalid("demean: tol must be positive".into()));
    }
    if columns.is_empty() {
        return Ok(DemeanReport::default());
    }
    let n = columns[0].len();
    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(Error::Invalid(format!("demean: column {j} has inconsistent length")));
        }
    }

    // Per-factor level counts; a declared level with no rows is an error.
    let mut counts: Vec<Vec<f64>> = Vec::with_capacity(factors.len());
    let mut singleton_levels = Vec::new();
    for f in factors {
        if f.assignment.len() != n {
            return Err(Error::Invalid(format!(
                "demean: factor '{}' covers {} rows, expected {n}",
                f.name,
                f.assignment.len()
            )));
        }
        let mut c = vec![0.0; f.n_levels];
        for &lvl in &f.assignment {
            if lvl >= f.n_levels {
                return Err(Error::Invalid(format!(
                    "demean: factor '{}' has out-of-range level {lvl}",
                    f.name
                )));
            }
            c[lvl] += 1.0;
        }
        if let Some(empty) = c.iter().position(|&x| x == 0.0) {
            return Err(Error::Invalid(format!(
                "demean: factor '{}' level {empty} has no rows",
                f.name
            )));
        }
        let singles = c.iter().filter(|&&x| x == 1.0).count();
        if singles > 0 {
            singleton_levels.push((f.name.clone(), singles));
        }
        counts.push(c);
    }
    let pre = trends.map(trend_precomp);

    let factor_desc = || -> String {
        let mut parts: Vec<String> =
            factors.iter().map(|f| format!("{}({} levels)", f.name, f.n_levels)).collect();
        if trends.is_some() {
            parts.push("unit trends".into());
        }
        parts.join(", ")
    };

    let per_column_iters: Vec<Result<usize>> = columns
        .par_iter_mut()
        .map(|col| {
            let mut fitted = vec![0.0; n];
            let mut iters = 0usize;
            loop {
                // Check phase: largest correction any factor would apply now.
                let mut max_adj = 0.0_f64;
                for (f, count) in factors.iter().zip(&counts) {
                    let mut sums = vec![0.0; f.n_levels];
                    for (&lvl, &v) in f.assignment.iter().zip(col.iter()) {
                        sums[lvl] += v;
                    }
                    for (s, c) in sums.iter().zip(count) {
                        max_adj = max_adj.max((s / c).abs());
                    }
                }
                if let (Some(tr), Some(p)) = (trends, pre.as_ref()) {
                    max_adj = max_adj.max(trend_fit(col, tr, p, &mut fitted));
                }
                if max_adj <= opts.tol {
                    return Ok(iters);
                }
                if iters >= opts.max_iter {
                    return Err(Error::NonConvergence {
                        what: format!("demeaning over {}", factor_desc()),
                        iterations: iters,
                    });
                }
                // Sweep phase: project factor by factor.
                for (f, count) in factors.iter().zip(&counts) {
                    let mut sums = vec![0.0; f.n_levels];
                    for (&lvl, &v) in f.assignment.iter().zip(col.iter()) {
                        sums[lvl] += v;
                    }
                    for (s, c) in sums.iter_mut().zip(count) {
                        *s /= c;
                    }
                    for (&lvl, v) in f.assignment.iter().zip(col.iter_mut()) {
                        *v -= sums[lvl];
                    }
                }
                if let (Some(tr), Some(p)) = (trends, pre.as_ref()) {
                    trend_fit(col, tr, p, &mut fitted);
                    for (v, f) in col.iter_mut().zip(&fitted) {
                        *v -= f;
                    }
                }
                iters += 1;
            }
        })
        .collect();

    let mut iterations = 0usize;
    for r in per_column_iters {
        iterations = iterations.max(r?);
    }
    Ok(DemeanReport { iterations, singleton_levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units_factor(assignment: Vec<usize>, n_levels: usize) -> FactorLevels {
        FactorLevels::new("unit", assignment, n_levels)
    }

    #[test]
    fn single_factor_converges_in_one_sweep() {
        // Two units, column minus per-unit means.
        let mut cols = vec![vec![1.0, 2.0, 3.0, 10.0, 20.0, 30.0]];
        let f = units_factor(vec![0, 0, 0, 1, 1, 1], 2);
        let report = demean(&mut cols, &[f], None, &DemeanOptions::default()).unwrap();
        assert_eq!(report.iterations, 1);
        let want = [-1.0, 0.0, 1.0, -10.0, 0.0, 10.0];
        for (got, w) in cols[0].iter().zip(want) {
            assert!((got - w).abs() < 1e-12);
        }
    }

    #[test]
    fn level_constant_column_becomes_zero() {
        let mut cols = vec![vec![5.0, 5.0, -2.0, -2.0]];
        let f = units_factor(vec![0, 0, 1, 1], 2);
        demean(&mut cols, &[f], None, &DemeanOptions::default()).unwrap();
        for v in &cols[0] {
            assert!(v.abs() < 1e-12);
        }
    }

    // Brute-force two-way projection oracle on a small balanced panel:
    // M = I - B (B'B)^{-1} B' with B = [unit dummies, time dummies minus
    // one] spanning the same space as the full dummy set.
    #[test]
    fn two_factor_matches_dense_projection_oracle() {
        let n_units = 4;
        let n_times = 4;
        let n = n_units * n_times;
        let mut unit = Vec::new();
        let mut time = Vec::new();
        for u in 0..n_units {
            for t in 0..n_times {
                unit.push(u);
                time.push(t);
            }
        }
        // Deterministic non-trivial column.
        let col: Vec<f64> =
            (0..n).map(|i| ((i * 7 % 13) as f64) * 0.5 + ((i * 3 % 5) as f64)).collect();

        // Basis: all unit dummies + time dummies for t = 1..n_times-1.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for u in 0..n_units {
            basis.push((0..n).map(|i| if unit[i] == u { 1.0 } else { 0.0 }).collect());
        }
        for t in 1..n_times {
            basis.push((0..n).map(|i| if time[i] == t { 1.0 } else { 0.0 }).collect());
        }
        let k = basis.len();
        let mut btb = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..k {
                btb[a][b] = basis[a].iter().zip(&basis[b]).map(|(x, y)| x * y).sum();
            }
        }
        let inv = gauss_jordan_inverse(&btb);
        let bty: Vec<f64> =
            basis.iter().map(|b| b.iter().zip(&col).map(|(x, y)| x * y).sum()).collect();
        let coef: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * bty[j]).sum()).collect();
        let mut oracle = col.clone();
        for (c, b) in coef.iter().zip(&basis) {
            for (o, x) in oracle.iter_mut().zip(b) {
                *o -= c * x;
            }
        }

        let mut cols = vec![col];
        let fu = FactorLevels::new("unit", unit, n_units);
        let ft = FactorLevels::new("time", time, n_times);
        demean(&mut cols, &[fu, ft], None, &DemeanOptions { tol: 1e-12, max_iter: 10_000 })
            .unwrap();
        for (got, want) in cols[0].iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn idempotent_and_annihilates_level_constants() {
        // Unbalanced two-factor panel.
        let unit = vec![0, 0, 0, 1, 1, 2, 2, 2, 2];
        let time = vec![0, 1, 2, 0, 2, 0, 1, 2, 3];
        let col: Vec<f64> = (0..9).map(|i| ((i * 11 % 17) as f64) - 4.0).collect();
        let opts = DemeanOptions { tol: 1e-10, max_iter: 10_000 };

        let fu = || FactorLevels::new("unit", unit.clone(), 3);
        let ft = || FactorLevels::new("time", time.clone(), 4);

        let mut once = vec![col.clone()];
        demean(&mut once, &[fu(), ft()], None, &opts).unwrap();
        let mut twice = vec![once[0].clone()];
        demean(&mut twice, &[fu(), ft()], None, &opts).unwrap();
        for (a, b) in once[0].iter().zip(&twice[0]) {
            assert!((a - b).abs() <= 10.0 * opts.tol);
        }

        // Add a unit-constant shift: residual unchanged.
        let shifted: Vec<f64> =
            col.iter().zip(&unit).map(|(v, &u)| v + [3.0, -7.0, 11.0][u]).collect();
        let mut shifted_cols = vec![shifted];
        demean(&mut shifted_cols, &[fu(), ft()], None, &opts).unwrap();
        for (a, b) in once[0].iter().zip(&shifted_cols[0]) {
            assert!((a - b).abs() <= 10.0 * opts.tol);
        }
    }

    #[test]
    fn trends_leave_columns_orthogonal_to_unit_lines() {
        let unit = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let times = vec![1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0];
        let col: Vec<f64> = vec![1.0, 4.0, 2.0, 8.0, -1.0, 0.5, 3.0, -2.0];
        let trends =
            UnitTrends { unit_assignment: unit.clone(), n_units: 2, times: times.clone() };
        let f = FactorLevels::new("unit", unit.clone(), 2);
        let mut cols = vec![col];
        let opts = DemeanOptions { tol: 1e-12, max_iter: 10_000 };
        demean(&mut cols, &[f], Some(&trends), &opts).unwrap();
        for u in 0..2 {
            let rows: Vec<usize> = (0..8).filter(|&i| unit[i] == u).collect();
            let s: f64 = rows.iter().map(|&i| cols[0][i]).sum();
            let st: f64 = rows.iter().map(|&i| cols[0][i] * times[i]).sum();
            assert!(s.abs() < 1e-10, "constant not annihilated: {s}");
            assert!(st.abs() < 1e-10, "trend not annihilated: {st}");
        }
    }

    #[test]
    fn singletons_flagged_and_zeroed() {
        let unit = vec![0, 0, 1];
        let mut cols = vec![vec![1.0, 3.0, 5.0]];
        let f = FactorLevels::new("unit", unit, 2);
        let report = demean(&mut cols, &[f], None, &DemeanOptions::default()).unwrap();
        assert_eq!(report.singleton_levels, vec![("unit".to_string(), 1)]);
        assert!(cols[0][2].abs() < 1e-14);
    }

    #[test]
    fn non_convergence_reports_factor_structure() {
        let unit = vec![0, 0, 0, 1, 1, 2, 2, 2, 2];
        let time = vec![0, 1, 2, 0, 2, 0, 1, 2, 3];
        let mut cols = vec![(0..9).map(|i| (i as f64).sin()).collect()];
        let fu = FactorLevels::new("unit", unit, 3);
        let ft = FactorLevels::new("time", time, 4);
        let err =
            demean(&mut cols, &[fu, ft], None, &DemeanOptions { tol: 1e-14, max_iter: 1 })
                .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unit") && msg.contains("time"), "{msg}");
    }

    fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = m.len();
        let mut a: Vec<Vec<f64>> = m.to_vec();
        let mut inv = vec![vec![0.0; n]; n];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col];
            for j in 0..n {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r][col];
                    for j in 0..n {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        inv
    }
}
