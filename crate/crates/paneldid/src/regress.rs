//! Dense least-squares kernel with rank handling and cluster-robust
//! (sandwich) variance estimation.
//!
//! The solver is a modified Gram–Schmidt QR with reorthogonalization.
//! Columns are processed in input order; a column whose residual against the
//! span of already-retained columns falls below a relative tolerance is
//! dropped, so of two identical columns the later-indexed one is always the
//! one removed. This keeps rank handling deterministic, which matters for
//! event-study designs where the dropped indicator must be reported by name.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Relative tolerance for declaring a column collinear with the retained span.
pub const COLLINEARITY_TOL: f64 = 1e-10;

/// Result of an ordinary least squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Coefficient vector of length `n_columns`; dropped columns hold 0.0 and
    /// are listed in `dropped_columns`.
    pub coefficients: Vec<f64>,
    /// Residuals `y - X b` (length `n_obs`).
    pub residuals: Vec<f64>,
    /// Indices of columns dropped as collinear, in input order.
    pub dropped_columns: Vec<usize>,
    /// Indices of retained columns, in input order.
    pub retained_columns: Vec<usize>,
    pub n_obs: usize,
    pub rank: usize,
    // Upper-triangular factor over retained columns: r_factor[j] has length
    // j + 1 and satisfies X_retained = Q R. Kept for the sandwich bread.
    r_factor: Vec<Vec<f64>>,
}

impl OlsFit {
    /// Coefficient of a column, or `None` if the column was dropped.
    pub fn coefficient(&self, column: usize) -> Option<f64> {
        if self.dropped_columns.contains(&column) {
            None
        } else {
            self.coefficients.get(column).copied()
        }
    }
}

/// Small-sample correction applied to the cluster-robust sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SmallSample {
    /// No correction (`c = 1`).
    None,
    /// `c = [G/(G-1)] * [(N-1)/(N-k)]`, matching common econometrics software.
    StataLike,
}

/// Cluster-robust covariance matrix over the retained coefficients.
#[derive(Debug, Clone)]
pub struct ClusterVcov {
    /// Symmetric matrix, indexed in retained-column order.
    pub matrix: Vec<Vec<f64>>,
    /// Input-order indices of the columns the matrix refers to.
    pub retained_columns: Vec<usize>,
    pub n_clusters: usize,
    pub small_sample_factor: f64,
}

impl ClusterVcov {
    /// Standard errors in retained-column order.
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.matrix.len()).map(|i| self.matrix[i][i].max(0.0).sqrt()).collect()
    }

    /// Standard error for an input-order column index, `None` if dropped.
    pub fn se_for_column(&self, column: usize) -> Option<f64> {
        let pos = self.retained_columns.iter().position(|&c| c == column)?;
        Some(self.matrix[pos][pos].max(0.0).sqrt())
    }

    /// Covariance entry for two input-order column indices.
    pub fn cov_for_columns(&self, col_a: usize, col_b: usize) -> Option<f64> {
        let a = self.retained_columns.iter().position(|&c| c == col_a)?;
        let b = self.retained_columns.iter().position(|&c| c == col_b)?;
        Some(self.matrix[a][b])
    }
}

/// Least squares of `y` on the given design columns.
///
/// Collinear columns are detected with relative tolerance
/// [`COLLINEARITY_TOL`] and dropped deterministically: processing is in
/// input order, so the later-indexed member of a collinear set is removed.
pub fn ols(columns: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Invalid("ols: empty outcome vector".into()));
    }
    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(Error::Invalid(format!(
                "ols: column {} has length {} but y has length {}",
                j,
                col.len(),
                n
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("ols: column {j} contains non-finite values")));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("ols: outcome contains non-finite values".into()));
    }

    // Modified Gram-Schmidt with one reorthogonalization pass.
    let mut q_basis: Vec<Vec<f64>> = Vec::new();
    let mut r_factor: Vec<Vec<f64>> = Vec::new();
    let mut retained: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();

    for (j, col) in columns.iter().enumerate() {
        let norm0 = norm(col);
        let mut v = col.clone();
        let mut coefs = vec![0.0; q_basis.len()];
        for _pass in 0..2 {
            for (i, q) in q_basis.iter().enumerate() {
                let c = dot(q, &v);
                coefs[i] += c;
                axpy(&mut v, -c, q);
            }
        }
        let rnorm = norm(&v);
        if rnorm <= COLLINEARITY_TOL * norm0 || norm0 == 0.0 {
            dropped.push(j);
            continue;
        }
        for x in v.iter_mut() {
            *x /= rnorm;
        }
        coefs.push(rnorm);
        q_basis.push(v);
        r_factor.push(coefs);
        retained.push(j);
    }

    let rank = retained.len();
    if rank == 0 {
        return Err(Error::Estimation(
            "ols: no retained columns (all columns collinear or zero)".into(),
        ));
    }

    // Project y onto the basis the same way, so residuals stay orthogonal to
    // the retained span to machine precision.
    let mut resid = y.to_vec();
    let mut qty = vec![0.0; rank];
    for _pass in 0..2 {
        for (i, q) in q_basis.iter().enumerate() {
            let c = dot(q, &resid);
            qty[i] += c;
            axpy(&mut resid, -c, q);
        }
    }

    // Back-substitution: R b = Q'y.
    let mut b_retained = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut acc = qty[i];
        for k in (i + 1)..rank {
            acc -= r_factor[k][i] * b_retained[k];
        }
        b_retained[i] = acc / r_factor[i][i];
    }

    let mut coefficients = vec![0.0; columns.len()];
    for (pos, &j) in retained.iter().enumerate() {
        coefficients[j] = b_retained[pos];
    }

    Ok(OlsFit {
        coefficients,
        residuals: resid,
        dropped_columns: dropped,
        retained_columns: retained,
        n_obs: n,
        rank,
        r_factor,
    })
}

/// Cluster-robust sandwich covariance for an [`OlsFit`].
///
/// `V = c * (X'X)^{-1} (Σ_g X_g' u_g u_g' X_g) (X'X)^{-1}` over the retained
/// columns, with `c` set by `correction`. Per-cluster scores are accumulated
/// in sorted label order so the reduction is deterministic.
pub fn cluster_vcov<C: Ord + Clone + std::fmt::Debug>(
    fit: &OlsFit,
    columns: &[Vec<f64>],
    cluster_ids: &[C],
    correction: SmallSample,
) -> Result<ClusterVcov> {
    let n = fit.n_obs;
    if cluster_ids.len() != n {
        return Err(Error::Invalid(format!(
            "cluster_vcov: {} cluster labels for {} rows",
            cluster_ids.len(),
            n
        )));
    }
    let mut groups: BTreeMap<C, Vec<usize>> = BTreeMap::new();
    for (i, c) in cluster_ids.iter().enumerate() {
        groups.entry(c.clone()).or_default().push(i);
    }
    let g = groups.len();
    if g < 2 {
        return Err(Error::Estimation(format!(
            "cluster_vcov: needs at least 2 clusters, found {g}; refusing to compute a single-cluster sandwich"
        )));
    }

    let rank = fit.rank;
    let retained = &fit.retained_columns;

    // Meat: sum of score outer products, visiting clusters in label order.
    let mut meat = vec![vec![0.0; rank]; rank];
    for rows in groups.values() {
        let mut score = vec![0.0; rank];
        for &i in rows {
            let u = fit.residuals[i];
            for (pos, &j) in retained.iter().enumerate() {
                score[pos] += columns[j][i] * u;
            }
        }
        for a in 0..rank {
            for b in 0..rank {
                meat[a][b] += score[a] * score[b];
            }
        }
    }

    // Bread: (X'X)^{-1} = R^{-1} R^{-T} from the stored QR factor.
    let r_inv = invert_upper_triangular(&fit.r_factor);
    let mut bread = vec![vec![0.0; rank]; rank];
    for a in 0..rank {
        for b in 0..rank {
            let mut acc = 0.0;
            for k in a.max(b)..rank {
                acc += r_inv[a][k] * r_inv[b][k];
            }
            bread[a][b] = acc;
        }
    }

    let factor = match correction {
        SmallSample::None => 1.0,
        SmallSample::StataLike => {
            let nf = n as f64;
            let gf = g as f64;
            let kf = rank as f64;
            if nf <= kf {
                return Err(Error::Estimation(format!(
                    "cluster_vcov: small-sample correction undefined with n = {n} <= rank = {rank}"
                )));
            }
            (gf / (gf - 1.0)) * ((nf - 1.0) / (nf - kf))
        }
    };

    let bm = mat_mul(&bread, &meat);
    let mut v = mat_mul(&bm, &bread);
    for row in v.iter_mut() {
        for x in row.iter_mut() {
            *x *= factor;
        }
    }
    // Symmetrize to absorb floating-point drift.
    for a in 0..rank {
        for b in (a + 1)..rank {
            let s = 0.5 * (v[a][b] + v[b][a]);
            v[a][b] = s;
            v[b][a] = s;
        }
    }

    Ok(ClusterVcov {
        matrix: v,
        retained_columns: retained.clone(),
        n_clusters: g,
        small_sample_factor: factor,
    })
}

/// Two-sided critical value from the t distribution with `df` degrees of
/// freedom at the given confidence level (e.g. 0.90).
pub fn t_critical(df: f64, level: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let t = StudentsT::new(0.0, 1.0, df.max(1.0)).expect("valid t distribution");
    t.inverse_cdf(0.5 + level / 2.0)
}

/// Two-sided standard-normal critical value at the given confidence level.
pub fn normal_critical(level: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::new(0.0, 1.0).expect("valid normal");
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Two-sided p-value for a t statistic with `df` degrees of freedom.
pub fn t_pvalue(t_stat: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let t = StudentsT::new(0.0, 1.0, df.max(1.0)).expect("valid t distribution");
    2.0 * (1.0 - t.cdf(t_stat.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

// Inverse of the packed upper-triangular factor, returned as a dense
// row-major upper-triangular matrix.
fn invert_upper_triangular(r_factor: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rank = r_factor.len();
    let mut inv = vec![vec![0.0; rank]; rank];
    for col in 0..rank {
        // Solve R x = e_col.
        let mut x = vec![0.0; rank];
        for i in (0..=col).rev() {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in (i + 1)..=col {
                acc -= r_factor[k][i] * x[k];
            }
            x[i] = acc / r_factor[i][i];
        }
        for i in 0..=col {
            inv[i][col] = x[i];
        }
    }
    inv
}
