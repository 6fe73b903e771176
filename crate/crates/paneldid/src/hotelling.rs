//! Closed-form competition model on the unit strictness interval.
//!
//! Individuals with preferred strictness `x` in `[0, 1]` join whichever
//! organization offers the highest utility `1 - |x - position|`. Position 0
//! is held by an armed group; churches choose positions to maximize member
//! contributions. Under a monopoly church the armed group keeps the segment
//! `[0, a/2)`. When a second church enters, the incumbent can poach members
//! from the armed group, but violence destroys a fraction `beta` of the
//! contributions collected from converts. The closed forms below give the
//! monopoly optimum, the duopoly Nash equilibrium, the armed-group support
//! share, and the support loss `delta_f(beta)`, which is positive exactly
//! when `beta <= 9/20`.
//!
//! `beta` here is the violence-cost fraction of the competition model; it is
//! unrelated to the time effects absorbed by the panel estimators.
//!
//! The strictness space is linear. A circular-space variant (positions on a
//! circumference, so every church has two poaching frontiers) would change
//! the best responses and is left as an extension point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monopoly church position.
pub const MONOPOLY_POSITION: f64 = 2.0 / 5.0;
/// Armed-group support share under the monopoly.
pub const MONOPOLY_SHARE: f64 = 1.0 / 5.0;
/// Violence-cost fraction above which competition no longer reduces
/// armed-group support.
pub const VIOLENCE_THRESHOLD: f64 = 9.0 / 20.0;

/// Market scenario of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Monopoly,
    Duopoly,
}

/// Equilibrium positions and armed-group support share.
///
/// Invariants: `f = a / 2` (the marginal individual at `a/2` is indifferent
/// between the armed group and church A), `a <= b` in the duopoly, and all
/// values lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub scenario: Scenario,
    /// Church A position.
    pub a: f64,
    /// Church B position (duopoly only).
    pub b: Option<f64>,
    /// Armed-group support share.
    pub f: f64,
    /// Drop in support relative to the monopoly (duopoly only).
    pub delta_f: Option<f64>,
}

/// The monopoly optimum: `a = 2/5`, support share `f = 1/5`.
pub fn monopoly_equilibrium() -> EquilibriumResult {
    EquilibriumResult {
        scenario: Scenario::Monopoly,
        a: MONOPOLY_POSITION,
        b: None,
        f: MONOPOLY_SHARE,
        delta_f: None,
    }
}

fn check_beta_region(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Invalid(format!("beta = {beta} must lie in [0, 1]")));
    }
    if beta > VIOLENCE_THRESHOLD {
        return Err(Error::OutOfRegion { beta, threshold: VIOLENCE_THRESHOLD });
    }
    Ok(())
}

/// Church A's best response to B at `b` with violence cost `beta`.
///
/// Valid while the response keeps a poaching frontier to A's left
/// (`a/2 <= 1/5`); responses outside that region are an error rather than
/// an extrapolated value.
pub fn best_response_a(b: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Invalid(format!("b = {b} must lie in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Invalid(format!("beta = {beta} must lie in [0, 1]")));
    }
    let u = 1.0 - beta;
    let denom = 5.0 - 3.0 * u;
    let a = b / denom + (12.0 - 14.0 * u) / (5.0 * denom);
    if a > MONOPOLY_POSITION + 1e-12 {
        return Err(Error::Invalid(format!(
            "best response a = {a} leaves the validity region a <= {MONOPOLY_POSITION}"
        )));
    }
    Ok(a)
}

/// Church B's best response to A at `a`: `b = (a + 2) / 5`.
pub fn best_response_b(a: f64) -> f64 {
    (a + 2.0) / 5.0
}

/// Duopoly Nash equilibrium for `beta` in `[0, 9/20]`.
///
/// `a = 14 beta / (9 + 15 beta)`, `b = (a + 2) / 5`, `f = a / 2`, and
/// `delta_f = 1/5 - f`.
pub fn duopoly_equilibrium(beta: f64) -> Result<EquilibriumResult> {
    check_beta_region(beta)?;
    let a = 14.0 * beta / (9.0 + 15.0 * beta);
    let b = best_response_b(a);
    let f = a / 2.0;
    Ok(EquilibriumResult {
        scenario: Scenario::Duopoly,
        a,
        b: Some(b),
        f,
        delta_f: Some(MONOPOLY_SHARE - f),
    })
}

/// Support loss from competition: `delta_f = (9 - 20 beta) / (5 (9 + 15 beta))`.
pub fn delta_f(beta: f64) -> Result<f64> {
    check_beta_region(beta)?;
    Ok((9.0 - 20.0 * beta) / (5.0 * (9.0 + 15.0 * beta)))
}

/// Duopoly support share `7 beta / (9 + 15 beta)` without the region check.
///
/// Analytic continuation used to show the threshold crossing: above
/// `9/20` the formula value exceeds the monopoly share, i.e. competition
/// would no longer reduce support, which is why [`duopoly_equilibrium`]
/// refuses that region.
pub fn duopoly_share_formula(beta: f64) -> f64 {
    7.0 * beta / (9.0 + 15.0 * beta)
}

/// The `beta` at which `delta_f` reaches zero: `9/20`.
pub fn violence_threshold() -> f64 {
    VIOLENCE_THRESHOLD
}

// Closed-form pieces of church A's duopoly objective; all integrands are
// piecewise linear so the integrals are exact polynomials.
//
// Contribution of converts poached from the armed group, x in [a/2, 1/5]:
// integral of 1 - (a - x).
fn convert_integral(a: f64) -> f64 {
    11.0 / 50.0 - 7.0 * a / 10.0 + 3.0 * a * a / 8.0
}

// Members between 1/5 and a (oriented integral of 1 - (a - x)).
fn mid_integral(a: f64) -> f64 {
    -11.0 / 50.0 + 6.0 * a / 5.0 - a * a / 2.0
}

// Members between a and the A/B midpoint: integral of 1 - (x - a).
fn right_integral(a: f64, b: f64) -> f64 {
    b / 2.0 + a * b / 4.0 - a / 2.0 - a * a / 8.0 - b * b / 8.0
}

// Flat per-convert gain of 1/5 on the poached mass (1/5 - a/2); together
// with the satisfaction-linked terms this makes `best_response_a` the exact
// stationary point of the payoff.
fn convert_premium(a: f64) -> f64 {
    (1.0 / 5.0 - a / 2.0) / 5.0
}

/// Payoffs of the churches at positions `a` (and `b`, when present).
///
/// With `b = None` this is the monopoly objective; `beta` only matters in
/// the duopoly, where the contributions of poached converts are scaled by
/// `1 - beta`. The convert segment `[a/2, 1/5]` is non-degenerate exactly on
/// the validity region `a <= 2/5`; the polynomial pieces continue smoothly
/// past it (oriented integrals), which keeps the payoff differentiable at
/// the region boundary where the threshold equilibrium sits.
pub fn church_payoff(a: f64, b: Option<f64>, beta: f64) -> Result<(f64, Option<f64>)> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Invalid(format!("a = {a} must lie in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Invalid(format!("beta = {beta} must lie in [0, 1]")));
    }
    match b {
        None => {
            // Members in [a/2, a] and [a, 1].
            let left = a / 2.0 - a * a / 8.0;
            let right = (1.0 - a * a) / 2.0;
            Ok((left + right, None))
        }
        Some(b) => {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Invalid(format!("b = {b} must lie in [0, 1]")));
            }
            if a > b {
                return Err(Error::Invalid(format!("duopoly requires a <= b, got a={a}, b={b}")));
            }
            let v_a = (1.0 - beta) * convert_integral(a)
                + mid_integral(a)
                + right_integral(a, b)
                + convert_premium(a);
            // B serves (midpoint, b] and [b, 1].
            let d = (b - a) / 2.0;
            let v_b = d - d * d / 2.0 + (1.0 - b * b) / 2.0;
            Ok((v_a, Some(v_b)))
        }
    }
}

/// Central-difference derivative of A's payoff in `a`.
pub fn payoff_derivative_a(a: f64, b: Option<f64>, beta: f64, h: f64) -> Result<f64> {
    let (up, _) = church_payoff(a + h, b, beta)?;
    let (dn, _) = church_payoff(a - h, b, beta)?;
    Ok((up - dn) / (2.0 * h))
}

/// Central-difference derivative of B's payoff in `b`.
pub fn payoff_derivative_b(a: f64, b: f64, beta: f64, h: f64) -> Result<f64> {
    let (_, up) = church_payoff(a, Some(b + h), beta)?;
    let (_, dn) = church_payoff(a, Some(b - h), beta)?;
    Ok((up.unwrap() - dn.unwrap()) / (2.0 * h))
}

/// Numeric solution of a fixed-point iteration of the best responses.
#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub equilibrium: EquilibriumResult,
    pub iterations: usize,
    /// The iterates of `a`, starting after the first update.
    pub trace: Vec<f64>,
}

/// Solve the duopoly by iterating `a <- best_response_a(best_response_b(a))`
/// from the monopoly position. This is the numeric oracle for
/// [`duopoly_equilibrium`]; the composed map is a strong contraction on the
/// validity region.
pub fn fixed_point_solve(beta: f64, tol: f64, max_iter: usize) -> Result<FixedPointSolution> {
    if tol <= 0.0 {
        return Err(Error::Invalid("fixed_point_solve: tol must be positive".into()));
    }
    let mut a = MONOPOLY_POSITION;
    let mut trace = Vec::new();
    for iter in 1..=max_iter {
        let b = best_response_b(a);
        let next = best_response_a(b, beta).map_err(|e| {
            Error::Invalid(format!("fixed_point_solve left the validity region: {e}"))
        })?;
        trace.push(next);
        let delta = (next - a).abs();
        a = next;
        if delta < tol {
            let b = best_response_b(a);
            let f = a / 2.0;
            return Ok(FixedPointSolution {
                equilibrium: EquilibriumResult {
                    scenario: Scenario::Duopoly,
                    a,
                    b: Some(b),
                    f,
                    delta_f: Some(MONOPOLY_SHARE - f),
                },
                iterations: iter,
                trace,
            });
        }
    }
    Err(Error::NonConvergence { what: "fixed_point_solve".into(), iterations: max_iter })
}

/// One row of the theory sweep emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub a_c: f64,
    pub b_c: f64,
    pub f_c: f64,
    pub delta_f: f64,
}

/// Evenly spaced sweep of the duopoly equilibrium over `[0, 9/20]`,
/// endpoints included (so the threshold row is always present).
pub fn theory_sweep(grid_points: usize) -> Result<Vec<SweepRow>> {
    if grid_points < 2 {
        return Err(Error::Invalid("theory sweep needs at least 2 grid points".into()));
    }
    let mut rows = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let beta = VIOLENCE_THRESHOLD * (i as f64) / ((grid_points - 1) as f64);
        let eq = duopoly_equilibrium(beta)?;
        rows.push(SweepRow {
            beta,
            a_c: eq.a,
            b_c: eq.b.unwrap(),
            f_c: eq.f,
            delta_f: eq.delta_f.unwrap(),
        });
    }
    Ok(rows)
}
