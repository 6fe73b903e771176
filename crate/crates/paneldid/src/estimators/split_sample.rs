//! Split-sample estimator of delayed and anticipated treatment effects.
//!
//! For a window `{-K, ..., L}` around adoption, let `L_it` flag the
//! influenced periods and let `ybar_i` be a unit's mean outcome over its
//! non-influenced periods. Writing `z = y - ybar_i`, the effect at `tau`
//! decomposes as
//!
//! `gamma_tau = theta_L(tau) + theta_D(tau)`
//!
//! where `theta_L(tau) = E[z | at tau] - E[z | in window, not at tau]` comes
//! from regressing `z` on the `tau` indicator inside the window, and
//! `theta_D(tau) = E[z | in window, not at tau] - E[z | outside window]`
//! comes from regressing `z` on `L_it` over the subsample that excludes the
//! `tau` observations. Never-treated units enter only the second regression,
//! where they pin down the control expectation.
//!
//! Every period in the window is estimated, including `tau = -1`: nothing
//! is normalized away, which is what makes anticipated effects visible.
//!
//! The second-stage coefficient is indexed by `tau` only through its
//! subsample; `per_state_control` switches to a variant that estimates one
//! coefficient per remaining window state and averages them, which differs
//! from the pooled default on unbalanced windows.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimators::{critical_value, EstimateRow, EstimateTable};
use crate::panel::{ClusterOn, PanelDataset};
use crate::regress::{cluster_vcov, ols, ClusterVcov, OlsFit, SmallSample};

#[derive(Debug, Clone)]
pub struct TwOptions {
    /// Estimate the second stage with one coefficient per remaining window
    /// state (averaged), instead of a single pooled coefficient on `L_it`.
    pub per_state_control: bool,
    pub cluster_on: ClusterOn,
    pub confidence_level: f64,
    pub normal_ci: bool,
    pub correction: SmallSample,
}

impl Default for TwOptions {
    fn default() -> Self {
        Self {
            per_state_control: false,
            cluster_on: ClusterOn::Cluster,
            confidence_level: 0.90,
            normal_ci: false,
            correction: SmallSample::StataLike,
        }
    }
}

/// The two stage coefficients behind each reported effect, plus the
/// per-unit benchmark means. `gamma_tau` is their sum by construction.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct TwDetail {
    pub theta_l: BTreeMap<i64, f64>,
    pub theta_d: BTreeMap<i64, f64>,
    pub se_l: BTreeMap<i64, f64>,
    pub se_d: BTreeMap<i64, f64>,
    pub benchmarks: BTreeMap<String, f64>,
}

// Subsample regression; the covariance is `None` when the subsample has
// fewer than two clusters (tiny fixtures), in which case SEs are NaN.
fn fit_subsample(
    columns: &[Vec<f64>],
    y: &[f64],
    clusters: &[String],
    correction: SmallSample,
) -> Result<(OlsFit, Option<ClusterVcov>)> {
    let fit = ols(columns, y)?;
    let distinct: std::collections::BTreeSet<&String> = clusters.iter().collect();
    let vcov = if distinct.len() >= 2 {
        Some(cluster_vcov(&fit, columns, clusters, correction)?)
    } else {
        None
    };
    Ok((fit, vcov))
}

/// Split-sample dynamic effects over the window `[-leads, lags]`.
pub fn tw_split_sample(
    panel: &PanelDataset,
    leads: u32,
    lags: u32,
    opts: &TwOptions,
) -> Result<(EstimateTable, TwDetail)> {
    let window: Vec<i64> = (-(leads as i64)..=lags as i64).collect();
    let rel = panel.relative_times();
    let rows = panel.rows();
    let n = rows.len();

    let influenced: Vec<bool> = rel
        .iter()
        .map(|r| matches!(r, Some(tau) if *tau >= -(leads as i64) && *tau <= lags as i64))
        .collect();

    // Per-unit benchmark over non-influenced periods.
    let mut unit_rows: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        unit_rows.entry(r.unit.as_str()).or_default().push(i);
    }
    let mut benchmarks: BTreeMap<String, f64> = BTreeMap::new();
    for (unit, idxs) in &unit_rows {
        let outside: Vec<usize> = idxs.iter().copied().filter(|&i| !influenced[i]).collect();
        if outside.is_empty() {
            return Err(Error::Estimation(format!(
                "treated unit '{unit}' has no periods outside its influence window \
                 [-{leads}, {lags}]; its benchmark mean does not exist"
            )));
        }
        let mean = outside.iter().map(|&i| rows[i].outcome).sum::<f64>() / outside.len() as f64;
        benchmarks.insert((*unit).to_string(), mean);
    }
    let z: Vec<f64> =
        rows.iter().map(|r| r.outcome - benchmarks[r.unit.as_str()]).collect();
    let cluster_labels = panel.cluster_labels(opts.cluster_on)?;

    let infl_idx: Vec<usize> = (0..n).filter(|&i| influenced[i]).collect();
    if infl_idx.is_empty() {
        return Err(Error::Estimation(
            "no observation falls inside any influence window (no treated units?)".into(),
        ));
    }

    let n_clusters_full: std::collections::BTreeSet<&String> = cluster_labels.iter().collect();
    let (crit, ci_df) =
        critical_value(n_clusters_full.len(), opts.confidence_level, opts.normal_ci);

    let mut detail = TwDetail { benchmarks, ..TwDetail::default() };
    let mut table_rows = Vec::new();
    let mut dropped_taus = Vec::new();
    let mut notes = Vec::new();
    let mut se_note_emitted = false;

    for &tau in &window {
        let at_tau: Vec<bool> = rel.iter().map(|r| *r == Some(tau)).collect();
        if !at_tau.iter().any(|&b| b) {
            dropped_taus.push(tau);
            continue;
        }

        // Stage one: z on the tau indicator inside the window.
        let sub_y: Vec<f64> = infl_idx.iter().map(|&i| z[i]).collect();
        let sub_d: Vec<f64> = infl_idx.iter().map(|&i| if at_tau[i] { 1.0 } else { 0.0 }).collect();
        let sub_cl: Vec<String> = infl_idx.iter().map(|&i| cluster_labels[i].clone()).collect();
        let has_complement = sub_d.iter().any(|&d| d == 0.0);
        let (theta_l, se_l) = if has_complement {
            let cols = vec![vec![1.0; sub_y.len()], sub_d];
            let (fit, vcov) = fit_subsample(&cols, &sub_y, &sub_cl, opts.correction)?;
            let se = vcov.and_then(|v| v.se_for_column(1)).unwrap_or(f64::NAN);
            (fit.coefficients[1], se)
        } else {
            // Degenerate single-period window: the indicator spans the
            // whole subsample, so the stage collapses to the raw mean.
            let cols = vec![sub_d];
            let (fit, vcov) = fit_subsample(&cols, &sub_y, &sub_cl, opts.correction)?;
            let se = vcov.and_then(|v| v.se_for_column(0)).unwrap_or(f64::NAN);
            (fit.coefficients[0], se)
        };

        // Stage two: z on the window flag, over everything not at tau.
        let out_idx: Vec<usize> = (0..n).filter(|&i| !at_tau[i]).collect();
        if out_idx.is_empty() {
            return Err(Error::Estimation(format!(
                "second-stage subsample for tau = {tau} is empty"
            )));
        }
        let sub_y: Vec<f64> = out_idx.iter().map(|&i| z[i]).collect();
        let sub_cl: Vec<String> = out_idx.iter().map(|&i| cluster_labels[i].clone()).collect();
        let any_window_rows = out_idx.iter().any(|&i| influenced[i]);
        let (theta_d, se_d) = if !any_window_rows {
            if !se_note_emitted {
                notes.push(format!(
                    "window contains only tau = {tau}: control-side coefficient is zero by \
                     construction"
                ));
                se_note_emitted = true;
            }
            (0.0, 0.0)
        } else if opts.per_state_control {
            let mut cols: Vec<Vec<f64>> = vec![vec![1.0; sub_y.len()]];
            let mut states = Vec::new();
            for &other in &window {
                if other == tau {
                    continue;
                }
                let col: Vec<f64> = out_idx
                    .iter()
                    .map(|&i| if rel[i] == Some(other) { 1.0 } else { 0.0 })
                    .collect();
                if col.iter().any(|&v| v == 1.0) {
                    cols.push(col);
                    states.push(other);
                }
            }
            let (fit, vcov) = fit_subsample(&cols, &sub_y, &sub_cl, opts.correction)?;
            let m = states.len() as f64;
            let theta = (1..cols.len()).map(|j| fit.coefficients[j]).sum::<f64>() / m;
            let se = match vcov {
                Some(v) => {
                    let mut var = 0.0;
                    for j1 in 1..cols.len() {
                        for j2 in 1..cols.len() {
                            var += v.cov_for_columns(j1, j2).unwrap_or(0.0);
                        }
                    }
                    (var.max(0.0)).sqrt() / m
                }
                None => f64::NAN,
            };
            (theta, se)
        } else {
            let l_col: Vec<f64> =
                out_idx.iter().map(|&i| if influenced[i] { 1.0 } else { 0.0 }).collect();
            let cols = vec![vec![1.0; sub_y.len()], l_col];
            let (fit, vcov) = fit_subsample(&cols, &sub_y, &sub_cl, opts.correction)?;
            let se = vcov.and_then(|v| v.se_for_column(1)).unwrap_or(f64::NAN);
            (fit.coefficients[1], se)
        };

        let estimate = theta_l + theta_d;
        let se = (se_l * se_l + se_d * se_d).sqrt();
        detail.theta_l.insert(tau, theta_l);
        detail.theta_d.insert(tau, theta_d);
        detail.se_l.insert(tau, se_l);
        detail.se_d.insert(tau, se_d);
        table_rows.push(EstimateRow {
            tau,
            estimate,
            se,
            ci_low: estimate - crit * se,
            ci_high: estimate + crit * se,
        });
    }

    if table_rows.is_empty() {
        return Err(Error::Estimation(
            "no relative period in the window has any observation".into(),
        ));
    }
    if !dropped_taus.is_empty() {
        notes.push(format!("relative periods with no observations skipped: {dropped_taus:?}"));
    }

    let table = EstimateTable {
        estimator: "tw".into(),
        rows: table_rows,
        n_obs: n,
        n_clusters: n_clusters_full.len(),
        confidence_level: opts.confidence_level,
        ci_df,
        leads,
        lags,
        omitted: Vec::new(),
        dropped_taus,
        notes,
    };
    Ok((table, detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelRow;

    fn row(unit: &str, time: i64, outcome: f64, adoption: Option<i64>) -> PanelRow {
        PanelRow {
            unit: unit.into(),
            time,
            outcome,
            adoption,
            cluster: unit.into(),
            group: None,
            covariates: vec![],
        }
    }

    // The 12-row hand case: one unit treated at t=3 observed t=1..4 with
    // outcome 0 before adoption and 1 from adoption on, two never-treated
    // units constant at 0. With K=L=1 the benchmark is the single t=1
    // observation, so z is (0,0,1,1) for the treated unit and gamma is
    // (0, 1, 1) at tau = (-1, 0, 1).
    fn hand_case() -> PanelDataset {
        let mut rows = Vec::new();
        for t in 1..=4 {
            rows.push(row("t1", t, if t >= 3 { 1.0 } else { 0.0 }, Some(3)));
        }
        for unit in ["n1", "n2"] {
            for t in 1..=4 {
                rows.push(row(unit, t, 0.0, None));
            }
        }
        PanelDataset::from_rows(rows, vec![]).unwrap()
    }

    #[test]
    fn hand_case_recovers_step_effects() {
        let panel = hand_case();
        let (table, detail) = tw_split_sample(&panel, 1, 1, &TwOptions::default()).unwrap();
        let get = |tau: i64| table.row(tau).unwrap().estimate;
        assert!(get(-1).abs() < 1e-12, "tau=-1: {}", get(-1));
        assert!((get(0) - 1.0).abs() < 1e-12, "tau=0: {}", get(0));
        assert!((get(1) - 1.0).abs() < 1e-12, "tau=1: {}", get(1));
        // Benchmark is the pre-window observation.
        assert_eq!(detail.benchmarks["t1"], 0.0);
        // Stage decomposition at tau=0: mean(z|0) - mean(z|window, not 0)
        // = 1 - 0.5, and the control-side regression restores the 0.5.
        assert!((detail.theta_l[&0] - 0.5).abs() < 1e-12);
        assert!((detail.theta_d[&0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_gamma_equals_theta_sum() {
        let panel = noisy_panel();
        let (table, detail) = tw_split_sample(&panel, 2, 2, &TwOptions::default()).unwrap();
        for r in &table.rows {
            let sum = detail.theta_l[&r.tau] + detail.theta_d[&r.tau];
            assert_eq!(r.estimate, sum, "identity must hold bit-for-bit");
        }
    }

    fn noisy_panel() -> PanelDataset {
        let mut rows = Vec::new();
        let adopt = [Some(5), Some(6), Some(7), None, None, None];
        for (ui, adoption) in adopt.iter().enumerate() {
            let unit = format!("u{ui}");
            for t in 1..=10 {
                let wobble = (((ui * 31 + t as usize * 17) % 23) as f64) * 0.01;
                let effect = match adoption {
                    Some(e) if t >= *e && t - e <= 2 => 0.8,
                    _ => 0.0,
                };
                rows.push(row(&unit, t, wobble + effect + ui as f64, *adoption));
            }
        }
        PanelDataset::from_rows(rows, vec![]).unwrap()
    }

    #[test]
    fn zero_effect_zero_noise_gives_zeros() {
        // Unit effects only: the benchmark removes them exactly.
        let mut rows = Vec::new();
        for (ui, adoption) in [(0, Some(4)), (1, Some(5)), (2, None)] {
            let unit = format!("u{ui}");
            for t in 1..=8 {
                rows.push(row(&unit, t, 3.0 * ui as f64, adoption));
            }
        }
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let (table, _) = tw_split_sample(&panel, 2, 2, &TwOptions::default()).unwrap();
        for r in &table.rows {
            assert!(r.estimate.abs() < 1e-12, "tau {}: {}", r.tau, r.estimate);
        }
    }

    #[test]
    fn unit_constant_shift_leaves_estimates_unchanged() {
        let base = noisy_panel();
        let (t0, _) = tw_split_sample(&base, 2, 2, &TwOptions::default()).unwrap();
        let shifted = base
            .filtered(|_| true)
            .unwrap()
            .rows()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if r.unit == "u1" {
                    r.outcome += 41.5;
                }
                r
            })
            .collect::<Vec<_>>();
        let shifted = PanelDataset::from_rows(shifted, vec![]).unwrap();
        let (t1, _) = tw_split_sample(&shifted, 2, 2, &TwOptions::default()).unwrap();
        for (a, b) in t0.rows.iter().zip(&t1.rows) {
            assert_eq!(a.tau, b.tau);
            assert!((a.estimate - b.estimate).abs() < 1e-10);
        }
    }

    #[test]
    fn anticipated_effects_are_estimated_not_normalized() {
        // Effect 0.5 two periods before adoption, 1.0 from adoption through
        // tau=2, nothing outside the window.
        let mut rows = Vec::new();
        for (ui, adoption) in [(0, Some(5)), (1, Some(6)), (2, None), (3, None)] {
            let unit = format!("u{ui}");
            for t in 1..=10 {
                let effect = match adoption {
                    Some(e) => match t - e {
                        -2 => 0.5,
                        0..=2 => 1.0,
                        _ => 0.0,
                    },
                    None => 0.0,
                };
                rows.push(row(&unit, t, effect + ui as f64, adoption));
            }
        }
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let (table, _) = tw_split_sample(&panel, 3, 2, &TwOptions::default()).unwrap();
        assert!((table.row(-2).unwrap().estimate - 0.5).abs() < 1e-10);
        assert!(table.row(-1).unwrap().estimate.abs() < 1e-10);
        assert!((table.row(0).unwrap().estimate - 1.0).abs() < 1e-10);
        assert!(table.row(-3).unwrap().estimate.abs() < 1e-10);
    }

    #[test]
    fn treated_unit_without_benchmark_is_named() {
        // Unit observed only inside its window.
        let mut rows = vec![
            row("trapped", 2, 1.0, Some(3)),
            row("trapped", 3, 1.0, Some(3)),
            row("trapped", 4, 1.0, Some(3)),
        ];
        for t in 1..=5 {
            rows.push(row("n1", t, 0.0, None));
        }
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let err = tw_split_sample(&panel, 1, 1, &TwOptions::default()).unwrap_err();
        assert!(err.to_string().contains("trapped"), "{err}");
    }

    #[test]
    fn degenerate_single_period_window() {
        let panel = hand_case();
        let (table, detail) = tw_split_sample(&panel, 0, 0, &TwOptions::default()).unwrap();
        assert_eq!(table.rows.len(), 1);
        // Benchmark for the treated unit is mean(0, 0, 1) over t in {1,2,4}.
        let b = detail.benchmarks["t1"];
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
        assert!((table.row(0).unwrap().estimate - (1.0 - b)).abs() < 1e-12);
    }

    #[test]
    fn per_state_variant_matches_pooled_on_balanced_window() {
        // With equal state shares the averaged per-state coefficients
        // coincide with the pooled coefficient.
        let panel = hand_case();
        let pooled = tw_split_sample(&panel, 1, 1, &TwOptions::default()).unwrap().0;
        let opts = TwOptions { per_state_control: true, ..TwOptions::default() };
        let per_state = tw_split_sample(&panel, 1, 1, &opts).unwrap().0;
        for (a, b) in pooled.rows.iter().zip(&per_state.rows) {
            assert!((a.estimate - b.estimate).abs() < 1e-12);
        }
    }
}
