//! Two-way fixed-effects event study.
//!
//! Builds the relative-period indicators, appends controls, residualizes
//! everything against the requested fixed effects (and unit trends), then
//! fits OLS with cluster-robust standard errors. The baseline column
//! structure is unit + time + group x time effects; adding trends and
//! controls reproduces the richer specifications.

use crate::demean::{demean, DemeanOptions};
use crate::error::{Error, Result};
use crate::estimators::{critical_value, fe_projection_inputs, EstimateRow, EstimateTable};
use crate::panel::{build_event_design, ClusterOn, EventTimeDesign, FixedEffectSpec, PanelDataset};
use crate::regress::{cluster_vcov, ols, SmallSample};

#[derive(Debug, Clone)]
pub struct TwfeOptions {
    /// Covariate columns appended to the design.
    pub controls: Vec<String>,
    pub cluster_on: ClusterOn,
    pub confidence_level: f64,
    /// Use normal critical values instead of t with `G - 1` degrees of
    /// freedom.
    pub normal_ci: bool,
    pub correction: SmallSample,
    pub demean: DemeanOptions,
}

impl Default for TwfeOptions {
    fn default() -> Self {
        Self {
            controls: Vec::new(),
            cluster_on: ClusterOn::Cluster,
            confidence_level: 0.90,
            normal_ci: false,
            correction: SmallSample::StataLike,
            demean: DemeanOptions::default(),
        }
    }
}

/// Dynamic event-study estimates `gamma_tau` for the design's retained
/// relative periods.
pub fn twfe_event_study(
    panel: &PanelDataset,
    design: &EventTimeDesign,
    fe: &FixedEffectSpec,
    opts: &TwfeOptions,
) -> Result<EstimateTable> {
    let event = build_event_design(panel, design)?;
    let n_indicators = event.columns.len();
    if event.columns.iter().all(|c| c.iter().all(|&v| v == 0.0)) {
        return Err(Error::Estimation(
            "no treated observations activate any indicator inside the window".into(),
        ));
    }

    // Assemble [y, indicators, controls] and residualize everything at once.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(1 + n_indicators + opts.controls.len());
    columns.push(panel.outcomes());
    columns.extend(event.columns.iter().cloned());
    for name in &opts.controls {
        columns.push(panel.covariate_column(name)?);
    }
    let (factors, trends) = fe_projection_inputs(panel, fe)?;
    let report = demean(&mut columns, &factors, trends.as_ref(), &opts.demean)?;

    let y = columns.remove(0);
    let x = columns; // indicators first, controls after
    let fit = ols(&x, &y)?;
    if (0..n_indicators).all(|j| fit.dropped_columns.contains(&j)) {
        return Err(Error::Estimation(
            "all event indicators are collinear after demeaning (no identifying timing \
             variation, e.g. every unit treated in the same period)"
                .into(),
        ));
    }

    let clusters = panel.cluster_labels(opts.cluster_on)?;
    let vcov = cluster_vcov(&fit, &x, &clusters, opts.correction)?;
    let (crit, ci_df) = critical_value(vcov.n_clusters, opts.confidence_level, opts.normal_ci);

    let mut rows = Vec::new();
    let mut dropped_taus = Vec::new();
    for (j, &tau) in event.taus.iter().enumerate() {
        match (fit.coefficient(j), vcov.se_for_column(j)) {
            (Some(est), Some(se)) => rows.push(EstimateRow {
                tau,
                estimate: est,
                se,
                ci_low: est - crit * se,
                ci_high: est + crit * se,
            }),
            _ => dropped_taus.push(tau),
        }
    }

    let mut notes = Vec::new();
    if !report.singleton_levels.is_empty() {
        for (factor, count) in &report.singleton_levels {
            notes.push(format!("{count} singleton level(s) in factor '{factor}' carry no identifying variation"));
        }
    }
    for &j in &fit.dropped_columns {
        if j >= n_indicators {
            notes.push(format!(
                "control '{}' dropped as collinear",
                opts.controls[j - n_indicators]
            ));
        }
    }

    Ok(EstimateTable {
        estimator: "twfe".into(),
        rows,
        n_obs: panel.n_rows(),
        n_clusters: vcov.n_clusters,
        confidence_level: opts.confidence_level,
        ci_df,
        leads: design.leads,
        lags: design.lags,
        omitted: design.omitted.iter().copied().collect(),
        dropped_taus,
        notes,
    })
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

    /// Canonical 2x2 difference-in-differences: unit A treated at t=2 with
    /// outcomes (0, 3), unit B never treated with outcomes (1, 1); the
    /// adoption-period effect is (3-0)-(1-1) = 3.
    #[test]
    fn canonical_two_by_two_did() {
        let rows = vec![
            row("a", 1, 0.0, Some(2)),
            row("a", 2, 3.0, Some(2)),
            row("b", 1, 1.0, None),
            row("b", 2, 1.0, None),
        ];
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(0, 0).unwrap();
        let fe = FixedEffectSpec::two_way();
        let table = twfe_event_study(&panel, &design, &fe, &TwfeOptions::default()).unwrap();
        let g0 = table.row(0).unwrap();
        assert!((g0.estimate - 3.0).abs() < 1e-12, "gamma_0 = {}", g0.estimate);
        assert_eq!(table.n_obs, 4);
        assert_eq!(table.n_clusters, 2);
    }

    #[test]
    fn zero_effect_zero_noise_gives_zero_estimates() {
        // Outcomes are pure unit + time effects; every gamma must vanish.
        let mut rows = Vec::new();
        for (ui, unit) in ["a", "b", "c", "d"].iter().enumerate() {
            let adoption = match ui {
                0 => Some(4),
                1 => Some(6),
                _ => None,
            };
            for t in 1..=8 {
                let y = (ui as f64) * 2.0 + (t as f64) * 0.3;
                rows.push(row(unit, t, y, adoption));
            }
        }
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(2, 2).unwrap();
        let table =
            twfe_event_study(&panel, &design, &FixedEffectSpec::two_way(), &TwfeOptions::default())
                .unwrap();
        assert!(!table.rows.is_empty());
        for r in &table.rows {
            assert!(r.estimate.abs() < 1e-10, "tau {} estimate {}", r.tau, r.estimate);
        }
    }

    #[test]
    fn shift_invariance_unit_and_time_constants() {
        let mut rows = Vec::new();
        for (ui, unit) in ["a", "b", "c", "d", "e"].iter().enumerate() {
            let adoption = match ui {
                0 => Some(4),
                1 => Some(5),
                _ => None,
            };
            for t in 1..=8 {
                // Deterministic pseudo-noise keeps the fixture reproducible.
                let noise = (((ui * 13 + t as usize * 7) % 11) as f64) * 0.05;
                let effect = match adoption {
                    Some(e) if t >= e => 1.0,
                    _ => 0.0,
                };
                rows.push(row(unit, t, noise + effect, adoption));
            }
        }
        let base_panel = PanelDataset::from_rows(rows.clone(), vec![]).unwrap();
        let design = EventTimeDesign::standard(2, 2).unwrap();
        let fe = FixedEffectSpec::two_way();
        let base =
            twfe_event_study(&base_panel, &design, &fe, &TwfeOptions::default()).unwrap();

        // Add unit-constant and time-constant shifts.
        let shifted: Vec<PanelRow> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                let unit_shift = (r.unit.as_bytes()[0] as f64) * 0.7;
                let time_shift = (r.time as f64) * 1.3 - 2.0;
                r.outcome += unit_shift + time_shift;
                r
            })
            .collect();
        let shifted_panel = PanelDataset::from_rows(shifted, vec![]).unwrap();
        let shifted_table =
            twfe_event_study(&shifted_panel, &design, &fe, &TwfeOptions::default()).unwrap();
        for (a, b) in base.rows.iter().zip(&shifted_table.rows) {
            assert_eq!(a.tau, b.tau);
            assert!((a.estimate - b.estimate).abs() < 1e-8);
        }
    }

    #[test]
    fn simultaneous_adoption_is_rejected() {
        // Every unit treated at the same period: indicators are collinear
        // with time effects after demeaning.
        let mut rows = Vec::new();
        for unit in ["a", "b", "c"] {
            for t in 1..=4 {
                rows.push(row(unit, t, t as f64, Some(3)));
            }
        }
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(1, 1).unwrap();
        let err = twfe_event_study(
            &panel,
            &design,
            &FixedEffectSpec::two_way(),
            &TwfeOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("collinear"), "{err}");
    }

    #[test]
    fn missing_control_is_named() {
        let rows = vec![
            row("a", 1, 0.0, Some(2)),
            row("a", 2, 3.0, Some(2)),
            row("b", 1, 1.0, None),
            row("b", 2, 1.0, None),
        ];
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(0, 0).unwrap();
        let opts = TwfeOptions { controls: vec!["pop".into()], ..TwfeOptions::default() };
        let err =
            twfe_event_study(&panel, &design, &FixedEffectSpec::two_way(), &opts).unwrap_err();
        assert!(err.to_string().contains("pop"), "{err}");
    }
}
