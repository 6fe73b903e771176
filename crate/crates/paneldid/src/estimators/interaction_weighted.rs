//! Interaction-weighted estimator for heterogeneous cohort effects.
//!
//! Three steps: (1) a regression saturated with cohort x relative-period
//! interactions (plus unit, time and optional group x time effects) yields
//! per-cohort dynamic effects `delta_{e,tau}`; (2) weights are the sample
//! shares of the cohorts observed at each relative period; (3) the reported
//! effect at `tau` is the weight-averaged `delta`. The earliest-treated
//! cohort is excluded by default (it is never observed untreated), as are
//! calendar periods in which no cohort adopts.

use std::collections::BTreeMap;

use crate::demean::{demean, DemeanOptions};
use crate::error::{Error, Result};
use crate::estimators::{
    critical_value, fe_projection_inputs, CohortWeights, EstimateRow, EstimateTable,
};
use crate::panel::{ClusterOn, EventTimeDesign, FixedEffectSpec, PanelDataset};
use crate::regress::{cluster_vcov, ols, SmallSample};

#[derive(Debug, Clone)]
pub struct AsOptions {
    /// Drop the earliest-treated cohort from the sample (default true).
    pub exclude_first_cohort: bool,
    /// Drop calendar periods in which no cohort adopts (default true).
    pub exclude_no_adoption_periods: bool,
    /// Permit running with a single cohort (for degenerate comparisons the
    /// saturated regression is still well-defined; weights collapse to 1).
    pub allow_single_cohort: bool,
    pub cluster_on: ClusterOn,
    pub confidence_level: f64,
    pub normal_ci: bool,
    pub correction: SmallSample,
    pub demean: DemeanOptions,
}

impl Default for AsOptions {
    fn default() -> Self {
        Self {
            exclude_first_cohort: true,
            exclude_no_adoption_periods: true,
            allow_single_cohort: false,
            cluster_on: ClusterOn::Cluster,
            confidence_level: 0.90,
            normal_ci: false,
            correction: SmallSample::StataLike,
            demean: DemeanOptions::default(),
        }
    }
}

/// Cohort interaction-weighted dynamic effects, with the weights used.
pub fn interaction_weighted(
    panel: &PanelDataset,
    design: &EventTimeDesign,
    fe: &FixedEffectSpec,
    opts: &AsOptions,
) -> Result<(EstimateTable, CohortWeights)> {
    if fe.unit_linear_trends {
        return Err(Error::Invalid(
            "unit linear trends are not part of the cohort-saturated specification; \
             rerun without trends"
                .into(),
        ));
    }
    design.validate_for(panel)?;

    let mut notes = Vec::new();
    let cohorts = panel.cohorts();
    if cohorts.is_empty() {
        return Err(Error::Estimation("no treated cohorts in the panel".into()));
    }

    // Sample exclusions.
    let mut working = panel.clone();
    if opts.exclude_first_cohort {
        let first = cohorts[0];
        working = working.filtered(|r| r.adoption != Some(first))?;
        notes.push(format!(
            "earliest-treated cohort e={first} excluded (never observed untreated)"
        ));
    }
    let remaining = working.cohorts();
    if remaining.is_empty() {
        return Err(Error::Estimation(
            "single cohort: nothing remains after excluding the earliest-treated cohort".into(),
        ));
    }
    if remaining.len() < 2 && !opts.allow_single_cohort {
        return Err(Error::Estimation(format!(
            "single cohort (e={}): the interaction-weighted estimator needs at least two \
             treated cohorts after exclusions",
            remaining[0]
        )));
    }
    if opts.exclude_no_adoption_periods {
        let (lo, hi) = (remaining[0], *remaining.last().unwrap());
        let gaps: Vec<i64> = (lo..=hi).filter(|p| !remaining.contains(p)).collect();
        if !gaps.is_empty() {
            working = working.filtered(|r| !gaps.contains(&r.time))?;
            notes.push(format!("calendar periods with no adopting cohort excluded: {gaps:?}"));
        }
    }

    // Saturated cohort x relative-period cells.
    let taus = design.retained_taus();
    let rel = working.relative_times();
    let n = working.n_rows();
    let mut cells: Vec<(i64, i64)> = Vec::new(); // (cohort, tau)
    let mut cell_columns: Vec<Vec<f64>> = Vec::new();
    let mut cell_counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for &e in &remaining {
        for &tau in &taus {
            let mut col = vec![0.0; n];
            let mut count = 0usize;
            for (i, r) in working.rows().iter().enumerate() {
                if r.adoption == Some(e) {
                    if let Some(active) = rel[i].and_then(|t| design.active_tau(t)) {
                        if active == tau {
                            col[i] = 1.0;
                            count += 1;
                        }
                    }
                }
            }
            if count > 0 {
                cells.push((e, tau));
                cell_columns.push(col);
                cell_counts.insert((e, tau), count);
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Estimation(
            "no cohort is observed at any retained relative period".into(),
        ));
    }

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(1 + cell_columns.len());
    columns.push(working.outcomes());
    columns.extend(cell_columns.iter().cloned());
    let (factors, trends) = fe_projection_inputs(&working, fe)?;
    demean(&mut columns, &factors, trends.as_ref(), &opts.demean)?;

    let y = columns.remove(0);
    let x = columns;
    let fit = ols(&x, &y)?;
    if !fit.dropped_columns.is_empty() {
        let dropped: Vec<String> = fit
            .dropped_columns
            .iter()
            .map(|&j| format!("(e={}, tau={})", cells[j].0, cells[j].1))
            .collect();
        notes.push(format!("collinear cohort x period cells dropped: {}", dropped.join(", ")));
    }

    let clusters = working.cluster_labels(opts.cluster_on)?;
    let vcov = cluster_vcov(&fit, &x, &clusters, opts.correction)?;
    let (crit, ci_df) = critical_value(vcov.n_clusters, opts.confidence_level, opts.normal_ci);

    // Weights: sample share of each cohort among observations at tau,
    // restricted to cells that survived the fit.
    let mut weights = CohortWeights::default();
    let mut rows = Vec::new();
    let mut dropped_taus = Vec::new();
    for &tau in &taus {
        let live: Vec<(usize, i64)> = cells
            .iter()
            .enumerate()
            .filter(|(j, (_, t))| *t == tau && !fit.dropped_columns.contains(j))
            .map(|(j, (e, _))| (j, *e))
            .collect();
        let total: usize = live.iter().map(|(j, _)| cell_counts[&cells[*j]]).sum();
        if live.is_empty() || total == 0 {
            dropped_taus.push(tau);
            continue;
        }
        let mut tau_weights = BTreeMap::new();
        let mut estimate = 0.0;
        for &(j, e) in &live {
            let w = cell_counts[&cells[j]] as f64 / total as f64;
            tau_weights.insert(e, w);
            estimate += w * fit.coefficients[j];
        }
        let mut var = 0.0;
        for &(j1, e1) in &live {
            for &(j2, e2) in &live {
                let w1 = tau_weights[&e1];
                let w2 = tau_weights[&e2];
                var += w1 * w2 * vcov.cov_for_columns(j1, j2).unwrap_or(0.0);
            }
        }
        let se = var.max(0.0).sqrt();
        rows.push(EstimateRow {
            tau,
            estimate,
            se,
            ci_low: estimate - crit * se,
            ci_high: estimate + crit * se,
        });
        weights.by_tau.insert(tau, tau_weights);
    }
    if rows.is_empty() {
        return Err(Error::Estimation(
            "every retained relative period has zero total cohort weight".into(),
        ));
    }
    if !dropped_taus.is_empty() {
        notes.push(format!(
            "relative periods with no contributing cohort dropped: {dropped_taus:?}"
        ));
    }

    let table = EstimateTable {
        estimator: "as".into(),
        rows,
        n_obs: working.n_rows(),
        n_clusters: vcov.n_clusters,
        confidence_level: opts.confidence_level,
        ci_df,
        leads: design.leads,
        lags: design.lags,
        omitted: design.omitted.iter().copied().collect(),
        dropped_taus,
        notes,
    };
    Ok((table, weights))
}
