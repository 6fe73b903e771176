//! Dynamic-treatment-effect estimators for staggered-adoption panels.
//!
//! Three estimators share the [`EstimateTable`] output shape:
//!
//! - [`twfe_event_study`] — the two-way fixed-effects event study with
//!   leads/lags, optional group x time effects, unit trends and controls;
//! - [`interaction_weighted`] — the cohort-saturated regression whose
//!   coefficients are averaged with cohort sample-share weights;
//! - [`tw_split_sample`] — the split-sample estimator built from an
//!   influence-window indicator and a per-unit benchmark mean, which
//!   estimates every relative period including -1.
//!
//! [`compare_estimators`] runs all three on identical input and merges the
//! results side by side.

pub mod interaction_weighted;
pub mod split_sample;
pub mod twfe;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use interaction_weighted::{interaction_weighted, AsOptions};
pub use split_sample::{tw_split_sample, TwDetail, TwOptions};
pub use twfe::{twfe_event_study, TwfeOptions};

use crate::demean::{FactorLevels, UnitTrends};
use crate::error::{Error, Result};
use crate::panel::{EventTimeDesign, FeFactor, FixedEffectSpec, PanelDataset};
use crate::regress::{normal_critical, t_critical, t_pvalue};

/// One estimated relative-period effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub tau: i64,
    pub estimate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per-relative-time estimates with cluster-robust uncertainty and the
/// metadata needed to reproduce them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateTable {
    pub estimator: String,
    pub rows: Vec<EstimateRow>,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub confidence_level: f64,
    /// Degrees of freedom used for the critical value; `None` means normal.
    pub ci_df: Option<f64>,
    pub leads: u32,
    pub lags: u32,
    pub omitted: Vec<i64>,
    /// Relative periods whose indicators were dropped (collinear or
    /// unidentified); surfaced instead of zero rows.
    pub dropped_taus: Vec<i64>,
    pub notes: Vec<String>,
}

impl EstimateTable {
    pub fn row(&self, tau: i64) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| r.tau == tau)
    }

    /// `tau,estimate,se,ci_low,ci_high` with one row per relative period.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["tau", "estimate", "se", "ci_low", "ci_high"])?;
        for r in &self.rows {
            wtr.write_record([
                r.tau.to_string(),
                crate::panel::format_float(r.estimate),
                crate::panel::format_float(r.se),
                crate::panel::format_float(r.ci_low),
                crate::panel::format_float(r.ci_high),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Significance stars at the 10/5/1% levels from the table's own
    /// degrees-of-freedom convention.
    pub fn stars(&self, row: &EstimateRow) -> &'static str {
        if !(row.se.is_finite() && row.se > 0.0) {
            return "";
        }
        let t = row.estimate / row.se;
        let p = match self.ci_df {
            Some(df) => t_pvalue(t, df),
            None => {
                use statrs::distribution::{ContinuousCDF, Normal};
                let n = Normal::new(0.0, 1.0).expect("valid normal");
                2.0 * (1.0 - n.cdf(t.abs()))
            }
        };
        if p < 0.01 {
            "***"
        } else if p < 0.05 {
            "**"
        } else if p < 0.10 {
            "*"
        } else {
            ""
        }
    }

    /// Plain-text summary: one line per relative period with stars, plus
    /// the metadata footer.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} estimates ({}% CIs)\n",
            self.estimator,
            self.confidence_level * 100.0
        ));
        out.push_str("  tau   estimate        se      ci_low     ci_high\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:>5}  {:>9.5}{:<3} {:>9.5} {:>11.5} {:>11.5}\n",
                r.tau,
                r.estimate,
                self.stars(r),
                r.se,
                r.ci_low,
                r.ci_high
            ));
        }
        out.push_str(&format!(
            "n_obs = {}, clusters = {}, omitted tau = {:?}\n",
            self.n_obs, self.n_clusters, self.omitted
        ));
        if !self.dropped_taus.is_empty() {
            out.push_str(&format!("dropped tau (collinear/unidentified): {:?}\n", self.dropped_taus));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

/// Cohort sample-share weights per relative period: `by_tau[tau][cohort]`.
///
/// For each `tau` the weights are nonnegative and sum to one; a cohort not
/// observed at `tau` carries no entry.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CohortWeights {
    pub by_tau: BTreeMap<i64, BTreeMap<i64, f64>>,
}

impl CohortWeights {
    pub fn weight(&self, tau: i64, cohort: i64) -> f64 {
        self.by_tau.get(&tau).and_then(|m| m.get(&cohort)).copied().unwrap_or(0.0)
    }
}

/// Critical value under the table's convention: t with `G - 1` degrees of
/// freedom by default, standard normal when `normal_ci` is set.
pub(crate) fn critical_value(n_clusters: usize, level: f64, normal_ci: bool) -> (f64, Option<f64>) {
    if normal_ci {
        (normal_critical(level), None)
    } else {
        let df = (n_clusters.max(2) - 1) as f64;
        (t_critical(df, level), Some(df))
    }
}

/// Factor level maps (and trend data) for a fixed-effect spec on a panel.
pub(crate) fn fe_projection_inputs(
    panel: &PanelDataset,
    fe: &FixedEffectSpec,
) -> Result<(Vec<FactorLevels>, Option<UnitTrends>)> {
    let mut factors = Vec::with_capacity(fe.factors.len());
    for &f in &fe.factors {
        factors.push(panel.factor_levels(f)?);
    }
    let trends = if fe.unit_linear_trends {
        let unit = panel.factor_levels(FeFactor::Unit)?;
        let n_units = unit.n_levels();
        Some(UnitTrends {
            unit_assignment: unit.assignment().to_vec(),
            n_units,
            times: panel.times_f64(),
        })
    } else {
        None
    };
    Ok((factors, trends))
}

/// Side-by-side estimates from the three estimators on identical input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub tau: i64,
    pub fe_estimate: Option<f64>,
    pub fe_se: Option<f64>,
    pub as_estimate: Option<f64>,
    pub as_se: Option<f64>,
    pub tw_estimate: Option<f64>,
    pub tw_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub twfe: EstimateTable,
    pub interaction_weighted: EstimateTable,
    pub split_sample: EstimateTable,
    pub weights: CohortWeights,
}

impl ComparisonTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "tau",
            "fe_estimate",
            "fe_se",
            "as_estimate",
            "as_se",
            "tw_estimate",
            "tw_se",
        ])?;
        let fmt = |v: Option<f64>| v.map(crate::panel::format_float).unwrap_or_default();
        for r in &self.rows {
            wtr.write_record([
                r.tau.to_string(),
                fmt(r.fe_estimate),
                fmt(r.fe_se),
                fmt(r.as_estimate),
                fmt(r.as_se),
                fmt(r.tw_estimate),
                fmt(r.tw_se),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("            FE                  AS                  TW\n");
        out.push_str("  tau  estimate      se   estimate      se   estimate      se\n");
        let cell = |v: Option<f64>| match v {
            Some(x) => format!("{x:>9.5}"),
            None => format!("{:>9}", "."),
        };
        for r in &self.rows {
            out.push_str(&format!(
                "{:>5} {} {} {} {} {} {}\n",
                r.tau,
                cell(r.fe_estimate),
                cell(r.fe_se),
                cell(r.as_estimate),
                cell(r.as_se),
                cell(r.tw_estimate),
                cell(r.tw_se),
            ));
        }
        out
    }
}

/// Run all three estimators on the same panel and design and merge the
/// per-period estimates into one table. The split-sample estimator uses the
/// design's window and estimates every period in it, including the ones the
/// other two normalize away.
pub fn compare_estimators(
    panel: &PanelDataset,
    design: &EventTimeDesign,
    fe: &FixedEffectSpec,
    twfe_opts: &TwfeOptions,
    as_opts: &AsOptions,
    tw_opts: &TwOptions,
) -> Result<ComparisonTable> {
    let fe_table = twfe_event_study(panel, design, fe, twfe_opts)?;
    let (as_table, weights) = interaction_weighted(panel, design, fe, as_opts)?;
    let (tw_table, _detail) = tw_split_sample(panel, design.leads, design.lags, tw_opts)?;

    let mut taus: Vec<i64> = fe_table
        .rows
        .iter()
        .chain(&as_table.rows)
        .chain(&tw_table.rows)
        .map(|r| r.tau)
        .collect();
    taus.sort_unstable();
    taus.dedup();

    let rows = taus
        .into_iter()
        .map(|tau| {
            let fe_row = fe_table.row(tau);
            let as_row = as_table.row(tau);
            let tw_row = tw_table.row(tau);
            ComparisonRow {
                tau,
                fe_estimate: fe_row.map(|r| r.estimate),
                fe_se: fe_row.map(|r| r.se),
                as_estimate: as_row.map(|r| r.estimate),
                as_se: as_row.map(|r| r.se),
                tw_estimate: tw_row.map(|r| r.estimate),
                tw_se: tw_row.map(|r| r.se),
            }
        })
        .collect();

    Ok(ComparisonTable {
        rows,
        twfe: fe_table,
        interaction_weighted: as_table,
        split_sample: tw_table,
        weights,
    })
}
