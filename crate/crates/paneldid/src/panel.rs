//! Panel data model: unit-period observations, adoption times, relative
//! event time, event-indicator construction, and fixed-effect factor maps.
//!
//! Treatment is staggered and absorbing: a unit adopts at most once (its
//! adoption period `E_i`) and stays treated from then on. Never-treated
//! units carry no adoption period and contribute control variation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use crate::demean::FactorLevels;
use crate::error::{Error, Result};

/// One unit-period observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub unit: String,
    pub time: i64,
    pub outcome: f64,
    /// Adoption period of the row's unit; `None` = never treated. Must be
    /// identical on every row of the same unit.
    pub adoption: Option<i64>,
    pub cluster: String,
    pub group: Option<String>,
    /// Covariate values aligned with `PanelDataset::covariate_names`.
    pub covariates: Vec<f64>,
}

/// A validated unit-period panel.
#[derive(Debug, Clone)]
pub struct PanelDataset {
    rows: Vec<PanelRow>,
    covariate_names: Vec<String>,
}

impl PanelDataset {
    /// Build a panel from rows, enforcing the data-model invariants:
    /// unique `(unit, time)` pairs, a single adoption period per unit, and
    /// finite outcomes and covariates.
    pub fn from_rows(rows: Vec<PanelRow>, covariate_names: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("panel has no rows".into()));
        }
        let mut seen: HashSet<(String, i64)> = HashSet::with_capacity(rows.len());
        let mut adoption: HashMap<String, Option<i64>> = HashMap::new();
        for row in &rows {
            if !seen.insert((row.unit.clone(), row.time)) {
                return Err(Error::Invalid(format!(
                    "duplicate observation for unit '{}' at time {}",
                    row.unit, row.time
                )));
            }
            if !row.outcome.is_finite() {
                return Err(Error::Invalid(format!(
                    "non-finite outcome for unit '{}' at time {}",
                    row.unit, row.time
                )));
            }
            if row.covariates.len() != covariate_names.len() {
                return Err(Error::Invalid(format!(
                    "unit '{}' at time {} has {} covariates, expected {}",
                    row.unit,
                    row.time,
                    row.covariates.len(),
                    covariate_names.len()
                )));
            }
            if let Some(pos) = row.covariates.iter().position(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "non-finite covariate '{}' for unit '{}' at time {}",
                    covariate_names[pos], row.unit, row.time
                )));
            }
            match adoption.get(row.unit.as_str()) {
                Some(prev) if *prev != row.adoption => {
                    return Err(Error::Invalid(format!(
                        "unit '{}' has inconsistent adoption periods ({:?} vs {:?})",
                        row.unit, prev, row.adoption
                    )));
                }
                Some(_) => {}
                None => {
                    adoption.insert(row.unit.clone(), row.adoption);
                }
            }
        }
        Ok(Self { rows, covariate_names })
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Distinct units in first-appearance order is not needed anywhere;
    /// sorted order keeps downstream reductions deterministic.
    pub fn units(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.unit.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn n_units(&self) -> usize {
        self.units().len()
    }

    /// Inclusive calendar span `(min_time, max_time)`.
    pub fn time_span(&self) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for r in &self.rows {
            lo = lo.min(r.time);
            hi = hi.max(r.time);
        }
        (lo, hi)
    }

    /// Sorted distinct adoption periods present among treated units.
    pub fn cohorts(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self.rows.iter().filter_map(|r| r.adoption).collect();
        set.into_iter().collect()
    }

    /// Relative event time per row; `None` for never-treated rows.
    pub fn relative_times(&self) -> Vec<Option<i64>> {
        self.rows.iter().map(|r| relative_time(r.adoption, r.time)).collect()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.outcome).collect()
    }

    /// Covariate column by name; the error names the missing column.
    pub fn covariate_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .covariate_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Invalid(format!("covariate column '{name}' not in panel")))?;
        Ok(self.rows.iter().map(|r| r.covariates[idx]).collect())
    }

    /// Generic row filter. The paper-style sample rules (dropping a specific
    /// calendar year, restricting to a sub-period) are expressed through
    /// this rather than hard-coded.
    pub fn filtered<F: Fn(&PanelRow) -> bool>(&self, keep: F) -> Result<PanelDataset> {
        let rows: Vec<PanelRow> = self.rows.iter().filter(|r| keep(r)).cloned().collect();
        PanelDataset::from_rows(rows, self.covariate_names.clone())
    }

    /// Cluster labels per row under the requested clustering column.
    pub fn cluster_labels(&self, on: ClusterOn) -> Result<Vec<String>> {
        match on {
            ClusterOn::Cluster => Ok(self.rows.iter().map(|r| r.cluster.clone()).collect()),
            ClusterOn::Unit => Ok(self.rows.iter().map(|r| r.unit.clone()).collect()),
            ClusterOn::Group => self
                .rows
                .iter()
                .map(|r| {
                    r.group.clone().ok_or_else(|| {
                        Error::Invalid(format!(
                            "cannot cluster on group: unit '{}' at time {} has no group",
                            r.unit, r.time
                        ))
                    })
                })
                .collect(),
        }
    }

    /// Dense level assignment for one fixed-effect factor.
    pub fn factor_levels(&self, factor: FeFactor) -> Result<FactorLevels> {
        let mut keys: Vec<String> = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            let key = match factor {
                FeFactor::Unit => r.unit.clone(),
                FeFactor::Time => r.time.to_string(),
                FeFactor::GroupTime => {
                    let g = r.group.as_ref().ok_or_else(|| {
                        Error::Invalid(format!(
                            "group x time effects requested but unit '{}' at time {} has no group",
                            r.unit, r.time
                        ))
                    })?;
                    format!("{g}\u{1f}{}", r.time)
                }
            };
            keys.push(key);
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(keys.len());
        for k in &keys {
            let next = index.len();
            let id = *index.entry(k.as_str()).or_insert(next);
            assignment.push(id);
        }
        Ok(FactorLevels::new(factor.name(), assignment, index.len()))
    }

    /// Time values as reals, used by the unit-trend projection.
    pub fn times_f64(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time as f64).collect()
    }
}

/// Which column to cluster standard errors on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterOn {
    /// The panel's cluster column (the default).
    Cluster,
    Unit,
    Group,
}

/// Relative event time `t - E_i`; `None` when the unit never adopts.
/// Zero is the adoption period itself.
pub fn relative_time(adoption: Option<i64>, t: i64) -> Option<i64> {
    adoption.map(|e| t - e)
}

/// How observations outside the `[-K, L]` window enter the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointPolicy {
    /// Outside-window rows activate no indicator and act as controls.
    DropOutside,
    /// Outside-window rows are pooled into the `-K` / `L` boundary bins.
    BinEndpoints,
}

/// Leads/lags window with omitted relative periods.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EventTimeDesign {
    pub leads: u32,
    pub lags: u32,
    /// Relative periods excluded from the indicator set. Must be non-empty:
    /// at least one period has to be normalized away to avoid collinearity
    /// with the fixed effects.
    pub omitted: BTreeSet<i64>,
    pub endpoint_policy: EndpointPolicy,
}

impl EventTimeDesign {
    pub fn new(
        leads: u32,
        lags: u32,
        omitted: BTreeSet<i64>,
        endpoint_policy: EndpointPolicy,
    ) -> Result<Self> {
        if omitted.is_empty() {
            return Err(Error::Invalid(
                "at least one relative period must be omitted (default: -1)".into(),
            ));
        }
        let d = Self { leads, lags, omitted, endpoint_policy };
        if d.retained_taus().is_empty() {
            return Err(Error::Invalid(format!(
                "event window [{}, {}] is empty after omitting {:?}",
                -(leads as i64),
                lags,
                d.omitted
            )));
        }
        Ok(d)
    }

    /// The common normalization: omit the period prior to adoption and drop
    /// outside-window rows from indicator activation.
    pub fn standard(leads: u32, lags: u32) -> Result<Self> {
        Self::new(leads, lags, BTreeSet::from([-1]), EndpointPolicy::DropOutside)
    }

    /// Relative periods that get indicator columns, in ascending order.
    pub fn retained_taus(&self) -> Vec<i64> {
        (-(self.leads as i64)..=self.lags as i64)
            .filter(|t| !self.omitted.contains(t))
            .collect()
    }

    /// Window membership ignoring omissions.
    pub fn in_window(&self, tau: i64) -> bool {
        tau >= -(self.leads as i64) && tau <= self.lags as i64
    }

    /// The retained indicator a row with relative time `tau` activates, if
    /// any, under this design's endpoint policy.
    pub fn active_tau(&self, tau: i64) -> Option<i64> {
        let mapped = match self.endpoint_policy {
            EndpointPolicy::DropOutside => {
                if self.in_window(tau) {
                    tau
                } else {
                    return None;
                }
            }
            EndpointPolicy::BinEndpoints => tau.clamp(-(self.leads as i64), self.lags as i64),
        };
        if self.omitted.contains(&mapped) {
            None
        } else {
            Some(mapped)
        }
    }

    /// Check the window against the panel's calendar span.
    pub fn validate_for(&self, panel: &PanelDataset) -> Result<()> {
        let (lo, hi) = panel.time_span();
        let span = (hi - lo).unsigned_abs() as u32;
        if self.leads > span || self.lags > span {
            return Err(Error::Invalid(format!(
                "design window K={} / L={} exceeds the panel time span {span}",
                self.leads, self.lags
            )));
        }
        Ok(())
    }
}

/// Event-indicator matrix: one 0/1 column per retained relative period.
#[derive(Debug, Clone)]
pub struct EventDesign {
    pub taus: Vec<i64>,
    pub columns: Vec<Vec<f64>>,
}

/// Build the event-indicator columns for a panel.
///
/// A column for `tau` is 1 exactly on rows whose relative time activates
/// `tau` under the design's endpoint policy; rows at omitted relative times
/// and never-treated rows activate nothing.
pub fn build_event_design(panel: &PanelDataset, design: &EventTimeDesign) -> Result<EventDesign> {
    design.validate_for(panel)?;
    let taus = design.retained_taus();
    let pos: BTreeMap<i64, usize> = taus.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut columns = vec![vec![0.0; panel.n_rows()]; taus.len()];
    for (i, rel) in panel.relative_times().iter().enumerate() {
        if let Some(tau) = rel.and_then(|t| design.active_tau(t)) {
            if let Some(&j) = pos.get(&tau) {
                columns[j][i] = 1.0;
            }
        }
    }
    Ok(EventDesign { taus, columns })
}

/// Fixed-effect factors supported by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeFactor {
    Unit,
    Time,
    GroupTime,
}

impl FeFactor {
    pub fn name(self) -> &'static str {
        match self {
            FeFactor::Unit => "unit",
            FeFactor::Time => "time",
            FeFactor::GroupTime => "group_time",
        }
    }
}

/// Which fixed effects (and unit-specific linear trends) to absorb.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FixedEffectSpec {
    pub factors: Vec<FeFactor>,
    pub unit_linear_trends: bool,
}

impl FixedEffectSpec {
    /// Unit and time effects.
    pub fn two_way() -> Self {
        Self { factors: vec![FeFactor::Unit, FeFactor::Time], unit_linear_trends: false }
    }

    /// Unit, time and group x time effects.
    pub fn with_group_time() -> Self {
        Self {
            factors: vec![FeFactor::Unit, FeFactor::Time, FeFactor::GroupTime],
            unit_linear_trends: false,
        }
    }

    pub fn with_trends(mut self, trends: bool) -> Self {
        self.unit_linear_trends = trends;
        self
    }

    pub fn describe(&self) -> String {
        let mut parts: Vec<&str> = self.factors.iter().map(|f| f.name()).collect();
        if self.unit_linear_trends {
            parts.push("unit_trends");
        }
        parts.join("+")
    }
}

/// Column-name mapping for CSV ingestion.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ColumnMapping {
    pub unit: String,
    pub time: String,
    pub outcome: String,
    pub adoption: String,
    pub cluster: String,
    pub group: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            unit: "unit".into(),
            time: "time".into(),
            outcome: "outcome".into(),
            adoption: "adoption".into(),
            cluster: "cluster".into(),
            group: "group".into(),
        }
    }
}

/// Read a panel from CSV.
///
/// Schema (header required): `unit,time,outcome,adoption,cluster,group`
/// plus any number of covariate columns. An empty adoption field means
/// never treated; an empty group field means no group. Column names can be
/// remapped through `mapping`; every header column not claimed by the
/// mapping is read as a covariate.
pub fn read_csv<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Schema(format!("cannot read header: {e}")))?;
    let header_vec: Vec<String> = headers.iter().map(|s| s.trim().to_string()).collect();

    let find = |name: &str| -> Option<usize> { header_vec.iter().position(|h| h == name) };
    let required = |name: &str| -> Result<usize> {
        find(name).ok_or_else(|| Error::Schema(format!("missing required column '{name}'")))
    };

    let unit_idx = required(&mapping.unit)?;
    let time_idx = required(&mapping.time)?;
    let outcome_idx = required(&mapping.outcome)?;
    let adoption_idx = required(&mapping.adoption)?;
    let cluster_idx = required(&mapping.cluster)?;
    let group_idx = find(&mapping.group);

    let mut claimed: HashSet<usize> =
        [unit_idx, time_idx, outcome_idx, adoption_idx, cluster_idx].into_iter().collect();
    if let Some(g) = group_idx {
        claimed.insert(g);
    }
    let covariate_cols: Vec<(usize, String)> = header_vec
        .iter()
        .enumerate()
        .filter(|(i, _)| !claimed.contains(i))
        .map(|(i, n)| (i, n.clone()))
        .collect();
    let covariate_names: Vec<String> = covariate_cols.iter().map(|(_, n)| n.clone()).collect();

    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let rownum = line + 2; // 1-based, after the header
        let get = |idx: usize| record.get(idx).unwrap_or("").trim();

        let time: i64 = get(time_idx).parse().map_err(|_| {
            Error::Schema(format!("row {rownum}: cannot parse time '{}'", get(time_idx)))
        })?;
        let outcome: f64 = get(outcome_idx).parse().map_err(|_| {
            Error::Schema(format!("row {rownum}: cannot parse outcome '{}'", get(outcome_idx)))
        })?;
        let adoption_raw = get(adoption_idx);
        let adoption = if adoption_raw.is_empty() {
            None
        } else {
            Some(adoption_raw.parse::<i64>().map_err(|_| {
                Error::Schema(format!("row {rownum}: cannot parse adoption '{adoption_raw}'"))
            })?)
        };
        let group = match group_idx {
            Some(g) => {
                let v = get(g);
                if v.is_empty() {
                    None
                } else {
                    Some(v.to_string())
                }
            }
            None => None,
        };
        let mut covariates = Vec::with_capacity(covariate_cols.len());
        for (idx, name) in &covariate_cols {
            let raw = get(*idx);
            let v: f64 = raw.parse().map_err(|_| {
                Error::Schema(format!("row {rownum}: cannot parse covariate '{name}' = '{raw}'"))
            })?;
            covariates.push(v);
        }
        rows.push(PanelRow {
            unit: get(unit_idx).to_string(),
            time,
            outcome,
            adoption,
            cluster: get(cluster_idx).to_string(),
            group,
            covariates,
        });
    }
    PanelDataset::from_rows(rows, covariate_names)
}

pub fn read_csv_path<P: AsRef<Path>>(path: P, mapping: &ColumnMapping) -> Result<PanelDataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Schema(format!("cannot open '{}': {e}", path.as_ref().display()))
    })?;
    read_csv(file, mapping)
}

/// Write a panel in the canonical column order.
pub fn write_csv<W: Write>(panel: &PanelDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![
        "unit".to_string(),
        "time".to_string(),
        "outcome".to_string(),
        "adoption".to_string(),
        "cluster".to_string(),
        "group".to_string(),
    ];
    header.extend(panel.covariate_names().iter().cloned());
    wtr.write_record(&header)?;
    for r in panel.rows() {
        let mut rec = vec![
            r.unit.clone(),
            r.time.to_string(),
            format_float(r.outcome),
            r.adoption.map(|a| a.to_string()).unwrap_or_default(),
            r.cluster.clone(),
            r.group.clone().unwrap_or_default(),
        ];
        rec.extend(r.covariates.iter().map(|v| format_float(*v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

// Shortest round-trippable representation keeps outputs byte-stable.
pub(crate) fn format_float(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn relative_time_examples() {
        assert_eq!(relative_time(Some(2000), 2000), Some(0));
        assert_eq!(relative_time(None, 2005), None);
        assert_eq!(relative_time(Some(2003), 2000), Some(-3));
    }

    #[test]
    fn event_design_indicator_pattern() {
        // Unit treated at t=3 observed t=1..5, K=L=2, omit {-1}:
        // taus -2..2 minus -1; indicators fire at t=1 (tau=-2) and t=3,4,5.
        let rows: Vec<PanelRow> = (1..=5).map(|t| row("a", t, 0.0, Some(3))).collect();
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(2, 2).unwrap();
        let ed = build_event_design(&panel, &design).unwrap();
        assert_eq!(ed.taus, vec![-2, 0, 1, 2]);
        let by_tau: BTreeMap<i64, &Vec<f64>> =
            ed.taus.iter().copied().zip(ed.columns.iter()).collect();
        assert_eq!(by_tau[&-2], &vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(by_tau[&0], &vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(by_tau[&1], &vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(by_tau[&2], &vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        // t=2 is tau=-1 (omitted): no indicator active on that row.
        for col in &ed.columns {
            assert_eq!(col[1], 0.0);
        }
    }

    #[test]
    fn never_treated_rows_are_all_zero() {
        let rows: Vec<PanelRow> = (1..=4).map(|t| row("n", t, 1.0, None)).collect();
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(1, 1).unwrap();
        let ed = build_event_design(&panel, &design).unwrap();
        for col in &ed.columns {
            assert!(col.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn outside_window_dropped_or_binned() {
        // E=3 observed at t=0 is tau=-3; with K=2 drop_outside it activates
        // nothing, with bin_endpoints it lands in the -2 bin.
        let rows = vec![row("a", 0, 0.0, Some(3)), row("a", 3, 1.0, Some(3))];
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let drop = EventTimeDesign::standard(2, 2).unwrap();
        let ed = build_event_design(&panel, &drop).unwrap();
        let idx = ed.taus.iter().position(|&t| t == -2).unwrap();
        assert_eq!(ed.columns[idx][0], 0.0);

        let bin =
            EventTimeDesign::new(2, 2, BTreeSet::from([-1]), EndpointPolicy::BinEndpoints).unwrap();
        let ed = build_event_design(&panel, &bin).unwrap();
        let idx = ed.taus.iter().position(|&t| t == -2).unwrap();
        assert_eq!(ed.columns[idx][0], 1.0);
    }

    #[test]
    fn exactly_one_indicator_inside_window() {
        // Partition property: each treated in-window non-omitted row
        // activates exactly one indicator.
        let mut rows = Vec::new();
        for t in 1..=8 {
            rows.push(row("a", t, 0.0, Some(4)));
            rows.push(row("n", t, 0.0, None));
        }
        let panel = PanelDataset::from_rows(rows, vec![]).unwrap();
        let design = EventTimeDesign::standard(2, 3).unwrap();
        let ed = build_event_design(&panel, &design).unwrap();
        for (i, rel) in panel.relative_times().iter().enumerate() {
            let active: f64 = ed.columns.iter().map(|c| c[i]).sum();
            match rel {
                Some(tau) if design.in_window(*tau) && !design.omitted.contains(tau) => {
                    assert_eq!(active, 1.0)
                }
                _ => assert_eq!(active, 0.0),
            }
        }
    }

    #[test]
    fn design_requires_an_omission_and_nonempty_window() {
        assert!(EventTimeDesign::new(
            1,
            1,
            BTreeSet::new(),
            EndpointPolicy::DropOutside
        )
        .is_err());
        // Window {-0..0} with 0 omitted is empty.
        assert!(EventTimeDesign::new(
            0,
            0,
            BTreeSet::from([0]),
            EndpointPolicy::DropOutside
        )
        .is_err());
        // K=L=0 omitting -1 is legal and retains only tau=0.
        let d = EventTimeDesign::standard(0, 0).unwrap();
        assert_eq!(d.retained_taus(), vec![0]);
    }

    #[test]
    fn duplicate_and_inconsistent_rows_rejected() {
        let dup = vec![row("a", 1, 0.0, Some(2)), row("a", 1, 1.0, Some(2))];
        assert!(PanelDataset::from_rows(dup, vec![]).is_err());
        let inconsistent = vec![row("a", 1, 0.0, Some(2)), row("a", 2, 1.0, Some(3))];
        assert!(PanelDataset::from_rows(inconsistent, vec![]).is_err());
        let nonfinite = vec![row("a", 1, f64::NAN, None)];
        assert!(PanelDataset::from_rows(nonfinite, vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_with_empty_adoption() {
        let csv_text = "unit,time,outcome,adoption,cluster,group,pop\n\
                        m1,1996,0.5,1999,c1,d1,10.0\n\
                        m2,1996,0.25,,c2,d1,12.5\n";
        let panel = read_csv(csv_text.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(panel.n_rows(), 2);
        assert_eq!(panel.covariate_names(), &["pop".to_string()]);
        assert_eq!(panel.rows()[0].adoption, Some(1999));
        assert_eq!(panel.rows()[1].adoption, None);

        let mut buf = Vec::new();
        write_csv(&panel, &mut buf).unwrap();
        let reread = read_csv(buf.as_slice(), &ColumnMapping::default()).unwrap();
        assert_eq!(reread.rows(), panel.rows());
    }

    #[test]
    fn csv_missing_column_names_it() {
        let csv_text = "unit,time,outcome,cluster\nm1,1,0.1,c1\n";
        let err = read_csv(csv_text.as_bytes(), &ColumnMapping::default()).unwrap_err();
        assert!(err.to_string().contains("adoption"), "{err}");
    }

    #[test]
    fn column_remapping() {
        let csv_text = "muni,year,attack,first_church,muni2,dept\nm1,1,0.1,2,m1,d1\n";
        let mapping = ColumnMapping {
            unit: "muni".into(),
            time: "year".into(),
            outcome: "attack".into(),
            adoption: "first_church".into(),
            cluster: "muni2".into(),
            group: "dept".into(),
        };
        let panel = read_csv(csv_text.as_bytes(), &mapping).unwrap();
        assert_eq!(panel.rows()[0].adoption, Some(2));
        assert_eq!(panel.rows()[0].group.as_deref(), Some("d1"));
        assert!(panel.covariate_names().is_empty());
    }
}
