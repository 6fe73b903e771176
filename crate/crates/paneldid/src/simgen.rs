//! Synthetic staggered-adoption panels with known ground truth, and the
//! Monte Carlo harness that validates the estimators against it.
//!
//! Outcomes follow `y = base + alpha_i + alpha_t + group-time shock +
//! effect(cohort, tau) + covariates + noise`, with adoption assigned i.i.d.
//! from a cohort distribution (plus a never-treated mass). All draws come
//! from one named portable generator (ChaCha8) seeded from the spec;
//! replication seeds are derived by hashing `(seed, index)`, so Monte Carlo
//! results are independent of scheduling.

use std::collections::BTreeMap;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    interaction_weighted, tw_split_sample, twfe_event_study, AsOptions, TwOptions, TwfeOptions,
};
use crate::panel::{EventTimeDesign, FixedEffectSpec, PanelDataset, PanelRow};

/// One generated covariate: `coefficient * x` enters the outcome,
/// `x ~ N(0, sd^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    pub sd: f64,
    pub coefficient: f64,
}

/// Continuous latent outcome, or a Bernoulli draw on the clamped latent
/// propensity (a linear-probability approximation of a binary indicator;
/// `noise_sd` is ignored there since the Bernoulli noise is intrinsic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    #[default]
    Continuous,
    Binary,
}

/// Recipe for a synthetic staggered-adoption panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n_units: usize,
    pub n_periods: usize,
    /// Adoption period -> probability. The remaining mass is never-treated.
    pub cohort_distribution: BTreeMap<i64, f64>,
    pub never_treated_mass: f64,
    /// cohort -> relative period -> effect. Periods absent from the map
    /// (in particular all leads, unless an anticipation block is given)
    /// carry zero effect.
    pub effects: BTreeMap<i64, BTreeMap<i64, f64>>,
    pub base_level: f64,
    pub unit_fe_sd: f64,
    pub time_fe_sd: f64,
    pub group_time_sd: f64,
    pub noise_sd: f64,
    pub group_count: usize,
    #[serde(default)]
    pub covariates: Vec<CovariateSpec>,
    #[serde(default)]
    pub outcome: OutcomeKind,
    pub seed: u64,
    /// Free-form note on where the effect sizes come from; copied into the
    /// generated ground truth.
    #[serde(default)]
    pub provenance: Option<String>,
}

impl DgpSpec {
    /// Equal-probability cohorts sharing one effect path.
    pub fn homogeneous(
        n_units: usize,
        n_periods: usize,
        cohorts: &[i64],
        never_treated_mass: f64,
        path: &[(i64, f64)],
        seed: u64,
    ) -> Self {
        let p = (1.0 - never_treated_mass) / cohorts.len() as f64;
        let cohort_distribution = cohorts.iter().map(|&e| (e, p)).collect();
        let path_map: BTreeMap<i64, f64> = path.iter().copied().collect();
        let effects = cohorts.iter().map(|&e| (e, path_map.clone())).collect();
        Self {
            n_units,
            n_periods,
            cohort_distribution,
            never_treated_mass,
            effects,
            base_level: 0.0,
            unit_fe_sd: 0.0,
            time_fe_sd: 0.0,
            group_time_sd: 0.0,
            noise_sd: 0.0,
            group_count: 1,
            covariates: Vec::new(),
            outcome: OutcomeKind::Continuous,
            seed,
            provenance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units < 2 {
            return Err(Error::Invalid("dgp: n_units must be at least 2".into()));
        }
        if self.n_periods < 2 {
            return Err(Error::Invalid("dgp: n_periods must be at least 2".into()));
        }
        if self.group_count == 0 {
            return Err(Error::Invalid("dgp: group_count must be at least 1".into()));
        }
        for sd in [self.unit_fe_sd, self.time_fe_sd, self.group_time_sd, self.noise_sd] {
            if !(sd >= 0.0 && sd.is_finite()) {
                return Err(Error::Invalid("dgp: standard deviations must be nonnegative".into()));
            }
        }
        let mut total = self.never_treated_mass;
        for (&e, &p) in &self.cohort_distribution {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("dgp: cohort {e} probability {p} invalid")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "dgp: cohort probabilities plus never-treated mass sum to {total}, expected 1"
            )));
        }
        let treated_mass: f64 = self.cohort_distribution.values().sum();
        let has_effects = self.effects.values().any(|m| m.values().any(|&v| v != 0.0));
        if treated_mass == 0.0 && has_effects {
            return Err(Error::Invalid(
                "dgp: nonzero treatment effects requested but every unit is never-treated".into(),
            ));
        }
        Ok(())
    }

    fn effect(&self, cohort: i64, tau: i64) -> f64 {
        self.effects.get(&cohort).and_then(|m| m.get(&tau)).copied().unwrap_or(0.0)
    }
}

/// Realized per-cohort effect paths and the implied per-estimator targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cohort_paths: BTreeMap<i64, BTreeMap<i64, f64>>,
    /// tau -> cohort -> number of panel observations at that relative time.
    pub counts_at_tau: BTreeMap<i64, BTreeMap<i64, usize>>,
    pub earliest_cohort: Option<i64>,
    pub note: Option<String>,
}

impl GroundTruth {
    pub fn effect(&self, cohort: i64, tau: i64) -> f64 {
        self.cohort_paths.get(&cohort).and_then(|m| m.get(&tau)).copied().unwrap_or(0.0)
    }

    fn weighted_target(&self, tau: i64, exclude: Option<i64>) -> Option<f64> {
        let counts = self.counts_at_tau.get(&tau)?;
        let mut total = 0usize;
        let mut acc = 0.0;
        for (&e, &n) in counts {
            if Some(e) == exclude {
                continue;
            }
            total += n;
            acc += n as f64 * self.effect(e, tau);
        }
        if total == 0 {
            None
        } else {
            Some(acc / total as f64)
        }
    }

    /// Observation-share weighted average effect across all cohorts
    /// observed at `tau`: the estimand of the split-sample estimator, and
    /// the natural benchmark for the event-study coefficient.
    pub fn tw_target(&self, tau: i64) -> Option<f64> {
        self.weighted_target(tau, None)
    }

    /// Same, excluding the earliest cohort (which the interaction-weighted
    /// estimator drops from its sample).
    pub fn as_target(&self, tau: i64) -> Option<f64> {
        self.weighted_target(tau, self.earliest_cohort)
    }

    /// Benchmark for the event-study coefficient; under homogeneous
    /// effects this is the common path.
    pub fn twfe_target(&self, tau: i64) -> Option<f64> {
        self.tw_target(tau)
    }
}

// SplitMix64; scrambles `(seed, index)` into a replication seed.
pub(crate) fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate one panel from the spec. Deterministic: the same spec (seed
/// included) yields a bit-identical panel.
pub fn generate_panel(spec: &DgpSpec) -> Result<(PanelDataset, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    // Adoption assignment by inverse CDF over the sorted cohort list.
    let cohorts: Vec<(i64, f64)> =
        spec.cohort_distribution.iter().map(|(&e, &p)| (e, p)).collect();
    let mut adoption: Vec<Option<i64>> = Vec::with_capacity(spec.n_units);
    for _ in 0..spec.n_units {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut chosen = None;
        for &(e, p) in &cohorts {
            cum += p;
            if u < cum {
                chosen = Some(e);
                break;
            }
        }
        adoption.push(chosen);
    }

    let unit_fe: Vec<f64> =
        (0..spec.n_units).map(|_| normal.sample(&mut rng) * spec.unit_fe_sd).collect();
    let time_fe: Vec<f64> =
        (0..spec.n_periods).map(|_| normal.sample(&mut rng) * spec.time_fe_sd).collect();
    let mut group_shock = vec![vec![0.0; spec.n_periods]; spec.group_count];
    for g in group_shock.iter_mut() {
        for s in g.iter_mut() {
            *s = normal.sample(&mut rng) * spec.group_time_sd;
        }
    }
    // Covariate draws, unit-period by unit-period in a fixed order.
    let n_cov = spec.covariates.len();
    let mut cov_values = vec![vec![vec![0.0; n_cov]; spec.n_periods]; spec.n_units];
    for unit_cov in cov_values.iter_mut() {
        for period_cov in unit_cov.iter_mut() {
            for (k, c) in spec.covariates.iter().enumerate() {
                period_cov[k] = normal.sample(&mut rng) * c.sd;
            }
        }
    }

    let width = (spec.n_units as f64).log10().ceil().max(1.0) as usize;
    let mut rows = Vec::with_capacity(spec.n_units * spec.n_periods);
    let mut counts_at_tau: BTreeMap<i64, BTreeMap<i64, usize>> = BTreeMap::new();
    for i in 0..spec.n_units {
        let unit = format!("u{:0width$}", i, width = width);
        let group = format!("g{:03}", i % spec.group_count);
        for t in 1..=spec.n_periods as i64 {
            let mut latent = spec.base_level + unit_fe[i] + time_fe[(t - 1) as usize];
            latent += group_shock[i % spec.group_count][(t - 1) as usize];
            let mut effect = 0.0;
            if let Some(e) = adoption[i] {
                let tau = t - e;
                effect = spec.effect(e, tau);
                *counts_at_tau.entry(tau).or_default().entry(e).or_default() += 1;
            }
            latent += effect;
            let covariates = cov_values[i][(t - 1) as usize].clone();
            for (k, c) in spec.covariates.iter().enumerate() {
                latent += c.coefficient * covariates[k];
            }
            let outcome = match spec.outcome {
                OutcomeKind::Continuous => latent + normal.sample(&mut rng) * spec.noise_sd,
                OutcomeKind::Binary => {
                    let p = latent.clamp(0.0, 1.0);
                    let u: f64 = rng.gen();
                    if u < p {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            rows.push(PanelRow {
                unit: unit.clone(),
                time: t,
                outcome,
                adoption: adoption[i],
                cluster: unit.clone(),
                group: Some(group.clone()),
                covariates,
            });
        }
    }

    let covariate_names = spec.covariates.iter().map(|c| c.name.clone()).collect();
    let panel = PanelDataset::from_rows(rows, covariate_names)?;
    let earliest_cohort = panel.cohorts().first().copied();
    let truth = GroundTruth {
        cohort_paths: spec.effects.clone(),
        counts_at_tau,
        earliest_cohort,
        note: spec.provenance.clone(),
    };
    Ok((panel, truth))
}

/// Map the competition model into a DGP: the adoption-year effect is
/// `scale * delta_f(beta)` (the violent response is proportional to the
/// support loss the armed group expects), on top of `base_rate`. The
/// mapping is recorded in the spec's provenance and carried into the
/// ground truth. The proportional link itself is a convention of this
/// toolkit, not a model-derived quantity.
pub fn dgp_from_model(
    beta: f64,
    base_rate: f64,
    scale: f64,
    template: &DgpSpec,
) -> Result<DgpSpec> {
    let support_loss = crate::hotelling::delta_f(beta)?;
    let gamma0 = scale * support_loss;
    let mut spec = template.clone();
    spec.base_level = base_rate;
    spec.effects = spec
        .cohort_distribution
        .keys()
        .map(|&e| (e, BTreeMap::from([(0, gamma0)])))
        .collect();
    spec.provenance = Some(format!(
        "adoption-year effect = scale * delta_f(beta) = {scale} * {support_loss} = {gamma0}, \
         base rate {base_rate}, beta = {beta}"
    ));
    Ok(spec)
}

/// Which estimator a Monte Carlo run validates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Twfe,
    InteractionWeighted,
    SplitSample,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Twfe => "twfe",
            EstimatorKind::InteractionWeighted => "as",
            EstimatorKind::SplitSample => "tw",
        }
    }
}

/// Window and fixed effects used by every replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McSettings {
    pub leads: u32,
    pub lags: u32,
    pub fe: FixedEffectSpec,
    pub confidence_level: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { leads: 3, lags: 5, fe: FixedEffectSpec::with_group_time(), confidence_level: 0.90 }
    }
}

/// Per-relative-period Monte Carlo summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McTauRow {
    pub tau: i64,
    pub n_used: usize,
    pub mean_estimate: f64,
    pub mean_target: f64,
    /// Mean of (estimate - target) across replications.
    pub bias: f64,
    pub rmse: f64,
    /// Standard deviation of the estimates across replications.
    pub empirical_se: f64,
    /// Standard error of the mean bias: sd(estimate - target) / sqrt(reps).
    pub mc_se: f64,
    /// Share of replications whose CI covers the target.
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub estimator: String,
    pub reps: usize,
    pub failures: usize,
    pub seed: u64,
    pub confidence_level: f64,
    pub rows: Vec<McTauRow>,
    pub notes: Vec<String>,
}

impl McReport {
    pub fn row(&self, tau: i64) -> Option<&McTauRow> {
        self.rows.iter().find(|r| r.tau == tau)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "tau",
            "n_used",
            "mean_estimate",
            "mean_target",
            "bias",
            "rmse",
            "empirical_se",
            "mc_se",
            "coverage",
        ])?;
        for r in &self.rows {
            wtr.write_record([
                r.tau.to_string(),
                r.n_used.to_string(),
                crate::panel::format_float(r.mean_estimate),
                crate::panel::format_float(r.mean_target),
                crate::panel::format_float(r.bias),
                crate::panel::format_float(r.rmse),
                crate::panel::format_float(r.empirical_se),
                crate::panel::format_float(r.mc_se),
                crate::panel::format_float(r.coverage),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "Monte Carlo: {} over {} reps ({} failures), seed {}\n",
            self.estimator, self.reps, self.failures, self.seed
        );
        out.push_str("  tau     bias      rmse    emp_se     mc_se  coverage\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:>5} {:>8.5} {:>9.5} {:>9.5} {:>9.5} {:>9.3}\n",
                r.tau, r.bias, r.rmse, r.empirical_se, r.mc_se, r.coverage
            ));
        }
        out
    }
}

type RepOutcome = Vec<(i64, f64, f64, f64, Option<f64>)>; // tau, est, lo, hi, target

fn run_replication(
    spec: &DgpSpec,
    estimator: EstimatorKind,
    settings: &McSettings,
    rep: u64,
) -> Result<RepOutcome> {
    let mut rep_spec = spec.clone();
    rep_spec.seed = mix_seed(spec.seed, rep);
    let (panel, truth) = generate_panel(&rep_spec)?;
    let level = settings.confidence_level;
    let out: RepOutcome = match estimator {
        EstimatorKind::Twfe => {
            let design = EventTimeDesign::standard(settings.leads, settings.lags)?;
            let opts = TwfeOptions { confidence_level: level, ..TwfeOptions::default() };
            let table = twfe_event_study(&panel, &design, &settings.fe, &opts)?;
            table
                .rows
                .iter()
                .map(|r| (r.tau, r.estimate, r.ci_low, r.ci_high, truth.twfe_target(r.tau)))
                .collect()
        }
        EstimatorKind::InteractionWeighted => {
            let design = EventTimeDesign::standard(settings.leads, settings.lags)?;
            let opts = AsOptions { confidence_level: level, ..AsOptions::default() };
            let (table, _) = interaction_weighted(&panel, &design, &settings.fe, &opts)?;
            table
                .rows
                .iter()
                .map(|r| (r.tau, r.estimate, r.ci_low, r.ci_high, truth.as_target(r.tau)))
                .collect()
        }
        EstimatorKind::SplitSample => {
            let opts = TwOptions { confidence_level: level, ..TwOptions::default() };
            let (table, _) = tw_split_sample(&panel, settings.leads, settings.lags, &opts)?;
            table
                .rows
                .iter()
                .map(|r| (r.tau, r.estimate, r.ci_low, r.ci_high, truth.tw_target(r.tau)))
                .collect()
        }
    };
    Ok(out)
}

/// Monte Carlo validation: per-relative-period mean bias, RMSE, empirical
/// SE and CI coverage against the per-replication ground-truth targets.
///
/// Deterministic given the spec's master seed; replications run in
/// parallel but are reduced in index order. Aborts if more than 10% of
/// replications fail.
pub fn monte_carlo(
    spec: &DgpSpec,
    estimator: EstimatorKind,
    reps: usize,
    settings: &McSettings,
) -> Result<McReport> {
    if reps < 2 {
        return Err(Error::Invalid("monte_carlo: need at least 2 replications".into()));
    }
    spec.validate()?;

    let results: Vec<std::result::Result<RepOutcome, String>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| run_replication(spec, estimator, settings, rep).map_err(|e| e.to_string()))
        .collect();

    #[derive(Default)]
    struct Accum {
        n: usize,
        sum_est: f64,
        sum_est2: f64,
        sum_target: f64,
        sum_d: f64,
        sum_d2: f64,
        covered: usize,
    }
    let mut acc: BTreeMap<i64, Accum> = BTreeMap::new();
    let mut failures = Vec::new();
    for (rep, res) in results.into_iter().enumerate() {
        match res {
            Ok(rows) => {
                for (tau, est, lo, hi, target) in rows {
                    let Some(target) = target else { continue };
                    let a = acc.entry(tau).or_default();
                    a.n += 1;
                    a.sum_est += est;
                    a.sum_est2 += est * est;
                    a.sum_target += target;
                    let d = est - target;
                    a.sum_d += d;
                    a.sum_d2 += d * d;
                    if lo <= target && target <= hi {
                        a.covered += 1;
                    }
                }
            }
            Err(e) => failures.push(format!("replication {rep}: {e}")),
        }
    }
    if failures.len() * 10 > reps {
        return Err(Error::Estimation(format!(
            "monte_carlo: {} of {reps} replications failed (>10%); first failures: {}",
            failures.len(),
            failures.iter().take(3).cloned().collect::<Vec<_>>().join(" | ")
        )));
    }

    let rows: Vec<McTauRow> = acc
        .into_iter()
        .map(|(tau, a)| {
            let n = a.n as f64;
            let mean_est = a.sum_est / n;
            let bias = a.sum_d / n;
            let var_est = ((a.sum_est2 - n * mean_est * mean_est) / (n - 1.0)).max(0.0);
            let var_d = ((a.sum_d2 - n * bias * bias) / (n - 1.0)).max(0.0);
            McTauRow {
                tau,
                n_used: a.n,
                mean_estimate: mean_est,
                mean_target: a.sum_target / n,
                bias,
                rmse: (a.sum_d2 / n).sqrt(),
                empirical_se: var_est.sqrt(),
                mc_se: (var_d / n).sqrt(),
                coverage: a.covered as f64 / n,
            }
        })
        .collect();

    let n_failures = failures.len();
    let mut notes = Vec::new();
    if n_failures > 0 {
        notes.push(format!("{n_failures} failed replications tolerated"));
        notes.extend(failures.into_iter().take(3));
    }
    Ok(McReport {
        estimator: estimator.name().into(),
        reps,
        failures: n_failures,
        seed: spec.seed,
        confidence_level: settings.confidence_level,
        rows,
        notes,
    })
}

/// Prebuilt validation scenarios used by the command line and the
/// acceptance suite.
pub mod scenarios {
    use super::*;

    /// 400 units x 14 periods, six cohorts adopting in periods 4..=9 with
    /// 30% never-treated, homogeneous effect path starting at 0.09 in the
    /// adoption year and decaying over five lags.
    pub fn homogeneous(seed: u64) -> DgpSpec {
        let cohorts: Vec<i64> = (4..=9).collect();
        let path =
            [(0, 0.09), (1, 0.06), (2, 0.04), (3, 0.03), (4, 0.02), (5, 0.01)];
        let mut spec = DgpSpec::homogeneous(400, 14, &cohorts, 0.3, &path, seed);
        spec.unit_fe_sd = 0.10;
        spec.time_fe_sd = 0.05;
        spec.group_time_sd = 0.02;
        spec.noise_sd = 0.20;
        spec.group_count = 40;
        spec.provenance = Some("homogeneous validation scenario".into());
        spec
    }

    /// Same frame with strongly cohort-varying dynamic effects: early
    /// cohorts respond several times more than late ones, and effects ramp
    /// with tau. The event-study coefficients mix these paths with
    /// non-convex weights, which is what the stress test detects.
    pub fn heterogeneous(seed: u64) -> DgpSpec {
        let cohorts: Vec<i64> = (4..=9).collect();
        let mut spec = DgpSpec::homogeneous(400, 14, &cohorts, 0.3, &[], seed);
        spec.effects = cohorts
            .iter()
            .map(|&e| {
                let scale = 2.0 - 0.36 * (e - 4) as f64;
                let path: BTreeMap<i64, f64> =
                    (0..=5).map(|tau| (tau, scale * (0.5 + 0.1 * tau as f64))).collect();
                (e, path)
            })
            .collect();
        spec.unit_fe_sd = 0.10;
        spec.time_fe_sd = 0.05;
        spec.group_time_sd = 0.02;
        spec.noise_sd = 0.20;
        spec.group_count = 40;
        spec.provenance = Some("cohort-heterogeneous stress scenario".into());
        spec
    }

    /// Homogeneous path plus anticipation: effects 0.06 at tau=-2 and 0.04
    /// at tau=-1. Estimators normalizing on tau=-1 are shifted by the
    /// anticipated response; the split-sample estimator measures it.
    pub fn anticipation(seed: u64) -> DgpSpec {
        let cohorts: Vec<i64> = (4..=9).collect();
        let path = [
            (-2, 0.06),
            (-1, 0.04),
            (0, 0.09),
            (1, 0.06),
            (2, 0.04),
            (3, 0.03),
            (4, 0.02),
            (5, 0.01),
        ];
        let mut spec = DgpSpec::homogeneous(400, 14, &cohorts, 0.3, &path, seed);
        spec.unit_fe_sd = 0.10;
        spec.time_fe_sd = 0.05;
        spec.group_time_sd = 0.02;
        spec.noise_sd = 0.20;
        spec.group_count = 40;
        spec.provenance = Some("anticipation stress scenario".into());
        spec
    }

    /// Scenario by name, as exposed on the command line.
    pub fn by_name(name: &str, seed: u64) -> Result<DgpSpec> {
        match name {
            "homogeneous" => Ok(homogeneous(seed)),
            "heterogeneous" => Ok(heterogeneous(seed)),
            "anticipation" => Ok(anticipation(seed)),
            other => Err(Error::Invalid(format!(
                "unknown scenario '{other}' (expected homogeneous, heterogeneous or anticipation)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_homogeneous(seed: u64) -> DgpSpec {
        let mut spec =
            DgpSpec::homogeneous(60, 12, &[4, 6, 8], 0.3, &[(0, 1.0), (1, 0.5)], seed);
        spec.unit_fe_sd = 0.5;
        spec.time_fe_sd = 0.2;
        spec
    }

    #[test]
    fn zero_noise_homogeneous_jump_is_exact() {
        let spec = DgpSpec::homogeneous(20, 10, &[5], 0.5, &[(0, 1.0)], 3);
        let (panel, _) = generate_panel(&spec).unwrap();
        for r in panel.rows() {
            let expect = match r.adoption {
                Some(e) if r.time == e => 1.0,
                _ => 0.0,
            };
            assert_eq!(r.outcome, expect);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let spec = small_homogeneous(99);
        let (p1, _) = generate_panel(&spec).unwrap();
        let (p2, _) = generate_panel(&spec).unwrap();
        assert_eq!(p1.rows(), p2.rows());
        let (p3, _) = generate_panel(&small_homogeneous(100)).unwrap();
        assert_ne!(p1.rows(), p3.rows());
    }

    #[test]
    fn cohort_shares_match_multinomial_expectation() {
        // Binomial oracle: each cohort share within 3 sigma of its
        // probability over 10,000 units.
        let spec = DgpSpec::homogeneous(10_000, 3, &[2, 3], 0.3, &[], 42);
        let (panel, _) = generate_panel(&spec).unwrap();
        let n = 10_000.0;
        let mut counts: BTreeMap<Option<i64>, usize> = BTreeMap::new();
        for unit in panel.units() {
            let adoption =
                panel.rows().iter().find(|r| r.unit == unit).and_then(|r| r.adoption);
            *counts.entry(adoption).or_default() += 1;
        }
        for (adoption, p) in [(Some(2), 0.35), (Some(3), 0.35), (None, 0.3)] {
            let share = counts[&adoption] as f64 / n;
            let sigma = (p * (1.0 - p) / n).sqrt();
            assert!(
                (share - p).abs() <= 3.0 * sigma,
                "share {share} vs p {p} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn ground_truth_targets_coincide_under_homogeneity() {
        let spec = small_homogeneous(7);
        let (_, truth) = generate_panel(&spec).unwrap();
        for tau in [-2, -1, 0, 1] {
            let tw = truth.tw_target(tau).unwrap();
            let as_t = truth.as_target(tau).unwrap();
            let fe = truth.twfe_target(tau).unwrap();
            assert!((tw - as_t).abs() < 1e-15);
            assert!((tw - fe).abs() < 1e-15);
            let expect = truth.effect(4, tau);
            assert!((tw - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_outcomes_are_bernoulli_on_the_latent() {
        let mut spec = DgpSpec::homogeneous(300, 6, &[4], 0.5, &[(0, 0.2)], 11);
        spec.base_level = 0.4;
        spec.outcome = OutcomeKind::Binary;
        let (panel, _) = generate_panel(&spec).unwrap();
        assert!(panel.rows().iter().all(|r| r.outcome == 0.0 || r.outcome == 1.0));
        let mean: f64 =
            panel.rows().iter().map(|r| r.outcome).sum::<f64>() / panel.n_rows() as f64;
        assert!((mean - 0.4).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn degenerate_spec_rejected() {
        let mut spec = DgpSpec::homogeneous(10, 5, &[3], 0.0, &[(0, 1.0)], 1);
        spec.cohort_distribution.clear();
        spec.never_treated_mass = 1.0;
        assert!(spec.validate().is_err());
        let mut bad = small_homogeneous(1);
        bad.never_treated_mass = 0.5; // probabilities no longer sum to 1
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_noise_monte_carlo_has_zero_bias_and_rmse() {
        let spec = DgpSpec::homogeneous(40, 12, &[5, 7], 0.5, &[(0, 1.0), (1, 0.5)], 5);
        let settings = McSettings {
            leads: 2,
            lags: 2,
            fe: FixedEffectSpec::two_way(),
            confidence_level: 0.90,
        };
        let report = monte_carlo(&spec, EstimatorKind::Twfe, 3, &settings).unwrap();
        assert_eq!(report.failures, 0);
        for row in &report.rows {
            assert!(row.bias.abs() < 1e-10, "tau {} bias {}", row.tau, row.bias);
            assert!(row.rmse < 1e-10);
        }
    }

    #[test]
    fn monte_carlo_report_is_deterministic() {
        let mut spec = small_homogeneous(17);
        spec.noise_sd = 0.3;
        let settings = McSettings {
            leads: 2,
            lags: 2,
            fe: FixedEffectSpec::two_way(),
            confidence_level: 0.90,
        };
        let r1 = monte_carlo(&spec, EstimatorKind::SplitSample, 8, &settings).unwrap();
        let r2 = monte_carlo(&spec, EstimatorKind::SplitSample, 8, &settings).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }

    #[test]
    fn model_linked_dgp_examples() {
        let template = DgpSpec::homogeneous(40, 10, &[4, 6], 0.5, &[], 2);
        // At the threshold the threatened support loss vanishes.
        let spec = dgp_from_model(0.45, 0.2, 0.45, &template).unwrap();
        for path in spec.effects.values() {
            assert!(path[&0].abs() < 1e-15);
        }
        // At beta = 0 with scale 0.45 the adoption-year effect is 0.09.
        let spec = dgp_from_model(0.0, 0.2, 0.45, &template).unwrap();
        for path in spec.effects.values() {
            assert!((path[&0] - 0.09).abs() < 1e-15);
        }
        assert!(spec.provenance.as_deref().unwrap().contains("0.09"));
        // Monotone decreasing in beta.
        let mut prev = f64::INFINITY;
        for i in 0..=9 {
            let beta = 0.45 * i as f64 / 9.0;
            let s = dgp_from_model(beta, 0.2, 0.45, &template).unwrap();
            let g0 = s.effects.values().next().unwrap()[&0];
            assert!(g0 < prev);
            prev = g0;
        }
        // Out-of-region beta propagates the model error.
        assert!(dgp_from_model(0.5, 0.2, 0.45, &template).is_err());
    }
}
