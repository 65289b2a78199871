//! Simulated users for comparing suggestion strategies.
//!
//! Each simulated user holds a hidden preference model, states one of its
//! preferences up front and then reacts opportunistically: it states another
//! hidden preference only when the display shows a currently dominated option
//! that this preference would make Pareto-optimal. A session ends when the
//! model is complete or the user has nothing left to say.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{AttrKind, Catalog, CatalogSpec};
use crate::error::{Error, Result};
use crate::prefmodel::{
    pareto_cmp, Criterion, Polarity, Preference, PreferenceModel, MAX_WEIGHT, MIN_WEIGHT,
};
use crate::suggest::{select_suggestions, Strategy, SuggestionConfig};

/// Tolerance of generated numeric preferences, as a fraction of the range.
pub const HIDDEN_TOLERANCE_FRACTION: f64 = 0.1;

/// Shape of the hidden preferences drawn on numeric attributes.
///
/// Thresholds leave about half of the catalog tied at cost zero. Once one is
/// stated, most dominated options have dozens of tied dominators that no
/// single further preference can overcome, so opportunistic users stall
/// after a cycle or two whatever they are shown. Peaks around a uniformly
/// drawn ideal value are the default for that reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenNumericFamily {
    #[default]
    Peaked,
    Threshold,
}

impl std::str::FromStr for HiddenNumericFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peaked" => Ok(Self::Peaked),
            "threshold" => Ok(Self::Threshold),
            other => Err(Error::Config(format!("unknown hidden family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HiddenUserModel {
    pub preferences: Vec<Preference>,
    /// Which preference the user states before the first cycle.
    pub initial_index: usize,
}

impl HiddenUserModel {
    pub fn len(&self) -> usize {
        self.preferences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preferences.is_empty()
    }
}

/// Draw `m` preferences on distinct attributes: a preferred label for
/// qualitative attributes, a peak of half-width 10% of the range otherwise.
pub fn generate_hidden_model(catalog: &Catalog, m: usize, seed: u64) -> Result<HiddenUserModel> {
    generate_hidden_model_with(catalog, m, HiddenNumericFamily::Peaked, seed)
}

/// As [`generate_hidden_model`] with a chosen numeric family. Thresholds get
/// a uniformly drawn polarity.
pub fn generate_hidden_model_with(
    catalog: &Catalog,
    m: usize,
    family: HiddenNumericFamily,
    seed: u64,
) -> Result<HiddenUserModel> {
    let k = catalog.schema().len();
    if m == 0 || m > k {
        return Err(Error::Config(format!(
            "cannot draw {m} hidden preferences over {k} attributes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attrs: Vec<usize> = (0..k).collect();
    attrs.shuffle(&mut rng);
    let preferences = attrs[..m]
        .iter()
        .map(|&a| {
            let schema = &catalog.schema()[a];
            let weight = rng.gen_range(MIN_WEIGHT..=MAX_WEIGHT);
            match &schema.kind {
                AttrKind::Qualitative { values } => Preference::qualitative(
                    &schema.name,
                    values[rng.gen_range(0..values.len())].clone(),
                    weight,
                ),
                AttrKind::Numeric { lo, hi, .. } => {
                    let theta = rng.gen_range(*lo..=*hi);
                    let tolerance = HIDDEN_TOLERANCE_FRACTION * (hi - lo);
                    match family {
                        HiddenNumericFamily::Peaked => {
                            Preference::peaked(&schema.name, theta, tolerance, weight)
                        }
                        HiddenNumericFamily::Threshold => {
                            let polarity = if rng.gen_bool(0.5) {
                                Polarity::LessThan
                            } else {
                                Polarity::GreaterThan
                            };
                            Preference::threshold(&schema.name, polarity, theta, tolerance, weight)
                        }
                    }
                }
            }
        })
        .collect();
    Ok(HiddenUserModel {
        preferences,
        initial_index: rng.gen_range(0..m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reaction {
    /// State the hidden preference with this index.
    State(usize),
    Stop,
}

/// A hidden model evaluated against one catalog, with a fixed order in which
/// the user considers its unstated preferences.
#[derive(Debug, Clone)]
pub struct SimulatedUser {
    hidden: HiddenUserModel,
    /// `costs[option][hidden preference]`
    costs: Vec<Vec<f64>>,
    scan_order: Vec<usize>,
}

impl SimulatedUser {
    pub fn new(catalog: &Catalog, hidden: HiddenUserModel, seed: u64) -> Result<Self> {
        let eval = PreferenceModel::new(hidden.preferences.clone()).evaluate(catalog)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scan_order: Vec<usize> = (0..hidden.len()).collect();
        scan_order.shuffle(&mut rng);
        Ok(Self {
            hidden,
            costs: eval.costs,
            scan_order,
        })
    }

    pub fn hidden(&self) -> &HiddenUserModel {
        &self.hidden
    }

    pub fn scan_order(&self) -> &[usize] {
        &self.scan_order
    }

    /// Pareto-optimality of `option` in the whole catalog under a subset of
    /// the hidden preferences.
    pub fn is_optimal(&self, option: usize, prefs: &[usize]) -> bool {
        let mine: Vec<f64> = prefs.iter().map(|&p| self.costs[option][p]).collect();
        let mut other = vec![0.0; prefs.len()];
        self.costs.iter().enumerate().all(|(o, row)| {
            if o == option {
                return true;
            }
            for (slot, &p) in other.iter_mut().zip(prefs) {
                *slot = row[p];
            }
            pareto_cmp(&other, &mine) != Some(std::cmp::Ordering::Greater)
        })
    }

    /// The first unstated preference, in scan order, under which some
    /// displayed option goes from dominated to Pareto-optimal.
    pub fn react(&self, stated: &[usize], display: &[usize]) -> Reaction {
        let dominated: Vec<usize> = display
            .iter()
            .copied()
            .filter(|&o| !self.is_optimal(o, stated))
            .collect();
        if dominated.is_empty() {
            return Reaction::Stop;
        }
        let mut extended = stated.to_vec();
        extended.push(usize::MAX);
        for &r in &self.scan_order {
            if stated.contains(&r) {
                continue;
            }
            *extended.last_mut().expect("non-empty") = r;
            if dominated.iter().any(|&o| self.is_optimal(o, &extended)) {
                return Reaction::State(r);
            }
        }
        Reaction::Stop
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub strategy: Strategy,
    pub criterion: Criterion,
    /// Best-ranked options shown next to the suggestions. The user reacts to
    /// the whole display; by default it holds suggestions only.
    pub display_candidates: usize,
    pub display_suggestions: usize,
    /// Base scoring parameters; strategy, criterion, set size and seed are
    /// overwritten per cycle.
    pub scoring: SuggestionConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::ProbJoint,
            criterion: Criterion::Pareto,
            display_candidates: 0,
            display_suggestions: 5,
            scoring: SuggestionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleTrace {
    pub candidates: Vec<usize>,
    pub suggestions: Vec<usize>,
    pub reaction: Reaction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub strategy: Strategy,
    /// Hidden preferences stated after the initial one.
    pub discovered: usize,
    pub cycles: usize,
    /// The complete model was elicited.
    pub found: bool,
    pub hidden_size: usize,
    pub trace: Vec<CycleTrace>,
}

impl RunRecord {
    /// Discovered share of the preferences that were hidden at the start; a
    /// model with nothing hidden counts as fully discovered.
    pub fn fraction(&self) -> f64 {
        if self.hidden_size <= 1 {
            1.0
        } else {
            self.discovered as f64 / (self.hidden_size - 1) as f64
        }
    }
}

/// Run one interaction until the model is complete or the user stops.
pub fn run_session(
    catalog: &Catalog,
    user: &SimulatedUser,
    config: &SessionConfig,
    seed: u64,
) -> Result<RunRecord> {
    let hidden = user.hidden();
    let mut stated = vec![hidden.initial_index];
    let mut trace = Vec::new();
    let mut scoring = config.scoring.clone();
    scoring.strategy = config.strategy;
    scoring.criterion = config.criterion;
    scoring.set_size = config.display_suggestions.max(1);

    while stated.len() < hidden.len() {
        let model = PreferenceModel::new(
            stated
                .iter()
                .map(|&i| hidden.preferences[i].clone())
                .collect(),
        );
        let candidates = if config.display_candidates > 0 {
            model.top_k_candidates(catalog, config.display_candidates)?
        } else {
            Vec::new()
        };
        let suggestions = if config.display_suggestions > 0 {
            scoring.seed = derive_seed(seed, trace.len() as u64);
            let index = model.build_dominance_index(catalog, config.criterion)?;
            match select_suggestions(catalog, &model, &index, &scoring, &candidates) {
                Ok(set) => set.options,
                Err(Error::NoUnstatedAttributes) => Vec::new(),
                Err(e) => return Err(e),
            }
        } else {
            Vec::new()
        };
        let display: Vec<usize> = candidates.iter().chain(&suggestions).copied().collect();
        let reaction = if display.is_empty() {
            Reaction::Stop
        } else {
            user.react(&stated, &display)
        };
        trace.push(CycleTrace {
            candidates,
            suggestions,
            reaction,
        });
        match reaction {
            Reaction::State(r) => stated.push(r),
            Reaction::Stop => break,
        }
    }

    let discovered = stated.len() - 1;
    Ok(RunRecord {
        run: 0,
        strategy: config.strategy,
        discovered,
        cycles: trace.len(),
        found: discovered + 1 == hidden.len(),
        hidden_size: hidden.len(),
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CatalogSource {
    /// A fresh catalog is drawn for every run.
    Generated(CatalogSpec),
    Fixed(Catalog),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub catalog: CatalogSource,
    /// Hidden preferences per user, including the initial one.
    pub m: usize,
    pub hidden_family: HiddenNumericFamily,
    pub runs: usize,
    pub seed: u64,
    pub session: SessionConfig,
}

impl SimConfig {
    pub fn new(catalog: CatalogSource, m: usize, runs: usize, seed: u64) -> Self {
        Self {
            catalog,
            m,
            hidden_family: HiddenNumericFamily::default(),
            runs,
            seed,
            session: SessionConfig::default(),
        }
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        let mut next = self.clone();
        next.session.strategy = strategy;
        next
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub strategy: Strategy,
    pub m: usize,
    pub runs: Vec<RunRecord>,
    pub mean_fraction: f64,
    /// `curve[x]`: share of runs that discovered at least `x` preferences.
    pub curve: Vec<f64>,
}

/// SplitMix64 step; derives independent stream seeds from one master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds of one run. They do not depend on the strategy, so every strategy
/// faces the same catalogs and users.
fn run_seeds(master: u64, run: usize) -> (u64, u64, u64, u64) {
    let base = derive_seed(master, run as u64);
    (
        derive_seed(base, 0),
        derive_seed(base, 1),
        derive_seed(base, 2),
        derive_seed(base, 3),
    )
}

pub fn run_experiment(config: &SimConfig) -> Result<ExperimentResult> {
    if config.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let (catalog_seed, hidden_seed, scan_seed, session_seed) =
                run_seeds(config.seed, run);
            let generated;
            let catalog = match &config.catalog {
                CatalogSource::Generated(spec) => {
                    generated = Catalog::generate(spec, catalog_seed)?;
                    &generated
                }
                CatalogSource::Fixed(catalog) => catalog,
            };
            let hidden =
                generate_hidden_model_with(catalog, config.m, config.hidden_family, hidden_seed)?;
            let user = SimulatedUser::new(catalog, hidden, scan_seed)?;
            let mut record = run_session(catalog, &user, &config.session, session_seed)?;
            record.run = run;
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(config.session.strategy, config.m, runs))
}

fn summarize(strategy: Strategy, m: usize, runs: Vec<RunRecord>) -> ExperimentResult {
    let n = runs.len() as f64;
    let mean_fraction = runs.iter().map(RunRecord::fraction).sum::<f64>() / n;
    let curve = (0..m.max(1))
        .map(|x| runs.iter().filter(|r| r.discovered >= x).count() as f64 / n)
        .collect();
    ExperimentResult {
        strategy,
        m,
        runs,
        mean_fraction,
        curve,
    }
}

/// One experiment per strategy, all on the same seeds.
pub fn run_sweep(config: &SimConfig, strategies: &[Strategy]) -> Result<Vec<ExperimentResult>> {
    strategies
        .iter()
        .map(|&s| run_experiment(&config.with_strategy(s)))
        .collect()
}

pub fn write_runs_csv(results: &[ExperimentResult], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["run", "strategy", "discovered", "cycles", "found"])?;
    for result in results {
        for r in &result.runs {
            w.write_record([
                r.run.to_string(),
                r.strategy.name().to_string(),
                r.discovered.to_string(),
                r.cycles.to_string(),
                r.found.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per configuration with a column per strategy, in table order.
pub fn write_aggregate_csv(
    rows: &[(String, Vec<ExperimentResult>)],
    sink: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["config".to_string()];
    header.extend(Strategy::ALL.iter().map(|s| s.name().to_string()));
    w.write_record(&header)?;
    for (label, results) in rows {
        let mut row = vec![label.clone()];
        for s in Strategy::ALL {
            row.push(
                results
                    .iter()
                    .find(|r| r.strategy == s)
                    .map(|r| format!("{:.3}", r.mean_fraction))
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x` followed by one column per strategy: share of runs discovering at
/// least `x` preferences.
pub fn write_curve_csv(results: &[ExperimentResult], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["x".to_string()];
    header.extend(results.iter().map(|r| r.strategy.name().to_string()));
    w.write_record(&header)?;
    let len = results.iter().map(|r| r.curve.len()).max().unwrap_or(0);
    for x in 0..len {
        let mut row = vec![x.to_string()];
        row.extend(
            results
                .iter()
                .map(|r| format!("{:.3}", r.curve.get(x).copied().unwrap_or(0.0))),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
