//! Look-ahead suggestions: options that are dominated under the stated
//! preferences but likely to become optimal once one more preference is
//! stated.
//!
//! Model-based strategies score options from their dominating sets (counting
//! and two probabilistic estimates) and build a set greedily. The random,
//! extremes and diversity baselines live in [`baseline`].

pub mod baseline;
pub mod delta;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{AttrKind, Catalog};
use crate::error::{Error, Result};
use crate::prefmodel::{Criterion, DominanceIndex, PreferenceModel};

pub use delta::{
    delta_directional, delta_peaked, delta_qualitative, delta_threshold, DominatorBounds,
    NumericBounds, QualitativeBounds,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Extremes,
    Diversity,
    Counting,
    /// Probabilistic, treating dominators as independent.
    ProbIndependent,
    /// Probabilistic over the joint extent of the dominating set.
    ProbJoint,
}

impl Strategy {
    /// In the column order of the aggregate tables.
    pub const ALL: [Strategy; 6] = [
        Strategy::Random,
        Strategy::Extremes,
        Strategy::Diversity,
        Strategy::Counting,
        Strategy::ProbIndependent,
        Strategy::ProbJoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Extremes => "extreme",
            Strategy::Diversity => "diversity",
            Strategy::Counting => "counting",
            Strategy::ProbIndependent => "prob1",
            Strategy::ProbJoint => "prob2",
        }
    }

    pub fn is_model_based(self) -> bool {
        matches!(
            self,
            Strategy::Counting | Strategy::ProbIndependent | Strategy::ProbJoint
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => Strategy::Random,
            "extreme" | "extremes" => Strategy::Extremes,
            "diversity" => Strategy::Diversity,
            "counting" => Strategy::Counting,
            "prob1" | "prob_independent" => Strategy::ProbIndependent,
            "prob" | "prob2" | "prob_joint" => Strategy::ProbJoint,
            other => return Err(Error::Config(format!("unknown strategy `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenMode {
    /// Any number of hidden preferences: `1 - Π(1 - P·δ)`.
    #[default]
    Multi,
    /// Exactly one hidden preference: `Σ P·δ`.
    Single,
}

/// Family assumed for a hidden preference on a numeric attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NumericFamily {
    Threshold { tolerance: f64 },
    Directional,
    Peaked { tolerance: f64 },
}

impl Default for NumericFamily {
    fn default() -> Self {
        NumericFamily::Threshold { tolerance: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuggestionConfig {
    pub strategy: Strategy,
    pub criterion: Criterion,
    /// Number of suggestions `l`.
    pub set_size: usize,
    pub hidden_mode: HiddenMode,
    /// Per-attribute override of the distribution of the preferred label.
    pub qualitative_theta_prior: BTreeMap<String, BTreeMap<String, f64>>,
    pub numeric_family: NumericFamily,
    /// Per-attribute override of `numeric_family`.
    pub numeric_families: BTreeMap<String, NumericFamily>,
    /// Probability that an unknown numeric preference favours smaller values.
    pub polarity_weight: f64,
    /// Constant escape probability used to extend counting to sets.
    pub counting_escape: f64,
    /// Number of best options the diversity baseline draws from.
    pub diversity_pool: usize,
    pub seed: u64,
}

impl Default for SuggestionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::ProbJoint,
            criterion: Criterion::Pareto,
            set_size: 1,
            hidden_mode: HiddenMode::Multi,
            qualitative_theta_prior: BTreeMap::new(),
            numeric_family: NumericFamily::default(),
            numeric_families: BTreeMap::new(),
            polarity_weight: 0.5,
            counting_escape: 0.5,
            diversity_pool: 20,
            seed: 0,
        }
    }
}

impl SuggestionConfig {
    pub fn new(strategy: Strategy, set_size: usize) -> Self {
        Self {
            strategy,
            set_size,
            ..Self::default()
        }
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        if self.set_size == 0 {
            return Err(Error::Config("set_size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.polarity_weight) {
            return Err(Error::Config("polarity_weight outside [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.counting_escape) {
            return Err(Error::Config("counting_escape outside [0,1]".into()));
        }
        for (attr, prior) in &self.qualitative_theta_prior {
            let schema = catalog.attribute(attr)?;
            let AttrKind::Qualitative { values } = &schema.kind else {
                return Err(Error::KindMismatch {
                    attr: attr.clone(),
                    expected: "qualitative",
                    actual: "numeric",
                });
            };
            if let Some(unknown) = prior.keys().find(|k| !values.contains(k)) {
                return Err(Error::Config(format!("`{attr}`: unknown value `{unknown}` in prior")));
            }
            let total: f64 = prior.values().sum();
            if prior.values().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("`{attr}`: prior is not a distribution")));
            }
        }
        for (attr, family) in &self.numeric_families {
            if !catalog.attribute(attr)?.kind.is_numeric() {
                return Err(Error::KindMismatch {
                    attr: attr.clone(),
                    expected: "numeric",
                    actual: "qualitative",
                });
            }
            check_family(attr, family)?;
        }
        check_family("*", &self.numeric_family)
    }

    fn family_for(&self, attr: &str) -> NumericFamily {
        self.numeric_families
            .get(attr)
            .copied()
            .unwrap_or(self.numeric_family)
    }

    fn label_prior(&self, catalog: &Catalog, attr: usize, label: &str) -> f64 {
        let schema = &catalog.schema()[attr];
        match self.qualitative_theta_prior.get(&schema.name) {
            Some(prior) => prior.get(label).copied().unwrap_or(0.0),
            None => schema.value_probability(label),
        }
    }
}

fn check_family(attr: &str, family: &NumericFamily) -> Result<()> {
    match *family {
        NumericFamily::Threshold { tolerance } if !(tolerance >= 0.0) => Err(Error::Config(
            format!("`{attr}`: threshold tolerance must be >= 0"),
        )),
        NumericFamily::Peaked { tolerance } if !(tolerance > 0.0) => Err(Error::Config(format!(
            "`{attr}`: peaked tolerance must be > 0"
        ))),
        _ => Ok(()),
    }
}

/// Score of one option.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestionScore {
    pub option: usize,
    pub id: String,
    /// Size of the dominating set.
    pub dominators: usize,
    /// Counting metric: dominating plus equal options.
    pub f_c: usize,
    /// Probability of becoming optimal; `None` for counting-only scores.
    pub f_p: Option<f64>,
    /// Per-attribute δ in schema order; zero on stated attributes.
    pub deltas: Vec<f64>,
}

impl SuggestionScore {
    /// Dominated under the stated preferences, hence eligible as a suggestion.
    pub fn is_eligible(&self) -> bool {
        self.dominators > 0
    }
}

/// Counting metric for every option, in catalog order.
pub fn counting_scores(catalog: &Catalog, index: &DominanceIndex) -> Vec<SuggestionScore> {
    catalog
        .options()
        .iter()
        .enumerate()
        .map(|(i, o)| SuggestionScore {
            option: i,
            id: o.id.clone(),
            dominators: index.dominators(i).len(),
            f_c: index.dominators(i).len() + index.equals(i).len(),
            f_p: None,
            deltas: Vec::new(),
        })
        .collect()
}

/// Dominated options ordered by ascending counting metric, ties by id.
pub fn counting_ranking(scores: &[SuggestionScore]) -> Vec<usize> {
    let mut ranked: Vec<&SuggestionScore> = scores.iter().filter(|s| s.is_eligible()).collect();
    ranked.sort_by(|a, b| a.f_c.cmp(&b.f_c).then_with(|| a.id.cmp(&b.id)));
    ranked.into_iter().map(|s| s.option).collect()
}

/// Resolved per-attribute scoring parameters for the unstated attributes.
#[derive(Debug, Clone)]
struct AttrScoring {
    attr: usize,
    prior_weight: f64,
    kind: ScoringKind,
}

#[derive(Debug, Clone, Copy)]
enum ScoringKind {
    Qualitative,
    Numeric {
        family: NumericFamily,
        domain: (f64, f64),
    },
}

fn unstated_attributes(
    catalog: &Catalog,
    model: &PreferenceModel,
    config: &SuggestionConfig,
) -> Result<Vec<AttrScoring>> {
    let stated = model.stated_attributes(catalog)?;
    let unstated: Vec<AttrScoring> = catalog
        .schema()
        .iter()
        .enumerate()
        .filter(|(i, _)| !stated.contains(i))
        .map(|(i, schema)| AttrScoring {
            attr: i,
            prior_weight: schema.prior_weight,
            kind: match schema.bounds() {
                Some(domain) => ScoringKind::Numeric {
                    family: config.family_for(&schema.name),
                    domain,
                },
                None => ScoringKind::Qualitative,
            },
        })
        .collect();
    if unstated.is_empty() {
        return Err(Error::NoUnstatedAttributes);
    }
    Ok(unstated)
}

fn joint_delta(
    catalog: &Catalog,
    index: &DominanceIndex,
    config: &SuggestionConfig,
    option: usize,
    scoring: &AttrScoring,
) -> Result<f64> {
    match (
        DominatorBounds::compute(catalog, index, option, scoring.attr),
        scoring.kind,
    ) {
        (DominatorBounds::Qualitative(q), _) => {
            let prior = config.label_prior(catalog, scoring.attr, &q.value);
            Ok(delta_qualitative(&q, prior))
        }
        (DominatorBounds::Numeric(b), ScoringKind::Numeric { family, domain }) => {
            numeric_delta(&b, family, domain, config.polarity_weight)
        }
        (DominatorBounds::Numeric(_), ScoringKind::Qualitative) => {
            unreachable!("scoring kind follows the schema")
        }
    }
}

fn numeric_delta(
    bounds: &NumericBounds,
    family: NumericFamily,
    domain: (f64, f64),
    polarity_weight: f64,
) -> Result<f64> {
    match family {
        NumericFamily::Threshold { tolerance } => {
            delta_threshold(bounds, domain, tolerance, polarity_weight)
        }
        NumericFamily::Directional => Ok(delta_directional(bounds, polarity_weight)),
        NumericFamily::Peaked { tolerance } => delta_peaked(bounds, domain, tolerance),
    }
}

/// Product of pairwise escape probabilities over the dominating set.
fn independent_delta(
    catalog: &Catalog,
    index: &DominanceIndex,
    config: &SuggestionConfig,
    option: usize,
    scoring: &AttrScoring,
) -> Result<f64> {
    let options = catalog.options();
    let dominators = index.dominators(option);
    if dominators.is_empty() {
        return Ok(0.0);
    }
    let attr = scoring.attr;
    let mut product = 1.0;
    match scoring.kind {
        ScoringKind::Qualitative => {
            let mine = options[option].label(attr);
            let prior = config.label_prior(catalog, attr, mine);
            for &d in dominators {
                if options[d].label(attr) == mine {
                    return Ok(0.0);
                }
                product *= prior;
            }
        }
        ScoringKind::Numeric { family, domain } => {
            let mine = options[option].num(attr);
            for &d in dominators {
                let pair = NumericBounds::pairwise(mine, options[d].num(attr));
                product *= numeric_delta(&pair, family, domain, config.polarity_weight)?;
                if product == 0.0 {
                    return Ok(0.0);
                }
            }
        }
    }
    Ok(product)
}

/// Probability that an option becomes optimal, for every option in catalog
/// order. Uses the independent estimate for [`Strategy::ProbIndependent`]
/// and the joint estimate otherwise.
pub fn probabilistic_scores(
    catalog: &Catalog,
    model: &PreferenceModel,
    index: &DominanceIndex,
    config: &SuggestionConfig,
) -> Result<Vec<SuggestionScore>> {
    config.validate(catalog)?;
    let unstated = unstated_attributes(catalog, model, config)?;
    let independent = config.strategy == Strategy::ProbIndependent;
    let k = catalog.schema().len();
    let mut scores = counting_scores(catalog, index);
    for score in &mut scores {
        let mut deltas = vec![0.0; k];
        let mut weighted = Vec::with_capacity(unstated.len());
        for scoring in &unstated {
            let d = if independent {
                independent_delta(catalog, index, config, score.option, scoring)?
            } else {
                joint_delta(catalog, index, config, score.option, scoring)?
            };
            deltas[scoring.attr] = d;
            weighted.push(scoring.prior_weight * d);
        }
        score.f_p = Some(combine_hidden(config.hidden_mode, &weighted));
        score.deltas = deltas;
    }
    Ok(scores)
}

/// `1 - Π(1 - x)` in the multi mode, computed in log space so that very small
/// terms still order correctly; a clamped sum in the single mode.
fn combine_hidden(mode: HiddenMode, weighted: &[f64]) -> f64 {
    match mode {
        HiddenMode::Multi => {
            let log_miss: f64 = weighted.iter().map(|x| (-x).ln_1p()).sum();
            (-log_miss.exp_m1()).clamp(0.0, 1.0)
        }
        HiddenMode::Single => weighted.iter().sum::<f64>().clamp(0.0, 1.0),
    }
}

/// Dominated options by descending probability, ties by id.
pub fn probabilistic_ranking(scores: &[SuggestionScore]) -> Vec<usize> {
    let mut ranked: Vec<&SuggestionScore> = scores.iter().filter(|s| s.is_eligible()).collect();
    ranked.sort_by(|a, b| {
        cmp_desc(a.f_p.unwrap_or(0.0), b.f_p.unwrap_or(0.0)).then_with(|| a.id.cmp(&b.id))
    });
    ranked.into_iter().map(|s| s.option).collect()
}

fn cmp_desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Probability that at least one member of a group becomes optimal.
///
/// `members[j][i]` is the δ of member `j` on the `i`-th unstated attribute and
/// `prior_weights[i]` the probability of a hidden preference there.
pub fn group_opt_probability(members: &[&[f64]], prior_weights: &[f64]) -> f64 {
    group_probability(HiddenMode::Multi, members, prior_weights)
}

fn group_probability(mode: HiddenMode, members: &[&[f64]], prior_weights: &[f64]) -> f64 {
    let per_attr: Vec<f64> = prior_weights
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let log_miss: f64 = members.iter().map(|m| (-m[i]).ln_1p()).sum();
            p * -log_miss.exp_m1()
        })
        .collect();
    combine_hidden(mode, &per_attr)
}

/// Chosen suggestions, best first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestionSet {
    pub options: Vec<usize>,
    pub ids: Vec<String>,
    /// Value of the set objective for model-based strategies.
    pub objective: Option<f64>,
}

impl SuggestionSet {
    fn new(catalog: &Catalog, options: Vec<usize>, objective: Option<f64>) -> Self {
        let ids = options
            .iter()
            .map(|&i| catalog.options()[i].id.clone())
            .collect();
        Self {
            options,
            ids,
            objective,
        }
    }
}

/// Choose up to `config.set_size` suggestions. Options in `excluded` (the
/// candidates already on display) are never suggested.
pub fn select_suggestions(
    catalog: &Catalog,
    model: &PreferenceModel,
    index: &DominanceIndex,
    config: &SuggestionConfig,
    excluded: &[usize],
) -> Result<SuggestionSet> {
    config.validate(catalog)?;
    let excluded: HashSet<usize> = excluded.iter().copied().collect();
    match config.strategy {
        Strategy::Counting => {
            let scores = counting_scores(catalog, index);
            let escape = config.counting_escape;
            let eligible = eligible(&scores, &excluded);
            // each member escapes all of its potential dominators with p^F_C
            let chance: Vec<f64> = scores
                .iter()
                .map(|s| escape.powi(s.f_c.min(i32::MAX as usize) as i32))
                .collect();
            let (chosen, objective) = greedy(catalog, eligible, config.set_size, |group, o| {
                let log_miss: f64 = group
                    .iter()
                    .chain(std::iter::once(&o))
                    .map(|&m| (-chance[m]).ln_1p())
                    .sum();
                -log_miss.exp_m1()
            });
            Ok(SuggestionSet::new(catalog, chosen, objective))
        }
        Strategy::ProbIndependent | Strategy::ProbJoint => {
            let unstated = unstated_attributes(catalog, model, config)?;
            let scores = probabilistic_scores(catalog, model, index, config)?;
            let priors: Vec<f64> = unstated.iter().map(|u| u.prior_weight).collect();
            let reduced: Vec<Vec<f64>> = scores
                .iter()
                .map(|s| unstated.iter().map(|u| s.deltas[u.attr]).collect())
                .collect();
            let eligible = eligible(&scores, &excluded);
            let mode = config.hidden_mode;
            let (chosen, objective) = greedy(catalog, eligible, config.set_size, |group, o| {
                let members: Vec<&[f64]> = group
                    .iter()
                    .chain(std::iter::once(&o))
                    .map(|&m| reduced[m].as_slice())
                    .collect();
                group_probability(mode, &members, &priors)
            });
            Ok(SuggestionSet::new(catalog, chosen, objective))
        }
        Strategy::Random => Ok(SuggestionSet::new(
            catalog,
            baseline::random(catalog, config.set_size, config.seed, &excluded),
            None,
        )),
        Strategy::Extremes => Ok(SuggestionSet::new(
            catalog,
            baseline::extremes(catalog, model, config.set_size, &excluded)?,
            None,
        )),
        Strategy::Diversity => Ok(SuggestionSet::new(
            catalog,
            baseline::diversity(catalog, model, config.set_size, config.diversity_pool, &excluded)?,
            None,
        )),
    }
}

fn eligible(scores: &[SuggestionScore], excluded: &HashSet<usize>) -> Vec<usize> {
    scores
        .iter()
        .filter(|s| s.is_eligible() && !excluded.contains(&s.option))
        .map(|s| s.option)
        .collect()
}

/// Add options one at a time, each maximizing the objective of the enlarged
/// group; ties go to the smaller id.
fn greedy(
    catalog: &Catalog,
    mut pool: Vec<usize>,
    size: usize,
    objective: impl Fn(&[usize], usize) -> f64,
) -> (Vec<usize>, Option<f64>) {
    let ids = catalog.options();
    let mut chosen = Vec::with_capacity(size.min(pool.len()));
    let mut value = None;
    while chosen.len() < size && !pool.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &o) in pool.iter().enumerate() {
            let v = objective(&chosen, o);
            let better = match best {
                None => true,
                Some((bp, bv)) => v > bv || (v == bv && ids[o].id < ids[pool[bp]].id),
            };
            if better {
                best = Some((pos, v));
            }
        }
        let (pos, v) = best.expect("pool is non-empty");
        chosen.push(pool.swap_remove(pos));
        value = Some(v);
    }
    (chosen, value)
}

/// Write `option_id,F_C,F_P,delta_<attr>...` with delta columns in schema order.
pub fn write_score_csv(
    catalog: &Catalog,
    scores: &[SuggestionScore],
    sink: impl Write,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["option_id".to_string(), "F_C".into(), "F_P".into()];
    header.extend(catalog.schema().iter().map(|a| format!("delta_{}", a.name)));
    writer.write_record(&header)?;
    for s in scores {
        let mut row = vec![s.id.clone(), s.f_c.to_string()];
        row.push(s.f_p.map(|p| format!("{p:.6}")).unwrap_or_default());
        let k = catalog.schema().len();
        row.extend((0..k).map(|i| format!("{:.6}", s.deltas.get(i).copied().unwrap_or(0.0))));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Attribute indices with at least one stated preference, sorted.
pub fn stated_attribute_indices(catalog: &Catalog, model: &PreferenceModel) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = model.stated_attributes(catalog)?.into_iter().collect();
    Ok(set.into_iter().collect())
}
