//! Preferences as parameterized cost functions, their weighted combination,
//! Pareto- and utility-dominance, and candidate retrieval.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{AttrKind, Catalog, OptionRecord};
use crate::error::{Error, Result};

pub const MIN_WEIGHT: u8 = 1;
pub const MAX_WEIGHT: u8 = 5;

/// Utilities are compared on a 1e-9 grid so that float noise in the weighted
/// sum never splits options with identical cost vectors.
const UTILITY_SCALE: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SmallerBetter,
    LargerBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    LessThan,
    GreaterThan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreferenceKind {
    /// Cost 0 on the preferred label, 1 elsewhere.
    QualitativeValue { theta: String },
    /// Monotone cost over the declared domain.
    Directional { direction: Direction },
    /// Graded step: zero on the acceptable side of `theta`, ramping to 1 over
    /// `tolerance` on the other side. A zero tolerance gives a plain step.
    Threshold {
        polarity: Polarity,
        theta: f64,
        tolerance: f64,
    },
    /// Saturated V around `theta`, reaching 1 at distance `tolerance`.
    Peaked { theta: f64, tolerance: f64 },
}

impl PreferenceKind {
    pub fn variant_name(&self) -> &'static str {
        match self {
            PreferenceKind::QualitativeValue { .. } => "qualitative_value",
            PreferenceKind::Directional { .. } => "directional",
            PreferenceKind::Threshold { .. } => "threshold",
            PreferenceKind::Peaked { .. } => "peaked",
        }
    }

    fn wants_qualitative(&self) -> bool {
        matches!(self, PreferenceKind::QualitativeValue { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PreferenceDoc", into = "PreferenceDoc")]
pub struct Preference {
    pub attr: String,
    pub kind: PreferenceKind,
    pub weight: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Better,
    Equal,
    Worse,
}

impl Comparison {
    pub fn reverse(self) -> Self {
        match self {
            Comparison::Better => Comparison::Worse,
            Comparison::Equal => Comparison::Equal,
            Comparison::Worse => Comparison::Better,
        }
    }

    fn from_costs(c1: f64, c2: f64) -> Self {
        if c1 < c2 {
            Comparison::Better
        } else if c1 > c2 {
            Comparison::Worse
        } else {
            Comparison::Equal
        }
    }
}

impl Preference {
    pub fn new(attr: impl Into<String>, kind: PreferenceKind, weight: u8) -> Self {
        Self {
            attr: attr.into(),
            kind,
            weight,
        }
    }

    pub fn qualitative(attr: impl Into<String>, theta: impl Into<String>, weight: u8) -> Self {
        Self::new(
            attr,
            PreferenceKind::QualitativeValue {
                theta: theta.into(),
            },
            weight,
        )
    }

    pub fn directional(attr: impl Into<String>, direction: Direction, weight: u8) -> Self {
        Self::new(attr, PreferenceKind::Directional { direction }, weight)
    }

    pub fn threshold(
        attr: impl Into<String>,
        polarity: Polarity,
        theta: f64,
        tolerance: f64,
        weight: u8,
    ) -> Self {
        Self::new(
            attr,
            PreferenceKind::Threshold {
                polarity,
                theta,
                tolerance,
            },
            weight,
        )
    }

    pub fn peaked(attr: impl Into<String>, theta: f64, tolerance: f64, weight: u8) -> Self {
        Self::new(attr, PreferenceKind::Peaked { theta, tolerance }, weight)
    }

    /// Check the preference against a catalog schema and resolve it for
    /// evaluation.
    pub fn bind(&self, catalog: &Catalog) -> Result<BoundPreference> {
        let idx = catalog.attr_index(&self.attr)?;
        let schema = &catalog.schema()[idx];
        let invalid = |message: String| Error::Preference {
            attr: self.attr.clone(),
            message,
        };
        if !(MIN_WEIGHT..=MAX_WEIGHT).contains(&self.weight) {
            return Err(invalid(format!(
                "weight {} outside {MIN_WEIGHT}..={MAX_WEIGHT}",
                self.weight
            )));
        }
        let (lo, hi) = match (&schema.kind, self.kind.wants_qualitative()) {
            (AttrKind::Qualitative { values }, true) => {
                if let PreferenceKind::QualitativeValue { theta } = &self.kind {
                    if !values.contains(theta) {
                        return Err(invalid(format!("`{theta}` is not a value of the attribute")));
                    }
                }
                (0.0, 1.0)
            }
            (AttrKind::Numeric { lo, hi, .. }, false) => (*lo, *hi),
            (kind, wants_qual) => {
                return Err(Error::KindMismatch {
                    attr: self.attr.clone(),
                    expected: if wants_qual { "qualitative" } else { "numeric" },
                    actual: kind.label(),
                })
            }
        };
        match self.kind {
            PreferenceKind::Threshold {
                theta, tolerance, ..
            } => {
                if !(lo..=hi).contains(&theta) {
                    return Err(invalid(format!("theta {theta} outside [{lo}, {hi}]")));
                }
                if !(tolerance >= 0.0 && tolerance.is_finite()) {
                    return Err(invalid(format!("tolerance {tolerance} must be >= 0")));
                }
            }
            PreferenceKind::Peaked { theta, tolerance } => {
                if !(lo..=hi).contains(&theta) {
                    return Err(invalid(format!("theta {theta} outside [{lo}, {hi}]")));
                }
                if !(tolerance > 0.0 && tolerance.is_finite()) {
                    return Err(invalid(format!("tolerance {tolerance} must be > 0")));
                }
            }
            _ => {}
        }
        Ok(BoundPreference {
            attr: idx,
            kind: self.kind.clone(),
            weight: self.weight as f64,
            lo,
            range: hi - lo,
        })
    }

    pub fn cost(&self, catalog: &Catalog, option: &OptionRecord) -> Result<f64> {
        Ok(self.bind(catalog)?.cost(option))
    }

    pub fn compare(
        &self,
        catalog: &Catalog,
        o1: &OptionRecord,
        o2: &OptionRecord,
    ) -> Result<Comparison> {
        let bound = self.bind(catalog)?;
        Ok(Comparison::from_costs(bound.cost(o1), bound.cost(o2)))
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PreferenceKind::QualitativeValue { theta } => write!(f, "{} = {theta}", self.attr),
            PreferenceKind::Directional { direction } => match direction {
                Direction::SmallerBetter => write!(f, "{} smaller", self.attr),
                Direction::LargerBetter => write!(f, "{} larger", self.attr),
            },
            PreferenceKind::Threshold {
                polarity, theta, ..
            } => match polarity {
                Polarity::LessThan => write!(f, "{} < {theta}", self.attr),
                Polarity::GreaterThan => write!(f, "{} > {theta}", self.attr),
            },
            PreferenceKind::Peaked { theta, .. } => write!(f, "{} ~ {theta}", self.attr),
        }?;
        write!(f, " (w{})", self.weight)
    }
}

/// A preference resolved against a schema: attribute index and domain cached.
#[derive(Debug, Clone)]
pub struct BoundPreference {
    pub attr: usize,
    pub kind: PreferenceKind,
    pub weight: f64,
    lo: f64,
    range: f64,
}

impl BoundPreference {
    /// Cost in [0,1]; 0 is fully satisfied.
    pub fn cost(&self, option: &OptionRecord) -> f64 {
        match &self.kind {
            PreferenceKind::QualitativeValue { theta } => {
                if option.label(self.attr) == theta {
                    0.0
                } else {
                    1.0
                }
            }
            PreferenceKind::Directional { direction } => {
                let x = (option.num(self.attr) - self.lo) / self.range;
                match direction {
                    Direction::SmallerBetter => x,
                    Direction::LargerBetter => 1.0 - x,
                }
                .clamp(0.0, 1.0)
            }
            PreferenceKind::Threshold {
                polarity,
                theta,
                tolerance,
            } => {
                let x = option.num(self.attr);
                let excess = match polarity {
                    Polarity::LessThan => x - theta,
                    Polarity::GreaterThan => theta - x,
                };
                ramp(excess, *tolerance)
            }
            PreferenceKind::Peaked { theta, tolerance } => {
                ramp((option.num(self.attr) - theta).abs(), *tolerance)
            }
        }
    }
}

/// `min(1, excess / t)` for positive excess, 0 otherwise; a zero tolerance is
/// a step that jumps to 1 strictly past the threshold.
fn ramp(excess: f64, tolerance: f64) -> f64 {
    if excess <= 0.0 {
        0.0
    } else if tolerance <= 0.0 {
        1.0
    } else {
        (excess / tolerance).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combinator {
    #[default]
    WeightedSum,
    /// Fuzzy-CSP style minimum. Not dominance-preserving; diagnostics only.
    MinCombinator,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreferenceModel {
    pub preferences: Vec<Preference>,
    #[serde(skip)]
    pub combinator: Combinator,
}

impl PreferenceModel {
    pub fn new(preferences: Vec<Preference>) -> Self {
        Self {
            preferences,
            combinator: Combinator::WeightedSum,
        }
    }

    pub fn with_combinator(mut self, combinator: Combinator) -> Self {
        self.combinator = combinator;
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let preferences: Vec<Preference> = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Ok(Self::new(preferences))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.preferences).expect("preferences serialize")
    }

    pub fn len(&self) -> usize {
        self.preferences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preferences.is_empty()
    }

    /// Attributes that carry at least one stated preference.
    pub fn stated_attributes(&self, catalog: &Catalog) -> Result<HashSet<usize>> {
        self.preferences
            .iter()
            .map(|p| catalog.attr_index(&p.attr))
            .collect()
    }

    pub fn with(&self, preference: Preference) -> Self {
        let mut next = self.clone();
        next.preferences.push(preference);
        next
    }

    pub fn bind(&self, catalog: &Catalog) -> Result<Vec<BoundPreference>> {
        let mut directional = HashSet::new();
        let mut bound = Vec::with_capacity(self.preferences.len());
        for pref in &self.preferences {
            let b = pref.bind(catalog)?;
            if matches!(pref.kind, PreferenceKind::Directional { .. })
                && !directional.insert(b.attr)
            {
                return Err(Error::Preference {
                    attr: pref.attr.clone(),
                    message: "more than one directional preference".into(),
                });
            }
            bound.push(b);
        }
        Ok(bound)
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        self.bind(catalog).map(|_| ())
    }

    pub fn utility(&self, catalog: &Catalog, option: &OptionRecord) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyModel);
        }
        let bound = self.bind(catalog)?;
        let costs: Vec<f64> = bound.iter().map(|b| b.cost(option)).collect();
        Ok(combine(self.combinator, &bound, &costs))
    }

    pub fn pareto_dominates(
        &self,
        catalog: &Catalog,
        o1: &OptionRecord,
        o2: &OptionRecord,
    ) -> Result<bool> {
        if self.is_empty() {
            return Err(Error::EmptyModel);
        }
        let bound = self.bind(catalog)?;
        let c1: Vec<f64> = bound.iter().map(|b| b.cost(o1)).collect();
        let c2: Vec<f64> = bound.iter().map(|b| b.cost(o2)).collect();
        Ok(pareto_cmp(&c1, &c2) == Some(Ordering::Greater))
    }

    /// Per-option costs and utilities for the whole catalog.
    pub fn evaluate(&self, catalog: &Catalog) -> Result<ModelEvaluation> {
        if self.is_empty() {
            return Err(Error::EmptyModel);
        }
        let bound = self.bind(catalog)?;
        let costs: Vec<Vec<f64>> = catalog
            .options()
            .iter()
            .map(|o| bound.iter().map(|b| b.cost(o)).collect())
            .collect();
        let utilities = costs
            .iter()
            .map(|c| combine(self.combinator, &bound, c))
            .collect();
        Ok(ModelEvaluation { costs, utilities })
    }

    /// The `k` best options by utility, best first; ties go to the smaller id.
    pub fn top_k_candidates(&self, catalog: &Catalog, k: usize) -> Result<Vec<usize>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let eval = self.evaluate(catalog)?;
        Ok(eval.ranking(catalog).into_iter().take(k).collect())
    }

    pub fn build_dominance_index(
        &self,
        catalog: &Catalog,
        criterion: Criterion,
    ) -> Result<DominanceIndex> {
        let eval = self.evaluate(catalog)?;
        Ok(DominanceIndex::from_evaluation(&eval, criterion))
    }
}

fn combine(combinator: Combinator, bound: &[BoundPreference], costs: &[f64]) -> f64 {
    match combinator {
        Combinator::WeightedSum => bound
            .iter()
            .zip(costs)
            .map(|(b, c)| b.weight * (1.0 - c))
            .sum(),
        Combinator::MinCombinator => costs
            .iter()
            .map(|c| 1.0 - c)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Pareto comparison of two cost vectors: `Greater` when the first dominates,
/// `Less` when it is dominated, `Equal` when tied everywhere, `None` when
/// incomparable.
pub fn pareto_cmp(c1: &[f64], c2: &[f64]) -> Option<Ordering> {
    let mut better = false;
    let mut worse = false;
    for (a, b) in c1.iter().zip(c2) {
        if a < b {
            better = true;
        } else if a > b {
            worse = true;
        }
        if better && worse {
            return None;
        }
    }
    Some(match (better, worse) {
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => Ordering::Equal,
    })
}

#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    /// `costs[option][preference]`
    pub costs: Vec<Vec<f64>>,
    pub utilities: Vec<f64>,
}

impl ModelEvaluation {
    pub fn utility_key(&self, option: usize) -> i64 {
        (self.utilities[option] * UTILITY_SCALE).round() as i64
    }

    /// All options, best utility first, ties by ascending id.
    pub fn ranking(&self, catalog: &Catalog) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.utilities.len()).collect();
        order.sort_by(|&a, &b| {
            self.utility_key(b)
                .cmp(&self.utility_key(a))
                .then_with(|| catalog.options()[a].id.cmp(&catalog.options()[b].id))
        });
        order
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Pareto,
    Utility,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pareto" => Ok(Criterion::Pareto),
            "utility" => Ok(Criterion::Utility),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Dominating and equal sets for every option of a catalog, as ascending
/// option indices. Neither set ever contains the option itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceIndex {
    pub criterion: Criterion,
    dominators: Vec<Vec<usize>>,
    equals: Vec<Vec<usize>>,
}

impl DominanceIndex {
    pub fn from_evaluation(eval: &ModelEvaluation, criterion: Criterion) -> Self {
        match criterion {
            Criterion::Pareto => Self::pareto(&eval.costs),
            Criterion::Utility => {
                let keys: Vec<i64> = (0..eval.utilities.len())
                    .map(|i| eval.utility_key(i))
                    .collect();
                Self::utility(&keys)
            }
        }
    }

    /// Pairwise construction, O(n² m).
    pub fn pareto(costs: &[Vec<f64>]) -> Self {
        let n = costs.len();
        let mut dominators = vec![Vec::new(); n];
        let mut equals = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                match pareto_cmp(&costs[i], &costs[j]) {
                    Some(Ordering::Greater) => dominators[j].push(i),
                    Some(Ordering::Less) => dominators[i].push(j),
                    Some(Ordering::Equal) => {
                        equals[i].push(j);
                        equals[j].push(i);
                    }
                    None => {}
                }
            }
        }
        for e in &mut equals {
            e.sort_unstable();
        }
        Self {
            criterion: Criterion::Pareto,
            dominators,
            equals,
        }
    }

    fn utility(keys: &[i64]) -> Self {
        let n = keys.len();
        let mut dominators = vec![Vec::new(); n];
        let mut equals = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                match keys[j].cmp(&keys[i]) {
                    Ordering::Greater => dominators[i].push(j),
                    Ordering::Equal => equals[i].push(j),
                    Ordering::Less => {}
                }
            }
        }
        Self {
            criterion: Criterion::Utility,
            dominators,
            equals,
        }
    }

    pub fn len(&self) -> usize {
        self.dominators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dominators.is_empty()
    }

    pub fn dominators(&self, option: usize) -> &[usize] {
        &self.dominators[option]
    }

    pub fn equals(&self, option: usize) -> &[usize] {
        &self.equals[option]
    }

    /// Dominators followed by equals.
    pub fn potential_dominators(&self, option: usize) -> impl Iterator<Item = usize> + '_ {
        self.dominators[option]
            .iter()
            .chain(&self.equals[option])
            .copied()
    }

    pub fn is_optimal(&self, option: usize) -> bool {
        self.dominators[option].is_empty()
    }

    pub fn dominator_ids<'c>(&self, catalog: &'c Catalog, option: usize) -> Vec<&'c str> {
        self.dominators[option]
            .iter()
            .map(|&i| catalog.options()[i].id.as_str())
            .collect()
    }

    pub fn equal_ids<'c>(&self, catalog: &'c Catalog, option: usize) -> Vec<&'c str> {
        self.equals[option]
            .iter()
            .map(|&i| catalog.options()[i].id.as_str())
            .collect()
    }
}

/// Wire form of a preference: `{attr, variant, theta?, direction?, polarity?, tolerance_t?, weight}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferenceDoc {
    attr: String,
    variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance_t: Option<f64>,
    weight: u8,
}

impl TryFrom<PreferenceDoc> for Preference {
    type Error = String;

    fn try_from(doc: PreferenceDoc) -> std::result::Result<Self, String> {
        let num_theta = || -> std::result::Result<f64, String> {
            doc.theta
                .as_ref()
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| format!("`{}`: {} needs a numeric theta", doc.attr, doc.variant))
        };
        let kind = match doc.variant.as_str() {
            "qualitative_value" => PreferenceKind::QualitativeValue {
                theta: match &doc.theta {
                    Some(serde_json::Value::String(s)) => s.clone(),
                    _ => return Err(format!("`{}`: qualitative_value needs a label theta", doc.attr)),
                },
            },
            "directional" => PreferenceKind::Directional {
                direction: doc
                    .direction
                    .ok_or_else(|| format!("`{}`: directional needs direction", doc.attr))?,
            },
            "threshold" => PreferenceKind::Threshold {
                polarity: doc
                    .polarity
                    .ok_or_else(|| format!("`{}`: threshold needs polarity", doc.attr))?,
                theta: num_theta()?,
                tolerance: doc.tolerance_t.unwrap_or(0.0),
            },
            "peaked" => PreferenceKind::Peaked {
                theta: num_theta()?,
                tolerance: doc
                    .tolerance_t
                    .ok_or_else(|| format!("`{}`: peaked needs tolerance_t", doc.attr))?,
            },
            other => return Err(format!("unknown preference variant `{other}`")),
        };
        Ok(Preference {
            attr: doc.attr,
            kind,
            weight: doc.weight,
        })
    }
}

impl From<Preference> for PreferenceDoc {
    fn from(p: Preference) -> Self {
        let mut doc = PreferenceDoc {
            attr: p.attr,
            variant: p.kind.variant_name().to_string(),
            theta: None,
            direction: None,
            polarity: None,
            tolerance_t: None,
            weight: p.weight,
        };
        match p.kind {
            PreferenceKind::QualitativeValue { theta } => doc.theta = Some(theta.into()),
            PreferenceKind::Directional { direction } => doc.direction = Some(direction),
            PreferenceKind::Threshold {
                polarity,
                theta,
                tolerance,
            } => {
                doc.polarity = Some(polarity);
                doc.theta = Some(theta.into());
                doc.tolerance_t = Some(tolerance);
            }
            PreferenceKind::Peaked { theta, tolerance } => {
                doc.theta = Some(theta.into());
                doc.tolerance_t = Some(tolerance);
            }
        }
        doc
    }
}
