//! Event-sourced critiquing sessions.
//!
//! A session is its metadata plus an append-only list of [`Event`]s. The
//! preference model, the cycle counter and the closing summary are a pure
//! fold over that list; live requests build the next events first and then
//! apply them through the same fold, so a replayed log always lands on the
//! state the live session had.

use std::collections::BTreeMap;

use critique_core::suggest::select_suggestions;
use critique_core::{
    AttrKind, Catalog, Criterion, Error as CoreError, Polarity, Preference, PreferenceModel,
    Strategy, SuggestionConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::{Result, ServiceError};

/// Interface variant of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Candidates only.
    #[serde(rename = "C", alias = "candidates_only")]
    Candidates,
    /// Candidates plus suggestions.
    #[serde(rename = "C+S", alias = "candidates_plus_suggestions")]
    CandidatesSuggestions,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Candidates => "C",
            Mode::CandidatesSuggestions => "C+S",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "candidates_only" => Ok(Mode::Candidates),
            "C+S" | "C S" | "candidates_plus_suggestions" => Ok(Mode::CandidatesSuggestions),
            other => Err(ServiceError::validation(
                format!("unknown mode `{other}`; expected `C` or `C+S`"),
                Some("mode"),
            )),
        }
    }
}

/// Display sizes, suggestion scoring and the shapes used for relational
/// preferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Candidates shown in mode `C`.
    pub candidates_only: usize,
    /// Candidates shown in mode `C+S`.
    pub candidates: usize,
    /// Suggestions shown in mode `C+S`.
    pub suggestions: usize,
    /// Scoring of suggestions; `set_size` is taken from `suggestions`.
    pub suggestion: SuggestionConfig,
    /// Half-width of the peak behind `equal` on numeric attributes, as a
    /// fraction of the range.
    pub equal_tolerance: f64,
    /// Ramp width behind `less` / `greater`, as a fraction of the range.
    pub threshold_tolerance: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            candidates_only: 6,
            candidates: 3,
            suggestions: 3,
            suggestion: SuggestionConfig {
                strategy: Strategy::ProbJoint,
                criterion: Criterion::Utility,
                ..SuggestionConfig::default()
            },
            equal_tolerance: 0.05,
            threshold_tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PrefsAdded,
    PrefsChanged,
    PrefsRemoved,
    DisplayShown,
    FinalChoice,
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub session: String,
    /// Position in the log, starting at 0.
    pub seq: u64,
    /// Display cycle the event belongs to: preference edits carry the cycle
    /// they react to, a display carries the cycle it opens.
    pub cycle: u64,
    pub kind: EventKind,
    pub payload: Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMeta {
    pub id: String,
    pub catalog_id: String,
    pub mode: Mode,
    pub created: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    Add,
    Change,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Less,
    Greater,
    Equal,
}

/// A requested change to the preference model.
///
/// `add` and `change` carry either a full `preference` in the exchange
/// format or the relational form `attr` / `operator` / `value` / `weight`;
/// `change` and `remove` address an existing preference by `index`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edit {
    pub op: Option<EditOp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preference: Option<Preference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<Operator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<u8>,
}

impl Edit {
    pub fn add(preference: Preference) -> Self {
        Self {
            op: Some(EditOp::Add),
            preference: Some(preference),
            ..Self::default()
        }
    }

    pub fn relational(attr: &str, operator: Operator, value: Json, weight: u8) -> Self {
        Self {
            op: Some(EditOp::Add),
            attr: Some(attr.to_string()),
            operator: Some(operator),
            value: Some(value),
            weight: Some(weight),
            ..Self::default()
        }
    }

    pub fn change(index: usize, preference: Preference) -> Self {
        Self {
            op: Some(EditOp::Change),
            index: Some(index),
            preference: Some(preference),
            ..Self::default()
        }
    }

    pub fn remove(index: usize) -> Self {
        Self {
            op: Some(EditOp::Remove),
            index: Some(index),
            ..Self::default()
        }
    }

    /// The preference this edit introduces, resolved against the catalog.
    fn preference(&self, catalog: &Catalog, config: &ServiceConfig) -> Result<Preference> {
        let preference = match (&self.preference, &self.attr) {
            (Some(p), None) => p.clone(),
            (None, Some(attr)) => relational(self, attr, catalog, config)?,
            (Some(_), Some(_)) => {
                return Err(ServiceError::validation(
                    "give either `preference` or the relational fields, not both",
                    Some("preference"),
                ))
            }
            (None, None) => {
                return Err(ServiceError::validation(
                    "missing `preference` (or `attr`/`operator`/`value`/`weight`)",
                    Some("preference"),
                ))
            }
        };
        preference.bind(catalog)?;
        Ok(preference)
    }
}

fn relational(
    edit: &Edit,
    attr: &str,
    catalog: &Catalog,
    config: &ServiceConfig,
) -> Result<Preference> {
    let schema = catalog.attribute(attr)?;
    let operator = edit
        .operator
        .ok_or_else(|| ServiceError::validation("missing `operator`", Some("operator")))?;
    let weight = edit
        .weight
        .ok_or_else(|| ServiceError::validation("missing `weight`", Some("weight")))?;
    let value = edit
        .value
        .as_ref()
        .ok_or_else(|| ServiceError::validation("missing `value`", Some("value")))?;
    match &schema.kind {
        AttrKind::Numeric { lo, hi, .. } => {
            let theta = value.as_f64().ok_or_else(|| {
                ServiceError::validation(format!("`{attr}` takes a number"), Some("value"))
            })?;
            let range = hi - lo;
            Ok(match operator {
                Operator::Less => Preference::threshold(
                    attr,
                    Polarity::LessThan,
                    theta,
                    config.threshold_tolerance * range,
                    weight,
                ),
                Operator::Greater => Preference::threshold(
                    attr,
                    Polarity::GreaterThan,
                    theta,
                    config.threshold_tolerance * range,
                    weight,
                ),
                Operator::Equal => {
                    Preference::peaked(attr, theta, config.equal_tolerance * range, weight)
                }
            })
        }
        AttrKind::Qualitative { .. } => match operator {
            Operator::Equal => {
                let label = value.as_str().ok_or_else(|| {
                    ServiceError::validation(format!("`{attr}` takes a label"), Some("value"))
                })?;
                Ok(Preference::qualitative(attr, label, weight))
            }
            _ => Err(ServiceError::validation(
                format!("`{attr}` is unordered; only `equal` applies"),
                Some("operator"),
            )),
        },
    }
}

/// Option ids shown in one cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplayIds {
    pub candidates: Vec<String>,
    pub suggestions: Vec<String>,
}

impl DisplayIds {
    pub fn contains(&self, id: &str) -> bool {
        self.candidates.iter().chain(&self.suggestions).any(|c| c == id)
    }
}

/// What a closed session records about itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub option_id: String,
    pub cycles: u64,
    /// Preferences stated before the first display.
    pub initial_preferences: usize,
    /// Preferences in the model at the final choice.
    pub final_preferences: usize,
    pub increment: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Indexed {
    index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    before: Option<Preference>,
    preference: Preference,
}

/// Folded state of a session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionState {
    pub model: Vec<Preference>,
    pub cycle: u64,
    pub last_display: Option<DisplayIds>,
    pub initial_preferences: Option<usize>,
    pub summary: Option<Summary>,
}

impl SessionState {
    pub fn is_closed(&self) -> bool {
        self.summary.is_some()
    }

    pub fn model(&self) -> PreferenceModel {
        PreferenceModel::new(self.model.clone())
    }

    fn apply(&mut self, event: &Event) -> Result<()> {
        let corrupt = |detail: String| ServiceError::Replay {
            seq: event.seq,
            detail,
        };
        if self.is_closed() {
            return Err(corrupt("event after the final choice".into()));
        }
        match event.kind {
            EventKind::PrefsAdded | EventKind::PrefsChanged | EventKind::PrefsRemoved => {
                let edit: Indexed = serde_json::from_value(event.payload.clone())?;
                match event.kind {
                    EventKind::PrefsAdded if edit.index == self.model.len() => {
                        self.model.push(edit.preference)
                    }
                    EventKind::PrefsChanged if edit.index < self.model.len() => {
                        self.model[edit.index] = edit.preference
                    }
                    EventKind::PrefsRemoved
                        if self.model.get(edit.index) == Some(&edit.preference) =>
                    {
                        self.model.remove(edit.index);
                    }
                    _ => return Err(corrupt(format!("edit at index {} does not apply", edit.index))),
                }
            }
            EventKind::DisplayShown => {
                if event.cycle != self.cycle + 1 {
                    return Err(corrupt(format!(
                        "display for cycle {} after cycle {}",
                        event.cycle, self.cycle
                    )));
                }
                self.cycle = event.cycle;
                self.initial_preferences.get_or_insert(self.model.len());
                self.last_display = Some(serde_json::from_value(event.payload.clone())?);
            }
            EventKind::FinalChoice => {
                self.summary = Some(serde_json::from_value(event.payload.clone())?);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub meta: SessionMeta,
    pub events: Vec<Event>,
    pub state: SessionState,
}

/// Candidates and suggestions for a model, as catalog indices.
pub fn compute_display(
    catalog: &Catalog,
    config: &ServiceConfig,
    mode: Mode,
    model: &PreferenceModel,
    cycle: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if model.is_empty() {
        return Err(ServiceError::EmptyModel);
    }
    let (n_candidates, n_suggestions) = match mode {
        Mode::Candidates => (config.candidates_only, 0),
        Mode::CandidatesSuggestions => (config.candidates, config.suggestions),
    };
    let candidates = if n_candidates > 0 {
        model.top_k_candidates(catalog, n_candidates)?
    } else {
        Vec::new()
    };
    let suggestions = if n_suggestions > 0 {
        let scoring = SuggestionConfig {
            set_size: n_suggestions,
            seed: config.suggestion.seed.wrapping_add(cycle),
            ..config.suggestion.clone()
        };
        let index = model.build_dominance_index(catalog, scoring.criterion)?;
        match select_suggestions(catalog, model, &index, &scoring, &candidates) {
            Ok(set) => set.options,
            Err(CoreError::NoUnstatedAttributes) => Vec::new(),
            Err(e) => return Err(e.into()),
        }
    } else {
        Vec::new()
    };
    Ok((candidates, suggestions))
}

fn ids(catalog: &Catalog, indices: &[usize]) -> Vec<String> {
    indices
        .iter()
        .map(|&i| catalog.options()[i].id.clone())
        .collect()
}

impl Session {
    pub fn new(meta: SessionMeta) -> Self {
        Self {
            meta,
            events: Vec::new(),
            state: SessionState::default(),
        }
    }

    /// Rebuild a session from its log without consulting the catalog.
    pub fn fold(meta: SessionMeta, events: Vec<Event>) -> Result<Self> {
        let mut session = Self::new(meta);
        for event in events {
            session.check_sequence(&event)?;
            session.state.apply(&event)?;
            session.events.push(event);
        }
        Ok(session)
    }

    /// Rebuild a session and recompute every display, failing on the first
    /// one that differs from the log.
    pub fn replay(
        meta: SessionMeta,
        events: Vec<Event>,
        catalog: &Catalog,
        config: &ServiceConfig,
    ) -> Result<Self> {
        let mut session = Self::new(meta);
        for event in events {
            session.check_sequence(&event)?;
            if event.kind == EventKind::DisplayShown {
                let (c, s) = compute_display(
                    catalog,
                    config,
                    session.meta.mode,
                    &session.state.model(),
                    event.cycle,
                )?;
                let expected = DisplayIds {
                    candidates: ids(catalog, &c),
                    suggestions: ids(catalog, &s),
                };
                let logged: DisplayIds = serde_json::from_value(event.payload.clone())?;
                if logged != expected {
                    return Err(ServiceError::Replay {
                        seq: event.seq,
                        detail: format!("logged {logged:?}, recomputed {expected:?}"),
                    });
                }
            }
            session.state.apply(&event)?;
            session.events.push(event);
        }
        Ok(session)
    }

    fn check_sequence(&self, event: &Event) -> Result<()> {
        let seq = self.events.len() as u64;
        if event.seq != seq || event.session != self.meta.id {
            return Err(ServiceError::Replay {
                seq: event.seq,
                detail: format!(
                    "expected event {seq} of session `{}`, found {} of `{}`",
                    self.meta.id, event.seq, event.session
                ),
            });
        }
        Ok(())
    }

    fn event(&self, offset: usize, ts: u64, cycle: u64, kind: EventKind, payload: Json) -> Event {
        Event {
            ts,
            session: self.meta.id.clone(),
            seq: (self.events.len() + offset) as u64,
            cycle,
            kind,
            payload,
        }
    }

    fn commit(&mut self, events: &[Event]) -> Result<()> {
        let mut next = self.state.clone();
        for event in events {
            next.apply(event)?;
        }
        self.state = next;
        self.events.extend_from_slice(events);
        Ok(())
    }

    fn ensure_open(&self) -> Result<()> {
        if self.state.is_closed() {
            Err(ServiceError::Closed(self.meta.id.clone()))
        } else {
            Ok(())
        }
    }

    /// Apply a batch of edits atomically; returns the appended events.
    pub fn update_preferences(
        &mut self,
        catalog: &Catalog,
        config: &ServiceConfig,
        edits: &[Edit],
        ts: u64,
    ) -> Result<Vec<Event>> {
        self.ensure_open()?;
        if edits.is_empty() {
            return Err(ServiceError::validation("no edits given", Some("edits")));
        }
        let mut model = self.state.model.clone();
        let mut events = Vec::with_capacity(edits.len());
        for edit in edits {
            let op = edit
                .op
                .ok_or_else(|| ServiceError::validation("missing `op`", Some("op")))?;
            let index_of = |len: usize| -> Result<usize> {
                match edit.index {
                    Some(i) if i < len => Ok(i),
                    Some(i) => Err(ServiceError::validation(
                        format!("no preference at index {i} (model has {len})"),
                        Some("index"),
                    )),
                    None => Err(ServiceError::validation("missing `index`", Some("index"))),
                }
            };
            let (kind, payload) = match op {
                EditOp::Add => {
                    let preference = edit.preference(catalog, config)?;
                    model.push(preference.clone());
                    let index = model.len() - 1;
                    let payload = Indexed {
                        index,
                        before: None,
                        preference,
                    };
                    (EventKind::PrefsAdded, payload)
                }
                EditOp::Change => {
                    let index = index_of(model.len())?;
                    let preference = edit.preference(catalog, config)?;
                    let before = std::mem::replace(&mut model[index], preference.clone());
                    let payload = Indexed {
                        index,
                        before: Some(before),
                        preference,
                    };
                    (EventKind::PrefsChanged, payload)
                }
                EditOp::Remove => {
                    let index = index_of(model.len())?;
                    let preference = model.remove(index);
                    let payload = Indexed {
                        index,
                        before: None,
                        preference,
                    };
                    (EventKind::PrefsRemoved, payload)
                }
            };
            let payload = serde_json::to_value(payload)?;
            events.push(self.event(events.len(), ts, self.state.cycle, kind, payload));
        }
        if !model.is_empty() {
            PreferenceModel::new(model).validate(catalog)?;
        }
        self.commit(&events)?;
        Ok(events)
    }

    /// Compute and record the next display.
    pub fn show_display(
        &mut self,
        catalog: &Catalog,
        config: &ServiceConfig,
        ts: u64,
    ) -> Result<(DisplayIds, Event)> {
        self.ensure_open()?;
        let cycle = self.state.cycle + 1;
        let (c, s) = compute_display(catalog, config, self.meta.mode, &self.state.model(), cycle)?;
        let display = DisplayIds {
            candidates: ids(catalog, &c),
            suggestions: ids(catalog, &s),
        };
        let event = self.event(
            0,
            ts,
            cycle,
            EventKind::DisplayShown,
            serde_json::to_value(&display)?,
        );
        self.commit(std::slice::from_ref(&event))?;
        Ok((display, event))
    }

    /// Close the session on an option from the latest display.
    pub fn choose(&mut self, option_id: &str, ts: u64) -> Result<(Summary, Event)> {
        self.ensure_open()?;
        let shown = self
            .state
            .last_display
            .as_ref()
            .is_some_and(|d| d.contains(option_id));
        if !shown {
            return Err(ServiceError::validation(
                format!("`{option_id}` is not in the latest display"),
                Some("option_id"),
            ));
        }
        let initial = self.state.initial_preferences.unwrap_or(0);
        let final_count = self.state.model.len();
        let summary = Summary {
            option_id: option_id.to_string(),
            cycles: self.state.cycle,
            initial_preferences: initial,
            final_preferences: final_count,
            increment: final_count as i64 - initial as i64,
        };
        let event = self.event(
            0,
            ts,
            self.state.cycle,
            EventKind::FinalChoice,
            serde_json::to_value(&summary)?,
        );
        self.commit(std::slice::from_ref(&event))?;
        Ok((summary, event))
    }
}

/// Means over closed sessions of one interface variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub mode: Mode,
    pub sessions: usize,
    pub cycles: f64,
    pub initial_preferences: f64,
    pub final_preferences: f64,
    pub increment: f64,
}

/// Per-mode means of cycles, initial and final preference counts and
/// increment. Open sessions are ignored; modes without closed sessions are
/// left out.
pub fn aggregate_stats<'a>(
    sessions: impl IntoIterator<Item = &'a Session>,
    mode: Option<Mode>,
) -> Vec<StatsRow> {
    let mut groups: BTreeMap<Mode, Vec<&Summary>> = BTreeMap::new();
    for session in sessions {
        if mode.is_some_and(|m| m != session.meta.mode) {
            continue;
        }
        if let Some(summary) = &session.state.summary {
            groups.entry(session.meta.mode).or_default().push(summary);
        }
    }
    groups
        .into_iter()
        .map(|(mode, rows)| {
            let n = rows.len() as f64;
            let mean = |f: fn(&Summary) -> f64| rows.iter().map(|s| f(s)).sum::<f64>() / n;
            StatsRow {
                mode,
                sessions: rows.len(),
                cycles: mean(|s| s.cycles as f64),
                initial_preferences: mean(|s| s.initial_preferences as f64),
                final_preferences: mean(|s| s.final_preferences as f64),
                increment: mean(|s| s.increment as f64),
            }
        })
        .collect()
}
