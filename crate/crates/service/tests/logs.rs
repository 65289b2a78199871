use std::path::{Path, PathBuf};

use critique_core::fixtures::housing;
use critique_core::{Direction, Preference};
use critique_service::{
    read_events, Edit, Event, EventKind, Mode, Operator, ServiceConfig, ServiceError, Session,
    SessionMeta, Store,
};
use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Copy a fixture directory so opening it never touches the checked-in tree.
fn copy_fixture(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("sessions");
    std::fs::create_dir_all(&target).unwrap();
    for entry in std::fs::read_dir(fixture(name).join("sessions")).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, target.join(path.file_name().unwrap())).unwrap();
    }
    dir
}

fn recorded() -> (SessionMeta, Vec<Event>) {
    let dir = fixture("housing_session").join("sessions");
    let meta = serde_json::from_str(&std::fs::read_to_string(dir.join("s000001.json")).unwrap()).unwrap();
    (meta, read_events(&dir.join("s000001.jsonl")).unwrap())
}

#[test]
fn recorded_session_replays_exactly() {
    let (meta, events) = recorded();
    let replayed = Session::replay(meta.clone(), events.clone(), &housing(), &ServiceConfig::default()).unwrap();
    assert_eq!(replayed, Session::fold(meta, events).unwrap());
    let summary = replayed.state.summary.unwrap();
    assert_eq!(summary.option_id, "o4");
    assert_eq!((summary.cycles, summary.initial_preferences, summary.final_preferences), (3, 1, 3));
}

#[test]
fn altered_configuration_breaks_replay() {
    let (meta, events) = recorded();
    let config = ServiceConfig { candidates: 2, ..ServiceConfig::default() };
    let err = Session::replay(meta, events, &housing(), &config).unwrap_err();
    assert!(matches!(err, ServiceError::Replay { seq: 1, .. }), "{err}");
}

#[test]
fn dropped_events_are_detected() {
    let (meta, mut events) = recorded();
    events.remove(2);
    assert!(matches!(Session::fold(meta, events), Err(ServiceError::Replay { seq: 3, .. })));
}

#[test]
fn stats_match_hand_computed_means() {
    let dir = copy_fixture("stats_logs");
    let store = Store::open(dir.path(), ServiceConfig::default()).unwrap();
    let expected: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("stats_logs").join("expected.json")).unwrap()).unwrap();
    assert_eq!(json!({ "rows": store.stats(None) }), expected);
    let cs = store.stats(Some(Mode::CandidatesSuggestions));
    assert_eq!(cs.len(), 1);
    assert_eq!(cs[0].increment, 2.5);
}

#[test]
fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig::default();
    let id = {
        let store = Store::open(dir.path(), config.clone()).unwrap();
        let meta = store.create_session("housing", Mode::CandidatesSuggestions).unwrap();
        let cheaper = Preference::directional("rent", Direction::SmallerBetter, 1);
        store.update_preferences(&meta.id, &[Edit::add(cheaper)]).unwrap();
        store.display(&meta.id).unwrap();
        meta.id
    };
    let store = Store::open(dir.path(), config).unwrap();
    store.verify(&id).unwrap();
    let view = store.session_view(&id).unwrap();
    assert_eq!(view.cycle, 1);
    let edit = Edit::relational("distance", Operator::Less, json!(12), 2);
    store.update_preferences(&id, &[edit]).unwrap();
    let display = store.display(&id).unwrap();
    store.choose(&id, &display.candidates[0].id).unwrap();
    let events = store.events(&id).unwrap();
    assert_eq!(events.len(), 5);
    assert!(events.iter().enumerate().all(|(i, e)| e.seq == i as u64));
    assert_eq!(events.last().unwrap().kind, EventKind::FinalChoice);
    let next = store.create_session("listings", Mode::Candidates).unwrap();
    assert_eq!(next.id, "s000002");
    let on_disk = read_events(&dir.path().join("sessions").join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(on_disk, events);
}

#[test]
fn uploaded_catalogs_persist() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path(), ServiceConfig::default()).unwrap();
        store.add_catalog("mine", housing()).unwrap();
        assert!(matches!(store.add_catalog("housing", housing()), Err(ServiceError::Conflict(_))));
    }
    let store = Store::open(dir.path(), ServiceConfig::default()).unwrap();
    assert_eq!(*store.catalog("mine").unwrap(), housing());
}
