//! Catalogs and sessions behind the HTTP layer, with optional persistence.
//!
//! Layout of a data directory:
//!
//! ```text
//! catalogs/<id>.json       uploaded catalogs, exchange format
//! sessions/<id>.json       session metadata
//! sessions/<id>.jsonl      session event log, one event per line
//! ```
//!
//! Every mutation runs on a copy of the session under its lock; the new
//! events reach the log before the copy replaces the live session, so a
//! failed write leaves both untouched.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use critique_core::fixtures::{housing, listings};
use critique_core::{Catalog, CatalogFormat, Preference};
use serde::Serialize;
use serde_json::{Map, Value as Json};

use crate::error::{Result, ServiceError};
use crate::session::{
    aggregate_stats, Edit, Event, Mode, ServiceConfig, Session, SessionMeta,
    StatsRow, Summary,
};

pub const BUILTIN_CATALOGS: [&str; 2] = ["housing", "listings"];

type Clock = Box<dyn Fn() -> u64 + Send + Sync>;

fn wall_clock() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogInfo {
    pub id: String,
    pub builtin: bool,
    pub options: usize,
    pub attributes: Vec<String>,
}

/// An option as shown to the user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionView {
    pub id: String,
    pub values: Map<String, Json>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplayView {
    pub session: String,
    pub cycle: u64,
    pub candidates: Vec<OptionView>,
    pub suggestions: Vec<OptionView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub meta: SessionMeta,
    pub cycle: u64,
    pub preferences: Vec<Preference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
}

impl SessionView {
    fn of(session: &Session) -> Self {
        Self {
            meta: session.meta.clone(),
            cycle: session.state.cycle,
            preferences: session.state.model.clone(),
            summary: session.state.summary.clone(),
        }
    }
}

pub struct Store {
    config: ServiceConfig,
    data_dir: Option<PathBuf>,
    catalogs: RwLock<BTreeMap<String, Arc<Catalog>>>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    clock: Clock,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("data_dir", &self.data_dir)
            .field("next_id", &self.next_id)
            .finish_non_exhaustive()
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Store {
    /// An in-memory store with the built-in catalogs.
    pub fn in_memory(config: ServiceConfig) -> Self {
        let catalogs = BTreeMap::from([
            ("housing".to_string(), Arc::new(housing())),
            ("listings".to_string(), Arc::new(listings())),
        ]);
        Self {
            config,
            data_dir: None,
            catalogs: RwLock::new(catalogs),
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
            clock: Box::new(wall_clock),
        }
    }

    /// A store persisted under `data_dir`, reloading whatever is there.
    ///
    /// Logs are folded, not replayed: a catalog edited since a session ran
    /// does not prevent the service from starting. [`Store::verify`]
    /// recomputes the displays on demand.
    pub fn open(data_dir: impl Into<PathBuf>, config: ServiceConfig) -> Result<Self> {
        let data_dir = data_dir.into();
        fs::create_dir_all(data_dir.join("catalogs"))?;
        fs::create_dir_all(data_dir.join("sessions"))?;
        let mut store = Self::in_memory(config);
        {
            let catalogs = store.catalogs.get_mut().unwrap();
            for path in sorted_entries(&data_dir.join("catalogs"), "json")? {
                let id = stem(&path);
                let catalog = Catalog::load_path(&path)?;
                catalogs.insert(id, Arc::new(catalog));
            }
        }
        let mut max_id = 0;
        {
            let sessions = store.sessions.get_mut().unwrap();
            for path in sorted_entries(&data_dir.join("sessions"), "json")? {
                let meta: SessionMeta = serde_json::from_str(&fs::read_to_string(&path)?)?;
                let events = read_events(&path.with_extension("jsonl"))?;
                if let Some(n) = meta.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                    max_id = max_id.max(n);
                }
                let session = Session::fold(meta, events)?;
                sessions.insert(session.meta.id.clone(), Arc::new(Mutex::new(session)));
            }
        }
        store.next_id = AtomicU64::new(max_id + 1);
        store.data_dir = Some(data_dir);
        Ok(store)
    }

    /// Replace the timestamp source (milliseconds since the epoch).
    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn catalog(&self, id: &str) -> Result<Arc<Catalog>> {
        self.catalogs
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound {
                what: "catalog",
                id: id.to_string(),
            })
    }

    pub fn list_catalogs(&self) -> Vec<CatalogInfo> {
        self.catalogs
            .read()
            .unwrap()
            .iter()
            .map(|(id, c)| CatalogInfo {
                id: id.clone(),
                builtin: BUILTIN_CATALOGS.contains(&id.as_str()),
                options: c.len(),
                attributes: c.schema().iter().map(|a| a.name.clone()).collect(),
            })
            .collect()
    }

    /// Register an uploaded catalog. Ids are never reused.
    pub fn add_catalog(&self, id: &str, catalog: Catalog) -> Result<CatalogInfo> {
        if !valid_id(id) {
            return Err(ServiceError::validation(
                "catalog ids are 1-64 characters of [A-Za-z0-9_-]",
                Some("id"),
            ));
        }
        let mut catalogs = self.catalogs.write().unwrap();
        if catalogs.contains_key(id) {
            return Err(ServiceError::Conflict(format!("catalog `{id}` already exists")));
        }
        if let Some(dir) = &self.data_dir {
            let path = dir.join("catalogs").join(format!("{id}.json"));
            catalog.save(fs::File::create(path)?, CatalogFormat::Json)?;
        }
        let info = CatalogInfo {
            id: id.to_string(),
            builtin: false,
            options: catalog.len(),
            attributes: catalog.schema().iter().map(|a| a.name.clone()).collect(),
        };
        catalogs.insert(id.to_string(), Arc::new(catalog));
        Ok(info)
    }

    pub fn create_session(&self, catalog_id: &str, mode: Mode) -> Result<SessionMeta> {
        self.catalog(catalog_id)?;
        let meta = SessionMeta {
            id: format!("s{:06}", self.next_id.fetch_add(1, Ordering::SeqCst)),
            catalog_id: catalog_id.to_string(),
            mode,
            created: (self.clock)(),
        };
        if let Some(dir) = &self.data_dir {
            let path = dir.join("sessions").join(format!("{}.json", meta.id));
            fs::write(&path, serde_json::to_string_pretty(&meta)?)?;
            fs::File::create(path.with_extension("jsonl"))?;
        }
        let session = Session::new(meta.clone());
        self.sessions
            .write()
            .unwrap()
            .insert(meta.id.clone(), Arc::new(Mutex::new(session)));
        tracing::info!(session = %meta.id, catalog = catalog_id, mode = mode.label(), "session created");
        Ok(meta)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound {
                what: "session",
                id: id.to_string(),
            })
    }

    /// Run `f` on a copy of the session, persist the events it returns,
    /// then swap the copy in.
    fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session, &Catalog, u64) -> Result<(T, Vec<Event>)>,
    ) -> Result<T> {
        let handle = self.session(id)?;
        let mut live = lock(&handle);
        let catalog = self.catalog(&live.meta.catalog_id)?;
        let mut next = live.clone();
        let (out, events) = f(&mut next, &catalog, (self.clock)())?;
        self.append(id, &events)?;
        *live = next;
        Ok(out)
    }

    fn append(&self, id: &str, events: &[Event]) -> Result<()> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let path = dir.join("sessions").join(format!("{id}.jsonl"));
        let mut text = String::new();
        for event in events {
            text.push_str(&serde_json::to_string(event)?);
            text.push('\n');
        }
        let mut file = OpenOptions::new().append(true).create(true).open(path)?;
        file.write_all(text.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    pub fn session_view(&self, id: &str) -> Result<SessionView> {
        let handle = self.session(id)?;
        let session = lock(&handle);
        Ok(SessionView::of(&session))
    }

    pub fn events(&self, id: &str) -> Result<Vec<Event>> {
        let handle = self.session(id)?;
        let events = lock(&handle).events.clone();
        Ok(events)
    }

    pub fn update_preferences(&self, id: &str, edits: &[Edit]) -> Result<SessionView> {
        self.mutate(id, |session, catalog, ts| {
            let events = session.update_preferences(catalog, &self.config, edits, ts)?;
            Ok((SessionView::of(session), events))
        })
    }

    pub fn display(&self, id: &str) -> Result<DisplayView> {
        self.mutate(id, |session, catalog, ts| {
            let (ids, event) = session.show_display(catalog, &self.config, ts)?;
            let view = DisplayView {
                session: session.meta.id.clone(),
                cycle: event.cycle,
                candidates: views(catalog, &ids.candidates),
                suggestions: views(catalog, &ids.suggestions),
            };
            Ok((view, vec![event]))
        })
    }

    pub fn choose(&self, id: &str, option_id: &str) -> Result<Summary> {
        self.mutate(id, |session, _, ts| {
            let (summary, event) = session.choose(option_id, ts)?;
            Ok((summary, vec![event]))
        })
    }

    /// Replay a session's log against its catalog.
    pub fn verify(&self, id: &str) -> Result<()> {
        let handle = self.session(id)?;
        let session = lock(&handle).clone();
        let catalog = self.catalog(&session.meta.catalog_id)?;
        Session::replay(session.meta, session.events, &catalog, &self.config)?;
        Ok(())
    }

    pub fn stats(&self, mode: Option<Mode>) -> Vec<StatsRow> {
        let handles: Vec<_> = self.sessions.read().unwrap().values().cloned().collect();
        let sessions: Vec<Session> = handles.iter().map(|h| lock(h).clone()).collect();
        aggregate_stats(&sessions, mode)
    }
}

fn views(catalog: &Catalog, ids: &[String]) -> Vec<OptionView> {
    ids.iter()
        .filter_map(|id| catalog.option_index(id))
        .map(|i| {
            let option = &catalog.options()[i];
            let values = catalog
                .schema()
                .iter()
                .zip(&option.values)
                .map(|(a, v)| (a.name.clone(), serde_json::to_value(v).unwrap_or(Json::Null)))
                .collect();
            OptionView {
                id: option.id.clone(),
                values,
            }
        })
        .collect()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sorted_entries(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == extension))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Read a JSONL event log; a missing file is an empty log.
pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut events = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line)?);
        }
    }
    Ok(events)
}
