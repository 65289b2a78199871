//! HTTP service for live critiquing sessions.
//!
//! Each session alternates between preference edits and displays of
//! candidates (and, in the `C+S` variant, suggestions) until the user picks
//! an option. Everything a session does is recorded as events, so logs can
//! be replayed, verified and aggregated into per-variant statistics.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use api::router;
pub use error::{Result, ServiceError};
pub use session::{
    aggregate_stats, compute_display, DisplayIds, Edit, EditOp, Event, EventKind, Mode, Operator,
    ServiceConfig, Session, SessionMeta, SessionState, StatsRow, Summary,
};
pub use store::{read_events, Store};

/// Where the server listens and what it persists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    /// Without a data directory sessions live in memory only.
    pub data_dir: Option<PathBuf>,
    pub session: ServiceConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: None,
            session: ServiceConfig::default(),
        }
    }
}

impl ServerConfig {
    pub fn store(&self) -> Result<Store> {
        match &self.data_dir {
            Some(dir) => Store::open(dir, self.session.clone()),
            None => Ok(Store::in_memory(self.session.clone())),
        }
    }
}

/// Serve until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<()> {
    let store = Arc::new(config.store()?);
    serve_store(config.addr, store).await
}

/// Serve an existing store until Ctrl-C.
pub async fn serve_store(addr: SocketAddr, store: Arc<Store>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
