//! HTTP API over the analysis engine, with optional journal persistence.

mod api;
mod config;
mod journal;

pub use api::{analysis_document, parse_analyze_request, router, ChatResponse};
pub use config::{ServiceConfig, ServiceConfigError, DEFAULT_MAX_BODY_BYTES, DEFAULT_PORT};
pub use journal::{replay_journal, JournalError, JournalSink};

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use provcheck_core::engine::{Engine, Store};
use provcheck_core::llm::CompletionBackend;
use thiserror::Error;
use tokio::net::TcpListener;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ServiceConfigError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

/// Builds the engine, replaying the journal first when one is configured.
pub fn build_engine(config: &ServiceConfig, backend: Arc<dyn CompletionBackend>) -> Result<Engine, ServiceError> {
    config.validate()?;
    let store = match &config.journal_path {
        Some(path) => {
            let sink = JournalSink::open(path)?;
            let store = Store::with_sink(Arc::new(sink));
            let n = replay_journal(path, &store)?;
            tracing::info!(path = %path.display(), events = n, "journal replayed");
            store
        }
        None => Store::new(),
    };
    Ok(Engine::with_store(config.engine.clone(), backend, store))
}

/// A service whose socket is already bound.
pub struct BoundService {
    listener: TcpListener,
    engine: Arc<Engine>,
    max_body_bytes: usize,
    cors_origins: Option<Vec<String>>,
}

impl BoundService {
    pub async fn bind(config: &ServiceConfig, backend: Arc<dyn CompletionBackend>) -> Result<Self, ServiceError> {
        let engine = Arc::new(build_engine(config, backend)?);
        let addr = SocketAddr::new(config.bind_address, config.port);
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServiceError::Bind { addr, source })?;
        Ok(Self {
            listener,
            engine,
            max_body_bytes: config.max_body_bytes,
            cors_origins: config.cors_origins.clone(),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn serve(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        let app = router(self.engine.clone(), self.max_body_bytes, self.cors_origins.as_deref());
        axum::serve(self.listener, app)
            .with_graceful_shutdown(shutdown)
            .await
            .map_err(ServiceError::Serve)
    }
}
