use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;

use provcheck_core::engine::EngineConfig;
use thiserror::Error;

pub const DEFAULT_MAX_BODY_BYTES: usize = 2 * 1024 * 1024;
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: IpAddr,
    /// 0 asks the OS for a free port.
    pub port: u16,
    pub journal_path: Option<PathBuf>,
    pub engine: EngineConfig,
    pub max_body_bytes: usize,
    /// Allowed CORS origins. `None` allows any localhost origin.
    pub cors_origins: Option<Vec<String>>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind_address: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            journal_path: None,
            engine: EngineConfig::default(),
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
            cors_origins: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ServiceConfigError {
    #[error("journal directory {0} does not exist")]
    MissingJournalDir(PathBuf),
    #[error("max_body_bytes must be positive")]
    ZeroBodyLimit,
    #[error(transparent)]
    Model(#[from] provcheck_core::llm::ConfigError),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceConfigError> {
        if let Some(path) = &self.journal_path {
            let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
            if let Some(dir) = parent {
                if !dir.is_dir() {
                    return Err(ServiceConfigError::MissingJournalDir(dir.to_owned()));
                }
            }
        }
        if self.max_body_bytes == 0 {
            return Err(ServiceConfigError::ZeroBodyLimit);
        }
        self.engine.model.validate()?;
        Ok(())
    }
}
