//! HTTP API over the gaitdex library: upload a cohort, fit a pipeline,
//! then read per-subject reports, curve overlays and MAP comparisons.
//!
//! ```no_run
//! # async fn run() -> std::io::Result<()> {
//! let config = gaitdex_service::ServiceConfig::load(None).unwrap();
//! gaitdex_service::serve(config).await
//! # }
//! ```

pub mod api;
pub mod config;
pub mod error;
pub mod store;

pub use api::{router, AppState};
pub use config::ServiceConfig;
pub use error::{ApiError, ErrorBody};
pub use store::Store;

/// Build the application for `config`, opening the on-disk store if one is
/// configured.
pub fn app(config: &ServiceConfig) -> std::io::Result<axum::Router> {
    let store = match &config.data_dir {
        Some(dir) => Store::open(dir)?,
        None => Store::in_memory(),
    };
    Ok(router(AppState::new(store, config)))
}

/// Bind and serve until ctrl-c.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let app = app(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind_addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
