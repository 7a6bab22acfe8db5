//! HTTP service and command-line front end.

pub mod app;
pub mod cli;
pub mod config;
pub mod error;
pub mod routes;

use config::Config;

/// Serves the API on `cfg.bind` until interrupted.
pub async fn serve(cfg: Config) -> Result<(), String> {
    let repo = app::Repository::from_config(&cfg)?;
    let state = routes::AppState::new(repo, cfg.api_token.clone());
    let listener = tokio::net::TcpListener::bind(&cfg.bind).await.map_err(|e| format!("{}: {e}", cfg.bind))?;
    tracing::info!(bind = %cfg.bind, data = %cfg.data_dir.display(), "listening");
    axum::serve(listener, routes::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
