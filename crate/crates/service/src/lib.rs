//! HTTP API exposing coaching sessions to the console and to scripts.

pub mod api;
pub mod error;
pub mod state;

pub use api::{router, CreateSession, SessionCreated, SessionSummary, TOKEN_HEADER};
pub use error::ApiError;
pub use state::{ApiSession, AppState};

/// Schema of every request and response body.
pub const OPENAPI: &str = include_str!("../openapi.json");

/// Bind `addr` and serve until the process exits.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
