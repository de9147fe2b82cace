//! Guardrail gateway server. Configuration comes from `--config` or the
//! `GUARDRAIL_CONFIG` environment variable.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;

use trustrail::config::Config;
use trustrail::gateway::{router, GatewayState};

#[derive(Parser)]
#[command(name = "trustrail-gateway", about = "Trust-adaptive guardrail gateway", version)]
struct Cli {
    /// Config file; falls back to $GUARDRAIL_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_env_filter(
        tracing_subscriber::EnvFilter::try_from_default_env()
            .unwrap_or_else(|_| "info".into()),
    ).init();

    let cli = Cli::parse();
    let config_path = cli
        .config
        .or_else(|| std::env::var_os("GUARDRAIL_CONFIG").map(PathBuf::from))
        .context("no config: pass --config or set GUARDRAIL_CONFIG")?;
    let config = Config::load(&config_path)
        .with_context(|| format!("loading {}", config_path.display()))?;
    let listen = config.gateway.listen.clone();

    // Blocking HTTP clients own their own runtime, so the state must be
    // built before entering ours.
    let state = Arc::new(GatewayState::open(config).context("opening gateway state")?);

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let app = router(state);
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .with_context(|| format!("binding {listen}"))?;
        tracing::info!("listening on {listen}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
                tracing::info!("shutting down");
            })
            .await
            .context("serving")
    })
}
