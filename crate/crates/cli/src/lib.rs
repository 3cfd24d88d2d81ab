//! Command-line front end for the maxdg experiments.

pub mod config;
pub mod run;

use anyhow::{Context, Result};

pub use config::{FileConfig, Overrides, RunConfig, Subcommand};
pub use run::{run, Metadata, Outcome};

/// Caps the rayon pool at `MAXDG_THREADS` workers if set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MAXDG_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("MAXDG_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            anyhow::bail!("MAXDG_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
