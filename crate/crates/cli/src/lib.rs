//! Config-driven front end: parse a run configuration, dispatch to one of the
//! engine modes and write CSV output.

pub mod config;
pub mod run;

use std::path::PathBuf;

pub use config::{parse_config, parse_config_with_mode, ConfigError, Mode, RunConfig};
pub use run::{run, RunError, RunOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub suppress_advanced: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(out) = &self.out {
            cfg.output.path = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.mc.seed = seed;
        }
        if self.suppress_advanced {
            cfg.wavepacket.suppress_advanced = true;
        }
    }
}
