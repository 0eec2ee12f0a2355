//! Optional JSON configuration file.
//!
//! A config file holds one section per subcommand, with snake_case keys
//! mirroring the command-line flags. Precedence: flags override config
//! values, config values override built-in defaults. Unknown keys are
//! rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spcal::{Error, Result};

use crate::{
    CalibrateArgs, CurveArgs, FdArgs, FitExponentArgs, ProfileArgs, ScanArgs, SeriesArgs,
    SimulateArgs,
};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: Option<u32>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub profile: ProfileArgs,
    #[serde(default)]
    pub curve: CurveArgs,
    #[serde(default)]
    pub simulate: SimulateArgs,
    #[serde(default)]
    pub calibrate: CalibrateArgs,
    #[serde(default)]
    pub fit_exponent: FitExponentArgs,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub scan: ScanArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub series: SeriesArgs,
    #[serde(default)]
    pub fd: FdArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: FileConfig = serde_json::from_str(&text).map_err(|e| {
            Error::config(format!(
                "invalid config {} at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        if let Some(v) = cfg.schema_version {
            if v != 1 {
                return Err(Error::config(format!(
                    "unsupported config schema_version {v}; this build reads version 1"
                )));
            }
        }
        Ok(cfg)
    }
}

/// Generates `merged(self, fallback)` taking each field from `self` when
/// present, else from `fallback` — the flag-over-config precedence rule.
macro_rules! merge_options {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl $t {
            pub fn merged(self, fallback: Self) -> Self {
                Self { $($f: self.$f.or(fallback.$f)),* }
            }
        }
    };
}
pub(crate) use merge_options;
