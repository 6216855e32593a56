//! Shared defaults file (TOML). Command-line flags override it.

use std::fs;
use std::net::SocketAddr;
use std::path::Path;

use clap::ValueEnum;
use itskit::dataset_io::RecorderMode;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub gateway: GatewayDefaults,
    pub recorder: RecorderDefaults,
    pub trim: TrimDefaults,
    pub analyze: AnalyzeDefaults,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayDefaults {
    pub listen: Option<SocketAddr>,
    pub skip_octets: Option<usize>,
    pub forward: Option<SocketAddr>,
    pub queue_capacity: Option<usize>,
    pub tick_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecorderDefaults {
    pub mode: Option<RecorderMode>,
    pub dt_a_s: Option<f64>,
    pub dt_b_s: Option<f64>,
    pub d_min_m: Option<f64>,
    pub label: Option<String>,
    /// Fixed ego position `[lat, lon]` or `[lat, lon, alt]`.
    pub static_ego: Option<Vec<f64>>,
    pub gnss_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrimDefaults {
    pub lead_s: Option<f64>,
    pub trail_s: Option<f64>,
    pub gap_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeDefaults {
    pub format: Option<Format>,
    pub category: Option<Category>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Geojson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Label,
    Mode,
    Single,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(CliConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}
