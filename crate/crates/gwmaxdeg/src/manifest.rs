use gwmaxdeg_core::asymptotics::BOUND_SLACK;
use gwmaxdeg_core::global::{PMF_CLIP, RESIDUAL_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::family::SpecRecord;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableTarget {
    Generation,
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Generation,
    Local,
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum SimTarget {
    Generation,
    Local,
    Global,
    Width,
}

/// Everything that determines the bytes of a command's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Request {
    Dist {
        spec: SpecRecord,
        target: TableTarget,
        horizon: u32,
        r_max: u64,
    },
    Global {
        spec: SpecRecord,
        r_max: u64,
    },
    Ratios {
        spec: SpecRecord,
        regime: Regime,
        horizon: u32,
        r_min: u64,
        r_max: u64,
    },
    Simulate {
        spec: SpecRecord,
        trials: u64,
        seed: u64,
        targets: Vec<SimTarget>,
        horizon: u32,
        r_max: u64,
        max_generations: Option<u32>,
        max_population: u64,
        width_grid: Vec<u64>,
        compare: bool,
    },
}

impl Request {
    pub fn spec(&self) -> &SpecRecord {
        match self {
            Request::Dist { spec, .. }
            | Request::Global { spec, .. }
            | Request::Ratios { spec, .. }
            | Request::Simulate { spec, .. } => spec,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Request::Simulate { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tail_tolerance: f64,
    pub fixed_point_residual: f64,
    pub pmf_clip: f64,
    pub bound_slack: f64,
}

/// Provenance embedded in every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub request: Request,
    pub format: Format,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(request: Request, format: Format, output: Option<&std::path::Path>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            tolerances: Tolerances {
                tail_tolerance: request.spec().tail_tolerance,
                fixed_point_residual: RESIDUAL_TOLERANCE,
                pmf_clip: PMF_CLIP,
                bound_slack: BOUND_SLACK,
            },
            seed: request.seed(),
            request,
            format,
            outputs: output
                .map(|p| p.display().to_string())
                .into_iter()
                .collect(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

const CSV_PREFIX: &str = "# manifest: ";

/// Recovers the manifest from a CSV or JSON output.
pub fn extract(content: &str) -> Result<RunManifest, CliError> {
    let bad = |e: serde_json::Error| CliError::Spec(format!("unreadable manifest: {e}"));
    if let Some(rest) = content.strip_prefix(CSV_PREFIX) {
        let line = rest.lines().next().unwrap_or_default();
        return serde_json::from_str(line).map_err(bad);
    }
    #[derive(Deserialize)]
    struct Wrapper {
        manifest: RunManifest,
    }
    serde_json::from_str::<Wrapper>(content)
        .map(|w| w.manifest)
        .map_err(bad)
}

pub fn csv_header(manifest: &RunManifest) -> String {
    format!("{CSV_PREFIX}{}\n", manifest.to_line())
}
