//! Offspring laws from the command line: `name:param[,param]` strings and
//! JSON pmf files.

use std::fmt::Write as _;
use std::path::Path;

use gwmaxdeg_core::{OffspringFamily, OffspringSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Named laws used by the check suite.
pub const BUILTIN: [(&str, &str); 8] = [
    ("binary-critical", "explicit:0.5,0,0.5"),
    ("geometric-1/3", "geometric:0.3333333333333333"),
    ("geometric-1/2", "geometric:0.5"),
    ("poisson-0.8", "poisson:0.8"),
    ("poisson-1.5", "poisson:1.5"),
    ("power-law-3", "critical-power-law:3"),
    ("supercritical-bounded", "explicit:0.25,0,0.75"),
    ("no-leaves", "explicit:0,0.5,0,0.5"),
];

/// Parses `geometric:a`, `poisson:lambda`, `critical-power-law:alpha`,
/// `explicit:p0,p1,...` or `binary` (critical binary branching).
pub fn parse_family(text: &str) -> Result<OffspringSpec, CliError> {
    if text == "binary" {
        return Ok(OffspringSpec::explicit([0.5, 0.0, 0.5]));
    }
    let (name, params) = text
        .split_once(':')
        .ok_or_else(|| CliError::Spec(format!("expected name:param[,param], got {text:?}")))?;
    let values = params
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Spec(format!("bad number {p:?} in {text:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let single = || match values[..] {
        [v] => Ok(v),
        _ => Err(CliError::Spec(format!("{name} takes one parameter"))),
    };
    Ok(match name {
        "geometric" => OffspringSpec::geometric(single()?),
        "poisson" => OffspringSpec::poisson(single()?),
        "critical-power-law" | "power-law" => OffspringSpec::critical_power_law(single()?),
        "explicit" => OffspringSpec::explicit(values),
        other => return Err(CliError::Spec(format!("unknown family {other:?}"))),
    })
}

/// Canonical string for a family; parsing it gives back identical bits.
pub fn family_string(spec: &OffspringSpec) -> String {
    match &spec.family {
        OffspringFamily::Geometric { ratio } => format!("geometric:{ratio}"),
        OffspringFamily::Poisson { rate } => format!("poisson:{rate}"),
        OffspringFamily::CriticalPowerLaw { exponent } => format!("critical-power-law:{exponent}"),
        OffspringFamily::Explicit(p) => {
            let mut out = String::from("explicit:");
            for (i, x) in p.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{x}").unwrap();
            }
            out
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PmfFile {
    p: Vec<f64>,
    tail_tolerance: Option<f64>,
}

/// Reads `{"p": [p_0, p_1, ...], "tail_tolerance": x}`.
pub fn read_pmf_file(path: &Path) -> Result<OffspringSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
    let file: PmfFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
    let spec = OffspringSpec::explicit(file.p);
    Ok(match file.tail_tolerance {
        Some(t) => spec.with_tail_tolerance(t),
        None => spec,
    })
}

/// A law as recorded in run manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub family: String,
    pub tail_tolerance: f64,
}

impl SpecRecord {
    pub fn new(spec: &OffspringSpec) -> Self {
        Self {
            family: family_string(spec),
            tail_tolerance: spec.tail_tolerance,
        }
    }

    pub fn resolve(&self) -> Result<OffspringSpec, CliError> {
        Ok(parse_family(&self.family)?.with_tail_tolerance(self.tail_tolerance))
    }
}

/// Resolves the `--family` / `--pmf-file` / `--tail-tolerance` trio.
pub fn resolve(
    family: Option<&str>,
    pmf_file: Option<&Path>,
    tail_tolerance: Option<f64>,
) -> Result<OffspringSpec, CliError> {
    let spec = match (family, pmf_file) {
        (Some(f), None) => parse_family(f)?,
        (None, Some(p)) => read_pmf_file(p)?,
        _ => {
            return Err(CliError::Spec(
                "give exactly one of --family and --pmf-file".into(),
            ))
        }
    };
    Ok(match tail_tolerance {
        Some(t) => spec.with_tail_tolerance(t),
        None => spec,
    })
}
