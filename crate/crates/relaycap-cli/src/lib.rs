//! Channel-description files and process-level error mapping for the
//! `relaycap` binary: JSON in, validated runtime channel out.

use std::path::PathBuf;

use ndarray::Array4;
use relaycap::modulo::{self, BinaryModuloParams};
use relaycap::{CostConstraint, DmChannelSpec, GaussianSpec};
use serde::{Deserialize, Serialize};

/// Cost vector plus expected-cost budget for one input alphabet.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFile {
    pub costs: Vec<f64>,
    pub budget: f64,
}

/// Discrete memoryless channel: state pmf, output kernel and conferencing
/// capacities, with optional per-input cost constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmFile {
    pub state_pmf: Vec<f64>,
    /// Output distributions indexed `[s][x][x_r][y]`.
    pub kernel: Vec<Vec<Vec<Vec<f64>>>>,
    pub c_sr: f64,
    pub c_rs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_x: Option<CostFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_xr: Option<CostFile>,
}

/// Additive Gaussian channel powers, noise variance and conferencing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFile {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "P_R")]
    pub p_r: f64,
    #[serde(rename = "P_S")]
    pub p_s: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    pub c_sr: f64,
    pub c_rs: f64,
}

/// Binary modulo-additive channel: input weight budgets and state bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryModuloFile {
    pub p: f64,
    pub p_r: f64,
    pub p_s: f64,
}

/// A parsed channel description, dispatched on the top-level `kind` field.
#[derive(Debug, Clone)]
pub enum ChannelFile {
    Dm(DmFile),
    Gaussian(GaussianFile),
    BinaryModulo(BinaryModuloFile),
}

/// What a channel file turns into at runtime. Binary modulo-additive files
/// become fully specified discrete channels.
#[derive(Debug)]
pub enum RuntimeChannel {
    Dm(DmChannelSpec),
    Gaussian(GaussianSpec),
}

impl ChannelFile {
    /// Parses a channel description. JSON syntax errors keep serde's
    /// line/column information; structural errors name the offending field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Spec(format!("channel file is not valid JSON: {e}")))?;
        let Some(object) = value.as_object() else {
            return Err(CliError::Spec(
                "channel file must be a JSON object".to_string(),
            ));
        };
        let Some(kind) = object.get("kind").and_then(|k| k.as_str()) else {
            return Err(CliError::Spec(
                "channel file needs a string `kind` field: \"dm\", \"gaussian\" or \
                 \"binary_modulo\""
                    .to_string(),
            ));
        };
        let kind = kind.to_string();
        let mut body = object.clone();
        body.remove("kind");
        let body = serde_json::Value::Object(body);
        match kind.as_str() {
            "dm" => Ok(ChannelFile::Dm(serde_json::from_value(body).map_err(
                |e| CliError::Spec(format!("invalid dm channel file: {e}")),
            )?)),
            "gaussian" => Ok(ChannelFile::Gaussian(
                serde_json::from_value(body)
                    .map_err(|e| CliError::Spec(format!("invalid gaussian channel file: {e}")))?,
            )),
            "binary_modulo" => Ok(ChannelFile::BinaryModulo(
                serde_json::from_value(body).map_err(|e| {
                    CliError::Spec(format!("invalid binary_modulo channel file: {e}"))
                })?,
            )),
            other => Err(CliError::Spec(format!(
                "unknown channel kind {other:?}; expected \"dm\", \"gaussian\" or \
                 \"binary_modulo\""
            ))),
        }
    }

    /// Serializes with the `kind` tag re-attached.
    pub fn to_json(&self) -> String {
        let (kind, mut value) = match self {
            ChannelFile::Dm(f) => ("dm", serde_json::to_value(f).expect("serializable")),
            ChannelFile::Gaussian(f) => {
                ("gaussian", serde_json::to_value(f).expect("serializable"))
            }
            ChannelFile::BinaryModulo(f) => (
                "binary_modulo",
                serde_json::to_value(f).expect("serializable"),
            ),
        };
        let object = value.as_object_mut().expect("struct serializes to object");
        object.insert(
            "kind".to_string(),
            serde_json::Value::String(kind.to_string()),
        );
        serde_json::to_string_pretty(&value).expect("serializable")
    }

    /// Builds the runtime channel, running every structural validation.
    pub fn to_runtime(&self) -> Result<RuntimeChannel, CliError> {
        match self {
            ChannelFile::Dm(f) => Ok(RuntimeChannel::Dm(dm_spec_from_file(f)?)),
            ChannelFile::Gaussian(f) => Ok(RuntimeChannel::Gaussian(GaussianSpec::new(
                f.p, f.p_r, f.p_s, f.n0, f.c_sr, f.c_rs,
            )?)),
            ChannelFile::BinaryModulo(f) => {
                let params = BinaryModuloParams::new(f.p, f.p_r, f.p_s)?;
                Ok(RuntimeChannel::Dm(modulo::build_channel(&params)?))
            }
        }
    }

    /// The file form of an already-validated discrete channel.
    pub fn from_dm_spec(spec: &DmChannelSpec) -> Self {
        let (cs, cx, cxr, cy) = spec.kernel().dim();
        let kernel = (0..cs)
            .map(|s| {
                (0..cx)
                    .map(|x| {
                        (0..cxr)
                            .map(|xr| (0..cy).map(|y| spec.kernel()[[s, x, xr, y]]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let cost = |c: Option<&CostConstraint>| {
            c.map(|c| CostFile {
                costs: c.costs.clone(),
                budget: c.budget,
            })
        };
        ChannelFile::Dm(DmFile {
            state_pmf: spec.state_pmf().to_vec(),
            kernel,
            c_sr: spec.c_sr(),
            c_rs: spec.c_rs(),
            cost_x: cost(spec.cost_x()),
            cost_xr: cost(spec.cost_xr()),
        })
    }
}

fn dm_spec_from_file(f: &DmFile) -> Result<DmChannelSpec, CliError> {
    let cs = f.kernel.len();
    if cs == 0 {
        return Err(CliError::Spec("kernel has no state slices".to_string()));
    }
    let cx = f.kernel[0].len();
    let cxr = f.kernel[0].first().map_or(0, |row| row.len());
    let cy = f.kernel[0]
        .first()
        .and_then(|row| row.first())
        .map_or(0, |row| row.len());
    if cx == 0 || cxr == 0 || cy == 0 {
        return Err(CliError::Spec(
            "kernel must be a non-empty [s][x][x_r][y] array".to_string(),
        ));
    }
    let mut kernel = Array4::zeros((cs, cx, cxr, cy));
    for (s, slice) in f.kernel.iter().enumerate() {
        if slice.len() != cx {
            return Err(CliError::Spec(format!(
                "kernel[s={s}] has {} source entries, expected {cx}",
                slice.len()
            )));
        }
        for (x, rows) in slice.iter().enumerate() {
            if rows.len() != cxr {
                return Err(CliError::Spec(format!(
                    "kernel[s={s}][x={x}] has {} relay entries, expected {cxr}",
                    rows.len()
                )));
            }
            for (xr, row) in rows.iter().enumerate() {
                if row.len() != cy {
                    return Err(CliError::Spec(format!(
                        "kernel[s={s}][x={x}][x_r={xr}] has {} output probabilities, \
                         expected {cy}",
                        row.len()
                    )));
                }
                for (y, p) in row.iter().enumerate() {
                    kernel[[s, x, xr, y]] = *p;
                }
            }
        }
    }
    let mut spec = DmChannelSpec::new(f.state_pmf.clone(), kernel, f.c_sr, f.c_rs)?;
    if let Some(c) = &f.cost_x {
        spec = spec.with_input_cost(CostConstraint::new(c.costs.clone(), c.budget)?)?;
    }
    if let Some(c) = &f.cost_xr {
        spec = spec.with_relay_cost(CostConstraint::new(c.costs.clone(), c.budget)?)?;
    }
    Ok(spec)
}

/// Process-level errors with their exit codes: 2 for spec/validation
/// problems, 3 for unmet preconditions, 4 for unwritable outputs, 1 for
/// anything internal (including a failed Monte Carlo validation).
#[derive(Debug)]
pub enum CliError {
    /// Malformed channel file or command arguments.
    Spec(String),
    /// An error surfaced by the rate library.
    Lib(relaycap::Error),
    /// The input file cannot be read.
    Input { path: PathBuf, source: std::io::Error },
    /// The output file cannot be written.
    Output { path: PathBuf, source: std::io::Error },
    /// A Monte Carlo validation report came back FAIL.
    ValidationFailed,
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Input { .. } => 2,
            CliError::Lib(err) => match err {
                relaycap::Error::InvalidArgument(_) | relaycap::Error::Infeasible(_) => 2,
                relaycap::Error::Precondition(_) => 3,
                relaycap::Error::NumericDegeneracy { .. } => 1,
            },
            CliError::Output { .. } => 4,
            CliError::ValidationFailed => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Spec(msg) => write!(f, "{msg}"),
            CliError::Lib(err) => write!(f, "{err}"),
            CliError::Input { path, source } => {
                write!(f, "cannot read {}: {source}", path.display())
            }
            CliError::Output { path, source } => {
                write!(f, "cannot write {}: {source}", path.display())
            }
            CliError::ValidationFailed => write!(f, "validation failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<relaycap::Error> for CliError {
    fn from(err: relaycap::Error) -> Self {
        CliError::Lib(err)
    }
}
