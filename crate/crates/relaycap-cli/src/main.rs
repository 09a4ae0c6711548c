//! `relaycap`: deterministic rate reports for relay channels whose state is
//! known strictly causally at the relay.
//!
//! Every subcommand reads a JSON channel description (see the repository's
//! `schema/channel.schema.json`), runs one computation, and prints a report
//! that is byte-identical across runs and worker thread counts. Rates are
//! printed with four decimals, certificates and CSV tables with six.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::{Array2, Array4};
use relaycap::dm;
use relaycap::gaussian::{self, CurveKind, SweepAxis};
use relaycap::mc;
use relaycap::modulo::{self, BinaryModuloParams};
use relaycap::{
    Certificate, CostConstraint, DmChannelSpec, GridConfig, InnerDistribution, RateResult,
    SearchConfig,
};
use relaycap_cli::{ChannelFile, CliError, RuntimeChannel};

/// Rate computations for relay channels with strictly causal state at the
/// relay and finite-capacity conferencing links.
#[derive(Parser)]
#[command(name = "relaycap", version)]
struct Cli {
    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report (or CSV table) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize the achievable rate for a channel file.
    Rate {
        /// JSON channel description.
        file: PathBuf,

        /// Coordination alphabet size (discrete channels only).
        #[arg(long)]
        card_u: Option<usize>,

        /// State-description alphabet size (discrete channels only).
        #[arg(long)]
        card_v: Option<usize>,

        /// Random restarts for the discrete search.
        #[arg(long)]
        restarts: Option<usize>,
    },

    /// Compute the cut-set upper bound for a channel file.
    Bound {
        /// JSON channel description.
        file: PathBuf,
    },

    /// Evaluate the closed-form capacity of a cooperation regime.
    Capacity {
        /// JSON channel description.
        file: PathBuf,

        /// Cooperation regime to evaluate.
        #[arg(long, value_enum)]
        case: CapacityCase,
    },

    /// Sweep one parameter and tabulate rate curves as CSV (requires --out).
    Sweep {
        /// JSON channel description used as the sweep template.
        file: PathBuf,

        /// Axis to sweep: c_sr, c_rs or gamma_db (gaussian only).
        #[arg(long)]
        axis: String,

        /// First axis value.
        #[arg(long)]
        from: f64,

        /// Last axis value.
        #[arg(long)]
        to: f64,

        /// Number of axis values, endpoints included.
        #[arg(long)]
        steps: usize,

        /// Comma-separated curves to tabulate.
        #[arg(long, default_value = "inner,cutset")]
        curves: String,

        /// Also write a matplotlib script that plots the CSV.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },

    /// Closed forms for the binary modulo-additive channel.
    Modulo {
        /// Source input weight budget.
        #[arg(long)]
        p: f64,

        /// Relay input weight budget.
        #[arg(long)]
        p_r: f64,

        /// State bias.
        #[arg(long)]
        p_s: f64,
    },

    /// Monte Carlo plug-in check of the analytic information terms.
    Validate {
        /// JSON channel description (dm or binary_modulo).
        file: PathBuf,

        /// Samples per estimate.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,

        /// Acceptance tolerance per term, in bits.
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CapacityCase {
    /// No conferencing in either direction.
    #[value(name = "no_coop")]
    NoCoop,
    /// Source-to-relay conferencing carries the whole message.
    #[value(name = "message")]
    Message,
    /// Relay-to-source conferencing carries the state description.
    #[value(name = "state")]
    State,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} worker threads: {e}");
            std::process::exit(1);
        }
    }
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.code());
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Rate {
            file,
            card_u,
            card_v,
            restarts,
        } => rate(cli, file, *card_u, *card_v, *restarts),
        Command::Bound { file } => bound(cli, file),
        Command::Capacity { file, case } => capacity(cli, file, *case),
        Command::Sweep {
            file,
            axis,
            from,
            to,
            steps,
            curves,
            plot_script,
        } => sweep(cli, file, axis, *from, *to, *steps, curves, plot_script.as_deref()),
        Command::Modulo { p, p_r, p_s } => modulo_report(cli, *p, *p_r, *p_s),
        Command::Validate { file, n, tol } => validate(cli, file, *n, *tol),
    }
}

fn load_channel(path: &Path) -> Result<RuntimeChannel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    ChannelFile::parse(&text)?.to_runtime()
}

fn search_config(seed: u64, restarts: Option<usize>) -> SearchConfig {
    let mut search = SearchConfig {
        seed,
        ..SearchConfig::default()
    };
    if let Some(r) = restarts {
        search.restarts = r;
    }
    search
}

fn rate(
    cli: &Cli,
    file: &Path,
    card_u: Option<usize>,
    card_v: Option<usize>,
    restarts: Option<usize>,
) -> Result<(), CliError> {
    let report = match load_channel(file)? {
        RuntimeChannel::Dm(spec) => {
            let result = dm::maximize_inner_bound(
                &spec,
                card_u.unwrap_or_else(dm::default_card_u),
                card_v.unwrap_or_else(|| dm::default_card_v(&spec)),
                &search_config(cli.seed, restarts),
            )?;
            render_rate_result("achievable rate", &result)
        }
        RuntimeChannel::Gaussian(spec) => {
            if card_u.is_some() || card_v.is_some() || restarts.is_some() {
                return Err(CliError::Spec(
                    "--card-u, --card-v and --restarts apply to discrete channels only"
                        .to_string(),
                ));
            }
            let result = gaussian::maximize_gaussian_inner_bound(&spec, &GridConfig::default())?;
            render_rate_result("achievable rate", &result)
        }
    };
    emit(cli.out.as_deref(), &report)
}

fn bound(cli: &Cli, file: &Path) -> Result<(), CliError> {
    let report = match load_channel(file)? {
        RuntimeChannel::Dm(spec) => {
            let result = dm::cutset_bound(&spec, &search_config(cli.seed, None))?;
            render_rate_result("cut-set bound", &result)
        }
        RuntimeChannel::Gaussian(spec) => {
            format!("cut-set bound: {:.4}\n", gaussian::gaussian_cutset_bound(&spec))
        }
    };
    emit(cli.out.as_deref(), &report)
}

fn capacity(cli: &Cli, file: &Path, case: CapacityCase) -> Result<(), CliError> {
    let report = match load_channel(file)? {
        RuntimeChannel::Dm(spec) => {
            let search = search_config(cli.seed, None);
            match case {
                CapacityCase::NoCoop => {
                    let result = dm::capacity_no_cooperation(&spec, &search)?;
                    render_rate_result("capacity", &result)
                }
                CapacityCase::Message => {
                    let (result, required) =
                        dm::capacity_full_message_cooperation(&spec, &search)?;
                    let mut text = render_rate_result("capacity", &result);
                    let _ = writeln!(text, "required c_sr: {required:.4}");
                    text
                }
                CapacityCase::State => {
                    let result = dm::capacity_state_cooperation(&spec, &search)?;
                    let (_, required) = dm::rate_state_cooperation_only(
                        &spec,
                        dm::default_card_v(&spec),
                        &search,
                    )?;
                    let mut text = render_rate_result("capacity", &result);
                    let _ = writeln!(text, "required c_rs: {required:.4}");
                    text
                }
            }
        }
        RuntimeChannel::Gaussian(spec) => match case {
            CapacityCase::NoCoop => {
                let mut text = format!("capacity: {:.4}\n", gaussian::no_coop_capacity(&spec));
                for w in gaussian::no_coop_capacity_warnings(&spec) {
                    let _ = writeln!(text, "warning: {w}");
                }
                text
            }
            CapacityCase::Message | CapacityCase::State => {
                if spec.n0() != 0.0 {
                    return Err(CliError::Lib(relaycap::Error::Precondition(format!(
                        "closed-form cooperative capacity requires N0 = 0; channel has N0 = {}",
                        spec.n0()
                    ))));
                }
                let value = gaussian::full_coop_bound(&spec);
                let link = match case {
                    CapacityCase::Message => "c_sr",
                    _ => "c_rs",
                };
                format!("capacity: {value:.4}\nrequired {link}: {value:.4}\n")
            }
        },
    };
    emit(cli.out.as_deref(), &report)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cli: &Cli,
    file: &Path,
    axis_text: &str,
    from: f64,
    to: f64,
    steps: usize,
    curves_text: &str,
    plot_script: Option<&Path>,
) -> Result<(), CliError> {
    let Some(out) = cli.out.as_deref() else {
        return Err(CliError::Spec(
            "sweep writes a CSV table; pass --out <path>".to_string(),
        ));
    };
    if steps == 0 {
        return Err(CliError::Spec("--steps must be at least 1".to_string()));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::Spec(format!(
            "sweep range [{from}, {to}] must be finite"
        )));
    }
    let axis: SweepAxis = axis_text.parse()?;
    let curves = parse_curves(curves_text)?;
    let values = linspace(from, to, steps);

    let rows = match load_channel(file)? {
        RuntimeChannel::Gaussian(template) => {
            gaussian::sweep(&template, axis, &values, &curves, &GridConfig::default())?.rows
        }
        RuntimeChannel::Dm(template) => {
            if axis == SweepAxis::GammaDb {
                return Err(CliError::Spec(
                    "axis gamma_db applies to gaussian channel files; discrete sweeps use \
                     c_sr or c_rs"
                        .to_string(),
                ));
            }
            for curve in &curves {
                if !matches!(
                    curve,
                    CurveKind::Inner | CurveKind::Cutset | CurveKind::NoSi
                ) {
                    return Err(CliError::Spec(format!(
                        "curve {curve} is not defined for discrete channels (use inner, \
                         cutset or no_si)"
                    )));
                }
            }
            let search = search_config(cli.seed, None);
            let card_u = dm::default_card_u();
            let card_v = dm::default_card_v(&template);
            let mut rows = Vec::with_capacity(values.len());
            for &value in &values {
                let spec = match axis {
                    SweepAxis::CSr => template.with_conferencing(value, template.c_rs())?,
                    SweepAxis::CRs => template.with_conferencing(template.c_sr(), value)?,
                    SweepAxis::GammaDb => unreachable!("rejected above"),
                };
                let mut row = Vec::with_capacity(curves.len());
                for curve in &curves {
                    row.push(match curve {
                        CurveKind::Inner => {
                            dm::maximize_inner_bound(&spec, card_u, card_v, &search)?.rate
                        }
                        CurveKind::Cutset => dm::cutset_bound(&spec, &search)?.rate,
                        CurveKind::NoSi => dm::no_state_info_baseline(&spec, &search)?.rate,
                        _ => unreachable!("rejected above"),
                    });
                }
                rows.push(row);
            }
            rows
        }
    };

    let mut csv = String::from(axis.as_str());
    for curve in &curves {
        let _ = write!(csv, ",{}", curve.as_str());
    }
    csv.push('\n');
    for (value, row) in values.iter().zip(&rows) {
        let _ = write!(csv, "{value:.6}");
        for cell in row {
            let _ = write!(csv, ",{cell:.6}");
        }
        csv.push('\n');
    }
    write_file(out, &csv)?;
    println!("wrote {} ({} rows)", out.display(), values.len());

    if let Some(script_path) = plot_script {
        let script = render_plot_script(script_path, out);
        write_file(script_path, &script)?;
        println!("wrote {}", script_path.display());
    }
    Ok(())
}

fn modulo_report(cli: &Cli, p: f64, p_r: f64, p_s: f64) -> Result<(), CliError> {
    let params = BinaryModuloParams::new(p, p_r, p_s)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "capacity: {:.4}",
        modulo::capacity_closed_form(&params)?
    );
    let _ = writeln!(
        text,
        "no-state-information rate: {:.4}",
        modulo::no_state_info_closed_form(&params)?
    );
    let _ = writeln!(
        text,
        "cooperation gain: {:.4}",
        modulo::cooperation_gain_closed_form(&params)?
    );
    emit(cli.out.as_deref(), &text)
}

fn validate(cli: &Cli, file: &Path, n: usize, tol: f64) -> Result<(), CliError> {
    let spec = match load_channel(file)? {
        RuntimeChannel::Dm(spec) => spec,
        RuntimeChannel::Gaussian(_) => {
            return Err(CliError::Spec(
                "validate applies to discrete channels (dm or binary_modulo files)".to_string(),
            ));
        }
    };
    let inner = validation_inner(&spec)?;
    let report = mc::validate_spec(&spec, &inner, n, cli.seed, tol)?;
    emit(cli.out.as_deref(), &format!("{report}\n"))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

/// The fixed operating point the validate subcommand checks: no coordination
/// codeword, inputs as uniform as the cost budgets allow, and a state
/// description that copies the state.
fn validation_inner(spec: &DmChannelSpec) -> Result<InnerDistribution, CliError> {
    let budgeted = |card: usize, cost: Option<&CostConstraint>| -> Vec<f64> {
        let uniform = vec![1.0 / card as f64; card];
        let Some(cost) = cost else {
            return uniform;
        };
        let expected = cost.expected_cost(&uniform);
        if expected <= cost.budget {
            return uniform;
        }
        let cheapest = (0..card)
            .min_by(|&a, &b| {
                cost.costs[a]
                    .partial_cmp(&cost.costs[b])
                    .expect("costs are finite")
            })
            .expect("non-empty alphabet");
        let base = cost.costs[cheapest];
        let lambda = ((expected - cost.budget) / (expected - base)).clamp(0.0, 1.0);
        let mut row: Vec<f64> = uniform.iter().map(|q| q * (1.0 - lambda)).collect();
        row[cheapest] += lambda;
        row
    };
    let p_x = Array2::from_shape_vec(
        (1, spec.card_x()),
        budgeted(spec.card_x(), spec.cost_x()),
    )
    .expect("row matches the source alphabet");
    let p_xr = Array2::from_shape_vec(
        (1, spec.card_xr()),
        budgeted(spec.card_xr(), spec.cost_xr()),
    )
    .expect("row matches the relay alphabet");
    let p_v = Array4::from_shape_fn(
        (spec.card_s(), spec.card_xr(), 1, spec.card_s()),
        |(s, _xr, _u, v)| if v == s { 1.0 } else { 0.0 },
    );
    Ok(InnerDistribution::new(vec![1.0], p_x, p_xr, p_v)?)
}

fn render_rate_result(label: &str, result: &RateResult) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "{label}: {:.4}", result.rate);
    let _ = writeln!(text, "binding term: {}", result.binding_term_label());
    let _ = writeln!(text, "certificate:");
    render_certificate(&mut text, &result.certificate);
    for w in &result.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    text
}

fn render_certificate(text: &mut String, certificate: &Certificate) {
    let vector = |text: &mut String, name: &str, values: &mut dyn Iterator<Item = f64>| {
        let cells: Vec<String> = values.map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(text, "  {name}: [{}]", cells.join(", "));
    };
    match certificate {
        Certificate::Inner(inner) => {
            vector(text, "p_u", &mut inner.p_u().iter().copied());
            for u in 0..inner.card_u() {
                vector(
                    text,
                    &format!("p_x|u={u}"),
                    &mut inner.p_x_given_u().row(u).iter().copied(),
                );
            }
            for u in 0..inner.card_u() {
                vector(
                    text,
                    &format!("p_xr|u={u}"),
                    &mut inner.p_xr_given_u().row(u).iter().copied(),
                );
            }
            let (cs, cxr, cu, cv) = inner.p_v().dim();
            for s in 0..cs {
                for xr in 0..cxr {
                    for u in 0..cu {
                        vector(
                            text,
                            &format!("p_v|s={s},xr={xr},u={u}"),
                            &mut (0..cv).map(|v| inner.p_v()[[s, xr, u, v]]),
                        );
                    }
                }
            }
        }
        Certificate::ProductInput { p_x, p_xr } => {
            vector(text, "p_x", &mut p_x.iter().copied());
            vector(text, "p_xr", &mut p_xr.iter().copied());
        }
        Certificate::JointInput { p_x_xr } => {
            for x in 0..p_x_xr.dim().0 {
                vector(
                    text,
                    &format!("p_x_xr[x={x}]"),
                    &mut p_x_xr.row(x).iter().copied(),
                );
            }
        }
        Certificate::StateCoop {
            p_x_xr,
            p_v_given_s_xr,
        } => {
            for x in 0..p_x_xr.dim().0 {
                vector(
                    text,
                    &format!("p_x_xr[x={x}]"),
                    &mut p_x_xr.row(x).iter().copied(),
                );
            }
            let (cs, cxr, cv) = p_v_given_s_xr.dim();
            for s in 0..cs {
                for xr in 0..cxr {
                    vector(
                        text,
                        &format!("p_v|s={s},xr={xr}"),
                        &mut (0..cv).map(|v| p_v_given_s_xr[[s, xr, v]]),
                    );
                }
            }
        }
        Certificate::SourceInput { p_x, relay_symbol } => {
            vector(text, "p_x", &mut p_x.iter().copied());
            let _ = writeln!(text, "  relay symbol: {relay_symbol}");
        }
        Certificate::Gaussian(params) => {
            let _ = writeln!(text, "  alpha: {:.6}", params.alpha);
            let _ = writeln!(text, "  beta: {:.6}", params.beta);
            let _ = writeln!(text, "  p_q: {:.6}", params.p_q);
        }
    }
}

fn parse_curves(text: &str) -> Result<Vec<CurveKind>, CliError> {
    let mut curves = Vec::new();
    for name in text.split(',') {
        let name = name.trim();
        if name.is_empty() {
            return Err(CliError::Spec(
                "curve list has an empty entry".to_string(),
            ));
        }
        curves.push(name.parse::<CurveKind>()?);
    }
    Ok(curves)
}

fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![from];
    }
    (0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_file(path, text)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .unwrap_or_else(|_| PathBuf::from("."))
            .join(path)
    }
}

/// Path from `from_dir` to `to` written with `..` components, so the plot
/// script keeps working when the directory tree moves as a whole.
fn relative_path(from_dir: &Path, to: &Path) -> PathBuf {
    let from: Vec<_> = from_dir.components().collect();
    let to: Vec<_> = to.components().collect();
    let common = from
        .iter()
        .zip(&to)
        .take_while(|(a, b)| **a == **b)
        .count();
    let mut rel = PathBuf::new();
    for _ in common..from.len() {
        rel.push("..");
    }
    for component in &to[common..] {
        rel.push(component);
    }
    if rel.as_os_str().is_empty() {
        rel.push(".");
    }
    rel
}


fn render_plot_script(script_path: &Path, csv_path: &Path) -> String {
    let script_dir = absolute(script_path)
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let rel = relative_path(&script_dir, &absolute(csv_path));
    format!(
        r#"#!/usr/bin/env python3
"""Plot the rate curves tabulated in {name}."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = (Path(__file__).resolve().parent / "{rel}").resolve()
header, *rows = csv_path.read_text().strip().splitlines()
columns = header.split(",")
points = [[float(cell) for cell in row.split(",")] for row in rows]

axis = [point[0] for point in points]
for index, name in enumerate(columns[1:], start=1):
    plt.plot(axis, [point[index] for point in points], marker=".", label=name)
plt.xlabel(columns[0])
plt.ylabel("rate (bits per channel use)")
plt.legend()
plt.grid(True, alpha=0.4)
out_path = csv_path.with_suffix(".png")
plt.savefig(out_path, dpi=160, bbox_inches="tight")
print(f"wrote {{out_path}}")
"#,
        name = csv_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| csv_path.display().to_string()),
        rel = rel.display(),
    )
}
