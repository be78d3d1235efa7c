//! Command-line front end: experiment sweeps emitting JSON or CSV.
//!
//! Every subcommand accepts `--config FILE`, a TOML file whose keys are the
//! subcommand's flag names; flags given on the command line take precedence.
//! Reports are deterministic: sweep points may run in parallel (`--jobs`) but
//! rows are emitted in configuration order.

mod selfcheck;
mod source;

use std::f64::consts::LN_2;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::coding::{min_log_size_for_error, second_order_coefficient};
use crate::error::Error;
use crate::randomness::{
    build_kl_optimal_code, finite_or_null, kl_rate_lower_bound, max_log_size_for_distance,
    s_star_second_order, s_star_two, LimitLaw, Order,
};
use crate::spectrum::{gaussian_second_order, SpectrumCDF};
use crate::tradeoff::{build_joint_pair, TRADEOFF_CSV_HEADER};
use crate::universal::universal_type_code;

pub use selfcheck::{run_selfcheck, CheckOutcome};
pub use source::{RateSpec, SourceSpec};

/// Version of the report schemas; bumped whenever a column changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const RATES_CSV_HEADER: &str = "n,eps,logM_code,b_code,logM_ext,b_ext,gaussian_prediction,gap";
pub const UNIVERSAL_CSV_HEADER: &str =
    "n,d,a_nats,b,log_size_nats,second_order_b,P,error,extractor_bound";
pub const KL_CSV_HEADER: &str =
    "delta,s_star,s_star_1,s_star_2,s_star_2nd,s_star_1_2nd,n,a,kl_per_n,target,code_error";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "socint",
    version,
    about = "Finite-blocklength source coding and intrinsic randomness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal code and extractor sizes and their second-order coefficients.
    Rates(RatesArgs),
    /// Joint code/extractor pairs against the gap `δ(p_n)`.
    Tradeoff(TradeoffArgs),
    /// The universal type code and extractor evaluated on given sources.
    Universal(UniversalArgs),
    /// KL-criterion rates and the codes attaining them.
    Kl(KlArgs),
    /// Runs the built-in oracle checks; exits nonzero on any mismatch.
    Selfcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

macro_rules! command_args {
    ($name:ident { $( $(#[$fm:meta])* $field:ident : $ty:ty, )* }) => {
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fm])* pub $field: Option<$ty>, )*
            /// TOML file with the same keys as the flags.
            #[arg(long)]
            #[serde(skip)]
            pub config: Option<PathBuf>,
            /// Worker threads for sweep points.
            #[arg(long)]
            pub jobs: Option<usize>,
            /// Print rates in bits instead of nats.
            #[arg(long)]
            #[serde(default)]
            pub bits: bool,
            #[arg(long, value_enum)]
            pub format: Option<Format>,
            /// Write the report here instead of stdout.
            #[arg(long)]
            pub output: Option<PathBuf>,
        }

        impl $name {
            /// Fills unset flags from the config file, if any.
            pub fn resolve(self) -> CliResult<Self> {
                let Some(path) = self.config.clone() else {
                    return Ok(self);
                };
                let text = fs::read_to_string(&path)?;
                let file: $name = toml::from_str(&text).map_err(|e| CliError::Config {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                Ok($name {
                    $( $field: self.$field.or(file.$field), )*
                    config: self.config,
                    jobs: self.jobs.or(file.jobs),
                    bits: self.bits || file.bits,
                    format: self.format.or(file.format),
                    output: self.output.or(file.output),
                })
            }

            fn common(&self) -> Common {
                Common {
                    jobs: self.jobs,
                    bits: self.bits,
                }
            }
        }
    };
}

command_args!(RatesArgs {
    /// Source, e.g. `bernoulli:0.11` or `markov:"0.8,0.2;0.2,0.8"`.
    #[arg(long)]
    source: String,
    /// Block lengths, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    /// Target errors / distances in (0, 1).
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
});

command_args!(TradeoffArgs {
    #[arg(long)]
    source: String,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    /// First-order rates: numbers or `H`, `H+x`, `H-x`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Vec<RateSpec>,
    /// Second-order offsets.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Vec<f64>,
});

command_args!(UniversalArgs {
    /// Alphabet size.
    #[arg(long)]
    d: usize,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    /// Rate; `H` refers to the first evaluation source.
    #[arg(long, allow_hyphen_values = true)]
    a: RateSpec,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Vec<f64>,
    /// i.i.d. sources to evaluate the code on.
    #[arg(long = "eval")]
    eval: Vec<String>,
});

command_args!(KlArgs {
    #[arg(long)]
    source: String,
    /// KL budgets per symbol.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Block lengths at which to build the attaining code (optional).
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
});

struct Common {
    jobs: Option<usize>,
    bits: bool,
}

fn required<T>(v: Option<T>, field: &'static str) -> CliResult<T> {
    v.ok_or(CliError::Invalid {
        field,
        message: "missing (flag or config key)".into(),
    })
}

fn check_n(n: &[u64]) -> CliResult<()> {
    if n.is_empty() || n.contains(&0) || n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Invalid {
            field: "n",
            message: format!("{n:?}: need positive, strictly increasing block lengths"),
        });
    }
    Ok(())
}

fn check_unit(v: &[f64], field: &'static str) -> CliResult<()> {
    if v.is_empty() || v.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Invalid {
            field,
            message: format!("{v:?}: every value must lie in (0, 1)"),
        });
    }
    Ok(())
}

fn parse_source(spec: &str) -> CliResult<SourceSpec> {
    SourceSpec::parse(spec).map_err(|e| CliError::Invalid {
        field: "source",
        message: e.to_string(),
    })
}

/// Runs `f` over `items` on at most `jobs` threads, keeping input order.
fn ordered<T: Sync, R: Send>(
    jobs: Option<usize>,
    items: &[T],
    f: impl Fn(&T) -> CliResult<R> + Sync + Send,
) -> CliResult<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// A finished report: JSON rows plus the CSV columns to print them with.
pub struct Report {
    pub kind: &'static str,
    pub csv_header: &'static str,
    pub rows: Vec<Value>,
    /// Rows flattened for CSV when they nest.
    pub csv_rows: Vec<Value>,
    pub bits: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let doc = json!({
            "schema": format!("socint.{}/{}", self.kind, SCHEMA_VERSION),
            "units": if self.bits { "bits" } else { "nats" },
            "rows": self.rows,
        });
        serde_json::to_string_pretty(&doc).expect("report is valid JSON") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let cols: Vec<&str> = self.csv_header.split(',').collect();
        let mut out = String::from(self.csv_header);
        out.push('\n');
        for row in &self.csv_rows {
            let cells: Vec<String> = cols
                .iter()
                .map(|c| match row.get(*c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) if s.contains([',', '"']) => {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    }
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Divides the named fields by `ln 2` (and `squared` ones by `ln² 2`).
fn to_bits(row: &mut Value, fields: &[&str], squared: &[&str]) {
    let Some(obj) = row.as_object_mut() else {
        return;
    };
    for (keys, scale) in [(fields, 1.0 / LN_2), (squared, 1.0 / (LN_2 * LN_2))] {
        for k in keys {
            if let Some(x) = obj.get(*k).and_then(Value::as_f64) {
                obj.insert((*k).to_string(), json!(x * scale));
            }
        }
    }
}

const RATE_FIELDS: &[&str] = &[
    "logM_code",
    "b_code",
    "logM_ext",
    "b_ext",
    "gaussian_prediction",
    "gap",
    "gap_ext",
    "entropy_rate",
];

pub fn run_rates(args: &RatesArgs) -> CliResult<Report> {
    let src = parse_source(&required(args.source.clone(), "source")?)?;
    let ns = required(args.n.clone(), "n")?;
    let eps = required(args.eps.clone(), "eps")?;
    check_n(&ns)?;
    check_unit(&eps, "eps")?;
    let common = args.common();
    let per_n = ordered(common.jobs, &ns, |&n| -> CliResult<Vec<Value>> {
        let h = src.entropy_rate(n)?;
        let v = src.varentropy_rate(n)?;
        let table = src.table(n)?;
        let mut rows = Vec::new();
        for &e in &eps {
            let pred = gaussian_second_order(v, 1.0 - e)?;
            let mut row = json!({
                "n": n,
                "eps": e,
                "entropy_rate": h,
                "varentropy": v,
                "gaussian_prediction": pred,
            });
            let obj = row.as_object_mut().unwrap();
            if let Some(t) = &table {
                let log_code = min_log_size_for_error(t, e);
                let b_code = second_order_coefficient(log_code, n, h);
                let ext = max_log_size_for_distance(t, e)?;
                let b_ext = second_order_coefficient(ext.log_size, n, h);
                obj.insert("logM_code".into(), finite_or_null(log_code));
                obj.insert("b_code".into(), finite_or_null(b_code));
                obj.insert("logM_ext".into(), finite_or_null(ext.log_size));
                obj.insert("b_ext".into(), finite_or_null(b_ext));
                obj.insert("gap".into(), finite_or_null(b_code - pred));
                obj.insert("gap_ext".into(), finite_or_null(b_ext + pred));
                obj.insert("ext_distance".into(), json!(ext.distance));
                obj.insert("ext_converse_bound".into(), json!(ext.converse_bound));
            } else {
                for k in ["logM_code", "b_code", "logM_ext", "b_ext", "gap", "gap_ext"] {
                    obj.insert(k.into(), Value::Null);
                }
            }
            if common.bits {
                to_bits(&mut row, RATE_FIELDS, &["varentropy"]);
            }
            rows.push(row);
        }
        Ok(rows)
    })?;
    let rows: Vec<Value> = per_n.into_iter().flatten().collect();
    Ok(Report {
        kind: "rates",
        csv_header: RATES_CSV_HEADER,
        csv_rows: rows.clone(),
        rows,
        bits: common.bits,
    })
}

pub fn run_tradeoff(args: &TradeoffArgs) -> CliResult<Report> {
    let src = parse_source(&required(args.source.clone(), "source")?)?;
    let ns = required(args.n.clone(), "n")?;
    check_n(&ns)?;
    let a_list = required(args.a.clone(), "a")?;
    let b_list = args.b.clone().unwrap_or_else(|| vec![0.0]);
    let common = args.common();
    let per_n = ordered(common.jobs, &ns, |&n| -> CliResult<Vec<Value>> {
        let table = src.table(n)?.ok_or(CliError::Invalid {
            field: "source",
            message: "trade-off pairs need an i.i.d. or explicit source".into(),
        })?;
        let h = src.entropy_rate(n)?;
        let mut rows = Vec::new();
        for a in &a_list {
            for &b in &b_list {
                let pair = build_joint_pair(&table, a.resolve(h), b);
                let check = pair.verify(&table);
                let mut row = pair.summary(&check);
                if common.bits {
                    to_bits(&mut row, &["a", "b", "log_size", "spread_log_size"], &[]);
                }
                rows.push(row);
            }
        }
        Ok(rows)
    })?;
    let rows: Vec<Value> = per_n.into_iter().flatten().collect();
    Ok(Report {
        kind: "tradeoff",
        csv_header: TRADEOFF_CSV_HEADER,
        csv_rows: rows.clone(),
        rows,
        bits: common.bits,
    })
}

pub fn run_universal(args: &UniversalArgs) -> CliResult<Report> {
    let d = required(args.d, "d")?;
    let ns = required(args.n.clone(), "n")?;
    check_n(&ns)?;
    let b_list = args.b.clone().unwrap_or_else(|| vec![0.0]);
    let evals: Vec<(String, crate::FiniteDistribution)> = required(args.eval.clone(), "eval")?
        .into_iter()
        .map(|spec| match parse_source(&spec)? {
            SourceSpec::Iid(p) => Ok((spec, p)),
            _ => Err(CliError::Invalid {
                field: "eval",
                message: format!("`{spec}`: evaluation sources must be i.i.d."),
            }),
        })
        .collect::<CliResult<_>>()?;
    let a = match required(args.a, "a")? {
        RateSpec::Value(v) => v,
        spec => {
            let first = evals.first().ok_or(CliError::Invalid {
                field: "a",
                message: "`H` needs at least one --eval source".into(),
            })?;
            spec.resolve(crate::dist::entropy(&first.1))
        }
    };
    let common = args.common();
    let points: Vec<(u64, f64)> = ns
        .iter()
        .flat_map(|&n| b_list.iter().map(move |&b| (n, b)))
        .collect();
    let rows = ordered(common.jobs, &points, |&(n, b)| -> CliResult<Value> {
        let code = universal_type_code(n, d, a, b)?;
        let mut row = code.report(&evals)?;
        if common.bits {
            let obj = row.as_object_mut().unwrap();
            obj.insert("a_bits".into(), json!(a / LN_2));
            if let Some(x) = obj.get("log_size_nats").and_then(Value::as_f64) {
                obj.insert("log_size_bits".into(), json!(x / LN_2));
            }
            if let Some(x) = obj.get("second_order_b").and_then(Value::as_f64) {
                obj.insert("second_order_b".into(), json!(x / LN_2));
            }
        }
        Ok(row)
    })?;
    let csv_rows = rows
        .iter()
        .flat_map(|row| {
            let base: Map<String, Value> = row.as_object().cloned().unwrap_or_default();
            row["errors"]
                .as_array()
                .cloned()
                .unwrap_or_default()
                .into_iter()
                .map(move |e| {
                    let mut m = base.clone();
                    m.remove("errors");
                    if let Some(eo) = e.as_object() {
                        m.extend(eo.clone());
                    }
                    Value::Object(m)
                })
        })
        .collect();
    Ok(Report {
        kind: "universal",
        csv_header: UNIVERSAL_CSV_HEADER,
        rows,
        csv_rows,
        bits: common.bits,
    })
}

const KL_FIELDS: &[&str] = &[
    "entropy_rate",
    "s_star",
    "s_star_1",
    "s_star_2",
    "s_star_2nd",
    "s_star_1_2nd",
    "a",
];

pub fn run_kl(args: &KlArgs) -> CliResult<Report> {
    let src = parse_source(&required(args.source.clone(), "source")?)?;
    let deltas = required(args.delta.clone(), "delta")?;
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(CliError::Invalid {
            field: "delta",
            message: format!("{deltas:?}: every value must be positive"),
        });
    }
    let ns = args.n.clone().unwrap_or_default();
    if !ns.is_empty() {
        check_n(&ns)?;
    }
    if matches!(src, SourceSpec::Explicit(_)) {
        return Err(CliError::Invalid {
            field: "source",
            message: "KL rates need an i.i.d. or Markov source".into(),
        });
    }
    let h = src.entropy_rate(1)?;
    let v = src.varentropy_rate(1)?;
    let common = args.common();
    let tables = ordered(common.jobs, &ns, |&n| Ok((n, src.table(n)?)))?;
    let rows = ordered(common.jobs, &deltas, |&delta| -> CliResult<Value> {
        let (psi, at_zero) = src.psi().expect("i.i.d. or Markov");
        let (s2, minimizer) = s_star_two(psi, delta, at_zero);
        let second = s_star_second_order(v, delta).ok();
        let s_star = h + delta;
        let mut codes = Vec::new();
        for (n, table) in &tables {
            let Some(t) = table else { continue };
            let code = build_kl_optimal_code(t, s_star);
            let spectrum = SpectrumCDF::from_table(t);
            let finite_target =
                kl_rate_lower_bound(LimitLaw::Spectrum(&spectrum), s_star, Order::First)?;
            let mut c = json!({
                "n": n,
                "a": s_star,
                "kl_per_n": code.kl_per_n,
                "target": delta,
                "target_finite_n": finite_target,
                "code_error": code.code_error,
                "eps_n": code.eps_n,
                "log_size": code.log_size,
                "spread_kl_bound_holds": code.spread_bound(t).map(|c| c.holds),
            });
            if common.bits {
                to_bits(&mut c, &["a", "log_size"], &[]);
            }
            codes.push(c);
        }
        let mut row = json!({
            "delta": delta,
            "entropy_rate": h,
            "varentropy": v,
            "s_star": s_star,
            "s_star_1": h,
            "s_star_2": s2,
            "s_star_2_minimizer": minimizer,
            "s_star_2nd": second.map(|s| s.s_star_2nd),
            "s_star_1_2nd": second.map(|s| s.s_star_1_2nd),
            "codes": codes,
        });
        if common.bits {
            to_bits(&mut row, KL_FIELDS, &["varentropy"]);
        }
        Ok(row)
    })?;
    let csv_rows = rows
        .iter()
        .flat_map(|row| {
            let mut base: Map<String, Value> = row.as_object().cloned().unwrap_or_default();
            let codes = base
                .remove("codes")
                .and_then(|c| c.as_array().cloned())
                .unwrap_or_default();
            if codes.is_empty() {
                vec![Value::Object(base)]
            } else {
                codes
                    .into_iter()
                    .map(|c| {
                        let mut m = base.clone();
                        if let Some(co) = c.as_object() {
                            m.extend(co.clone());
                        }
                        Value::Object(m)
                    })
                    .collect()
            }
        })
        .collect();
    Ok(Report {
        kind: "kl",
        csv_header: KL_CSV_HEADER,
        rows,
        csv_rows,
        bits: common.bits,
    })
}

fn emit(report: &Report, format: Format, output: Option<&PathBuf>) -> CliResult<()> {
    let text = report.render(format);
    match output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parses arguments, runs the command and writes its report. Returns the
/// process exit code.
pub fn main_with(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Rates(args) => {
            let args = args.resolve()?;
            emit(
                &run_rates(&args)?,
                args.format.unwrap_or(Format::Csv),
                args.output.as_ref(),
            )?;
        }
        Command::Tradeoff(args) => {
            let args = args.resolve()?;
            emit(
                &run_tradeoff(&args)?,
                args.format.unwrap_or(Format::Json),
                args.output.as_ref(),
            )?;
        }
        Command::Universal(args) => {
            let args = args.resolve()?;
            emit(
                &run_universal(&args)?,
                args.format.unwrap_or(Format::Json),
                args.output.as_ref(),
            )?;
        }
        Command::Kl(args) => {
            let args = args.resolve()?;
            emit(
                &run_kl(&args)?,
                args.format.unwrap_or(Format::Json),
                args.output.as_ref(),
            )?;
        }
        Command::Selfcheck => {
            let outcomes = run_selfcheck();
            let mut failed = 0;
            for o in &outcomes {
                println!(
                    "{} {}: {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                failed += usize::from(!o.pass);
            }
            println!("{} checks, {} failed", outcomes.len(), failed);
            return Ok(i32::from(failed > 0));
        }
    }
    Ok(0)
}
