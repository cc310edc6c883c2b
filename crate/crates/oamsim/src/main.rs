use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use oamsim::config::{normalized_echo, parse_config, Config, ConfigError, ConfigErrors, LoadError};
use oamsim::presets::{preset_text, PRESETS};
use oamsim::scenario::{run_scenario, RunError};
use rayon::prelude::*;
use toml::{Table, Value};

/// Simulates OAM transfer from Laguerre-Gaussian Raman pulses to a condensate.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped,
/// 4 I/O failure.
#[derive(Parser)]
#[command(name = "oamsim", version)]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Configuration file.
    config: Option<PathBuf>,
    /// Use a shipped preset instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and print it with every default filled in.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Run a scenario once per value of one key, each in its own directory.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Dotted key path, e.g. `sequence.pulses[0].duration_s`.
        #[arg(long)]
        param: String,
        /// Comma-separated TOML values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Points run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the shipped presets, or print one.
    Presets { name: Option<String> },
}

enum Failure {
    Schema(String),
    Run(RunError),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Run(e) => e.exit_code() as u8,
            Failure::Io(_) => 4,
        }
    }

    fn report(&self) {
        match self {
            Failure::Schema(msg) => eprintln!("configuration error:\n{msg}"),
            Failure::Io(msg) => eprintln!("i/o error: {msg}"),
            Failure::Run(e) => match e.guard_name() {
                Some(g) => eprintln!("numerical guard `{g}` tripped: {e}"),
                None => eprintln!("error: {e}"),
            },
        }
    }
}

fn read_source(source: &Source) -> Result<String, Failure> {
    match (&source.config, &source.preset) {
        (_, Some(name)) => preset_text(name).map(str::to_string).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            Failure::Schema(format!("unknown preset `{name}`; available: {}", names.join(", ")))
        }),
        (Some(path), None) => std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        (None, None) => Err(Failure::Schema("give a configuration file or --preset".into())),
    }
}

fn parse(text: &str) -> Result<Config, Failure> {
    parse_config(text).map_err(|e| Failure::Schema(e.to_string()))
}

/// Replaces the value at a dotted path (with `[i]` array indices) in `doc`.
fn set_path(doc: &mut Table, path: &str, value: Value) -> Result<(), String> {
    let mut parts: Vec<(String, Option<usize>)> = Vec::new();
    for seg in path.split('.') {
        match seg.split_once('[') {
            Some((name, rest)) => {
                let idx = rest.trim_end_matches(']').parse().map_err(|_| format!("bad index in `{seg}`"))?;
                parts.push((name.to_string(), Some(idx)));
            }
            None => parts.push((seg.to_string(), None)),
        }
    }
    let (last, head) = parts.split_last().ok_or("empty key path")?;
    let mut table = doc;
    for (name, idx) in head {
        let entry = table.entry(name.clone()).or_insert_with(|| Value::Table(Table::new()));
        let next = match (entry, idx) {
            (Value::Table(t), None) => t,
            (Value::Array(a), Some(i)) => match a.get_mut(*i) {
                Some(Value::Table(t)) => t,
                _ => return Err(format!("`{name}[{i}]` is not a table")),
            },
            _ => return Err(format!("`{name}` has the wrong shape for `{path}`")),
        };
        table = next;
    }
    match last.1 {
        None => {
            table.insert(last.0.clone(), value);
        }
        Some(i) => match table.get_mut(&last.0) {
            Some(Value::Array(a)) if i < a.len() => a[i] = value,
            _ => return Err(format!("`{}[{i}]` does not exist", last.0)),
        },
    }
    Ok(())
}

fn parse_value(text: &str) -> Result<Value, String> {
    let doc: Table = format!("v = {text}").parse().map_err(|_| format!("`{text}` is not a TOML value"))?;
    Ok(doc["v"].clone())
}

fn run(config: &Config, out: &Path) -> Result<(), Failure> {
    let bundle = run_scenario(config, Some(out)).map_err(Failure::Run)?;
    info!("wrote {}", out.display());
    for (k, v, _) in &bundle.summary.entries {
        println!("{k} = {v}");
    }
    Ok(())
}

fn sweep(text: &str, param: &str, values: &[String], out: &Path, jobs: usize) -> Result<(), Failure> {
    let mut configs = Vec::new();
    let mut errors = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let mut doc: Table = text.parse().map_err(|e: toml::de::Error| Failure::Schema(e.message().to_string()))?;
        let value = parse_value(v.trim()).map_err(Failure::Schema)?;
        set_path(&mut doc, param, value).map_err(|e| Failure::Schema(format!("{param}: {e}")))?;
        match parse_config(&toml::to_string(&doc).expect("table serializes")) {
            Ok(c) => configs.push((i, v.trim().to_string(), c)),
            Err(ConfigErrors(list)) => errors.extend(list.into_iter().map(|e| ConfigError {
                path: e.path,
                message: format!("{} (sweep point {i}, value {v})", e.message),
            })),
        }
    }
    if !errors.is_empty() {
        return Err(Failure::Schema(ConfigErrors(errors).to_string()));
    }
    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    let results: Vec<(usize, String, Result<(), RunError>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|(i, v, c)| {
                let dir = out.join(format!("point_{i:03}"));
                (*i, v.clone(), run_scenario(c, Some(&dir)).map(|_| ()))
            })
            .collect()
    });
    let mut index = String::from("point,param,value,dir,status\n");
    let mut worst: Option<RunError> = None;
    for (i, v, r) in results {
        let status = match &r {
            Ok(()) => "ok".to_string(),
            Err(e) => e.guard_name().unwrap_or("error").to_string(),
        };
        let _ = writeln!(index, "{i},{param},{v},point_{i:03},{status}");
        if let Err(e) = r {
            error!("sweep point {i} ({param} = {v}): {e}");
            if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                worst = Some(e);
            }
        }
    }
    let path = out.join("sweep_index.csv");
    std::fs::write(&path, index).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    match worst {
        Some(e) => Err(Failure::Run(e)),
        None => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { source, out } => {
            let config = parse(&read_source(&source)?)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&config.output_dir));
            run(&config, &out)
        }
        Command::Validate { source } => {
            let config = match (&source.config, &source.preset) {
                (Some(path), None) => oamsim::load_config(path).map_err(|e| match e {
                    LoadError::Io(..) => Failure::Io(e.to_string()),
                    LoadError::Schema(s) => Failure::Schema(s.to_string()),
                })?,
                _ => parse(&read_source(&source)?)?,
            };
            print!("{}", normalized_echo(&config));
            Ok(())
        }
        Command::Sweep { source, param, values, out, jobs } => {
            let text = read_source(&source)?;
            let base = parse(&text)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&base.output_dir));
            sweep(&text, &param, &values, &out, jobs)
        }
        Command::Presets { name: None } => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let text = preset_text(&name).ok_or_else(|| Failure::Schema(format!("unknown preset `{name}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code())
        }
    }
}
