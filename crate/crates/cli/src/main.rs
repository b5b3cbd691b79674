mod config;
mod experiments;

use clap::{Parser, Subcommand};
use config::{parse_entries, ConfigError, Entry, Experiment, ExperimentConfig, Kind, EXPERIMENTS};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "phivar", version, about = "Phi-variation experiments for Hermite processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: `run <experiment> [--key value ...]`.
    ///
    /// Special flags: --config <file>, --seed <u64>, --out <dir>, --threads <n>.
    /// Every other `--key value` sets an experiment parameter and overrides the config file.
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
        args: Vec<String>,
    },
    /// List experiments with their parameters and defaults.
    ListExperiments,
    /// Parse and validate a config file without running it.
    ValidateConfig { file: PathBuf },
}

struct RunArgs {
    config: ExperimentConfig,
    threads: usize,
}

fn flag_error(flag: &str, e: ConfigError) -> String {
    format!("--{flag}: {}", e.msg)
}

fn parse_run_args(args: &[String]) -> Result<RunArgs, String> {
    let mut positional: Option<String> = None;
    let mut config_file: Option<PathBuf> = None;
    let mut threads: Option<usize> = None;
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            if positional.is_some() {
                return Err(format!("unexpected argument `{a}`"));
            }
            positional = Some(a.clone());
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| format!("--{flag} needs a value"))?;
                (flag.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config_file = Some(PathBuf::from(value)),
            "threads" => {
                let n: usize = value.parse().map_err(|_| format!("--threads expects a positive integer, got `{value}`"))?;
                if n == 0 {
                    return Err("--threads must be at least 1".into());
                }
                threads = Some(n);
            }
            "out" => flags.push(("output_dir".into(), value)),
            "experiment" => return Err("give the experiment as the first argument, not --experiment".into()),
            _ => {
                if flags.iter().any(|(k, _)| *k == key) {
                    return Err(format!("--{key} given twice"));
                }
                flags.push((key, value));
            }
        }
    }

    let named = match &positional {
        Some(p) => Some(Experiment::from_name(p).ok_or_else(|| format!("unknown experiment `{p}` (see list-experiments)"))?),
        None => None,
    };
    let mut config = match &config_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let entries = parse_entries(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = ExperimentConfig::from_entries(&entries, named).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(n) = named {
                if n != cfg.experiment {
                    return Err(format!("{} names experiment {}, command line names {}", path.display(), cfg.experiment.name(), n.name()));
                }
            }
            cfg
        }
        None => ExperimentConfig::defaults(named.ok_or("missing experiment name (see list-experiments)")?),
    };
    for (key, value) in flags {
        let entry = Entry { key: key.clone(), value, line: 0, key_col: 0, value_col: 0 };
        config.apply(std::slice::from_ref(&entry)).map_err(|e| flag_error(&key, e))?;
    }
    let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    Ok(RunArgs { config, threads })
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn run(args: &[String]) -> ExitCode {
    let RunArgs { config, threads } = match parse_run_args(args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let plan = match experiments::prepare(&config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = &config.output_dir;
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: creating {}: {e}", dir.display());
        return ExitCode::from(2);
    }

    let name = config.experiment.name();
    let start = Instant::now();
    let report = match plan.execute(threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {name} failed: {e}");
            return ExitCode::from(1);
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let canonical = config.to_file_string();
    let csv_path = dir.join(format!("{name}.csv"));
    let dat_path = dir.join(format!("{name}.dat"));
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    let manifest = format!(
        "experiment = {name}\nseed = {}\nconfig_sha256 = {}\nphivar_version = {}\nphivar_cli_version = {}\nthreads = {threads}\nwall_time_s = {wall:.3}\nverdict = {verdict}\nfiles = {},{}\n\n# canonical config\n{canonical}",
        config.seed,
        sha256_hex(&canonical),
        phivar::VERSION,
        env!("CARGO_PKG_VERSION"),
        csv_path.file_name().unwrap().to_string_lossy(),
        dat_path.file_name().unwrap().to_string_lossy(),
    );
    for (path, body) in [(&csv_path, &report.csv), (&dat_path, &report.dat), (&dir.join("manifest"), &manifest)] {
        if let Err(e) = write_file(path, body) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    println!("{name} (seed {})", config.seed);
    for l in &report.lines {
        println!("  {l}");
    }
    println!("{verdict} [{wall:.2} s, outputs in {}]", dir.display());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn list_experiments() {
    for e in EXPERIMENTS {
        println!("{}", e.name());
        for p in e.params() {
            let kind = match p.kind {
                Kind::Int { .. } => "int",
                Kind::Float { .. } => "float",
                Kind::List => "list",
                Kind::Phi => "phi",
            };
            println!("  --{:<8} {:<6} default {:<16} {}", p.key, kind, p.default, p.help);
        }
    }
}

fn validate_config(file: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = experiments::prepare(&cfg) {
        eprintln!("error: {}: {e}", file.display());
        return ExitCode::from(2);
    }
    println!("valid {} config (sha256 {})", cfg.experiment.name(), sha256_hex(&cfg.to_file_string()));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { args } => run(&args),
        Command::ListExperiments => {
            list_experiments();
            ExitCode::SUCCESS
        }
        Command::ValidateConfig { file } => validate_config(&file),
    }
}
