//! Command-line front end. Exit codes: 0 success, 1 user error, 2 internal error.

use std::fmt::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{ArgAction, Parser, Subcommand};
use themis_core::analysis::SignMatrix;
use themis_core::scenario::{self, compute_intervention_index, AnalysisOutput, InterventionReport};
use themis_core::{PipelineRun, RegionModel, RunConfig};

use crate::exec::RayonExecutor;
use crate::io;
use crate::service;

#[derive(Debug, Parser)]
#[command(name = "themis", version, about = "Deep-futures scenario engine")]
pub struct Cli {
    /// Repeat for more diagnostics on stderr.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model document.
    Validate { model: PathBuf },
    /// Merge CSV observations (parameter_id,domain,year,value) into a model.
    Ingest {
        model: PathBuf,
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print key variables and the sign matrix.
    Analyze {
        model: PathBuf,
        #[arg(long, default_value_t = themis_core::analysis::DEFAULT_VARIANCE_THRESHOLD)]
        variance_threshold: f64,
        #[arg(long, default_value_t = themis_core::analysis::DEFAULT_MAX_VARS, value_parser = clap::value_parser!(usize))]
        max_vars: usize,
        #[arg(long, default_value_t = themis_core::analysis::DEFAULT_R_THRESHOLD)]
        r_threshold: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run the full pipeline.
    Run {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = scenario::DEFAULT_SAMPLES, value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        /// Overrides the model's horizon.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        horizon: Option<u32>,
        #[arg(long, default_value_t = scenario::DEFAULT_TRIPWIRE, value_parser = unit_interval)]
        tripwire: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the run record as JSON instead of the table.
        #[arg(long)]
        json: bool,
        #[arg(long, value_parser = clap::value_parser!(usize))]
        threads: Option<usize>,
    },
    /// Summarize a run record.
    Report {
        run: PathBuf,
        #[arg(long, value_parser = unit_interval)]
        tripwire: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "THEMIS_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "THEMIS_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = service::DEFAULT_MAX_SAMPLES)]
        max_samples: u32,
        /// Persist run records here.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::User(_) => 1,
            Self::Internal(_) => 2,
        }
    }
}

fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Parses argv and runs; returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_tracing(cli.verbose);
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            let (CliError::User(m) | CliError::Internal(m)) = &e;
            eprintln!("error: {m}");
            e.code()
        }
    }
}

fn init_tracing(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

/// Runs a subcommand, returning what goes to stdout.
pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Validate { model } => {
            let m = io::load_model(&model).map_err(user)?;
            Ok(format!(
                "ok: {} ({} parameters, {} series, {} actors, {} scenario(s))\n",
                m.region_name,
                m.parameters.len(),
                m.series.len(),
                m.actors.len(),
                m.scenarios().count()
            ))
        }
        Command::Ingest { model, csv, output } => {
            let m = io::load_model(&model).map_err(user)?;
            let merged = io::ingest_csv_file(&m, &csv).map_err(user)?;
            io::save_model(&output, &merged).map_err(user)?;
            let rows: usize = merged.series.iter().map(|s| s.observations.len()).sum();
            Ok(format!("wrote {} ({} series, {rows} observations)\n", output.display(), merged.series.len()))
        }
        Command::Analyze { model, variance_threshold, max_vars, r_threshold, json } => {
            let m = io::load_model(&model).map_err(user)?;
            let config = RunConfig { variance_threshold, max_vars, r_threshold, ..Default::default() };
            config.validate().map_err(user)?;
            let a = scenario::analyze(&m, &config).map_err(user)?;
            Ok(if json { io::to_pretty(&a) } else { analysis_table(&a) })
        }
        Command::Run { model, seed, samples, horizon, tripwire, output, json, threads } => {
            let m = io::load_model(&model).map_err(user)?;
            let config = RunConfig { seed, samples, horizon_years: horizon, tripwire, ..Default::default() };
            let exec = RayonExecutor::new(threads).map_err(internal)?;
            let run = scenario::run_pipeline_with(&m, &config, &exec).map_err(user)?;
            if let Some(path) = &output {
                io::save_run(path, &run).map_err(user)?;
            }
            if json {
                Ok(io::to_pretty(&run))
            } else {
                let report = compute_intervention_index(&run, tripwire).map_err(internal)?;
                Ok(run_table(&m, &run, &report))
            }
        }
        Command::Report { run, tripwire, json } => {
            let r = io::load_run(&run).map_err(user)?;
            let report = compute_intervention_index(&r, tripwire.unwrap_or(r.config.tripwire)).map_err(user)?;
            Ok(if json { io::to_pretty(&report) } else { report_table(&r, &report) })
        }
        Command::Serve { host, port, max_samples, data_dir, threads } => {
            let state = Arc::new(service::AppState::new(max_samples, data_dir, threads).map_err(internal)?);
            let rt = tokio::runtime::Runtime::new().map_err(internal)?;
            rt.block_on(service::serve(SocketAddr::new(host, port), state)).map_err(internal)?;
            Ok(String::new())
        }
    }
}

pub fn sign_table(m: &SignMatrix) -> String {
    let width = m.variables.iter().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:width$}", "");
    for j in 0..m.variables.len() {
        let _ = write!(out, " {:>2}", j + 1);
    }
    out.push('\n');
    for (i, v) in m.variables.iter().enumerate() {
        let _ = write!(out, "{v:width$}");
        for s in &m.entries[i] {
            let _ = write!(out, "  {}", s.glyph());
        }
        let _ = writeln!(out, "   ({})", i + 1);
    }
    out
}

pub fn analysis_table(a: &AnalysisOutput) -> String {
    let k = &a.key_variables;
    let mut out = format!(
        "panel {}-{}; {} component(s) explain {:.1}% of variance\nkey variables:\n",
        a.panel_years.0,
        a.panel_years.1,
        k.components_retained,
        100.0 * k.cumulative_variance
    );
    for (i, v) in k.selected.iter().enumerate() {
        let step = k.selection_trace.iter().find(|s| &s.variable == v);
        match step {
            Some(s) => {
                let _ = writeln!(out, "  {}. {v} (component {}, loading {:+.3})", i + 1, s.component + 1, s.loading);
            }
            None => {
                let _ = writeln!(out, "  {}. {v}", i + 1);
            }
        }
    }
    out.push_str("sign matrix (row affects column; 1 self, + plus, - minus, x none):\n");
    out.push_str(&sign_table(&a.sign_matrix));
    if a.adjacency_estimated {
        out.push_str("adjacency estimated from data\n");
    }
    out
}

fn years_list(ys: &[i32]) -> String {
    if ys.is_empty() {
        "none".into()
    } else {
        ys.iter().map(i32::to_string).collect::<Vec<_>>().join(", ")
    }
}

pub fn run_table(m: &RegionModel, run: &PipelineRun, report: &InterventionReport) -> String {
    let mut out = format!(
        "{}: {} year(s), seed {}, {} samples, run {}\n",
        m.region_name, run.horizon_years, run.seed, run.config.samples, run.run_id
    );
    out.push_str("year  index   90% CI\n");
    for y in &run.per_year {
        let _ = writeln!(
            out,
            "{}  {:.4}  [{:.4}, {:.4}]",
            y.year, y.p_intervention_mean, y.p_intervention_ci.0, y.p_intervention_ci.1
        );
    }
    let _ = writeln!(out, "tripwire {:.2}: {}", report.tripwire_threshold, years_list(&report.tripwire_years));
    if !run.actor_ranking.is_empty() {
        let ranking: Vec<String> = run.actor_ranking.iter().map(|(a, v)| format!("{a} {v:.3}")).collect();
        let _ = writeln!(out, "actor attainment (final year): {}", ranking.join(", "));
    }
    if let Some(last) = run.final_year() {
        let _ = writeln!(out, "final-year intervention index: {:.4}", last.p_intervention_mean);
    }
    out
}

pub fn report_table(run: &PipelineRun, report: &InterventionReport) -> String {
    let mut out = format!("run {} ({})\n", report.run_id, run.region_name);
    for (y, v) in report.years.iter().zip(&report.index_series) {
        let flag = if *v >= report.tripwire_threshold { "  *" } else { "" };
        let _ = writeln!(out, "{y}  {v:.4}{flag}");
    }
    let _ = writeln!(out, "tripwire {:.2}: {}", report.tripwire_threshold, years_list(&report.tripwire_years));
    if let Some(last) = report.top_drivers.last() {
        let _ = writeln!(out, "top drivers in {}:", last.year);
        for d in &last.drivers {
            let _ = writeln!(out, "  {:<24} prior {:.3}  swing {:.4}", d.root, d.prior, d.swing);
        }
    }
    out
}
