use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pmf_entangle::analysis::{
    self, format_sig, write_atomic, ExperimentConfig, ReconstructionReport, VisibilityBasis,
};
use pmf_entangle::quantum_state::{DensityMatrixJson, TwoQubitState};
use pmf_entangle::tomography::{read_counts_csv, write_counts_csv};
use pmf_entangle::{Error, Result};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Parser)]
#[command(name = "pmfe", version = VERSION, about = "Fiber Sagnac entangled-pair source model and two-qubit tomography")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file, or `default` for the built-in defaults.
    #[arg(long, global = true, default_value = "default")]
    config: String,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (directory for full-experiment). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the phase-matched signal and idler.
    Phasematch,
    /// Sample the joint spectral amplitude.
    Jsa,
    /// Model tangle versus applied delay.
    DelaySweep,
    /// Simulate 36-setting coincidence counts.
    TomoSimulate {
        /// Density matrix JSON to measure instead of the modeled source.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Maximum-likelihood reconstruction from a counts CSV.
    TomoReconstruct {
        #[arg(long)]
        counts: PathBuf,
    },
    /// Interference fringes of a state (density matrix or reconstruction JSON).
    Visibility {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        basis: BasisArg,
    },
    /// Delay sweep with simulated tomography, plus a full characterization
    /// at the configured delay. Writes a directory.
    FullExperiment,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Hv,
    Da,
    Both,
}

impl BasisArg {
    fn bases(self) -> Vec<VisibilityBasis> {
        match self {
            BasisArg::Hv => vec![VisibilityBasis::HV],
            BasisArg::Da => vec![VisibilityBasis::DA],
            BasisArg::Both => vec![VisibilityBasis::HV, VisibilityBasis::DA],
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = if common.config == "default" {
        ExperimentConfig::default()
    } else {
        ExperimentConfig::load(Path::new(&common.config))?
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let cfg = load_config(common)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let format = |default| common.format.unwrap_or(default);

    match cli.command {
        Command::Phasematch => {
            let fiber = cfg.fiber()?;
            let sol = pmf_entangle::dispersion::solve_phase_matching(
                &fiber,
                cfg.pump.center_wavelength_nm,
            )?;
            let report = sol.report();
            match format(Format::Json) {
                Format::Json => emit(out.as_deref(), &json(&report)?),
                Format::Csv => emit(out.as_deref(), &csv_rows(&[report])?),
            }
        }
        Command::Jsa => {
            let model = analysis::SourceModel::build(&cfg)?;
            match format(Format::Json) {
                Format::Json => emit(out.as_deref(), &json(&model.jsa.to_json())?),
                Format::Csv => {
                    let j = model.jsa.to_json();
                    let mut s = String::from("signal_omega_rad_s,idler_omega_rad_s,re,im\n");
                    for (a, ws) in j.signal_omega_rad_s.iter().enumerate() {
                        for (b, wi) in j.idler_omega_rad_s.iter().enumerate() {
                            s.push_str(&format!("{ws},{wi},{},{}\n", j.re[a][b], j.im[a][b]));
                        }
                    }
                    emit(out.as_deref(), &s)
                }
            }
        }
        Command::DelaySweep => {
            let rows = analysis::model_delay_sweep(&cfg)?;
            match format(Format::Csv) {
                Format::Json => emit(out.as_deref(), &json(&rows)?),
                Format::Csv => emit(out.as_deref(), &csv_rows(&rows)?),
            }
        }
        Command::TomoSimulate { state } => {
            let rho = match state {
                Some(path) => read_state(&path)?,
                None => analysis::SourceModel::build(&cfg)?.configured_state()?,
            };
            let records = analysis::acquire_counts(&cfg, &rho, cfg.seed)?;
            match format(Format::Csv) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_counts_csv(&records, &mut buf)?;
                    emit(
                        out.as_deref(),
                        &String::from_utf8(buf).expect("csv is utf-8"),
                    )
                }
                Format::Json => {
                    let rows: Vec<_> = records
                        .iter()
                        .map(|r| CountJson {
                            signal: r.setting.signal.to_string(),
                            idler: r.setting.idler.to_string(),
                            coincidences: r.coincidences,
                            duration_s: r.duration_s,
                        })
                        .collect();
                    emit(out.as_deref(), &json(&rows)?)
                }
            }
        }
        Command::TomoReconstruct { counts } => {
            let file = std::fs::File::open(&counts)
                .map_err(|e| Error::Parse(format!("cannot open {}: {e}", counts.display())))?;
            let records = read_counts_csv(file)?;
            let (result, boot) = analysis::reconstruct(&cfg, &records, cfg.seed)?;
            let report = ReconstructionReport::new(&result, boot.as_ref());
            match format(Format::Json) {
                Format::Json => emit(out.as_deref(), &json(&report)?),
                Format::Csv => emit(out.as_deref(), &report_csv(&report)),
            }
        }
        Command::Visibility { state, basis } => {
            let rho = read_state(&state)?;
            let results = basis
                .bases()
                .into_iter()
                .map(|b| {
                    analysis::visibility_report(
                        &rho,
                        b,
                        cfg.visibility.points,
                        cfg.tomography.brightness,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            match format(Format::Csv) {
                Format::Csv => emit(out.as_deref(), &fringe_csv(&results)),
                Format::Json => {
                    let reports: Vec<_> = results.iter().map(|(_, r)| r).collect();
                    emit(out.as_deref(), &json(&reports)?)
                }
            }
        }
        Command::FullExperiment => {
            let dir = out.unwrap_or_else(|| PathBuf::from("pmfe-out"));
            std::fs::create_dir_all(&dir)?;
            let full = analysis::run_full_experiment(&cfg)?;
            write_atomic(&dir.join("config.toml"), cfg.to_toml_string().as_bytes())?;
            write_atomic(
                &dir.join("phasematch.json"),
                json(&full.phasematch)?.as_bytes(),
            )?;
            write_atomic(
                &dir.join("sweep.csv"),
                experiment_csv(&full.sweep.rows).as_bytes(),
            )?;
            write_atomic(
                &dir.join("sweep_summary.json"),
                json(&full.sweep.summary)?.as_bytes(),
            )?;
            let mut buf = Vec::new();
            write_counts_csv(&full.counts, &mut buf)?;
            write_atomic(&dir.join("counts.csv"), &buf)?;
            write_atomic(
                &dir.join("reconstruction.json"),
                json(&full.reconstruction)?.as_bytes(),
            )?;
            write_atomic(
                &dir.join("visibility.csv"),
                fringe_csv(&full.visibility).as_bytes(),
            )?;
            let reports: Vec<_> = full.visibility.iter().map(|(_, r)| r).collect();
            write_atomic(&dir.join("visibility.json"), json(&reports)?.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CountJson {
    signal: String,
    idler: String,
    coincidences: u64,
    duration_s: f64,
}

/// Accepts a bare density matrix or any JSON object with a
/// `density_matrix` field (e.g. a reconstruction report).
fn read_state(path: &Path) -> Result<TwoQubitState> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let dm = value.get("density_matrix").cloned().unwrap_or(value);
    let dm: DensityMatrixJson = serde_json::from_value(dm)?;
    dm.to_state()
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn experiment_csv(rows: &[analysis::ExperimentRow]) -> String {
    let mut s = String::from("delay_fs,true_tangle,reconstructed_tangle,bootstrap_std\n");
    for r in rows {
        let std = r
            .bootstrap_std
            .map(|x| format_sig(x, 10))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.delay_fs,
            format_sig(r.true_tangle, 10),
            format_sig(r.reconstructed_tangle, 10),
            std
        ));
    }
    s
}

fn fringe_csv(results: &[(analysis::VisibilityScan, analysis::VisibilityReport)]) -> String {
    let mut s = String::from("basis,theta_rad,coincidences,fit\n");
    for (scan, _) in results {
        for (t, c) in scan.angles_rad.iter().zip(&scan.coincidences) {
            s.push_str(&format!(
                "{},{},{},{}\n",
                scan.basis,
                format_sig(*t, 12),
                format_sig(*c, 12),
                format_sig(scan.fit.eval(*t), 12)
            ));
        }
    }
    s
}

fn report_csv(r: &ReconstructionReport) -> String {
    let mut s = String::from("quantity,value,std\n");
    let std = |name: &str| {
        r.errors
            .as_ref()
            .and_then(|e| e.get(name))
            .map(|e| e.std.to_string())
            .unwrap_or_default()
    };
    for (name, v) in [
        ("tangle", r.tangle),
        ("linear_entropy", r.linear_entropy),
        ("fidelity_phi_plus", r.fidelity_phi_plus),
        ("neg_log_likelihood", r.neg_log_likelihood),
        ("brightness_estimate", r.brightness_estimate),
    ] {
        s.push_str(&format!("{name},{v},{}\n", std(name)));
    }
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
