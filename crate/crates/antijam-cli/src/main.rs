//! `antijam` command-line driver.

use antijam_core::harness::{
    ridge_image, run_scenario, run_sweep, write_image, write_run, write_simulation, Format, Method, PipelineConfig,
    SweepSpec, SweepVariable,
};
use antijam_core::linedet::candidate_lines;
use antijam_core::scenario::ScenarioConfig;
use antijam_core::siggen::{band_limit, simulate};
use antijam_core::tfr::{rasterize, stft, wd_distribution, TfConfig};
use antijam_core::Error;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "antijam", version, about = "ISRJ suppression for LFM radar: simulate, analyse, sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (`key = value`); defaults to the single-jammer preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario used when no --config is given.
    #[arg(long, default_value = "table1", value_parser = ["table1", "table2"])]
    preset: String,
    /// Overrides the scenario's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// bin (raw signals, PGM images) or csv.
    #[arg(long, default_value = "bin")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Write the echo, jamming, noise and received signals.
    Simulate(Common),
    /// Write STFT, WD and GLWD images of the received signal.
    Tfr(Common),
    /// Write candidate ridge segments found in the GLWD image.
    Detect(Common),
    /// End-to-end run of one method.
    Suppress {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed")]
        method: String,
    },
    /// Monte Carlo sweep over SJR or SNR.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// sjr_db or snr_db.
        #[arg(long, default_value = "sjr_db")]
        variable: String,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long, default_value_t = 2.0)]
        step: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Comma-separated methods.
        #[arg(long, default_value = "proposed,energy_baseline,none")]
        method: String,
    },
    /// Summarise sweep CSV files per method.
    Report {
        /// Sweep CSV files.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 4,
            Error::NoTargetRidge | Error::EmptyImage => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 4, msg: format!("i/o error: {e}") }
    }
}

type CliResult = Result<(), Failure>;

fn load(common: &Common) -> Result<(ScenarioConfig, Format), Failure> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None if common.preset == "table2" => ScenarioConfig::table2(),
        None => ScenarioConfig::table1(),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    let format: Format = common.format.parse()?;
    fs::create_dir_all(&common.out_dir)?;
    Ok((cfg, format))
}

fn cmd_simulate(common: &Common) -> CliResult {
    let (cfg, format) = load(common)?;
    let rx = simulate(&cfg)?;
    write_simulation(&common.out_dir, &cfg, &rx, format)?;
    Ok(())
}

fn cmd_tfr(common: &Common) -> CliResult {
    let (cfg, format) = load(common)?;
    let pipe = PipelineConfig::default();
    let wf = &cfg.waveform;
    let input = band_limit(&simulate(&cfg)?.total, wf.bandwidth_hz)?;
    let dir = &common.out_dir;
    write_image(dir, "stft", &stft(&input, pipe.stft_window, pipe.stft_hop)?.magnitude_image(), format)?;
    let tf = TfConfig {
        time_unit_s: Some(pipe.time_unit(wf)),
        half_lag: pipe.half_lag,
        n_freq: pipe.n_freq,
        exec: pipe.exec,
        ..TfConfig::default()
    };
    let wd = rasterize(&wd_distribution(&input, &tf)?.magnitude(), pipe.floor_db)?;
    write_image(dir, "wd", &wd, format)?;
    write_image(dir, "glwd", &ridge_image(&input, wf, &pipe)?.image, format)?;
    Ok(())
}

fn cmd_detect(common: &Common) -> CliResult {
    let (cfg, _) = load(common)?;
    let pipe = PipelineConfig::default();
    let wf = &cfg.waveform;
    let input = band_limit(&simulate(&cfg)?.total, wf.bandwidth_hz)?;
    let ri = ridge_image(&input, wf, &pipe)?;
    let det = ri.detector(&pipe);
    let set = candidate_lines(&ri.image, &det)?;
    set.write_csv(BufWriter::new(File::create(common.out_dir.join("segments.csv"))?))?;
    let best = set
        .segments
        .iter()
        .find(|s| {
            let dc = (s.t2 - s.t1) / ri.image.t_axis.step;
            let dr = (s.u2 - s.u1) / ri.image.u_axis.step;
            dc.hypot(dr) > det.gamma1
        })
        .ok_or(Error::NoTargetRidge)?;
    let line = ri.chirp_line(best, wf)?;
    let mut w = BufWriter::new(File::create(common.out_dir.join("chirp_line.csv"))?);
    writeln!(w, "t1,f1,t2,f2,score")?;
    writeln!(w, "{:.12e},{:.6},{:.12e},{:.6},{:.6}", line.t1, line.u1, line.t2, line.u2, line.score)?;
    w.flush()?;
    Ok(())
}

fn cmd_suppress(common: &Common, method: &str) -> CliResult {
    let (cfg, format) = load(common)?;
    let method: Method = method.parse()?;
    let run = run_scenario(&cfg, method, &PipelineConfig::default())?;
    write_run(&common.out_dir, &cfg, &run, format)?;
    print!("{}", fs::read_to_string(common.out_dir.join("report.txt"))?);
    if run.ridge_missing {
        return Err(Error::NoTargetRidge.into());
    }
    Ok(())
}

fn cmd_sweep(common: &Common, variable: &str, range: (f64, f64, f64), trials: usize, methods: &str) -> CliResult {
    let (cfg, _) = load(common)?;
    let methods = methods
        .split(',')
        .map(|m| m.trim().parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec {
        variable: variable.parse::<SweepVariable>()?,
        start: range.0,
        stop: range.1,
        step: range.2,
        trials,
        methods,
        base_seed: cfg.noise.seed,
    };
    spec.validate()?;
    let file = File::create(common.out_dir.join("sweep.csv"))?;
    run_sweep(&cfg, &spec, &PipelineConfig::default(), BufWriter::new(file))?;
    Ok(())
}

#[derive(Default)]
struct Summary {
    points: usize,
    trials: usize,
    sjrif: Vec<f64>,
    slr: Vec<f64>,
    pd: Vec<f64>,
}

fn mean(v: &[f64]) -> String {
    if v.is_empty() {
        "nan".into()
    } else {
        format!("{:.6}", v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn read_sweep(path: &Path, by_method: &mut BTreeMap<String, Summary>) -> CliResult {
    let file = File::open(path).map_err(|e| Failure { code: 4, msg: format!("{}: {e}", path.display()) })?;
    let bad = |line: usize| Failure { code: 2, msg: format!("{}:{line}: malformed sweep row", path.display()) };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(i + 1));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(i + 1));
        let s = by_method.entry(f[2].to_string()).or_default();
        s.points += 1;
        s.trials += f[3].parse::<usize>().map_err(|_| bad(i + 1))?;
        let sj = num(4)?;
        if sj.is_finite() {
            s.sjrif.push(sj);
        }
        s.slr.push(num(6)?);
        s.pd.push(num(8)?);
    }
    Ok(())
}

fn cmd_report(inputs: &[PathBuf], out_dir: &Path) -> CliResult {
    let mut by_method = BTreeMap::new();
    for p in inputs {
        read_sweep(p, &mut by_method)?;
    }
    fs::create_dir_all(out_dir)?;
    let mut text = String::from("method,points,trials,sjrif_mean_db,slr_mean_db,detection_probability_mean\n");
    for (m, s) in &by_method {
        text.push_str(&format!("{m},{},{},{},{},{}\n", s.points, s.trials, mean(&s.sjrif), mean(&s.slr), mean(&s.pd)));
    }
    fs::write(out_dir.join("summary.csv"), &text)?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => cmd_simulate(c),
        Command::Tfr(c) => cmd_tfr(c),
        Command::Detect(c) => cmd_detect(c),
        Command::Suppress { common, method } => cmd_suppress(common, method),
        Command::Sweep { common, variable, start, stop, step, trials, method } => {
            cmd_sweep(common, variable, (*start, *stop, *step), *trials, method)
        }
        Command::Report { inputs, out_dir } => cmd_report(inputs, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("antijam: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
