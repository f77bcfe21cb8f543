use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmlwave::config::ResolvedConfig;
use pmlwave::output::{self, OutputSink};
use pmlwave::{load_and_validate, plot, preset, scenario_presets, ConfigError};
use pmlwave_core::diagnostics::{energy_decay_summary, measure_reflection, required_margin_cells};
use pmlwave_core::scenario::{run, RunOptions};

const OUT_ENV: &str = "PMLWAVE_OUT";
const DEFAULT_OUT: &str = "pmlwave-out";

const EXIT_VALIDATION: u8 = 1;
const EXIT_UNSTABLE: u8 = 2;

/// Elastic and Kelvin-Voigt wave simulation in anisotropic solids with a
/// perfectly matched layer.
///
/// CONFIG is a TOML scenario file or `preset:NAME` for a bundled scenario.
/// Output goes to --out, else the config's `output.dir`, else $PMLWAVE_OUT,
/// else ./pmlwave-out.
#[derive(Debug, Parser)]
#[command(name = "pmlwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario, writing energy history, snapshots and a summary.
    Run {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Steps between energy samples (0 disables).
        #[arg(long)]
        energy_every: Option<u64>,
        /// Steps between displacement snapshots (0 disables).
        #[arg(long)]
        snapshot_every: Option<u64>,
    },
    /// Check a scenario and print the derived quantities.
    Validate {
        config: String,
        /// Also print the normalized scenario file.
        #[arg(long)]
        print_config: bool,
    },
    /// Measure PML reflection against a causally isolated enlarged domain.
    ReflectionTest {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reference margin in cells (default: the causal minimum).
        #[arg(long)]
        margin: Option<usize>,
        /// Probe cube half width as a fraction of the physical half width.
        #[arg(long)]
        probe_fraction: Option<f64>,
        /// Repeat with this many PML cells and report the improvement.
        #[arg(long)]
        compare_cells: Option<usize>,
    },
    /// Render energy.csv and snapshots in an output directory as PNGs.
    Plot {
        dir: PathBuf,
        /// Displacement component for slices (1, 2 or 3).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        component: u8,
    },
    /// List bundled scenarios, or print one.
    Presets { name: Option<String> },
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Unstable(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Validation(e.to_string())
    }
}

fn runtime(context: &str) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{context}: {e}"))
}

fn load(spec: &str) -> Result<ResolvedConfig, Failure> {
    match spec.strip_prefix("preset:") {
        Some(name) => preset(name)
            .ok_or_else(|| Failure::Validation(format!("unknown preset {name:?}")))?
            .resolve()
            .map_err(Failure::from),
        None => load_and_validate(Path::new(spec)).map_err(Failure::from),
    }
}

fn output_dir(flag: Option<PathBuf>, resolved: &ResolvedConfig) -> PathBuf {
    flag.or_else(|| resolved.config.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn cmd_run(
    spec: &str,
    out: Option<PathBuf>,
    energy_every: Option<u64>,
    snapshot_every: Option<u64>,
) -> Result<(), Failure> {
    let resolved = load(spec)?;
    print!("{resolved}");
    let dir = output_dir(out, &resolved);
    let options = RunOptions {
        energy_every: energy_every.unwrap_or(resolved.config.output.energy_every),
        snapshot_every: snapshot_every.unwrap_or(resolved.config.output.snapshot_every),
    };
    let mut sink = OutputSink::create(&dir).map_err(runtime("creating output directory"))?;
    let toml = resolved.config.to_toml_string().map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(dir.join("scenario.toml"), toml).map_err(runtime("writing scenario.toml"))?;
    let report = run(&resolved.scenario, options, &mut sink).map_err(|e| Failure::Validation(e.to_string()))?;
    sink.finish().map_err(runtime("writing outputs"))?;

    let mut summary = String::new();
    writeln!(summary, "steps_taken     = {}", report.steps).unwrap();
    writeln!(summary, "final_time      = {:.6e} s", report.final_time).unwrap();
    if let Ok(d) = energy_decay_summary(&report.trace) {
        writeln!(summary, "peak_energy     = {:.6e} J at {:.6e} s", d.peak, d.peak_time).unwrap();
        writeln!(summary, "final_energy    = {:.6e} J", d.final_energy).unwrap();
        writeln!(summary, "decay_ratio     = {:.6e}", d.ratio).unwrap();
        match d.time_to_one_percent {
            Some(t) => writeln!(summary, "time_to_1pct    = {t:.6e} s").unwrap(),
            None => writeln!(summary, "time_to_1pct    = not reached").unwrap(),
        }
    }
    writeln!(summary, "stable          = {}", report.stable()).unwrap();
    std::fs::write(dir.join("summary.txt"), format!("{resolved}{summary}")).map_err(runtime("writing summary.txt"))?;
    print!("{summary}");
    println!("outputs in {}", dir.display());
    match report.instability {
        Some(e) => Err(Failure::Unstable(e.to_string())),
        None => Ok(()),
    }
}

fn cmd_validate(spec: &str, print_config: bool) -> Result<(), Failure> {
    let resolved = load(spec)?;
    print!("{resolved}");
    if print_config {
        let toml = resolved.config.to_toml_string().map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("\n{toml}");
    }
    println!("valid");
    Ok(())
}

fn cmd_reflection(
    spec: &str,
    out: Option<PathBuf>,
    margin: Option<usize>,
    probe_fraction: Option<f64>,
    compare_cells: Option<usize>,
) -> Result<(), Failure> {
    let resolved = load(spec)?;
    print!("{resolved}");
    let fraction = probe_fraction.unwrap_or(resolved.config.reflection.probe_fraction);
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Failure::Validation(format!("probe fraction must lie in (0, 1] (got {fraction})")));
    }
    let mut scenarios = vec![(resolved.scenario.grid.pml_cells(), resolved.scenario.clone())];
    if let Some(cells) = compare_cells {
        let alt = resolved
            .scenario
            .with_pml_cells(cells, resolved.config.pml.reflection_target.axes())
            .map_err(|e| Failure::Validation(e.to_string()))?;
        scenarios.push((cells, alt));
    }
    let mut reports = Vec::new();
    for (cells, scenario) in &scenarios {
        let required = required_margin_cells(scenario, fraction);
        let margin = margin.or(resolved.config.reflection.margin_cells).unwrap_or(required);
        let report = measure_reflection(scenario, margin, fraction).map_err(|e| match e {
            pmlwave_core::Error::Unstable { .. } => Failure::Unstable(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        })?;
        print!("{}", output::format_reflection_report(&report, *cells));
        reports.push((*cells, report));
    }
    if let [(_, a), (_, b)] = reports.as_slice() {
        if b.max_relative_error > 0.0 {
            println!("improvement = {:.3}", a.max_relative_error / b.max_relative_error);
        }
    }
    let dir = output_dir(out, &resolved);
    std::fs::create_dir_all(&dir).map_err(runtime("creating output directory"))?;
    output::write_reflection_report(&dir.join(output::REFLECTION_FILE), &reports)
        .map_err(runtime("writing reflection report"))?;
    println!("report in {}", dir.join(output::REFLECTION_FILE).display());
    Ok(())
}

fn cmd_plot(dir: &Path, component: u8) -> Result<(), Failure> {
    let mut written = Vec::new();
    let energy = dir.join(output::ENERGY_FILE);
    if energy.exists() {
        let trace = output::read_energy_csv(&energy).map_err(runtime("reading energy.csv"))?;
        let png = dir.join("energy.png");
        plot::write_energy_png(&png, &trace).map_err(|e| Failure::Runtime(e.to_string()))?;
        written.push(png);
    }
    for sidecar in output::list_snapshots(dir).map_err(runtime("listing snapshots"))? {
        let snap = output::read_snapshot(&sidecar).map_err(runtime("reading snapshot"))?;
        let stem = sidecar.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
        let stem = format!("{stem}_u{component}");
        let pngs = plot::write_slice_pngs(dir, &stem, &snap, component as usize - 1)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        written.extend(pngs);
    }
    if written.is_empty() {
        return Err(Failure::Runtime(format!("nothing to plot in {}", dir.display())));
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_presets(name: Option<String>) -> Result<(), Failure> {
    match name {
        Some(n) => {
            let p = preset(&n).ok_or_else(|| Failure::Validation(format!("unknown preset {n:?}")))?;
            print!("{}", p.text);
        }
        None => {
            for p in scenario_presets() {
                println!("{:<22} {}", p.name, p.summary);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, out, energy_every, snapshot_every } => {
            cmd_run(&config, out, energy_every, snapshot_every)
        }
        Command::Validate { config, print_config } => cmd_validate(&config, print_config),
        Command::ReflectionTest { config, out, margin, probe_fraction, compare_cells } => {
            cmd_reflection(&config, out, margin, probe_fraction, compare_cells)
        }
        Command::Plot { dir, component } => cmd_plot(&dir, component),
        Command::Presets { name } => cmd_presets(name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Unstable(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_UNSTABLE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
