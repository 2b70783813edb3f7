use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abgauge_cli::export::{write_fields, write_modes};
use abgauge_cli::report::{run_report, Report};
use abgauge_cli::scenario::{canonical, load, Overrides, Scenario};
use abgauge_cli::CliError;
use abgauge_core::modes::ModeGrid;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "abgauge", version, about = "Gauge, phase and mode-energy checks for static current sources")]
struct Cli {
    /// Report directory.
    #[arg(long, global = true, env = "ABGAUGE_REPORT_DIR")]
    out: Option<PathBuf>,
    /// Multiplies every numerical tolerance (materiality factors excepted).
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
    /// Lattice points per half-axis of the mode grid.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Overrides the coupling g of every source.
    #[arg(long, global = true, allow_negative_numbers = true)]
    strength: Option<f64>,
    /// Suppress progress and the text report on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the checks listed in a scenario file.
    Run { scenario: PathBuf },
    /// Run the built-in canonical scenario.
    Verify,
    /// Write A and B on a probe grid as CSV.
    ExportFields {
        scenario: PathBuf,
        /// Output file; defaults to `<report dir>/<stem>-fields.csv`.
        #[arg(long)]
        out_file: Option<PathBuf>,
        /// Probe counts as `NXxNYxNZ`, e.g. `10x10x1`.
        #[arg(long, value_parser = parse_counts)]
        probe_grid: Option<[usize; 3]>,
        /// Also write lattice mode amplitudes to this file.
        #[arg(long)]
        modes: Option<PathBuf>,
    },
}

fn parse_counts(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<_> = s.split(['x', 'X']).collect();
    let bad = || format!("expected NXxNYxNZ with positive integers, got `{s}`");
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
        if *o == 0 {
            return Err(bad());
        }
    }
    Ok(out)
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn report_dir(cli: &Cli, scenario: &Scenario) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| scenario.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("abgauge-reports"))
}

fn stem(scenario: &Scenario, file: Option<&Path>) -> String {
    scenario
        .output
        .stem
        .clone()
        .or_else(|| file.and_then(|f| f.file_stem()).map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "report".into())
}

fn prepare(cli: &Cli, mut scenario: Scenario) -> Result<Scenario, CliError> {
    scenario.apply(&Overrides { tolerance_scale: cli.tolerance_scale, grid_n: cli.grid_n, strength: cli.strength })?;
    Ok(scenario)
}

fn run_checks(cli: &Cli, scenario: Scenario, file: Option<&Path>) -> Result<bool, CliError> {
    let scenario = prepare(cli, scenario)?;
    let (report, timings) = run_report(&scenario, cli.quiet)?;
    let dir = report_dir(cli, &scenario);
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let stem = stem(&scenario, file);
    let json = dir.join(format!("{stem}.json"));
    let text = dir.join(format!("{stem}.txt"));
    let rendered = report.to_text(&timings);
    std::fs::write(&json, report.to_json()).map_err(|e| io(&json, e))?;
    std::fs::write(&text, &rendered).map_err(|e| io(&text, e))?;
    if !cli.quiet {
        print!("{rendered}");
        println!("reports: {} and {}", json.display(), text.display());
    }
    Ok(Report::passed(&report))
}

fn export(cli: &Cli, file: &Path, out_file: Option<&Path>, counts: Option<[usize; 3]>, modes: Option<&Path>) -> Result<(), CliError> {
    let scenario = prepare(cli, load(file)?)?;
    let counts = counts.unwrap_or(scenario.export.counts);
    let path = match out_file {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = report_dir(cli, &scenario);
            std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
            dir.join(format!("{}-fields.csv", stem(&scenario, Some(file))))
        }
    };
    let f = std::fs::File::create(&path).map_err(|e| io(&path, e))?;
    let rows = write_fields(&scenario, counts, std::io::BufWriter::new(f))?;
    if !cli.quiet {
        println!("{rows} rows written to {}", path.display());
    }
    if let Some(mp) = modes {
        let src = scenario.source.build(scenario.length_unit);
        let grid = ModeGrid::from_source(scenario.grid_spec(), &src, scenario.source.level())?;
        let f = std::fs::File::create(mp).map_err(|e| io(mp, e))?;
        let n = write_modes(&grid, std::io::BufWriter::new(f))?;
        if !cli.quiet {
            println!("{n} modes written to {}", mp.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario } => load(scenario).and_then(|s| run_checks(&cli, s, Some(scenario))),
        Command::Verify => run_checks(&cli, canonical(), None),
        Command::ExportFields { scenario, out_file, probe_grid, modes } => {
            export(&cli, scenario, out_file.as_deref(), *probe_grid, modes.as_deref()).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
