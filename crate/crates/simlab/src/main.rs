use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use macoff_core::{Mode, Scenario, Scheme, Solution};
use macoff_oracle::{oracle_solve, GridSpec};
use macoff_simlab::montecarlo::{trial_rows, write_aggregates_csv};
use macoff_simlab::sweep::{run_sweep, solve_one, supported, sweep_rows};
use macoff_simlab::table::{read_csv, to_json, write_csv};
use macoff_simlab::{run_montecarlo, Config, MonteCarloSpec, Row, SweepSpec};

#[derive(Parser)]
#[command(name = "macoff", version, about = "Two-user offloading energy minimisation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Output {
    /// Emit the result table as JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit the result table as CSV.
    #[arg(long)]
    csv: bool,
    /// Write the table here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the config's scenario.
    Solve {
        #[arg(long, short)]
        config: PathBuf,
        /// Scheme to run; repeat for several. Defaults to all the mode supports.
        #[arg(long, short)]
        scheme: Vec<Scheme>,
        #[arg(long, short, default_value = "binary")]
        mode: Mode,
        #[command(flatten)]
        output: Output,
    },
    /// Run the config's sweeps.
    Sweep {
        #[arg(long, short)]
        config: PathBuf,
        /// Run only the sweep with this index.
        #[arg(long)]
        index: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the config's Monte Carlo experiment.
    Montecarlo {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write every trial's solutions as CSV here.
        #[arg(long)]
        trials_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the solvers with the brute-force grid oracle.
    OracleCheck {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, short)]
        scheme: Vec<Scheme>,
        #[arg(long, short, default_value = "binary")]
        mode: Mode,
        /// Grid points per variable; defaults depend on the dimension.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 3)]
        refinements: usize,
        #[arg(long, default_value_t = 0.1)]
        shrink: f64,
    },
    /// Re-check a CSV of solutions against the scenarios of a config.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long, short)]
        input: PathBuf,
        /// Relative tolerance of the constraint checks.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn load(path: &Path) -> Result<Config> {
    let c = Config::load(path)?;
    for w in c.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(c)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn fmt_energy(s: &Solution) -> String {
    if s.feasible {
        format!("{:.6e} ({:.6e} J)", s.total_energy(), s.total_energy_joules())
    } else {
        "infeasible".into()
    }
}

/// Writes the rows in the requested format; without a format flag prints a
/// short human summary.
fn emit(rows: &[Row], output: &Output) -> Result<()> {
    let mut w = sink(&output.out)?;
    if output.json {
        writeln!(w, "{}", to_json(rows))?;
    } else if output.csv || output.out.is_some() {
        write_csv(rows, &mut w)?;
    } else {
        for r in rows {
            let e = match (r.energy_total_norm, r.energy_total_joules) {
                (Some(n), Some(j)) => format!("{n:.6e} ({j:.6e} J)"),
                _ => "infeasible".into(),
            };
            let v = r.sweep_value.map(|v| format!(" @ {v}")).unwrap_or_default();
            writeln!(w, "{}{v}  {:>6} {:>7}  {e}  [{}]", r.scenario_id, r.scheme, r.mode, r.case_trace)?;
        }
    }
    Ok(())
}

fn schemes_for(given: &[Scheme], mode: Mode) -> Vec<Scheme> {
    if given.is_empty() {
        supported(&Scheme::ALL, mode)
    } else {
        given.to_vec()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Scenario a row was solved on, rebuilt from its id.
fn scenario_of(c: &Config, sweeps: &[SweepSpec], row: &Row) -> Result<Scenario> {
    if let Some(rest) = row.scenario_id.strip_prefix("mc:") {
        let mut spec = MonteCarloSpec::from_config(c)?;
        let (mut d1, mut trial) = (None, None);
        for part in rest.split(':') {
            match part.split_once('=') {
                Some(("seed", v)) => spec.seed = v.parse()?,
                Some(("d1", v)) => d1 = Some(v.parse::<f64>()?),
                Some(("trial", v)) => trial = Some(v.parse::<usize>()?),
                None if part == "equal" => spec.force_equal_gains = true,
                _ => bail!("unrecognised scenario id `{}`", row.scenario_id),
            }
        }
        let (d1, trial) = d1.zip(trial).ok_or_else(|| anyhow!("incomplete scenario id `{}`", row.scenario_id))?;
        return Ok(spec.config_for(d1, trial).scenario()?);
    }
    if let (Some((name, _)), Some(v)) = (row.scenario_id.rsplit_once('#'), row.sweep_value) {
        let spec = sweeps
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| anyhow!("no sweep named `{name}` in the config"))?;
        return Ok(spec.scenario_at(v)?);
    }
    Ok(c.scenario()?)
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Solve {
            config,
            scheme,
            mode,
            output,
        } => {
            let c = load(&config)?;
            let s = c.scenario()?;
            let rows = schemes_for(&scheme, mode)
                .into_iter()
                .map(|sch| Ok(Row::new(c.name(), None, &solve_one(&s, sch, mode)?)))
                .collect::<Result<Vec<_>>>()?;
            emit(&rows, &output)
        }
        Cmd::Sweep { config, index, output } => {
            let c = load(&config)?;
            if c.sweeps.is_empty() {
                bail!("{} has no [[sweep]] table", config.display());
            }
            let specs = match index {
                Some(i) => vec![SweepSpec::from_config(&c, i)?],
                None => SweepSpec::all(&c)?,
            };
            let mut rows = Vec::new();
            for spec in &specs {
                rows.extend(sweep_rows(&run_sweep(spec)?));
            }
            emit(&rows, &output)
        }
        Cmd::Montecarlo {
            config,
            trials,
            seed,
            trials_out,
            output,
        } => {
            let c = load(&config)?;
            let mut spec = MonteCarloSpec::from_config(&c)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.keep_trials = trials_out.is_some();
            let report = run_montecarlo(&spec)?;
            if let Some(p) = &trials_out {
                write_csv(&trial_rows(&spec, &report.trials), File::create(p)?)?;
            }
            let mut w = sink(&output.out)?;
            if output.json {
                writeln!(w, "{}", serde_json::to_string_pretty(&report.aggregates)?)?;
            } else if output.csv || output.out.is_some() {
                write_aggregates_csv(&report.aggregates, &mut w)?;
            } else {
                for a in &report.aggregates {
                    let mean = a.mean_energy_norm.map_or("no feasible trial".into(), |e| format!("{e:.6e}"));
                    writeln!(
                        w,
                        "d1 = {:>6} m  {:>7} {:>6}  mean energy {mean}  used {}/{} (filtered {})",
                        a.distance1, a.mode, a.scheme, a.used, a.trials, a.filtered
                    )?;
                }
            }
            Ok(())
        }
        Cmd::OracleCheck {
            config,
            scheme,
            mode,
            grid,
            refinements,
            shrink,
        } => {
            let c = load(&config)?;
            let s = c.scenario()?;
            let g = GridSpec::new(grid, refinements, shrink)?;
            for sch in schemes_for(&scheme, mode) {
                let sol = solve_one(&s, sch, mode)?;
                let o = oracle_solve(&s, sch, mode, &g)?;
                let verdict = match (sol.feasible, o.feasible) {
                    (true, true) => format!("relative difference {:.3e}", rel(sol.total_energy(), o.total_energy())),
                    (false, false) => "both infeasible".into(),
                    (a, b) => format!("feasibility disagrees (solver {a}, oracle {b})"),
                };
                println!("{sch:>6} {mode:>7}  solver {}  oracle {}  {verdict}", fmt_energy(&sol), fmt_energy(&o));
            }
            Ok(())
        }
        Cmd::Validate { config, input, tol } => {
            let c = load(&config)?;
            let sweeps = SweepSpec::all(&c)?;
            let rows = read_csv(File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
            let mut bad = 0;
            for (i, row) in rows.iter().enumerate() {
                let s = scenario_of(&c, &sweeps, row)?;
                let sol = row.to_solution(s.symbol_interval())?;
                let v = sol.violations(&s, tol);
                if !v.is_empty() {
                    bad += 1;
                    println!("row {} ({} {} {}): {}", i + 1, row.scenario_id, row.scheme, row.mode, v.join("; "));
                }
            }
            println!("{} rows checked, {bad} with violations", rows.len());
            if bad > 0 {
                bail!("{bad} rows failed validation");
            }
            Ok(())
        }
    }
}
