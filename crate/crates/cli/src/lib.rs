//! Command-line surface of the solver: configuration ingestion, run orchestration,
//! and CSV emission. Every subcommand is a thin wrapper over `cns_core`.

pub mod csv;
pub mod error;
pub mod pipeline;
pub mod plot;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use cns_core::config::{parse_list, ConfigMap};
use cns_core::diagnostics::DiagOptions;
use cns_core::error::CnsError;
use cns_core::hausdorff::{parse_scales, CoveringEstimate, SpacetimePoint};
use cns_core::pressure::decompose_local;
use cns_core::regularity::{flag_sweep, RegularityConfig};
use cns_core::solver::{read_trajectory, simulate, write_trajectory, SimConfig, Trajectory};

use crate::error::{CliError, InPhase};
use crate::pipeline::*;

#[derive(Debug, Parser)]
#[command(name = "cns", version, about = "Chemotaxis-Navier-Stokes solver and regularity diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write CNS1 snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Local quantities or the pressure decomposition on a stored run.
    #[command(subcommand)]
    Diagnose(Diagnose),
    /// Local energy inequality residuals for one or more test functions.
    VerifyLei {
        #[arg(long)]
        traj: PathBuf,
        /// `x,y,z`.
        #[arg(long)]
        center: String,
        /// Defaults to the last snapshot time.
        #[arg(long)]
        t: Option<f64>,
        /// Ball radius; defaults to `L/4`.
        #[arg(long)]
        omega: Option<f64>,
        /// `heat:<level>:<scale>` or `bump:<radius>:<duration>`; repeatable.
        #[arg(long, required = true)]
        psi: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep a regularity criterion over a lattice of centers.
    Flag {
        #[arg(long)]
        traj: PathBuf,
        /// thm13, thm16_i or thm16_ii.
        #[arg(long, default_value = "thm13")]
        criterion: String,
        /// Comma list of radii for thm13.
        #[arg(long, default_value = "0.8,1.0")]
        radii: String,
        /// Working radius for thm16_*.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 4)]
        centers_per_axis: usize,
        /// Comma list of times; defaults to the latest admissible snapshots.
        #[arg(long)]
        times: Option<String>,
        #[arg(long, default_value_t = 3)]
        max_times: usize,
        #[arg(long, default_value_t = 1e-2)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Covering-number dimension estimate of a flags CSV.
    Dimension {
        #[arg(long)]
        flags: PathBuf,
        /// `2^-a..2^-b` or a comma list of dyadic radii.
        #[arg(long, default_value = "2^-3..2^-7")]
        scales: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// box or greedy.
        #[arg(long, default_value = "box")]
        method: String,
        /// Spatial period for the greedy metric.
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// simulate, then diagnose, verify-lei, flag and dimension from one config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reduce an output CSV to plot-ready columns.
    EmitPlotData {
        #[arg(long)]
        input: PathBuf,
        /// quantity-vs-r, G-trace, dimension-fit or energy-time.
        #[arg(long)]
        kind: String,
        /// Column for quantity-vs-r.
        #[arg(long, default_value = "A_u")]
        quantity: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum Diagnose {
    /// All local quantities at each radius.
    Quantities {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        center: String,
        /// Defaults to the last snapshot time.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        radii: String,
        #[arg(long)]
        subtract_pressure_mean: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Local pressure split `P = P1 + P2` on one snapshot.
    Pressure {
        #[arg(long)]
        traj: PathBuf,
        /// Snapshot index; defaults to the last.
        #[arg(long)]
        snapshot: Option<usize>,
        #[arg(long)]
        center: String,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

type CliResult<T> = Result<T, CliError>;

/// Cap rayon workers at `CNS_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("CNS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CNS_THREADS = `{v}` is not a positive integer")))?;
    // A pool may already exist when called twice in one process; the first cap wins.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    parse_list(s).map_err(|_| CliError::Usage(format!("{what}: cannot parse `{s}`")))
}

fn point(s: &str, what: &str) -> CliResult<[f64; 3]> {
    parse_point(s, what).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_traj(dir: &Path) -> CliResult<Trajectory> {
    read_trajectory(dir).map(with_sweep_cache).phase("read trajectory")
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    csv::write(path, text).phase("output")
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out } => {
            let map = ConfigMap::load(&config).phase("config")?;
            check_keys(&map).phase("config")?;
            let cfg = SimConfig::from_map(&map).phase("config")?;
            let (traj, log) = simulate(&cfg).phase("simulate")?;
            write_trajectory(&out, &traj).phase("snapshots")?;
            println!(
                "{} snapshots, {} steps, max mass drift {:e}, max div u {:e}",
                traj.len(),
                log.steps,
                log.max_rel_mass_drift,
                log.max_div_u
            );
        }
        Command::Diagnose(Diagnose::Quantities {
            traj,
            center,
            t0,
            radii,
            subtract_pressure_mean,
            out,
        }) => {
            let traj = load_traj(&traj)?;
            let c = point(&center, "--center")?;
            let radii = list(&radii, "--radii")?;
            let t0 = t0.unwrap_or(traj.t_end());
            let opts = DiagOptions {
                subtract_pressure_mean,
            };
            write(&out, &quantities_csv(&traj, c, t0, &radii, opts).phase("quantities")?)?;
        }
        Command::Diagnose(Diagnose::Pressure {
            traj,
            snapshot,
            center,
            rho,
            out,
        }) => {
            let traj = load_traj(&traj)?;
            let j = snapshot.unwrap_or(traj.len() - 1);
            let s = traj.states().get(j).ok_or_else(|| {
                CliError::Usage(format!("snapshot {j} out of range (have {})", traj.len()))
            })?;
            let c = point(&center, "--center")?;
            let d = decompose_local(s, &traj.params, c, rho).phase("pressure")?;
            let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let r2 = 0.25 * rho * rho;
            let split = d
                .mask
                .disp
                .iter()
                .enumerate()
                .filter(|(_, x)| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < r2)
                .map(|(k, _)| (d.p1[k] + d.p2[k] - d.p[k]).abs())
                .fold(0.0, f64::max);
            let mut text = String::from(
                "t,x,y,z,rho,sup_p,sup_p1,sup_p2_inner,max_split_error,cz_ratio,harm_dev_1,harm_dev_2,harm_dev_3,harm_dev_4\n",
            );
            text.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t,
                d.center[0],
                d.center[1],
                d.center[2],
                rho,
                sup(&d.p),
                sup(&d.p1),
                d.p2_sup_inner(),
                split,
                d.cz_ratio
            ));
            for m2 in 1..=4 {
                match d.mean_value_deviation(traj.grid, m2) {
                    Ok((_, dev)) => text.push_str(&format!(",{dev:e}")),
                    Err(_) => text.push_str(",NaN"),
                }
            }
            text.push('\n');
            write(&out, &text)?;
        }
        Command::VerifyLei {
            traj,
            center,
            t,
            omega,
            psi,
            out,
        } => {
            let traj = load_traj(&traj)?;
            let c = point(&center, "--center")?;
            let psis = psi
                .iter()
                .map(|s| parse_psi(s).map(|f| (s.clone(), f)))
                .collect::<Result<Vec<_>, CnsError>>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let t = t.unwrap_or(traj.t_end());
            let omega = omega.unwrap_or(0.25 * traj.grid.l());
            let (text, reports) = lei_csv(&traj, &psis, c, t, omega).phase("lei")?;
            write(&out, &text)?;
            for ((label, _), r) in psis.iter().zip(&reports) {
                println!(
                    "{label}: residual {:e} tolerance {:e} {}",
                    r.residual,
                    r.tolerance,
                    if r.passes() { "pass" } else { "FAIL" }
                );
            }
        }
        Command::Flag {
            traj,
            criterion,
            radii,
            rho,
            centers_per_axis,
            times,
            max_times,
            threshold,
            out,
        } => {
            let traj = load_traj(&traj)?;
            let radii = list(&radii, "--radii")?;
            let crit = parse_criterion(&criterion, radii.clone(), rho)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let reach = match &crit {
                cns_core::regularity::Criterion::Thm13 { radii } => {
                    radii.iter().copied().fold(0.0, f64::max)
                }
                cns_core::regularity::Criterion::Thm16 { rho, .. } => *rho,
            };
            let times = match times {
                Some(s) => list(&s, "--times")?,
                None => admissible_times(&traj, reach, max_times),
            };
            let mut cfg = RegularityConfig::for_trajectory(&traj);
            cfg.working_threshold = threshold;
            let centers = lattice_centers(traj.grid.l(), centers_per_axis);
            let flags = flag_sweep(&traj, &centers, &times, &crit, &cfg).phase("flag")?;
            write(&out, &flags.to_csv())?;
            println!("{} flagged of {}", flags.len(), centers.len() * times.len());
        }
        Command::Dimension {
            flags,
            scales,
            alpha,
            method,
            period,
            out,
        } => {
            let table = csv::Table::load(&flags).phase("read flags")?;
            let cols = ["t0", "x", "y", "z"]
                .map(|c| table.column(c))
                .into_iter()
                .collect::<Result<Vec<_>, CnsError>>()
                .phase("read flags")?;
            let points: Vec<SpacetimePoint> = (0..table.rows.len())
                .map(|i| SpacetimePoint::new([cols[1][i], cols[2][i], cols[3][i]], cols[0][i]))
                .collect();
            let scales = parse_scales(&scales).map_err(|e| CliError::Usage(e.to_string()))?;
            let method = parse_method(&method).map_err(|e| CliError::Usage(e.to_string()))?;
            if points.is_empty() {
                write(&out, &format!("{}\n", CoveringEstimate::CSV_HEADER))?;
                println!("no flagged points");
                return Ok(());
            }
            let e = cns_core::hausdorff::dimension_estimate(&points, &scales, method, period)
                .phase("dimension")?;
            write(&out, &e.to_csv())?;
            println!(
                "slope {:.4} over {} finest scales; N r^{alpha} at finest scale {:e}, trend {}",
                e.slope,
                e.fit_len,
                e.measure_upper(alpha),
                e.measure_trend(alpha, 0.1).name()
            );
        }
        Command::Pipeline { config, out } => {
            let r = run_pipeline(&config, &out)?;
            println!(
                "config {}: {} flagged points, {} LEI checks ({} pass)",
                r.manifest.config_hash,
                r.flags.len(),
                r.lei.len(),
                r.lei.iter().filter(|l| l.passes()).count()
            );
        }
        Command::EmitPlotData {
            input,
            kind,
            quantity,
            out,
        } => {
            let kind: plot::PlotKind = kind.parse().map_err(|e: CnsError| CliError::Usage(e.to_string()))?;
            let table = csv::Table::load(&input).phase("read input")?;
            let text = plot::emit_plot_data(&table, kind, &quantity).phase("plot")?;
            write(&out, &text)?;
        }
    }
    Ok(())
}
