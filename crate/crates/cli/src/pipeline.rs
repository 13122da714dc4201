//! Configuration-driven orchestration: simulate, diagnose, flag, estimate dimension.

use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use cns_core::config::{parse_list, ConfigMap};
use cns_core::diagnostics::{compute_quantities, DiagOptions, LocalQuantities};
use cns_core::energy::{
    global_energy_check, heat_test_function, lei_residual, LeiOptions, LeiReport, SmoothBump,
    TestFunction,
};
use cns_core::error::{CnsError, Result};
use cns_core::fields::Cylinder;
use cns_core::hausdorff::{dimension_estimate, flag_points, parse_scales, CountMethod, SpacetimePoint};
use cns_core::regularity::{flag_sweep, Criterion, FlagSet, RegularityConfig, Thm16Variant};
use cns_core::solver::{simulate, write_trajectory, SimConfig, Trajectory};

use crate::csv;
use crate::error::{CliError, InPhase};

/// Every key a configuration file may contain.
pub const KNOWN_KEYS: &[&str] = &[
    "grid.n",
    "grid.l",
    "dt",
    "t_end",
    "output_stride",
    "scheme",
    "theta0",
    "chi.coeffs",
    "gravity",
    "seed",
    "init.n",
    "init.n.value",
    "init.n.amp",
    "init.n.sigma",
    "init.n.center",
    "init.n.background",
    "init.c",
    "init.c.value",
    "init.c.mean",
    "init.c.amp",
    "init.u",
    "init.u.amp",
    "init.u.kmax",
    "diag.center",
    "diag.radii",
    "diag.subtract_pressure_mean",
    "lei.levels",
    "lei.scale",
    "lei.omega",
    "lei.bump.radius",
    "lei.bump.duration",
    "flag.criterion",
    "flag.radii",
    "flag.rho",
    "flag.centers_per_axis",
    "flag.max_times",
    "flag.working_threshold",
    "dimension.scales",
    "dimension.alpha",
    "dimension.method",
];

pub fn check_keys(map: &ConfigMap) -> Result<()> {
    match map.keys().find(|k| !KNOWN_KEYS.contains(k)) {
        Some(k) => Err(CnsError::Config(format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

/// Parse `x,y,z`.
pub fn parse_point(s: &str, what: &str) -> Result<[f64; 3]> {
    match parse_list(s) {
        Ok(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        _ => Err(CnsError::Config(format!("{what}: expected `x,y,z`, got `{s}`"))),
    }
}

/// `heat:<level>:<scale>` or `bump:<radius>:<duration>`.
pub fn parse_psi(s: &str) -> Result<TestFunction> {
    let bad = || CnsError::Config(format!("test function `{s}`: expected heat:L:S or bump:R:T"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    match parts[0] {
        "heat" => {
            let level = parts[1].parse().map_err(|_| bad())?;
            let scale = parts[2].parse().map_err(|_| bad())?;
            heat_test_function(level, scale)
        }
        "bump" => {
            let radius = parts[1].parse().map_err(|_| bad())?;
            let duration = parts[2].parse().map_err(|_| bad())?;
            let f = TestFunction::SmoothBump(SmoothBump { radius, duration });
            f.validate()?;
            Ok(f)
        }
        _ => Err(bad()),
    }
}

pub fn parse_criterion(name: &str, radii: Vec<f64>, rho: f64) -> Result<Criterion> {
    match name {
        "thm13" => Ok(Criterion::Thm13 { radii }),
        "thm16_i" => Ok(Criterion::Thm16 {
            rho,
            variant: Thm16Variant::I,
        }),
        "thm16_ii" => Ok(Criterion::Thm16 {
            rho,
            variant: Thm16Variant::II,
        }),
        other => Err(CnsError::Config(format!(
            "criterion `{other}`: expected thm13, thm16_i or thm16_ii"
        ))),
    }
}

pub fn parse_method(name: &str) -> Result<CountMethod> {
    match name {
        "box" => Ok(CountMethod::BoxCount),
        "greedy" => Ok(CountMethod::Greedy),
        other => Err(CnsError::Config(format!("count method `{other}`: expected box or greedy"))),
    }
}

/// Bytes of derived fields held per cached snapshot: ten scalar fields.
const DERIVED_BYTES_PER_CELL: usize = 80;
const DERIVED_CACHE_BUDGET: usize = 1 << 30;

/// Cache derived fields for every snapshot when they fit in the memory budget, so
/// sweeps over many centers do not recompute them.
pub fn with_sweep_cache(traj: Trajectory) -> Trajectory {
    let per = DERIVED_BYTES_PER_CELL * traj.grid.len();
    // Never below the default, even for short runs or large grids.
    let cap = (DERIVED_CACHE_BUDGET / per.max(1))
        .min(traj.len())
        .max(cns_core::solver::DEFAULT_DERIVED_CACHE);
    traj.with_cache_capacity(cap)
}

/// Cell centers of an `m^3` lattice on the periodic box.
pub fn lattice_centers(l: f64, m: usize) -> Vec<[f64; 3]> {
    let c = |i: usize| (i as f64 + 0.5) * l / m as f64;
    (0..m * m * m)
        .map(|i| [c(i % m), c(i / m % m), c(i / (m * m))])
        .collect()
}

/// The latest `max` snapshot times whose backward cylinder of radius `r` fits in the run.
pub fn admissible_times(traj: &Trajectory, r: f64, max: usize) -> Vec<f64> {
    let lo = traj.t_start() + r * r * (1.0 - 1e-12);
    let ok: Vec<f64> = traj.times().into_iter().filter(|&t| t >= lo).collect();
    ok[ok.len().saturating_sub(max)..].to_vec()
}

pub fn quantities_csv(
    traj: &Trajectory,
    center: [f64; 3],
    t0: f64,
    radii: &[f64],
    opts: DiagOptions,
) -> Result<String> {
    let mut s = LocalQuantities::csv_header();
    s.push('\n');
    for &r in radii {
        let q = compute_quantities(traj, &Cylinder::new(center, t0, r), opts)?;
        s.push_str(&q.csv_row());
        s.push('\n');
    }
    Ok(s)
}

pub fn lei_csv(
    traj: &Trajectory,
    psis: &[(String, TestFunction)],
    center: [f64; 3],
    t: f64,
    omega: f64,
) -> Result<(String, Vec<LeiReport>)> {
    let mut s = format!("psi,{}\n", LeiReport::csv_header());
    let mut reports = Vec::new();
    for (label, psi) in psis {
        let r = lei_residual(traj, psi, center, t, omega, LeiOptions::default())?;
        s.push_str(&format!("{label},{}\n", r.csv_row()));
        reports.push(r);
    }
    Ok((s, reports))
}

pub fn energy_csv(traj: &Trajectory) -> Result<String> {
    let e = global_energy_check(traj)?;
    let mut s = String::from("t,lhs\n");
    for (t, l) in e.times.iter().zip(&e.lhs) {
        s.push_str(&format!("{t:e},{l:e}\n"));
    }
    Ok(s)
}

/// Covering CSV for `points`; an empty set yields the header alone.
pub fn dimension_csv(
    points: &[SpacetimePoint],
    scales: &[f64],
    method: CountMethod,
    period: Option<f64>,
) -> Result<(String, Option<f64>)> {
    if points.is_empty() {
        return Ok((
            format!("{}\n", cns_core::hausdorff::CoveringEstimate::CSV_HEADER),
            None,
        ));
    }
    let e = dimension_estimate(points, scales, method, period)?;
    Ok((e.to_csv(), Some(e.slope)))
}

/// Parsed pipeline configuration with defaults resolved against the run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub map: ConfigMap,
    pub sim: SimConfig,
}

impl PipelineConfig {
    pub fn from_map(map: ConfigMap) -> Result<Self> {
        check_keys(&map)?;
        let sim = SimConfig::from_map(&map)?;
        Ok(PipelineConfig { map, sim })
    }

    pub fn load(path: &Path) -> Result<Self> {
        PipelineConfig::from_map(ConfigMap::load(path)?)
    }

    /// SHA-256 of the canonical configuration text, as lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.map.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Provenance and timing of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub grid_n: usize,
    pub grid_l: f64,
    pub params: Vec<(String, String)>,
    pub outputs: Vec<(String, PathBuf)>,
    pub wall_seconds: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "config_hash = {}\ncode_version = {}\nseed = {}\ngrid.n = {}\ngrid.l = {:e}\n",
            self.config_hash, self.code_version, self.seed, self.grid_n, self.grid_l
        );
        for (k, v) in &self.params {
            s.push_str(&format!("params.{k} = {v}\n"));
        }
        for (k, p) in &self.outputs {
            s.push_str(&format!("output.{k} = {}\n", p.display()));
        }
        for (k, t) in &self.wall_seconds {
            s.push_str(&format!("wall.{k} = {t:.3}\n"));
        }
        s
    }
}

/// Outcome of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub manifest: RunManifest,
    pub flags: FlagSet,
    pub lei: Vec<LeiReport>,
    pub slope: Option<f64>,
}

struct Timer(Vec<(String, f64)>);

impl Timer {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        self.0.push((name.to_string(), t.elapsed().as_secs_f64()));
        v
    }
}

/// Run every phase on the configuration at `config`, writing artifacts to `out`.
/// Artifacts of completed phases are kept when a later phase fails.
pub fn run_pipeline(config: &Path, out: &Path) -> std::result::Result<PipelineReport, CliError> {
    let cfg = PipelineConfig::load(config).phase("config")?;
    run_pipeline_with(&cfg, out)
}

pub fn run_pipeline_with(
    cfg: &PipelineConfig,
    out: &Path,
) -> std::result::Result<PipelineReport, CliError> {
    let m = &cfg.map;
    let l = cfg.sim.l;
    std::fs::create_dir_all(out)
        .map_err(|e| CnsError::io(out, e))
        .phase("output")?;
    let mut timer = Timer(Vec::new());
    let mut outputs: Vec<(String, PathBuf)> = Vec::new();
    let mut emit = |name: &str, file: &str, text: &str| -> std::result::Result<(), CliError> {
        let p = out.join(file);
        csv::write(&p, text).phase("output")?;
        outputs.push((name.to_string(), PathBuf::from(file)));
        Ok(())
    };

    let (traj, _log) = timer.run("simulate", || simulate(&cfg.sim)).phase("simulate")?;
    let traj = with_sweep_cache(traj);
    timer
        .run("snapshots", || write_trajectory(&out.join("snapshots"), &traj))
        .phase("snapshots")?;
    let span = traj.t_end() - traj.t_start();
    let t_end = traj.t_end();

    let energy = timer.run("energy", || energy_csv(&traj)).phase("energy")?;
    emit("energy", "energy.csv", &energy)?;

    let center = match m.raw("diag.center") {
        Some(s) => parse_point(s, "key `diag.center`").phase("config")?,
        None => [0.5 * l; 3],
    };
    let radii = match m.raw("diag.radii") {
        Some(_) => m.list("diag.radii").phase("config")?,
        None => [l / 16.0, l / 8.0]
            .into_iter()
            .filter(|r| r * r <= span)
            .collect(),
    };
    let opts = DiagOptions {
        subtract_pressure_mean: m.get_or("diag.subtract_pressure_mean", false).phase("config")?,
    };
    let q = timer
        .run("quantities", || quantities_csv(&traj, center, t_end, &radii, opts))
        .phase("quantities")?;
    emit("quantities", "quantities.csv", &q)?;

    let r3_default = (0.25 * l).min(span.sqrt());
    let scale: f64 = m.get_or("lei.scale", 8.0 * r3_default).phase("config")?;
    let r3 = scale / 8.0;
    let omega: f64 = m.get_or("lei.omega", 0.25 * l).phase("config")?;
    let levels = m.list_or("lei.levels", &[2.0, 3.0, 4.0]).phase("config")?;
    let bump_r = m.list_or("lei.bump.radius", &[0.75 * r3, r3]).phase("config")?;
    let bump_t = m
        .list_or("lei.bump.duration", &[0.5 * r3 * r3, r3 * r3])
        .phase("config")?;
    if bump_r.len() != bump_t.len() {
        return Err(CnsError::Config(
            "keys `lei.bump.radius` and `lei.bump.duration` differ in length".into(),
        ))
        .phase("config");
    }
    let mut psis = Vec::new();
    for lv in levels {
        let spec = format!("heat:{lv}:{scale}");
        psis.push((spec.clone(), parse_psi(&spec).phase("config")?));
    }
    for (r, d) in bump_r.iter().zip(&bump_t) {
        let spec = format!("bump:{r}:{d}");
        psis.push((spec.clone(), parse_psi(&spec).phase("config")?));
    }
    let (lei, lei_reports) = timer
        .run("lei", || lei_csv(&traj, &psis, center, t_end, omega))
        .phase("lei")?;
    emit("lei", "lei.csv", &lei)?;

    let mut reg = RegularityConfig::for_trajectory(&traj);
    reg.working_threshold = m
        .get_or("flag.working_threshold", reg.working_threshold)
        .phase("config")?;
    let h = traj.grid.h();
    let default_flag_radii: Vec<f64> = [0.125 * l, 0.25 * l]
        .into_iter()
        .filter(|r| 2.0 * r >= reg.min_cells_across * h && r * r <= span)
        .collect();
    let flag_radii = m.list_or("flag.radii", &default_flag_radii).phase("config")?;
    if flag_radii.is_empty() {
        return Err(CnsError::Config(
            "no default flag radius is resolvable within the run; set `flag.radii`".into(),
        ))
        .phase("config");
    }
    let rmax = flag_radii.iter().copied().fold(0.0, f64::max);
    let rho: f64 = m.get_or("flag.rho", rmax).phase("config")?;
    let crit_name: String = m.get_or("flag.criterion", "thm13".to_string()).phase("config")?;
    let criterion = parse_criterion(&crit_name, flag_radii, rho).phase("config")?;
    let per_axis: usize = m.get_or("flag.centers_per_axis", 4).phase("config")?;
    let max_times: usize = m.get_or("flag.max_times", 3).phase("config")?;
    let reach = match &criterion {
        Criterion::Thm13 { .. } => rmax,
        Criterion::Thm16 { rho, .. } => *rho,
    };
    let centers = lattice_centers(l, per_axis);
    let times = admissible_times(&traj, reach, max_times);
    let flags = timer
        .run("flag", || flag_sweep(&traj, &centers, &times, &criterion, &reg))
        .phase("flag")?;
    emit("flags", "flags.csv", &flags.to_csv())?;

    let scales_s: String = m
        .get_or("dimension.scales", "2^-1..2^-4".to_string())
        .phase("config")?;
    let scales = parse_scales(&scales_s).phase("config")?;
    let method_s: String = m.get_or("dimension.method", "box".to_string()).phase("config")?;
    let method = parse_method(&method_s).phase("config")?;
    let alpha: f64 = m.get_or("dimension.alpha", 1.0).phase("config")?;
    let points = flag_points(&flags);
    let (dim, slope) = timer
        .run("dimension", || dimension_csv(&points, &scales, method, None))
        .phase("dimension")?;
    emit("dimension", "dimension.csv", &dim)?;

    let p = &traj.params;
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        code_version: format!("cns-cli {}", env!("CARGO_PKG_VERSION")),
        seed: cfg.sim.seed,
        grid_n: cfg.sim.n,
        grid_l: l,
        params: vec![
            ("theta0".into(), format!("{:e}", p.theta0)),
            ("chi".into(), format!("{:?}", cfg.sim.chi)),
            ("gravity".into(), format!("{:e}", cfg.sim.gravity)),
            ("c0_max".into(), format!("{:e}", p.c0_max)),
            ("scheme".into(), cfg.sim.scheme.name().to_string()),
            ("dt".into(), format!("{:e}", cfg.sim.dt)),
            ("dimension.alpha".into(), format!("{alpha:e}")),
        ],
        outputs: {
            let mut o = vec![("snapshots".to_string(), PathBuf::from("snapshots"))];
            o.extend(outputs);
            o
        },
        wall_seconds: timer.0,
    };
    csv::write(&out.join("manifest.txt"), &manifest.to_text()).phase("output")?;
    Ok(PipelineReport {
        manifest,
        flags,
        lei: lei_reports,
        slope,
    })
}
