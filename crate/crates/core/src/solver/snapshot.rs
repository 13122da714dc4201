//! Binary snapshot format and trajectory directories.
//!
//! A snapshot is `b"CNS1"`, `N: u32`, `L: f64`, `t: f64`, then `n, c, u1, u2, u3, P`
//! as `N^3` little-endian `f64` each in `(i, j, k)` row-major order.
//! A trajectory directory holds `snap_XXXXX.cns` files and `trajectory.meta`.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::config::{parse_list, ConfigMap};
use crate::error::{CnsError, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::solver::{Chi, GradPhi, InitialNorms, PhysParams, State, Trajectory};

const MAGIC: &[u8; 4] = b"CNS1";
const META: &str = "trajectory.meta";

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    let grid = state.grid();
    let f = fs::File::create(path).map_err(|e| CnsError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut put = |b: &[u8]| w.write_all(b).map_err(|e| CnsError::io(path, e));
    put(MAGIC)?;
    put(&(grid.n() as u32).to_le_bytes())?;
    put(&grid.l().to_le_bytes())?;
    put(&state.t.to_le_bytes())?;
    let fields: [&Vec<f64>; 6] = [
        &state.n.data,
        &state.c.data,
        &state.u.comps[0],
        &state.u.comps[1],
        &state.u.comps[2],
        &state.p.data,
    ];
    for field in fields {
        let mut buf = Vec::with_capacity(field.len() * 8);
        for v in field {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        put(&buf)?;
    }
    w.flush().map_err(|e| CnsError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    let mut f = fs::File::open(path).map_err(|e| CnsError::io(path, e))?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes).map_err(|e| CnsError::io(path, e))?;
    let bad = |detail: &str| CnsError::Format {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if bytes.len() < 24 || &bytes[0..4] != MAGIC {
        return Err(bad("missing CNS1 header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let t = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let grid = Grid::new(n, l).map_err(|e| bad(&e.to_string()))?;
    let len = grid.len();
    if bytes.len() != 24 + 6 * len * 8 {
        return Err(bad(&format!(
            "expected {} bytes, found {}",
            24 + 6 * len * 8,
            bytes.len()
        )));
    }
    let field = |k: usize| -> Vec<f64> {
        let off = 24 + k * len * 8;
        bytes[off..off + len * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let state = State {
        t,
        n: ScalarField { grid, data: field(0) },
        c: ScalarField { grid, data: field(1) },
        u: VectorField {
            grid,
            comps: [field(2), field(3), field(4)],
        },
        p: ScalarField { grid, data: field(5) },
    };
    state.check().map_err(|e| bad(&e.to_string()))?;
    Ok(state)
}

pub fn snapshot_name(j: usize) -> String {
    format!("snap_{j:05}.cns")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Write all snapshots and the metadata file. Field-valued potentials are not
/// representable and are rejected.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CnsError::io(dir, e))?;
    let g = match &traj.params.grad_phi {
        GradPhi::Constant(g) => *g,
        GradPhi::Field(_) => {
            return Err(CnsError::InvalidParams(
                "field-valued grad phi cannot be written to a trajectory directory".into(),
            ))
        }
    };
    let mut meta = String::new();
    meta.push_str(&format!("theta0 = {:?}\n", traj.params.theta0));
    meta.push_str(&format!("chi.coeffs = {}\n", fmt_list(&traj.params.chi.coeffs)));
    meta.push_str(&format!("grad_phi = {}\n", fmt_list(&g)));
    meta.push_str(&format!("c0_max = {:?}\n", traj.params.c0_max));
    meta.push_str(&format!("n0_l1 = {:?}\n", traj.initial.n0_l1));
    meta.push_str(&format!("snapshots = {}\n", traj.len()));
    let meta_path = dir.join(META);
    fs::write(&meta_path, meta).map_err(|e| CnsError::io(&meta_path, e))?;
    let mut paths = Vec::new();
    for (j, s) in traj.states().iter().enumerate() {
        let p = dir.join(snapshot_name(j));
        write_snapshot(&p, s)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let meta = ConfigMap::load(&dir.join(META))?;
    let g = parse_list(meta.raw("grad_phi").unwrap_or(""))
        .map_err(|_| CnsError::Config("grad_phi".into()))?;
    if g.len() != 3 {
        return Err(CnsError::Config("grad_phi needs three components".into()));
    }
    let params = PhysParams {
        theta0: meta.require("theta0")?,
        chi: Chi::new(meta.list("chi.coeffs")?),
        grad_phi: GradPhi::Constant([g[0], g[1], g[2]]),
        c0_max: meta.require("c0_max")?,
    };
    let count: usize = meta.require("snapshots")?;
    let states = (0..count)
        .map(|j| read_snapshot(&dir.join(snapshot_name(j))))
        .collect::<Result<Vec<_>>>()?;
    let initial = InitialNorms {
        c0_max: params.c0_max,
        n0_l1: meta.require("n0_l1")?,
        grad_phi_sup: params.grad_phi.sup_norm(),
        chi_norm: params.chi_norm(),
    };
    Trajectory::new(params, initial, states)
}
