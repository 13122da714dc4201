//! Time integration of the coupled cell density, concentration, and fluid.

mod params;
mod simulate;
mod snapshot;
mod state;
mod step;

pub use params::{Chi, GradPhi, PhysParams};
pub use simulate::{run_from, simulate, CInit, InitSpec, NInit, RunLog, SimConfig, UInit};
pub use snapshot::{read_snapshot, read_trajectory, snapshot_name, write_snapshot, write_trajectory};
pub use state::{InitialNorms, State, Trajectory, DEFAULT_DERIVED_CACHE};
pub use step::{step, StepReport, Stepper, TimeScheme, CFL_MAX, CFL_SUGGEST};
