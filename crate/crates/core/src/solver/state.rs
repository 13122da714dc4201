//! Snapshots of the solution and the trajectory that orders them in time.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use crate::error::{CnsError, Result};
use crate::fields::{Derived, Grid, ScalarField, Spectral, VectorField};
use crate::solver::PhysParams;

/// Default number of derived snapshots kept in memory per trajectory.
pub const DEFAULT_DERIVED_CACHE: usize = 32;

/// Cell density `n`, concentration `c`, velocity `u`, pressure `P` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub n: ScalarField,
    pub c: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
}

impl State {
    pub fn grid(&self) -> Grid {
        self.n.grid
    }

    pub fn zeros(grid: Grid, t: f64) -> Self {
        State {
            t,
            n: ScalarField::zeros(grid),
            c: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
            p: ScalarField::zeros(grid),
        }
    }

    pub fn check(&self) -> Result<()> {
        let g = self.grid();
        g.same_as(&self.c.grid)?;
        g.same_as(&self.u.grid)?;
        g.same_as(&self.p.grid)?;
        self.n.check_finite("n")?;
        self.c.check_finite("c")?;
        self.u.check_finite("u")?;
        self.p.check_finite("P")?;
        if !self.t.is_finite() {
            return Err(CnsError::NonFinite("t".into()));
        }
        Ok(())
    }
}

/// Norms of the initial data that enter the regularity thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialNorms {
    pub c0_max: f64,
    pub n0_l1: f64,
    pub grad_phi_sup: f64,
    pub chi_norm: f64,
}

impl InitialNorms {
    pub fn of(state: &State, params: &PhysParams) -> Self {
        InitialNorms {
            c0_max: params.c0_max,
            n0_l1: state.n.data.iter().map(|v| v.abs()).sum::<f64>() * state.grid().cell_volume(),
            grad_phi_sup: params.grad_phi.sup_norm(),
            chi_norm: params.chi_norm(),
        }
    }
}

#[derive(Debug, Default)]
struct DerivedCache {
    map: HashMap<usize, Arc<Derived>>,
    order: VecDeque<usize>,
}

/// Time-ordered snapshots sharing one grid and parameter set.
#[derive(Debug)]
pub struct Trajectory {
    pub grid: Grid,
    pub params: PhysParams,
    pub initial: InitialNorms,
    states: Vec<State>,
    spectral: Spectral,
    cache: Mutex<DerivedCache>,
    cache_cap: usize,
}

impl Clone for Trajectory {
    fn clone(&self) -> Self {
        Trajectory {
            grid: self.grid,
            params: self.params.clone(),
            initial: self.initial,
            states: self.states.clone(),
            spectral: self.spectral.clone(),
            cache: Mutex::new(DerivedCache::default()),
            cache_cap: self.cache_cap,
        }
    }
}

impl Trajectory {
    /// Snapshots must share one grid and have strictly increasing times.
    pub fn new(params: PhysParams, initial: InitialNorms, states: Vec<State>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| CnsError::Degenerate("trajectory without snapshots".into()))?;
        let grid = first.grid();
        for s in &states {
            grid.same_as(&s.grid())?;
            s.check()?;
        }
        for w in states.windows(2) {
            if w[1].t <= w[0].t {
                return Err(CnsError::Degenerate(format!(
                    "snapshot times not increasing: {} then {}",
                    w[0].t, w[1].t
                )));
            }
        }
        Ok(Trajectory {
            grid,
            params,
            initial,
            states,
            spectral: Spectral::new(grid),
            cache: Mutex::new(DerivedCache::default()),
            cache_cap: DEFAULT_DERIVED_CACHE,
        })
    }

    /// Trajectory whose initial norms are read off the first snapshot.
    pub fn from_states(params: PhysParams, states: Vec<State>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| CnsError::Degenerate("trajectory without snapshots".into()))?;
        let initial = InitialNorms::of(first, &params);
        Trajectory::new(params, initial, states)
    }

    pub fn with_cache_capacity(mut self, cap: usize) -> Self {
        self.cache_cap = cap.max(1);
        self
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Derived fields of snapshot `j`, computed on first use and cached.
    pub fn derived(&self, j: usize) -> Arc<Derived> {
        if let Some(d) = self.cache.lock().unwrap().map.get(&j) {
            return d.clone();
        }
        let d = Arc::new(Derived::compute(&self.states[j], &self.spectral));
        let mut cache = self.cache.lock().unwrap();
        if !cache.map.contains_key(&j) {
            cache.map.insert(j, d.clone());
            cache.order.push_back(j);
            while cache.order.len() > self.cache_cap {
                if let Some(old) = cache.order.pop_front() {
                    cache.map.remove(&old);
                }
            }
        }
        d
    }
}
