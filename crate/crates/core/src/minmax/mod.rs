//! Minmax of the generating family `S(t, x, x0, y0)`.

mod dsu;
pub mod exact;
pub mod grid;
pub mod hopf;
pub mod step;

use serde::{Deserialize, Serialize};

pub use exact::{exact_minmax, exact_pass, ExactPass};
pub use grid::{minmax_grid, FiberBox, PassResult};
pub use hopf::{hopf_conj, hopf_conj_profile, hopf_lax};
pub use step::{minmax_step, minmax_step_traced, Engine, SamplePlan, StepResult};

/// `u = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn same_as(&self, other: &Line, x: f64, tol: f64) -> bool {
        let scale = 1.0f64.max(x.abs());
        (self.slope - other.slope).abs() <= tol
            && (self.at(x) - other.at(x)).abs() <= tol * scale
    }
}
