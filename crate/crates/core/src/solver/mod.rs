//! Conservative finite-volume dynamics for advective dispersal with
//! bistable reactions on intervals and rectangles.
//!
//! The continuum model is
//!
//! ```text
//! u_t = ∇·(d∇u − χu∇A) + f(u),      (d∇u − χu∇A)·ν = 0 on ∂Ω,
//! ```
//!
//! whose no-flux steady states balance dispersal against the reaction.
//! Faces carry exponential-fitting (Bernoulli) fluxes, so the discrete
//! dispersal operator annihilates e^{(χ/d)A} exactly at every advection
//! strength ([`transport`]). Time stepping is IMEX with implicit transport
//! and explicit reaction under an adaptive step bound ([`transient`]); the
//! same operator symmetrizes into a definite eigenproblem for numerical
//! linear stability ([`eigen`]); [`measure`] reduces computed fields to
//! per-site spike geometry.
//!
//! A single simulation is sequential and deterministic. Distinct simulations
//! share only immutable inputs and may run concurrently.

pub mod eigen;
pub mod measure;
pub mod transient;
pub mod transport;

pub use eigen::{linearized_leading_eigen, EigenPair};
pub use measure::{measure_spikes, SpikeMeasurement, OFF_HEIGHT};
pub use transient::{run_transient, run_two_species};
pub use transport::{assemble_transport, TransportOperator};

use crate::domain::Domain;
use crate::potential::Potential;
use thiserror::Error;

/// Minimum cell count per axis.
pub const MIN_CELLS: usize = 16;

/// Densities in [−band, 0) are clipped to 0 silently; anything lower rejects
/// the step (the scheme is positivity-preserving for small enough steps, so
/// persistent negativity is a step-size failure, not data).
pub const NEGATIVE_CLIP_BAND: f64 = 1e-10;

/// Blow-up is declared when the running maximum exceeds this multiple of
/// max(1, initial maximum).
pub const BLOW_UP_FACTOR: f64 = 1e3;

/// Default steady tolerance on ‖u^{k+1} − u^k‖_∞/Δt.
pub const STEADY_TOLERANCE_DEFAULT: f64 = 1e-9;

/// Failure modes of assembly, stepping, and eigencomputation.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("grid is {grid}D but the signal is {potential}D")]
    DimensionMismatch { grid: usize, potential: usize },
    #[error("signal sample at cell {index} is not finite")]
    NonFiniteSignal { index: usize },
    #[error("field has {got} values for a {expected}-cell grid")]
    FieldLength { expected: usize, got: usize },
    #[error("initial density {value:e} at cell {index} is below the clipping band")]
    NegativeInitial { index: usize, value: f64 },
    #[error("resource must be positive on the grid: r = {value:e} at cell {index}")]
    NonPositiveResource { index: usize, value: f64 },
    #[error("Allee threshold {theta} outside [0, 1)")]
    ThresholdRange { theta: f64 },
    #[error("reaction parameter {name} = {value} is invalid")]
    ReactionParameter { name: &'static str, value: f64 },
    #[error("operation requires the {expected} reaction variant")]
    ReactionVariant { expected: &'static str },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("step size collapsed to {dt:e} at t = {t} without restoring positivity")]
    StepCollapse { t: f64, dt: f64 },
    #[error(
        "eigeniteration did not converge after {iterations} iterations: \
         residual {residual:e} exceeds {tolerance:e}"
    )]
    EigenNonConvergence { iterations: usize, residual: f64, tolerance: f64 },
}

/// Uniform tensor grid of cell-centered unknowns on an interval or rectangle.
///
/// Cell centers and face positions are pure functions of (bounds, N), so a
/// grid rebuilt from the same parameters reproduces them exactly. Fields are
/// stored flattened with x fastest: `index = iy·nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
}

impl Grid {
    /// 1D grid with `n` uniform cells on [lo, hi].
    pub fn interval(lo: f64, hi: f64, n: usize) -> Grid {
        Grid::build(vec![lo], vec![hi], vec![n])
    }

    /// 2D tensor grid; each axis is (lower, upper, cells).
    pub fn rectangle(x: (f64, f64, usize), y: (f64, f64, usize)) -> Grid {
        Grid::build(vec![x.0, y.0], vec![x.1, y.1], vec![x.2, y.2])
    }

    fn build(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Grid {
        for axis in 0..lo.len() {
            assert!(
                lo[axis].is_finite() && hi[axis].is_finite() && lo[axis] < hi[axis],
                "axis {axis}: bounds must be finite with lo < hi"
            );
            assert!(n[axis] >= MIN_CELLS, "axis {axis}: need at least {MIN_CELLS} cells");
        }
        Grid { lo, hi, n }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Total cell count.
    pub fn cells(&self) -> usize {
        self.n.iter().product()
    }

    /// (nx, ny); ny = 1 on an interval.
    pub fn shape(&self) -> (usize, usize) {
        (self.n[0], if self.dim() == 2 { self.n[1] } else { 1 })
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    pub fn cell_count(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn dx(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    /// Volume of one cell (Δx, or Δx·Δy).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.dx(a)).product()
    }

    /// Center of cell `i` along `axis`.
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i as f64 + 0.5) * self.dx(axis)
    }

    /// Position of face `i` along `axis` (faces 0 and N are the walls).
    pub fn face(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.dx(axis)
    }

    /// Flattened index of cell (ix, iy).
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n[0] + ix
    }

    /// Coordinates of the flattened cell index.
    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let (nx, _) = self.shape();
        match self.dim() {
            1 => vec![self.center(0, idx)],
            _ => vec![self.center(0, idx % nx), self.center(1, idx / nx)],
        }
    }

    /// The continuous domain covered by the grid.
    pub fn domain(&self) -> Domain {
        match self.dim() {
            1 => Domain::interval(self.lo[0], self.hi[0]),
            _ => Domain::rectangle([self.lo[0], self.lo[1]], [self.hi[0], self.hi[1]]),
        }
    }

    /// Sample a function at every cell center, in storage order.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.cells()).map(|idx| f(&self.cell_center(idx))).collect()
    }
}

/// Resource density r(x) entering the r-dependent reaction variants.
#[derive(Debug, Clone, PartialEq)]
pub enum Resource {
    /// r ≡ 1.
    One,
    /// r = e^{A(x)}: the signal is the log of the resource, so dispersal up
    /// ∇A is dispersal up ∇ln r.
    ExpPotential,
    /// r = a + b·x₁ along the first coordinate.
    Linear { a: f64, b: f64 },
}

impl Resource {
    /// Evaluate at a point, given the signal the experiment carries.
    pub fn value(&self, potential: &Potential, x: &[f64]) -> f64 {
        match self {
            Resource::One => 1.0,
            Resource::ExpPotential => potential.value(x).exp(),
            Resource::Linear { a, b } => a + b * x[0],
        }
    }
}

/// The reaction term f coupling growth to local density.
#[derive(Debug, Clone, PartialEq)]
pub enum ReactionSpec {
    /// μ·u(1−u)(u−θ): bistable growth with Allee threshold θ and unit
    /// carrying capacity.
    CubicAllee { mu: f64, theta: f64 },
    /// u(u−θ)(r(x)−u): Allee threshold θ against a spatial resource.
    LogisticAllee { theta: f64, resource: Resource },
    /// density·(u+v−θ)(r(x)−u−v): two species sharing one resource; the
    /// single-species restriction (v = 0) coincides with logistic-allee.
    SharedCompetition { theta: f64, resource: Resource },
}

impl ReactionSpec {
    /// Structural validation: θ ∈ [0, 1) for cubic-allee, finite parameters
    /// elsewhere. Resource positivity is checked against a concrete grid in
    /// [`ReactionSpec::sample_resource`].
    pub fn validate(&self) -> Result<(), SolverError> {
        match self {
            ReactionSpec::CubicAllee { mu, theta } => {
                if !(*theta >= 0.0 && *theta < 1.0) {
                    return Err(SolverError::ThresholdRange { theta: *theta });
                }
                if !(mu.is_finite() && *mu >= 0.0) {
                    return Err(SolverError::ReactionParameter { name: "mu", value: *mu });
                }
                Ok(())
            }
            ReactionSpec::LogisticAllee { theta, resource }
            | ReactionSpec::SharedCompetition { theta, resource } => {
                if !(theta.is_finite() && *theta >= 0.0) {
                    return Err(SolverError::ReactionParameter { name: "theta", value: *theta });
                }
                if let Resource::Linear { a, b } = resource {
                    if !a.is_finite() || !b.is_finite() {
                        return Err(SolverError::ReactionParameter {
                            name: "resource",
                            value: if a.is_finite() { *b } else { *a },
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Sample r at every cell center; r-dependent variants must be positive
    /// on the grid. The constant variant samples to 1.
    pub fn sample_resource(
        &self,
        grid: &Grid,
        potential: &Potential,
    ) -> Result<Vec<f64>, SolverError> {
        let resource = match self {
            ReactionSpec::CubicAllee { .. } => return Ok(vec![1.0; grid.cells()]),
            ReactionSpec::LogisticAllee { resource, .. }
            | ReactionSpec::SharedCompetition { resource, .. } => resource,
        };
        let samples = grid.sample(|x| resource.value(potential, x));
        for (index, &value) in samples.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SolverError::NonPositiveResource { index, value });
            }
        }
        Ok(samples)
    }

    /// Single-species reaction rate at density u with local resource r.
    pub fn value(&self, u: f64, r: f64) -> f64 {
        match self {
            ReactionSpec::CubicAllee { mu, theta } => mu * u * (1.0 - u) * (u - theta),
            ReactionSpec::LogisticAllee { theta, .. }
            | ReactionSpec::SharedCompetition { theta, .. } => u * (u - theta) * (r - u),
        }
    }

    /// ∂f/∂u for the single-species rate.
    pub fn derivative(&self, u: f64, r: f64) -> f64 {
        match self {
            ReactionSpec::CubicAllee { mu, theta } => {
                mu * (-3.0 * u * u + 2.0 * (1.0 + theta) * u - theta)
            }
            ReactionSpec::LogisticAllee { theta, .. }
            | ReactionSpec::SharedCompetition { theta, .. } => {
                -3.0 * u * u + 2.0 * (r + theta) * u - theta * r
            }
        }
    }

    /// Two-species rates (f_u, f_v) through the shared density s = u + v.
    /// Only the shared-competition variant couples two species.
    pub fn pair_value(&self, u: f64, v: f64, r: f64) -> (f64, f64) {
        match self {
            ReactionSpec::SharedCompetition { theta, .. } => {
                let g = (u + v - theta) * (r - u - v);
                (u * g, v * g)
            }
            _ => panic!("pair_value requires the shared-competition variant"),
        }
    }

    /// Diagonal derivatives (∂f_u/∂u, ∂f_v/∂v) of the two-species rates.
    pub fn pair_diagonal_derivatives(&self, u: f64, v: f64, r: f64) -> (f64, f64) {
        match self {
            ReactionSpec::SharedCompetition { theta, .. } => {
                let s = u + v;
                let g = (s - theta) * (r - s);
                let dg = r + theta - 2.0 * s;
                (g + u * dg, g + v * dg)
            }
            _ => panic!("pair_diagonal_derivatives requires the shared-competition variant"),
        }
    }

    /// The Allee threshold θ of any variant.
    pub fn theta(&self) -> f64 {
        match self {
            ReactionSpec::CubicAllee { theta, .. }
            | ReactionSpec::LogisticAllee { theta, .. }
            | ReactionSpec::SharedCompetition { theta, .. } => *theta,
        }
    }
}

/// Time horizon, snapshot requests, and the steady-detection tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Integration stops at this time if nothing else ends the run first.
    pub t_end: f64,
    /// Each requested time is served by the nearest accepted step at or
    /// after it; requests beyond the run's actual end are skipped.
    pub snapshot_times: Vec<f64>,
    /// Steady termination when ‖u^{k+1} − u^k‖_∞/Δt drops below this.
    pub steady_tolerance: f64,
}

impl Schedule {
    pub fn new(t_end: f64) -> Schedule {
        assert!(t_end > 0.0 && t_end.is_finite(), "t_end must be positive and finite");
        Schedule { t_end, snapshot_times: Vec::new(), steady_tolerance: STEADY_TOLERANCE_DEFAULT }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Schedule {
        self.snapshot_times = times;
        self
    }

    pub fn with_steady_tolerance(mut self, tolerance: f64) -> Schedule {
        assert!(tolerance > 0.0, "steady tolerance must be positive");
        self.steady_tolerance = tolerance;
        self
    }
}

/// Why a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// ‖Δu‖_∞/Δt fell below the steady tolerance.
    Steady,
    /// t reached t_end.
    TimeLimit,
    /// Density exceeded the blow-up bound.
    BlowUp,
}

/// One accepted-step record of the conserved and monitored quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// Σu·|cell|.
    pub mass: f64,
    pub umax: f64,
    pub umin: f64,
    /// Σf(u)·|cell|; vanishes at any no-flux steady state.
    pub reaction_integral: f64,
    /// Step size that produced this state (0 on the initial row).
    pub dt: f64,
}

/// A stored field at one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: Vec<f64>,
}

/// Full record of one species over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// One row per accepted step, initial state included.
    pub diagnostics: Vec<DiagnosticsRow>,
    pub termination: Termination,
    pub final_time: f64,
    pub final_field: Vec<f64>,
}
