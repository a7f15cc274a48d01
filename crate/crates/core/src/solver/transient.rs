//! IMEX time stepping: implicit Bernoulli-flux transport, explicit reaction.
//!
//! Transport stiffness grows like χ/Δx and is taken implicitly (backward
//! Euler; Douglas splitting of the two implicit sweeps in 2D), so the step
//! size is bounded only by reaction stability: Δt ≤ ½/max|f′(u)|, grown
//! geometrically after accepted steps and halved whenever a step drives a
//! density below the clipping band. Runs end at the time horizon, at a
//! steady state (‖Δu‖_∞/Δt below tolerance), or at blow-up; blow-up is a
//! reported outcome, not an error.

use super::transport::{assemble_transport, TransportOperator};
use super::{
    DiagnosticsRow, Grid, ReactionSpec, Schedule, Snapshot, SolverError, Termination, Trajectory,
    BLOW_UP_FACTOR, NEGATIVE_CLIP_BAND,
};
use crate::potential::Potential;

/// Accepted steps grow by this factor.
const STEP_GROWTH: f64 = 1.25;

/// Reaction stability margin: Δt ≤ this / max|f′(u)|.
const REACTION_STEP_SAFETY: f64 = 0.5;

/// The opening step is this fraction of the reaction cap.
const OPENING_STEP_FRACTION: f64 = 1e-2;

/// With an inert reaction the opening step is this fraction of t_end.
const OPENING_TIME_FRACTION: f64 = 1e-3;

/// Halvings before a shrinking step is declared collapsed.
const MAX_STEP_HALVINGS: usize = 60;

/// Relative slack when matching snapshot requests and the end time.
const TIME_SLACK: f64 = 1e-9;

/// One species advancing under its own transport operator.
struct SpeciesState {
    op: TransportOperator,
    field: Vec<f64>,
    initial_max: f64,
    snapshots: Vec<Snapshot>,
    diagnostics: Vec<DiagnosticsRow>,
}

/// Validate an initial field: clip [−band, 0) to zero, reject anything lower.
fn prepare_initial(initial: &[f64], cells: usize) -> Result<Vec<f64>, SolverError> {
    if initial.len() != cells {
        return Err(SolverError::FieldLength { expected: cells, got: initial.len() });
    }
    let mut field = initial.to_vec();
    for (index, value) in field.iter_mut().enumerate() {
        if *value < -NEGATIVE_CLIP_BAND || !value.is_finite() {
            return Err(SolverError::NegativeInitial { index, value: *value });
        }
        if *value < 0.0 {
            *value = 0.0;
        }
    }
    Ok(field)
}

/// Reaction rates for every species at the current fields.
fn reaction_rates(
    reaction: &ReactionSpec,
    fields: &[&[f64]],
    resource: &[f64],
) -> Vec<Vec<f64>> {
    let n = resource.len();
    if fields.len() == 1 {
        let u = fields[0];
        vec![(0..n).map(|i| reaction.value(u[i], resource[i])).collect()]
    } else {
        let (u, v) = (fields[0], fields[1]);
        let mut fu = Vec::with_capacity(n);
        let mut fv = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = reaction.pair_value(u[i], v[i], resource[i]);
            fu.push(a);
            fv.push(b);
        }
        vec![fu, fv]
    }
}

/// max|f′| over all cells and species: the reaction stability scale.
fn reaction_stiffness(reaction: &ReactionSpec, fields: &[&[f64]], resource: &[f64]) -> f64 {
    let n = resource.len();
    let mut worst = 0.0f64;
    if fields.len() == 1 {
        let u = fields[0];
        for i in 0..n {
            worst = worst.max(reaction.derivative(u[i], resource[i]).abs());
        }
    } else {
        let (u, v) = (fields[0], fields[1]);
        for i in 0..n {
            let (du, dv) = reaction.pair_diagonal_derivatives(u[i], v[i], resource[i]);
            worst = worst.max(du.abs()).max(dv.abs());
        }
    }
    worst
}

/// One IMEX step of one species. 1D is a plain backward-Euler transport
/// solve; 2D is the Douglas scheme
/// (I − ΔtLx)u* = uⁿ + Δt(Ly uⁿ + f),  (I − ΔtLy)u¹ = u* − ΔtLy uⁿ,
/// which is unconditionally stable in transport and conserves Σu + Δt·Σf.
fn step_species(
    op: &TransportOperator,
    u: &[f64],
    rate: &[f64],
    dt: f64,
    two_dimensional: bool,
) -> Result<Vec<f64>, SolverError> {
    if !two_dimensional {
        let rhs: Vec<f64> = u.iter().zip(rate).map(|(ui, fi)| ui + dt * fi).collect();
        op.solve_x(dt, &rhs)
    } else {
        let mut ly = vec![0.0; u.len()];
        op.apply_y_into(u, &mut ly);
        let rhs1: Vec<f64> =
            (0..u.len()).map(|i| u[i] + dt * (ly[i] + rate[i])).collect();
        let ustar = op.solve_x(dt, &rhs1)?;
        let rhs2: Vec<f64> = (0..u.len()).map(|i| ustar[i] - dt * ly[i]).collect();
        op.solve_y(dt, &rhs2)
    }
}

fn diagnostics_row(
    t: f64,
    dt: f64,
    field: &[f64],
    rate: &[f64],
    cell_volume: f64,
) -> DiagnosticsRow {
    let mass: f64 = field.iter().sum::<f64>() * cell_volume;
    let reaction_integral: f64 = rate.iter().sum::<f64>() * cell_volume;
    let umax = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let umin = field.iter().copied().fold(f64::INFINITY, f64::min);
    DiagnosticsRow { t, mass, umax, umin, reaction_integral, dt }
}

/// Advance one or two species with a shared adaptive step.
fn advance(
    grid: &Grid,
    mut species: Vec<SpeciesState>,
    resource: &[f64],
    reaction: &ReactionSpec,
    schedule: &Schedule,
) -> Result<Vec<Trajectory>, SolverError> {
    assert!(
        schedule.t_end > 0.0 && schedule.t_end.is_finite(),
        "t_end must be positive and finite"
    );
    assert!(schedule.steady_tolerance > 0.0, "steady tolerance must be positive");
    assert!(
        schedule.snapshot_times.iter().all(|t| t.is_finite()),
        "snapshot times must be finite"
    );
    let two_dimensional = grid.dim() == 2;
    let cell_volume = grid.cell_volume();
    let t_end = schedule.t_end;
    let end_slack = TIME_SLACK * t_end.max(1.0);

    let mut requests = schedule.snapshot_times.clone();
    requests.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
    let mut next_request = 0usize;

    let mut t = 0.0f64;
    let fields: Vec<&[f64]> = species.iter().map(|s| s.field.as_slice()).collect();
    let mut rates = reaction_rates(reaction, &fields, resource);
    drop(fields);
    for (s, rate) in species.iter_mut().zip(&rates) {
        let row = diagnostics_row(0.0, 0.0, &s.field, rate, cell_volume);
        s.diagnostics.push(row);
    }
    // Serve requests at or before the initial time.
    while next_request < requests.len()
        && requests[next_request] <= t + TIME_SLACK * requests[next_request].abs().max(1.0)
    {
        for s in species.iter_mut() {
            s.snapshots.push(Snapshot { time: t, field: s.field.clone() });
        }
        next_request += 1;
    }

    let fields: Vec<&[f64]> = species.iter().map(|s| s.field.as_slice()).collect();
    let stiffness = reaction_stiffness(reaction, &fields, resource);
    drop(fields);
    let mut carry = if stiffness > 0.0 {
        OPENING_STEP_FRACTION * REACTION_STEP_SAFETY / stiffness
    } else {
        OPENING_TIME_FRACTION * t_end
    }
    .min(t_end);

    let mut termination = Termination::TimeLimit;
    while t < t_end - end_slack {
        let fields: Vec<&[f64]> = species.iter().map(|s| s.field.as_slice()).collect();
        let stiffness = reaction_stiffness(reaction, &fields, resource);
        rates = reaction_rates(reaction, &fields, resource);
        drop(fields);
        let cap =
            if stiffness > 0.0 { REACTION_STEP_SAFETY / stiffness } else { f64::INFINITY };
        let mut dt = carry.min(cap).min(t_end - t);

        // Shrink until every species stays inside the clipping band.
        let mut halvings = 0usize;
        let proposals = loop {
            let mut proposals = Vec::with_capacity(species.len());
            for (s, rate) in species.iter().zip(&rates) {
                proposals.push(step_species(&s.op, &s.field, rate, dt, two_dimensional)?);
            }
            let lowest = proposals
                .iter()
                .flat_map(|p| p.iter().copied())
                .fold(f64::INFINITY, f64::min);
            if lowest >= -NEGATIVE_CLIP_BAND {
                break proposals;
            }
            halvings += 1;
            if halvings > MAX_STEP_HALVINGS {
                return Err(SolverError::StepCollapse { t, dt });
            }
            dt *= 0.5;
        };

        // Accept: clip the band, measure the change, install the fields.
        let mut steady = true;
        for (s, mut proposal) in species.iter_mut().zip(proposals) {
            let mut delta = 0.0f64;
            for (new, old) in proposal.iter_mut().zip(&s.field) {
                if *new < 0.0 {
                    *new = 0.0;
                }
                delta = delta.max((*new - old).abs());
            }
            if delta / dt >= schedule.steady_tolerance {
                steady = false;
            }
            s.field = proposal;
        }
        t += dt;

        let fields: Vec<&[f64]> = species.iter().map(|s| s.field.as_slice()).collect();
        rates = reaction_rates(reaction, &fields, resource);
        drop(fields);
        for (s, rate) in species.iter_mut().zip(&rates) {
            let row = diagnostics_row(t, dt, &s.field, rate, cell_volume);
            s.diagnostics.push(row);
        }
        while next_request < requests.len()
            && requests[next_request] <= t + TIME_SLACK * requests[next_request].abs().max(1.0)
        {
            for s in species.iter_mut() {
                s.snapshots.push(Snapshot { time: t, field: s.field.clone() });
            }
            next_request += 1;
        }

        let blown = species.iter().any(|s| {
            let row = s.diagnostics.last().expect("row just pushed");
            row.umax > BLOW_UP_FACTOR * s.initial_max.max(1.0)
        });
        if blown {
            termination = Termination::BlowUp;
            break;
        }
        if steady {
            termination = Termination::Steady;
            break;
        }
        carry = dt * STEP_GROWTH;
    }

    Ok(species
        .into_iter()
        .map(|s| Trajectory {
            snapshots: s.snapshots,
            diagnostics: s.diagnostics,
            termination,
            final_time: t,
            final_field: s.field,
        })
        .collect())
}

/// Integrate u_t = ∇·(d∇u − χ_eff·u∇A) + f(u) from the given initial field.
///
/// The initial data must be nonnegative up to the clipping band. Blow-up
/// terminates the trajectory with its own reason; only structural failures
/// (bad lengths, non-finite signal, collapsed steps) are errors.
pub fn run_transient(
    grid: &Grid,
    potential: &Potential,
    chi_eff: f64,
    d: f64,
    reaction: &ReactionSpec,
    initial: &[f64],
    schedule: &Schedule,
) -> Result<Trajectory, SolverError> {
    reaction.validate()?;
    let field = prepare_initial(initial, grid.cells())?;
    let op = assemble_transport(grid, potential, chi_eff, d)?;
    let resource = reaction.sample_resource(grid, potential)?;
    let initial_max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let species = vec![SpeciesState {
        op,
        field,
        initial_max,
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
    }];
    let mut trajectories = advance(grid, species, &resource, reaction, schedule)?;
    Ok(trajectories.pop().expect("one species in, one trajectory out"))
}

/// Advance two species sharing one resource, each under its own advection
/// strength along the same signal, with the same IMEX step.
///
/// Requires the shared-competition reaction; the coupling g(x, u+v) is
/// evaluated explicitly.
pub fn run_two_species(
    grid: &Grid,
    potential: &Potential,
    chi: (f64, f64),
    d: f64,
    reaction: &ReactionSpec,
    initials: (&[f64], &[f64]),
    schedule: &Schedule,
) -> Result<(Trajectory, Trajectory), SolverError> {
    if !matches!(reaction, ReactionSpec::SharedCompetition { .. }) {
        return Err(SolverError::ReactionVariant { expected: "shared-competition" });
    }
    reaction.validate()?;
    let field_u = prepare_initial(initials.0, grid.cells())?;
    let field_v = prepare_initial(initials.1, grid.cells())?;
    let resource = reaction.sample_resource(grid, potential)?;
    let species = [(chi.0, field_u), (chi.1, field_v)]
        .into_iter()
        .map(|(chi_eff, field)| {
            let op = assemble_transport(grid, potential, chi_eff, d)?;
            let initial_max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(SpeciesState {
                op,
                field,
                initial_max,
                snapshots: Vec::new(),
                diagnostics: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    let mut trajectories = advance(grid, species, &resource, reaction, schedule)?;
    let v = trajectories.pop().expect("two species in");
    let u = trajectories.pop().expect("two species in");
    Ok((u, v))
}
