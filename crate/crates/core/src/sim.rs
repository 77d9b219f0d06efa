//! Closed-loop scenario runner.
//!
//! Executes the protocol over the full sampling schedule, records dense
//! trajectories, and computes the disagreement metrics together with the
//! two closed-form predictions (discrete averaging map and limit consensus
//! value) that the simulation must reproduce.
//!
//! `run` is single-threaded per scenario so repeated runs are bit-identical;
//! distinct scenarios share no mutable state and may run concurrently.

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::numlin::{mat_exp, Matrix, Vector};
use crate::protocol::{IntervalPropagator, PlantModel, SamplingSchedule};
use crate::real::Real;

/// The protocol stops once the stacked disagreement falls below this
/// fraction of its initial value.
pub const STOP_DISAGREEMENT_FACTOR: f64 = 1e-12;

/// Default number of recorded points per sampling interval.
pub const DEFAULT_DENSE_POINTS: usize = 20;

/// A complete simulation input.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    graph: DirectedGraph,
    plant: PlantModel<T>,
    schedule: SamplingSchedule<T>,
    initial_states: Vec<Vector<T>>,
    dense_points_per_interval: usize,
}

impl<T: Real> Scenario<T> {
    /// Validate and assemble a scenario. The graph must contain a directed
    /// spanning tree; the plant is controllable by construction.
    pub fn new(
        graph: DirectedGraph,
        plant: PlantModel<T>,
        schedule: SamplingSchedule<T>,
        initial_states: Vec<Vector<T>>,
    ) -> Result<Self> {
        if !graph.has_spanning_tree() {
            return Err(Error::NoSpanningTree);
        }
        if initial_states.len() != graph.agent_count() {
            return Err(Error::Dimension(format!(
                "{} initial states for {} agents",
                initial_states.len(),
                graph.agent_count()
            )));
        }
        let n = plant.state_dim();
        for (i, x) in initial_states.iter().enumerate() {
            if x.dim() != n {
                return Err(Error::Dimension(format!(
                    "initial state of agent {i} has dim {}, expected {n}",
                    x.dim()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("initial state of agent {i}")));
            }
        }
        Ok(Self {
            graph,
            plant,
            schedule,
            initial_states,
            dense_points_per_interval: DEFAULT_DENSE_POINTS,
        })
    }

    pub fn with_dense_points(mut self, points: usize) -> Result<Self> {
        if points < 1 {
            return Err(Error::Domain(
                "dense points per interval must be >= 1".into(),
            ));
        }
        self.dense_points_per_interval = points;
        Ok(self)
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn plant(&self) -> &PlantModel<T> {
        &self.plant
    }

    pub fn schedule(&self) -> &SamplingSchedule<T> {
        &self.schedule
    }

    pub fn initial_states(&self) -> &[Vector<T>] {
        &self.initial_states
    }

    pub fn dense_points_per_interval(&self) -> usize {
        self.dense_points_per_interval
    }

    pub fn agent_count(&self) -> usize {
        self.graph.agent_count()
    }

    fn stacked_initial(&self) -> Vector<T> {
        Vector::stacked(&self.initial_states)
    }
}

/// Why the protocol stopped issuing intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The stopping index was reached.
    KMax,
    /// The next interval would be shorter than the minimal admissible one.
    DeltaMin,
    /// Disagreement fell below the stop fraction of its initial value.
    Tolerance,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::KMax => "k_max",
            StopReason::DeltaMin => "delta_min",
            StopReason::Tolerance => "tolerance",
        }
    }
}

/// One recorded point: time, completed sampling steps, and per-agent
/// states and controls.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub k: usize,
    pub states: Vec<Vector<T>>,
    pub controls: Vec<Vector<T>>,
}

/// Dense time-stamped output of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T> {
    /// Samples in strictly increasing time order, covering `[t0, t0 + Ts]`.
    pub samples: Vec<Sample<T>>,
    /// States at the sampling instants `t_0 .. t_{stop_index}`.
    pub instants: Vec<(T, Vec<Vector<T>>)>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn stacked_instant(&self, k: usize) -> Vector<T> {
        Vector::stacked(&self.instants[k].1)
    }

    pub fn final_sample(&self) -> &Sample<T> {
        self.samples.last().expect("runs record at least one sample")
    }
}

/// Disagreement and prediction-error series, one entry per sampling instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics<T> {
    pub disagreement_per_instant: Vec<T>,
    pub predicted_disagreement: Vec<T>,
    pub consensus_value_error: Vec<T>,
    pub stop_index: usize,
    pub stop_reason: StopReason,
}

/// Largest pairwise state distance; zero exactly at consensus and invariant
/// under adding a common vector to every agent.
pub fn disagreement<T: Real>(states: &[Vector<T>]) -> T {
    let mut worst = T::zero();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            worst = worst.max(states[i].sub(&states[j]).norm());
        }
    }
    worst
}

/// Closed-form stacked state at the sampling instant `t_k`:
/// the `k`-th power of the averaging matrix, Kronecker the drift from `t0`,
/// applied to the stacked initial state. Computed independently of the
/// simulation loop.
pub fn oracle_discrete<T: Real>(scenario: &Scenario<T>, k: usize) -> Result<Vector<T>> {
    let avg: Matrix<T> = scenario.graph.averaging_matrix();
    let t_k = scenario.schedule.sampling_instant(k)?;
    let drift = mat_exp(scenario.plant.a(), t_k - scenario.schedule.t0())?;
    Ok(avg
        .pow(k)
        .kron(&drift)
        .mul_vec(&scenario.stacked_initial()))
}

/// Predicted consensus state at time `t`: the weighted mixture of drifted
/// initial states, with weights from the graph's consensus weights.
pub fn predicted_consensus<T: Real>(scenario: &Scenario<T>, t: T) -> Result<Vector<T>> {
    let weights = scenario.graph.consensus_weights::<T>()?;
    let n = scenario.plant.state_dim();
    let mut mix = Vector::zeros(n);
    for (i, x0) in scenario.initial_states.iter().enumerate() {
        mix = mix.add(&x0.scaled(weights.xi()[i]));
    }
    let drift = mat_exp(scenario.plant.a(), t - scenario.schedule.t0())?;
    Ok(drift.mul_vec(&mix))
}

/// Execute the protocol over the schedule.
///
/// Each interval: every agent's scaled neighbor sum is formed from the
/// states at the interval start, the costates are initialized through the
/// gramian solve, and all agents advance exactly to the next instant, with
/// `dense_points_per_interval` points recorded along the way. After the
/// stopping policy fires the input is zero and every agent drifts freely
/// to the end of the horizon.
pub fn run<T: Real>(scenario: &Scenario<T>) -> Result<(TrajectoryRecord<T>, Metrics<T>)> {
    let n_agents = scenario.agent_count();
    let n = scenario.plant.state_dim();
    let m = scenario.plant.input_dim();
    let points = scenario.dense_points_per_interval;
    let sched = &scenario.schedule;

    let mut states = scenario.initial_states.clone();
    let initial_disagreement = disagreement(&states);
    let stop_threshold = T::tol(STOP_DISAGREEMENT_FACTOR) * initial_disagreement;

    let mut samples = Vec::new();
    let mut instants = vec![(sched.t0(), states.clone())];

    let mut k = 1usize;
    let stop_reason;
    loop {
        if k > sched.k_max() {
            stop_reason = StopReason::KMax;
            break;
        }
        let delta = sched.interval_length(k)?;
        if delta < sched.delta_min() {
            stop_reason = StopReason::DeltaMin;
            break;
        }
        if disagreement(&states) < stop_threshold {
            stop_reason = StopReason::Tolerance;
            break;
        }

        let t_start = sched.sampling_instant(k - 1)?;
        let prop = IntervalPropagator::new(&scenario.plant, delta).map_err(|e| {
            Error::Simulation(format!("interval k = {k} (length {delta}): {e}"))
        })?;

        // all costates come from the states at the interval start
        let costates: Result<Vec<_>> = (0..n_agents)
            .map(|i| prop.costate(&scaled_neighbor_sum(scenario, &states, i)?))
            .collect();
        let costates = costates
            .map_err(|e| Error::Simulation(format!("interval k = {k} (length {delta}): {e}")))?;

        for q in 0..points {
            let tau = delta * T::from_usize(q).expect("index fits")
                / T::from_usize(points).expect("count fits");
            let flow = prop.flow_at(tau)?;
            let control_map = prop.control_map_at(tau)?;
            let mut point_states = Vec::with_capacity(n_agents);
            let mut point_controls = Vec::with_capacity(n_agents);
            for i in 0..n_agents {
                let (x, _) = prop.apply_flow(&flow, &states[i], &costates[i]);
                point_states.push(x);
                point_controls.push(control_map.mul_vec(costates[i].vector()));
            }
            samples.push(Sample {
                t: t_start + tau,
                k: k - 1,
                states: point_states,
                controls: point_controls,
            });
        }

        states = (0..n_agents)
            .map(|i| prop.advance_full(&states[i], &costates[i]).0)
            .collect();
        instants.push((sched.sampling_instant(k)?, states.clone()));
        k += 1;
    }
    let stop_index = k - 1;

    // free drift with zero input to the end of the horizon
    let t_stop = sched.sampling_instant(stop_index)?;
    let tail = sched.horizon_end() - t_stop;
    for q in 0..=points {
        let tau = tail * T::from_usize(q).expect("index fits")
            / T::from_usize(points).expect("count fits");
        let drift = mat_exp(scenario.plant.a(), tau)?;
        samples.push(Sample {
            t: t_stop + tau,
            k: stop_index,
            states: states.iter().map(|x| drift.mul_vec(x)).collect(),
            controls: vec![Vector::zeros(m); n_agents],
        });
    }

    debug_assert!(samples.windows(2).all(|w| w[0].t < w[1].t));
    let _ = n;

    let metrics = build_metrics(scenario, &instants, stop_index, stop_reason)?;
    Ok((TrajectoryRecord { samples, instants }, metrics))
}

fn scaled_neighbor_sum<T: Real>(
    scenario: &Scenario<T>,
    states: &[Vector<T>],
    i: usize,
) -> Result<Vector<T>> {
    let neighbors = scenario.graph.in_neighbors(i)?;
    let n = scenario.plant.state_dim();
    let mut sum = Vector::zeros(n);
    for &j in neighbors {
        sum = sum.add(&states[j].sub(&states[i]));
    }
    let scale = T::one() / T::from_usize(neighbors.len() + 1).expect("degree fits");
    Ok(sum.scaled(scale))
}

fn build_metrics<T: Real>(
    scenario: &Scenario<T>,
    instants: &[(T, Vec<Vector<T>>)],
    stop_index: usize,
    stop_reason: StopReason,
) -> Result<Metrics<T>> {
    let n = scenario.plant.state_dim();
    let weights = scenario.graph.consensus_weights::<T>()?;
    let mut mix = Vector::zeros(n);
    for (i, x0) in scenario.initial_states.iter().enumerate() {
        mix = mix.add(&x0.scaled(weights.xi()[i]));
    }

    let mut disagreement_per_instant = Vec::with_capacity(stop_index + 1);
    let mut predicted_disagreement = Vec::with_capacity(stop_index + 1);
    let mut consensus_value_error = Vec::with_capacity(stop_index + 1);
    for (k, (t_k, states)) in instants.iter().enumerate() {
        disagreement_per_instant.push(disagreement(states));
        let oracle_states = oracle_discrete(scenario, k)?.unstack(n);
        predicted_disagreement.push(disagreement(&oracle_states));
        let x_star = mat_exp(scenario.plant.a(), *t_k - scenario.schedule.t0())?.mul_vec(&mix);
        let worst = states
            .iter()
            .map(|x| x.sub(&x_star).norm())
            .fold(T::zero(), T::max);
        consensus_value_error.push(worst);
    }

    Ok(Metrics {
        disagreement_per_instant,
        predicted_disagreement,
        consensus_value_error,
        stop_index,
        stop_reason,
    })
}
