//! Spacecraft formation flying around a circular reference orbit.
//!
//! The relative motion of each spacecraft is the linearized in-orbit model
//! with natural frequency `n_r`: radial and along-track axes couple through
//! `2 n_r` velocity terms, the cross-track axis is an independent harmonic
//! oscillator. Holding a formation of constant offsets `h_i` reduces to
//! plain consensus in shifted coordinates `(r_i - h_i, v_i)`, because the
//! constant feedforward `-A1 h_i` cancels the drift of the offset exactly.

use crate::error::{Error, Result};
use crate::numlin::{Matrix, Vector};
use crate::protocol::{PlantModel, SamplingSchedule};
use crate::real::Real;
use crate::sim::{self, Metrics, Sample, Scenario, TrajectoryRecord};

use crate::graph::DirectedGraph;

/// Reference-orbit parameters. Only the angular rate enters the dynamics;
/// radius and gravitational parameter are kept for consistency checking.
#[derive(Clone, Debug, PartialEq)]
pub struct HillParams<T> {
    n_r: T,
    r0: Option<T>,
    mu: Option<T>,
}

impl<T: Real> HillParams<T> {
    /// From the angular rate alone.
    pub fn from_rate(n_r: T) -> Result<Self> {
        if !n_r.is_finite() || !(n_r > T::zero()) {
            return Err(Error::Domain(format!(
                "orbital rate {n_r} must be positive and finite"
            )));
        }
        if !(T::c(3.0) * n_r * n_r).is_finite() {
            return Err(Error::NonFinite("orbital rate squared overflows".into()));
        }
        Ok(Self {
            n_r,
            r0: None,
            mu: None,
        })
    }

    /// From rate, orbit radius, and gravitational parameter; the three must
    /// agree with `n_r = sqrt(mu / r0^3)` within 0.1 percent.
    pub fn new(n_r: T, r0: T, mu: T) -> Result<Self> {
        let mut params = Self::from_rate(n_r)?;
        if !(r0 > T::zero()) || !(mu > T::zero()) || !r0.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(
                "orbit radius and gravitational parameter must be positive and finite".into(),
            ));
        }
        let implied = (mu / (r0 * r0 * r0)).sqrt();
        if (implied - n_r).abs() > T::c(1e-3) * n_r {
            return Err(Error::Domain(format!(
                "rate {n_r} disagrees with sqrt(mu/r0^3) = {implied} by more than 0.1%"
            )));
        }
        params.r0 = Some(r0);
        params.mu = Some(mu);
        Ok(params)
    }

    pub fn n_r(&self) -> T {
        self.n_r
    }
}

/// The 6x6 state matrix `[[0, I3], [A1, A2]]` of the relative-motion model.
/// Accepts `n_r = 0`, where it degenerates to three double integrators.
pub fn hill_state_matrix<T: Real>(n_r: T) -> Matrix<T> {
    let mut a = Matrix::zeros(6, 6);
    a.set_block(0, 3, &Matrix::identity(3));
    a[(3, 0)] = T::c(3.0) * n_r * n_r;
    a[(5, 2)] = -(n_r * n_r);
    a[(3, 4)] = T::c(2.0) * n_r;
    a[(4, 3)] = -(T::c(2.0) * n_r);
    a
}

/// The 6x3 input matrix `[0; I3]`: thrust acceleration acts on velocity.
pub fn hill_input_matrix<T: Real>() -> Matrix<T> {
    let mut b = Matrix::zeros(6, 3);
    b.set_block(3, 0, &Matrix::identity(3));
    b
}

/// The in-plane coupling block `A1 = diag(3 n_r^2, 0, -n_r^2)`, which also
/// fixes the formation feedforward `-A1 h`.
pub fn hill_position_block<T: Real>(n_r: T) -> Matrix<T> {
    Matrix::diag(&[T::c(3.0) * n_r * n_r, T::zero(), -(n_r * n_r)])
}

/// The 6-state, 3-input relative-motion plant. Controllable for every
/// admissible rate.
pub fn hill_plant<T: Real>(params: &HillParams<T>) -> Result<PlantModel<T>> {
    PlantModel::new(hill_state_matrix(params.n_r), hill_input_matrix())
}

/// Desired constant offsets, one 3-vector per spacecraft; velocity offsets
/// are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FormationSpec<T> {
    offsets: Vec<Vector<T>>,
}

impl<T: Real> FormationSpec<T> {
    pub fn new(offsets: Vec<Vector<T>>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Dimension("formation needs at least one offset".into()));
        }
        for (i, h) in offsets.iter().enumerate() {
            if h.dim() != 3 {
                return Err(Error::Dimension(format!(
                    "offset {i} has dim {}, expected 3",
                    h.dim()
                )));
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("offset {i}")));
            }
        }
        Ok(Self { offsets })
    }

    pub fn offsets(&self) -> &[Vector<T>] {
        &self.offsets
    }

    pub fn agent_count(&self) -> usize {
        self.offsets.len()
    }
}

/// A formation task reduced to plain consensus in shifted coordinates.
///
/// Internally the scenario runs on `(r_i - h_i, v_i)`; physical positions
/// and controls are reconstructed on demand, the control picking up the
/// per-agent feedforward `-A1 h_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormationScenario<T> {
    scenario: Scenario<T>,
    spec: FormationSpec<T>,
    a1: Matrix<T>,
}

impl<T: Real> FormationScenario<T> {
    /// Assemble from params, offsets, topology, per-agent `(position,
    /// velocity)` pairs, and the sampling schedule.
    pub fn new(
        params: &HillParams<T>,
        spec: FormationSpec<T>,
        graph: DirectedGraph,
        initial: &[(Vector<T>, Vector<T>)],
        schedule: SamplingSchedule<T>,
    ) -> Result<Self> {
        if spec.agent_count() != graph.agent_count() {
            return Err(Error::Dimension(format!(
                "{} offsets for {} agents",
                spec.agent_count(),
                graph.agent_count()
            )));
        }
        if initial.len() != graph.agent_count() {
            return Err(Error::Dimension(format!(
                "{} initial pairs for {} agents",
                initial.len(),
                graph.agent_count()
            )));
        }
        let plant = hill_plant(params)?;
        let mut shifted = Vec::with_capacity(initial.len());
        for (i, (r, v)) in initial.iter().enumerate() {
            if r.dim() != 3 || v.dim() != 3 {
                return Err(Error::Dimension(format!(
                    "initial pair {i} must be two 3-vectors"
                )));
            }
            shifted.push(Vector::stacked(&[r.sub(&spec.offsets[i]), v.clone()]));
        }
        let scenario = Scenario::new(graph, plant, schedule, shifted)?;
        let a1 = hill_position_block(params.n_r);
        Ok(Self { scenario, spec, a1 })
    }

    /// The underlying consensus scenario in shifted coordinates.
    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn spec(&self) -> &FormationSpec<T> {
        &self.spec
    }

    pub fn with_dense_points(mut self, points: usize) -> Result<Self> {
        self.scenario = self.scenario.with_dense_points(points)?;
        Ok(self)
    }

    /// Constant control an agent applies once the formation is reached.
    pub fn feedforward(&self, agent: usize) -> Vector<T> {
        self.a1.mul_vec(&self.spec.offsets[agent]).scaled(-T::one())
    }

    /// Run the shifted consensus scenario.
    pub fn run(&self) -> Result<(TrajectoryRecord<T>, Metrics<T>)> {
        sim::run(&self.scenario)
    }

    /// Map a shifted trajectory back to physical positions and controls:
    /// `r_i = x_pos + h_i` and `u_i = -A1 h_i + u_protocol`.
    pub fn physical_trajectory(&self, shifted: &TrajectoryRecord<T>) -> TrajectoryRecord<T> {
        let to_physical = |states: &[Vector<T>]| -> Vec<Vector<T>> {
            states
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let parts = x.unstack(3);
                    Vector::stacked(&[parts[0].add(&self.spec.offsets[i]), parts[1].clone()])
                })
                .collect()
        };
        let samples = shifted
            .samples
            .iter()
            .map(|s| Sample {
                t: s.t,
                k: s.k,
                states: to_physical(&s.states),
                controls: s
                    .controls
                    .iter()
                    .enumerate()
                    .map(|(i, u)| u.add(&self.feedforward(i)))
                    .collect(),
            })
            .collect();
        let instants = shifted
            .instants
            .iter()
            .map(|(t, states)| (*t, to_physical(states)))
            .collect();
        TrajectoryRecord { samples, instants }
    }
}

/// Formation error at one recorded time: the largest pairwise offset-
/// corrected position distance and the largest pairwise velocity distance.
#[derive(Clone, Debug, PartialEq)]
pub struct FormationError<T> {
    pub t: T,
    pub position: T,
    pub velocity: T,
}

impl<T: Real> FormationError<T> {
    /// Combined error, position plus velocity.
    pub fn total(&self) -> T {
        self.position + self.velocity
    }
}

/// Per-sample formation error of a physical trajectory: for every recorded
/// time, `max_{i<j} |(r_i - h_i) - (r_j - h_j)|` and `max_{i<j} |v_i - v_j|`.
pub fn formation_error<T: Real>(
    traj: &TrajectoryRecord<T>,
    spec: &FormationSpec<T>,
) -> Result<Vec<FormationError<T>>> {
    let n_agents = spec.agent_count();
    let mut out = Vec::with_capacity(traj.samples.len());
    for sample in &traj.samples {
        if sample.states.len() != n_agents {
            return Err(Error::Dimension(format!(
                "sample has {} agents, spec has {n_agents}",
                sample.states.len()
            )));
        }
        let corrected: Vec<(Vector<T>, Vector<T>)> = sample
            .states
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let parts = x.unstack(3);
                (parts[0].sub(&spec.offsets[i]), parts[1].clone())
            })
            .collect();
        let mut position = T::zero();
        let mut velocity = T::zero();
        for i in 0..n_agents {
            for j in i + 1..n_agents {
                position = position.max(corrected[i].0.sub(&corrected[j].0).norm());
                velocity = velocity.max(corrected[i].1.sub(&corrected[j].1).norm());
            }
        }
        out.push(FormationError {
            t: sample.t,
            position,
            velocity,
        });
    }
    Ok(out)
}

/// Constants of the bundled six-spacecraft hexagon scenario.
pub mod hexagon6 {
    /// Reference-orbit angular rate, rad/s.
    pub const N_R: f64 = 7.273e-5;
    /// Reference-orbit radius, m.
    pub const R0: f64 = 4.224e7;
    /// Gravitational parameter, m^3/s^2.
    pub const MU: f64 = 3.986e14;
    /// Spacecraft mass, kg; metadata only, the dynamics are in
    /// acceleration form.
    pub const MASS_KG: f64 = 410.0;
    /// Settling time, s (200 hours).
    pub const SETTLING_TIME_S: f64 = 720_000.0;
    /// Stopping index of the bundled schedule. The default of 60 intervals
    /// leaves meters of residual disagreement at this problem's scale;
    /// 200 brings the terminal formation error well below a meter.
    pub const K_MAX: usize = 200;

    /// Hexagon vertex offsets, m.
    pub const OFFSETS: [[f64; 3]; 6] = [
        [0.0, 1000.0, 0.0],
        [-866.0, 500.0, 0.0],
        [-866.0, -500.0, 0.0],
        [0.0, -1000.0, 0.0],
        [866.0, -500.0, 0.0],
        [866.0, 500.0, 0.0],
    ];

    /// Initial positions, m.
    pub const POSITIONS: [[f64; 3]; 6] = [
        [0.0, 966_000.0, 10_000.0],
        [0.0, 900_000.0, 20_000.0],
        [0.0, 866_000.0, 30_000.0],
        [0.0, 800_000.0, 40_000.0],
        [0.0, 766_000.0, 50_000.0],
        [0.0, 700_000.0, 60_000.0],
    ];

    /// Initial velocities, m/s.
    pub const VELOCITIES: [[f64; 3]; 6] = [
        [10.0, 0.0, 0.0],
        [15.0, 0.0, 0.0],
        [20.0, 0.0, 0.0],
        [25.0, 0.0, 0.0],
        [30.0, 0.0, 0.0],
        [35.0, 0.0, 0.0],
    ];
}

/// The bundled six-spacecraft hexagon formation scenario: directed ring
/// topology, 200-hour settling time, and the constants of [`hexagon6`].
pub fn hexagon6_scenario<T: Real>() -> Result<FormationScenario<T>> {
    let params = HillParams::new(
        T::c(hexagon6::N_R),
        T::c(hexagon6::R0),
        T::c(hexagon6::MU),
    )?;
    let offsets = hexagon6::OFFSETS
        .iter()
        .map(|h| Vector::new(h.iter().map(|&v| T::c(v)).collect()))
        .collect::<Result<Vec<_>>>()?;
    let spec = FormationSpec::new(offsets)?;
    let graph = DirectedGraph::directed_ring(6);
    let initial: Vec<(Vector<T>, Vector<T>)> = hexagon6::POSITIONS
        .iter()
        .zip(hexagon6::VELOCITIES.iter())
        .map(|(r, v)| {
            Ok((
                Vector::new(r.iter().map(|&x| T::c(x)).collect())?,
                Vector::new(v.iter().map(|&x| T::c(x)).collect())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let schedule = SamplingSchedule::with_policy(
        T::zero(),
        T::c(hexagon6::SETTLING_TIME_S),
        hexagon6::K_MAX,
        None,
    )?;
    FormationScenario::new(&params, spec, graph, &initial, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_matrix_blocks_match_the_rate() {
        let n_r = 7.273e-5_f64;
        let a = hill_state_matrix(n_r);
        assert_eq!(a[(3, 0)], 3.0 * n_r * n_r);
        assert_eq!(a[(5, 2)], -(n_r * n_r));
        assert_eq!(a[(3, 4)], 2.0 * n_r);
        assert_eq!(a[(4, 3)], -2.0 * n_r);
        assert_eq!(a[(0, 3)], 1.0);
        // rounded reference values for this rate
        assert!((a[(3, 0)] - 1.5869e-8).abs() < 1e-4 * 1.5869e-8);
        assert!((a[(5, 2)] + 5.2897e-9).abs() < 1e-4 * 5.2897e-9);
    }

    #[test]
    fn zero_rate_degenerates_to_double_integrators() {
        let a = hill_state_matrix(0.0_f64);
        let mut expected = Matrix::zeros(6, 6);
        expected.set_block(0, 3, &Matrix::identity(3));
        assert_eq!(a, expected);
        // still controllable in the limit
        let plant = PlantModel::new(a, hill_input_matrix()).unwrap();
        assert_eq!(plant.input_dim(), 3);
    }

    #[test]
    fn plant_is_controllable_for_positive_rates() {
        for &n_r in &[1e-6_f64, 7.273e-5, 1.1e-3, 0.5] {
            let params = HillParams::from_rate(n_r).unwrap();
            assert!(hill_plant(&params).is_ok(), "rate {n_r}");
        }
    }

    #[test]
    fn params_consistency_check() {
        assert!(HillParams::new(hexagon6::N_R, hexagon6::R0, hexagon6::MU).is_ok());
        assert!(HillParams::new(hexagon6::N_R * 1.01, hexagon6::R0, hexagon6::MU).is_err());
        assert!(HillParams::from_rate(0.0).is_err());
        assert!(HillParams::from_rate(-1.0).is_err());
    }

    #[test]
    fn offset_shift_cancels_exactly() {
        // A (h, 0) + B (-A1 h) = 0 in exact float arithmetic
        let n_r = 7.273e-5_f64;
        let a = hill_state_matrix(n_r);
        let b = hill_input_matrix();
        let a1 = hill_position_block(n_r);
        for h in [
            Vector::new(vec![0.0, 1000.0, 0.0]).unwrap(),
            Vector::new(vec![-866.0, 500.0, 0.0]).unwrap(),
            Vector::new(vec![123.456, -9.87, 42.0]).unwrap(),
        ] {
            let stacked = Vector::stacked(&[h.clone(), Vector::zeros(3)]);
            let drift = a.mul_vec(&stacked);
            let feedforward = b.mul_vec(&a1.mul_vec(&h).scaled(-1.0));
            let residual = drift.add(&feedforward);
            assert_eq!(residual.max_abs(), 0.0);
        }
    }

    #[test]
    fn hexagon_offsets_are_a_unit_kilometer_hexagon() {
        let offsets: Vec<Vector<f64>> = hexagon6::OFFSETS
            .iter()
            .map(|h| Vector::new(h.to_vec()).unwrap())
            .collect();
        for i in 0..6 {
            let j = (i + 1) % 6;
            let side = offsets[i].sub(&offsets[j]).norm();
            assert!(
                (side - 1000.0).abs() <= 1.0,
                "side {i}-{j} is {side} m, expected 1000 +- 1"
            );
        }
    }

    #[test]
    fn zero_offsets_reduce_to_plain_consensus() {
        let params = HillParams::from_rate(7.273e-5_f64).unwrap();
        let spec = FormationSpec::new(vec![Vector::zeros(3); 3]).unwrap();
        let graph = DirectedGraph::directed_ring(3);
        let initial = vec![
            (
                Vector::new(vec![10.0, 0.0, 5.0]).unwrap(),
                Vector::new(vec![0.1, 0.0, 0.0]).unwrap(),
            ),
            (
                Vector::new(vec![-5.0, 3.0, 0.0]).unwrap(),
                Vector::new(vec![0.0, -0.2, 0.0]).unwrap(),
            ),
            (
                Vector::new(vec![0.0, 0.0, 0.0]).unwrap(),
                Vector::new(vec![0.0, 0.0, 0.3]).unwrap(),
            ),
        ];
        let schedule = SamplingSchedule::with_policy(0.0, 1000.0, 30, None).unwrap();
        let formation =
            FormationScenario::new(&params, spec, graph.clone(), &initial, schedule.clone())
                .unwrap();

        // with zero offsets the shifted states are the raw states
        let plant = hill_plant(&params).unwrap();
        let raw: Vec<Vector<f64>> = initial
            .iter()
            .map(|(r, v)| Vector::stacked(&[r.clone(), v.clone()]))
            .collect();
        let plain = Scenario::new(graph, plant, schedule, raw).unwrap();
        assert_eq!(formation.scenario(), &plain);
    }

    #[test]
    fn formation_run_equals_plain_consensus_on_shifted_states() {
        let formation = hexagon6_scenario::<f64>().unwrap();
        let plain = formation.scenario().clone();
        // identical input, identical bits out
        let from_formation = formation.run().unwrap();
        let from_plain = sim::run(&plain).unwrap();
        assert_eq!(from_formation.0, from_plain.0);
        assert_eq!(from_formation.1, from_plain.1);
    }

    #[test]
    fn feedforward_is_the_only_control_at_consensus() {
        // agents already in formation: protocol term vanishes, physical
        // control is exactly -A1 h per agent
        let n_r = 7.273e-5_f64;
        let params = HillParams::from_rate(n_r).unwrap();
        let offsets = vec![
            Vector::new(vec![0.0, 1000.0, 0.0]).unwrap(),
            Vector::new(vec![-866.0, 500.0, 0.0]).unwrap(),
            Vector::new(vec![866.0, 500.0, 0.0]).unwrap(),
        ];
        let spec = FormationSpec::new(offsets.clone()).unwrap();
        let graph = DirectedGraph::directed_ring(3);
        let common_v = Vector::new(vec![1.0, -2.0, 0.5]).unwrap();
        let base = Vector::new(vec![100.0, 200.0, 300.0]).unwrap();
        let initial: Vec<(Vector<f64>, Vector<f64>)> = offsets
            .iter()
            .map(|h| (base.add(h), common_v.clone()))
            .collect();
        let schedule = SamplingSchedule::with_policy(0.0, 600.0, 10, None).unwrap();
        let formation = FormationScenario::new(&params, spec, graph, &initial, schedule)
            .unwrap()
            .with_dense_points(3)
            .unwrap();
        let (shifted, _) = formation.run().unwrap();
        let physical = formation.physical_trajectory(&shifted);
        for sample in &physical.samples {
            for (i, u) in sample.controls.iter().enumerate() {
                let expected = formation.feedforward(i);
                assert!(
                    u.sub(&expected).max_abs() <= 1e-12,
                    "agent {i} control deviates from feedforward"
                );
            }
        }
    }

    #[test]
    fn formation_error_is_zero_in_exact_formation() {
        let offsets = vec![
            Vector::new(vec![0.0, 1000.0, 0.0]).unwrap(),
            Vector::new(vec![500.0, -500.0, 0.0]).unwrap(),
        ];
        let spec = FormationSpec::new(offsets.clone()).unwrap();
        let v = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let c = Vector::new(vec![7.0, 8.0, 9.0]).unwrap();
        let states: Vec<Vector<f64>> = offsets
            .iter()
            .map(|h| Vector::stacked(&[c.add(h), v.clone()]))
            .collect();
        let traj = TrajectoryRecord {
            samples: vec![Sample {
                t: 0.0,
                k: 0,
                states,
                controls: vec![Vector::zeros(3); 2],
            }],
            instants: vec![],
        };
        let errs = formation_error(&traj, &spec).unwrap();
        assert_eq!(errs[0].position, 0.0);
        assert_eq!(errs[0].velocity, 0.0);
        assert_eq!(errs[0].total(), 0.0);
    }
}
