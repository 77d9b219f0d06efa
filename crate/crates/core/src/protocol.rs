//! The sampled-data fixed-time protocol.
//!
//! Over each sampling interval the control is the minimum-energy input that
//! steers an agent's state to the average of itself and its in-neighbors,
//! propagated forward by the exact flow of the joint state/costate system.
//! The interval lengths shrink as `1/k^2` so their sum equals the
//! pre-specified settling time.
//!
//! All functions are pure. Per-agent costate computations within one
//! interval are independent, but no agent may start interval `k+1` before
//! all states at `t_{k+1}` exist; the simulator enforces that barrier.

use crate::error::{Error, Result};
use crate::numlin::{self, mat_exp, Lu, Matrix, Vector};
use crate::real::Real;

/// Default number of protocol intervals before the control is switched off.
pub const DEFAULT_K_MAX: usize = 60;
/// Default minimal admissible interval length, as a fraction of the
/// settling time. Late intervals amplify rounding through the gramian
/// inverse, whose norm grows like `delta^-(2r-1)` in the relative degree
/// `r`, so intervals below this floor are not executed.
pub const DEFAULT_DELTA_MIN_FACTOR: f64 = 1e-9;
/// Upper bound on the stopping index, which also bounds the cached
/// sampling-instant table.
pub const K_MAX_LIMIT: usize = 10_000_000;

/// A controllable linear plant `(A, B)`.
///
/// Controllability is verified at construction; it is the existence
/// condition for the protocol, because the interval gramian is invertible
/// exactly when the pair is controllable.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantModel<T> {
    a: Matrix<T>,
    b: Matrix<T>,
}

impl<T: Real> PlantModel<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "state matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() {
            return Err(Error::Dimension(format!(
                "input matrix has {} rows, expected {}",
                b.rows(),
                a.rows()
            )));
        }
        if !numlin::is_controllable(&a, &b)? {
            return Err(Error::Uncontrollable);
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    /// Input dimension `m`.
    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    /// `n = 1` integrator.
    pub fn single_integrator() -> Self {
        let a = Matrix::zeros(1, 1);
        let b = Matrix::identity(1);
        Self::new(a, b).expect("single integrator is controllable")
    }

    /// Position/velocity chain with force input.
    pub fn double_integrator() -> Self {
        let a = Matrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 {
                T::one()
            } else {
                T::zero()
            }
        });
        let mut b = Matrix::zeros(2, 1);
        b[(1, 0)] = T::one();
        Self::new(a, b).expect("double integrator is controllable")
    }

    /// Undamped oscillator with natural frequency `omega`.
    pub fn harmonic_oscillator(omega: T) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::NonFinite("oscillator frequency".into()));
        }
        let mut a = Matrix::zeros(2, 2);
        a[(0, 1)] = T::one();
        a[(1, 0)] = -omega * omega;
        let mut b = Matrix::zeros(2, 1);
        b[(1, 0)] = T::one();
        Self::new(a, b)
    }
}

/// Sampling schedule: interval `k >= 1` has length `(6 / (pi^2 k^2)) * Ts`,
/// so the instants `t_k` increase strictly toward `t0 + Ts` without ever
/// reaching it.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingSchedule<T> {
    t0: T,
    ts: T,
    k_max: usize,
    delta_min: T,
    instants: Vec<T>,
}

impl<T: Real> SamplingSchedule<T> {
    /// Schedule with the default stopping policy.
    pub fn new(t0: T, ts: T) -> Result<Self> {
        Self::with_policy(t0, ts, DEFAULT_K_MAX, None)
    }

    /// Schedule with explicit stopping-index cap and minimal interval.
    pub fn with_policy(t0: T, ts: T, k_max: usize, delta_min: Option<T>) -> Result<Self> {
        if !t0.is_finite() || !ts.is_finite() {
            return Err(Error::NonFinite("schedule times".into()));
        }
        if ts <= T::zero() {
            return Err(Error::Domain(format!("settling time {ts} must be > 0")));
        }
        if k_max < 1 || k_max > K_MAX_LIMIT {
            return Err(Error::Domain(format!(
                "stopping index {k_max} outside 1..={K_MAX_LIMIT}"
            )));
        }
        let delta_min = match delta_min {
            Some(d) if d >= T::zero() && d.is_finite() => d,
            None => T::c(DEFAULT_DELTA_MIN_FACTOR) * ts,
            Some(d) => {
                return Err(Error::Domain(format!(
                    "minimal interval {d} must be finite and >= 0"
                )))
            }
        };

        // one pass over the interval lengths, cached
        let mut instants = Vec::with_capacity(k_max + 1);
        instants.push(t0);
        let mut t = t0;
        let horizon = t0 + ts;
        for k in 1..=k_max {
            t = t + interval_length_of(ts, k);
            if t >= horizon || t <= instants[k - 1] {
                return Err(Error::Domain(format!(
                    "sampling instants lose strict monotonicity at k = {k}; \
                     reduce k_max"
                )));
            }
            instants.push(t);
        }

        Ok(Self {
            t0,
            ts,
            k_max,
            delta_min,
            instants,
        })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    /// The pre-specified settling time.
    pub fn settling_time(&self) -> T {
        self.ts
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn delta_min(&self) -> T {
        self.delta_min
    }

    /// End of the simulation horizon, `t0 + Ts`.
    pub fn horizon_end(&self) -> T {
        self.t0 + self.ts
    }

    /// Length of interval `k` (1-based).
    pub fn interval_length(&self, k: usize) -> Result<T> {
        if k == 0 {
            return Err(Error::OutOfRange("intervals are 1-based".into()));
        }
        Ok(interval_length_of(self.ts, k))
    }

    /// Sampling instant `t_k`; `t_0` is the start time.
    pub fn sampling_instant(&self, k: usize) -> Result<T> {
        self.instants.get(k).copied().ok_or_else(|| {
            Error::OutOfRange(format!("instant {k} > stopping index {}", self.k_max))
        })
    }
}

fn interval_length_of<T: Real>(ts: T, k: usize) -> T {
    let pi2 = T::PI() * T::PI();
    let kk = T::from_usize(k).expect("index fits scalar");
    T::c(6.0) / (pi2 * kk * kk) * ts
}

/// Costate of one agent at the start of an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Costate<T> {
    p: Vector<T>,
}

impl<T: Real> Costate<T> {
    pub fn from_vector(p: Vector<T>) -> Self {
        Self { p }
    }

    pub fn vector(&self) -> &Vector<T> {
        &self.p
    }
}

/// Joint state/costate flow matrix `M = [[A, B B^T], [0, -A^T]]` for an
/// arbitrary pair of matrices.
pub fn hamiltonian_from_parts<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "state matrix must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != a.rows() {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, expected {}",
            b.rows(),
            a.rows()
        )));
    }
    let n = a.rows();
    let mut m = Matrix::zeros(2 * n, 2 * n);
    m.set_block(0, 0, a);
    m.set_block(0, n, &(b * &b.transpose()));
    m.set_block(n, n, &a.transpose().neg());
    Ok(m)
}

/// Joint state/costate flow matrix of a plant.
pub fn hamiltonian_block<T: Real>(plant: &PlantModel<T>) -> Matrix<T> {
    hamiltonian_from_parts(plant.a(), plant.b()).expect("plant dimensions are consistent")
}

/// Interval gramian for an arbitrary pair: the upper-right `n x n` block of
/// `e^{M delta}`, equal to the integral of
/// `e^{A (delta - tau)} B B^T e^{-A^T tau}` over the interval.
pub fn gramian_from_parts<T: Real>(a: &Matrix<T>, b: &Matrix<T>, delta: T) -> Result<Matrix<T>> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "interval length {delta} must be positive and finite"
        )));
    }
    let m = hamiltonian_from_parts(a, b)?;
    let exp_m = mat_exp(&m, delta)?;
    let n = a.rows();
    Ok(exp_m.block(0, n, n, n))
}

/// Interval gramian of a plant; invertible for every positive `delta`
/// because the plant is controllable.
pub fn gramian_phi<T: Real>(plant: &PlantModel<T>, delta: T) -> Result<Matrix<T>> {
    gramian_from_parts(plant.a(), plant.b(), delta)
}

/// Initial costate for one interval.
///
/// `rel_sum` is the scaled neighbor sum
/// `(1/(|N_i|+1)) * sum_j (x_j(t_k) - x_i(t_k))`, computed by the caller.
/// Solves `Phi p = e^{A delta} rel_sum` through the row-pivoted
/// factorization; the gramian inverse is never formed.
pub fn costate_init<T: Real>(
    plant: &PlantModel<T>,
    delta: T,
    rel_sum: &Vector<T>,
) -> Result<Costate<T>> {
    IntervalPropagator::new(plant, delta)?.costate(rel_sum)
}

/// Control signal at time `t` within an interval starting at `tk`:
/// `u(t) = B^T e^{-A^T (t - tk)} p`.
pub fn control<T: Real>(plant: &PlantModel<T>, t: T, tk: T, p: &Costate<T>) -> Result<Vector<T>> {
    if t < tk {
        return Err(Error::Domain(format!(
            "control time {t} precedes the interval start {tk}"
        )));
    }
    let decay = mat_exp(&plant.a().transpose(), -(t - tk))?;
    Ok(plant.b().transpose().mul_vec(&decay.mul_vec(p.vector())))
}

/// Exact joint propagation over `tau`: multiplies the stacked state/costate
/// vector by `e^{M tau}`. No discretization error beyond the matrix
/// exponential itself.
pub fn propagate_interval<T: Real>(
    plant: &PlantModel<T>,
    x_k: &Vector<T>,
    p_k: &Costate<T>,
    tau: T,
) -> Result<(Vector<T>, Vector<T>)> {
    if tau < T::zero() {
        return Err(Error::Domain(format!("propagation time {tau} is negative")));
    }
    let n = plant.state_dim();
    if x_k.dim() != n || p_k.vector().dim() != n {
        return Err(Error::Dimension(format!(
            "state and costate must have dim {n}"
        )));
    }
    let m = hamiltonian_block(plant);
    let exp_m = mat_exp(&m, tau)?;
    let z = exp_m.mul_vec(&Vector::stacked(&[x_k.clone(), p_k.vector().clone()]));
    let parts = z.unstack(n);
    Ok((parts[0].clone(), parts[1].clone()))
}

/// Closed-form image of one protocol step on the stacked state:
/// `(avg (x) e^{A delta}) X_k`, the discrete oracle for one interval.
pub fn terminal_map<T: Real>(
    avg: &Matrix<T>,
    plant: &PlantModel<T>,
    delta: T,
    stacked: &Vector<T>,
) -> Result<Vector<T>> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "interval length {delta} must be positive and finite"
        )));
    }
    let n = plant.state_dim();
    if !avg.is_square() || stacked.dim() != avg.rows() * n {
        return Err(Error::Dimension(format!(
            "stacked state has dim {}, expected {} agents x {n}",
            stacked.dim(),
            avg.rows()
        )));
    }
    let exp_a = mat_exp(plant.a(), delta)?;
    Ok(avg.kron(&exp_a).mul_vec(stacked))
}

/// Per-interval workspace: one matrix exponential of the joint flow gives
/// the state propagator, the gramian, and the drift block; the gramian is
/// factored once and reused for every agent in the interval.
pub struct IntervalPropagator<T> {
    m: Matrix<T>,
    exp_m: Matrix<T>,
    exp_a: Matrix<T>,
    phi: Matrix<T>,
    phi_lu: Lu<T>,
    b_t: Matrix<T>,
    a_t: Matrix<T>,
    delta: T,
    n: usize,
}

impl<T: Real> IntervalPropagator<T> {
    pub fn new(plant: &PlantModel<T>, delta: T) -> Result<Self> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::Domain(format!(
                "interval length {delta} must be positive and finite"
            )));
        }
        let n = plant.state_dim();
        let m = hamiltonian_block(plant);
        let exp_m = mat_exp(&m, delta)?;
        let exp_a = exp_m.block(0, 0, n, n);
        let phi = exp_m.block(0, n, n, n);
        let phi_lu = match Lu::factor(&phi) {
            Ok(lu) => lu,
            Err(Error::Singular { pivot }) => return Err(Error::GramianSingular { pivot }),
            Err(e) => return Err(e),
        };
        Ok(Self {
            m,
            exp_m,
            exp_a,
            phi,
            phi_lu,
            b_t: plant.b().transpose(),
            a_t: plant.a().transpose(),
            delta,
            n,
        })
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn phi(&self) -> &Matrix<T> {
        &self.phi
    }

    /// `e^{A delta}` as the drift block of the joint exponential.
    pub fn exp_a(&self) -> &Matrix<T> {
        &self.exp_a
    }

    /// Initial costate from the scaled neighbor sum.
    pub fn costate(&self, rel_sum: &Vector<T>) -> Result<Costate<T>> {
        if rel_sum.dim() != self.n {
            return Err(Error::Dimension(format!(
                "neighbor sum has dim {}, expected {}",
                rel_sum.dim(),
                self.n
            )));
        }
        let rhs = self.exp_a.mul_vec(rel_sum);
        let p = match self.phi_lu.solve(&Matrix::from_fn(self.n, 1, |i, _| rhs[i])) {
            Ok(x) => Vector::from_fn(self.n, |i| x[(i, 0)]),
            Err(Error::Singular { pivot }) => return Err(Error::GramianSingular { pivot }),
            Err(e) => return Err(e),
        };
        Ok(Costate::from_vector(p))
    }

    /// `e^{M tau}` for an interior offset `0 <= tau <= delta`; shared across
    /// agents by the simulator.
    pub fn flow_at(&self, tau: T) -> Result<Matrix<T>> {
        if tau < T::zero() {
            return Err(Error::Domain(format!("propagation time {tau} is negative")));
        }
        mat_exp(&self.m, tau)
    }

    /// Apply a flow matrix from [`Self::flow_at`] to one agent.
    pub fn apply_flow(&self, flow: &Matrix<T>, x: &Vector<T>, p: &Costate<T>) -> (Vector<T>, Vector<T>) {
        let z = flow.mul_vec(&Vector::stacked(&[x.clone(), p.vector().clone()]));
        let parts = z.unstack(self.n);
        (parts[0].clone(), parts[1].clone())
    }

    /// Advance one agent across the whole interval.
    pub fn advance_full(&self, x: &Vector<T>, p: &Costate<T>) -> (Vector<T>, Vector<T>) {
        self.apply_flow(&self.exp_m, x, p)
    }

    /// Map from interval-start costates to controls at offset `tau`:
    /// `u = (B^T e^{-A^T tau}) p`.
    pub fn control_map_at(&self, tau: T) -> Result<Matrix<T>> {
        if tau < T::zero() {
            return Err(Error::Domain(format!("control time offset {tau} is negative")));
        }
        let decay = mat_exp(&self.a_t, -tau)?;
        Ok(&self.b_t * &decay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::singular_values;

    fn vec2(a: f64, b: f64) -> Vector<f64> {
        Vector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn plant_construction_enforces_controllability() {
        let a = Matrix::diag(&[1.0, 2.0]);
        let b = Matrix::from_rows(2, 1, &[1.0, 0.0]).unwrap();
        assert!(matches!(PlantModel::new(a, b), Err(Error::Uncontrollable)));
        assert_eq!(PlantModel::<f64>::double_integrator().state_dim(), 2);
        assert_eq!(PlantModel::<f64>::single_integrator().input_dim(), 1);
        let osc = PlantModel::<f64>::harmonic_oscillator(2.0).unwrap();
        assert_eq!(osc.a()[(1, 0)], -4.0);
    }

    #[test]
    fn interval_lengths_follow_the_inverse_square_rule() {
        let ts = std::f64::consts::PI.powi(2) / 6.0;
        let sched: SamplingSchedule<f64> = SamplingSchedule::new(0.0, ts).unwrap();
        assert!((sched.interval_length(1).unwrap() - 1.0).abs() < 1e-15);

        let unit: SamplingSchedule<f64> = SamplingSchedule::new(0.0, 1.0).unwrap();
        assert!((unit.interval_length(2).unwrap() - 0.151_981_775_463_506_64).abs() < 1e-15);
        assert!(matches!(
            unit.interval_length(0),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn partial_sums_converge_to_the_settling_time_from_below() {
        let sched = SamplingSchedule::with_policy(0.0, 1.0, 1_000_000, None).unwrap();
        let mut last = 0.0;
        for k in (0..=1_000_000).step_by(9973) {
            let t = sched.sampling_instant(k).unwrap();
            assert!(t < 1.0);
            assert!(k == 0 || t > last);
            last = t;
        }
        let t_end = sched.sampling_instant(1_000_000).unwrap();
        assert!(t_end >= 1.0 - 1e-6 && t_end < 1.0);
    }

    #[test]
    fn sampling_instants_are_cached_cumulative_sums() {
        let sched: SamplingSchedule<f64> = SamplingSchedule::new(2.0, 1.0).unwrap();
        assert_eq!(sched.sampling_instant(0).unwrap(), 2.0);
        let six_over_pi2 = 0.607_927_101_854_026_6;
        assert!((sched.sampling_instant(1).unwrap() - 2.0 - six_over_pi2).abs() < 1e-15);
        assert!(matches!(
            sched.sampling_instant(61),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            SamplingSchedule::new(0.0, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hamiltonian_block_layout() {
        let plant = PlantModel::<f64>::double_integrator();
        let m = hamiltonian_block(&plant);
        assert_eq!(m.rows(), 4);
        // upper-right block is B B^T = [[0, 0], [0, 1]]
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m[(1, 3)], 1.0);
        // lower-right block is -A^T
        assert_eq!(m[(3, 2)], -1.0);
        assert_eq!(m[(2, 0)], 0.0);

        let a = Matrix::<f64>::zeros(2, 2);
        let b = Matrix::<f64>::identity(2);
        let m = hamiltonian_from_parts(&a, &b).unwrap();
        assert_eq!(m.block(0, 2, 2, 2), Matrix::identity(2));
        assert_eq!(m.block(2, 0, 2, 4), Matrix::zeros(2, 4));
    }

    #[test]
    fn gramian_closed_form_for_the_double_integrator() {
        let plant = PlantModel::<f64>::double_integrator();
        let phi = gramian_phi(&plant, 1.0).unwrap();
        let expected = Matrix::from_rows(2, 2, &[-1.0 / 6.0, 0.5, -0.5, 1.0]).unwrap();
        assert!((&phi - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn gramian_of_identity_input_is_delta_times_identity() {
        let a = Matrix::<f64>::zeros(2, 2);
        let b = Matrix::<f64>::identity(2);
        for &delta in &[0.25, 1.0, 3.0] {
            let phi = gramian_from_parts(&a, &b, delta).unwrap();
            assert!((&phi - &Matrix::identity(2).scaled(delta)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn gramian_of_uncontrollable_pair_is_singular() {
        let a: Matrix<f64> = Matrix::diag(&[1.0, 2.0]);
        let b = Matrix::from_rows(2, 1, &[1.0, 0.0]).unwrap();
        let phi = gramian_from_parts(&a, &b, 0.5).unwrap();
        let det = numlin::det(&phi).unwrap();
        assert!(det.abs() < 1e-12);
        let s = singular_values(&phi);
        assert!(s[1] <= 1e-12 * s[0]);
    }

    #[test]
    fn gramian_rejects_nonpositive_delta() {
        let plant = PlantModel::<f64>::double_integrator();
        assert!(matches!(gramian_phi(&plant, 0.0), Err(Error::Domain(_))));
        assert!(matches!(gramian_phi(&plant, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn costate_from_zero_neighbor_sum_is_zero() {
        let plant = PlantModel::<f64>::double_integrator();
        let p = costate_init(&plant, 1.0, &Vector::zeros(2)).unwrap();
        assert_eq!(p.vector(), &Vector::zeros(2));
    }

    #[test]
    fn costate_with_identity_gramian_returns_the_sum() {
        let a = Matrix::<f64>::zeros(2, 2);
        let b = Matrix::<f64>::identity(2);
        let plant = PlantModel::new(a, b).unwrap();
        let v = vec2(0.3, -0.7);
        let p = costate_init(&plant, 1.0, &v).unwrap();
        assert!((p.vector().sub(&v)).max_abs() < 1e-12);
    }

    #[test]
    fn costate_matches_the_closed_form_inverse() {
        // Phi^{-1} e^{A} (1, 0) = [[12, -6], [6, -2]] (1, 0) = (12, 6)
        let plant = PlantModel::<f64>::double_integrator();
        let p = costate_init(&plant, 1.0, &vec2(1.0, 0.0)).unwrap();
        assert!((p.vector()[0] - 12.0).abs() < 1e-9);
        assert!((p.vector()[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn control_signal_examples() {
        let plant = PlantModel::<f64>::double_integrator();
        let zero = Costate::from_vector(Vector::zeros(2));
        assert_eq!(control(&plant, 1.5, 1.0, &zero).unwrap(), Vector::zeros(1));

        let p = Costate::from_vector(vec2(12.0, 6.0));
        let at_start = control(&plant, 1.0, 1.0, &p).unwrap();
        assert!((at_start[0] - 6.0).abs() < 1e-12);

        // e^{-A^T s} p = (12, -12 + 6) at s = 1, so u = -6
        let later = control(&plant, 2.0, 1.0, &p).unwrap();
        assert!((later[0] + 6.0).abs() < 1e-12);

        assert!(matches!(
            control(&plant, 0.5, 1.0, &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn propagation_at_zero_offset_is_exact_identity() {
        let plant = PlantModel::<f64>::double_integrator();
        let x = vec2(0.4, -1.2);
        let p = Costate::from_vector(vec2(3.0, 0.5));
        let (x1, p1) = propagate_interval(&plant, &x, &p, 0.0).unwrap();
        assert_eq!(x1, x);
        assert_eq!(p1, *p.vector());
    }

    #[test]
    fn zero_costate_propagates_as_pure_drift() {
        let plant = PlantModel::<f64>::double_integrator();
        let x = vec2(1.0, 2.0);
        let p = Costate::from_vector(Vector::zeros(2));
        let (x1, p1) = propagate_interval(&plant, &x, &p, 0.75).unwrap();
        let drift = mat_exp(plant.a(), 0.75).unwrap().mul_vec(&x);
        assert!(x1.sub(&drift).max_abs() < 1e-13);
        assert_eq!(p1, Vector::zeros(2));
        assert!(matches!(
            propagate_interval(&plant, &x, &p, -0.1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn terminal_map_fixes_consensus_states() {
        let plant = PlantModel::<f64>::double_integrator();
        let avg = crate::graph::DirectedGraph::directed_ring(3).averaging_matrix();
        let c = vec2(0.5, -1.0);
        let stacked = Vector::stacked(&[c.clone(), c.clone(), c.clone()]);
        let image = terminal_map(&avg, &plant, 0.8, &stacked).unwrap();
        let drifted = mat_exp(plant.a(), 0.8).unwrap().mul_vec(&c);
        for part in image.unstack(2) {
            assert!(part.sub(&drifted).max_abs() < 1e-13);
        }
    }

    #[test]
    fn terminal_map_with_zero_dynamics_is_pure_averaging() {
        let a = Matrix::<f64>::zeros(2, 2);
        let b = Matrix::<f64>::identity(2);
        let plant = PlantModel::new(a, b).unwrap();
        let graph = crate::graph::DirectedGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let avg: Matrix<f64> = graph.averaging_matrix();
        let stacked = Vector::new(vec![1.0, 0.0, 3.0, 2.0]).unwrap();
        let image = terminal_map(&avg, &plant, 1.0, &stacked).unwrap();
        let direct = avg.kron(&Matrix::identity(2)).mul_vec(&stacked);
        assert!(image.sub(&direct).max_abs() < 1e-15);
        // both agents land on the average
        let parts = image.unstack(2);
        assert!((parts[0][0] - 2.0).abs() < 1e-15);
        assert!((parts[0][1] - 1.0).abs() < 1e-15);
        assert!(parts[0].sub(&parts[1]).max_abs() < 1e-15);
    }

    #[test]
    fn one_interval_of_the_costate_route_reproduces_the_terminal_map() {
        let plant = PlantModel::<f64>::double_integrator();
        let graph = crate::graph::DirectedGraph::directed_ring(3);
        let avg: Matrix<f64> = graph.averaging_matrix();
        let delta = 0.6;
        let states = [vec2(1.0, 0.0), vec2(-0.5, 0.25), vec2(0.0, -1.0)];

        let prop = IntervalPropagator::new(&plant, delta).unwrap();
        let mut next = Vec::new();
        for i in 0..3 {
            let neighbors = graph.in_neighbors(i).unwrap();
            let scale = 1.0 / (neighbors.len() as f64 + 1.0);
            let mut rel = Vector::zeros(2);
            for &j in neighbors {
                rel = rel.add(&states[j].sub(&states[i]));
            }
            let p = prop.costate(&rel.scaled(scale)).unwrap();
            let (x1, _) = prop.advance_full(&states[i], &p);
            next.push(x1);
        }
        let simulated = Vector::stacked(&next);
        let oracle = terminal_map(&avg, &plant, delta, &Vector::stacked(&states)).unwrap();
        let rel_err = simulated.sub(&oracle).norm() / oracle.norm();
        assert!(rel_err < 1e-12, "one-step equivalence failed: {rel_err}");
    }
}
