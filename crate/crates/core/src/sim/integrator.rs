use nalgebra::SMatrix;

use super::filter::realize_force_filter;
use super::noise::ThermalForce;
use super::{SimConfig, SimError, Trajectory, DIVERGENCE_FACTOR};
use crate::constants::BOLTZMANN;
use crate::exec::Execution;
use crate::model::OperatingPoint;

/// Exact one-step propagator for the coupled oscillator and force filter.
///
/// The state is scaled so that every component is a length:
/// `(x, ẋ/Ω_m, F/k, (Ḟ/Ω_c)/k)`. The thermal force is held constant over
/// each step, so `y_{n+1} = Φ y_n + g F_T,n / k` with `Φ = e^{A dt}` and
/// `g = ∫₀^dt e^{A s} B ds`, both taken from one augmented matrix
/// exponential.
#[derive(Debug, Clone)]
pub struct Simulator {
    transition: [[f64; 4]; 4],
    input: [f64; 4],
    state: [f64; 4],
    force: ThermalForce,
    inv_k: f64,
    guard: f64,
    dt: f64,
    steps: u64,
}

impl Simulator {
    pub fn new(op: &OperatingPoint, config: &SimConfig) -> Result<Self, SimError> {
        config.validate(op)?;
        let dt = config.dt;
        let mode = &op.mode;
        let k = mode.spring_constant();
        let filter = realize_force_filter(op, dt)?;
        let af = filter.state_matrix();
        let bf = filter.input_vector() / k;
        let (wm, gm) = (mode.omega_m(), mode.gamma_m());

        let mut aug = SMatrix::<f64, 5, 5>::zeros();
        aug[(0, 1)] = wm;
        aug[(1, 0)] = -wm;
        aug[(1, 1)] = -gm;
        aug[(1, 2)] = wm;
        aug[(2, 0)] = bf[0];
        aug[(3, 0)] = bf[1];
        for i in 0..2 {
            for j in 0..2 {
                aug[(2 + i, 2 + j)] = af[(i, j)];
            }
        }
        aug[(1, 4)] = wm;
        let e = (aug * dt).exp();

        let mut transition = [[0.0; 4]; 4];
        let mut input = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                transition[i][j] = e[(i, j)];
            }
            input[i] = e[(i, 4)];
        }

        let thermal_rms = (BOLTZMANN * op.temperature_bath / k).sqrt();
        let scale = thermal_rms.max(config.initial_displacement.abs());
        let guard = if scale > 0.0 {
            DIVERGENCE_FACTOR * scale
        } else {
            f64::INFINITY
        };

        Ok(Self {
            transition,
            input,
            state: [config.initial_displacement, 0.0, 0.0, 0.0],
            force: ThermalForce::new(mode, op.temperature_bath, dt, config.seed),
            inv_k: 1.0 / k,
            guard,
            dt,
            steps: 0,
        })
    }

    /// Current displacement (m).
    pub fn displacement(&self) -> f64 {
        self.state[0]
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Displacement beyond which the run is declared divergent.
    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Advances one step and returns the new displacement.
    #[inline]
    pub fn step(&mut self) -> f64 {
        let f = self.force.next().unwrap_or(0.0) * self.inv_k;
        let y = self.state;
        let m = &self.transition;
        let mut next = [0.0; 4];
        for (i, row) in m.iter().enumerate() {
            next[i] =
                row[0] * y[0] + row[1] * y[1] + row[2] * y[2] + row[3] * y[3] + self.input[i] * f;
        }
        self.state = next;
        self.steps += 1;
        next[0]
    }

    /// Records the current displacement into `sink`, then steps; `n` times.
    /// Stops early and returns the time of divergence if the guard trips.
    pub fn run<F: FnMut(f64)>(&mut self, n: usize, mut sink: F) -> Result<(), f64> {
        for _ in 0..n {
            let x = self.state[0];
            if !(x.abs() <= self.guard) {
                return Err(self.time());
            }
            sink(x);
            self.step();
        }
        Ok(())
    }

    /// Steps `n` times without recording.
    pub fn skip(&mut self, n: usize) -> Result<(), f64> {
        self.run(n, |_| {})
    }
}

/// Integrates one trajectory: burn-in, then `config.sample_count()` recorded
/// samples starting at `t = burn_in`.
pub fn integrate(op: &OperatingPoint, config: &SimConfig) -> Result<Trajectory, SimError> {
    let mut sim = Simulator::new(op, config)?;
    let start_steps = config.burn_in_steps();
    let n = config.sample_count();
    let mut trajectory = Trajectory {
        samples: Vec::with_capacity(n),
        dt: config.dt,
        start_time: start_steps as f64 * config.dt,
        op: *op,
        config: *config,
    };
    let outcome = sim
        .skip(start_steps)
        .and_then(|_| sim.run(n, |x| trajectory.samples.push(x)));
    match outcome {
        Ok(()) => Ok(trajectory),
        Err(time) => Err(SimError::UnstableGrowth {
            time,
            partial: Box::new(trajectory),
        }),
    }
}

/// Mean-square displacement over an ensemble of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleVariance {
    /// Mean of `x²` for each trajectory, in seed order.
    pub per_trajectory: Vec<f64>,
    pub mean: f64,
    /// Standard error of `mean` from the spread across trajectories.
    pub standard_error: f64,
}

impl EnsembleVariance {
    pub fn rms(&self) -> f64 {
        self.mean.sqrt()
    }
}

/// Streams `config.n_trajectories` runs (seeds `seed, seed+1, …`) without
/// storing samples.
pub fn ensemble_variance(
    op: &OperatingPoint,
    config: &SimConfig,
    exec: Execution,
) -> Result<EnsembleVariance, SimError> {
    config.validate(op)?;
    let seeds: Vec<u64> = (0..config.n_trajectories as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let results = exec.map(&seeds, |&seed| -> Result<f64, SimError> {
        let cfg = config.with_seed(seed);
        let mut sim = Simulator::new(op, &cfg)?;
        let n = cfg.sample_count();
        let mut sum = 0.0;
        sim.skip(cfg.burn_in_steps())
            .and_then(|_| sim.run(n, |x| sum += x * x))
            .map_err(|time| SimError::UnstableGrowth {
                time,
                partial: Box::new(Trajectory {
                    samples: Vec::new(),
                    dt: cfg.dt,
                    start_time: 0.0,
                    op: *op,
                    config: cfg,
                }),
            })?;
        Ok(sum / n as f64)
    });
    let per_trajectory = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = per_trajectory.len() as f64;
    let mean = per_trajectory.iter().sum::<f64>() / n;
    let spread = if per_trajectory.len() > 1 {
        per_trajectory
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(EnsembleVariance {
        per_trajectory,
        mean,
        standard_error: (spread / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::reference_op;
    use super::*;
    use crate::model::effective_dynamics;

    #[test]
    fn cold_and_still_stays_at_rest() {
        let op = reference_op(0.0, 3.2e-3, 0.0);
        let cfg = SimConfig {
            duration: 1e-3,
            ..SimConfig::for_operating_point(&op)
        };
        let t = integrate(&op, &cfg).unwrap();
        assert_eq!(t.len(), cfg.sample_count());
        assert!(t.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn free_oscillation_has_bare_frequency() {
        let op = reference_op(0.0, 0.0, 0.0);
        let cfg = SimConfig {
            duration: 2e-4,
            burn_in: 0.0,
            initial_displacement: 1e-12,
            ..SimConfig::for_operating_point(&op)
        };
        let t = integrate(&op, &cfg).unwrap();
        let (wm, gm) = (op.mode.omega_m(), op.mode.gamma_m());
        let wd = (wm * wm - gm * gm / 4.0).sqrt();
        for (i, &x) in t.samples.iter().enumerate().step_by(97) {
            let time = t.time(i);
            let exact = 1e-12
                * (-gm * time / 2.0).exp()
                * ((wd * time).cos() + gm / (2.0 * wd) * (wd * time).sin());
            assert!((x - exact).abs() < 1e-9 * 1e-12, "i={i}");
        }
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let op = reference_op(-0.3, 2e-3, 300.0);
        let cfg = SimConfig {
            duration: 2e-4,
            burn_in: 1e-5,
            seed: 9,
            ..SimConfig::for_operating_point(&op)
        };
        let a = integrate(&op, &cfg).unwrap();
        let b = integrate(&op, &cfg).unwrap();
        assert_eq!(a, b);
        let c = integrate(&op, &cfg.with_seed(10)).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn unstable_point_trips_guard() {
        let op = reference_op(0.11, 3.2e-3, 300.0);
        assert!(!effective_dynamics(&op).stable);
        let cfg = SimConfig {
            duration: 1.0,
            burn_in: 0.0,
            initial_displacement: 1e-13,
            ..SimConfig::for_operating_point(&op)
        };
        match integrate(&op, &cfg) {
            Err(SimError::UnstableGrowth { time, partial }) => {
                assert!(time < 1.0);
                assert!(!partial.samples.is_empty());
                assert!(partial.samples.iter().all(|x| x.is_finite()));
            }
            other => panic!("expected growth, got {other:?}"),
        }
    }
}
