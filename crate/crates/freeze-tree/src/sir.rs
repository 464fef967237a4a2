//! Contact tracing in a stochastic SIR dynamics.
//!
//! The embedded chain `(H_k, I_k)` starts from `(n, 1)` and at each step
//! infects (`H - 1, I + 1`) with probability `lambda_n H / (1 + lambda_n H)`
//! or recovers (`H, I - 1`) otherwise, absorbing at `I = 0`. The induced sign
//! sequence `x_k = I_k - I_{k-1}` drives the infection tree, whose active
//! vertices are the infectives and whose frozen vertices are the removed.
//! The fluid limit of `I/n` is `max(2 - 2 g(t) - t, 0)` on survival, with
//! `g' = -lambda g / (1 + lambda g)`, `g(0) = 1`.

use rand::Rng;

use crate::attach::build_attach;
use crate::rng::SimRng;
use crate::seq::{Sign, SignSequence};
use crate::stats::DistComparison;
use crate::tree::FreezeTree;
use crate::{Error, Result};

/// One path of the `(H, I)` chain up to absorption.
#[derive(Clone, Debug)]
pub struct SirTrajectory {
    /// Susceptible counts `H_0..H_absorption`.
    pub susceptible: Vec<u32>,
    /// Infective counts `I_0..I_absorption`.
    pub infective: Vec<u32>,
    /// Per-pair contact rate (the per-step parameter `lambda_n`).
    pub lambda_n: f64,
    /// Step index at which `I` hit zero.
    pub absorption: usize,
}

impl SirTrajectory {
    pub fn initial_susceptibles(&self) -> usize {
        self.susceptible[0] as usize
    }

    /// The identity `I_k = 2 (n - H_k) - k + 1`, valid at every step.
    pub fn identity_holds(&self) -> bool {
        let n = self.susceptible[0] as i64;
        self.infective
            .iter()
            .enumerate()
            .all(|(k, &i)| i as i64 == 2 * (n - self.susceptible[k] as i64) - k as i64 + 1)
    }
}

/// Runs the chain from `(n, 1)` to absorption and returns the induced sign
/// sequence together with the trajectory. The absorption step equals
/// `tau` of the sequence by construction, and is at most `2n + 1`.
pub fn gen_sir(n: usize, lambda_n: f64, rng: &mut SimRng) -> Result<(SignSequence, SirTrajectory)> {
    if n == 0 {
        return Err(Error::OutOfRange("need at least one susceptible".into()));
    }
    if lambda_n < 0.0 || !lambda_n.is_finite() {
        return Err(Error::OutOfRange(format!(
            "need lambda_n >= 0, got {lambda_n}"
        )));
    }
    let mut h = n as u32;
    let mut i = 1u32;
    let mut susceptible = Vec::with_capacity(2 * n + 2);
    let mut infective = Vec::with_capacity(2 * n + 2);
    let mut signs = Vec::with_capacity(2 * n + 1);
    susceptible.push(h);
    infective.push(i);
    while i > 0 {
        let rate = lambda_n * h as f64;
        let p_up = rate / (1.0 + rate);
        if rng.gen::<f64>() < p_up {
            h -= 1;
            i += 1;
            signs.push(Sign::Plus);
        } else {
            i -= 1;
            signs.push(Sign::Minus);
        }
        susceptible.push(h);
        infective.push(i);
        debug_assert!(signs.len() <= 2 * n + 1);
    }
    let absorption = signs.len();
    let trajectory = SirTrajectory {
        susceptible,
        infective,
        lambda_n,
        absorption,
    };
    debug_assert!(trajectory.identity_holds());
    Ok((SignSequence::new(signs), trajectory))
}

/// Runs the chain and builds the infection tree over the full sequence.
pub fn sir_tree(n: usize, lambda_n: f64, rng: &mut SimRng) -> Result<(FreezeTree, SirTrajectory)> {
    let (x, trajectory) = gen_sir(n, lambda_n, rng)?;
    let tree = build_attach(&x, x.len(), rng)?;
    Ok((tree, trajectory))
}

/// Proxy for the survival event: the epidemic ran longer than
/// `threshold_steps`. The extinction branch of the limiting walk dies in
/// O(1) steps while the surviving branch takes order `n`, so the default
/// threshold `sqrt(n)` separates the regimes.
pub fn survival_filter(trajectory: &SirTrajectory, threshold_steps: usize) -> bool {
    trajectory.absorption > threshold_steps
}

pub fn default_survival_threshold(n: usize) -> usize {
    (n as f64).sqrt() as usize
}

/// Fluid limit of the susceptible fraction: `g' = -lambda g / (1 + lambda g)`
/// with `g(0) = 1`, integrated by fixed-step classical Runge-Kutta.
#[derive(Clone, Debug)]
pub struct FluidSolution {
    pub lambda: f64,
    pub dt: f64,
    pub t_grid: Vec<f64>,
    pub g: Vec<f64>,
    /// First positive zero of `2 - 2 g(t) - t`, when the profile is
    /// supercritical.
    pub t0: Option<f64>,
}

fn fluid_rhs(lambda: f64, g: f64) -> f64 {
    -lambda * g / (1.0 + lambda * g)
}

fn rk4_step(lambda: f64, g: f64, h: f64) -> f64 {
    let k1 = fluid_rhs(lambda, g);
    let k2 = fluid_rhs(lambda, g + 0.5 * h * k1);
    let k3 = fluid_rhs(lambda, g + 0.5 * h * k2);
    let k4 = fluid_rhs(lambda, g + h * k3);
    g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

pub fn fluid_solve(lambda: f64, t_max: f64, dt: f64) -> Result<FluidSolution> {
    if lambda <= 0.0 || t_max <= 0.0 || dt <= 0.0 {
        return Err(Error::OutOfRange(
            "fluid_solve needs positive lambda, t_max, dt".into(),
        ));
    }
    let steps = (t_max / dt).ceil() as usize;
    let mut t_grid = Vec::with_capacity(steps + 1);
    let mut g = Vec::with_capacity(steps + 1);
    let mut cur = 1.0f64;
    t_grid.push(0.0);
    g.push(cur);
    for k in 1..=steps {
        cur = rk4_step(lambda, cur, dt);
        t_grid.push(k as f64 * dt);
        g.push(cur);
    }
    let mut solution = FluidSolution {
        lambda,
        dt,
        t_grid,
        g,
        t0: None,
    };
    solution.t0 = solution.locate_t0();
    Ok(solution)
}

impl FluidSolution {
    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    /// `g(t)` re-integrated from the nearest grid node below `t`, so the
    /// value carries the integrator's accuracy rather than interpolation
    /// error.
    pub fn g_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let t = t.min(self.t_max());
        let idx = ((t / self.dt) as usize).min(self.g.len() - 1);
        let remainder = t - self.t_grid[idx];
        if remainder == 0.0 {
            self.g[idx]
        } else {
            rk4_step(self.lambda, self.g[idx], remainder)
        }
    }

    /// Rescaled infective profile `max(2 - 2 g(t) - t, 0)`.
    pub fn i_fluid_at(&self, t: f64) -> f64 {
        (2.0 - 2.0 * self.g_at(t) - t).max(0.0)
    }

    /// `i_fluid` sampled on the step grid `t = k / n` for `k <= max_steps`.
    pub fn i_fluid_table(&self, n: usize, max_steps: usize) -> Vec<f64> {
        (0..=max_steps)
            .map(|k| self.i_fluid_at(k as f64 / n as f64))
            .collect()
    }

    fn excess(&self, t: f64) -> f64 {
        2.0 - 2.0 * self.g_at(t) - t
    }

    /// Bisection for the first positive downcrossing of `2 - 2g(t) - t`.
    fn locate_t0(&self) -> Option<f64> {
        let mut bracket = None;
        for k in 1..self.t_grid.len() {
            let (a, b) = (self.t_grid[k - 1], self.t_grid[k]);
            if self.excess(a) > 0.0 && self.excess(b) <= 0.0 {
                bracket = Some((a, b));
                break;
            }
        }
        let (mut lo, mut hi) = bracket?;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Sup distance between the rescaled trajectory `I_{floor(nt)} / n` and the
/// fluid profile, taken over the trajectory's steps.
pub fn fluid_comparison(trajectory: &SirTrajectory, solution: &FluidSolution) -> f64 {
    let n = trajectory.initial_susceptibles();
    let table = solution.i_fluid_table(n, trajectory.absorption);
    fluid_comparison_with_table(trajectory, &table)
}

/// Same as [`fluid_comparison`] with a precomputed `i_fluid` table indexed by
/// step, shared across replications.
pub fn fluid_comparison_with_table(trajectory: &SirTrajectory, table: &[f64]) -> f64 {
    let n = trajectory.initial_susceptibles() as f64;
    trajectory
        .infective
        .iter()
        .enumerate()
        .map(|(k, &i)| (i as f64 / n - table[k]).abs())
        .fold(0.0, f64::max)
}

/// Sup distance of the rescaled profile from the triangular profile
/// `min(t, 2 - t)` of the `lambda_n >> 1/n` regime.
pub fn triangular_profile_distance(trajectory: &SirTrajectory) -> f64 {
    let n = trajectory.initial_susceptibles() as f64;
    trajectory
        .infective
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let t = k as f64 / n;
            (i as f64 / n - t.min(2.0 - t).max(0.0)).abs()
        })
        .fold(0.0, f64::max)
}

/// Final degree of the root of the infection tree, simulated without
/// materializing the tree: attachment and freezing hit the root with
/// probability `1/I` among the infectives, and nothing after the root
/// freezes can change its degree.
pub fn root_offspring_sample(n: usize, lambda_n: f64, rng: &mut SimRng) -> u32 {
    let mut h = n as u64;
    let mut i = 1u64;
    let mut degree = 0u32;
    loop {
        let rate = lambda_n * h as f64;
        let p_up = rate / (1.0 + rate);
        if rng.gen::<f64>() < p_up {
            if rng.gen_range(0..i) == 0 {
                degree += 1;
            }
            h -= 1;
            i += 1;
        } else {
            if rng.gen_range(0..i) == 0 {
                return degree;
            }
            i -= 1;
            if i == 0 {
                return degree;
            }
        }
    }
}

/// Chi-square comparison of the root's offspring count against the geometric
/// law `mu(k) = (1/(1+lambda)) (lambda/(1+lambda))^k` of the local limit, in
/// the `lambda_n = lambda / n` regime. Tail cells are pooled to keep at
/// least five expected observations per cell.
pub fn geometric_offspring_check(
    lambda: f64,
    n: usize,
    replications: usize,
    rng: &mut SimRng,
    p_floor: f64,
) -> Result<DistComparison> {
    if lambda < 0.0 {
        return Err(Error::OutOfRange("need lambda >= 0".into()));
    }
    let lambda_n = lambda / n as f64;
    let q = lambda / (1.0 + lambda);
    // largest cell k with expected count >= 5, everything above pooled
    let mut cut = 0usize;
    while replications as f64 * (1.0 - q) * q.powi(cut as i32 + 1) >= 5.0 && cut < 64 {
        cut += 1;
    }
    let mut observed = vec![0u64; cut + 1];
    for _ in 0..replications {
        let deg = root_offspring_sample(n, lambda_n, rng) as usize;
        observed[deg.min(cut)] += 1;
    }
    let mut expected: Vec<f64> = (0..cut).map(|k| (1.0 - q) * q.powi(k as i32)).collect();
    expected.push(q.powi(cut as i32));
    let labels: Vec<String> = (0..cut)
        .map(|k| k.to_string())
        .chain(std::iter::once(format!(">={cut}")))
        .collect();
    DistComparison::chi_square(labels, observed, expected, p_floor)
}
