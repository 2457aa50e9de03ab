use std::time::Instant;

use super::SolveResult;
use crate::error::Result;
use crate::ising::{check_spins, IsingProblem, Spin};

/// Steepest-ascent single-flip local search from `start`.
///
/// Each step flips the spin with the largest objective gain (lowest index
/// on ties) and stops once no flip gains more than a relative `1e-12`.
pub fn greedy_flip(problem: &IsingProblem, start: &[Spin]) -> Result<SolveResult> {
    let started = Instant::now();
    let n = problem.num_spins();
    check_spins(start, n)?;
    let sign = problem.sense().sign();
    let tol = 1e-12 * problem.abs_sum();
    let mut spins = start.to_vec();
    let mut fields: Vec<f64> = (0..n).map(|i| problem.local_field(&spins, i)).collect();
    let mut evaluations = 0u64;

    loop {
        let mut best_i = None;
        let mut best_gain = tol;
        for i in 0..n {
            let gain = -2.0 * sign * f64::from(spins[i]) * fields[i];
            if gain > best_gain {
                best_gain = gain;
                best_i = Some(i);
            }
        }
        evaluations += n as u64;
        let Some(i) = best_i else { break };
        let s = f64::from(spins[i]);
        spins[i] = -spins[i];
        for (f, &j) in fields.iter_mut().zip(problem.couplings().row(i).iter()) {
            *f -= 2.0 * s * j;
        }
    }

    let mut result = SolveResult::new(problem, spins, evaluations, 0, "greedy");
    result.wall_time = started.elapsed().as_secs_f64();
    Ok(result)
}
