//! Penalty-free reduction of the line-control problem: solve the
//! unconstrained full-element problem for `φ*`, then fit the closest
//! line pattern `v ⊗ h` with a bipartite quadratic problem.
//!
//! Expanding `‖φ* − vec(v ⊗ h)‖² = 2N − 2 Re{φ*ᴴ vec(v ⊗ h)}` turns the fit
//! into maximizing `Re{φ*ᴴ vec(v ⊗ h)}`, which couples row spins only to
//! column spins.

use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{effective_objective, Channel, PhaseVector};
use crate::higher_order::{assemble_line_phases, LineControl};
use crate::ising::{coupling_from_channel, spins_to_phases, IsingProblem, Levels, Sense, Spin};
use crate::solvers::{solve_dispatch, SolveResult, SolverSpec};

pub const DEFAULT_STARTS: usize = 32;

/// `Σ_ij W_ij l_i r_j` over left spins `l` and right spins `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bipartite {
    weights: Array2<f64>,
}

impl Bipartite {
    pub fn new(weights: Array2<f64>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn num_left(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_right(&self) -> usize {
        self.weights.ncols()
    }

    pub fn value(&self, left: &[Spin], right: &[Spin]) -> f64 {
        let mut total = 0.0;
        for (row, &l) in self.weights.rows().into_iter().zip(left) {
            let s: f64 = row.iter().zip(right).map(|(w, &r)| w * f64::from(r)).sum();
            total += f64::from(l) * s;
        }
        total
    }

    /// Best right side for fixed `left`, `sign(0) = +1`.
    pub fn best_right(&self, left: &[Spin]) -> Vec<Spin> {
        (0..self.num_right())
            .map(|j| {
                let f: f64 = self.weights.column(j).iter().zip(left).map(|(w, &l)| w * f64::from(l)).sum();
                sign(f)
            })
            .collect()
    }

    /// Best left side for fixed `right`, `sign(0) = +1`.
    pub fn best_left(&self, right: &[Spin]) -> Vec<Spin> {
        self.weights
            .rows()
            .into_iter()
            .map(|row| sign(row.iter().zip(right).map(|(w, &r)| w * f64::from(r)).sum()))
            .collect()
    }

    /// MAX-sense Ising problem over `[left, right]` with no bias.
    pub fn to_ising(&self) -> Result<IsingProblem> {
        let (nl, nr) = self.weights.dim();
        let mut pairs = Vec::new();
        for ((i, j), &w) in self.weights.indexed_iter() {
            if w != 0.0 {
                pairs.push((i, nl + j, w));
            }
        }
        IsingProblem::from_pairs(nl + nr, pairs, vec![0.0; nl + nr], 0.0, Sense::Max)
    }
}

fn sign(x: f64) -> Spin {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Line fit to a full-element solution.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondStepProblem {
    pub bipartite: Bipartite,
    pub n_v: usize,
    pub n_h: usize,
    pub levels: Levels,
}

impl SecondStepProblem {
    /// `Re{φ*ᴴ vec(v ⊗ h)}` of a line assignment, with the four-level value
    /// in units where each line spin pair `(re, im)` maps to `re + j·im`.
    pub fn value(&self, line: &LineControl) -> f64 {
        let spins = line.to_spins();
        let (l, r) = self.split(&spins);
        self.bipartite.value(l, r)
    }

    fn split<'a>(&self, spins: &'a [Spin]) -> (&'a [Spin], &'a [Spin]) {
        spins.split_at(self.bipartite.num_left())
    }

    pub fn line_from_sides(&self, left: &[Spin], right: &[Spin]) -> Result<LineControl> {
        LineControl::from_spins(&[left, right].concat(), self.n_v, self.n_h, self.levels)
    }
}

/// Everything the two-step method carries between its stages.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepState {
    pub phi_star: PhaseVector,
    pub second: SecondStepProblem,
}

/// Full-element solve, ignoring the line structure.
pub fn two_step_first(full: &IsingProblem, solver: &SolverSpec) -> Result<SolveResult> {
    solve_dispatch(full, solver)
}

/// Bipartite fit for a full-element phase vector `φ*` (length `n_v·n_h`).
///
/// Two levels couple `v_i` and `h_j` with `Re φ*_{i·N_h+j}`. Four levels
/// write `φ* = p + jq` and line factors `(a + jb)`, `(c + jd)`, so that
/// `Re{conj(φ*)(a + jb)(c + jd)} = p(ac − bd) + q(ad + bc)`; the left block
/// is `[a, b]`, the right block `[c, d]`, and the common `1/2` from the
/// unit-modulus normalization is kept so values match `Re{φ*ᴴ ψ}`.
pub fn two_step_second_problem(phi_star: &PhaseVector, n_v: usize, n_h: usize, levels: Levels) -> Result<SecondStepProblem> {
    let n = n_v * n_h;
    if phi_star.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: phi_star.len() });
    }
    let phi = phi_star.phases();
    let weights = match levels {
        Levels::Two => Array2::from_shape_fn((n_v, n_h), |(i, j)| phi[i * n_h + j].re),
        Levels::Four => {
            let mut w = Array2::zeros((2 * n_v, 2 * n_h));
            for i in 0..n_v {
                for j in 0..n_h {
                    let (p, q) = (phi[i * n_h + j].re / 2.0, phi[i * n_h + j].im / 2.0);
                    w[[i, j]] = p;
                    w[[n_v + i, n_h + j]] = -p;
                    w[[i, n_h + j]] = q;
                    w[[n_v + i, j]] = q;
                }
            }
            w
        }
    };
    Ok(SecondStepProblem { bipartite: Bipartite::new(weights), n_v, n_h, levels })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlternatingResult {
    pub left: Vec<Spin>,
    pub right: Vec<Spin>,
    pub value: f64,
    /// Half-steps summed over all starts.
    pub half_steps: u64,
}

const MAX_ROUNDS: usize = 10_000;

fn alternate_from(bp: &Bipartite, mut left: Vec<Spin>) -> (Vec<Spin>, Vec<Spin>, u64) {
    let mut right = bp.best_right(&left);
    let mut steps = 1;
    for _ in 0..MAX_ROUNDS {
        let new_left = bp.best_left(&right);
        let new_right = bp.best_right(&new_left);
        steps += 2;
        if new_left == left && new_right == right {
            break;
        }
        left = new_left;
        right = new_right;
    }
    (left, right, steps)
}

/// Alternating exact maximization over one side at a time. Start 0 is the
/// all-`+1` left side; the others are random from `(seed, start)` streams.
/// Starts run in parallel; the best value wins, lowest start on ties.
pub fn alternating_ascent(bp: &Bipartite, starts: usize, seed: u64) -> AlternatingResult {
    let nl = bp.num_left();
    let runs: Vec<_> = (0..starts.max(1))
        .into_par_iter()
        .map(|k| {
            let left = if k == 0 {
                vec![1; nl]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                (0..nl).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
            };
            let (l, r, steps) = alternate_from(bp, left);
            let v = bp.value(&l, &r);
            (l, r, v, steps)
        })
        .collect();
    let half_steps = runs.iter().map(|r| r.3).sum();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.2 > runs[best].2 {
            best = k;
        }
    }
    let (left, right, value, _) = runs.into_iter().nth(best).expect("at least one start");
    AlternatingResult { left, right, value, half_steps }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SecondStepSolver {
    Alternating { starts: usize, seed: u64 },
    Ising(SolverSpec),
}

impl Default for SecondStepSolver {
    fn default() -> Self {
        SecondStepSolver::Alternating { starts: DEFAULT_STARTS, seed: 0 }
    }
}

/// Returns the fitted line pattern and the work spent.
pub fn two_step_second_solve(second: &SecondStepProblem, solver: &SecondStepSolver) -> Result<(LineControl, u64)> {
    match solver {
        SecondStepSolver::Alternating { starts, seed } => {
            let r = alternating_ascent(&second.bipartite, *starts, *seed);
            Ok((second.line_from_sides(&r.left, &r.right)?, r.half_steps))
        }
        SecondStepSolver::Ising(spec) => {
            let r = solve_dispatch(&second.bipartite.to_ising()?, spec)?;
            let (l, rr) = second.split(&r.spins);
            Ok((second.line_from_sides(l, rr)?, r.evaluations))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepOutcome {
    pub line: LineControl,
    pub phases: PhaseVector,
    /// Received power per watt of transmit power.
    pub objective: f64,
    pub received_power_w: f64,
    pub phi_star: PhaseVector,
    /// First-step solver evaluations plus second-step work.
    pub evaluations: u64,
    pub wall_time: f64,
}

/// End-to-end two-step design on `channel` for an `n_v × n_h` surface.
pub fn two_step_pipeline(
    channel: &Channel,
    n_v: usize,
    n_h: usize,
    levels: Levels,
    first: &SolverSpec,
    second: &SecondStepSolver,
    tx_power_w: f64,
) -> Result<TwoStepOutcome> {
    let full = coupling_from_channel(channel, levels)?;
    two_step_with_problem(channel, &full, n_v, n_h, levels, first, second, tx_power_w)
}

/// As [`two_step_pipeline`] with the full-element problem already built.
#[allow(clippy::too_many_arguments)]
pub fn two_step_with_problem(
    channel: &Channel,
    full: &IsingProblem,
    n_v: usize,
    n_h: usize,
    levels: Levels,
    first: &SolverSpec,
    second: &SecondStepSolver,
    tx_power_w: f64,
) -> Result<TwoStepOutcome> {
    let started = Instant::now();
    if n_v * n_h != channel.num_elements() {
        return Err(Error::DimensionMismatch { expected: channel.num_elements(), got: n_v * n_h });
    }
    let first_result = two_step_first(full, first)?;
    let phi_star = spins_to_phases(&first_result.spins, levels)?;
    let fit = two_step_second_problem(&phi_star, n_v, n_h, levels)?;
    let (line, work) = two_step_second_solve(&fit, second)?;
    let phases = assemble_line_phases(&line);
    let objective = effective_objective(channel, &phases)?;
    Ok(TwoStepOutcome {
        line,
        phases,
        objective,
        received_power_w: objective * tx_power_w,
        phi_star,
        evaluations: first_result.evaluations + work,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{exhaustive_search, DEFAULT_EXHAUSTIVE_CAP};
    use num_complex::Complex64;

    fn all_spins(n: usize) -> Vec<Vec<Spin>> {
        (0u64..(1 << n)).map(|bits| (0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect()).collect()
    }

    fn random_spins(n: usize, rng: &mut ChaCha8Rng) -> Vec<Spin> {
        (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
    }

    fn inner(phi: &PhaseVector, psi: &PhaseVector) -> f64 {
        phi.phases().iter().zip(psi.phases()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    #[test]
    fn squared_norm_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for levels in [Levels::Two, Levels::Four] {
            for _ in 0..50 {
                let (n_v, n_h) = (rng.gen_range(1..6), rng.gen_range(1..6));
                let n = n_v * n_h;
                let k = levels.spins_per_variable();
                let phi = spins_to_phases(&random_spins(k * n, &mut rng), levels).unwrap();
                let line = LineControl::from_spins(&random_spins(k * (n_v + n_h), &mut rng), n_v, n_h, levels).unwrap();
                let psi = assemble_line_phases(&line);
                let dist: f64 = phi.phases().iter().zip(psi.phases()).map(|(a, b)| (a - b).norm_sqr()).sum();
                assert!((dist - (2.0 * n as f64 - 2.0 * inner(&phi, &psi))).abs() < 1e-9);
                let fit = two_step_second_problem(&phi, n_v, n_h, levels).unwrap();
                assert!((fit.value(&line) - inner(&phi, &psi)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn second_problem_value_identity_is_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for levels in [Levels::Two, Levels::Four] {
            let (n_v, n_h) = (2, 3);
            let k = levels.spins_per_variable();
            let phi = spins_to_phases(&random_spins(k * n_v * n_h, &mut rng), levels).unwrap();
            let fit = two_step_second_problem(&phi, n_v, n_h, levels).unwrap();
            let ising = fit.bipartite.to_ising().unwrap();
            for s in all_spins(k * (n_v + n_h)) {
                let line = LineControl::from_spins(&s, n_v, n_h, levels).unwrap();
                let want = inner(&phi, &assemble_line_phases(&line));
                assert!((fit.value(&line) - want).abs() < 1e-12);
                assert!((ising.objective(&s).unwrap() - want).abs() < 1e-12);
                assert!((fit.value(&line.negated()) - want).abs() < 1e-12);
                assert_eq!(assemble_line_phases(&line.negated()), assemble_line_phases(&line));
            }
        }
    }

    #[test]
    fn exhaustive_fit_matches_brute_force_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n_v, n_h) = (3, 3);
        let phi = spins_to_phases(&random_spins(9, &mut rng), Levels::Two).unwrap();
        let fit = two_step_second_problem(&phi, n_v, n_h, Levels::Two).unwrap();
        let best = exhaustive_search(&fit.bipartite.to_ising().unwrap(), DEFAULT_EXHAUSTIVE_CAP).unwrap();
        let min_dist = all_spins(6)
            .into_iter()
            .map(|s| {
                let psi = assemble_line_phases(&LineControl::from_spins(&s, 3, 3, Levels::Two).unwrap());
                phi.phases().iter().zip(psi.phases()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((best.objective - (9.0 - min_dist / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn perfect_fit_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for levels in [Levels::Two, Levels::Four] {
            let (n_v, n_h) = (4, 5);
            let k = levels.spins_per_variable();
            let line = LineControl::from_spins(&random_spins(k * 9, &mut rng), n_v, n_h, levels).unwrap();
            let phi = assemble_line_phases(&line);
            let fit = two_step_second_problem(&phi, n_v, n_h, levels).unwrap();
            let (got, _) = two_step_second_solve(&fit, &SecondStepSolver::default()).unwrap();
            assert!((fit.value(&got) - 20.0).abs() < 1e-9);
            assert_eq!(assemble_line_phases(&got), phi);
        }
        let ones = PhaseVector::ones(12);
        let fit = two_step_second_problem(&ones, 3, 4, Levels::Two).unwrap();
        let best = exhaustive_search(&fit.bipartite.to_ising().unwrap(), DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert_eq!(best.objective, 12.0);
        assert_eq!(best.spins, vec![1; 7]);
    }

    #[test]
    fn half_steps_never_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Array2::from_shape_fn((6, 7), |_| rng.gen_range(-1.0..1.0));
        let bp = Bipartite::new(w);
        for _ in 0..50 {
            let l = random_spins(6, &mut rng);
            let r = random_spins(7, &mut rng);
            let before = bp.value(&l, &r);
            let r2 = bp.best_right(&l);
            assert!(bp.value(&l, &r2) >= before - 1e-12);
            let l2 = bp.best_left(&r2);
            assert!(bp.value(&l2, &r2) >= bp.value(&l, &r2) - 1e-12);
        }
    }

    #[test]
    fn alternating_is_deterministic_across_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bp = Bipartite::new(Array2::from_shape_fn((10, 10), |_| rng.gen_range(-1.0..1.0)));
        let a = alternating_ascent(&bp, 32, 9);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = pool.install(|| alternating_ascent(&bp, 32, 9));
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_length_mismatch() {
        let phi = PhaseVector::ones(5);
        assert!(matches!(two_step_second_problem(&phi, 2, 3, Levels::Two), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn four_level_weights_have_expected_layout() {
        let phi = PhaseVector::continuous(vec![Complex64::new(0.6, 0.8)]);
        let fit = two_step_second_problem(&phi, 1, 1, Levels::Four).unwrap();
        let w = fit.bipartite.weights();
        assert_eq!(w[[0, 0]], 0.3);
        assert_eq!(w[[1, 1]], -0.3);
        assert_eq!(w[[0, 1]], 0.4);
        assert_eq!(w[[1, 0]], 0.4);
    }
}
