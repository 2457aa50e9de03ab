use std::time::Instant;

use super::{SolveResult, SpinObjective};
use crate::error::{Error, Result};
use crate::higher_order::HigherOrderProblem;
use crate::ising::{IsingProblem, Spin};

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 24;
/// Requests above this size are refused regardless of the configured cap.
pub const HARD_EXHAUSTIVE_CAP: usize = 30;

/// Incremental single-spin-flip evaluator used for Gray-code enumeration.
pub trait GrayWalker {
    fn value(&self) -> f64;
    fn flip(&mut self, i: usize);
}

/// Problems that [`exhaustive_search`] can enumerate.
pub trait Enumerable: SpinObjective {
    type Walker<'a>: GrayWalker
    where
        Self: 'a;

    /// Walker positioned at `spins`.
    fn walker(&self, spins: &[Spin]) -> Self::Walker<'_>;

    /// Objective invariant under negating every spin.
    fn flip_symmetric(&self) -> bool;

    /// Magnitude bound used to size the tie tolerance.
    fn magnitude(&self) -> f64;
}

pub struct IsingWalker<'a> {
    problem: &'a IsingProblem,
    spins: Vec<Spin>,
    fields: Vec<f64>,
    value: f64,
}

impl GrayWalker for IsingWalker<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn flip(&mut self, i: usize) {
        let s = f64::from(self.spins[i]);
        self.value -= 2.0 * s * self.fields[i];
        let row = self.problem.couplings().row(i);
        for (f, &j) in self.fields.iter_mut().zip(row.iter()) {
            *f -= 2.0 * s * j;
        }
        self.spins[i] = -self.spins[i];
    }
}

impl Enumerable for IsingProblem {
    type Walker<'a> = IsingWalker<'a>;

    fn walker(&self, spins: &[Spin]) -> IsingWalker<'_> {
        let fields = (0..self.num_spins()).map(|i| self.local_field(spins, i)).collect();
        IsingWalker { problem: self, spins: spins.to_vec(), fields, value: self.evaluate(spins) }
    }

    fn flip_symmetric(&self) -> bool {
        !self.has_bias()
    }

    fn magnitude(&self) -> f64 {
        self.abs_sum() + self.offset().abs()
    }
}

pub struct TermWalker {
    spin_terms: Vec<Vec<usize>>,
    term_values: Vec<f64>,
    value: f64,
}

impl GrayWalker for TermWalker {
    fn value(&self) -> f64 {
        self.value
    }

    fn flip(&mut self, i: usize) {
        for &t in &self.spin_terms[i] {
            self.value -= 2.0 * self.term_values[t];
            self.term_values[t] = -self.term_values[t];
        }
    }
}

impl Enumerable for HigherOrderProblem {
    type Walker<'a> = TermWalker;

    fn walker(&self, spins: &[Spin]) -> TermWalker {
        let mut spin_terms = vec![Vec::new(); self.num_spins()];
        let mut term_values = Vec::with_capacity(self.terms().len());
        for (t, term) in self.terms().iter().enumerate() {
            for &k in &term.indices {
                spin_terms[k].push(t);
            }
            term_values.push(term.indices.iter().fold(term.coeff, |a, &k| a * f64::from(spins[k])));
        }
        TermWalker { spin_terms, term_values, value: self.evaluate(spins) }
    }

    fn flip_symmetric(&self) -> bool {
        self.is_flip_symmetric()
    }

    fn magnitude(&self) -> f64 {
        self.abs_sum() + self.offset().abs()
    }
}

/// `a` precedes `b` in lexicographic order with `+1` before `-1`.
fn lex_less(a: &[Spin], b: &[Spin]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, _)| *x == 1)
}

/// Global optimum by Gray-code enumeration.
///
/// When the objective is invariant under a global flip, spin 0 is pinned to
/// `+1` and only half the states are visited. Ties (within a relative
/// `1e-10`) go to the lexicographically smallest spin vector, `+1` first.
pub fn exhaustive_search<P: Enumerable>(problem: &P, cap: usize) -> Result<SolveResult> {
    let started = Instant::now();
    let n = problem.num_spins();
    let cap = cap.min(HARD_EXHAUSTIVE_CAP);
    if n > cap {
        return Err(Error::ExhaustiveCap { num_spins: n, cap });
    }
    let sign = problem.sense().sign();
    let pinned = usize::from(problem.flip_symmetric() && n > 0);
    let free = n - pinned;
    let tol = 1e-10 * problem.magnitude();

    let mut current = vec![1 as Spin; n];
    let mut walker = problem.walker(&current);
    let mut best = current.clone();
    let mut best_key = sign * walker.value();

    for k in 1u64..(1u64 << free) {
        let i = pinned + k.trailing_zeros() as usize;
        walker.flip(i);
        current[i] = -current[i];
        let key = sign * walker.value();
        if key > best_key + tol || (key >= best_key - tol && lex_less(&current, &best)) {
            best_key = best_key.max(key);
            best.copy_from_slice(&current);
        }
    }

    let mut result = SolveResult::new(problem, best, 1u64 << free, 0, "exhaustive");
    result.wall_time = started.elapsed().as_secs_f64();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::Sense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent recursive enumeration, evaluating every leaf from scratch.
    fn recursive_best<P: SpinObjective>(p: &P) -> f64 {
        fn go<P: SpinObjective>(p: &P, spins: &mut Vec<Spin>, best: &mut f64) {
            if spins.len() == p.num_spins() {
                let v = p.sense().sign() * p.evaluate(spins);
                if v > *best {
                    *best = v;
                }
                return;
            }
            for s in [1, -1] {
                spins.push(s);
                go(p, spins, best);
                spins.pop();
            }
        }
        let mut best = f64::NEG_INFINITY;
        go(p, &mut Vec::new(), &mut best);
        p.sense().sign() * best
    }

    fn random_problem(n: usize, seed: u64, with_bias: bool) -> IsingProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        let bias = (0..n).map(|_| if with_bias { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        IsingProblem::from_pairs(n, pairs, bias, 0.0, Sense::Max).unwrap()
    }

    #[test]
    fn ferromagnet_prefers_all_up() {
        let p = IsingProblem::from_pairs(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], vec![0.0; 3], 0.0, Sense::Max)
            .unwrap();
        let r = exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert_eq!(r.spins, vec![1, 1, 1]);
        assert_eq!(r.objective, 3.0);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn antiferromagnetic_pair() {
        let p = IsingProblem::from_pairs(2, [(0, 1, -1.0)], vec![0.0; 2], 0.0, Sense::Max).unwrap();
        let r = exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert_eq!(r.spins, vec![1, -1]);
        assert_eq!(r.objective, 1.0);
    }

    #[test]
    fn matches_recursive_oracle() {
        for seed in 0..5 {
            for bias in [false, true] {
                let p = random_problem(12, seed, bias);
                let r = exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
                assert!((r.objective - recursive_best(&p)).abs() < 1e-9);
                let pmin = p.clone().with_sense(Sense::Min);
                let r = exhaustive_search(&pmin, DEFAULT_EXHAUSTIVE_CAP).unwrap();
                assert!((r.objective - recursive_best(&pmin)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn higher_order_matches_recursive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut terms = Vec::new();
        for _ in 0..40 {
            let deg = rng.gen_range(1..=4);
            let idx: Vec<usize> = (0..deg).map(|_| rng.gen_range(0..10)).collect();
            terms.push((idx, rng.gen_range(-1.0..1.0)));
        }
        let p = HigherOrderProblem::from_terms(10, terms, 0.5, Sense::Max).unwrap();
        let r = exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert!((r.objective - recursive_best(&p)).abs() < 1e-9);
    }

    #[test]
    fn z2_halving_agrees_with_full_enumeration() {
        for n in [2, 5, 9, 13, 16] {
            let p = random_problem(n, n as u64, false);
            let halved = exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
            assert_eq!(halved.evaluations, 1 << (n - 1));
            // a vanishing bias disables the shortcut without changing the optimum
            let mut bias = vec![0.0; n];
            bias[0] = 1e-300;
            let full_p = IsingProblem::new(p.couplings().clone(), bias, 0.0, Sense::Max).unwrap();
            let full = exhaustive_search(&full_p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
            assert_eq!(full.evaluations, 1 << n);
            assert!((halved.objective - full.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_coefficients_are_not_ties() {
        let p = random_problem(10, 3, true);
        let tiny = IsingProblem::new(
            p.couplings().mapv(|v| v * 1e-18),
            p.bias().iter().map(|v| v * 1e-18).collect(),
            0.0,
            Sense::Max,
        )
        .unwrap();
        let a = exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        let b = exhaustive_search(&tiny, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        assert_eq!(a.spins, b.spins);
    }

    #[test]
    fn refuses_oversized_problems() {
        let p = random_problem(25, 0, false);
        assert!(matches!(exhaustive_search(&p, DEFAULT_EXHAUSTIVE_CAP), Err(Error::ExhaustiveCap { .. })));
        let p = random_problem(31, 0, false);
        assert!(matches!(exhaustive_search(&p, 64), Err(Error::ExhaustiveCap { cap: 30, .. })));
    }
}
