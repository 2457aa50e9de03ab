//! Reduction of degree-3/4 spin polynomials to quadratic Ising form with
//! auxiliary spins and a penalty weight `α`.
//!
//! Each degree-4 monomial `σ_a σ_b σ_c σ_d` (indices sorted) is split into
//! the products `(a, c)` and `(b, d)`; for a line-control problem, where
//! the sorted tuple is `(v_i, v_k, h_j, h_l)`, these are the element
//! products `v_i h_j` and `v_k h_l`. A degree-3 monomial `σ_a σ_b σ_c`
//! substitutes `(a, b)`. One auxiliary stands for each distinct product.
//!
//! Two consistency gadgets are available:
//!
//! - [`Gadget::Parity`] works directly in the spin domain: the auxiliary
//!   `z` stands for the product `σ_a σ_b` and an ancilla `t` makes the
//!   penalty `(1 - σ_a - σ_b - z + 2t)² / 4` quadratic. It is zero exactly
//!   when `z = σ_a σ_b` (for the best `t`) and at least 1 otherwise. No
//!   quadratic penalty over `(σ_a, σ_b, z)` alone can do this, so each
//!   product costs two spins.
//! - [`Gadget::Rosenberg`] maps spins to Booleans `x = (1 - σ)/2`, expands
//!   the polynomial, and substitutes `y = x_a x_b` enforced by
//!   `x_a x_b - 2x_a y - 2x_b y + 3y`. One spin per product, but the
//!   Boolean expansion inflates coefficients, so a larger `α` is needed.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::higher_order::{HigherOrderProblem, Term};
use crate::ising::{check_spins, IsingProblem, Sense, Spin};
use crate::solvers::{solve_dispatch, SolverSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gadget {
    Parity,
    Rosenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionMethod {
    TwoStep,
    Standard(Gadget),
}

/// Spins handed to the quadratic solver for an `n_v × n_h` line-controlled
/// RIS, counting one auxiliary per element product.
///
/// Two-step solves `N` spins, then `N_v + N_h`, so the larger of the two.
/// The standard reduction needs `N_v + N_h + N` with the Rosenberg gadget
/// and `N_v + N_h + 2N` with the parity gadget; the latter is 11,100 for a
/// 74×74 surface.
pub fn count_variables(method: ReductionMethod, n_v: usize, n_h: usize) -> usize {
    let n = n_v * n_h;
    match method {
        ReductionMethod::TwoStep => n.max(n_v + n_h),
        ReductionMethod::Standard(Gadget::Rosenberg) => n_v + n_h + n,
        ReductionMethod::Standard(Gadget::Parity) => n_v + n_h + 2 * n,
    }
}

/// `[4 - s1 - s2 - z + 2t + s1 s2 + s1 z + s2 z - 2 s1 t - 2 s2 t - 2 z t] / 2`,
/// the expanded form of `(1 - s1 - s2 - z + 2t)² / 4`.
pub fn parity_penalty(s1: Spin, s2: Spin, z: Spin, t: Spin) -> f64 {
    let (s1, s2, z, t) = (f64::from(s1), f64::from(s2), f64::from(z), f64::from(t));
    (4.0 - s1 - s2 - z + 2.0 * t + s1 * s2 + s1 * z + s2 * z - 2.0 * s1 * t - 2.0 * s2 * t - 2.0 * z * t) / 2.0
}

/// Boolean Rosenberg gadget `xy - 2xz - 2yz + 3z`, zero iff `z = x ∧ y`.
pub fn rosenberg_penalty(x: bool, y: bool, z: bool) -> f64 {
    let (x, y, z) = (f64::from(u8::from(x)), f64::from(u8::from(y)), f64::from(u8::from(z)));
    x * y - 2.0 * x * z - 2.0 * y * z + 3.0 * z
}

/// Ancilla value minimizing the parity penalty, `+1` on ties.
fn best_ancilla(s1: Spin, s2: Spin, z: Spin) -> Spin {
    if parity_penalty(s1, s2, z, 1) <= parity_penalty(s1, s2, z, -1) {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxVar {
    /// Original spin indices whose product this auxiliary represents.
    pub pair: (usize, usize),
    pub spin: usize,
    /// Parity gadget only.
    pub ancilla: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratizationResult {
    pub problem: IsingProblem,
    pub aux: Vec<AuxVar>,
    pub alpha: f64,
    pub gadget: Gadget,
    pub num_original: usize,
}

impl QuadratizationResult {
    pub fn originals<'a>(&self, spins: &'a [Spin]) -> &'a [Spin] {
        &spins[..self.num_original]
    }

    /// Overwrites auxiliaries (and ancillas) with the values consistent with
    /// the original spins.
    pub fn repair(&self, spins: &[Spin]) -> Result<Vec<Spin>> {
        check_spins(spins, self.problem.num_spins())?;
        let mut out = spins.to_vec();
        for a in &self.aux {
            let (s1, s2) = (out[a.pair.0], out[a.pair.1]);
            match self.gadget {
                Gadget::Parity => {
                    let z = s1 * s2;
                    out[a.spin] = z;
                    if let Some(t) = a.ancilla {
                        out[t] = best_ancilla(s1, s2, z);
                    }
                }
                Gadget::Rosenberg => {
                    out[a.spin] = if s1 == -1 && s2 == -1 { -1 } else { 1 };
                }
            }
        }
        Ok(out)
    }

    /// Number of auxiliaries whose value disagrees with their pair.
    pub fn violations(&self, spins: &[Spin]) -> usize {
        self.aux
            .iter()
            .filter(|a| {
                let (s1, s2) = (spins[a.pair.0], spins[a.pair.1]);
                match self.gadget {
                    Gadget::Parity => spins[a.spin] != s1 * s2,
                    Gadget::Rosenberg => (spins[a.spin] == -1) != (s1 == -1 && s2 == -1),
                }
            })
            .count()
    }
}

/// Auxiliary pairs substituted in a monomial.
fn term_pairs(t: &Term) -> Vec<(usize, usize)> {
    let ix = &t.indices;
    match ix.len() {
        3 => vec![(ix[0], ix[1])],
        4 => vec![(ix[0], ix[2]), (ix[1], ix[3])],
        _ => Vec::new(),
    }
}

fn assign_aux(problem: &HigherOrderProblem) -> BTreeMap<(usize, usize), usize> {
    let mut order = BTreeMap::new();
    let mut next = 0;
    for t in problem.terms() {
        for p in term_pairs(t) {
            order.entry(p).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
    }
    order
}

/// Spin-domain quadratic accumulator.
struct SpinQuadratic {
    j: Array2<f64>,
    h: Vec<f64>,
    offset: f64,
}

impl SpinQuadratic {
    fn new(n: usize) -> Self {
        Self { j: Array2::zeros((n, n)), h: vec![0.0; n], offset: 0.0 }
    }

    fn add_pair(&mut self, a: usize, b: usize, c: f64) {
        if a == b {
            self.offset += c;
        } else {
            self.j[[a, b]] += c;
            self.j[[b, a]] += c;
        }
    }

    fn finish(self, sense: Sense) -> Result<IsingProblem> {
        IsingProblem::new(self.j, self.h, self.offset, sense)
    }
}

/// Boolean quadratic polynomial over originals then auxiliaries.
#[derive(Default)]
struct BoolQuadratic {
    constant: f64,
    linear: HashMap<usize, f64>,
    quad: HashMap<(usize, usize), f64>,
}

impl BoolQuadratic {
    fn add(&mut self, vars: &[usize], c: f64) {
        match *vars {
            [] => self.constant += c,
            [a] => *self.linear.entry(a).or_insert(0.0) += c,
            [a, b] if a == b => *self.linear.entry(a).or_insert(0.0) += c,
            [a, b] => *self.quad.entry((a.min(b), a.max(b))).or_insert(0.0) += c,
            _ => unreachable!("boolean monomial of degree > 2 after substitution"),
        }
    }
}

/// Boolean expansion of the spin polynomial with pair products replaced by
/// auxiliary variables (indices `n + k`).
fn rosenberg_objective(problem: &HigherOrderProblem, aux: &BTreeMap<(usize, usize), usize>) -> BoolQuadratic {
    let n = problem.num_spins();
    let mut poly = BoolQuadratic { constant: problem.offset(), ..Default::default() };
    for t in problem.terms() {
        let pairs = term_pairs(t);
        let d = t.indices.len();
        // σ = 1 - 2x, so Π σ_k = Σ_{S ⊆ T} (-2)^{|S|} Π_{k∈S} x_k.
        for mask in 0u32..(1 << d) {
            let subset: Vec<usize> = (0..d).filter(|&b| mask >> b & 1 == 1).map(|b| t.indices[b]).collect();
            let c = t.coeff * (-2.0f64).powi(subset.len() as i32);
            let mut rest = subset.clone();
            let mut vars = Vec::with_capacity(2);
            if subset.len() > 2 {
                for p in &pairs {
                    if rest.contains(&p.0) && rest.contains(&p.1) {
                        rest.retain(|&k| k != p.0 && k != p.1);
                        vars.push(n + aux[p]);
                    }
                }
            }
            vars.extend(rest);
            poly.add(&vars, c);
        }
    }
    poly
}

/// Smallest `α` for which the penalty provably dominates the objective, so
/// that at fixed original spins the best auxiliary assignment is the
/// consistent one.
///
/// Parity gadget: flipping one auxiliary changes each monomial it appears
/// in by at most `2|c|` and costs at least `α`, giving `2 Σ|c|` over the
/// degree-3/4 monomials. Rosenberg gadget: the largest total magnitude of
/// Boolean monomials touching any single auxiliary.
pub fn sufficient_alpha(problem: &HigherOrderProblem, gadget: Gadget) -> f64 {
    match gadget {
        Gadget::Parity => 2.0 * problem.terms().iter().filter(|t| t.degree() >= 3).map(|t| t.coeff.abs()).sum::<f64>(),
        Gadget::Rosenberg => {
            let aux = assign_aux(problem);
            let n = problem.num_spins();
            let poly = rosenberg_objective(problem, &aux);
            let mut touch = vec![0.0; aux.len()];
            for (&v, c) in &poly.linear {
                if v >= n {
                    touch[v - n] += c.abs();
                }
            }
            for (&(a, b), c) in &poly.quad {
                for v in [a, b] {
                    if v >= n {
                        touch[v - n] += c.abs();
                    }
                }
            }
            touch.into_iter().fold(0.0, f64::max)
        }
    }
}

/// Quadratic problem `H' - α·Σ penalties` (maximization sense) over the
/// original spins followed by the auxiliary spins (and, for the parity
/// gadget, one ancilla per auxiliary after all auxiliaries).
pub fn standard_quadratize(problem: &HigherOrderProblem, alpha: f64, gadget: Gadget) -> Result<QuadratizationResult> {
    if problem.max_degree() > 4 {
        return Err(Error::DegreeTooHigh(problem.max_degree()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha(alpha));
    }
    // Everything below maximizes; a minimization problem is negated going
    // in and the result flipped back.
    let sign = problem.sense().sign();
    let n = problem.num_spins();
    let pair_index = assign_aux(problem);
    let k = pair_index.len();
    let mut aux: Vec<AuxVar> = vec![AuxVar { pair: (0, 0), spin: 0, ancilla: None }; k];
    for (&pair, &idx) in &pair_index {
        aux[idx] = AuxVar {
            pair,
            spin: n + idx,
            ancilla: (gadget == Gadget::Parity).then_some(n + k + idx),
        };
    }

    let total = match gadget {
        Gadget::Parity => n + 2 * k,
        Gadget::Rosenberg => n + k,
    };
    let mut q = SpinQuadratic::new(total);

    match gadget {
        Gadget::Parity => {
            q.offset += sign * problem.offset();
            for t in problem.terms() {
                let c = sign * t.coeff;
                let ix = &t.indices;
                match ix.len() {
                    1 => q.h[ix[0]] += c,
                    2 => q.add_pair(ix[0], ix[1], c),
                    3 => q.add_pair(n + pair_index[&(ix[0], ix[1])], ix[2], c),
                    4 => q.add_pair(n + pair_index[&(ix[0], ix[2])], n + pair_index[&(ix[1], ix[3])], c),
                    d => return Err(Error::DegreeTooHigh(d)),
                }
            }
            for a in &aux {
                let (s1, s2, z, t) = (a.pair.0, a.pair.1, a.spin, a.ancilla.expect("parity ancilla"));
                // -α/2 · [4 - s1 - s2 - z + 2t + s1s2 + s1z + s2z - 2s1t - 2s2t - 2zt]
                let w = -alpha / 2.0;
                q.offset += 4.0 * w;
                q.h[s1] -= w;
                q.h[s2] -= w;
                q.h[z] -= w;
                q.h[t] += 2.0 * w;
                q.add_pair(s1, s2, w);
                q.add_pair(s1, z, w);
                q.add_pair(s2, z, w);
                q.add_pair(s1, t, -2.0 * w);
                q.add_pair(s2, t, -2.0 * w);
                q.add_pair(z, t, -2.0 * w);
            }
        }
        Gadget::Rosenberg => {
            let mut poly = rosenberg_objective(problem, &pair_index);
            poly.constant *= sign;
            poly.linear.values_mut().for_each(|c| *c *= sign);
            poly.quad.values_mut().for_each(|c| *c *= sign);
            for a in &aux {
                poly.add(&[a.pair.0, a.pair.1], -alpha);
                poly.add(&[a.pair.0, a.spin], 2.0 * alpha);
                poly.add(&[a.pair.1, a.spin], 2.0 * alpha);
                poly.add(&[a.spin], -3.0 * alpha);
            }
            // x = (1 - σ)/2
            q.offset += poly.constant;
            let mut linear: Vec<_> = poly.linear.into_iter().collect();
            linear.sort_by_key(|(v, _)| *v);
            for (v, c) in linear {
                q.offset += c / 2.0;
                q.h[v] -= c / 2.0;
            }
            let mut quad: Vec<_> = poly.quad.into_iter().collect();
            quad.sort_by_key(|(p, _)| *p);
            for ((a, b), c) in quad {
                q.offset += c / 4.0;
                q.h[a] -= c / 4.0;
                q.h[b] -= c / 4.0;
                q.add_pair(a, b, c / 4.0);
            }
        }
    }

    let mut ising = q.finish(Sense::Max)?;
    if problem.sense() == Sense::Min {
        ising = negate(&ising)?;
    }
    Ok(QuadratizationResult { problem: ising, aux, alpha, gadget, num_original: n })
}

fn negate(p: &IsingProblem) -> Result<IsingProblem> {
    IsingProblem::new(
        p.couplings().mapv(|v| -v),
        p.bias().iter().map(|v| -v).collect(),
        -p.offset(),
        Sense::Min,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyTuning {
    pub alpha: f64,
    /// Original objective of the best repaired solution.
    pub objective: f64,
    /// Original spins of that solution.
    pub spins: Vec<Spin>,
    /// `(α, original objective)` for every trial in sampling order.
    pub trials: Vec<(f64, f64)>,
    pub evaluations: u64,
}

/// Random search for `α`, log-uniform over `[10⁻² C, 10² C]` with
/// `C = max |coefficient|`. Each trial quadratizes, solves with `solver`,
/// repairs the auxiliaries and scores the original objective; the first
/// best trial wins. Problems without degree-3/4 terms need no penalty and
/// return `α = C` after a single solve.
pub fn tune_penalty(
    problem: &HigherOrderProblem,
    solver: &SolverSpec,
    budget: usize,
    seed: u64,
    gadget: Gadget,
) -> Result<PenaltyTuning> {
    if budget == 0 {
        return Err(Error::Config("penalty tuning budget must be at least 1".into()));
    }
    let c = problem.terms().iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
    let c = if c > 0.0 { c } else { 1.0 };
    let needs_penalty = problem.max_degree() >= 3;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphas: Vec<f64> = if needs_penalty {
        (0..budget).map(|_| c * 10f64.powf(rng.gen_range(-2.0..=2.0))).collect()
    } else {
        vec![c]
    };

    let sign = problem.sense().sign();
    let mut best: Option<(f64, f64, Vec<Spin>)> = None;
    let mut trials = Vec::with_capacity(alphas.len());
    let mut evaluations = 0;
    for alpha in alphas {
        let q = standard_quadratize(problem, alpha, gadget)?;
        let solved = solve_dispatch(&q.problem, solver)?;
        evaluations += solved.evaluations;
        let repaired = q.repair(&solved.spins)?;
        let originals = q.originals(&repaired).to_vec();
        let value = problem.objective(&originals)?;
        trials.push((alpha, value));
        if best.as_ref().map_or(true, |b| sign * (value - b.1) > 0.0) {
            best = Some((alpha, value, originals));
        }
    }
    let (alpha, objective, spins) = best.expect("at least one trial");
    Ok(PenaltyTuning { alpha, objective, spins, trials, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::SpinObjective;

    fn all_spins(n: usize) -> Vec<Vec<Spin>> {
        (0u64..(1 << n)).map(|bits| (0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect()).collect()
    }

    /// Max over every auxiliary/ancilla assignment at fixed originals.
    fn max_over_aux(q: &QuadratizationResult, originals: &[Spin]) -> f64 {
        let extra = q.problem.num_spins() - q.num_original;
        all_spins(extra)
            .into_iter()
            .map(|tail| {
                let s: Vec<Spin> = originals.iter().copied().chain(tail).collect();
                q.problem.evaluate(&s)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn counts_for_74_by_74() {
        assert_eq!(count_variables(ReductionMethod::TwoStep, 74, 74), 5476);
        assert_eq!(count_variables(ReductionMethod::Standard(Gadget::Parity), 74, 74), 11_100);
        assert_eq!(count_variables(ReductionMethod::Standard(Gadget::Rosenberg), 74, 74), 5624);
        assert_eq!(count_variables(ReductionMethod::TwoStep, 1, 3), 4);
    }

    #[test]
    fn parity_gadget_truth_table() {
        for s1 in [1, -1] {
            for s2 in [1, -1] {
                for z in [1, -1] {
                    let p = [1, -1].map(|t| parity_penalty(s1, s2, z, t));
                    let min = p[0].min(p[1]);
                    assert!(p.iter().all(|&v| v >= 0.0));
                    if z == s1 * s2 {
                        assert_eq!(min, 0.0);
                    } else {
                        assert_eq!(min, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn rosenberg_gadget_truth_table() {
        for x in [false, true] {
            for y in [false, true] {
                for z in [false, true] {
                    let p = rosenberg_penalty(x, y, z);
                    assert!(p >= 0.0);
                    assert_eq!(p == 0.0, z == (x && y));
                }
            }
        }
    }

    #[test]
    fn quadratic_input_needs_no_auxiliaries() {
        let p = HigherOrderProblem::from_terms(3, [(vec![0, 1], 1.0), (vec![2], -0.5)], 0.25, Sense::Max).unwrap();
        for gadget in [Gadget::Parity, Gadget::Rosenberg] {
            let q = standard_quadratize(&p, 1.0, gadget).unwrap();
            assert!(q.aux.is_empty());
            for s in all_spins(3) {
                assert!((q.problem.evaluate(&s) - p.evaluate(&s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_quartic_monomial_is_exact() {
        let p = HigherOrderProblem::from_terms(4, [(vec![0, 1, 2, 3], 1.0)], 0.0, Sense::Max).unwrap();
        for gadget in [Gadget::Parity, Gadget::Rosenberg] {
            let alpha = sufficient_alpha(&p, gadget) * 1.01;
            let q = standard_quadratize(&p, alpha, gadget).unwrap();
            assert_eq!(q.aux.len(), 2);
            for s in all_spins(4) {
                assert!((max_over_aux(&q, &s) - p.evaluate(&s)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn repair_restores_consistency() {
        let p = HigherOrderProblem::from_terms(4, [(vec![0, 1, 2, 3], -1.5), (vec![0, 1, 2], 0.5)], 0.0, Sense::Max)
            .unwrap();
        for gadget in [Gadget::Parity, Gadget::Rosenberg] {
            let q = standard_quadratize(&p, 10.0, gadget).unwrap();
            for s in all_spins(q.problem.num_spins()) {
                let r = q.repair(&s).unwrap();
                assert_eq!(q.violations(&r), 0);
                assert_eq!(q.originals(&r), q.originals(&s));
                assert!((q.problem.evaluate(&r) - p.evaluate(q.originals(&r))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn minimization_is_supported() {
        let p = HigherOrderProblem::from_terms(4, [(vec![0, 1, 2, 3], 2.0), (vec![1, 2], -1.0)], 0.0, Sense::Min)
            .unwrap();
        let q = standard_quadratize(&p, sufficient_alpha(&p, Gadget::Parity), Gadget::Parity).unwrap();
        assert_eq!(q.problem.sense(), Sense::Min);
        for s in all_spins(4) {
            let extra = q.problem.num_spins() - 4;
            let min = all_spins(extra)
                .into_iter()
                .map(|t| q.problem.evaluate(&s.iter().copied().chain(t).collect::<Vec<_>>()))
                .fold(f64::INFINITY, f64::min);
            assert!((min - p.evaluate(&s)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        let p = HigherOrderProblem::from_terms(4, [(vec![0, 1, 2, 3], 1.0)], 0.0, Sense::Max).unwrap();
        assert!(matches!(standard_quadratize(&p, 0.0, Gadget::Parity), Err(Error::InvalidAlpha(_))));
        assert!(matches!(standard_quadratize(&p, -1.0, Gadget::Rosenberg), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn tuner_conventions() {
        let quad = HigherOrderProblem::from_terms(3, [(vec![0, 1], -3.0), (vec![2], 0.5)], 0.0, Sense::Max).unwrap();
        let t = tune_penalty(&quad, &SolverSpec::exhaustive(), 10, 0, Gadget::Parity).unwrap();
        assert_eq!(t.alpha, 3.0);
        assert_eq!(t.trials.len(), 1);

        let p = HigherOrderProblem::from_terms(4, [(vec![0, 1, 2, 3], 1.0)], 0.0, Sense::Max).unwrap();
        let t = tune_penalty(&p, &SolverSpec::exhaustive(), 1, 42, Gadget::Parity).unwrap();
        assert_eq!(t.trials.len(), 1);
        assert_eq!(t.alpha, t.trials[0].0);
        assert!(t.alpha >= 0.01 && t.alpha <= 100.0);
    }

    #[test]
    fn tuner_finds_consistent_optimum() {
        let p = HigherOrderProblem::from_terms(4, [(vec![0, 1, 2, 3], 1.0)], 0.0, Sense::Max).unwrap();
        let t = tune_penalty(&p, &SolverSpec::exhaustive(), 50, 7, Gadget::Parity).unwrap();
        assert_eq!(t.objective, 1.0);
        assert_eq!(p.evaluate(&t.spins), 1.0);
        let again = tune_penalty(&p, &SolverSpec::exhaustive(), 50, 7, Gadget::Parity).unwrap();
        assert_eq!(again, t);
    }
}
