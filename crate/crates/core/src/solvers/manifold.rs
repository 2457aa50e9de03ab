//! Continuous-phase baseline: projected ascent of `φ^H A φ` over the
//! unit-modulus torus.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{Channel, PhaseVector};

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldOptions {
    /// Random starts in addition to the leading-eigenvector start.
    pub starts: usize,
    pub max_iters: usize,
    /// Relative objective change, measured over `window` iterations, below
    /// which a start is considered converged.
    pub tol: f64,
    pub window: usize,
    /// Initial step, relative to the mean magnitude of `Aφ`.
    pub step: f64,
    pub seed: u64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self { starts: 8, max_iters: 10_000, tol: 1e-10, window: 10, step: 1e3, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldResult {
    pub phases: PhaseVector,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every accepted iteration of the winning start.
    pub history: Vec<f64>,
}

/// `A = conj(B) B^T` applied through the N×M cascade `B`.
struct Operator {
    b: Array2<Complex64>,
}

impl Operator {
    /// Returns `(B^T φ, ‖B^T φ‖²)`.
    fn effective(&self, phi: &[Complex64]) -> (Vec<Complex64>, f64) {
        let m = self.b.ncols();
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        for (row, p) in self.b.rows().into_iter().zip(phi) {
            for (acc, b) in e.iter_mut().zip(row.iter()) {
                *acc += b * p;
            }
        }
        let f = e.iter().map(|z| z.norm_sqr()).sum();
        (e, f)
    }

    fn apply_from_effective(&self, e: &[Complex64]) -> Vec<Complex64> {
        self.b
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(e).map(|(b, x)| b.conj() * x).sum())
            .collect()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let (e, _) = self.effective(x);
        self.apply_from_effective(&e)
    }
}

fn project(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) }).collect()
}

fn leading_eigvec(op: &Operator, n: usize) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(1.0, 0.0); n];
    let mut prev = 0.0;
    for _ in 0..500 {
        let y = op.apply(&x);
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        x = y.iter().map(|z| z / norm).collect();
        if (norm - prev).abs() <= 1e-13 * norm {
            break;
        }
        prev = norm;
    }
    x
}

fn ascend(op: &Operator, start: Vec<Complex64>, opts: &ManifoldOptions) -> (Vec<Complex64>, f64, usize, Vec<f64>) {
    let mut phi = project(&start);
    let (mut e, mut f) = op.effective(&phi);
    let mut history = vec![f];
    let mut iters = 0;
    while iters < opts.max_iters {
        iters += 1;
        let grad = op.apply_from_effective(&e);
        let mean = grad.iter().map(|z| z.norm()).sum::<f64>() / grad.len() as f64;
        if mean == 0.0 {
            break;
        }
        let mut eta = opts.step / mean;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<Complex64> = phi.iter().zip(&grad).map(|(p, g)| p + g * eta).collect();
            let cand = project(&cand);
            let (ce, cf) = op.effective(&cand);
            if cf >= f {
                accepted = Some((cand, ce, cf));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, ce, cf)) = accepted else { break };
        phi = cand;
        e = ce;
        f = cf;
        history.push(f);
        let k = history.len();
        if k > opts.window && (f - history[k - 1 - opts.window]) <= opts.tol * f {
            break;
        }
    }
    (phi, f, iters, history)
}

/// Maximizes the received power per watt over continuous unit-modulus
/// phases. Starts from the phase of the leading eigenvector of `A` plus
/// `opts.starts` uniformly random phase vectors; the best start wins, the
/// lowest start index on ties.
pub fn continuous_manifold(channel: &Channel, opts: &ManifoldOptions) -> ManifoldResult {
    let op = Operator { b: channel.cascade() };
    let n = channel.num_elements();
    let mut starts = vec![project(&leading_eigvec(&op, n))];
    for k in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64 + 1);
        starts.push((0..n).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect());
    }
    let runs: Vec<_> = starts.into_par_iter().map(|s| ascend(&op, s, opts)).collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = k;
        }
    }
    let (phi, objective, iterations, history) = runs.into_iter().nth(best).expect("at least one start");
    ManifoldResult { phases: PhaseVector::continuous(phi), objective, iterations, history }
}
