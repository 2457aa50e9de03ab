//! Sparse spin polynomials of degree up to four, and the row/column
//! ("line") control parameterization of the RIS phases.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{PhaseLevel, PhaseVector};
use crate::ising::{check_spins, IsingProblem, Levels, Sense, Spin};

pub const MAX_DEGREE: usize = 4;

/// One monomial `coeff · Π σ_k` with strictly increasing indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub indices: Vec<usize>,
    pub coeff: f64,
}

impl Term {
    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    fn value(&self, spins: &[Spin]) -> f64 {
        self.indices.iter().fold(self.coeff, |acc, &k| acc * f64::from(spins[k]))
    }
}

/// Sum of spin monomials plus a constant.
#[derive(Clone, Debug, PartialEq)]
pub struct HigherOrderProblem {
    num_spins: usize,
    terms: Vec<Term>,
    offset: f64,
    sense: Sense,
}

/// Reduces a spin multiset using `σ² = 1`: indices appearing an even number
/// of times drop out.
fn reduce_multiset(mut indices: Vec<usize>) -> Vec<usize> {
    indices.sort_unstable();
    let mut out: Vec<usize> = Vec::with_capacity(indices.len());
    for k in indices {
        if out.last() == Some(&k) {
            out.pop();
        } else {
            out.push(k);
        }
    }
    out
}

impl HigherOrderProblem {
    /// Builds a problem from arbitrary index multisets. Repeated indices are
    /// reduced, equal tuples merged, and degree-0 terms folded into the
    /// offset.
    pub fn from_terms(
        num_spins: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, f64)>,
        offset: f64,
        sense: Sense,
    ) -> Result<Self> {
        let mut acc = TermAccumulator::new(num_spins);
        acc.offset = offset;
        for (indices, coeff) in terms {
            acc.add(indices, coeff)?;
        }
        Ok(acc.finish(sense))
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// True when every monomial has even degree, so negating all spins
    /// leaves the objective unchanged.
    pub fn is_flip_symmetric(&self) -> bool {
        self.terms.iter().all(|t| t.degree() % 2 == 0)
    }

    pub fn energy_unchecked(&self, spins: &[Spin]) -> f64 {
        self.terms.iter().map(|t| t.value(spins)).sum()
    }

    pub fn objective(&self, spins: &[Spin]) -> Result<f64> {
        Ok(higher_order_energy(self, spins)? + self.offset)
    }

    pub fn abs_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }
}

pub(crate) struct TermAccumulator {
    num_spins: usize,
    map: BTreeMap<Vec<usize>, f64>,
    pub(crate) offset: f64,
}

impl TermAccumulator {
    pub(crate) fn new(num_spins: usize) -> Self {
        Self { num_spins, map: BTreeMap::new(), offset: 0.0 }
    }

    pub(crate) fn add(&mut self, indices: Vec<usize>, coeff: f64) -> Result<()> {
        if let Some(&index) = indices.iter().find(|&&k| k >= self.num_spins) {
            return Err(Error::IndexOutOfRange { index, num_spins: self.num_spins });
        }
        let reduced = reduce_multiset(indices);
        if reduced.len() > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(reduced.len()));
        }
        if reduced.is_empty() {
            self.offset += coeff;
        } else {
            *self.map.entry(reduced).or_insert(0.0) += coeff;
        }
        Ok(())
    }

    pub(crate) fn finish(self, sense: Sense) -> HigherOrderProblem {
        let terms = self
            .map
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(indices, coeff)| Term { indices, coeff })
            .collect();
        HigherOrderProblem { num_spins: self.num_spins, terms, offset: self.offset, sense }
    }
}

/// `Σ_terms coeff · Π σ`, excluding the offset.
pub fn higher_order_energy(problem: &HigherOrderProblem, spins: &[Spin]) -> Result<f64> {
    check_spins(spins, problem.num_spins)?;
    Ok(problem.energy_unchecked(spins))
}

/// Rewrites a two-level full-element problem over `N_v + N_h` line spins
/// (rows first, then columns) using `φ_{i·N_h+j} = v_i h_j`.
///
/// Couplings between elements sharing a row or column collapse to degree 2;
/// all others become degree-4 monomials `v_i v_k h_j h_l`.
pub fn line_fourth_order(full: &IsingProblem, n_v: usize, n_h: usize) -> Result<HigherOrderProblem> {
    let n = full.num_spins();
    if n_v * n_h != n {
        return Err(Error::DimensionMismatch { expected: n, got: n_v * n_h });
    }
    let mut acc = TermAccumulator::new(n_v + n_h);
    acc.offset = full.offset();
    let j = full.couplings();
    for a in 0..n {
        let (ia, ja) = (a / n_h, a % n_h);
        let b_a = full.bias()[a];
        if b_a != 0.0 {
            acc.add(vec![ia, n_v + ja], b_a)?;
        }
        for b in (a + 1)..n {
            let c = j[[a, b]];
            if c == 0.0 {
                continue;
            }
            let (ib, jb) = (b / n_h, b % n_h);
            acc.add(vec![ia, ib, n_v + ja, n_v + jb], c)?;
        }
    }
    Ok(acc.finish(full.sense()))
}

/// Row and column spins of a line-controlled RIS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineControl {
    Binary { v: Vec<Spin>, h: Vec<Spin> },
    Quad { v_re: Vec<Spin>, v_im: Vec<Spin>, h_re: Vec<Spin>, h_im: Vec<Spin> },
}

impl LineControl {
    /// Splits a flat spin vector laid out as `[v, h]` (two levels) or
    /// `[v_re, v_im, h_re, h_im]` (four levels).
    pub fn from_spins(spins: &[Spin], n_v: usize, n_h: usize, levels: Levels) -> Result<Self> {
        let k = levels.spins_per_variable();
        check_spins(spins, k * (n_v + n_h))?;
        Ok(match levels {
            Levels::Two => LineControl::Binary { v: spins[..n_v].to_vec(), h: spins[n_v..].to_vec() },
            Levels::Four => LineControl::Quad {
                v_re: spins[..n_v].to_vec(),
                v_im: spins[n_v..2 * n_v].to_vec(),
                h_re: spins[2 * n_v..2 * n_v + n_h].to_vec(),
                h_im: spins[2 * n_v + n_h..].to_vec(),
            },
        })
    }

    pub fn to_spins(&self) -> Vec<Spin> {
        match self {
            LineControl::Binary { v, h } => [v.as_slice(), h.as_slice()].concat(),
            LineControl::Quad { v_re, v_im, h_re, h_im } => {
                [v_re.as_slice(), v_im.as_slice(), h_re.as_slice(), h_im.as_slice()].concat()
            }
        }
    }

    pub fn n_v(&self) -> usize {
        match self {
            LineControl::Binary { v, .. } => v.len(),
            LineControl::Quad { v_re, .. } => v_re.len(),
        }
    }

    pub fn n_h(&self) -> usize {
        match self {
            LineControl::Binary { h, .. } => h.len(),
            LineControl::Quad { h_re, .. } => h_re.len(),
        }
    }

    pub fn levels(&self) -> Levels {
        match self {
            LineControl::Binary { .. } => Levels::Two,
            LineControl::Quad { .. } => Levels::Four,
        }
    }

    pub fn negated(&self) -> Self {
        let neg = |s: &[Spin]| s.iter().map(|x| -x).collect::<Vec<_>>();
        match self {
            LineControl::Binary { v, h } => LineControl::Binary { v: neg(v), h: neg(h) },
            LineControl::Quad { v_re, v_im, h_re, h_im } => LineControl::Quad {
                v_re: neg(v_re),
                v_im: neg(v_im),
                h_re: neg(h_re),
                h_im: neg(h_im),
            },
        }
    }

    /// Complex row and column phase factors.
    pub fn line_phases(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        match self {
            LineControl::Binary { v, h } => {
                let c = |s: &Spin| Complex64::new(f64::from(*s), 0.0);
                (v.iter().map(c).collect(), h.iter().map(c).collect())
            }
            LineControl::Quad { v_re, v_im, h_re, h_im } => {
                let c = |(re, im): (&Spin, &Spin)| {
                    Complex64::new(f64::from(*re) * FRAC_1_SQRT_2, f64::from(*im) * FRAC_1_SQRT_2)
                };
                (v_re.iter().zip(v_im).map(c).collect(), h_re.iter().zip(h_im).map(c).collect())
            }
        }
    }
}

/// Element phases `φ_{i·N_h+j} = φ^v_i · φ^h_j`. Four-level line control
/// yields phases in `{1, j, -1, -j}`.
pub fn assemble_line_phases(line: &LineControl) -> PhaseVector {
    let (pv, ph) = line.line_phases();
    let mut phases = Vec::with_capacity(pv.len() * ph.len());
    for a in &pv {
        for b in &ph {
            phases.push(a * b);
        }
    }
    let level = match line {
        LineControl::Binary { .. } => PhaseLevel::Binary,
        LineControl::Quad { .. } => {
            // Snap rounding noise so the entries are exactly on the axes.
            for z in phases.iter_mut() {
                *z = Complex64::new(z.re.round(), z.im.round());
            }
            PhaseLevel::QuadAxis
        }
    };
    PhaseVector::from_parts_unchecked(phases, level)
}
