//! Quadratic spin problems: construction from a channel, evaluation,
//! phase mapping, 8-bit coupling quantization and a plain-text exchange
//! format for external solvers.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Channel, PhaseLevel, PhaseVector};

/// An Ising spin, always `-1` or `+1`.
pub type Spin = i8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    /// `+1` for maximization, `-1` for minimization; multiplying an
    /// objective by this turns every problem into a maximization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Max => "max",
            Sense::Min => "min",
        })
    }
}

impl FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Sense::Max),
            "min" => Ok(Sense::Min),
            other => Err(Error::Parse { line: 0, reason: format!("unknown sense `{other}`") }),
        }
    }
}

/// Number of discrete phase levels per element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Levels {
    Two,
    Four,
}

impl Levels {
    pub fn count(self) -> usize {
        match self {
            Levels::Two => 2,
            Levels::Four => 4,
        }
    }

    /// Spins needed per phase variable.
    pub fn spins_per_variable(self) -> usize {
        match self {
            Levels::Two => 1,
            Levels::Four => 2,
        }
    }
}

pub(crate) fn check_spins(spins: &[Spin], expected: usize) -> Result<()> {
    if spins.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: spins.len() });
    }
    if let Some((index, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
        return Err(Error::InvalidSpin { index, value });
    }
    Ok(())
}

/// `Σ_i h_i σ_i + Σ_{i<j} J_ij σ_i σ_j` plus a recorded constant.
///
/// `J` is stored symmetric with a zero diagonal, and each pair is counted
/// once. `offset` carries constants dropped during construction (diagonal
/// terms, collapsed monomials) so that [`IsingProblem::objective`]
/// reproduces the source objective exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem {
    couplings: Array2<f64>,
    bias: Vec<f64>,
    offset: f64,
    sense: Sense,
}

impl IsingProblem {
    pub fn new(couplings: Array2<f64>, bias: Vec<f64>, offset: f64, sense: Sense) -> Result<Self> {
        let n = couplings.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if couplings.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: couplings.ncols() });
        }
        if bias.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: bias.len() });
        }
        for i in 0..n {
            if couplings[[i, i]] != 0.0 {
                return Err(Error::Config(format!("coupling diagonal entry {i} is nonzero")));
            }
            for j in (i + 1)..n {
                let a = couplings[[i, j]];
                if a != couplings[[j, i]] {
                    return Err(Error::Config(format!("couplings not symmetric at ({i}, {j})")));
                }
                if !a.is_finite() {
                    return Err(Error::Config(format!("non-finite coupling at ({i}, {j})")));
                }
            }
        }
        if bias.iter().any(|b| !b.is_finite()) || !offset.is_finite() {
            return Err(Error::Config("non-finite bias or offset".into()));
        }
        Ok(Self { couplings, bias, offset, sense })
    }

    /// Builds a problem from `(i, j, value)` pair couplings; repeated pairs
    /// accumulate and `i == j` entries fold into the offset.
    pub fn from_pairs(
        num_spins: usize,
        pairs: impl IntoIterator<Item = (usize, usize, f64)>,
        bias: Vec<f64>,
        offset: f64,
        sense: Sense,
    ) -> Result<Self> {
        let mut j = Array2::zeros((num_spins, num_spins));
        let mut offset = offset;
        for (a, b, v) in pairs {
            for idx in [a, b] {
                if idx >= num_spins {
                    return Err(Error::IndexOutOfRange { index: idx, num_spins });
                }
            }
            if a == b {
                offset += v;
            } else {
                j[[a, b]] += v;
                j[[b, a]] += v;
            }
        }
        Self::new(j, bias, offset, sense)
    }

    pub fn num_spins(&self) -> usize {
        self.bias.len()
    }

    pub fn couplings(&self) -> &Array2<f64> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[[i, j]]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn has_bias(&self) -> bool {
        self.bias.iter().any(|&b| b != 0.0)
    }

    /// Energy without the offset; spins are not validated.
    pub fn energy_unchecked(&self, spins: &[Spin]) -> f64 {
        let n = self.num_spins();
        let mut e = 0.0;
        for i in 0..n {
            let si = f64::from(spins[i]);
            e += self.bias[i] * si;
            let row = self.couplings.row(i);
            let mut acc = 0.0;
            for j in (i + 1)..n {
                acc += row[j] * f64::from(spins[j]);
            }
            e += si * acc;
        }
        e
    }

    /// Energy plus the recorded offset.
    pub fn objective(&self, spins: &[Spin]) -> Result<f64> {
        Ok(ising_energy(self, spins)? + self.offset)
    }

    /// `h_i + Σ_{j≠i} J_ij σ_j`.
    pub fn local_field(&self, spins: &[Spin], i: usize) -> f64 {
        let row = self.couplings.row(i);
        let mut f = self.bias[i];
        for (j, &s) in spins.iter().enumerate() {
            f += row[j] * f64::from(s);
        }
        f
    }

    /// Mean magnitude of the nonzero couplings and biases, 1.0 if none.
    pub fn mean_abs_coefficient(&self) -> f64 {
        let n = self.num_spins();
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            if self.bias[i] != 0.0 {
                sum += self.bias[i].abs();
                count += 1;
            }
            for j in (i + 1)..n {
                let v = self.couplings[[i, j]];
                if v != 0.0 {
                    sum += v.abs();
                    count += 1;
                }
            }
        }
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }

    /// `Σ|h_i| + Σ_{i<j}|J_ij|`, an upper bound on `|energy|`.
    pub fn abs_sum(&self) -> f64 {
        let n = self.num_spins();
        let mut s: f64 = self.bias.iter().map(|b| b.abs()).sum();
        for i in 0..n {
            for j in (i + 1)..n {
                s += self.couplings[[i, j]].abs();
            }
        }
        s
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }
}

/// `Σ_i h_i σ_i + Σ_{i<j} J_ij σ_i σ_j`, excluding the offset.
pub fn ising_energy(problem: &IsingProblem, spins: &[Spin]) -> Result<f64> {
    check_spins(spins, problem.num_spins())?;
    Ok(problem.energy_unchecked(spins))
}

/// Quadratic spin problem whose objective equals the received power per watt
/// `(h_r Φ G)(h_r Φ G)^H` for every discrete phase assignment.
///
/// With `A` from [`Channel::gram`]:
/// - two levels: `N` spins, `J_ij = 2 Re A_ij`, offset `Σ_i Re A_ii`;
/// - four levels: `2N` spins ordered `(σ_Re, σ_Im)`, couplings from
///   `[[Re A, -Im A], [Im A, Re A]]`, offset `Σ_i Re A_ii`.
pub fn coupling_from_channel(channel: &Channel, levels: Levels) -> Result<IsingProblem> {
    let a = channel.gram();
    let n = a.nrows();
    let trace: f64 = (0..n).map(|i| a[[i, i]].re).sum();
    match levels {
        Levels::Two => {
            let mut j = Array2::zeros((n, n));
            for r in 0..n {
                for c in 0..n {
                    if r != c {
                        j[[r, c]] = 2.0 * a[[r, c]].re;
                    }
                }
            }
            IsingProblem::new(j, vec![0.0; n], trace, Sense::Max)
        }
        Levels::Four => {
            let mut j = Array2::zeros((2 * n, 2 * n));
            for r in 0..n {
                for c in 0..n {
                    let z = a[[r, c]];
                    if r != c {
                        j[[r, c]] = z.re;
                        j[[n + r, n + c]] = z.re;
                    }
                    j[[r, n + c]] = -z.im;
                    j[[n + r, c]] = z.im;
                }
            }
            // Im A_ii is exactly zero for a Hermitian gram matrix, so the
            // cross-block diagonal is already clear.
            for i in 0..2 * n {
                j[[i, i]] = 0.0;
            }
            IsingProblem::new(j, vec![0.0; 2 * n], trace, Sense::Max)
        }
    }
}

/// Maps spins to unit-modulus phases: identity for two levels,
/// `(σ_Re + jσ_Im)/√2` for four levels with input ordered `(σ_Re ‖ σ_Im)`.
pub fn spins_to_phases(spins: &[Spin], levels: Levels) -> Result<PhaseVector> {
    match levels {
        Levels::Two => {
            check_spins(spins, spins.len())?;
            let phases = spins.iter().map(|&s| Complex64::new(f64::from(s), 0.0)).collect();
            Ok(PhaseVector::from_parts_unchecked(phases, PhaseLevel::Binary))
        }
        Levels::Four => {
            if spins.len() % 2 != 0 {
                return Err(Error::DimensionMismatch { expected: spins.len() + 1, got: spins.len() });
            }
            check_spins(spins, spins.len())?;
            let n = spins.len() / 2;
            let phases = (0..n)
                .map(|i| {
                    Complex64::new(
                        f64::from(spins[i]) * FRAC_1_SQRT_2,
                        f64::from(spins[n + i]) * FRAC_1_SQRT_2,
                    )
                })
                .collect();
            Ok(PhaseVector::from_parts_unchecked(phases, PhaseLevel::Quad))
        }
    }
}

/// Result of [`quantize_couplings`]: integer-valued problem plus the scale
/// that was applied (`quantized ≈ scale · original`).
#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    pub problem: IsingProblem,
    pub scale: f64,
}

/// Uniformly scales couplings and biases so the largest magnitude maps to
/// `2^(bits-1) - 1`, rounds, and clips to the signed range.
pub fn quantize_couplings(problem: &IsingProblem, bits: u32) -> Result<Quantized> {
    if !(2..=31).contains(&bits) {
        return Err(Error::Config(format!("quantization bits must be in 2..=31, got {bits}")));
    }
    let limit = f64::from((1u32 << (bits - 1)) - 1);
    let max_abs = problem
        .couplings
        .iter()
        .chain(problem.bias.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::AllZeroProblem);
    }
    let scale = limit / max_abs;
    let q = |v: f64| (scale * v).round().clamp(-limit, limit);
    let couplings = problem.couplings.mapv(q);
    let bias = problem.bias.iter().map(|&b| q(b)).collect();
    let problem = IsingProblem::new(couplings, bias, problem.offset * scale, problem.sense)?;
    Ok(Quantized { problem, scale })
}

/// Writes the sparse text form:
///
/// ```text
/// ising <num_spins> <max|min> <offset>
/// <i> <j> <J_ij>      one line per nonzero pair, i < j
/// <i> <h_i>           one line per nonzero bias
/// ```
pub fn write_problem<W: Write>(problem: &IsingProblem, mut out: W) -> Result<()> {
    let n = problem.num_spins();
    writeln!(out, "ising {} {} {}", n, problem.sense, problem.offset)?;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = problem.couplings[[i, j]];
            if v != 0.0 {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
    }
    for (i, &b) in problem.bias.iter().enumerate() {
        if b != 0.0 {
            writeln!(out, "{i} {b}")?;
        }
    }
    Ok(())
}

/// Parses the format produced by [`write_problem`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn read_problem<R: BufRead>(input: R) -> Result<IsingProblem> {
    let mut header: Option<(usize, Sense, f64)> = None;
    let mut pairs = Vec::new();
    let mut bias_entries = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = lineno + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse { line: line_no, reason };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if header.is_none() {
            if fields.len() != 4 || fields[0] != "ising" {
                return Err(parse_err("expected `ising <n> <sense> <offset>` header".into()));
            }
            let n = fields[1].parse().map_err(|e| parse_err(format!("{e}")))?;
            let sense = fields[2].parse().map_err(|_| parse_err(format!("bad sense `{}`", fields[2])))?;
            let offset = fields[3].parse().map_err(|e| parse_err(format!("{e}")))?;
            header = Some((n, sense, offset));
            continue;
        }
        match fields.as_slice() {
            [i, j, v] => {
                let i: usize = i.parse().map_err(|e| parse_err(format!("{e}")))?;
                let j: usize = j.parse().map_err(|e| parse_err(format!("{e}")))?;
                let v: f64 = v.parse().map_err(|e| parse_err(format!("{e}")))?;
                if i == j {
                    return Err(parse_err("diagonal coupling".into()));
                }
                pairs.push((i, j, v));
            }
            [i, v] => {
                let i: usize = i.parse().map_err(|e| parse_err(format!("{e}")))?;
                let v: f64 = v.parse().map_err(|e| parse_err(format!("{e}")))?;
                bias_entries.push((i, v));
            }
            _ => return Err(parse_err(format!("expected 2 or 3 fields, got {}", fields.len()))),
        }
    }
    let (n, sense, offset) = header.ok_or(Error::Parse { line: 0, reason: "missing header".into() })?;
    let mut bias = vec![0.0; n];
    for (i, v) in bias_entries {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, num_spins: n });
        }
        bias[i] += v;
    }
    IsingProblem::from_pairs(n, pairs, bias, offset, sense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::effective_objective;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(n: usize, m: usize, seed: u64) -> Channel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let g = Array2::from_shape_fn((n, m), |_| c());
        let h = Array1::from_shape_fn(n, |_| c());
        Channel::new(g, h).unwrap()
    }

    fn all_spins(n: usize) -> impl Iterator<Item = Vec<Spin>> {
        (0u64..(1 << n)).map(move |bits| (0..n).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect())
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn single_element_coupling_is_zero_with_constant() {
        let ch = random_channel(1, 3, 1);
        let p = coupling_from_channel(&ch, Levels::Two).unwrap();
        assert_eq!(p.num_spins(), 1);
        assert_eq!(p.coupling(0, 0), 0.0);
        assert!(rel_close(p.offset(), ch.gram()[[0, 0]].re, 1e-15));
    }

    #[test]
    fn two_level_energy_matches_power_exhaustively() {
        let ch = random_channel(4, 3, 7);
        let p = coupling_from_channel(&ch, Levels::Two).unwrap();
        for s in all_spins(4) {
            let phi = spins_to_phases(&s, Levels::Two).unwrap();
            let want = effective_objective(&ch, &phi).unwrap();
            assert!(rel_close(p.objective(&s).unwrap(), want, 1e-12));
        }
    }

    #[test]
    fn four_level_energy_matches_power_exhaustively() {
        let ch = random_channel(3, 2, 11);
        let p = coupling_from_channel(&ch, Levels::Four).unwrap();
        assert_eq!(p.num_spins(), 6);
        for s in all_spins(6) {
            let phi = spins_to_phases(&s, Levels::Four).unwrap();
            let want = effective_objective(&ch, &phi).unwrap();
            assert!(rel_close(p.objective(&s).unwrap(), want, 1e-12));
        }
    }

    #[test]
    fn energy_checks_and_symmetry() {
        let p = IsingProblem::from_pairs(3, [(0, 1, 1.5), (1, 2, -2.0)], vec![0.5, 0.0, -1.0], 0.0, Sense::Max)
            .unwrap();
        assert!(matches!(ising_energy(&p, &[1, 1]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(ising_energy(&p, &[1, 0, 1]), Err(Error::InvalidSpin { index: 1, .. })));
        let zero = IsingProblem::from_pairs(3, [], vec![0.5, 2.0, -1.0], 0.0, Sense::Max).unwrap();
        assert_eq!(ising_energy(&zero, &[1, -1, -1]).unwrap(), 0.5 - 2.0 + 1.0);

        let nb = IsingProblem::from_pairs(3, [(0, 1, 1.5), (0, 2, 0.25)], vec![0.0; 3], 0.0, Sense::Max).unwrap();
        let s = [1, -1, 1];
        let f: Vec<Spin> = s.iter().map(|x| -x).collect();
        assert_eq!(ising_energy(&nb, &s).unwrap(), ising_energy(&nb, &f).unwrap());
    }

    #[test]
    fn rejects_asymmetric_or_diagonal() {
        let mut j = Array2::zeros((2, 2));
        j[[0, 1]] = 1.0;
        assert!(IsingProblem::new(j.clone(), vec![0.0; 2], 0.0, Sense::Max).is_err());
        j[[1, 0]] = 1.0;
        j[[0, 0]] = 1.0;
        assert!(IsingProblem::new(j, vec![0.0; 2], 0.0, Sense::Max).is_err());
    }

    #[test]
    fn spins_to_phases_constellation() {
        let s = FRAC_1_SQRT_2;
        let p = spins_to_phases(&[1, -1], Levels::Two).unwrap();
        assert_eq!(p.phases(), &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let p = spins_to_phases(&[1, 1], Levels::Four).unwrap();
        assert!((p.phases()[0] - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        let p = spins_to_phases(&[-1, -1], Levels::Four).unwrap();
        assert!((p.phases()[0] - Complex64::from_polar(1.0, 5.0 * std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        assert_eq!(p.phases()[0], Complex64::new(-s, -s));
        assert!(spins_to_phases(&[1, 1, 1], Levels::Four).is_err());
    }

    #[test]
    fn quantization_scale_and_idempotence() {
        let p = IsingProblem::from_pairs(3, [(0, 1, 0.5), (1, 2, -0.25)], vec![0.0, 0.1, 0.0], 0.0, Sense::Max)
            .unwrap();
        let q = quantize_couplings(&p, 8).unwrap();
        assert_eq!(q.problem.coupling(0, 1), 127.0);
        assert_eq!(q.problem.coupling(1, 0), 127.0);
        assert_eq!(q.problem.coupling(1, 2), -64.0);
        assert_eq!(q.problem.bias()[1], 25.0);

        let ints = IsingProblem::from_pairs(3, [(0, 1, 127.0), (0, 2, -3.0)], vec![0.0, 5.0, 0.0], 0.0, Sense::Max)
            .unwrap();
        let q = quantize_couplings(&ints, 8).unwrap();
        assert_eq!(q.scale, 1.0);
        assert_eq!(q.problem, ints);

        let zero = IsingProblem::from_pairs(2, [], vec![0.0; 2], 0.0, Sense::Max).unwrap();
        assert!(matches!(quantize_couplings(&zero, 8), Err(Error::AllZeroProblem)));
    }

    #[test]
    fn text_format_round_trip() {
        let p = IsingProblem::from_pairs(4, [(0, 3, 2.5), (1, 2, -1.0)], vec![0.0, 0.0, 3.0, 0.0], 1.25, Sense::Min)
            .unwrap();
        let mut buf = Vec::new();
        write_problem(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "ising 4 min 1.25\n0 3 2.5\n1 2 -1\n2 3\n");
        let back = read_problem(&buf[..]).unwrap();
        assert_eq!(back, p);
        assert!(read_problem(&b"ising 2 max 0\n0 0 1\n"[..]).is_err());
        assert!(read_problem(&b"0 1 1\n"[..]).is_err());
    }
}
