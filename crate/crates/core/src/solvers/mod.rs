//! Optimization engines for spin problems and the `engine[:key=value,...]`
//! spec grammar used to select them.

mod anneal;
mod exhaustive;
mod greedy;
mod manifold;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use anneal::{anneal_replica, simulated_annealing, AnnealSchedule, ReplicaOutcome};
pub use exhaustive::{exhaustive_search, Enumerable, DEFAULT_EXHAUSTIVE_CAP, HARD_EXHAUSTIVE_CAP};
pub use greedy::greedy_flip;
pub use manifold::{continuous_manifold, ManifoldOptions, ManifoldResult};

use crate::error::{Error, Result};
use crate::higher_order::HigherOrderProblem;
use crate::ising::{quantize_couplings, IsingProblem, Sense, Spin};

/// Anything with a spin-vector objective.
pub trait SpinObjective: Sync {
    fn num_spins(&self) -> usize;
    fn sense(&self) -> Sense;
    /// Objective value including any recorded constant. Spins are assumed
    /// valid.
    fn evaluate(&self, spins: &[Spin]) -> f64;
}

impl SpinObjective for IsingProblem {
    fn num_spins(&self) -> usize {
        IsingProblem::num_spins(self)
    }

    fn sense(&self) -> Sense {
        IsingProblem::sense(self)
    }

    fn evaluate(&self, spins: &[Spin]) -> f64 {
        self.energy_unchecked(spins) + self.offset()
    }
}

impl SpinObjective for HigherOrderProblem {
    fn num_spins(&self) -> usize {
        HigherOrderProblem::num_spins(self)
    }

    fn sense(&self) -> Sense {
        HigherOrderProblem::sense(self)
    }

    fn evaluate(&self, spins: &[Spin]) -> f64 {
        self.energy_unchecked(spins) + self.offset()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub spins: Vec<Spin>,
    /// In the problem's sense, constant included.
    pub objective: f64,
    pub evaluations: u64,
    pub seed: u64,
    pub wall_time: f64,
    /// `(step, best objective so far)` samples, when the engine records them.
    pub trace: Option<Vec<(u64, f64)>>,
    pub engine: String,
    pub params: String,
}

impl SolveResult {
    /// Recomputes the objective from `spins` rather than trusting the
    /// engine's running value.
    pub fn new<P: SpinObjective + ?Sized>(
        problem: &P,
        spins: Vec<Spin>,
        evaluations: u64,
        seed: u64,
        engine: &str,
    ) -> Self {
        let objective = problem.evaluate(&spins);
        Self {
            spins,
            objective,
            evaluations,
            seed,
            wall_time: 0.0,
            trace: None,
            engine: engine.to_string(),
            params: String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Exhaustive,
    Sa,
    Greedy,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exhaustive => "exhaustive",
            Engine::Sa => "sa",
            Engine::Greedy => "greedy",
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exhaustive" => Ok(Engine::Exhaustive),
            "sa" => Ok(Engine::Sa),
            "greedy" => Ok(Engine::Greedy),
            other => Err(Error::UnknownEngine(other.to_string())),
        }
    }
}

const KNOWN_KEYS: &[&str] = &["sweeps", "replicas", "seed", "beta_start", "beta_end", "quantize", "cap"];

/// Parsed `engine[+engine...][:key=value,...]`, e.g.
/// `sa+greedy:sweeps=100000,replicas=8,seed=7`.
///
/// Recognized keys: `sweeps`, `replicas`, `seed`, `beta_start`, `beta_end`
/// (multiples of `1/⟨|J|⟩`), `quantize` (bits, applied before annealing),
/// `cap` (exhaustive size limit).
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub engines: Vec<Engine>,
    params: BTreeMap<String, String>,
}

impl SolverSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |reason: &str| Error::BadSolverSpec { spec: spec.to_string(), reason: reason.to_string() };
        let (head, tail) = match spec.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (spec, None),
        };
        let engines = head.split('+').map(Engine::from_str).collect::<Result<Vec<_>>>()?;
        if engines.is_empty() {
            return Err(bad("no engine"));
        }
        if engines[1..].iter().any(|&e| e != Engine::Greedy) {
            return Err(bad("only `greedy` may follow another engine"));
        }
        let mut params = BTreeMap::new();
        if let Some(tail) = tail.filter(|t| !t.trim().is_empty()) {
            for kv in tail.split(',') {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                let k = k.trim();
                if !KNOWN_KEYS.contains(&k) {
                    return Err(bad(&format!("unknown key `{k}`")));
                }
                params.insert(k.to_string(), v.trim().to_string());
            }
        }
        let parsed = Self { engines, params };
        // Surface malformed numbers at parse time.
        for key in ["sweeps", "replicas", "seed", "quantize", "cap"] {
            parsed.get_u64(key)?;
        }
        for key in ["beta_start", "beta_end"] {
            parsed.get_f64(key)?;
        }
        Ok(parsed)
    }

    pub fn exhaustive() -> Self {
        Self { engines: vec![Engine::Exhaustive], params: BTreeMap::new() }
    }

    fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.params
            .get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|e| Error::BadSolverSpec {
                    spec: self.to_string(),
                    reason: format!("{key}: {e}"),
                })
            })
            .transpose()
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.params
            .get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::BadSolverSpec {
                    spec: self.to_string(),
                    reason: format!("{key}: {e}"),
                })
            })
            .transpose()
    }

    pub fn seed(&self) -> u64 {
        self.get_u64("seed").ok().flatten().unwrap_or(0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.params.insert("seed".into(), seed.to_string());
        self
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Result<Self> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::BadSolverSpec { spec: self.to_string(), reason: format!("unknown key `{key}`") });
        }
        self.params.insert(key.into(), value.to_string());
        Ok(self)
    }

    pub fn cap(&self) -> usize {
        self.get_u64("cap").ok().flatten().map_or(DEFAULT_EXHAUSTIVE_CAP, |c| c as usize)
    }

    /// Annealing schedule for `problem`, starting from the defaults and
    /// applying any overrides.
    pub fn schedule_for(&self, problem: &IsingProblem) -> Result<AnnealSchedule> {
        let mut s = AnnealSchedule::default_for(problem, self.seed());
        let scale = problem.mean_abs_coefficient();
        if let Some(sw) = self.get_u64("sweeps")? {
            s.sweeps = sw as usize;
        }
        if let Some(r) = self.get_u64("replicas")? {
            s.replicas = r as usize;
        }
        if let Some(b) = self.get_f64("beta_start")? {
            s.beta_start = b / scale;
        }
        if let Some(b) = self.get_f64("beta_end")? {
            s.beta_end = b / scale;
        }
        s.validate()?;
        Ok(s)
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.engines.iter().map(|e| e.name()).collect();
        f.write_str(&names.join("+"))?;
        if !self.params.is_empty() {
            let kv: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, ":{}", kv.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for SolverSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverSpec::parse(s)
    }
}

/// Runs the engines named in `spec` on `problem`, chaining any trailing
/// `greedy` polish onto the first engine's output.
pub fn solve_dispatch(problem: &IsingProblem, spec: &SolverSpec) -> Result<SolveResult> {
    let start = Instant::now();
    let seed = spec.seed();
    let mut result = match spec.engines[0] {
        Engine::Exhaustive => exhaustive_search(problem, spec.cap())?,
        Engine::Sa => {
            let schedule = spec.schedule_for(problem)?;
            match spec.get_u64("quantize")? {
                Some(bits) => {
                    let q = quantize_couplings(problem, bits as u32)?;
                    let r = simulated_annealing(&q.problem, &schedule);
                    SolveResult::new(problem, r.spins, r.evaluations, seed, "sa")
                }
                None => simulated_annealing(problem, &schedule),
            }
        }
        Engine::Greedy => {
            let start = random_spins(problem.num_spins(), seed);
            greedy_flip(problem, &start)?
        }
    };
    for _ in &spec.engines[1..] {
        let polished = greedy_flip(problem, &result.spins)?;
        result.evaluations += polished.evaluations;
        result.spins = polished.spins;
        result.objective = polished.objective;
    }
    result.seed = seed;
    result.engine = spec.engines.iter().map(|e| e.name()).collect::<Vec<_>>().join("+");
    result.params = spec.to_string();
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

pub(crate) fn random_spins(n: usize, seed: u64) -> Vec<Spin> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip_and_errors() {
        let s = SolverSpec::parse("sa+greedy:sweeps=100,replicas=8,seed=7").unwrap();
        assert_eq!(s.engines, vec![Engine::Sa, Engine::Greedy]);
        assert_eq!(s.seed(), 7);
        assert_eq!(s.to_string(), "sa+greedy:replicas=8,seed=7,sweeps=100");
        assert_eq!(SolverSpec::parse(&s.to_string()).unwrap(), s);

        assert!(matches!(SolverSpec::parse("qa"), Err(Error::UnknownEngine(_))));
        assert!(SolverSpec::parse("sa:temperature=3").is_err());
        assert!(SolverSpec::parse("sa:sweeps=abc").is_err());
        assert!(SolverSpec::parse("greedy+sa").is_err());
        assert_eq!(SolverSpec::parse("exhaustive").unwrap(), SolverSpec::exhaustive());
    }

    #[test]
    fn dispatch_attaches_metadata() {
        let p = IsingProblem::from_pairs(3, [(0, 1, 1.0), (1, 2, -1.0)], vec![0.0; 3], 0.0, Sense::Max).unwrap();
        let r = solve_dispatch(&p, &SolverSpec::parse("sa:sweeps=50,seed=3").unwrap()).unwrap();
        assert_eq!(r.engine, "sa");
        assert_eq!(r.seed, 3);
        assert_eq!(r.params, "sa:seed=3,sweeps=50");
        assert_eq!(r.objective, 2.0);
    }
}
