use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, Method, DEFAULT_LINE_CAP, EXTENDED_LINE_CAP};
use super::rows::ResultRow;
use crate::error::{Error, Result};
use crate::geometry::{
    build_scene, effective_objective, los_channel, mrt_beamformer, received_power, Channel, PhaseVector, Scene,
    SceneConfig,
};
use crate::higher_order::{assemble_line_phases, line_fourth_order, HigherOrderProblem, LineControl};
use crate::ising::{coupling_from_channel, spins_to_phases, IsingProblem, Levels};
use crate::quadratize::{count_variables, tune_penalty, ReductionMethod};
use crate::solvers::{continuous_manifold, exhaustive_search, solve_dispatch, ManifoldOptions, SolveResult};
use crate::two_step::{two_step_second_problem, two_step_second_solve, SecondStepSolver};

/// Stream reserved for instance geometry so it never aliases solver streams.
const GEOMETRY_STREAM: u64 = 0x9e0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub extended: bool,
    /// Fill `wall_time_s`; such runs are not byte-reproducible.
    pub timing: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    /// Full solver description behind each row, in row order.
    pub solver_specs: Vec<String>,
}

impl RunOutput {
    fn extend(&mut self, other: RunOutput) {
        self.rows.extend(other.rows);
        self.solver_specs.extend(other.solver_specs);
    }
}

/// Random LoS geometry for one comparison instance: BS and UT directions
/// in azimuth and elevation, and their distances, drawn from `seed`.
pub fn random_scene_config(base: &SceneConfig, n_v: usize, n_h: usize, seed: u64) -> SceneConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GEOMETRY_STREAM);
    let mut cfg = base.clone().with_ris_size(n_v, n_h);
    let normal = base.ris_normal;
    let col = base.ris_col_axis;
    let up = [
        normal[1] * col[2] - normal[2] * col[1],
        normal[2] * col[0] - normal[0] * col[2],
        normal[0] * col[1] - normal[1] * col[0],
    ];
    let mut place = |d_range: (f64, f64), az_max: f64, el_max: f64| {
        let d = rng.gen_range(d_range.0..d_range.1);
        let az = rng.gen_range(-az_max..az_max).to_radians();
        let el = rng.gen_range(-el_max..el_max).to_radians();
        let (a, b, c) = (d * el.cos() * az.cos(), d * el.cos() * az.sin(), d * el.sin());
        std::array::from_fn(|k| base.ris_center[k] + a * normal[k] + b * col[k] + c * up[k])
    };
    cfg.bs_position = Some(place((10.0, 30.0), 45.0, 20.0));
    cfg.ut_position = Some(place((20.0, 80.0), 60.0, 30.0));
    cfg
}

/// One scene with its channel.
pub struct Instance {
    pub scene: Scene,
    pub channel: Channel,
    pub n_v: usize,
    pub n_h: usize,
}

impl Instance {
    pub fn new(cfg: &SceneConfig) -> Result<Self> {
        let scene = build_scene(cfg)?;
        Self::from_scene(scene)
    }

    pub fn from_scene(scene: Scene) -> Result<Self> {
        let channel = los_channel(&scene)?;
        let (n_v, n_h) = (scene.ris_array.rows, scene.ris_array.cols);
        Ok(Self { scene, channel, n_v, n_h })
    }

    pub fn num_elements(&self) -> usize {
        self.n_v * self.n_h
    }
}

/// A method's phase design and bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub phases: PhaseVector,
    pub evaluations: u64,
    pub variable_count: usize,
    pub solver: String,
    pub wall_time: f64,
}

/// Runs methods on one instance, sharing full-element problems and
/// first-step solves between methods that use the same solver.
pub struct Designer<'a> {
    inst: &'a Instance,
    cfg: &'a ExperimentConfig,
    seed: u64,
    line_cap: usize,
    full: [OnceCell<IsingProblem>; 2],
    line: OnceCell<HigherOrderProblem>,
    first: RefCell<HashMap<(usize, String), SolveResult>>,
}

impl<'a> Designer<'a> {
    pub fn new(inst: &'a Instance, cfg: &'a ExperimentConfig, seed: u64, extended: bool) -> Self {
        Self {
            inst,
            cfg,
            seed,
            line_cap: if extended { EXTENDED_LINE_CAP } else { DEFAULT_LINE_CAP },
            full: [OnceCell::new(), OnceCell::new()],
            line: OnceCell::new(),
            first: RefCell::new(HashMap::new()),
        }
    }

    fn full(&self, levels: Levels) -> Result<&IsingProblem> {
        let cell = &self.full[usize::from(levels == Levels::Four)];
        if let Some(p) = cell.get() {
            return Ok(p);
        }
        let p = coupling_from_channel(&self.inst.channel, levels)?;
        Ok(cell.get_or_init(|| p))
    }

    fn line_problem(&self) -> Result<&HigherOrderProblem> {
        if let Some(p) = self.line.get() {
            return Ok(p);
        }
        let p = line_fourth_order(self.full(Levels::Two)?, self.inst.n_v, self.inst.n_h)?;
        Ok(self.line.get_or_init(|| p))
    }

    fn first_step(&self, levels: Levels, method: Method) -> Result<SolveResult> {
        let spec = self.cfg.solver_for(method, self.seed)?;
        let key = (levels.count(), spec.to_string());
        if let Some(r) = self.first.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = solve_dispatch(self.full(levels)?, &spec)?;
        self.first.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn second_solver(&self) -> Result<SecondStepSolver> {
        self.cfg.second_step_solver(self.seed)
    }

    pub fn design(&self, method: Method) -> Result<Design> {
        let started = Instant::now();
        let inst = self.inst;
        let n = inst.num_elements();
        let (n_v, n_h) = (inst.n_v, inst.n_h);
        let (phases, evaluations, variable_count, solver) = match method {
            Method::FullL2 | Method::FullL4 => {
                let levels = method.levels().expect("discrete method");
                let r = self.first_step(levels, method)?;
                (spins_to_phases(&r.spins, levels)?, r.evaluations, levels.spins_per_variable() * n, r.params)
            }
            Method::LineL2 | Method::LineL4 => {
                let levels = method.levels().expect("discrete method");
                let r = self.first_step(levels, method)?;
                let phi_star = spins_to_phases(&r.spins, levels)?;
                let fit = two_step_second_problem(&phi_star, n_v, n_h, levels)?;
                let second = self.second_solver()?;
                let (line, work) = two_step_second_solve(&fit, &second)?;
                let count = levels.spins_per_variable() * count_variables(ReductionMethod::TwoStep, n_v, n_h);
                let desc = match &second {
                    SecondStepSolver::Alternating { starts, seed } => {
                        format!("{}; second=alternating:starts={starts},seed={seed}", r.params)
                    }
                    SecondStepSolver::Ising(spec) => format!("{}; second={spec}", r.params),
                };
                (assemble_line_phases(&line), r.evaluations + work, count, desc)
            }
            Method::LineL2StdQuad => {
                let spec = self.cfg.solver_for(method, self.seed)?;
                let t = tune_penalty(self.line_problem()?, &spec, self.cfg.tune_budget, self.seed, self.cfg.gadget)?;
                let line = LineControl::from_spins(&t.spins, n_v, n_h, Levels::Two)?;
                let count = count_variables(ReductionMethod::Standard(self.cfg.gadget), n_v, n_h);
                let gadget = match self.cfg.gadget {
                    crate::quadratize::Gadget::Parity => "parity",
                    crate::quadratize::Gadget::Rosenberg => "rosenberg",
                };
                let desc = format!("{spec}; tune_budget={}; gadget={gadget}", self.cfg.tune_budget);
                (assemble_line_phases(&line), t.evaluations, count, desc)
            }
            Method::LineL2Exhaustive => {
                if n_v + n_h > self.line_cap {
                    return Err(line_cap_error(n_v + n_h, self.line_cap));
                }
                let spec = self.cfg.solver_for(method, self.seed)?;
                let r = exhaustive_search(self.line_problem()?, spec.cap().max(self.line_cap))?;
                let line = LineControl::from_spins(&r.spins, n_v, n_h, Levels::Two)?;
                (assemble_line_phases(&line), r.evaluations, n_v + n_h, "exhaustive".to_string())
            }
            Method::Continuous => {
                let opts = ManifoldOptions { seed: self.seed, ..ManifoldOptions::default() };
                let r = continuous_manifold(&inst.channel, &opts);
                let desc = format!("manifold:starts={},seed={}", opts.starts, opts.seed);
                (r.phases, r.iterations as u64, n, desc)
            }
        };
        Ok(Design { phases, evaluations, variable_count, solver, wall_time: started.elapsed().as_secs_f64() })
    }
}

fn line_cap_error(k: usize, cap: usize) -> Error {
    if cap < EXTENDED_LINE_CAP {
        Error::Config(format!("{k} line variables exceeds the exhaustive cap of {cap}; pass --extended to allow up to {EXTENDED_LINE_CAP}"))
    } else {
        Error::Config(format!("{k} line variables exceeds the extended exhaustive cap of {cap}"))
    }
}

/// Received power under MRT for `phases`; zero when the effective channel
/// vanishes.
pub fn mrt_power(channel: &Channel, phases: &PhaseVector, tx_power_w: f64) -> Result<f64> {
    match mrt_beamformer(channel, phases, tx_power_w) {
        Ok(w) => received_power(channel, phases, &w),
        Err(Error::ZeroEffectiveChannel) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn row(method: Method, inst: &Instance, seed: u64, distance: f64, design: &Design, objective: f64, power: f64, timing: bool) -> ResultRow {
    ResultRow {
        method: method.label().to_string(),
        n_v: inst.n_v,
        n_h: inst.n_h,
        n: inst.num_elements(),
        levels: method.levels().map(Levels::count),
        distance_m: distance,
        seed,
        objective,
        received_power_w: 0.0,
        received_power_dbm: 0.0,
        variable_count: design.variable_count,
        solver_evaluations: design.evaluations,
        wall_time_s: timing.then_some(design.wall_time),
    }
    .with_power(power)
}

fn design_rows(inst: &Instance, cfg: &ExperimentConfig, seed: u64, opts: RunOptions) -> Result<RunOutput> {
    let designer = Designer::new(inst, cfg, seed, opts.extended);
    let mut out = RunOutput::default();
    let p_t = inst.scene.tx_power_w;
    let distance = inst.scene.ut_distance();
    for &method in &cfg.methods {
        let d = designer.design(method)?;
        let objective = effective_objective(&inst.channel, &d.phases)?;
        let power = mrt_power(&inst.channel, &d.phases, p_t)?;
        out.rows.push(row(method, inst, seed, distance, &d, objective, power, opts.timing));
        out.solver_specs.push(d.solver);
    }
    Ok(out)
}

/// Per (size, seed): exhaustive line optimum, two-step and penalty-based
/// designs on a random LoS instance.
pub fn run_quadratization_comparison(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate(ExperimentKind::Quadcmp)?;
    let cap = if opts.extended { EXTENDED_LINE_CAP } else { DEFAULT_LINE_CAP };
    let shapes = cfg.shapes(ExperimentKind::Quadcmp)?;
    if let Some(&(v, h)) = shapes.iter().find(|(v, h)| v + h > cap) {
        return Err(line_cap_error(v + h, cap));
    }
    let jobs: Vec<_> = shapes.iter().flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed))).collect();
    collect_jobs(&jobs, |&((n_v, n_h), seed)| {
        let scene_cfg = if cfg.sweep.randomize_geometry {
            random_scene_config(&cfg.scene, n_v, n_h, seed)
        } else {
            cfg.scene.clone().with_ris_size(n_v, n_h)
        };
        design_rows(&Instance::new(&scene_cfg)?, cfg, seed, opts)
    })
}

/// Per (N, seed): every configured method at the design distance.
pub fn run_scaling_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate(ExperimentKind::Scaling)?;
    let shapes = cfg.shapes(ExperimentKind::Scaling)?;
    let jobs: Vec<_> = shapes.iter().flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed))).collect();
    collect_jobs(&jobs, |&((n_v, n_h), seed)| {
        let scene = build_scene(&cfg.scene.clone().with_ris_size(n_v, n_h))?.with_ut_distance(cfg.sweep.design_distance_m)?;
        design_rows(&Instance::from_scene(scene)?, cfg, seed, opts)
    })
}

/// Designs phases and the MRT beamformer once at the design distance, then
/// evaluates the frozen design along the UT ray.
pub fn run_distance_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate(ExperimentKind::Distance)?;
    if let Some(d) = cfg.sweep.distances_m.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Config(format!("distance {d} must be positive")));
    }
    let design_scene = build_scene(&cfg.scene)?.with_ut_distance(cfg.sweep.design_distance_m)?;
    let inst = Instance::from_scene(design_scene)?;
    let p_t = inst.scene.tx_power_w;
    collect_jobs(&cfg.seeds, |&seed| {
        let designer = Designer::new(&inst, cfg, seed, opts.extended);
        let mut frozen = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let d = designer.design(method)?;
            let w = match mrt_beamformer(&inst.channel, &d.phases, p_t) {
                Ok(w) => Some(w),
                Err(Error::ZeroEffectiveChannel) => None,
                Err(e) => return Err(e),
            };
            frozen.push((method, d, w));
        }
        let mut out = RunOutput::default();
        for &dist in &cfg.sweep.distances_m {
            let moved = Instance::from_scene(inst.scene.with_ut_distance(dist)?)?;
            for (method, d, w) in &frozen {
                let power = match w {
                    Some(w) => received_power(&moved.channel, &d.phases, w)?,
                    None => 0.0,
                };
                out.rows.push(row(*method, &moved, seed, dist, d, power / p_t, power, opts.timing));
                out.solver_specs.push(d.solver.clone());
            }
        }
        Ok(out)
    })
}

/// Runs independent jobs in parallel and concatenates their output in job
/// order.
fn collect_jobs<J: Sync>(jobs: &[J], f: impl Fn(&J) -> Result<RunOutput> + Sync + Send) -> Result<RunOutput> {
    let parts: Vec<Result<RunOutput>> = jobs.par_iter().map(f).collect();
    let mut out = RunOutput::default();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    match kind {
        ExperimentKind::Quadcmp => run_quadratization_comparison(cfg, opts),
        ExperimentKind::Scaling => run_scaling_sweep(cfg, opts),
        ExperimentKind::Distance => run_distance_sweep(cfg, opts),
    }
}
