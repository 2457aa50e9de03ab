use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SceneConfig;
use crate::ising::Levels;
use crate::quadratize::Gadget;
use crate::solvers::SolverSpec;
use crate::two_step::{SecondStepSolver, DEFAULT_STARTS};

/// Line-variable limit for the exhaustive line optimum without `--extended`.
pub const DEFAULT_LINE_CAP: usize = 20;
pub const EXTENDED_LINE_CAP: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "FULL_L2")]
    FullL2,
    #[serde(rename = "FULL_L4")]
    FullL4,
    #[serde(rename = "LINE_L2")]
    LineL2,
    #[serde(rename = "LINE_L4")]
    LineL4,
    #[serde(rename = "LINE_L2_STDQUAD")]
    LineL2StdQuad,
    /// Exhaustive search over the fourth-order line problem.
    #[serde(rename = "LINE_L2_EXHAUSTIVE")]
    LineL2Exhaustive,
    #[serde(rename = "CONTINUOUS")]
    Continuous,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::FullL2,
        Method::FullL4,
        Method::LineL2,
        Method::LineL4,
        Method::LineL2StdQuad,
        Method::LineL2Exhaustive,
        Method::Continuous,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::FullL2 => "FULL_L2",
            Method::FullL4 => "FULL_L4",
            Method::LineL2 => "LINE_L2",
            Method::LineL4 => "LINE_L4",
            Method::LineL2StdQuad => "LINE_L2_STDQUAD",
            Method::LineL2Exhaustive => "LINE_L2_EXHAUSTIVE",
            Method::Continuous => "CONTINUOUS",
        }
    }

    /// `None` for continuous phases.
    pub fn levels(self) -> Option<Levels> {
        match self {
            Method::FullL4 | Method::LineL4 => Some(Levels::Four),
            Method::Continuous => None,
            _ => Some(Levels::Two),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Quadcmp,
    Scaling,
    Distance,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Quadcmp => "quadcmp",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Distance => "distance",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadcmp" => Ok(ExperimentKind::Quadcmp),
            "scaling" => Ok(ExperimentKind::Scaling),
            "distance" => Ok(ExperimentKind::Distance),
            other => Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Quadcmp sizes as `N_v + N_h`; each splits into `⌊k/2⌋ × ⌈k/2⌉`.
    pub line_variables: Vec<usize>,
    /// Scaling sizes as element counts; must be perfect squares.
    pub elements: Vec<usize>,
    /// Explicit `[N_v, N_h]` shapes, used instead of the lists above.
    pub shapes: Vec<[usize; 2]>,
    pub distances_m: Vec<f64>,
    pub design_distance_m: f64,
    /// Quadcmp: draw a fresh BS/UT geometry per (shape, seed).
    pub randomize_geometry: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            line_variables: Vec::new(),
            elements: Vec::new(),
            shapes: Vec::new(),
            distances_m: Vec::new(),
            design_distance_m: 50.0,
            randomize_geometry: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Second-step solver for the two-step methods: `"alternating"` or any
    /// solver spec.
    pub second_step: String,
    pub second_step_starts: usize,
    pub gadget: Gadget,
    /// Penalty-weight trials per instance for LINE_L2_STDQUAD.
    pub tune_budget: usize,
    pub output: Option<PathBuf>,
    pub scene: SceneConfig,
    pub sweep: SweepConfig,
    /// Solver spec per method label; missing entries use the defaults.
    pub solvers: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Vec::new(),
            seeds: vec![0],
            second_step: "alternating".into(),
            second_step_starts: DEFAULT_STARTS,
            gadget: Gadget::Parity,
            tune_budget: 200,
            output: None,
            scene: SceneConfig::default(),
            sweep: SweepConfig::default(),
            solvers: BTreeMap::new(),
        }
    }
}

const LARGE_SA: &str = "sa+greedy:replicas=4,sweeps=1000";

impl ExperimentConfig {
    /// Built-in configuration for each subcommand.
    pub fn default_for(kind: ExperimentKind, extended: bool) -> Self {
        let mut cfg = Self::default();
        match kind {
            ExperimentKind::Quadcmp => {
                let top = if extended { EXTENDED_LINE_CAP } else { DEFAULT_LINE_CAP };
                cfg.sweep.line_variables = (8..=top).step_by(2).collect();
                cfg.methods = vec![Method::LineL2Exhaustive, Method::LineL2, Method::LineL2StdQuad];
                cfg.solvers.insert("LINE_L2".into(), "sa+greedy".into());
                cfg.solvers.insert("LINE_L2_STDQUAD".into(), "sa+greedy:replicas=2,sweeps=200".into());
            }
            ExperimentKind::Scaling => {
                cfg.sweep.elements = vec![16, 64, 256, 1024, 4096, 5476];
                cfg.methods = vec![Method::FullL2, Method::FullL4, Method::LineL2, Method::LineL4, Method::Continuous];
                for m in [Method::FullL2, Method::FullL4, Method::LineL2, Method::LineL4] {
                    cfg.solvers.insert(m.label().into(), LARGE_SA.into());
                }
            }
            ExperimentKind::Distance => {
                cfg.sweep.distances_m = vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];
                cfg.methods = vec![Method::LineL2, Method::LineL4, Method::Continuous];
                for m in [Method::LineL2, Method::LineL4] {
                    cfg.solvers.insert(m.label().into(), LARGE_SA.into());
                }
            }
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check_solver_keys()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn check_solver_keys(&self) -> Result<()> {
        for (k, v) in &self.solvers {
            k.parse::<Method>()?;
            SolverSpec::parse(v)?;
        }
        Ok(())
    }

    /// Solver for `method` with the row seed applied.
    pub fn solver_for(&self, method: Method, seed: u64) -> Result<SolverSpec> {
        let spec = match self.solvers.iter().find(|(k, _)| k.eq_ignore_ascii_case(method.label())) {
            Some((_, v)) => SolverSpec::parse(v)?,
            None if method == Method::LineL2Exhaustive => SolverSpec::exhaustive(),
            None => SolverSpec::parse("sa+greedy")?,
        };
        Ok(spec.with_seed(seed))
    }

    pub fn second_step_solver(&self, seed: u64) -> Result<SecondStepSolver> {
        if self.second_step.trim() == "alternating" {
            Ok(SecondStepSolver::Alternating { starts: self.second_step_starts, seed })
        } else {
            Ok(SecondStepSolver::Ising(SolverSpec::parse(&self.second_step)?.with_seed(seed)))
        }
    }

    /// Rejects configs that cannot produce any rows.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        self.check_solver_keys()?;
        let sweep_empty = match kind {
            ExperimentKind::Quadcmp => self.sweep.shapes.is_empty() && self.sweep.line_variables.is_empty(),
            ExperimentKind::Scaling => self.sweep.shapes.is_empty() && self.sweep.elements.is_empty(),
            ExperimentKind::Distance => self.sweep.distances_m.is_empty(),
        };
        if sweep_empty {
            return Err(Error::Config(format!("{} sweep is empty", kind.name())));
        }
        Ok(())
    }

    /// RIS shapes swept by `kind`, in sweep order.
    pub fn shapes(&self, kind: ExperimentKind) -> Result<Vec<(usize, usize)>> {
        if !self.sweep.shapes.is_empty() {
            return self
                .sweep
                .shapes
                .iter()
                .map(|&[v, h]| {
                    if v == 0 || h == 0 {
                        Err(Error::Config(format!("shape {v}x{h} has an empty side")))
                    } else {
                        Ok((v, h))
                    }
                })
                .collect();
        }
        match kind {
            ExperimentKind::Quadcmp => self
                .sweep
                .line_variables
                .iter()
                .map(|&k| {
                    if k < 2 {
                        Err(Error::Config(format!("{k} line variables cannot form a surface")))
                    } else {
                        Ok((k / 2, k - k / 2))
                    }
                })
                .collect(),
            ExperimentKind::Scaling => self
                .sweep
                .elements
                .iter()
                .map(|&n| {
                    let side = (n as f64).sqrt().round() as usize;
                    if side == 0 || side * side != n {
                        Err(Error::Config(format!("{n} elements is not a perfect square; list explicit shapes")))
                    } else {
                        Ok((side, side))
                    }
                })
                .collect(),
            ExperimentKind::Distance => Ok(vec![(self.scene.ris.rows, self.scene.ris.cols)]),
        }
    }
}
