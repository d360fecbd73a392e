//! String ids for algorithms, schedulers and predicates, and the scenario
//! format that ties them together.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::adversaries::{adv_dmsd_break, adv_mirror_rsynch, adv_psi_sequence, dmsd_initial, AdversaryError};
use crate::engine::{run, Configuration, EngineError, Trace};
use crate::exactgeom::{Point, Rational};
use crate::model::{Algorithm, AlgorithmRef, Color, PerRobot, RobotId, RobotModel};
use crate::problems::{
    check_am, check_cge, check_dmsd, check_mcv, check_rdam, check_rdv1, check_sm, check_sro, PredicateReport,
    ProblemError,
};
use crate::protocols::{
    AnchorMidpoint, CgeFsynch, FsynchCollapse, GoToMidpoint, LambdaStep, RsynchHandshake, SimA, SingleMoveFsta,
    SroOblot, StayPut, TokenPass,
};
use crate::sched::{
    gen_asynch, gen_fsynch, gen_rsynch, gen_ssynch, Atomicity, Schedule, ScheduleError, DEFAULT_SSYNCH_WINDOW,
};

pub const ALGORITHMS: &[&str] = &[
    "alg.midpoint",
    "alg.anchor",
    "alg.single_move",
    "alg.sro",
    "alg.cge",
    "alg.token",
    "alg.lambda",
    "alg.stay",
    "sim.collapse",
    "sim.handshake",
    "sim.a",
];
pub const SCHEDULERS: &[&str] = &[
    "gen.fsynch",
    "gen.rsynch",
    "gen.ssynch",
    "gen.asynch",
    "adv.psi",
    "adv.dmsd",
    "adv.mirror",
];
pub const PREDICATES: &[&str] = &["dmsd", "rdv1", "am", "rdam", "sm", "mcv", "sro", "cge"];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown algorithm id {0:?}")]
    UnknownAlgorithm(String),
    #[error("unknown scheduler id {0:?}")]
    UnknownScheduler(String),
    #[error("unknown predicate id {0:?}")]
    UnknownPredicate(String),
    #[error("{id}: parameter {name:?} {reason}")]
    Param { id: String, name: String, reason: String },
    #[error("no initial positions given and {0} has no default")]
    MissingInitial(String),
    #[error("initial light {color} is outside the palette of {algorithm}")]
    InitialColor { algorithm: String, color: Color },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// An id plus free-form parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

impl ComponentSpec {
    pub fn new(id: impl Into<String>) -> Self {
        ComponentSpec { id: id.into(), params: Map::new() }
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    fn err(&self, name: &str, reason: impl Into<String>) -> RegistryError {
        RegistryError::Param { id: self.id.clone(), name: name.to_string(), reason: reason.into() }
    }

    fn rational(&self, name: &str) -> Result<Option<Rational>, RegistryError> {
        match self.params.get(name) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|_| self.err(name, "must be a rational such as \"1/3\"")),
        }
    }

    fn uint(&self, name: &str, default: u64) -> Result<u64, RegistryError> {
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| self.err(name, "must be a non-negative integer")),
        }
    }

    fn text(&self, name: &str) -> Result<Option<&str>, RegistryError> {
        match self.params.get(name) {
            None => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| self.err(name, "must be a string")),
        }
    }

    fn inner(&self) -> Result<ComponentSpec, RegistryError> {
        match self.params.get("inner") {
            Some(Value::String(id)) => Ok(ComponentSpec::new(id.clone())),
            Some(v @ Value::Object(_)) => {
                serde_json::from_value(v.clone()).map_err(|e| self.err("inner", e.to_string()))
            }
            _ => Err(self.err("inner", "is required (an algorithm id or {id, params})")),
        }
    }
}

pub fn build_algorithm(spec: &ComponentSpec) -> Result<AlgorithmRef, RegistryError> {
    Ok(match spec.id.as_str() {
        "alg.midpoint" => Arc::new(GoToMidpoint),
        "alg.anchor" => Arc::new(AnchorMidpoint),
        "alg.single_move" => {
            let hop = spec.rational("hop")?.unwrap_or_else(Rational::half);
            if !hop.is_positive() {
                return Err(spec.err("hop", "must be positive"));
            }
            Arc::new(SingleMoveFsta { hop })
        }
        "alg.sro" => Arc::new(SroOblot),
        "alg.cge" => Arc::new(CgeFsynch),
        "alg.token" => Arc::new(TokenPass),
        "alg.lambda" => {
            let lambda = spec.rational("lambda")?.ok_or_else(|| spec.err("lambda", "is required"))?;
            if !lambda.is_positive() || lambda > Rational::one() {
                return Err(spec.err("lambda", "must lie in (0, 1]"));
            }
            Arc::new(LambdaStep { lambda })
        }
        "alg.stay" => Arc::new(StayPut),
        "sim.collapse" => {
            let inner = build_algorithm(&spec.inner()?)?;
            let target: RobotModel = spec
                .text("target")?
                .unwrap_or("FSTA")
                .parse()
                .map_err(|e: String| spec.err("target", e))?;
            Arc::new(FsynchCollapse::new(inner, target).map_err(|e| spec.err("target", e))?)
        }
        "sim.handshake" => Arc::new(RsynchHandshake::new(build_algorithm(&spec.inner()?)?)),
        "sim.a" => Arc::new(SimA::new(build_algorithm(&spec.inner()?)?)),
        other => return Err(RegistryError::UnknownAlgorithm(other.to_string())),
    })
}

/// A schedule, plus initial positions when the scheduler dictates or
/// suggests them.
#[derive(Debug, Clone)]
pub struct BuiltSchedule {
    pub schedule: Schedule,
    /// Positions the construction depends on; they override the scenario.
    pub forced_initial: Option<Configuration>,
    /// Positions used when the scenario gives none.
    pub default_initial: Option<(Point, Point)>,
}

pub fn build_schedule(
    spec: &ComponentSpec,
    alg: &dyn Algorithm,
    model: RobotModel,
    seed: u64,
) -> Result<BuiltSchedule, RegistryError> {
    let plain = |schedule: Schedule| BuiltSchedule { schedule, forced_initial: None, default_initial: None };
    let mut built = match spec.id.as_str() {
        "gen.fsynch" => plain(gen_fsynch(spec.uint("rounds", 10)? as u32)?),
        "gen.rsynch" => {
            let first = match spec.text("first")?.unwrap_or("A") {
                "A" | "a" => RobotId::A,
                "B" | "b" => RobotId::B,
                _ => return Err(spec.err("first", "must be \"A\" or \"B\"")),
            };
            plain(gen_rsynch(spec.uint("prefix", 0)? as u32, spec.uint("turns", 20)? as u32, first)?)
        }
        "gen.ssynch" => plain(gen_ssynch(
            spec.uint("seed", seed)?,
            spec.uint("rounds", 12)? as u32,
            spec.uint("window", DEFAULT_SSYNCH_WINDOW as u64)? as u32,
        )?),
        "gen.asynch" => {
            let class: Atomicity = spec
                .text("class")?
                .unwrap_or("NONE")
                .parse()
                .map_err(|e: String| spec.err("class", e))?;
            plain(gen_asynch(spec.uint("seed", seed)?, spec.uint("cycles", 10)? as u32, class)?)
        }
        "adv.psi" => {
            let counts: Vec<u32> = match spec.params.get("counts") {
                Some(v) => serde_json::from_value(v.clone()).map_err(|_| spec.err("counts", "must be a list of integers"))?,
                None => vec![spec.uint("r", 0)? as u32],
            };
            let (s, _) = adv_psi_sequence(&counts)?;
            BuiltSchedule { schedule: s, forced_initial: None, default_initial: Some((Point::ints(0, 0), Point::ints(1, 0))) }
        }
        "adv.dmsd" => {
            let lambda = match spec.rational("lambda")? {
                Some(l) => l,
                None => alg
                    .similarity_lambda()
                    .ok_or_else(|| AdversaryError::NoLambda(alg.id()))?,
            };
            let x = spec.rational("x")?.unwrap_or_else(|| Rational::new(1, 3));
            BuiltSchedule {
                schedule: adv_dmsd_break(&lambda, &x)?,
                forced_initial: None,
                default_initial: Some(dmsd_initial()),
            }
        }
        "adv.mirror" => {
            let p = spec.rational("p")?.unwrap_or_else(Rational::one);
            let m = adv_mirror_rsynch(alg, model, spec.uint("turns", 40)? as u32, &p)?;
            BuiltSchedule { schedule: m.schedule, forced_initial: Some(m.initial), default_initial: None }
        }
        other => return Err(RegistryError::UnknownScheduler(other.to_string())),
    };
    match spec.text("frames")? {
        None | Some("unit") => {}
        Some("random") => built.schedule.randomize_frames(seed),
        Some(_) => return Err(spec.err("frames", "must be \"unit\" or \"random\"")),
    }
    if let Some(h) = spec.rational("horizon")? {
        if h < built.schedule.last_end() {
            return Err(spec.err("horizon", "ends before the last scheduled move"));
        }
        built.schedule.horizon = h;
    }
    Ok(built)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub positions: [Point; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<[Color; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub algorithm: ComponentSpec,
    /// Defaults to the algorithm's own model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<RobotModel>,
    pub scheduler: ComponentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub grid_granted: bool,
    #[serde(default)]
    pub seed: u64,
}

pub fn run_scenario(sc: &Scenario) -> Result<Trace, RegistryError> {
    let alg = build_algorithm(&sc.algorithm)?;
    let model = sc.model.unwrap_or(alg.model());
    let built = build_schedule(&sc.scheduler, alg.as_ref(), model, sc.seed)?;
    let init = match (built.forced_initial, &sc.initial, built.default_initial) {
        (Some(c), _, _) => c,
        (None, Some(spec), _) => {
            let [a, b] = spec.positions.clone();
            match spec.colors {
                Some([ca, cb]) => {
                    for c in [ca, cb] {
                        if c.0 >= alg.palette() {
                            return Err(RegistryError::InitialColor { algorithm: alg.id(), color: c });
                        }
                    }
                    Configuration::new(a, b, PerRobot::new(ca, cb))
                }
                None => Configuration::initial(alg.as_ref(), a, b),
            }
        }
        (None, None, Some((a, b))) => Configuration::initial(alg.as_ref(), a, b),
        (None, None, None) => return Err(RegistryError::MissingInitial(sc.scheduler.id.clone())),
    };
    Ok(run(alg.as_ref(), model, &built.schedule, &init, sc.grid_granted)?)
}

/// Extra inputs some predicates need.
#[derive(Debug, Clone, Default)]
pub struct PredicateParams {
    pub eps: Option<Rational>,
    pub steps: Option<usize>,
}

pub fn check_predicate(trace: &Trace, id: &str, p: &PredicateParams) -> Result<PredicateReport, RegistryError> {
    let missing = |name: &str| RegistryError::Param {
        id: id.to_string(),
        name: name.to_string(),
        reason: "is required".into(),
    };
    Ok(match id {
        "dmsd" => check_dmsd(trace)?,
        "rdv1" => check_rdv1(trace),
        "am" => check_am(trace),
        "rdam" => check_rdam(trace),
        "sm" => check_sm(trace)?,
        "mcv" => check_mcv(trace, p.eps.as_ref().ok_or_else(|| missing("eps"))?)?,
        "sro" => check_sro(trace)?,
        "cge" => {
            let steps = p.steps.unwrap_or_else(|| trace.schedule.rounds().len());
            check_cge(trace, steps)?
        }
        other => return Err(RegistryError::UnknownPredicate(other.to_string())),
    })
}
