//! Seeded refinement checks: run a simulator, project the run back to the
//! simulated algorithm and hold the result to the simulator's bounds.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run, Configuration};
use crate::exactgeom::{Point, Rational};
use crate::model::{AlgorithmRef, RobotId, RobotModel};
use crate::sched::{gen_asynch, gen_fsynch, gen_rsynch, validate_atomicity, Atomicity, Schedule, ScheduleError};

use super::project::{project_collapse, project_handshake, project_sim_a, AbstractTrace};
use super::sim::{FsynchCollapse, RsynchHandshake, SimA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("{0}")]
    Simulator(String),
    #[error("no seeds requested")]
    NoSeeds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Simulator {
    Handshake,
    SimA,
    Collapse(RobotModel),
}

impl fmt::Display for Simulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Simulator::Handshake => f.write_str("sim.handshake"),
            Simulator::SimA => f.write_str("sim.a"),
            Simulator::Collapse(m) => write!(f, "sim.collapse({m})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleFamily {
    /// Seed picks a synchronous prefix of 0..=3 rounds, the first mover and
    /// `turns + seed % 7` alternating turns.
    Rsynch { turns: u32 },
    Asynch { cycles: u32, class: Atomicity },
    Fsynch { rounds: u32 },
}

impl Simulator {
    pub fn default_family(self) -> ScheduleFamily {
        match self {
            Simulator::Handshake => ScheduleFamily::Rsynch { turns: 18 },
            Simulator::SimA => ScheduleFamily::Asynch { cycles: 24, class: Atomicity::None },
            Simulator::Collapse(_) => ScheduleFamily::Fsynch { rounds: 8 },
        }
    }

    /// Allowed simulator epochs per abstract step.
    pub fn overhead_bound(self) -> Rational {
        match self {
            Simulator::Handshake => Rational::from_int(3),
            Simulator::SimA => Rational::from_int(4),
            Simulator::Collapse(_) => Rational::one(),
        }
    }

    /// Allowed distinct simulator lights for an inner palette of `k`.
    pub fn color_bound(self, k: u32) -> usize {
        let k = k as usize;
        match self {
            Simulator::Handshake => 3 * k * k,
            Simulator::SimA => 7 * k,
            Simulator::Collapse(_) => k,
        }
    }
}

impl ScheduleFamily {
    pub fn schedule(&self, seed: u64) -> Result<Schedule, ScheduleError> {
        match *self {
            ScheduleFamily::Rsynch { turns } => {
                let first = if (seed / 4).is_multiple_of(2) { RobotId::A } else { RobotId::B };
                gen_rsynch((seed % 4) as u32, turns + (seed % 7) as u32, first)
            }
            ScheduleFamily::Asynch { cycles, class } => gen_asynch(seed, cycles, class),
            ScheduleFamily::Fsynch { rounds } => gen_fsynch(rounds),
        }
    }
}

/// Two distinct integer points drawn from the seed.
pub fn seeded_positions(seed: u64) -> (Point, Point) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e_ed0f_d0e5);
    let a = Point::ints(rng.gen_range(-16..=16), rng.gen_range(-16..=16));
    loop {
        let b = Point::ints(rng.gen_range(-16..=16), rng.gen_range(-16..=16));
        if b != a {
            return (a, b);
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub steps: usize,
    pub overhead: Option<Rational>,
    pub colors: usize,
    pub patterns: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EquivSummary {
    pub simulator: Simulator,
    pub algorithm: String,
    pub inner_palette: u32,
    pub seeds: usize,
    pub max_overhead: Option<Rational>,
    pub max_colors: usize,
    pub max_patterns: usize,
    pub failures: Vec<(u64, String)>,
}

impl EquivSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for EquivSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let oh = self.max_overhead.as_ref().map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        write!(
            f,
            "{} x {} (k={}): {} seeds, max overhead {} (bound {}), max colors {} (bound {}), max patterns {}, {} failures",
            self.simulator,
            self.algorithm,
            self.inner_palette,
            self.seeds,
            oh,
            self.simulator.overhead_bound(),
            self.max_colors,
            self.simulator.color_bound(self.inner_palette),
            self.max_patterns,
            self.failures.len()
        )
    }
}

fn wrap(sim: Simulator, inner: &AlgorithmRef) -> Result<(AlgorithmRef, RobotModel), EquivError> {
    Ok(match sim {
        Simulator::Handshake => (std::sync::Arc::new(RsynchHandshake::new(inner.clone())), RobotModel::Fcom),
        Simulator::SimA => (std::sync::Arc::new(SimA::new(inner.clone())), RobotModel::Fcom),
        Simulator::Collapse(target) => (
            std::sync::Arc::new(FsynchCollapse::new(inner.clone(), target).map_err(EquivError::Simulator)?),
            target,
        ),
    })
}

fn one_seed(sim: Simulator, inner: &AlgorithmRef, family: ScheduleFamily, seed: u64) -> SeedOutcome {
    let mut out = SeedOutcome { seed, steps: 0, overhead: None, colors: 0, patterns: 0, error: None };
    let result = (|| -> Result<(), String> {
        let (wrapped, model) = wrap(sim, inner).map_err(|e| e.to_string())?;
        let mut schedule = family.schedule(seed).map_err(|e| e.to_string())?;
        if !matches!(sim, Simulator::Collapse(_)) {
            schedule.randomize_frames(seed);
        }
        let (a, b) = seeded_positions(seed);
        let init = Configuration::initial(wrapped.as_ref(), a, b);
        let trace = run(wrapped.as_ref(), model, &schedule, &init, false).map_err(|e| e.to_string())?;
        let abs: AbstractTrace = match sim {
            Simulator::Handshake => {
                let h = RsynchHandshake::new(inner.clone());
                project_handshake(&trace, &h)
            }
            Simulator::SimA => project_sim_a(&trace, &SimA::new(inner.clone())),
            Simulator::Collapse(_) => project_collapse(&trace, inner.as_ref()),
        }
        .map_err(|e| e.to_string())?;
        out.steps = abs.steps.len();
        out.colors = abs.colors_used.len();
        out.patterns = match sim {
            Simulator::SimA => {
                let s = SimA::new(inner.clone());
                abs.colors_used
                    .iter()
                    .filter_map(|c| s.decode(*c).map(|x| x.pattern()))
                    .collect::<BTreeSet<_>>()
                    .len()
            }
            Simulator::Handshake => {
                let h = RsynchHandshake::new(inner.clone());
                abs.colors_used
                    .iter()
                    .filter_map(|c| h.decode(*c).map(|x| x.phase))
                    .collect::<BTreeSet<_>>()
                    .len()
            }
            Simulator::Collapse(_) => out.colors,
        };
        out.overhead = abs.overhead();
        if let Some(o) = &out.overhead {
            if *o > sim.overhead_bound() {
                return Err(format!("overhead {o} exceeds {}", sim.overhead_bound()));
            }
        }
        if out.colors > sim.color_bound(inner.palette()) {
            return Err(format!("{} lights exceed {}", out.colors, sim.color_bound(inner.palette())));
        }
        if sim == Simulator::SimA && out.patterns > 7 {
            return Err(format!("{} composite patterns", out.patterns));
        }
        if let (Simulator::SimA, ScheduleFamily::Asynch { class: Atomicity::Lc, .. }) = (sim, family) {
            let report = validate_atomicity(&abs.schedule, Atomicity::Lcm);
            if !report.ok {
                return Err(format!("projection of an LC-atomic run is not LCM-atomic: {}", report.violations[0]));
            }
        }
        if let Simulator::Collapse(_) = sim {
            let direct = abs.replay.epochs(&Rational::zero()).len();
            if direct != abs.sim_epochs {
                return Err(format!("{} epochs against {direct} direct", abs.sim_epochs));
            }
        }
        Ok(())
    })();
    out.error = result.err();
    out
}

/// Runs seeds `0..seeds` in parallel. Every seed is independent and
/// deterministic, so the summary does not depend on thread count.
pub fn run_equiv(
    sim: Simulator,
    inner: AlgorithmRef,
    family: Option<ScheduleFamily>,
    seeds: u64,
) -> Result<EquivSummary, EquivError> {
    if seeds == 0 {
        return Err(EquivError::NoSeeds);
    }
    wrap(sim, &inner)?;
    let family = family.unwrap_or(sim.default_family());
    let outcomes: Vec<SeedOutcome> = (0..seeds).into_par_iter().map(|s| one_seed(sim, &inner, family, s)).collect();
    Ok(EquivSummary {
        simulator: sim,
        algorithm: inner.id(),
        inner_palette: inner.palette(),
        seeds: outcomes.len(),
        max_overhead: outcomes.iter().filter_map(|o| o.overhead.clone()).max(),
        max_colors: outcomes.iter().map(|o| o.colors).max().unwrap_or(0),
        max_patterns: outcomes.iter().map(|o| o.patterns).max().unwrap_or(0),
        failures: outcomes.into_iter().filter_map(|o| o.error.map(|e| (o.seed, e))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::protocols::{AnchorMidpoint, GoToMidpoint, TokenPass};

    #[test]
    fn positions_distinct_and_stable() {
        for s in 0..50 {
            let (a, b) = seeded_positions(s);
            assert_ne!(a, b);
            assert_eq!(seeded_positions(s), (a, b));
        }
    }

    #[test]
    fn small_suites_pass() {
        let s = run_equiv(Simulator::Handshake, Arc::new(TokenPass), None, 8).unwrap();
        assert!(s.passed(), "{:?}", s.failures);
        assert!(s.max_colors <= 27);
        let s = run_equiv(Simulator::SimA, Arc::new(AnchorMidpoint), None, 8).unwrap();
        assert!(s.passed(), "{:?}", s.failures);
        let s = run_equiv(Simulator::Collapse(RobotModel::Fsta), Arc::new(GoToMidpoint), None, 2).unwrap();
        assert!(s.passed(), "{:?}", s.failures);
    }

    #[test]
    fn collapse_rejects_wrong_target() {
        assert!(run_equiv(Simulator::Collapse(RobotModel::Lumi), Arc::new(TokenPass), None, 1).is_err());
        assert_eq!(run_equiv(Simulator::SimA, Arc::new(TokenPass), None, 0).unwrap_err(), EquivError::NoSeeds);
    }
}
