//! Signal controllers: urgency-function policies and the classical baselines.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract, FEATURE_LEN};
use crate::gp::tree::{ExprTree, ParseError};
use crate::network::{Intersection, Phase, SAME_TYPE_PHASES, MOVEMENTS_PER_INTERSECTION, PHASE_COUNT};
use crate::sim::{Controller, Observation};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("bad tree: {0}")]
    Tree(#[from] ParseError),
    #[error("tree uses terminal index {used} but {mode} mode allows only {allowed}")]
    Terminals { used: u8, allowed: u8, mode: PolicyMode },
    #[error("bad policy file: {0}")]
    File(String),
    #[error("unknown policy mode {0:?} (expected symmetric or asymmetric)")]
    Mode(String),
    #[error("unknown baseline {0:?} (expected random, fixed or maxpressure)")]
    Baseline(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// One shared movement-urgency tree, summed over the phase's movements.
    Symmetric,
    /// One tree over both movements' features in phase-tuple order.
    Asymmetric,
}

impl PolicyMode {
    /// Terminals available to a tree in this mode.
    pub fn n_vars(self) -> u8 {
        match self {
            PolicyMode::Symmetric => FEATURE_LEN as u8,
            PolicyMode::Asymmetric => 2 * FEATURE_LEN as u8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyMode::Symmetric => "symmetric",
            PolicyMode::Asymmetric => "asymmetric",
        }
    }
}

impl fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyMode {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symmetric" => Ok(PolicyMode::Symmetric),
            "asymmetric" => Ok(PolicyMode::Asymmetric),
            other => Err(PolicyError::Mode(other.to_string())),
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Phase urgency as the sum of one shared movement-urgency tree applied to
/// each movement, so exchanging the movements cannot change the result.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricUrgencyPolicy {
    tm_tree: ExprTree,
}

impl SymmetricUrgencyPolicy {
    pub fn new(tm_tree: ExprTree) -> Result<Self, PolicyError> {
        check_terminals(&tm_tree, PolicyMode::Symmetric)?;
        Ok(SymmetricUrgencyPolicy { tm_tree })
    }

    pub fn tree(&self) -> &ExprTree {
        &self.tm_tree
    }

    pub fn phase_urgency(&self, inter: &Intersection, obs: &Observation, phase: &Phase) -> f64 {
        phase
            .movements
            .iter()
            .map(|&m| {
                let fv = extract(obs, inter.movement(m)).expect("observation belongs to the intersection");
                self.tm_tree.eval(fv.as_slice())
            })
            .sum()
    }

    pub fn choose_phase(&self, inter: &Intersection, obs: &Observation) -> usize {
        // every controlled movement appears in two phases; score each once
        let mut tmu = [0.0; MOVEMENTS_PER_INTERSECTION];
        for m in inter.movements.iter().filter(|m| m.is_signal_controlled()) {
            let fv = extract(obs, m).expect("observation belongs to the intersection");
            tmu[m.id.index() % MOVEMENTS_PER_INTERSECTION] = self.tm_tree.eval(fv.as_slice());
        }
        let urgencies: [f64; PHASE_COUNT] = std::array::from_fn(|p| {
            let [a, b] = inter.phases[p].movements;
            tmu[a.index() % MOVEMENTS_PER_INTERSECTION] + tmu[b.index() % MOVEMENTS_PER_INTERSECTION]
        });
        argmax(&urgencies)
    }
}

/// Phase urgency from one tree over the concatenated feature vectors of the
/// phase's movements, taken in tuple order.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetricUrgencyPolicy {
    phase_tree: ExprTree,
}

impl AsymmetricUrgencyPolicy {
    pub fn new(phase_tree: ExprTree) -> Result<Self, PolicyError> {
        check_terminals(&phase_tree, PolicyMode::Asymmetric)?;
        Ok(AsymmetricUrgencyPolicy { phase_tree })
    }

    pub fn tree(&self) -> &ExprTree {
        &self.phase_tree
    }

    pub fn phase_urgency(&self, inter: &Intersection, obs: &Observation, phase: &Phase) -> f64 {
        let mut x = [0.0; 2 * FEATURE_LEN];
        for (k, &m) in phase.movements.iter().enumerate() {
            let fv = extract(obs, inter.movement(m)).expect("observation belongs to the intersection");
            x[k * FEATURE_LEN..(k + 1) * FEATURE_LEN].copy_from_slice(fv.as_slice());
        }
        self.phase_tree.eval(&x)
    }

    pub fn choose_phase(&self, inter: &Intersection, obs: &Observation) -> usize {
        let urgencies: [f64; PHASE_COUNT] = std::array::from_fn(|p| self.phase_urgency(inter, obs, &inter.phases[p]));
        argmax(&urgencies)
    }
}

fn check_terminals(tree: &ExprTree, mode: PolicyMode) -> Result<(), PolicyError> {
    match tree.max_var() {
        Some(v) if v >= mode.n_vars() => Err(PolicyError::Terminals {
            used: v,
            allowed: mode.n_vars(),
            mode,
        }),
        _ => Ok(()),
    }
}

/// An evolved urgency function in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum UrgencyPolicy {
    Symmetric(SymmetricUrgencyPolicy),
    Asymmetric(AsymmetricUrgencyPolicy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PolicyFile {
    mode: PolicyMode,
    tree: String,
}

impl UrgencyPolicy {
    pub fn new(mode: PolicyMode, tree: ExprTree) -> Result<UrgencyPolicy, PolicyError> {
        Ok(match mode {
            PolicyMode::Symmetric => UrgencyPolicy::Symmetric(SymmetricUrgencyPolicy::new(tree)?),
            PolicyMode::Asymmetric => UrgencyPolicy::Asymmetric(AsymmetricUrgencyPolicy::new(tree)?),
        })
    }

    pub fn mode(&self) -> PolicyMode {
        match self {
            UrgencyPolicy::Symmetric(_) => PolicyMode::Symmetric,
            UrgencyPolicy::Asymmetric(_) => PolicyMode::Asymmetric,
        }
    }

    pub fn tree(&self) -> &ExprTree {
        match self {
            UrgencyPolicy::Symmetric(p) => p.tree(),
            UrgencyPolicy::Asymmetric(p) => p.tree(),
        }
    }

    pub fn phase_urgency(&self, inter: &Intersection, obs: &Observation, phase: &Phase) -> f64 {
        match self {
            UrgencyPolicy::Symmetric(p) => p.phase_urgency(inter, obs, phase),
            UrgencyPolicy::Asymmetric(p) => p.phase_urgency(inter, obs, phase),
        }
    }

    pub fn choose(&self, inter: &Intersection, obs: &Observation) -> usize {
        match self {
            UrgencyPolicy::Symmetric(p) => p.choose_phase(inter, obs),
            UrgencyPolicy::Asymmetric(p) => p.choose_phase(inter, obs),
        }
    }

    /// Policy file text: a TOML document with `mode` and `tree` keys.
    pub fn to_file_string(&self) -> String {
        let file = PolicyFile {
            mode: self.mode(),
            tree: self.tree().to_sexpr(),
        };
        toml::to_string(&file).expect("policy serialization cannot fail")
    }

    pub fn from_file_string(text: &str) -> Result<UrgencyPolicy, PolicyError> {
        let file: PolicyFile = toml::from_str(text).map_err(|e| PolicyError::File(e.to_string()))?;
        UrgencyPolicy::new(file.mode, ExprTree::parse(&file.tree)?)
    }
}

impl Controller for UrgencyPolicy {
    fn name(&self) -> &str {
        match self {
            UrgencyPolicy::Symmetric(_) => "symmetric-urgency",
            UrgencyPolicy::Asymmetric(_) => "asymmetric-urgency",
        }
    }

    fn choose_phase(&mut self, inter: &Intersection, obs: &Observation) -> usize {
        self.choose(inter, obs)
    }
}

/// Phase with the largest summed movement pressure, where a movement's
/// pressure is its incoming vehicle count minus the mean count over the
/// outgoing road's lanes.
pub fn max_pressure_choose(inter: &Intersection, obs: &Observation) -> usize {
    let pressures: [f64; PHASE_COUNT] = std::array::from_fn(|p| {
        inter.phase_movements(p)
            .iter()
            .map(|m| {
                let fv = extract(obs, m).expect("observation belongs to the intersection");
                let c = fv.count();
                c[0] - (c[1] + c[2] + c[3]) / 3.0
            })
            .sum()
    });
    argmax(&pressures)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MaxPressure;

impl Controller for MaxPressure {
    fn name(&self) -> &str {
        "maxpressure"
    }

    fn choose_phase(&mut self, inter: &Intersection, obs: &Observation) -> usize {
        max_pressure_choose(inter, obs)
    }
}

/// Phase at `position` of a repeating cycle.
pub fn fixed_time_choose(cycle: &[usize], position: usize) -> usize {
    cycle[position % cycle.len()]
}

/// Fixed cycle: each intersection advances one cycle position every time it
/// may switch, giving every phase the minimum green.
#[derive(Debug, Clone)]
pub struct FixedTime {
    cycle: Vec<usize>,
    positions: Vec<usize>,
}

/// East-west through, north-south through, east-west left, north-south left.
pub const DEFAULT_CYCLE: [usize; 4] = [
    SAME_TYPE_PHASES[0],
    SAME_TYPE_PHASES[2],
    SAME_TYPE_PHASES[1],
    SAME_TYPE_PHASES[3],
];

impl FixedTime {
    pub fn new(cycle: Vec<usize>) -> FixedTime {
        assert!(!cycle.is_empty() && cycle.iter().all(|&p| p < PHASE_COUNT));
        FixedTime {
            cycle,
            positions: Vec::new(),
        }
    }

    pub fn cycle(&self) -> &[usize] {
        &self.cycle
    }
}

impl Default for FixedTime {
    fn default() -> Self {
        FixedTime::new(DEFAULT_CYCLE.to_vec())
    }
}

impl Controller for FixedTime {
    fn name(&self) -> &str {
        "fixed"
    }

    fn initial_phase(&mut self, _: &Intersection, index: usize) -> usize {
        if self.positions.len() <= index {
            self.positions.resize(index + 1, 0);
        }
        self.positions[index] = 0;
        fixed_time_choose(&self.cycle, 0)
    }

    fn choose_phase(&mut self, _: &Intersection, obs: &Observation) -> usize {
        let pos = &mut self.positions[obs.intersection];
        *pos += 1;
        fixed_time_choose(&self.cycle, *pos)
    }
}

pub fn random_choose<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..PHASE_COUNT)
}

/// Uniformly random phase at every opportunity to switch.
#[derive(Debug, Clone)]
pub struct RandomPhase {
    rng: ChaCha8Rng,
}

impl RandomPhase {
    pub fn new(seed: u64) -> RandomPhase {
        RandomPhase {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for RandomPhase {
    fn name(&self) -> &str {
        "random"
    }

    fn initial_phase(&mut self, _: &Intersection, _: usize) -> usize {
        random_choose(&mut self.rng)
    }

    fn choose_phase(&mut self, _: &Intersection, _: &Observation) -> usize {
        random_choose(&mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Random,
    Fixed,
    MaxPressure,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Random, Baseline::Fixed, Baseline::MaxPressure];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Random => "random",
            Baseline::Fixed => "fixed",
            Baseline::MaxPressure => "maxpressure",
        }
    }

    /// Fresh controller for one episode.
    pub fn controller(self, seed: u64) -> Box<dyn Controller> {
        match self {
            Baseline::Random => Box::new(RandomPhase::new(seed)),
            Baseline::Fixed => Box::new(FixedTime::default()),
            Baseline::MaxPressure => Box::new(MaxPressure),
        }
    }
}

impl FromStr for Baseline {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Baseline::Random),
            "fixed" | "fixed-time" | "fixedtime" => Ok(Baseline::Fixed),
            "maxpressure" | "max-pressure" => Ok(Baseline::MaxPressure),
            other => Err(PolicyError::Baseline(other.to_string())),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
