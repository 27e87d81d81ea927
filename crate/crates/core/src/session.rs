use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::catalog::Catalog;
use crate::cbo::cost::CostParams;
use crate::error::Error;
use crate::plancache::PlanCache;

/// Optimizer configuration for the rewrite phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Cost-based rules applied by their default prediction, no planning.
    Off,
    /// Both alternatives planned from scratch.
    Naive,
    /// Both alternatives planned, intermediate plans reused.
    Cache,
    /// Guided order with upper-bound pruning and reuse.
    CacheGuess,
    /// Guided order with pruning, no reuse.
    GuessOnly,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Off, Mode::Naive, Mode::Cache, Mode::CacheGuess, Mode::GuessOnly];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Off => "off",
            Mode::Naive => "naive",
            Mode::Cache => "cache",
            Mode::CacheGuess => "cache-guess",
            Mode::GuessOnly => "guess-only",
        }
    }

    pub fn uses_cache(self) -> bool {
        matches!(self, Mode::Cache | Mode::CacheGuess)
    }

    pub fn uses_guess(self) -> bool {
        matches!(self, Mode::CacheGuess | Mode::GuessOnly)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "off" => Ok(Mode::Off),
            "naive" => Ok(Mode::Naive),
            "cache" => Ok(Mode::Cache),
            "cache-guess" => Ok(Mode::CacheGuess),
            "guess-only" | "guess" => Ok(Mode::GuessOnly),
            _ => Err(Error::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub mode: Mode,
    pub params: CostParams,
    /// Near-lossless threshold for the eager-aggregation guess.
    pub tau: f64,
    /// Take the predicted winner without planning the alternative.
    pub time_critical: bool,
    /// Build join variants for long IN lists.
    pub inlist_join: bool,
    /// Test hook: flip every prediction.
    pub invert_guesses: bool,
    /// Test hook: perturb the first reused cache entry.
    pub corrupt_cache: bool,
}

impl SessionConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            params: CostParams::default(),
            tau: 0.9,
            time_critical: false,
            inlist_join: true,
            invert_guesses: false,
            corrupt_cache: false,
        }
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self::new(Mode::Naive)
    }
}

/// Work counters. All are deterministic for a given input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub cbo_invocations: u64,
    /// Planner invocations issued by the rewrite phase.
    pub qrw_cbo_invocations: u64,
    pub paths_built: u64,
    pub cost_path_calls: u64,
    pub prune_events: u64,
}

/// State for compiling one query.
#[derive(Debug)]
pub struct OptimizerSession {
    pub catalog: Arc<Catalog>,
    pub config: SessionConfig,
    pub cache: PlanCache,
    pub counters: Counters,
    /// Best complete-plan cost seen by the guided pass.
    pub upper_bound: Option<f64>,
}

impl OptimizerSession {
    pub fn new(catalog: Arc<Catalog>, config: SessionConfig) -> Self {
        let mut cache = PlanCache::new();
        cache.corrupt_next_hit = config.corrupt_cache;
        Self {
            catalog,
            config,
            cache,
            counters: Counters::default(),
            upper_bound: None,
        }
    }

    pub fn cache_enabled(&self) -> bool {
        self.config.mode.uses_cache()
    }

    /// Lowers the session bound; never raises it.
    pub fn offer_bound(&mut self, cost: f64) {
        self.upper_bound = Some(match self.upper_bound {
            Some(b) if b <= cost => b,
            _ => cost,
        });
    }
}
