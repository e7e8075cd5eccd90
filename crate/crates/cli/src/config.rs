//! Experiment configuration.
//!
//! Configs are TOML documents with a top-level `kind` and one section
//! describing the experiment. Every key is optional except `kind`; missing
//! keys take the defaults listed in the README. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stackelberg_core::fisher::{FisherMarket, MarketRanges, UtilityKind};
use stackelberg_core::games::ExampleGame;
use stackelberg_core::losses::LossFamily;
use stackelberg_core::StepSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    StackelbergSolve,
    FisherStatic,
    FisherOnline,
    RobustnessAsym,
    RobustnessSym,
    RegretReport,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::StackelbergSolve,
        ExperimentKind::FisherStatic,
        ExperimentKind::FisherOnline,
        ExperimentKind::RobustnessAsym,
        ExperimentKind::RobustnessSym,
        ExperimentKind::RegretReport,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::StackelbergSolve => "stackelberg-solve",
            ExperimentKind::FisherStatic => "fisher-static",
            ExperimentKind::FisherOnline => "fisher-online",
            ExperimentKind::RobustnessAsym => "robustness-asym",
            ExperimentKind::RobustnessSym => "robustness-sym",
            ExperimentKind::RegretReport => "regret-report",
        }
    }

    fn section(&self) -> &'static str {
        match self {
            ExperimentKind::StackelbergSolve => "game",
            ExperimentKind::FisherStatic | ExperimentKind::FisherOnline => "market",
            ExperimentKind::RobustnessAsym | ExperimentKind::RobustnessSym => "tracking",
            ExperimentKind::RegretReport => "regret",
        }
    }

    fn default_horizon(&self) -> usize {
        match self {
            ExperimentKind::StackelbergSolve | ExperimentKind::FisherStatic | ExperimentKind::RegretReport => 10_000,
            ExperimentKind::FisherOnline => 1000,
            ExperimentKind::RobustnessAsym | ExperimentKind::RobustnessSym => 300,
        }
    }

    fn default_seeds(&self) -> Vec<u64> {
        match self {
            ExperimentKind::FisherOnline => (0..100).collect(),
            _ => vec![0],
        }
    }

    fn default_tol(&self) -> f64 {
        match self {
            ExperimentKind::FisherStatic | ExperimentKind::FisherOnline => 1e-6,
            _ => 1e-12,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem found in a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line of the offending key, when it can be located.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            if let Some(line) = issue.line {
                write!(f, "line {line}: ")?;
            }
            if issue.key.is_empty() {
                write!(f, "{}", issue.message)?;
            } else {
                write!(f, "{}: {}", issue.key, issue.message)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Every horizon is run for every seed.
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// CE tolerance for market experiments, relative bound slack otherwise.
    pub tol: f64,
    /// Directory that relative paths inside the config resolve against.
    pub base_dir: PathBuf,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    Stackelberg(StackelbergSpec),
    FisherStatic(FisherStaticSpec),
    FisherOnline(FisherOnlineSpec),
    Tracking(TrackingSpec),
    Regret(RegretSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GameName {
    G0,
    G1,
}

impl GameName {
    pub fn game(&self) -> ExampleGame {
        match self {
            GameName::G0 => ExampleGame::degenerate(),
            GameName::G1 => ExampleGame::strictly_concave(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MaxOracleMd,
    NestedMda,
    Lmda,
    VanillaGda,
}

/// A step schedule whose horizon, if it needs one, is filled in per run.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant { eta: f64 },
    FixedHorizon { c: f64, lipschitz: f64 },
    InverseSqrt { scale: f64 },
}

impl ScheduleSpec {
    pub fn at(&self, horizon: usize) -> StepSchedule {
        match *self {
            ScheduleSpec::Constant { eta } => StepSchedule::Constant(eta),
            ScheduleSpec::FixedHorizon { c, lipschitz } => StepSchedule::FixedHorizon { c, lipschitz, horizon },
            ScheduleSpec::InverseSqrt { scale } => StepSchedule::InverseSqrt(scale),
        }
    }

    fn positive(&self) -> bool {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            ScheduleSpec::Constant { eta } => ok(eta),
            ScheduleSpec::FixedHorizon { c, lipschitz } => ok(c) && ok(lipschitz),
            ScheduleSpec::InverseSqrt { scale } => ok(scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackelbergSpec {
    pub game: GameName,
    pub algorithm: Algorithm,
    pub schedule: ScheduleSpec,
    /// Inner-player schedule for nested, simultaneous and vanilla dynamics.
    pub inner_schedule: ScheduleSpec,
    pub inner_horizon: usize,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    Tatonnement,
    Myopic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec {
    pub dynamics: Dynamics,
    pub price_schedule: ScheduleSpec,
    pub allocation_schedule: ScheduleSpec,
    pub budget_projection: bool,
    pub initial_prices: Option<Vec<f64>>,
    pub price_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarketSource {
    Inline(FisherMarket),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherStaticSpec {
    pub market: MarketSource,
    pub dynamics: DynamicsSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherOnlineSpec {
    pub utility: UtilityKind,
    pub buyers: usize,
    pub goods: usize,
    pub ranges: MarketRanges,
    pub dynamics: DynamicsSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSpec {
    pub mu_x: f64,
    pub mu_y: f64,
    pub coupling: Vec<Vec<f64>>,
    pub dim_x: usize,
    pub dim_y: usize,
    pub drifts: Vec<f64>,
    /// Each step size is this fraction of `2 / (mu + L)`.
    pub step_scales: Vec<f64>,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSpec {
    pub family: LossFamily,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Utility {
    Linear,
    CobbDouglas,
    Leontief,
}

impl From<Utility> for UtilityKind {
    fn from(u: Utility) -> Self {
        match u {
            Utility::Linear => UtilityKind::Linear,
            Utility::CobbDouglas => UtilityKind::CobbDouglas,
            Utility::Leontief => UtilityKind::Leontief,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    Linear,
    Quadratic,
    Absolute,
    Experts,
}

impl From<Family> for LossFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Linear => LossFamily::Linear,
            Family::Quadratic => LossFamily::Quadratic,
            Family::Absolute => LossFamily::Absolute,
            Family::Experts => LossFamily::Experts,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    kind: ExperimentKind,
    horizon: Option<OneOrMany<i64>>,
    seeds: Option<Vec<u64>>,
    seed_count: Option<i64>,
    out_dir: Option<PathBuf>,
    tol: Option<f64>,
    schedule: Option<ScheduleSpec>,
    game: Option<RawGame>,
    market: Option<RawMarket>,
    tracking: Option<RawTracking>,
    regret: Option<RawRegret>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    name: Option<GameName>,
    algorithm: Option<Algorithm>,
    x0: Option<Vec<f64>>,
    y0: Option<Vec<f64>>,
    lambda: Option<Vec<f64>>,
    inner_horizon: Option<i64>,
    inner_schedule: Option<ScheduleSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    utility: Option<Utility>,
    dynamics: Option<Dynamics>,
    file: Option<PathBuf>,
    valuations: Option<Vec<Vec<f64>>>,
    budgets: Option<Vec<f64>>,
    supplies: Option<Vec<f64>>,
    buyers: Option<i64>,
    goods: Option<i64>,
    ranges: Option<Dynamics>,
    budget_range: Option<[f64; 2]>,
    valuation_range: Option<[f64; 2]>,
    supply_range: Option<[f64; 2]>,
    initial_prices: Option<Vec<f64>>,
    price_range: Option<[f64; 2]>,
    allocation_schedule: Option<ScheduleSpec>,
    budget_projection: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTracking {
    mu_x: Option<f64>,
    mu_y: Option<f64>,
    coupling: Option<Vec<Vec<f64>>>,
    dim_x: Option<i64>,
    dim_y: Option<i64>,
    drift: Option<OneOrMany<f64>>,
    step_scale: Option<OneOrMany<f64>>,
    x0: Option<Vec<f64>>,
    y0: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegret {
    family: Option<Family>,
    dim: Option<i64>,
}

/// Collects issues, locating each key in the source text.
struct Checker<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, section: Option<&str>, key: &str, message: impl Into<String>) {
        let line = locate(self.text, section, key);
        let key = match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        self.issues.push(ConfigIssue {
            line,
            key,
            message: message.into(),
        });
    }

    fn count(&mut self, section: Option<&str>, key: &str, value: Option<i64>, default: usize, min: i64) -> usize {
        match value {
            None => default,
            Some(v) if v >= min => v as usize,
            Some(v) => {
                self.push(section, key, format!("must be at least {min}, got {v}"));
                default
            }
        }
    }

    fn positive(&mut self, section: Option<&str>, key: &str, value: f64) {
        if !(value > 0.0 && value.is_finite()) {
            self.push(section, key, format!("must be positive, got {value}"));
        }
    }

    fn schedule(&mut self, section: Option<&str>, key: &str, s: &ScheduleSpec) {
        if !s.positive() {
            self.push(section, key, "schedule constants must be positive");
        }
    }

    fn range(&mut self, section: Option<&str>, key: &str, r: [f64; 2]) -> (f64, f64) {
        if !(r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite()) {
            self.push(section, key, format!("range [{}, {}] must satisfy 0 < lo <= hi", r[0], r[1]));
        }
        (r[0], r[1])
    }

    fn dim(&mut self, section: Option<&str>, key: &str, v: &[f64], expected: usize) {
        if v.len() != expected {
            self.push(section, key, format!("expected {expected} entries, got {}", v.len()));
        }
    }
}

/// 1-based line of `key = ...` inside `[section]` (or the root table).
fn locate(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (k, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.trim_start_matches('[').split(']').next().unwrap_or("").trim();
            current = Some(name.to_string());
            if section == Some(name) && key.is_empty() {
                return Some(k + 1);
            }
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        if let Some((lhs, _)) = trimmed.split_once('=') {
            if lhs.trim().trim_matches('"') == key {
                return Some(k + 1);
            }
        }
    }
    None
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a config. Relative paths resolve against the
/// current directory; use [`load_config`] to resolve against the file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: Raw = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        ConfigError {
            issues: vec![ConfigIssue {
                line,
                key: String::new(),
                message: e.message().trim().to_string(),
            }],
        }
    })?;
    let mut ck = Checker {
        text,
        issues: Vec::new(),
    };
    let config = build(raw, &mut ck);
    if ck.issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { issues: ck.issues })
    }
}

/// Reads a config file; relative paths inside it resolve against its
/// directory.
pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let mut config = parse_config(&text).map_err(|e| anyhow::anyhow!("{}:\n{e}", path.display()))?;
    config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(config)
}

fn build(raw: Raw, ck: &mut Checker) -> ExperimentConfig {
    let kind = raw.kind;
    let own = kind.section();
    for (name, present) in [
        ("game", raw.game.is_some()),
        ("market", raw.market.is_some()),
        ("tracking", raw.tracking.is_some()),
        ("regret", raw.regret.is_some()),
    ] {
        if present && name != own {
            ck.push(Some(name), "", format!("section [{name}] does not apply to {kind}"));
        }
    }
    let uses_schedule = matches!(
        kind,
        ExperimentKind::StackelbergSolve | ExperimentKind::FisherStatic | ExperimentKind::FisherOnline
    );
    if raw.schedule.is_some() && !uses_schedule {
        ck.push(None, "schedule", format!("{kind} derives its step sizes and takes no schedule"));
    }
    if let Some(s) = &raw.schedule {
        ck.schedule(None, "schedule", s);
    }

    let horizons: Vec<usize> = match raw.horizon {
        None => vec![kind.default_horizon()],
        Some(h) => {
            let h = h.into_vec();
            if h.is_empty() {
                ck.push(None, "horizon", "needs at least one value");
            }
            h.into_iter().map(|v| ck.count(None, "horizon", Some(v), 1, 1)).collect()
        }
    };
    let seeds = match (raw.seeds, raw.seed_count) {
        (Some(_), Some(_)) => {
            ck.push(None, "seed_count", "give either seeds or seed_count, not both");
            kind.default_seeds()
        }
        (Some(s), None) => {
            if s.is_empty() {
                ck.push(None, "seeds", "needs at least one seed");
            }
            s
        }
        (None, Some(n)) => (0..ck.count(None, "seed_count", Some(n), 1, 1) as u64).collect(),
        (None, None) => kind.default_seeds(),
    };
    if raw.tol.is_some() && matches!(kind, ExperimentKind::RobustnessAsym | ExperimentKind::RobustnessSym) {
        ck.push(None, "tol", "tracking bounds are checked with the library's fixed relative slack");
    }
    let tol = raw.tol.unwrap_or(kind.default_tol());
    if !(tol >= 0.0 && tol.is_finite()) {
        ck.push(None, "tol", format!("must be a nonnegative number, got {tol}"));
    }
    let out_dir = raw.out_dir.unwrap_or_else(|| PathBuf::from("out").join(kind.name()));

    let spec = match kind {
        ExperimentKind::StackelbergSolve => {
            ExperimentSpec::Stackelberg(stackelberg(raw.game.unwrap_or_default(), raw.schedule, ck))
        }
        ExperimentKind::FisherStatic => {
            let m = raw.market.unwrap_or_default();
            let dynamics = dynamics(&m, raw.schedule, ck);
            ExperimentSpec::FisherStatic(FisherStaticSpec {
                market: static_market(m, ck),
                dynamics,
            })
        }
        ExperimentKind::FisherOnline => ExperimentSpec::FisherOnline(online_market(raw.market.unwrap_or_default(), raw.schedule, ck)),
        ExperimentKind::RobustnessAsym | ExperimentKind::RobustnessSym => {
            ExperimentSpec::Tracking(tracking(raw.tracking.unwrap_or_default(), ck))
        }
        ExperimentKind::RegretReport => {
            let r = raw.regret.unwrap_or_default();
            let family: LossFamily = r.family.unwrap_or(Family::Linear).into();
            let min = if family == LossFamily::Experts { 4 } else { 1 };
            let dim = ck.count(Some("regret"), "dim", r.dim, 4, min);
            ExperimentSpec::Regret(RegretSpec { family, dim })
        }
    };

    ExperimentConfig {
        kind,
        horizons,
        seeds,
        out_dir,
        tol,
        base_dir: PathBuf::new(),
        spec,
    }
}

fn stackelberg(g: RawGame, schedule: Option<ScheduleSpec>, ck: &mut Checker) -> StackelbergSpec {
    let sec = Some("game");
    let name = g.name.unwrap_or(GameName::G0);
    let game = name.game();
    let default_schedule = match name {
        GameName::G0 => ScheduleSpec::FixedHorizon { c: 1.0, lipschitz: 3.0 },
        GameName::G1 => ScheduleSpec::FixedHorizon {
            c: game.radius(),
            lipschitz: game.lagrangian_lipschitz(),
        },
    };
    let schedule = schedule.unwrap_or(default_schedule);
    let inner_schedule = g.inner_schedule.unwrap_or(schedule);
    ck.schedule(sec, "inner_schedule", &inner_schedule);
    let x0 = g.x0.unwrap_or_else(|| vec![1.0]);
    let y0 = g.y0.unwrap_or_else(|| vec![0.0]);
    let lambda = g.lambda.unwrap_or_else(|| vec![game.lambda_star()]);
    ck.dim(sec, "x0", &x0, 1);
    ck.dim(sec, "y0", &y0, 1);
    ck.dim(sec, "lambda", &lambda, 1);
    for (key, v) in [("x0", &x0), ("y0", &y0)] {
        if v.iter().any(|a| !(-1.0..=1.0).contains(a)) {
            ck.push(sec, key, "must lie in [-1, 1]");
        }
    }
    if lambda.iter().any(|l| !(*l >= 0.0)) {
        ck.push(sec, "lambda", "multipliers must be nonnegative");
    }
    StackelbergSpec {
        game: name,
        algorithm: g.algorithm.unwrap_or(Algorithm::MaxOracleMd),
        schedule,
        inner_schedule,
        inner_horizon: ck.count(sec, "inner_horizon", g.inner_horizon, 100, 0),
        x0,
        y0,
        lambda,
    }
}

fn dynamics(m: &RawMarket, schedule: Option<ScheduleSpec>, ck: &mut Checker) -> DynamicsSpec {
    let sec = Some("market");
    let dynamics = m.dynamics.unwrap_or(Dynamics::Tatonnement);
    let price_schedule = schedule.unwrap_or(match dynamics {
        Dynamics::Tatonnement => ScheduleSpec::InverseSqrt { scale: 1.0 },
        Dynamics::Myopic => ScheduleSpec::InverseSqrt { scale: 5.0 },
    });
    let allocation_schedule = m.allocation_schedule.unwrap_or(ScheduleSpec::InverseSqrt { scale: 0.01 });
    ck.schedule(sec, "allocation_schedule", &allocation_schedule);
    if dynamics == Dynamics::Tatonnement {
        if m.allocation_schedule.is_some() {
            ck.push(sec, "allocation_schedule", "only applies to myopic dynamics");
        }
        if m.budget_projection.is_some() {
            ck.push(sec, "budget_projection", "only applies to myopic dynamics");
        }
    }
    let price_range = ck.range(sec, "price_range", m.price_range.unwrap_or([5.0, 55.0]));
    if let Some(p) = &m.initial_prices {
        if p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            ck.push(sec, "initial_prices", "prices must be nonnegative");
        }
    }
    DynamicsSpec {
        dynamics,
        price_schedule,
        allocation_schedule,
        budget_projection: m.budget_projection.unwrap_or(false),
        initial_prices: m.initial_prices.clone(),
        price_range,
    }
}

fn reject(ck: &mut Checker, present: bool, key: &str, why: &str) {
    if present {
        ck.push(Some("market"), key, why.to_string());
    }
}

fn static_market(m: RawMarket, ck: &mut Checker) -> MarketSource {
    let sec = Some("market");
    let online_only = "only applies to fisher-online";
    reject(ck, m.buyers.is_some(), "buyers", online_only);
    reject(ck, m.goods.is_some(), "goods", online_only);
    reject(ck, m.ranges.is_some(), "ranges", online_only);
    reject(ck, m.budget_range.is_some(), "budget_range", online_only);
    reject(ck, m.valuation_range.is_some(), "valuation_range", online_only);
    reject(ck, m.supply_range.is_some(), "supply_range", online_only);
    let inline = m.valuations.is_some() || m.budgets.is_some() || m.supplies.is_some();
    let utility: UtilityKind = m.utility.unwrap_or(Utility::CobbDouglas).into();
    if let Some(file) = m.file {
        if inline {
            ck.push(sec, "file", "give either a market file or inline valuations, budgets and supplies");
        }
        if m.utility.is_some() {
            ck.push(sec, "utility", "the market file names its utility kind");
        }
        return MarketSource::File(file);
    }
    let (valuations, budgets, supplies) = match (m.valuations, m.budgets, m.supplies) {
        (None, None, None) => (vec![vec![0.5, 0.5], vec![0.75, 0.25]], vec![1.0, 2.0], vec![1.0, 1.0]),
        (Some(v), Some(b), Some(s)) => (v, b, s),
        _ => {
            ck.push(sec, "valuations", "inline markets need valuations, budgets and supplies together");
            return MarketSource::File(PathBuf::new());
        }
    };
    match FisherMarket::new(utility, valuations, budgets, supplies) {
        Ok(market) => {
            if let Some(p) = &m.initial_prices {
                ck.dim(sec, "initial_prices", p, market.goods());
            }
            MarketSource::Inline(market)
        }
        Err(e) => {
            ck.push(sec, "valuations", e.to_string());
            MarketSource::File(PathBuf::new())
        }
    }
}

fn online_market(m: RawMarket, schedule: Option<ScheduleSpec>, ck: &mut Checker) -> FisherOnlineSpec {
    let sec = Some("market");
    let static_only = "only applies to fisher-static";
    reject(ck, m.file.is_some(), "file", static_only);
    reject(ck, m.valuations.is_some(), "valuations", static_only);
    reject(ck, m.budgets.is_some(), "budgets", static_only);
    reject(ck, m.supplies.is_some(), "supplies", static_only);
    let dynamics = dynamics(&m, schedule, ck);
    let preset = match m.ranges.unwrap_or(dynamics.dynamics) {
        Dynamics::Tatonnement => MarketRanges::TATONNEMENT,
        Dynamics::Myopic => MarketRanges::MYOPIC,
    };
    let ranges = MarketRanges {
        budget: m.budget_range.map(|r| ck.range(sec, "budget_range", r)).unwrap_or(preset.budget),
        valuation: m.valuation_range.map(|r| ck.range(sec, "valuation_range", r)).unwrap_or(preset.valuation),
        supply: m.supply_range.map(|r| ck.range(sec, "supply_range", r)).unwrap_or(preset.supply),
    };
    let goods = ck.count(sec, "goods", m.goods, 8, 1);
    if let Some(p) = &dynamics.initial_prices {
        ck.dim(sec, "initial_prices", p, goods);
    }
    FisherOnlineSpec {
        utility: m.utility.unwrap_or(Utility::Linear).into(),
        buyers: ck.count(sec, "buyers", m.buyers, 5, 1),
        goods,
        ranges,
        dynamics,
    }
}

fn tracking(t: RawTracking, ck: &mut Checker) -> TrackingSpec {
    let sec = Some("tracking");
    let mu_x = t.mu_x.unwrap_or(1.0);
    let mu_y = t.mu_y.unwrap_or(1.0);
    ck.positive(sec, "mu_x", mu_x);
    ck.positive(sec, "mu_y", mu_y);
    let dim_x = ck.count(sec, "dim_x", t.dim_x, 3, 1);
    let dim_y = ck.count(sec, "dim_y", t.dim_y, 3, 1);
    let coupling = t.coupling.unwrap_or_else(|| vec![vec![0.0; dim_y]; dim_x]);
    if coupling.len() != dim_x || coupling.iter().any(|r| r.len() != dim_y) {
        ck.push(sec, "coupling", format!("must be a {dim_x} x {dim_y} matrix"));
    }
    let drifts = t.drift.map(OneOrMany::into_vec).unwrap_or_else(|| vec![0.1]);
    if drifts.is_empty() || drifts.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        ck.push(sec, "drift", "needs nonnegative values");
    }
    let step_scales = t.step_scale.map(OneOrMany::into_vec).unwrap_or_else(|| vec![1.0]);
    if step_scales.is_empty() || step_scales.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        ck.push(sec, "step_scale", "needs values in (0, 1]");
    }
    let x0 = t.x0.unwrap_or_else(|| vec![0.0; dim_x]);
    let y0 = t.y0.unwrap_or_else(|| vec![0.0; dim_y]);
    ck.dim(sec, "x0", &x0, dim_x);
    ck.dim(sec, "y0", &y0, dim_y);
    TrackingSpec {
        mu_x,
        mu_y,
        coupling,
        dim_x,
        dim_y,
        drifts,
        step_scales,
        x0,
        y0,
    }
}
