//! Experiment orchestration: resolved TOML configs with full echo-back,
//! deterministic runs producing CSV artifacts (throughput samples, per-cell
//! loads, convergence curves), and cross-run summary comparison.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, NetworkEnv, TickLog};
use crate::error::CoreError;
use crate::geom::Point;
use crate::pdpg::{self, weights_from_lambda, AgentMode, PdpgAgent, PdpgConfig, PeriodLog};
use crate::rsrp::{generate_map, MapGenConfig, RsrpTensor, TiltDictionary};
use crate::seed;
use crate::staticopt::{self, fair_threshold, StaticSolver, TiltComboSet};

const THROUGHPUT_SCHEMA: &str = "# schema: throughput-samples v1";
const LOAD_SCHEMA: &str = "# schema: cell-load-samples v1";
const CONVERGENCE_SCHEMA: &str = "# schema: convergence v1";

/// Where the RSRP tensor comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MapSpec {
    /// Synthesize on the fly; the generator seed is re-derived from the
    /// master seed, so the field in this section is ignored and echoed back
    /// resolved.
    Generate {
        #[serde(flatten)]
        gen: MapGenConfig,
        bs_positions: Vec<Point>,
    },
    File { path: String },
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec::Generate {
            gen: MapGenConfig::default(),
            bs_positions: vec![
                Point::new(100.0, 100.0),
                Point::new(300.0, 100.0),
                Point::new(100.0, 300.0),
                Point::new(300.0, 300.0),
            ],
        }
    }
}

/// RL hyperparameters as they appear in the config file; network dimensions
/// are always derived from the environment section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentHypers {
    pub gamma: f64,
    pub tau: f64,
    /// Tradeoff parameter; resolved to two-objective weights when no
    /// explicit weights are given.
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub exploration_sigma_initial: f64,
    pub exploration_decay_step: u64,
    pub exploration_sigma_final: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for AgentHypers {
    fn default() -> Self {
        let p = PdpgConfig::default();
        AgentHypers {
            gamma: p.gamma,
            tau: p.tau,
            lambda: 1.0,
            weights: None,
            exploration_sigma_initial: p.exploration_sigma_initial,
            exploration_decay_step: p.exploration_decay_step,
            exploration_sigma_final: p.exploration_sigma_final,
            batch_size: p.batch_size,
            buffer_capacity: p.buffer_capacity,
            actor_hidden: p.actor_hidden,
            critic_hidden: p.critic_hidden,
            actor_lr: p.actor_lr,
            critic_lr: p.critic_lr,
        }
    }
}

fn resolve_weights(
    weights: &Option<Vec<f64>>,
    lambda: f64,
    reward_dims: usize,
) -> Result<Vec<f64>, CoreError> {
    match weights {
        Some(w) => {
            if w.len() != reward_dims {
                return Err(CoreError::Config(format!(
                    "{} weights given for {} reward dimensions",
                    w.len(),
                    reward_dims
                )));
            }
            Ok(w.clone())
        }
        None => {
            if reward_dims != 2 {
                return Err(CoreError::Config(format!(
                    "lambda shorthand only defines two-objective weights; \
                     set weights explicitly for {reward_dims} reward dimensions"
                )));
            }
            if lambda < 0.0 {
                return Err(CoreError::Config(format!("lambda = {lambda} must be >= 0")));
            }
            Ok(weights_from_lambda(lambda).to_vec())
        }
    }
}

impl AgentHypers {
    fn to_pdpg_config(&self, env: &EnvConfig, mode: AgentMode) -> Result<PdpgConfig, CoreError> {
        let cfg = PdpgConfig {
            state_dim: env.state_dim(),
            action_dim: env.action_dim(),
            reward_dims: env.reward_dims,
            mode,
            gamma: self.gamma,
            tau: self.tau,
            weights: resolve_weights(&self.weights, self.lambda, env.reward_dims)?,
            exploration_sigma_initial: self.exploration_sigma_initial,
            exploration_decay_step: self.exploration_decay_step,
            exploration_sigma_final: self.exploration_sigma_final,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            actor_hidden: self.actor_hidden.clone(),
            critic_hidden: self.critic_hidden.clone(),
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Knobs of the periodic static benchmark policies. `phi` is the per-cell
/// minimum-throughput filter; set it negative to disable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticPolicyCfg {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Greedy-branch probability of the fair solver; defaults to
    /// lambda / (1 + lambda).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    pub reps: usize,
    pub phi: f64,
    pub combos: TiltComboSet,
}

impl Default for StaticPolicyCfg {
    fn default() -> Self {
        StaticPolicyCfg {
            lambda: 1.0,
            weights: None,
            w: None,
            reps: 16,
            phi: 0.0,
            combos: TiltComboSet::SameForAll,
        }
    }
}

/// As `StaticPolicyCfg` but for the exhaustive solver: explicit enumeration
/// cap and re-solve cadence. Tiny scenarios only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticExactCfg {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub phi: f64,
    pub cap: u64,
    pub resolve_every_ticks: usize,
    pub combos: TiltComboSet,
}

impl Default for StaticExactCfg {
    fn default() -> Self {
        StaticExactCfg {
            lambda: 1.0,
            weights: None,
            phi: 0.0,
            cap: 10_000_000,
            resolve_every_ticks: 1,
            combos: TiltComboSet::SameForAll,
        }
    }
}

/// Which policy an experiment runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AgentSpec {
    /// Vector reward, one critic per objective.
    #[serde(rename = "pdpg")]
    Pdpg(AgentHypers),
    /// Scalarized reward, single critic: the DDPG baseline family.
    #[serde(rename = "ddpg-scalar")]
    DdpgScalar(AgentHypers),
    /// Greedy round-robin solver re-run once per action period.
    #[serde(rename = "static-1")]
    Static1(StaticPolicyCfg),
    /// Coin-flip fair solver re-run once per action period.
    #[serde(rename = "static-2")]
    Static2(StaticPolicyCfg),
    /// Coin-flip fair solver re-run every tick.
    #[serde(rename = "static-3")]
    Static3(StaticPolicyCfg),
    /// Exhaustive solver at an explicit cadence.
    #[serde(rename = "static-exact")]
    StaticExact(StaticExactCfg),
}

impl Default for AgentSpec {
    fn default() -> Self {
        AgentSpec::Pdpg(AgentHypers::default())
    }
}

impl AgentSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AgentSpec::Pdpg(_) => "pdpg",
            AgentSpec::DdpgScalar(_) => "ddpg-scalar",
            AgentSpec::Static1(_) => "static-1",
            AgentSpec::Static2(_) => "static-2",
            AgentSpec::Static3(_) => "static-3",
            AgentSpec::StaticExact(_) => "static-exact",
        }
    }

    pub fn rl_mode(&self) -> Option<AgentMode> {
        match self {
            AgentSpec::Pdpg(_) => Some(AgentMode::Vector),
            AgentSpec::DdpgScalar(_) => Some(AgentMode::Scalar),
            _ => None,
        }
    }

    /// Weights used for the scalarized log column, validated against the
    /// reward dimensionality before any simulation starts.
    fn log_weights(&self, reward_dims: usize) -> Result<Vec<f64>, CoreError> {
        match self {
            AgentSpec::Pdpg(h) | AgentSpec::DdpgScalar(h) => {
                resolve_weights(&h.weights, h.lambda, reward_dims)
            }
            AgentSpec::Static1(s) | AgentSpec::Static2(s) | AgentSpec::Static3(s) => {
                resolve_weights(&s.weights, s.lambda, reward_dims)
            }
            AgentSpec::StaticExact(s) => resolve_weights(&s.weights, s.lambda, reward_dims),
        }
    }
}

/// A fully resolved experiment: scenario, map source, policy, horizon and
/// sampling. Serializes back to TOML with every default materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Simulated wall-clock length in model days.
    pub horizon_days: f64,
    /// Throughput/load sampling cadence in model minutes.
    pub sample_interval_minutes: f64,
    /// Moving-average window (in periods) for the convergence curve.
    pub moving_average_window: usize,
    pub output_dir: String,
    pub env: EnvConfig,
    pub map: MapSpec,
    pub agent: AgentSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 1,
            horizon_days: 200.0,
            sample_interval_minutes: 15.0,
            moving_average_window: 96,
            output_dir: "run-out".into(),
            env: EnvConfig::default(),
            map: MapSpec::default(),
            agent: AgentSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CoreError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CoreError::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CoreError> {
        let text =
            fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CoreError> {
        toml::to_string_pretty(self)
            .map_err(|e| CoreError::Config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        self.env.validate()?;
        if !(self.horizon_days > 0.0) {
            return Err(CoreError::Config(format!(
                "horizon_days = {} must be positive",
                self.horizon_days
            )));
        }
        if !(self.sample_interval_minutes > 0.0) {
            return Err(CoreError::Config(format!(
                "sample_interval_minutes = {} must be positive",
                self.sample_interval_minutes
            )));
        }
        if self.moving_average_window == 0 {
            return Err(CoreError::Config("moving_average_window must be >= 1".into()));
        }
        let tick_s = self.env.mobility.tick_seconds;
        let stride = self.sample_interval_minutes * 60.0 / tick_s;
        if stride < 0.5 || (stride - stride.round()).abs() > 1e-9 {
            return Err(CoreError::Config(format!(
                "sample interval of {} min is not a whole number of {} s ticks",
                self.sample_interval_minutes, tick_s
            )));
        }
        if self.total_periods() == 0 {
            return Err(CoreError::Config(format!(
                "horizon of {} days is shorter than one {}-tick action period",
                self.horizon_days, self.env.action_period_ticks
            )));
        }
        // agent/reward consistency fails here, before any simulation
        self.agent.log_weights(self.env.reward_dims)?;
        if let AgentSpec::Static2(s) | AgentSpec::Static3(s) = &self.agent {
            if let Some(w) = s.w {
                if !(0.0..=1.0).contains(&w) {
                    return Err(CoreError::Config(format!("w = {w} outside [0, 1]")));
                }
            }
            if s.reps == 0 {
                return Err(CoreError::Config("reps must be >= 1".into()));
            }
        }
        if let AgentSpec::StaticExact(s) = &self.agent {
            if s.resolve_every_ticks == 0 {
                return Err(CoreError::Config("resolve_every_ticks must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Sampling cadence in ticks (>= 1).
    pub fn sample_stride_ticks(&self) -> u64 {
        (self.sample_interval_minutes * 60.0 / self.env.mobility.tick_seconds).round() as u64
    }

    pub fn total_ticks(&self) -> u64 {
        (self.horizon_days * 86_400.0 / self.env.mobility.tick_seconds).round() as u64
    }

    /// Whole action periods in the horizon; leftover ticks are dropped.
    pub fn total_periods(&self) -> u64 {
        self.total_ticks() / self.env.action_period_ticks as u64
    }

    /// The config a run actually executes and echoes: generator-map seeds
    /// are re-derived from the master seed ("map" substream).
    pub fn resolved(&self) -> ExperimentConfig {
        let mut cfg = self.clone();
        if let MapSpec::Generate { gen, .. } = &mut cfg.map {
            gen.rng_seed = seed::substream_seed(cfg.master_seed, "map");
        }
        cfg
    }

    /// Load or synthesize the RSRP tensor and check it fits the scenario.
    pub fn build_map(&self) -> Result<RsrpTensor, CoreError> {
        let resolved = self.resolved();
        let map = match &resolved.map {
            MapSpec::Generate { gen, bs_positions } => {
                generate_map(gen, &TiltDictionary::default_eleven(), bs_positions)?
            }
            MapSpec::File { path } => RsrpTensor::load_map(Path::new(path))?,
        };
        if map.num_bs() != self.env.num_cells {
            return Err(CoreError::schema(
                format!("map with {} base stations", self.env.num_cells),
                format!("{} base stations", map.num_bs()),
            ));
        }
        Ok(map)
    }
}

/// Paths of everything one run wrote, plus the in-memory period log.
#[derive(Debug)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub config_echo: PathBuf,
    pub throughput_samples: PathBuf,
    pub cell_load_samples: PathBuf,
    pub convergence: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub solver_stats: Option<PathBuf>,
    pub periods: Vec<PeriodLog>,
}

/// Execute the configured policy over the whole horizon. Deterministic in
/// (config, master seed): re-running yields byte-identical CSV artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts, CoreError> {
    cfg.validate()?;
    let map = cfg.build_map()?;
    let out = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out).map_err(|e| CoreError::io(out.display().to_string(), e))?;
    let echo_path = out.join("config.toml");
    write_text(&echo_path, &cfg.resolved().to_toml()?)?;

    let total_periods = cfg.total_periods();
    let mut ticks: Vec<TickLog> = Vec::new();
    let mut checkpoint = None;
    let mut solver_stats = None;

    let periods = if let Some(mode) = cfg.agent.rl_mode() {
        let hypers = match &cfg.agent {
            AgentSpec::Pdpg(h) | AgentSpec::DdpgScalar(h) => h,
            _ => unreachable!("rl_mode returned Some"),
        };
        let pcfg = hypers.to_pdpg_config(&cfg.env, mode)?;
        let mut init = seed::substream(cfg.master_seed, "agent-init");
        let mut agent = PdpgAgent::new(pcfg, &mut init)?;
        let mut env = NetworkEnv::new(cfg.env.clone(), map)?;
        let periods = pdpg::train_loop_logged(
            &mut env,
            &mut agent,
            total_periods,
            cfg.master_seed,
            &mut |t| ticks.push(t.clone()),
        )?;
        let ckpt = out.join("agent.ckpt");
        agent.save(&ckpt)?;
        checkpoint = Some(ckpt);
        periods
    } else {
        let (solver, resolve_every, combo_set) = match &cfg.agent {
            AgentSpec::Static1(s) => (
                StaticSolver::SmallLambda { phi: Some(s.phi) },
                cfg.env.action_period_ticks,
                &s.combos,
            ),
            AgentSpec::Static2(s) => (
                fair_solver(s),
                cfg.env.action_period_ticks,
                &s.combos,
            ),
            AgentSpec::Static3(s) => (fair_solver(s), 1, &s.combos),
            AgentSpec::StaticExact(s) => (
                StaticSolver::Exact {
                    lambda: s.lambda,
                    phi: Some(s.phi),
                    cap: s.cap,
                },
                s.resolve_every_ticks,
                &s.combos,
            ),
            _ => unreachable!("rl_mode returned None"),
        };
        let combos = combo_set.build(map.num_tilts, cfg.env.num_cells)?;
        let log_weights = cfg.agent.log_weights(cfg.env.reward_dims)?;
        let started = Instant::now();
        let (periods, stats) = staticopt::periodic_static_policy_logged(
            &cfg.env,
            &map,
            &combos,
            &solver,
            resolve_every,
            total_periods,
            &log_weights,
            cfg.master_seed,
            &mut |t| ticks.push(t.clone()),
        )?;
        let wall = started.elapsed();
        let stats_path = out.join("solver_stats.txt");
        write_text(
            &stats_path,
            &format!(
                "solves: {}\ncandidates_evaluated: {}\nwall_seconds: {:.3}\n",
                stats.solves,
                stats.candidates_evaluated,
                wall.as_secs_f64()
            ),
        )?;
        solver_stats = Some(stats_path);
        periods
    };

    let artifacts = write_artifacts(cfg, &out, &periods, &ticks)?;
    Ok(RunArtifacts {
        checkpoint,
        solver_stats,
        periods,
        ..artifacts
    })
}

fn fair_solver(s: &StaticPolicyCfg) -> StaticSolver {
    StaticSolver::FairLambda {
        lambda: s.lambda,
        w: s.w.unwrap_or_else(|| fair_threshold(s.lambda)),
        reps: s.reps,
        phi: Some(s.phi),
    }
}

/// Greedy rollout of a saved checkpoint: no exploration noise, no updates.
/// The checkpoint must match the scenario's dimensions.
pub fn evaluate_checkpoint(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
) -> Result<RunArtifacts, CoreError> {
    cfg.validate()?;
    let mode = cfg.agent.rl_mode().ok_or_else(|| {
        CoreError::Config(format!(
            "evaluation needs an RL agent section, got {}",
            cfg.agent.kind_name()
        ))
    })?;
    let hypers = match &cfg.agent {
        AgentSpec::Pdpg(h) | AgentSpec::DdpgScalar(h) => h,
        _ => unreachable!("rl_mode returned Some"),
    };
    let pcfg = hypers.to_pdpg_config(&cfg.env, mode)?;
    let agent = PdpgAgent::load(checkpoint, pcfg)?;
    let map = cfg.build_map()?;
    let out = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out).map_err(|e| CoreError::io(out.display().to_string(), e))?;
    write_text(&out.join("config.toml"), &cfg.resolved().to_toml()?)?;

    let mut env = NetworkEnv::new(cfg.env.clone(), map)?;
    let state = env.reset(cfg.master_seed)?;
    let mut feats = crate::env::scale_state(&state);
    let mut ticks: Vec<TickLog> = Vec::new();
    let mut periods = Vec::with_capacity(cfg.total_periods() as usize);
    let weights = cfg.agent.log_weights(cfg.env.reward_dims)?;
    for period in 0..cfg.total_periods() {
        let flat = agent.policy(&feats);
        let action = crate::env::Action::from_flat(cfg.env.num_cells, &flat)?;
        let (next_state, reward, info) = env.step(&action)?;
        for t in &info.ticks {
            ticks.push(t.clone());
        }
        feats = crate::env::scale_state(&next_state);
        periods.push(PeriodLog {
            period,
            scalar_reward: weights.iter().zip(&reward.entries).map(|(w, r)| w * r).sum(),
            rewards: reward.entries,
            noise_variance: 0.0,
            action: flat,
            tilt_indices: info.tilt_indices,
            handovers: info.ticks.iter().map(|t| t.handovers).sum(),
            critic_losses: None,
            actor_surrogate: None,
        });
    }
    write_artifacts(cfg, &out, &periods, &ticks)
}

fn write_artifacts(
    cfg: &ExperimentConfig,
    out: &Path,
    periods: &[PeriodLog],
    ticks: &[TickLog],
) -> Result<RunArtifacts, CoreError> {
    let stride = cfg.sample_stride_ticks();
    let scale = cfg.env.throughput_scale_mbps;
    let budget = cfg.env.radio.cell_prb_budget as f64;

    let mut tp_lines = vec![THROUGHPUT_SCHEMA.to_string(), "tick,normalized_throughput".into()];
    let mut load_lines = vec![LOAD_SCHEMA.to_string(), "tick,cell,normalized_load".into()];
    for t in ticks {
        // tick indices are 1-based; sample the first tick of each interval
        if (t.tick - 1) % stride != 0 {
            continue;
        }
        let tp: f64 = t.cell_throughput_mbps.iter().sum::<f64>() / scale;
        tp_lines.push(format!("{},{}", t.tick, tp));
        for (cell, load) in t.cell_load_prb.iter().enumerate() {
            load_lines.push(format!("{},{},{}", t.tick, cell, load / budget));
        }
    }

    let dims = cfg.env.reward_dims;
    let mut header = String::from("period,scalar_reward,scalar_reward_ma");
    for i in 0..dims {
        header.push_str(&format!(",r{i}"));
    }
    header.push_str(",noise_variance,handovers,critic_loss,actor_surrogate");
    let mut conv_lines = vec![CONVERGENCE_SCHEMA.to_string(), header];
    let window = cfg.moving_average_window;
    let mut running: Vec<f64> = Vec::with_capacity(periods.len());
    for p in periods {
        running.push(p.scalar_reward);
        let lo = running.len().saturating_sub(window);
        let ma = running[lo..].iter().sum::<f64>() / (running.len() - lo) as f64;
        let mut line = format!("{},{},{}", p.period, p.scalar_reward, ma);
        for r in &p.rewards {
            line.push_str(&format!(",{r}"));
        }
        let loss = match &p.critic_losses {
            Some(l) => format!("{}", l.iter().sum::<f64>() / l.len() as f64),
            None => String::new(),
        };
        let surr = match p.actor_surrogate {
            Some(s) => format!("{s}"),
            None => String::new(),
        };
        line.push_str(&format!(",{},{},{},{}", p.noise_variance, p.handovers, loss, surr));
        conv_lines.push(line);
    }

    let throughput_samples = out.join("throughput_samples.csv");
    let cell_load_samples = out.join("cell_load_samples.csv");
    let convergence = out.join("convergence.csv");
    write_lines(&throughput_samples, &tp_lines)?;
    write_lines(&cell_load_samples, &load_lines)?;
    write_lines(&convergence, &conv_lines)?;
    Ok(RunArtifacts {
        output_dir: out.to_path_buf(),
        config_echo: out.join("config.toml"),
        throughput_samples,
        cell_load_samples,
        convergence,
        checkpoint: None,
        solver_stats: None,
        periods: periods.to_vec(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CoreError> {
    fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), CoreError> {
    let io_err = |e| CoreError::io(path.display().to_string(), e);
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    for l in lines {
        writeln!(w, "{l}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Nearest-rank quantile of an ascending-sorted slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.max(1) - 1]
}

/// Empirical CDF as (value, cumulative fraction) steps over distinct values;
/// the last fraction is exactly 1.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n as f64;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

fn mean_and_pop_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

/// One run's row in the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub throughput_samples: usize,
    pub throughput_p10: f64,
    pub throughput_p50: f64,
    pub throughput_p90: f64,
    /// Mean over ticks of the max per-cell normalized load.
    pub mean_peak_load: f64,
    /// Population std over all (tick, cell) normalized load samples.
    pub load_std: f64,
    pub periods: usize,
    /// Mean/std of the scalarized reward over the final window.
    pub final_window_mean: f64,
    pub final_window_std: f64,
}

struct CsvFile {
    schema: String,
    header: String,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<CsvFile, CoreError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(name.clone(), e))?;
    let mut lines = text.lines();
    let schema = match lines.next() {
        Some(l) if l.starts_with("# schema:") => l.to_string(),
        _ => {
            return Err(CoreError::Csv {
                path: name,
                line: 1,
                reason: "missing '# schema:' line".into(),
            })
        }
    };
    let header = lines
        .next()
        .ok_or_else(|| CoreError::Csv {
            path: name.clone(),
            line: 2,
            reason: "missing header".into(),
        })?
        .to_string();
    let cols = header.split(',').count();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() != cols {
            return Err(CoreError::Csv {
                path: name,
                line: i + 3,
                reason: format!("{} fields, header has {}", row.len(), cols),
            });
        }
        rows.push(row);
    }
    Ok(CsvFile { schema, header, rows })
}

fn column(file: &CsvFile, name: &str, path: &Path) -> Result<usize, CoreError> {
    file.header
        .split(',')
        .position(|h| h == name)
        .ok_or_else(|| CoreError::Csv {
            path: path.display().to_string(),
            line: 2,
            reason: format!("no '{name}' column"),
        })
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64, CoreError> {
    s.parse::<f64>().map_err(|_| CoreError::Csv {
        path: path.display().to_string(),
        line,
        reason: format!("'{s}' is not a number"),
    })
}

/// Summarize runs side by side. All runs must carry identical CSV schemas
/// and identical sampling (same ticks); drift is rejected.
pub fn compare_runs(dirs: &[PathBuf], window: usize) -> Result<Vec<RunSummary>, CoreError> {
    if dirs.is_empty() {
        return Err(CoreError::Compare("no runs to compare".into()));
    }
    if window == 0 {
        return Err(CoreError::Compare("window must be >= 1".into()));
    }
    let mut summaries = Vec::with_capacity(dirs.len());
    let mut reference: Option<(String, String, Vec<String>)> = None;
    for dir in dirs {
        let tp_path = dir.join("throughput_samples.csv");
        let load_path = dir.join("cell_load_samples.csv");
        let conv_path = dir.join("convergence.csv");
        let tp = read_csv(&tp_path)?;
        let load = read_csv(&load_path)?;
        let conv = read_csv(&conv_path)?;

        let tick_col = column(&tp, "tick", &tp_path)?;
        let ticks: Vec<String> = tp.rows.iter().map(|r| r[tick_col].clone()).collect();
        let schemas = format!("{} | {} | {}", tp.schema, load.schema, conv.schema);
        let headers = format!("{} | {} | {}", tp.header, load.header, conv.header);
        match &reference {
            None => reference = Some((schemas, headers, ticks)),
            Some((s, h, t)) => {
                if *s != schemas || *h != headers {
                    return Err(CoreError::Compare(format!(
                        "schema drift: '{}' does not match the first run",
                        dir.display()
                    )));
                }
                if *t != ticks {
                    return Err(CoreError::Compare(format!(
                        "mismatched sampling: '{}' covers different ticks than the first run",
                        dir.display()
                    )));
                }
            }
        }

        let tp_col = column(&tp, "normalized_throughput", &tp_path)?;
        let mut tp_vals = Vec::with_capacity(tp.rows.len());
        for (i, r) in tp.rows.iter().enumerate() {
            tp_vals.push(parse_f64(&r[tp_col], &tp_path, i + 3)?);
        }
        let mut sorted = tp_vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite throughput"));

        let lt_col = column(&load, "tick", &load_path)?;
        let lv_col = column(&load, "normalized_load", &load_path)?;
        let mut peaks: BTreeMap<u64, f64> = BTreeMap::new();
        let mut all_loads = Vec::with_capacity(load.rows.len());
        for (i, r) in load.rows.iter().enumerate() {
            let tick = r[lt_col].parse::<u64>().map_err(|_| CoreError::Csv {
                path: load_path.display().to_string(),
                line: i + 3,
                reason: format!("'{}' is not a tick index", r[lt_col]),
            })?;
            let v = parse_f64(&r[lv_col], &load_path, i + 3)?;
            all_loads.push(v);
            let e = peaks.entry(tick).or_insert(f64::NEG_INFINITY);
            if v > *e {
                *e = v;
            }
        }
        let mean_peak_load = if peaks.is_empty() {
            0.0
        } else {
            peaks.values().sum::<f64>() / peaks.len() as f64
        };
        let (_, load_std) = mean_and_pop_std(&all_loads);

        let sr_col = column(&conv, "scalar_reward", &conv_path)?;
        let mut scalar = Vec::with_capacity(conv.rows.len());
        for (i, r) in conv.rows.iter().enumerate() {
            scalar.push(parse_f64(&r[sr_col], &conv_path, i + 3)?);
        }
        let lo = scalar.len().saturating_sub(window);
        let (final_window_mean, final_window_std) = mean_and_pop_std(&scalar[lo..]);

        summaries.push(RunSummary {
            name: dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string()),
            throughput_samples: sorted.len(),
            throughput_p10: quantile(&sorted, 0.10),
            throughput_p50: quantile(&sorted, 0.50),
            throughput_p90: quantile(&sorted, 0.90),
            mean_peak_load,
            load_std,
            periods: scalar.len(),
            final_window_mean,
            final_window_std,
        });
    }
    Ok(summaries)
}
