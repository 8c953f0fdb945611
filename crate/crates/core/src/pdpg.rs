//! Deterministic policy gradient over a vector reward: one critic per
//! objective, a single actor ascending the weight-combined action-value
//! gradient, target networks with soft updates, and FIFO experience replay.
//! A scalar mode collapses the reward to dot(w, r) with a single critic,
//! which is plain DDPG and serves as the comparison baseline family.

use std::collections::VecDeque;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{scale_state, Action, NetworkEnv};
use crate::error::CoreError;
use crate::neural::{Activation, Adam, Mlp, MlpSpec, Tape};
use crate::seed::{self, Stream};

/// One experience record, stored with scaled state features and the raw
/// (pre-decode) action vector. The full reward vector is kept even in scalar
/// mode; scalarization happens when targets are formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
}

/// Bounded FIFO experience cache: once full, each insertion evicts the
/// oldest record.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    records: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self, CoreError> {
        if capacity == 0 {
            return Err(CoreError::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            records: VecDeque::with_capacity(capacity.min(1 << 20)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Insert one record, evicting the oldest when at capacity. All records
    /// must share the first record's dimensions.
    pub fn push(&mut self, t: Transition) -> Result<(), CoreError> {
        if t.state.len() != t.next_state.len() {
            return Err(CoreError::schema(
                format!("next_state of width {}", t.state.len()),
                format!("width {}", t.next_state.len()),
            ));
        }
        if let Some(first) = self.records.front() {
            if first.state.len() != t.state.len()
                || first.action.len() != t.action.len()
                || first.rewards.len() != t.rewards.len()
            {
                return Err(CoreError::schema(
                    format!(
                        "transition dims ({}, {}, {})",
                        first.state.len(),
                        first.action.len(),
                        first.rewards.len()
                    ),
                    format!("({}, {}, {})", t.state.len(), t.action.len(), t.rewards.len()),
                ));
            }
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(t);
        Ok(())
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.records[i]
    }

    /// Uniform indices with replacement.
    pub fn sample_indices(&self, rng: &mut Stream, count: usize) -> Vec<usize> {
        assert!(!self.records.is_empty(), "cannot sample an empty buffer");
        (0..count).map(|_| rng.random_range(0..self.records.len())).collect()
    }

    pub fn gather(&self, indices: &[usize]) -> Batch {
        let mut b = Batch {
            states: Vec::with_capacity(indices.len()),
            actions: Vec::with_capacity(indices.len()),
            rewards: Vec::with_capacity(indices.len()),
            next_states: Vec::with_capacity(indices.len()),
        };
        for &i in indices {
            let t = &self.records[i];
            b.states.push(t.state.clone());
            b.actions.push(t.action.clone());
            b.rewards.push(t.rewards.clone());
            b.next_states.push(t.next_state.clone());
        }
        b
    }
}

/// A gathered minibatch (row-aligned columns).
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
    pub next_states: Vec<Vec<f64>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentMode {
    /// One critic per reward entry; weights combine action-value gradients
    /// in the actor update only.
    Vector,
    /// Single critic trained on dot(weights, reward): plain DDPG.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdpgConfig {
    pub state_dim: usize,
    pub action_dim: usize,
    pub reward_dims: usize,
    pub mode: AgentMode,
    pub gamma: f64,
    pub tau: f64,
    /// Objective weights on the simplex (length = reward_dims).
    pub weights: Vec<f64>,
    /// Gaussian exploration VARIANCE before the decay step; the noise std
    /// is the square root of this value.
    pub exploration_sigma_initial: f64,
    /// Iteration count after which the variance drops to the final value.
    pub exploration_decay_step: u64,
    /// Gaussian exploration variance from the decay step onward.
    pub exploration_sigma_final: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for PdpgConfig {
    fn default() -> Self {
        PdpgConfig {
            state_dim: 8,
            action_dim: 10,
            reward_dims: 2,
            mode: AgentMode::Vector,
            gamma: 0.3,
            tau: 0.005,
            weights: vec![0.5, 0.5],
            exploration_sigma_initial: 0.1,
            exploration_decay_step: 300,
            exploration_sigma_final: 1e-3,
            batch_size: 64,
            buffer_capacity: 50_000,
            actor_hidden: vec![50, 100],
            critic_hidden: vec![50, 100],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
        }
    }
}

/// Tradeoff parameter to simplex weights for the two-objective case:
/// w = (1, lambda) / (1 + lambda).
pub fn weights_from_lambda(lambda: f64) -> [f64; 2] {
    assert!(lambda >= 0.0, "lambda must be non-negative");
    [1.0 / (1.0 + lambda), lambda / (1.0 + lambda)]
}

impl PdpgConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.state_dim == 0 || self.action_dim == 0 {
            return Err(CoreError::Config("state and action dims must be positive".into()));
        }
        if self.reward_dims < 2 {
            return Err(CoreError::Config("reward_dims must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(CoreError::Config("gamma must lie in [0, 1]".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(CoreError::Config("tau must lie in (0, 1]".into()));
        }
        if self.weights.len() != self.reward_dims {
            return Err(CoreError::Config(format!(
                "{} weights for {} reward dims",
                self.weights.len(),
                self.reward_dims
            )));
        }
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err(CoreError::Config("weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CoreError::Config(format!("weights must sum to 1, got {sum}")));
        }
        if self.exploration_sigma_initial < 0.0 || self.exploration_sigma_final < 0.0 {
            return Err(CoreError::Config("exploration variances must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(CoreError::Config("batch_size must be positive".into()));
        }
        if self.buffer_capacity == 0 {
            return Err(CoreError::Config("buffer_capacity must be positive".into()));
        }
        if self.actor_lr <= 0.0 || self.critic_lr <= 0.0 {
            return Err(CoreError::Config("learning rates must be positive".into()));
        }
        Ok(())
    }

    fn num_critics(&self) -> usize {
        match self.mode {
            AgentMode::Vector => self.reward_dims,
            AgentMode::Scalar => 1,
        }
    }

    fn actor_spec(&self) -> MlpSpec {
        let mut sizes = vec![self.state_dim];
        sizes.extend_from_slice(&self.actor_hidden);
        sizes.push(self.action_dim);
        MlpSpec::new(sizes, Activation::Tanh)
    }

    fn critic_spec(&self) -> MlpSpec {
        let mut sizes = vec![self.state_dim + self.action_dim];
        sizes.extend_from_slice(&self.critic_hidden);
        sizes.push(1);
        MlpSpec::new(sizes, Activation::Linear)
    }
}

/// Per-update diagnostics.
#[derive(Debug, Clone)]
pub struct UpdateStats {
    pub critic_losses: Vec<f64>,
    pub actor_surrogate: f64,
}

#[derive(Debug, Clone)]
pub struct PdpgAgent {
    cfg: PdpgConfig,
    actor: Mlp,
    actor_target: Mlp,
    critics: Vec<Mlp>,
    critic_targets: Vec<Mlp>,
    actor_opt: Adam,
    critic_opts: Vec<Adam>,
    buffer: ReplayBuffer,
}

impl PdpgAgent {
    /// Parameters are drawn actor first, then critics in objective order, so
    /// a scalar baseline sharing the stream starts with the same actor and
    /// the same first critic. Targets start as exact copies.
    pub fn new(cfg: PdpgConfig, rng: &mut impl Rng) -> Result<Self, CoreError> {
        cfg.validate()?;
        let actor = Mlp::init(cfg.actor_spec(), rng);
        let critics: Vec<Mlp> = (0..cfg.num_critics())
            .map(|_| Mlp::init(cfg.critic_spec(), rng))
            .collect();
        let actor_target = actor.clone();
        let critic_targets = critics.clone();
        let actor_opt = Adam::new(cfg.actor_lr, actor.params.len());
        let critic_opts = critics
            .iter()
            .map(|c| Adam::new(cfg.critic_lr, c.params.len()))
            .collect();
        let buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
        Ok(PdpgAgent {
            cfg,
            actor,
            actor_target,
            critics,
            critic_targets,
            actor_opt,
            critic_opts,
            buffer,
        })
    }

    pub fn config(&self) -> &PdpgConfig {
        &self.cfg
    }

    pub fn num_critics(&self) -> usize {
        self.critics.len()
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn critic(&self, i: usize) -> &Mlp {
        &self.critics[i]
    }

    pub fn critic_target(&self, i: usize) -> &Mlp {
        &self.critic_targets[i]
    }

    /// Mutable network access for diagnostics and constructed scenarios;
    /// regular training never needs it.
    pub fn critic_mut(&mut self, i: usize) -> &mut Mlp {
        &mut self.critics[i]
    }

    pub fn critic_target_mut(&mut self, i: usize) -> &mut Mlp {
        &mut self.critic_targets[i]
    }

    pub fn actor_mut(&mut self) -> &mut Mlp {
        &mut self.actor
    }

    pub fn actor_target_mut(&mut self) -> &mut Mlp {
        &mut self.actor_target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Deterministic policy output, entries in [-1, 1] (tanh head).
    pub fn policy(&self, state: &[f64]) -> Vec<f64> {
        self.actor.forward(state)
    }

    /// Exploration variance in force at a given period index.
    pub fn noise_variance_at(&self, period: u64) -> f64 {
        if period < self.cfg.exploration_decay_step {
            self.cfg.exploration_sigma_initial
        } else {
            self.cfg.exploration_sigma_final
        }
    }

    /// Policy output plus i.i.d. zero-mean Gaussian noise with the given
    /// VARIANCE per dimension, clamped to [-1, 1]. Always draws exactly
    /// `action_dim` normals so the rng stream position is schedule-free.
    pub fn select_action(&self, state: &[f64], noise_variance: f64, rng: &mut Stream) -> Vec<f64> {
        let std = noise_variance.sqrt();
        self.actor
            .forward(state)
            .into_iter()
            .map(|a| {
                let z: f64 = rng.sample(StandardNormal);
                (a + std * z).clamp(-1.0, 1.0)
            })
            .collect()
    }

    pub fn push_transition(&mut self, t: Transition) -> Result<(), CoreError> {
        if t.state.len() != self.cfg.state_dim
            || t.action.len() != self.cfg.action_dim
            || t.rewards.len() != self.cfg.reward_dims
        {
            return Err(CoreError::schema(
                format!(
                    "transition dims ({}, {}, {})",
                    self.cfg.state_dim, self.cfg.action_dim, self.cfg.reward_dims
                ),
                format!("({}, {}, {})", t.state.len(), t.action.len(), t.rewards.len()),
            ));
        }
        self.buffer.push(t)
    }

    pub fn ready(&self) -> bool {
        self.buffer.len() >= self.cfg.batch_size
    }

    pub fn sample_batch(&self, rng: &mut Stream) -> Batch {
        let idx = self.buffer.sample_indices(rng, self.cfg.batch_size);
        self.buffer.gather(&idx)
    }

    /// Bootstrapped targets, one row of y values per critic:
    /// y_i = r_i + gamma * Q'_i(s', A'(s')). No gradient flows here.
    pub fn td_targets(&self, batch: &Batch) -> Vec<Vec<f64>> {
        let sd = self.cfg.state_dim;
        let ad = self.cfg.action_dim;
        let gamma = self.cfg.gamma;
        let mut ys: Vec<Vec<f64>> = (0..self.critics.len())
            .map(|_| Vec::with_capacity(batch.len()))
            .collect();
        let mut xin = vec![0.0; sd + ad];
        for row in 0..batch.len() {
            let a_next = self.actor_target.forward(&batch.next_states[row]);
            xin[..sd].copy_from_slice(&batch.next_states[row]);
            xin[sd..].copy_from_slice(&a_next);
            for (i, ct) in self.critic_targets.iter().enumerate() {
                let qn = ct.forward(&xin)[0];
                let r = self.effective_reward(&batch.rewards[row], i);
                ys[i].push(r + gamma * qn);
            }
        }
        ys
    }

    fn effective_reward(&self, rewards: &[f64], critic_idx: usize) -> f64 {
        match self.cfg.mode {
            AgentMode::Vector => rewards[critic_idx],
            AgentMode::Scalar => dot(&self.cfg.weights, rewards),
        }
    }

    /// Mean squared TD errors without touching any parameters.
    pub fn critic_losses(&self, batch: &Batch, targets: &[Vec<f64>]) -> Vec<f64> {
        let sd = self.cfg.state_dim;
        let ad = self.cfg.action_dim;
        let b = batch.len() as f64;
        let mut xin = vec![0.0; sd + ad];
        let mut out = Vec::with_capacity(self.critics.len());
        for (i, critic) in self.critics.iter().enumerate() {
            let mut loss = 0.0;
            for row in 0..batch.len() {
                xin[..sd].copy_from_slice(&batch.states[row]);
                xin[sd..].copy_from_slice(&batch.actions[row]);
                let e = critic.forward(&xin)[0] - targets[i][row];
                loss += e * e / b;
            }
            out.push(loss);
        }
        out
    }

    /// Signed mean TD residual per critic: mean(Q_i(s, a) - y_i).
    pub fn td_residual_means(&self, batch: &Batch, targets: &[Vec<f64>]) -> Vec<f64> {
        let sd = self.cfg.state_dim;
        let ad = self.cfg.action_dim;
        let b = batch.len() as f64;
        let mut xin = vec![0.0; sd + ad];
        self.critics
            .iter()
            .enumerate()
            .map(|(i, critic)| {
                let mut acc = 0.0;
                for row in 0..batch.len() {
                    xin[..sd].copy_from_slice(&batch.states[row]);
                    xin[sd..].copy_from_slice(&batch.actions[row]);
                    acc += critic.forward(&xin)[0] - targets[i][row];
                }
                acc / b
            })
            .collect()
    }

    /// One optimizer step per critic toward its own targets (mean squared
    /// error). Weights play no role here: the critics share no parameters,
    /// so the combined objective's minimizers coincide with the per-critic
    /// ones. Returns the pre-step losses.
    pub fn update_critics(&mut self, batch: &Batch, targets: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(targets.len(), self.critics.len());
        assert!(!batch.is_empty());
        let sd = self.cfg.state_dim;
        let ad = self.cfg.action_dim;
        let b = batch.len() as f64;
        let mut xin = vec![0.0; sd + ad];
        let mut igrad = vec![0.0; sd + ad];
        let mut tape = Tape::default();
        let mut losses = Vec::with_capacity(self.critics.len());
        for (i, critic) in self.critics.iter_mut().enumerate() {
            let mut grads = vec![0.0; critic.params.len()];
            let mut loss = 0.0;
            for row in 0..batch.len() {
                xin[..sd].copy_from_slice(&batch.states[row]);
                xin[sd..].copy_from_slice(&batch.actions[row]);
                let q = critic.forward_tape(&xin, &mut tape)[0];
                let e = q - targets[i][row];
                loss += e * e / b;
                critic.backward_tape(&mut tape, &[2.0 * e / b], &mut grads, &mut igrad);
            }
            self.critic_opts[i].step(&mut critic.params, &grads);
            losses.push(loss);
        }
        losses
    }

    /// One ascent step on the batch-mean of sum_i w_i Q_i(s, A(s)), chaining
    /// each critic's action gradient through the actor. Returns the surrogate
    /// value before the step.
    pub fn update_actor(&mut self, batch: &Batch) -> f64 {
        let sd = self.cfg.state_dim;
        let ad = self.cfg.action_dim;
        let weights: Vec<f64> = match self.cfg.mode {
            AgentMode::Vector => self.cfg.weights.clone(),
            AgentMode::Scalar => vec![1.0],
        };
        let critics = &self.critics;
        let mut ctape = Tape::default();
        let mut cgrads: Vec<Vec<f64>> = critics.iter().map(|c| vec![0.0; c.params.len()]).collect();
        let mut xin = vec![0.0; sd + ad];
        let mut igrad = vec![0.0; sd + ad];
        let states = &batch.states;
        ascend_actor(&mut self.actor, &mut self.actor_opt, states, |row, a| {
            let mut da = vec![0.0; ad];
            let mut value = 0.0;
            xin[..sd].copy_from_slice(&states[row]);
            xin[sd..].copy_from_slice(a);
            for (i, critic) in critics.iter().enumerate() {
                let q = critic.forward_tape(&xin, &mut ctape)[0];
                value += weights[i] * q;
                // only the input gradient is kept; critic parameters move
                // solely in update_critics
                critic.backward_tape(&mut ctape, &[1.0], &mut cgrads[i], &mut igrad);
                for (slot, g) in da.iter_mut().zip(&igrad[sd..]) {
                    *slot += weights[i] * g;
                }
            }
            (da, value)
        })
    }

    /// One actor ascent step against externally supplied action values and
    /// gradients: `eval(row, action) -> (dJ/da, J)`. Used with fixed
    /// analytic critics; `update_actor` routes through the same path.
    pub fn update_actor_with<F>(&mut self, states: &[Vec<f64>], eval: F) -> f64
    where
        F: FnMut(usize, &[f64]) -> (Vec<f64>, f64),
    {
        ascend_actor(&mut self.actor, &mut self.actor_opt, states, eval)
    }

    /// Soft-update every target toward its online net.
    pub fn soft_update_targets(&mut self) {
        let tau = self.cfg.tau;
        soft_update(&self.actor, &mut self.actor_target, tau).expect("actor shapes match");
        for (online, target) in self.critics.iter().zip(self.critic_targets.iter_mut()) {
            soft_update(online, target, tau).expect("critic shapes match");
        }
    }

    /// Sample, bootstrap, update critics and actor, soft-update targets.
    /// None while the buffer is still smaller than a batch.
    pub fn train_step(&mut self, rng: &mut Stream) -> Option<UpdateStats> {
        if !self.ready() {
            return None;
        }
        let batch = self.sample_batch(rng);
        let targets = self.td_targets(&batch);
        let critic_losses = self.update_critics(&batch, &targets);
        let actor_surrogate = self.update_actor(&batch);
        self.soft_update_targets();
        Some(UpdateStats {
            critic_losses,
            actor_surrogate,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CoreError> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(b"PDPA");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.push(match self.cfg.mode {
            AgentMode::Vector => 0,
            AgentMode::Scalar => 1,
        });
        buf.push(self.cfg.reward_dims as u8);
        buf.push(self.critics.len() as u8);
        for &w in &self.cfg.weights {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        let io_err = |e| CoreError::io(path.display().to_string(), e);
        self.actor.write_to(&mut buf).map_err(io_err)?;
        self.actor_target.write_to(&mut buf).map_err(io_err)?;
        for net in self.critics.iter().chain(self.critic_targets.iter()) {
            net.write_to(&mut buf).map_err(io_err)?;
        }
        std::fs::write(path, buf).map_err(|e| CoreError::io(path.display().to_string(), e))
    }

    /// Restore networks from a checkpoint; optimizer state and the replay
    /// buffer start fresh. The config must agree with the stored shapes.
    pub fn load(path: &Path, cfg: PdpgConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        let bytes = std::fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
        let mut cur = std::io::Cursor::new(bytes.as_slice());
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic)
            .map_err(|_| CoreError::parse(0, "checkpoint shorter than its magic"))?;
        if &magic != b"PDPA" {
            return Err(CoreError::parse(0, "not an agent checkpoint (bad magic)"));
        }
        let mut u32buf = [0u8; 4];
        cur.read_exact(&mut u32buf)
            .map_err(|_| CoreError::parse(4, "missing version"))?;
        let version = u32::from_le_bytes(u32buf);
        if version != 1 {
            return Err(CoreError::schema("checkpoint version 1", format!("version {version}")));
        }
        let mut hdr = [0u8; 3];
        cur.read_exact(&mut hdr)
            .map_err(|_| CoreError::parse(8, "missing mode/dims header"))?;
        let mode = match hdr[0] {
            0 => AgentMode::Vector,
            1 => AgentMode::Scalar,
            other => return Err(CoreError::parse(8, format!("unknown agent mode {other}"))),
        };
        let reward_dims = hdr[1] as usize;
        let n_critics = hdr[2] as usize;
        if mode != cfg.mode {
            return Err(CoreError::schema(
                format!("agent mode {:?}", cfg.mode),
                format!("checkpoint mode {mode:?}"),
            ));
        }
        if reward_dims != cfg.reward_dims {
            return Err(CoreError::schema(
                format!("{} reward dims", cfg.reward_dims),
                format!("checkpoint with {reward_dims}"),
            ));
        }
        if n_critics != cfg.num_critics() {
            return Err(CoreError::parse(
                10,
                format!("critic count {n_critics} does not match mode {mode:?}"),
            ));
        }
        let mut w8 = [0u8; 8];
        for _ in 0..reward_dims {
            cur.read_exact(&mut w8)
                .map_err(|_| CoreError::parse(cur.position(), "truncated weights"))?;
        }

        let actor = Mlp::read_from(&mut cur)?;
        let actor_target = Mlp::read_from(&mut cur)?;
        let mut critics = Vec::with_capacity(n_critics);
        for _ in 0..n_critics {
            critics.push(Mlp::read_from(&mut cur)?);
        }
        let mut critic_targets = Vec::with_capacity(n_critics);
        for _ in 0..n_critics {
            critic_targets.push(Mlp::read_from(&mut cur)?);
        }

        if actor.input_dim() != cfg.state_dim || actor.output_dim() != cfg.action_dim {
            return Err(CoreError::schema(
                format!("actor {} -> {}", cfg.state_dim, cfg.action_dim),
                format!("checkpoint actor {} -> {}", actor.input_dim(), actor.output_dim()),
            ));
        }
        if actor_target.spec != actor.spec {
            return Err(CoreError::schema(
                "actor target with the actor's architecture".to_string(),
                "a different architecture".to_string(),
            ));
        }
        let want_in = cfg.state_dim + cfg.action_dim;
        for net in critics.iter().chain(critic_targets.iter()) {
            if net.input_dim() != want_in || net.output_dim() != 1 {
                return Err(CoreError::schema(
                    format!("critics {want_in} -> 1"),
                    format!("checkpoint critic {} -> {}", net.input_dim(), net.output_dim()),
                ));
            }
        }

        let actor_opt = Adam::new(cfg.actor_lr, actor.params.len());
        let critic_opts = critics
            .iter()
            .map(|c| Adam::new(cfg.critic_lr, c.params.len()))
            .collect();
        let buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
        Ok(PdpgAgent {
            cfg,
            actor,
            actor_target,
            critics,
            critic_targets,
            actor_opt,
            critic_opts,
            buffer,
        })
    }
}

/// target <- tau * online + (1 - tau) * target, elementwise.
pub fn soft_update(online: &Mlp, target: &mut Mlp, tau: f64) -> Result<(), CoreError> {
    if online.spec != target.spec || online.params.len() != target.params.len() {
        return Err(CoreError::schema(
            "online and target nets of identical architecture".to_string(),
            "mismatched architectures".to_string(),
        ));
    }
    for (t, &o) in target.params.iter_mut().zip(&online.params) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

fn dot(w: &[f64], r: &[f64]) -> f64 {
    assert_eq!(w.len(), r.len());
    w.iter().zip(r).map(|(a, b)| a * b).sum()
}

/// Shared ascent step: accumulates -(1/B) * eval_grad chained through the
/// actor and takes one optimizer step, returning the mean of eval's values.
fn ascend_actor<F>(actor: &mut Mlp, opt: &mut Adam, states: &[Vec<f64>], mut eval: F) -> f64
where
    F: FnMut(usize, &[f64]) -> (Vec<f64>, f64),
{
    assert!(!states.is_empty());
    let b = states.len() as f64;
    let mut tape = Tape::default();
    let mut grads = vec![0.0; actor.params.len()];
    let mut input_scratch = vec![0.0; actor.input_dim()];
    let mut out_grad = vec![0.0; actor.output_dim()];
    let mut a_buf = vec![0.0; actor.output_dim()];
    let mut value_sum = 0.0;
    for (row, s) in states.iter().enumerate() {
        let a = actor.forward_tape(s, &mut tape);
        a_buf.copy_from_slice(a);
        let (da, value) = eval(row, &a_buf);
        assert_eq!(da.len(), a_buf.len());
        value_sum += value;
        // optimizer minimizes, so feed the negated mean ascent direction
        for (slot, d) in out_grad.iter_mut().zip(&da) {
            *slot = -d / b;
        }
        actor.backward_tape(&mut tape, &out_grad, &mut grads, &mut input_scratch);
    }
    opt.step(&mut actor.params, &grads);
    value_sum / b
}

/// Per-period record of one training run.
#[derive(Debug, Clone)]
pub struct PeriodLog {
    pub period: u64,
    pub rewards: Vec<f64>,
    /// dot(config weights, rewards) -- the scalarized objective used for
    /// cross-run comparisons.
    pub scalar_reward: f64,
    pub noise_variance: f64,
    pub action: Vec<f64>,
    pub tilt_indices: Vec<usize>,
    pub handovers: usize,
    pub critic_losses: Option<Vec<f64>>,
    pub actor_surrogate: Option<f64>,
}

/// Run the full control loop: act with exploration noise, step the network
/// environment one T-tick period, store the transition, and (once a batch
/// is available) do one update round per period. Deterministic in
/// (env map, master_seed).
pub fn train_loop(
    env: &mut NetworkEnv,
    agent: &mut PdpgAgent,
    total_periods: u64,
    master_seed: u64,
) -> Result<Vec<PeriodLog>, CoreError> {
    train_loop_logged(env, agent, total_periods, master_seed, &mut |_| {})
}

/// As `train_loop`, forwarding each tick's metrics to a sink.
pub fn train_loop_logged(
    env: &mut NetworkEnv,
    agent: &mut PdpgAgent,
    total_periods: u64,
    master_seed: u64,
    on_tick: &mut dyn FnMut(&crate::env::TickLog),
) -> Result<Vec<PeriodLog>, CoreError> {
    let n_cells = env.config().num_cells;
    if agent.cfg.state_dim != env.config().state_dim()
        || agent.cfg.action_dim != env.config().action_dim()
        || agent.cfg.reward_dims != env.config().reward_dims
    {
        return Err(CoreError::schema(
            format!(
                "agent dims ({}, {}, {}) matching the environment",
                env.config().state_dim(),
                env.config().action_dim(),
                env.config().reward_dims
            ),
            format!(
                "({}, {}, {})",
                agent.cfg.state_dim, agent.cfg.action_dim, agent.cfg.reward_dims
            ),
        ));
    }
    let mut explore = seed::substream(master_seed, "exploration");
    let mut sampler = seed::substream(master_seed, "replay-sampling");
    let state = env.reset(master_seed)?;
    let mut feats = scale_state(&state);
    let mut logs = Vec::with_capacity(total_periods as usize);
    for period in 0..total_periods {
        let noise_variance = agent.noise_variance_at(period);
        let flat = agent.select_action(&feats, noise_variance, &mut explore);
        let action = Action::from_flat(n_cells, &flat)?;
        let (next_state, reward, info) = env.step(&action)?;
        for t in &info.ticks {
            on_tick(t);
        }
        let next_feats = scale_state(&next_state);
        agent.push_transition(Transition {
            state: feats,
            action: flat.clone(),
            rewards: reward.entries.clone(),
            next_state: next_feats.clone(),
        })?;
        let stats = agent.train_step(&mut sampler);
        logs.push(PeriodLog {
            period,
            scalar_reward: dot(&agent.cfg.weights, &reward.entries),
            rewards: reward.entries,
            noise_variance,
            action: flat,
            tilt_indices: info.tilt_indices,
            handovers: info.ticks.iter().map(|t| t.handovers).sum(),
            critic_losses: stats.as_ref().map(|s| s.critic_losses.clone()),
            actor_surrogate: stats.as_ref().map(|s| s.actor_surrogate),
        });
        feats = next_feats;
    }
    Ok(logs)
}
