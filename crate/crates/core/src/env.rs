//! MDP wrapper over the network simulator. An agent action fixes tilts and
//! CIOs for one control period of T ticks; each tick advances mobility,
//! re-evaluates the radio pipeline, applies A3 handover, and schedules PRBs.
//! The reward vector averages the tick metrics over the period.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::mobility::{MobilityConfig, MobilityState};
use crate::radio::{a3_handover, AssociationMatrix, CioMatrix, NetworkSnapshot, RadioConfig, CIO_LIMIT_DB};
use crate::rsrp::RsrpTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Ticks per control period (T). A tick defaults to 15 minutes, so 8
    /// ticks hold each tilt/CIO decision for 2 hours.
    pub action_period_ticks: usize,
    /// 2 = throughput + peak load; 3 adds the negative load spread.
    pub reward_dims: usize,
    pub num_cells: usize,
    pub num_users: usize,
    /// Throughput reward denominator in Mbps.
    pub throughput_scale_mbps: f64,
    pub radio: RadioConfig,
    pub mobility: MobilityConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            action_period_ticks: 8,
            reward_dims: 2,
            num_cells: 4,
            num_users: 80,
            throughput_scale_mbps: 100.0,
            radio: RadioConfig::default(),
            mobility: MobilityConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.action_period_ticks == 0 {
            return Err(CoreError::Config("action_period_ticks must be at least 1".into()));
        }
        if !(self.reward_dims == 2 || self.reward_dims == 3) {
            return Err(CoreError::Config("reward_dims must be 2 or 3".into()));
        }
        if self.num_cells == 0 {
            return Err(CoreError::Config("num_cells must be positive".into()));
        }
        if self.throughput_scale_mbps <= 0.0 {
            return Err(CoreError::Config("throughput_scale_mbps must be positive".into()));
        }
        if self.num_users != self.mobility.num_users {
            return Err(CoreError::Config(format!(
                "num_users ({}) disagrees with mobility.num_users ({})",
                self.num_users, self.mobility.num_users
            )));
        }
        self.radio.validate()?;
        self.mobility.validate()
    }

    /// Length of the flat action vector: N tilt entries plus the CIO upper
    /// triangle.
    pub fn action_dim(&self) -> usize {
        self.num_cells + self.num_cells * (self.num_cells - 1) / 2
    }

    /// Length of the flat state vector: N loads plus N edge ratios.
    pub fn state_dim(&self) -> usize {
        2 * self.num_cells
    }
}

/// Observed network condition at the end of a control period.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Per-cell PRB load divided by the budget, in [0, 1].
    pub cell_loads: Vec<f64>,
    /// Fraction of each cell's users below the edge throughput threshold.
    pub edge_ratios: Vec<f64>,
}

impl State {
    /// Flat feature vector with every entry mapped by x -> 2x - 1, taking
    /// budget-normalized loads and ratios from [0, 1] to [-1, 1].
    pub fn features(&self) -> Vec<f64> {
        scale_state(self)
    }
}

/// Fixed affine feature scaling: both loads and edge ratios live in [0, 1],
/// so x -> 2x - 1 centers them without running statistics.
pub fn scale_state(s: &State) -> Vec<f64> {
    s.cell_loads
        .iter()
        .chain(s.edge_ratios.iter())
        .map(|&x| 2.0 * x - 1.0)
        .collect()
}

/// Raw policy output: all entries in [-1, 1] before decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub tilt_raw: Vec<f64>,
    /// CIO upper triangle in row-major pair order (0,1), (0,2), ..., (1,2), ...
    pub cio_raw: Vec<f64>,
}

impl Action {
    pub fn zero(n_cells: usize) -> Self {
        Action {
            tilt_raw: vec![0.0; n_cells],
            cio_raw: vec![0.0; n_cells * (n_cells - 1) / 2],
        }
    }

    pub fn from_flat(n_cells: usize, flat: &[f64]) -> Result<Self, CoreError> {
        let want = n_cells + n_cells * (n_cells - 1) / 2;
        if flat.len() != want {
            return Err(CoreError::schema(
                format!("{want} action entries for {n_cells} cells"),
                format!("{} entries", flat.len()),
            ));
        }
        Ok(Action {
            tilt_raw: flat[..n_cells].to_vec(),
            cio_raw: flat[n_cells..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.tilt_raw.clone();
        v.extend_from_slice(&self.cio_raw);
        v
    }
}

/// Period-averaged objectives: [throughput / scale, -peak mean load,
/// optionally -load spread].
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    pub entries: Vec<f64>,
}

impl RewardVector {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        assert_eq!(weights.len(), self.entries.len());
        self.entries.iter().zip(weights).map(|(r, w)| r * w).sum()
    }
}

/// Quantize raw tilt entries to dictionary indices and scale raw CIO entries
/// to dB, completing the matrix antisymmetrically. Inputs are clamped to
/// [-1, 1] first.
pub fn decode_action(a: &Action, num_tilts: usize) -> (Vec<usize>, CioMatrix) {
    assert!(num_tilts >= 1);
    let top = (num_tilts - 1) as f64;
    let tilt_idx: Vec<usize> = a
        .tilt_raw
        .iter()
        .map(|&raw| {
            let r = raw.clamp(-1.0, 1.0);
            let idx = ((r + 1.0) / 2.0 * top).round();
            (idx as usize).min(num_tilts - 1)
        })
        .collect();
    let n = a.tilt_raw.len();
    let upper: Vec<f64> = a
        .cio_raw
        .iter()
        .map(|&raw| raw.clamp(-1.0, 1.0) * CIO_LIMIT_DB)
        .collect();
    let cio = CioMatrix::from_upper_triangle(n, &upper).expect("clamped entries are within the CIO limit");
    (tilt_idx, cio)
}

/// Per-tick record kept for reward verification and metric logs.
#[derive(Debug, Clone)]
pub struct TickLog {
    pub tick: u64,
    /// Post-scheduling PRB load per cell.
    pub cell_load_prb: Vec<f64>,
    pub cell_throughput_mbps: Vec<f64>,
    pub handovers: usize,
    pub edge_counts: Vec<usize>,
    pub users_per_cell: Vec<usize>,
}

/// Everything one `step` did, tick by tick.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub tilt_indices: Vec<usize>,
    pub cio_db: CioMatrix,
    pub ticks: Vec<TickLog>,
}

#[derive(Debug, Clone)]
pub struct NetworkEnv {
    cfg: EnvConfig,
    map: RsrpTensor,
    mobility: Option<MobilityState>,
    association: Option<AssociationMatrix>,
    tick: u64,
}

impl NetworkEnv {
    pub fn new(cfg: EnvConfig, map: RsrpTensor) -> Result<Self, CoreError> {
        cfg.validate()?;
        if map.num_bs() != cfg.num_cells {
            return Err(CoreError::schema(
                format!("RSRP map with {} base stations", cfg.num_cells),
                format!("{} base stations", map.num_bs()),
            ));
        }
        Ok(NetworkEnv {
            cfg,
            map,
            mobility: None,
            association: None,
            tick: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn map(&self) -> &RsrpTensor {
        &self.map
    }

    pub fn num_tilts(&self) -> usize {
        self.map.num_tilts
    }

    /// Start an episode: fresh mobility from `seed`, tilt index 0 everywhere,
    /// zero CIOs, users associated to their strongest cell.
    pub fn reset(&mut self, seed: u64) -> Result<State, CoreError> {
        let mobility = MobilityState::with_seed(&self.cfg.mobility, seed)?;
        let tilt0 = vec![0usize; self.cfg.num_cells];
        let rsrp = Self::rsrp_matrix(&self.map, self.cfg.num_cells, mobility.positions(), &tilt0);
        let serving: Vec<usize> = (0..self.cfg.num_users)
            .map(|k| {
                let row = &rsrp[k * self.cfg.num_cells..(k + 1) * self.cfg.num_cells];
                let mut best = 0usize;
                for (n, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = n;
                    }
                }
                best
            })
            .collect();
        let association = AssociationMatrix::new(self.cfg.num_cells, serving)?;
        let snap = NetworkSnapshot::compute(rsrp, association, &self.cfg.radio);
        let state = self.state_from_snapshot(&snap);
        self.association = Some(snap.association);
        self.mobility = Some(mobility);
        self.tick = 0;
        Ok(state)
    }

    /// Apply one control action for a full period of T ticks.
    pub fn step(&mut self, action: &Action) -> Result<(State, RewardVector, StepInfo), CoreError> {
        let n = self.cfg.num_cells;
        if action.tilt_raw.len() != n || action.cio_raw.len() != n * (n - 1) / 2 {
            return Err(CoreError::schema(
                format!("action with {} tilt and {} CIO entries", n, n * (n - 1) / 2),
                format!(
                    "{} tilt and {} CIO entries",
                    action.tilt_raw.len(),
                    action.cio_raw.len()
                ),
            ));
        }
        let (mobility, association) = match (self.mobility.as_mut(), self.association.take()) {
            (Some(m), Some(a)) => (m, a),
            _ => {
                return Err(CoreError::Config(
                    "environment not initialized: call reset before step".into(),
                ))
            }
        };
        let (tilt_idx, cio) = decode_action(action, self.map.num_tilts);

        let t_period = self.cfg.action_period_ticks;
        let budget = self.cfg.radio.cell_prb_budget as f64;
        let mut ticks = Vec::with_capacity(t_period);
        let mut assoc = association;
        let mut sum_throughput = 0.0;
        let mut mean_load = vec![0.0; n];
        let mut load_samples = Vec::with_capacity(n * t_period);
        let mut last_snapshot: Option<NetworkSnapshot> = None;

        for _ in 0..t_period {
            mobility.step();
            self.tick += 1;
            let rsrp = Self::rsrp_matrix(&self.map, n, mobility.positions(), &tilt_idx);
            let next_assoc = a3_handover(&rsrp, n, &assoc, &cio, self.cfg.radio.hysteresis_db);
            let handovers = assoc.diff_count(&next_assoc);
            assoc = next_assoc;
            let snap = NetworkSnapshot::compute(rsrp, assoc.clone(), &self.cfg.radio);

            let mut edge_counts = vec![0usize; n];
            let mut users_per_cell = vec![0usize; n];
            for k in 0..self.cfg.num_users {
                let cell = snap.association.serving(k);
                users_per_cell[cell] += 1;
                if snap.edge_flags[k] {
                    edge_counts[cell] += 1;
                }
            }
            sum_throughput += snap.cell_throughput_mbps.iter().sum::<f64>();
            for cell in 0..n {
                let norm = snap.cell_load_prb[cell] / budget;
                mean_load[cell] += norm / t_period as f64;
                load_samples.push(norm);
            }
            ticks.push(TickLog {
                tick: self.tick,
                cell_load_prb: snap.cell_load_prb.clone(),
                cell_throughput_mbps: snap.cell_throughput_mbps.clone(),
                handovers,
                edge_counts,
                users_per_cell,
            });
            last_snapshot = Some(snap);
        }

        let snap = last_snapshot.expect("period has at least one tick");
        let state = self.state_from_snapshot(&snap);
        self.association = Some(assoc);

        let mut entries = Vec::with_capacity(self.cfg.reward_dims);
        entries.push(sum_throughput / t_period as f64 / self.cfg.throughput_scale_mbps);
        let peak = mean_load.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        entries.push(-peak);
        if self.cfg.reward_dims == 3 {
            entries.push(-population_std(&load_samples));
        }
        let info = StepInfo {
            tilt_indices: tilt_idx,
            cio_db: cio,
            ticks,
        };
        Ok((state, RewardVector { entries }, info))
    }

    fn rsrp_matrix(
        map: &RsrpTensor,
        n: usize,
        positions: &[crate::geom::Point],
        tilt_idx: &[usize],
    ) -> Vec<f64> {
        let mut rsrp = vec![0.0; positions.len() * n];
        for (k, p) in positions.iter().enumerate() {
            map.query_rsrp_into(p, tilt_idx, &mut rsrp[k * n..(k + 1) * n]);
        }
        rsrp
    }

    fn state_from_snapshot(&self, snap: &NetworkSnapshot) -> State {
        let n = self.cfg.num_cells;
        let budget = self.cfg.radio.cell_prb_budget as f64;
        let mut edge_ratios = vec![0.0; n];
        let mut users = vec![0usize; n];
        let mut edges = vec![0usize; n];
        for k in 0..self.cfg.num_users {
            let cell = snap.association.serving(k);
            users[cell] += 1;
            if snap.edge_flags[k] {
                edges[cell] += 1;
            }
        }
        for cell in 0..n {
            if users[cell] > 0 {
                edge_ratios[cell] = edges[cell] as f64 / users[cell] as f64;
            }
        }
        State {
            cell_loads: snap.cell_load_prb.iter().map(|&l| l / budget).collect(),
            edge_ratios,
        }
    }
}

/// Population standard deviation (denominator = sample count).
pub fn population_std(samples: &[f64]) -> f64 {
    // Welford keeps the running mean exact for constant inputs, so a flat
    // load series reports a spread of exactly zero.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    if samples.is_empty() {
        0.0
    } else {
        (m2 / samples.len() as f64).sqrt()
    }
}
