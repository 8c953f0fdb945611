//! Static joint association/tilt benchmark: an exact enumerator for tiny
//! instances plus two relaxed brute-force heuristics, and a periodic policy
//! that re-solves on frozen snapshots with oracle access to user positions,
//! applying associations directly instead of steering them through CIOs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{population_std, EnvConfig, TickLog};
use crate::error::CoreError;
use crate::geom::Point;
use crate::mobility::MobilityState;
use crate::pdpg::PeriodLog;
use crate::radio::{sinr, AssociationMatrix, NetworkSnapshot, RadioConfig};
use crate::rsrp::RsrpTensor;
use crate::seed::{self, Stream};

/// How the tilt combination set is formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TiltComboSet {
    /// Every combination of per-cell tilt indices (M^N entries).
    Full,
    /// One shared tilt index for all cells (M entries).
    SameForAll,
    Explicit { combos: Vec<Vec<usize>> },
}

impl TiltComboSet {
    pub fn build(&self, num_tilts: usize, n_cells: usize) -> Result<Vec<Vec<usize>>, CoreError> {
        match self {
            TiltComboSet::Full => {
                let size = (num_tilts as u128).checked_pow(n_cells as u32);
                match size {
                    Some(s) if s <= 1_000_000 => {}
                    _ => {
                        return Err(CoreError::Config(format!(
                            "full tilt combo set {num_tilts}^{n_cells} is too large to enumerate"
                        )))
                    }
                }
                let mut out = Vec::new();
                let mut combo = vec![0usize; n_cells];
                loop {
                    out.push(combo.clone());
                    let mut i = 0;
                    loop {
                        if i == n_cells {
                            return Ok(out);
                        }
                        combo[i] += 1;
                        if combo[i] < num_tilts {
                            break;
                        }
                        combo[i] = 0;
                        i += 1;
                    }
                }
            }
            TiltComboSet::SameForAll => {
                Ok((0..num_tilts).map(|m| vec![m; n_cells]).collect())
            }
            TiltComboSet::Explicit { combos } => {
                validate_combos(combos, num_tilts, n_cells)?;
                Ok(combos.clone())
            }
        }
    }
}

fn validate_combos(combos: &[Vec<usize>], num_tilts: usize, n_cells: usize) -> Result<(), CoreError> {
    if combos.is_empty() {
        return Err(CoreError::Config("tilt combination set is empty".into()));
    }
    for c in combos {
        if c.len() != n_cells {
            return Err(CoreError::Config(format!(
                "tilt combo {:?} does not have one entry per cell ({})",
                c, n_cells
            )));
        }
        if let Some(&bad) = c.iter().find(|&&m| m >= num_tilts) {
            return Err(CoreError::Config(format!(
                "tilt index {bad} out of range (dictionary has {num_tilts})"
            )));
        }
    }
    Ok(())
}

/// A frozen single-tick view of the network: per tilt combination, the K x N
/// RSRP and rate matrices all solvers work from.
#[derive(Debug, Clone)]
pub struct StaticInstance {
    n_cells: usize,
    n_users: usize,
    combos: Vec<Vec<usize>>,
    radio: RadioConfig,
    throughput_scale_mbps: f64,
    /// Row-major K x N per combo.
    rsrp_per_combo: Vec<Vec<f64>>,
    rates_per_combo: Vec<Vec<f64>>,
}

impl StaticInstance {
    /// Freeze the current user positions against a map.
    pub fn from_positions(
        map: &RsrpTensor,
        positions: &[Point],
        combos: &[Vec<usize>],
        radio: RadioConfig,
        throughput_scale_mbps: f64,
    ) -> Result<Self, CoreError> {
        let n = map.num_bs();
        validate_combos(combos, map.num_tilts, n)?;
        if positions.is_empty() {
            return Err(CoreError::Config("instance needs at least one user".into()));
        }
        radio.validate()?;
        let k = positions.len();
        let anchors: Vec<usize> = positions.iter().map(|p| map.nearest_anchor(p)).collect();
        let mut rsrp_per_combo = Vec::with_capacity(combos.len());
        let mut rates_per_combo = Vec::with_capacity(combos.len());
        for combo in combos {
            let mut rsrp = vec![0.0; k * n];
            for (u, &a) in anchors.iter().enumerate() {
                map.anchor_rsrp_into(a, combo, &mut rsrp[u * n..(u + 1) * n]);
            }
            let mut rates = vec![0.0; k * n];
            for u in 0..k {
                let row = &rsrp[u * n..(u + 1) * n];
                for cell in 0..n {
                    let s = sinr(row, cell, radio.noise_dbm);
                    rates[u * n + cell] = radio.cqi_table.rate_from_sinr(s);
                }
            }
            rsrp_per_combo.push(rsrp);
            rates_per_combo.push(rates);
        }
        Ok(StaticInstance {
            n_cells: n,
            n_users: k,
            combos: combos.to_vec(),
            radio,
            throughput_scale_mbps,
            rsrp_per_combo,
            rates_per_combo,
        })
    }

    /// Synthetic instance from explicit matrices (one K x N rate and RSRP
    /// matrix per combo).
    pub fn from_parts(
        n_cells: usize,
        n_users: usize,
        combos: Vec<Vec<usize>>,
        radio: RadioConfig,
        throughput_scale_mbps: f64,
        rsrp_per_combo: Vec<Vec<f64>>,
        rates_per_combo: Vec<Vec<f64>>,
    ) -> Result<Self, CoreError> {
        if combos.is_empty() {
            return Err(CoreError::Config("tilt combination set is empty".into()));
        }
        if combos.iter().any(|c| c.len() != n_cells) {
            return Err(CoreError::Config("each combo needs one tilt per cell".into()));
        }
        if rsrp_per_combo.len() != combos.len() || rates_per_combo.len() != combos.len() {
            return Err(CoreError::schema(
                format!("{} matrices (one per combo)", combos.len()),
                format!("{} rsrp, {} rates", rsrp_per_combo.len(), rates_per_combo.len()),
            ));
        }
        let want = n_cells * n_users;
        for m in rsrp_per_combo.iter().chain(rates_per_combo.iter()) {
            if m.len() != want {
                return Err(CoreError::schema(
                    format!("K x N matrix of {want} entries"),
                    format!("{} entries", m.len()),
                ));
            }
        }
        if rates_per_combo.iter().flatten().any(|&r| r < 0.0) {
            return Err(CoreError::Config("rates must be non-negative".into()));
        }
        radio.validate()?;
        Ok(StaticInstance {
            n_cells,
            n_users,
            combos,
            radio,
            throughput_scale_mbps,
            rsrp_per_combo,
            rates_per_combo,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn combos(&self) -> &[Vec<usize>] {
        &self.combos
    }

    pub fn radio(&self) -> &RadioConfig {
        &self.radio
    }

    pub fn rates(&self, combo_idx: usize) -> &[f64] {
        &self.rates_per_combo[combo_idx]
    }

    pub fn rsrp(&self, combo_idx: usize) -> &[f64] {
        &self.rsrp_per_combo[combo_idx]
    }

    /// Run the shared radio pipeline (demand, scheduling, metrics) for one
    /// candidate association under one tilt combo.
    pub fn evaluate(&self, combo_idx: usize, serving: &[usize]) -> Result<CandidateEval, CoreError> {
        let assoc = AssociationMatrix::new(self.n_cells, serving.to_vec())?;
        let snap = NetworkSnapshot::compute_with_rate_table(
            self.rsrp_per_combo[combo_idx].clone(),
            &self.rates_per_combo[combo_idx],
            assoc,
            &self.radio,
        );
        let throughput_sum: f64 = snap.cell_throughput_mbps.iter().sum();
        let max_load = snap
            .cell_load_prb
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(CandidateEval {
            throughput_term: throughput_sum / self.throughput_scale_mbps,
            balance_term: -max_load / self.radio.cell_prb_budget as f64,
            cell_throughput_mbps: snap.cell_throughput_mbps,
            cell_load_prb: snap.cell_load_prb,
        })
    }

    /// Number of candidate associations for one combo.
    fn association_count(&self) -> Option<u128> {
        (self.n_cells as u128).checked_pow(self.n_users as u32)
    }
}

/// Metrics of one (combo, association) candidate, in the same normalized
/// units the RL reward uses.
#[derive(Debug, Clone)]
pub struct CandidateEval {
    pub cell_throughput_mbps: Vec<f64>,
    pub cell_load_prb: Vec<f64>,
    /// Sum throughput over the scale constant.
    pub throughput_term: f64,
    /// Negative max cell load over the PRB budget.
    pub balance_term: f64,
}

impl CandidateEval {
    pub fn objective(&self, lambda: f64) -> f64 {
        self.throughput_term + lambda * self.balance_term
    }

    fn passes_phi(&self, phi: Option<f64>) -> bool {
        match phi {
            None => true,
            Some(p) => self.cell_throughput_mbps.iter().all(|&r| r > p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StaticSolution {
    pub association: AssociationMatrix,
    pub tilt: Vec<usize>,
    /// The solver's own selection objective (utility for the exact and fair
    /// solvers, negative normalized max load for the small-lambda one).
    pub objective: f64,
    /// (throughput term, balance term), both normalized.
    pub components: (f64, f64),
    /// True when every candidate failed the phi filter and the unfiltered
    /// best was returned instead.
    pub used_phi_fallback: bool,
}

/// Visit every association of K users to N cells (user 0 varies fastest).
fn for_each_association(n_cells: usize, n_users: usize, mut f: impl FnMut(&[usize])) {
    let mut digits = vec![0usize; n_users];
    loop {
        f(&digits);
        let mut i = 0;
        loop {
            if i == n_users {
                return;
            }
            digits[i] += 1;
            if digits[i] < n_cells {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

struct Best {
    objective: f64,
    combo_idx: usize,
    serving: Vec<usize>,
    components: (f64, f64),
}

impl Best {
    fn new() -> Self {
        Best {
            objective: f64::NEG_INFINITY,
            combo_idx: 0,
            serving: Vec::new(),
            components: (0.0, 0.0),
        }
    }

    /// Strict improvement only, so the first candidate wins ties.
    fn offer(&mut self, objective: f64, combo_idx: usize, serving: &[usize], components: (f64, f64)) {
        if objective > self.objective {
            self.objective = objective;
            self.combo_idx = combo_idx;
            self.serving = serving.to_vec();
            self.components = components;
        }
    }

    fn into_solution(self, instance: &StaticInstance, fallback: bool) -> Result<StaticSolution, CoreError> {
        Ok(StaticSolution {
            association: AssociationMatrix::new(instance.n_cells, self.serving)?,
            tilt: instance.combos[self.combo_idx].clone(),
            objective: self.objective,
            components: self.components,
            used_phi_fallback: fallback,
        })
    }
}

/// Globally optimal association and tilt combo for U = throughput term +
/// lambda * balance term, by exhaustive enumeration. Candidates where some
/// cell's throughput is <= phi are discarded; if that discards everything,
/// the unfiltered optimum is returned with `used_phi_fallback` set.
pub fn exact_enumerate(
    instance: &StaticInstance,
    lambda: f64,
    phi: Option<f64>,
    cap: u64,
) -> Result<StaticSolution, CoreError> {
    let per_combo = instance
        .association_count()
        .ok_or_else(|| CoreError::Config("association count overflows".into()))?;
    let total = per_combo.saturating_mul(instance.combos.len() as u128);
    if total > cap as u128 {
        return Err(CoreError::Config(format!(
            "enumeration size {total} ({}^{} associations x {} combos) exceeds the cap {cap}",
            instance.n_cells,
            instance.n_users,
            instance.combos.len()
        )));
    }
    let mut best = Best::new();
    let mut best_unfiltered = Best::new();
    let mut any_passed = false;
    for c in 0..instance.combos.len() {
        let mut inner_err = None;
        for_each_association(instance.n_cells, instance.n_users, |serving| {
            if inner_err.is_some() {
                return;
            }
            match instance.evaluate(c, serving) {
                Ok(eval) => {
                    let obj = eval.objective(lambda);
                    let comps = (eval.throughput_term, eval.balance_term);
                    best_unfiltered.offer(obj, c, serving, comps);
                    if eval.passes_phi(phi) {
                        any_passed = true;
                        best.offer(obj, c, serving, comps);
                    }
                }
                Err(e) => inner_err = Some(e),
            }
        });
        if let Some(e) = inner_err {
            return Err(e);
        }
    }
    if any_passed {
        best.into_solution(instance, false)
    } else {
        best_unfiltered.into_solution(instance, true)
    }
}

/// Round-robin greedy assignment: cells take turns claiming their
/// highest-rate unassigned user (ties to the lowest user index).
fn round_robin_greedy(rates: &[f64], n_cells: usize, n_users: usize) -> Vec<usize> {
    let mut serving = vec![usize::MAX; n_users];
    let mut assigned = vec![false; n_users];
    for step in 0..n_users {
        let cell = step % n_cells;
        let mut pick: Option<usize> = None;
        for u in 0..n_users {
            if assigned[u] {
                continue;
            }
            let better = match pick {
                None => true,
                Some(p) => rates[u * n_cells + cell] > rates[p * n_cells + cell],
            };
            if better {
                pick = Some(u);
            }
        }
        let u = pick.expect("unassigned user exists");
        serving[u] = cell;
        assigned[u] = true;
    }
    serving
}

/// Algorithm for the small-lambda regime: greedy round-robin assignment per
/// tilt combo, keeping the combo that minimizes the max cell load. The
/// returned objective is the negative normalized max load.
pub fn heuristic_small_lambda(
    instance: &StaticInstance,
    phi: Option<f64>,
) -> Result<StaticSolution, CoreError> {
    let mut best = Best::new();
    let mut best_unfiltered = Best::new();
    let mut any_passed = false;
    for c in 0..instance.combos.len() {
        let serving = round_robin_greedy(instance.rates(c), instance.n_cells, instance.n_users);
        let eval = instance.evaluate(c, &serving)?;
        let comps = (eval.throughput_term, eval.balance_term);
        // selection objective: minimize max load = maximize balance term
        best_unfiltered.offer(eval.balance_term, c, &serving, comps);
        if eval.passes_phi(phi) {
            any_passed = true;
            best.offer(eval.balance_term, c, &serving, comps);
        }
    }
    if any_passed {
        best.into_solution(instance, false)
    } else {
        best_unfiltered.into_solution(instance, true)
    }
}

/// Greedy-vs-random branch counts across all assignments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FairStats {
    pub greedy_assignments: u64,
    pub random_assignments: u64,
}

/// Greedy-branch probability for a given tradeoff parameter.
pub fn fair_threshold(lambda: f64) -> f64 {
    assert!(lambda >= 0.0);
    lambda / (1.0 + lambda)
}

/// Algorithm for the fair-lambda regime: per tilt combo and repetition,
/// users are assigned one at a time -- with probability w the next
/// round-robin cell claims its highest-rate unassigned user, otherwise a
/// uniformly random unassigned user joins its strongest-RSRP cell. One coin
/// per assignment. Best candidate by U = throughput + lambda * balance.
pub fn heuristic_fair_lambda(
    instance: &StaticInstance,
    lambda: f64,
    w: f64,
    reps: usize,
    phi: Option<f64>,
    rng: &mut Stream,
) -> Result<StaticSolution, CoreError> {
    heuristic_fair_lambda_with_stats(instance, lambda, w, reps, phi, rng).map(|(s, _)| s)
}

pub fn heuristic_fair_lambda_with_stats(
    instance: &StaticInstance,
    lambda: f64,
    w: f64,
    reps: usize,
    phi: Option<f64>,
    rng: &mut Stream,
) -> Result<(StaticSolution, FairStats), CoreError> {
    if !(0.0..=1.0).contains(&w) {
        return Err(CoreError::Config(format!("branch threshold w = {w} outside [0, 1]")));
    }
    if reps == 0 {
        return Err(CoreError::Config("need at least one repetition per combo".into()));
    }
    let n = instance.n_cells;
    let k = instance.n_users;
    let mut stats = FairStats::default();
    let mut best = Best::new();
    let mut best_unfiltered = Best::new();
    let mut any_passed = false;
    let mut serving = vec![usize::MAX; k];
    let mut assigned = vec![false; k];
    for c in 0..instance.combos.len() {
        let rates = instance.rates(c);
        let rsrp = instance.rsrp(c);
        for _ in 0..reps {
            serving.iter_mut().for_each(|s| *s = usize::MAX);
            assigned.iter_mut().for_each(|a| *a = false);
            let mut pointer = 0usize;
            let mut remaining = k;
            while remaining > 0 {
                let coin: f64 = rng.random();
                if coin < w {
                    stats.greedy_assignments += 1;
                    let cell = pointer % n;
                    pointer += 1;
                    let mut pick: Option<usize> = None;
                    for u in 0..k {
                        if assigned[u] {
                            continue;
                        }
                        let better = match pick {
                            None => true,
                            Some(p) => rates[u * n + cell] > rates[p * n + cell],
                        };
                        if better {
                            pick = Some(u);
                        }
                    }
                    let u = pick.expect("remaining > 0");
                    serving[u] = cell;
                    assigned[u] = true;
                } else {
                    stats.random_assignments += 1;
                    let target = rng.random_range(0..remaining);
                    let mut seen = 0usize;
                    let mut u = 0usize;
                    for cand in 0..k {
                        if assigned[cand] {
                            continue;
                        }
                        if seen == target {
                            u = cand;
                            break;
                        }
                        seen += 1;
                    }
                    let row = &rsrp[u * n..(u + 1) * n];
                    let mut cell = 0usize;
                    for (i, &p) in row.iter().enumerate() {
                        if p > row[cell] {
                            cell = i;
                        }
                    }
                    serving[u] = cell;
                    assigned[u] = true;
                }
                remaining -= 1;
            }
            let eval = instance.evaluate(c, &serving)?;
            let obj = eval.objective(lambda);
            let comps = (eval.throughput_term, eval.balance_term);
            best_unfiltered.offer(obj, c, &serving, comps);
            if eval.passes_phi(phi) {
                any_passed = true;
                best.offer(obj, c, &serving, comps);
            }
        }
    }
    let sol = if any_passed {
        best.into_solution(instance, false)?
    } else {
        best_unfiltered.into_solution(instance, true)?
    };
    Ok((sol, stats))
}

/// Which solver a periodic static policy runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StaticSolver {
    Exact { lambda: f64, phi: Option<f64>, cap: u64 },
    SmallLambda { phi: Option<f64> },
    FairLambda { lambda: f64, w: f64, reps: usize, phi: Option<f64> },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StaticRunStats {
    pub solves: u64,
    pub candidates_evaluated: u64,
}

/// Run a static policy over the same mobility trace an RL run with this
/// master seed would see: every `resolve_every_ticks` ticks the solver is
/// re-run on the frozen current snapshot and its (association, tilt) applied
/// directly; metrics aggregate into the same per-period reward vector the
/// environment emits.
pub fn periodic_static_policy(
    env_cfg: &EnvConfig,
    map: &RsrpTensor,
    combos: &[Vec<usize>],
    solver: &StaticSolver,
    resolve_every_ticks: usize,
    total_periods: u64,
    log_weights: &[f64],
    master_seed: u64,
) -> Result<(Vec<PeriodLog>, StaticRunStats), CoreError> {
    periodic_static_policy_logged(
        env_cfg,
        map,
        combos,
        solver,
        resolve_every_ticks,
        total_periods,
        log_weights,
        master_seed,
        &mut |_| {},
    )
}

/// As `periodic_static_policy`, forwarding each tick's metrics to a sink.
#[allow(clippy::too_many_arguments)]
pub fn periodic_static_policy_logged(
    env_cfg: &EnvConfig,
    map: &RsrpTensor,
    combos: &[Vec<usize>],
    solver: &StaticSolver,
    resolve_every_ticks: usize,
    total_periods: u64,
    log_weights: &[f64],
    master_seed: u64,
    on_tick: &mut dyn FnMut(&TickLog),
) -> Result<(Vec<PeriodLog>, StaticRunStats), CoreError> {
    env_cfg.validate()?;
    if map.num_bs() != env_cfg.num_cells {
        return Err(CoreError::schema(
            format!("map with {} base stations", env_cfg.num_cells),
            format!("{} base stations", map.num_bs()),
        ));
    }
    validate_combos(combos, map.num_tilts, env_cfg.num_cells)?;
    if resolve_every_ticks == 0 {
        return Err(CoreError::Config("resolve_every_ticks must be at least 1".into()));
    }
    if log_weights.len() != env_cfg.reward_dims {
        return Err(CoreError::Config(format!(
            "{} log weights for {} reward dims",
            log_weights.len(),
            env_cfg.reward_dims
        )));
    }

    let n = env_cfg.num_cells;
    let t_period = env_cfg.action_period_ticks;
    let budget = env_cfg.radio.cell_prb_budget as f64;
    let mut mobility = MobilityState::with_seed(&env_cfg.mobility, master_seed)?;
    let mut coin = seed::substream(master_seed, "heuristic-coin");
    let mut stats = StaticRunStats::default();
    let mut association: Option<AssociationMatrix> = None;
    let mut tilt: Vec<usize> = Vec::new();
    let mut global_tick: u64 = 0;
    let mut logs = Vec::with_capacity(total_periods as usize);
    let mut rsrp_buf = vec![0.0; env_cfg.num_users * n];

    for period in 0..total_periods {
        let mut sum_throughput = 0.0;
        let mut mean_load = vec![0.0; n];
        let mut load_samples = Vec::with_capacity(n * t_period);
        let mut handovers = 0usize;
        for _ in 0..t_period {
            mobility.step();
            let mut tick_handovers = 0usize;
            if global_tick % resolve_every_ticks as u64 == 0 {
                let instance = StaticInstance::from_positions(
                    map,
                    mobility.positions(),
                    combos,
                    env_cfg.radio.clone(),
                    env_cfg.throughput_scale_mbps,
                )?;
                let solution = match solver {
                    StaticSolver::Exact { lambda, phi, cap } => {
                        stats.candidates_evaluated += (instance
                            .association_count()
                            .unwrap_or(u128::MAX)
                            .saturating_mul(combos.len() as u128))
                            .min(u64::MAX as u128) as u64;
                        exact_enumerate(&instance, *lambda, *phi, *cap)?
                    }
                    StaticSolver::SmallLambda { phi } => {
                        stats.candidates_evaluated += combos.len() as u64;
                        heuristic_small_lambda(&instance, *phi)?
                    }
                    StaticSolver::FairLambda { lambda, w, reps, phi } => {
                        stats.candidates_evaluated += (combos.len() * reps) as u64;
                        heuristic_fair_lambda(&instance, *lambda, *w, *reps, *phi, &mut coin)?
                    }
                };
                stats.solves += 1;
                if let Some(prev) = &association {
                    tick_handovers = prev.diff_count(&solution.association);
                    handovers += tick_handovers;
                }
                association = Some(solution.association);
                tilt = solution.tilt;
            }
            global_tick += 1;

            let assoc = association.as_ref().expect("first tick always solves");
            for (u, p) in mobility.positions().iter().enumerate() {
                map.query_rsrp_into(p, &tilt, &mut rsrp_buf[u * n..(u + 1) * n]);
            }
            let snap = NetworkSnapshot::compute(rsrp_buf.clone(), assoc.clone(), &env_cfg.radio);
            let mut edge_counts = vec![0usize; n];
            let mut users_per_cell = vec![0usize; n];
            for u in 0..env_cfg.num_users {
                let cell = snap.association.serving(u);
                users_per_cell[cell] += 1;
                if snap.edge_flags[u] {
                    edge_counts[cell] += 1;
                }
            }
            sum_throughput += snap.cell_throughput_mbps.iter().sum::<f64>();
            for cell in 0..n {
                let norm = snap.cell_load_prb[cell] / budget;
                mean_load[cell] += norm / t_period as f64;
                load_samples.push(norm);
            }
            on_tick(&TickLog {
                tick: global_tick,
                cell_load_prb: snap.cell_load_prb.clone(),
                cell_throughput_mbps: snap.cell_throughput_mbps.clone(),
                handovers: tick_handovers,
                edge_counts,
                users_per_cell,
            });
        }
        let mut rewards = Vec::with_capacity(env_cfg.reward_dims);
        rewards.push(sum_throughput / t_period as f64 / env_cfg.throughput_scale_mbps);
        let peak = mean_load.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        rewards.push(-peak);
        if env_cfg.reward_dims == 3 {
            rewards.push(-population_std(&load_samples));
        }
        let scalar_reward = log_weights.iter().zip(&rewards).map(|(w, r)| w * r).sum();
        logs.push(PeriodLog {
            period,
            rewards,
            scalar_reward,
            noise_variance: 0.0,
            action: Vec::new(),
            tilt_indices: tilt.clone(),
            handovers,
            critic_losses: None,
            actor_surrogate: None,
        });
    }
    Ok((logs, stats))
}
