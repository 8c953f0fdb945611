//! User mobility: Random Waypoint and a simplified cluster-confined SLAW.
//!
//! A trace is a pure function of (config, seed). One tick defaults to 15
//! minutes of model time; speeds are in m/s so the per-tick displacement is
//! speed * tick_seconds. The SLAW variant keeps the full RWP stepping kernel
//! but draws waypoints inside the user's current cluster disk, occasionally
//! retargeting a different cluster -- the behaviorally relevant property of
//! SLAW for load dynamics (persistent spatial hotspots) without the fractal
//! waypoint machinery.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::geom::Point;
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityModel {
    Rwp,
    Slaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    pub num_users: usize,
    pub area_m: (f64, f64),
    pub tick_seconds: f64,
    pub rwp_speed_range: (f64, f64),
    /// Pause after reaching a waypoint, drawn uniformly in whole ticks.
    pub rwp_pause_range: (u32, u32),
    pub slaw_num_clusters: usize,
    pub slaw_cluster_radius_m: f64,
    /// Per-arrival probability of retargeting a different cluster.
    pub slaw_switch_prob: f64,
    pub rng_seed: u64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            model: MobilityModel::Rwp,
            num_users: 80,
            area_m: (400.0, 400.0),
            tick_seconds: 900.0,
            rwp_speed_range: (0.5, 1.5),
            rwp_pause_range: (0, 4),
            slaw_num_clusters: 4,
            slaw_cluster_radius_m: 60.0,
            slaw_switch_prob: 0.02,
            rng_seed: 0,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.num_users == 0 {
            return Err(CoreError::Config("num_users must be positive".into()));
        }
        if self.area_m.0 <= 0.0 || self.area_m.1 <= 0.0 {
            return Err(CoreError::Config("area dimensions must be positive".into()));
        }
        if self.tick_seconds <= 0.0 {
            return Err(CoreError::Config("tick_seconds must be positive".into()));
        }
        if self.rwp_speed_range.0 < 0.0 || self.rwp_speed_range.0 > self.rwp_speed_range.1 {
            return Err(CoreError::Config("speed range must be ordered and non-negative".into()));
        }
        if self.rwp_pause_range.0 > self.rwp_pause_range.1 {
            return Err(CoreError::Config("pause range must be ordered".into()));
        }
        if self.model == MobilityModel::Slaw {
            if self.slaw_num_clusters == 0 {
                return Err(CoreError::Config("slaw_num_clusters must be positive".into()));
            }
            if self.slaw_cluster_radius_m <= 0.0 {
                return Err(CoreError::Config("slaw_cluster_radius_m must be positive".into()));
            }
            if !(0.0..=1.0).contains(&self.slaw_switch_prob) {
                return Err(CoreError::Config("slaw_switch_prob must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct UserMotion {
    waypoint: Point,
    speed_m_s: f64,
    pause_ticks_left: u32,
    /// Cluster owning the current waypoint (SLAW only).
    cluster: usize,
}

/// Evolving positions for one user population.
#[derive(Debug, Clone)]
pub struct MobilityState {
    cfg: MobilityConfig,
    rng: Stream,
    positions: Vec<Point>,
    motion: Vec<UserMotion>,
    clusters: Vec<Point>,
}

impl MobilityState {
    /// Seeds from `cfg.rng_seed`.
    pub fn new(cfg: &MobilityConfig) -> Result<Self, CoreError> {
        Self::with_seed(cfg, cfg.rng_seed)
    }

    /// Seeds from an explicit value (the harness derives one per run).
    pub fn with_seed(cfg: &MobilityConfig, seed: u64) -> Result<Self, CoreError> {
        cfg.validate()?;
        let mut rng = seed::substream(seed, "mobility");
        let (w, h) = cfg.area_m;
        let mut clusters = Vec::new();
        let mut positions = Vec::with_capacity(cfg.num_users);
        let mut motion = Vec::with_capacity(cfg.num_users);
        match cfg.model {
            MobilityModel::Rwp => {
                for _ in 0..cfg.num_users {
                    let pos = Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h);
                    let waypoint = Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h);
                    let speed = draw_range(&mut rng, cfg.rwp_speed_range);
                    positions.push(pos);
                    motion.push(UserMotion {
                        waypoint,
                        speed_m_s: speed,
                        pause_ticks_left: 0,
                        cluster: 0,
                    });
                }
            }
            MobilityModel::Slaw => {
                for _ in 0..cfg.slaw_num_clusters {
                    clusters.push(Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h));
                }
                for _ in 0..cfg.num_users {
                    let c = rng.random_range(0..cfg.slaw_num_clusters);
                    let pos = clamp_to_area(disk_point(&mut rng, &clusters[c], cfg.slaw_cluster_radius_m), w, h);
                    let waypoint =
                        clamp_to_area(disk_point(&mut rng, &clusters[c], cfg.slaw_cluster_radius_m), w, h);
                    let speed = draw_range(&mut rng, cfg.rwp_speed_range);
                    positions.push(pos);
                    motion.push(UserMotion {
                        waypoint,
                        speed_m_s: speed,
                        pause_ticks_left: 0,
                        cluster: c,
                    });
                }
            }
        }
        Ok(MobilityState {
            cfg: cfg.clone(),
            rng,
            positions,
            motion,
            clusters,
        })
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Cluster owning the user's current waypoint (SLAW only).
    pub fn user_cluster(&self, user: usize) -> Option<usize> {
        match self.cfg.model {
            MobilityModel::Slaw => Some(self.motion[user].cluster),
            MobilityModel::Rwp => None,
        }
    }

    /// Advance one tick.
    pub fn step(&mut self) {
        match self.cfg.model {
            MobilityModel::Rwp => self.step_rwp(),
            MobilityModel::Slaw => self.step_slaw(),
        }
    }

    fn step_rwp(&mut self) {
        let (w, h) = self.cfg.area_m;
        for u in 0..self.positions.len() {
            if self.motion[u].pause_ticks_left > 0 {
                self.motion[u].pause_ticks_left -= 1;
                continue;
            }
            let arrived = advance(&mut self.positions[u], &self.motion[u], self.cfg.tick_seconds);
            if arrived {
                let m = &mut self.motion[u];
                m.waypoint = Point::new(self.rng.random::<f64>() * w, self.rng.random::<f64>() * h);
                m.speed_m_s = draw_range(&mut self.rng, self.cfg.rwp_speed_range);
                m.pause_ticks_left = draw_pause(&mut self.rng, self.cfg.rwp_pause_range);
            }
            self.positions[u] = clamp_to_area(self.positions[u], w, h);
        }
    }

    fn step_slaw(&mut self) {
        let (w, h) = self.cfg.area_m;
        let radius = self.cfg.slaw_cluster_radius_m;
        for u in 0..self.positions.len() {
            if self.motion[u].pause_ticks_left > 0 {
                self.motion[u].pause_ticks_left -= 1;
                continue;
            }
            let arrived = advance(&mut self.positions[u], &self.motion[u], self.cfg.tick_seconds);
            if arrived {
                let n_clusters = self.clusters.len();
                let switch = n_clusters > 1 && self.rng.random::<f64>() < self.cfg.slaw_switch_prob;
                let m = &mut self.motion[u];
                if switch {
                    // pick a different cluster and travel to it
                    let mut c = self.rng.random_range(0..n_clusters - 1);
                    if c >= m.cluster {
                        c += 1;
                    }
                    m.cluster = c;
                }
                m.waypoint =
                    clamp_to_area(disk_point(&mut self.rng, &self.clusters[m.cluster], radius), w, h);
                m.speed_m_s = draw_range(&mut self.rng, self.cfg.rwp_speed_range);
                m.pause_ticks_left = draw_pause(&mut self.rng, self.cfg.rwp_pause_range);
            }
            self.positions[u] = clamp_to_area(self.positions[u], w, h);
        }
    }
}

/// Move toward the waypoint; true if it was reached this tick.
fn advance(pos: &mut Point, m: &UserMotion, tick_seconds: f64) -> bool {
    let step = m.speed_m_s * tick_seconds;
    let dist = pos.distance(&m.waypoint);
    if dist <= step {
        *pos = m.waypoint;
        true
    } else {
        let f = step / dist;
        pos.x += (m.waypoint.x - pos.x) * f;
        pos.y += (m.waypoint.y - pos.y) * f;
        false
    }
}

fn draw_range(rng: &mut Stream, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        lo + rng.random::<f64>() * (hi - lo)
    } else {
        lo
    }
}

fn draw_pause(rng: &mut Stream, (lo, hi): (u32, u32)) -> u32 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Uniform point in the disk around `center`.
fn disk_point(rng: &mut Stream, center: &Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

fn clamp_to_area(p: Point, w: f64, h: f64) -> Point {
    Point::new(p.x.clamp(0.0, w), p.y.clamp(0.0, h))
}

/// Recorded positions, `positions[tick][user]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTrace {
    pub positions: Vec<Vec<Point>>,
}

impl UserTrace {
    pub fn save_csv(&self, path: &Path) -> Result<(), CoreError> {
        let mut out = String::from("tick,user,x,y\n");
        for (t, row) in self.positions.iter().enumerate() {
            for (u, p) in row.iter().enumerate() {
                out.push_str(&format!("{t},{u},{},{}\n", p.x, p.y));
            }
        }
        std::fs::write(path, out).map_err(|e| CoreError::io(path.display().to_string(), e))
    }

    pub fn load_csv(path: &Path) -> Result<Self, CoreError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
        let err = |line: usize, reason: String| CoreError::Csv {
            path: path.display().to_string(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "tick,user,x,y")) => {}
            _ => return Err(err(1, "expected header 'tick,user,x,y'".into())),
        }
        let mut positions: Vec<Vec<Point>> = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut field = |name: &str| -> Result<&str, CoreError> {
                parts.next().ok_or_else(|| err(i + 1, format!("missing {name}")))
            };
            let t: usize = field("tick")?
                .parse()
                .map_err(|_| err(i + 1, "bad tick".into()))?;
            let u: usize = field("user")?
                .parse()
                .map_err(|_| err(i + 1, "bad user".into()))?;
            let x: f64 = field("x")?.parse().map_err(|_| err(i + 1, "bad x".into()))?;
            let y: f64 = field("y")?.parse().map_err(|_| err(i + 1, "bad y".into()))?;
            if t == positions.len() {
                positions.push(Vec::new());
            }
            if t != positions.len() - 1 || u != positions[t].len() {
                return Err(err(i + 1, "rows must be ordered by (tick, user)".into()));
            }
            positions[t].push(Point::new(x, y));
        }
        let k = positions.first().map_or(0, |r| r.len());
        if positions.iter().any(|r| r.len() != k) {
            return Err(err(0, "ragged trace: user count varies across ticks".into()));
        }
        Ok(UserTrace { positions })
    }
}

/// Run the model for `ticks` steps, recording every tick (including t=0).
pub fn generate_trace(cfg: &MobilityConfig, seed: u64, ticks: usize) -> Result<UserTrace, CoreError> {
    let mut state = MobilityState::with_seed(cfg, seed)?;
    let mut positions = Vec::with_capacity(ticks + 1);
    positions.push(state.positions().to_vec());
    for _ in 0..ticks {
        state.step();
        positions.push(state.positions().to_vec());
    }
    Ok(UserTrace { positions })
}
