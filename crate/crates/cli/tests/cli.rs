//! End-to-end tests against the compiled `ranopt` binary.

use ranopt::experiment::{AgentHypers, AgentSpec, MapSpec, StaticPolicyCfg};
use ranopt::{ExperimentConfig, MapGenConfig, MobilityConfig, Point};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ranopt"))
}

/// 16 ticks = 8 two-tick periods; small MLPs keep one train run under a
/// second even on a single core.
fn tiny_cfg(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        output_dir: out.display().to_string(),
        horizon_days: 16.0 * 900.0 / 86_400.0,
        moving_average_window: 4,
        ..ExperimentConfig::default()
    };
    cfg.env.num_cells = 2;
    cfg.env.num_users = 6;
    cfg.env.action_period_ticks = 2;
    cfg.env.mobility = MobilityConfig {
        num_users: 6,
        ..MobilityConfig::default()
    };
    cfg.map = MapSpec::Generate {
        gen: MapGenConfig {
            grid_spacing_m: 40.0,
            shadowing_sigma_db: 2.0,
            ..MapGenConfig::default()
        },
        bs_positions: vec![Point::new(120.0, 200.0), Point::new(280.0, 200.0)],
    };
    cfg.agent = AgentSpec::Pdpg(AgentHypers {
        actor_hidden: vec![8],
        critic_hidden: vec![8],
        batch_size: 4,
        buffer_capacity: 32,
        exploration_decay_step: 4,
        ..AgentHypers::default()
    });
    cfg
}

fn write_cfg(cfg: &ExperimentConfig, path: &Path) {
    std::fs::write(path, cfg.to_toml().unwrap()).unwrap();
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).trim_end().to_string()
}

#[test]
fn missing_config_is_a_one_line_error_naming_the_path() {
    let out = bin()
        .args(["train", "--config", "does/not/exist.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = stderr_line(&out);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("does/not/exist.toml"), "{err}");
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = bin().args(["train", "--bogus"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--bogus"), "{err}");
}

#[test]
fn compare_with_no_runs_is_a_usage_error() {
    let out = bin().arg("compare").output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("required"), "{err}");
}

#[test]
fn genmap_train_evaluate_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train_out = dir.path().join("train-run");
    let mut cfg = tiny_cfg(&train_out);

    // genmap writes the tensor the later runs will load from disk
    let cfg_path = dir.path().join("cfg.toml");
    write_cfg(&cfg, &cfg_path);
    let map_path = dir.path().join("map.bin");
    let out = bin()
        .args(["genmap", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&map_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    assert!(map_path.is_file());

    // retrain against the file-backed map
    cfg.map = MapSpec::File {
        path: map_path.display().to_string(),
    };
    write_cfg(&cfg, &cfg_path);
    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    for name in ["config.toml", "throughput_samples.csv", "cell_load_samples.csv", "convergence.csv", "agent.ckpt"] {
        assert!(train_out.join(name).is_file(), "missing {name}");
    }

    // greedy rollout of the checkpoint into a second directory
    let eval_out = dir.path().join("eval-run");
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&cfg_path)
        .arg("--checkpoint")
        .arg(train_out.join("agent.ckpt"))
        .args(["--out", &eval_out.display().to_string()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    assert!(eval_out.join("throughput_samples.csv").is_file());

    // the two runs share sampling config, so compare accepts them
    let summary_csv = dir.path().join("summary.csv");
    let out = bin()
        .arg("compare")
        .arg(&train_out)
        .arg(&eval_out)
        .args(["--window", "4", "--out"])
        .arg(&summary_csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("train-run"), "{table}");
    assert!(table.contains("eval-run"), "{table}");
    let csv = std::fs::read_to_string(&summary_csv).unwrap();
    assert!(csv.starts_with("# schema: compare_summary v1\n"), "{csv}");
    assert_eq!(csv.lines().count(), 4, "{csv}");
}

#[test]
fn evaluate_rejects_a_checkpoint_with_the_wrong_width() {
    let dir = tempfile::tempdir().unwrap();
    let train_out = dir.path().join("train-run");
    let cfg = tiny_cfg(&train_out);
    let cfg_path = dir.path().join("cfg.toml");
    write_cfg(&cfg, &cfg_path);
    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));

    // same checkpoint, wider scenario: 3 cells -> different state/action dims
    let mut wide = tiny_cfg(&dir.path().join("wide-run"));
    wide.env.num_cells = 3;
    if let MapSpec::Generate { bs_positions, .. } = &mut wide.map {
        bs_positions.push(Point::new(200.0, 120.0));
    }
    let wide_path = dir.path().join("wide.toml");
    write_cfg(&wide, &wide_path);
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&wide_path)
        .arg("--checkpoint")
        .arg(train_out.join("agent.ckpt"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = stderr_line(&out);
    assert!(err.contains("schema error"), "{err}");
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn agent_kind_must_match_the_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_cfg(&dir.path().join("static-run"));
    cfg.agent = AgentSpec::Static3(StaticPolicyCfg::default());
    let cfg_path = dir.path().join("cfg.toml");
    write_cfg(&cfg, &cfg_path);

    let out = bin().args(["train", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr_line(&out).contains("static subcommand"), "{}", stderr_line(&out));

    let out = bin().args(["static", "--config"]).arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    assert!(dir.path().join("static-run/solver_stats.txt").is_file());
}

#[test]
fn seed_flag_and_output_env_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg(&dir.path().join("ignored"));
    let cfg_path = dir.path().join("cfg.toml");
    write_cfg(&cfg, &cfg_path);

    let env_out = dir.path().join("env-run");
    let out = bin()
        .args(["train", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "9"])
        .env("RANOPT_OUTPUT_DIR", &env_out)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    let echo = std::fs::read_to_string(env_out.join("config.toml")).unwrap();
    assert!(echo.contains("master_seed = 9"), "{echo}");
    assert!(!dir.path().join("ignored").exists());

    // an explicit --out flag beats the env var
    let flag_out = dir.path().join("flag-run");
    let out = bin()
        .args(["train", "--config"])
        .arg(&cfg_path)
        .args(["--out", &flag_out.display().to_string()])
        .env("RANOPT_OUTPUT_DIR", dir.path().join("unused"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_line(&out));
    assert!(flag_out.join("config.toml").is_file());
    assert!(!dir.path().join("unused").exists());
}
