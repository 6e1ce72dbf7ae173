use std::path::Path;
use std::process::{Command, Output};

use drqn_core::agent::rollout;
use drqn_core::env::{Env, ObservationFrame, Track, TrackSpec};
use drqn_core::trainer::{checkpoint, TrainConfig};

const QUICK: &str = "step_limit = 12\nwarmup = 100000\nminibatch = 2\nmemory_capacity = 200\n";

fn drqn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drqn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Trains `episodes` quick episodes into `dir/run` and returns the run dir.
fn quick_run(dir: &Path, episodes: u64) -> std::path::PathBuf {
    let cfg = dir.join("cfg.txt");
    std::fs::write(&cfg, QUICK).unwrap();
    let run = dir.join("run");
    let o = drqn(&[
        "train",
        "--track",
        "oval-small",
        "--config",
        cfg.to_str().unwrap(),
        "--episodes",
        &episodes.to_string(),
        "--seed",
        "3",
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    run
}

#[test]
fn missing_track_is_a_usage_error() {
    let o = drqn(&["train", "--episodes", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    for sub in ["train", "eval", "random-baseline", "render", "viz-features"] {
        let o = drqn(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
}

#[test]
fn bad_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "gamma = 2\n").unwrap();
    let o = drqn(&[
        "train",
        "--track",
        "oval-small",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = drqn(&["random-baseline", "--track", "no-such-track", "--episodes", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn zero_episodes_writes_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = quick_run(dir.path(), 0);
    assert!(run.join("checkpoint.bin").exists());
    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1);
}

#[test]
fn train_logs_one_row_per_episode() {
    let dir = tempfile::tempdir().unwrap();
    let run = quick_run(dir.path(), 3);
    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 4);
    assert_eq!(
        metrics.lines().next().unwrap(),
        "episode,steps,total_reward,landmarks_passed,epsilon,lr,mean_loss,wall_ms"
    );
}

#[test]
fn eval_prints_stats_and_summary_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = quick_run(dir.path(), 1);
    let ck = run.join("checkpoint.bin");
    let args = ["eval", "--checkpoint", ck.to_str().unwrap(), "--track", "oval-small", "--episodes", "10"];
    let a = drqn(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 11);
    assert!(text.lines().last().unwrap().starts_with("summary:"));
    assert_eq!(stdout(&drqn(&args)), text);
}

#[test]
fn corrupt_checkpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let run = quick_run(dir.path(), 0);
    let ck = run.join("checkpoint.bin");
    let mut bytes = std::fs::read(&ck).unwrap();
    bytes.truncate(bytes.len() / 2);
    std::fs::write(&ck, bytes).unwrap();
    let o = drqn(&["eval", "--checkpoint", ck.to_str().unwrap(), "--track", "oval-small"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn random_baseline_rows_and_determinism() {
    let args = ["random-baseline", "--track", "hairpin", "--episodes", "4", "--seed", "9"];
    let a = stdout(&drqn(&args));
    assert_eq!(a.lines().filter(|l| l.starts_with("episode ")).count(), 4);
    assert_eq!(stdout(&drqn(&args)), a);
    let b = stdout(&drqn(&["random-baseline", "--track", "hairpin", "--episodes", "4", "--seed", "10"]));
    assert_ne!(a, b);
}

#[test]
fn render_dumps_the_observations_the_agent_saw() {
    let dir = tempfile::tempdir().unwrap();
    let run = quick_run(dir.path(), 1);
    let ck = run.join("checkpoint.bin");
    let out = dir.path().join("frames");
    let o = drqn(&[
        "render",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--track",
        "oval-small",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let cfg = TrainConfig::parse(QUICK).unwrap();
    let net = checkpoint::load_network(&ck, &cfg).unwrap();
    let mut env = Env::new(Track::new(TrackSpec::bundled("oval-small").unwrap()).unwrap(), cfg.env());
    let mut seen = Vec::new();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let stats = rollout(&net, &mut env, cfg.step_limit, 0.0, &mut rng, |obs, _, _| seen.push(obs.clone())).unwrap();

    let mut pgms: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    pgms.sort();
    assert_eq!(pgms.len() as u64, stats.steps);
    for (p, expected) in pgms.iter().zip(&seen) {
        let bytes = std::fs::read(p).unwrap();
        assert!(bytes.starts_with(b"P5\n64 64\n255\n"));
        assert_eq!(&ObservationFrame::from_pgm(&bytes).unwrap(), expected);
    }
    let log = std::fs::read_to_string(out.join("actions.txt")).unwrap();
    assert_eq!(log.lines().count() as u64, stats.steps + 1);
}

#[test]
fn viz_features_writes_one_map_per_channel() {
    let dir = tempfile::tempdir().unwrap();
    let run = quick_run(dir.path(), 0);
    let ck = run.join("checkpoint.bin");
    let frame = dir.path().join("in.pgm");
    let cfg = TrainConfig::default();
    let (_, obs) = drqn_core::env::reset(
        &Track::new(TrackSpec::bundled("s-curve").unwrap()).unwrap(),
        &cfg.env(),
    );
    obs.write_pgm(&frame).unwrap();
    for (layer, channels, side) in [(1usize, 16usize, 15usize), (2, 32, 6), (3, 32, 4)] {
        let out = dir.path().join(format!("viz{layer}"));
        let o = drqn(&[
            "viz-features",
            "--checkpoint",
            ck.to_str().unwrap(),
            "--frame",
            frame.to_str().unwrap(),
            "--layer",
            &layer.to_string(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let maps: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.contains("_ch"))
            .collect();
        assert_eq!(maps.len(), channels);
        let m = ObservationFrame::from_pgm(&std::fs::read(out.join(format!("layer{layer}_ch00.pgm"))).unwrap()).unwrap();
        assert_eq!((m.width, m.height), (side, side));
        let r = ObservationFrame::from_pgm(&std::fs::read(out.join(format!("layer{layer}_reconstruction.pgm"))).unwrap())
            .unwrap();
        assert_eq!((r.width, r.height), (64, 64));
    }
    let o = drqn(&[
        "viz-features",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--frame",
        frame.to_str().unwrap(),
        "--layer",
        "7",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}
