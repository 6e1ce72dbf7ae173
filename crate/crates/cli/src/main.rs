//! `drqn`: train, evaluate, render and inspect recurrent Q-learning driving agents.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use drqn_core::agent::{rollout, QNetwork, RolloutStats};
use drqn_core::env::{decode_action, write_atomic, Env, ObservationFrame, Track, TrackSpec, ACTION_COUNT};
use drqn_core::trainer::{self, checkpoint, TrainConfig, CONFIG_FILE};
use drqn_core::viz::{self, Selection};
use drqn_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "drqn", version, about = "Recurrent Q-learning driving agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a new agent (or resume one) and log per-episode metrics.
    Train {
        /// Bundled track name (oval-small, s-curve, hairpin) or a track file.
        #[arg(long)]
        track: String,
        /// `key = value` config file; defaults are used for missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Total episodes to have run when training stops.
        #[arg(long, default_value_t = 100)]
        episodes: u64,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory for config.txt, metrics.csv and checkpoint.bin.
        #[arg(long, default_value = "runs/default")]
        out: PathBuf,
        /// Continue from the checkpoint in --out instead of starting over.
        #[arg(long)]
        resume: bool,
    },
    /// Greedy rollouts of a checkpoint; unfinished episodes are reported as DNF.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        track: String,
        #[arg(long, default_value_t = 10)]
        episodes: u64,
        /// Seeds the exploration draws when --epsilon > 0.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Defaults to config.txt beside the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Uniform-random policy rollouts, in the same format as eval.
    RandomBaseline {
        #[arg(long)]
        track: String,
        #[arg(long, default_value_t = 10)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Supplies environment settings (step limit, frame skip, rewards).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// One greedy rollout with every observation written as a PGM.
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        track: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Activation maps and a deconvolution reconstruction for one conv layer.
    VizFeatures {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Input frame as a binary PGM matching the observation preset.
        #[arg(long)]
        frame: PathBuf,
        /// 1-based conv layer index.
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Select::Max)]
        select: Select,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Select {
    Max,
    All,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Track(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn load_track(name: &str) -> Result<Track, Failure> {
    let spec = TrackSpec::resolve(name).map_err(|e| match e {
        Error::Io(io) => Failure::Config(format!("track {name:?}: {io}")),
        other => other.into(),
    })?;
    Ok(Track::new(spec)?)
}

fn load_config(path: Option<&Path>) -> Result<TrainConfig, Failure> {
    match path {
        Some(p) => TrainConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("{}: {io}", p.display())),
            other => other.into(),
        }),
        None => Ok(TrainConfig::default()),
    }
}

/// `--config`, else `config.txt` next to the checkpoint, else defaults.
fn checkpoint_config(checkpoint: &Path, explicit: Option<&Path>) -> Result<TrainConfig, Failure> {
    if explicit.is_some() {
        return load_config(explicit);
    }
    let beside = checkpoint.parent().unwrap_or(Path::new(".")).join(CONFIG_FILE);
    load_config(beside.exists().then_some(beside.as_path()))
}

fn load_net(checkpoint: &Path, cfg: &TrainConfig) -> Result<QNetwork, Failure> {
    Ok(checkpoint::load_network(checkpoint, cfg)?)
}

fn stat_line(i: u64, s: &RolloutStats, m: usize) -> String {
    format!(
        "episode {i}: steps={} reward={:.4} landmarks={}/{m} {}",
        s.steps,
        s.total_reward,
        s.landmarks_passed,
        if s.finished { "finished" } else { "DNF" }
    )
}

fn summary_line(all: &[RolloutStats]) -> String {
    let finished: Vec<&RolloutStats> = all.iter().filter(|s| s.finished).collect();
    let dnf = all.len() - finished.len();
    let landmarks = all.iter().map(|s| s.landmarks_passed as f64).sum::<f64>() / all.len().max(1) as f64;
    let mut out = format!(
        "summary: episodes={} finished={} dnf={} mean_landmarks={landmarks:.3}",
        all.len(),
        finished.len(),
        dnf
    );
    if finished.is_empty() {
        out.push_str(" mean_finished_steps=DNF mean_finished_reward=DNF");
    } else {
        let n = finished.len() as f64;
        let steps = finished.iter().map(|s| s.steps as f64).sum::<f64>() / n;
        let reward = finished.iter().map(|s| s.total_reward).sum::<f64>() / n;
        write!(out, " mean_finished_steps={steps:.2} mean_finished_reward={reward:.4}").unwrap();
    }
    out
}

/// Per-episode stream derived from the base seed by a fixed offset.
fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

fn cmd_train(
    track: &str,
    config: Option<&Path>,
    episodes: u64,
    seed: Option<u64>,
    out: &Path,
    resume: bool,
) -> CliResult {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let track = load_track(track)?;
    trainer::train(&cfg, track, episodes, out, resume, |s| {
        println!(
            "episode {} steps={} reward={:.4} landmarks={} epsilon={:.4} lr={:.6} loss={:.6}",
            s.episode, s.steps, s.total_reward, s.landmarks_passed, s.epsilon, s.lr, s.mean_loss
        );
    })?;
    Ok(())
}

fn cmd_eval(checkpoint: &Path, track: &str, episodes: u64, seed: u64, epsilon: f64, config: Option<&Path>) -> CliResult {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Failure::Config(format!("--epsilon must be in [0, 1], got {epsilon}")));
    }
    let cfg = checkpoint_config(checkpoint, config)?;
    let net = load_net(checkpoint, &cfg)?;
    let track = load_track(track)?;
    let m = track.landmark_count();
    let mut env = Env::new(track, cfg.env());
    let mut all = Vec::new();
    for i in 0..episodes {
        let mut rng = episode_rng(seed, i);
        let s = rollout(&net, &mut env, cfg.step_limit, epsilon, &mut rng, |_, _, _| {})?;
        println!("{}", stat_line(i + 1, &s, m));
        all.push(s);
    }
    println!("{}", summary_line(&all));
    Ok(())
}

fn random_episode(env: &mut Env, max_steps: u64, rng: &mut ChaCha8Rng) -> Result<RolloutStats, Failure> {
    env.reset();
    let mut s = RolloutStats {
        steps: 0,
        total_reward: 0.0,
        landmarks_passed: 0,
        finished: false,
    };
    while s.steps < max_steps {
        let res = env.step(&decode_action(rng.gen_range(0..ACTION_COUNT))?);
        s.steps += 1;
        s.total_reward += res.reward;
        s.landmarks_passed = res.info.landmarks_passed;
        s.finished = res.info.finished;
        if res.done {
            break;
        }
    }
    Ok(s)
}

fn cmd_random_baseline(track: &str, episodes: u64, seed: u64, config: Option<&Path>) -> CliResult {
    let cfg = load_config(config)?;
    let track = load_track(track)?;
    let m = track.landmark_count();
    let mut env = Env::new(track, cfg.env());
    let mut all = Vec::new();
    for i in 0..episodes {
        let s = random_episode(&mut env, cfg.step_limit, &mut episode_rng(seed, i))?;
        println!("{}", stat_line(i + 1, &s, m));
        all.push(s);
    }
    println!("{}", summary_line(&all));
    Ok(())
}

fn cmd_render(checkpoint: &Path, track: &str, out: &Path, config: Option<&Path>) -> CliResult {
    let cfg = checkpoint_config(checkpoint, config)?;
    let net = load_net(checkpoint, &cfg)?;
    let track = load_track(track)?;
    std::fs::create_dir_all(out)?;
    let mut env = Env::new(track, cfg.env());
    let mut frames: Vec<ObservationFrame> = Vec::new();
    let mut log = String::from("step action reward\n");
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let stats = rollout(&net, &mut env, cfg.step_limit, 0.0, &mut rng, |obs, a, r| {
        writeln!(log, "{} {a} {r}", frames.len()).unwrap();
        frames.push(obs.clone());
    })?;
    for (i, f) in frames.iter().enumerate() {
        f.write_pgm(&out.join(format!("frame_{i:05}.pgm")))?;
    }
    write_atomic(&out.join("actions.txt"), log.as_bytes())?;
    println!("{}", stat_line(1, &stats, env.track().landmark_count()));
    Ok(())
}

fn cmd_viz(checkpoint: &Path, frame: &Path, layer: usize, out: &Path, select: Select, config: Option<&Path>) -> CliResult {
    let cfg = checkpoint_config(checkpoint, config)?;
    let net = load_net(checkpoint, &cfg)?;
    let frame = ObservationFrame::from_pgm(&std::fs::read(frame)?)?;
    let selection = match select {
        Select::Max => Selection::Max,
        Select::All => Selection::All,
    };
    let v = viz::visualize(&net, &frame, layer, selection)?;
    for p in viz::write_viz(&v, out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Train {
            track,
            config,
            episodes,
            seed,
            out,
            resume,
        } => cmd_train(track, config.as_deref(), *episodes, *seed, out, *resume),
        Command::Eval {
            checkpoint,
            track,
            episodes,
            seed,
            epsilon,
            config,
        } => cmd_eval(checkpoint, track, *episodes, *seed, *epsilon, config.as_deref()),
        Command::RandomBaseline {
            track,
            episodes,
            seed,
            config,
        } => cmd_random_baseline(track, *episodes, *seed, config.as_deref()),
        Command::Render {
            checkpoint,
            track,
            out,
            config,
        } => cmd_render(checkpoint, track, out, config.as_deref()),
        Command::VizFeatures {
            checkpoint,
            frame,
            layer,
            out,
            select,
            config,
        } => cmd_viz(checkpoint, frame, *layer, out, *select, config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
