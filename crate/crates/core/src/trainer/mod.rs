//! The training loop: episodes with frame skip, replay pushes, one batched
//! update per agent step after warmup, periodic target sync, checkpoints and a
//! per-episode metrics log.

pub mod checkpoint;
pub mod config;
pub mod schedule;

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{Counters, Snapshot};
pub use config::TrainConfig;
pub use schedule::Schedule;

use crate::agent::{select_action, sync_target, train_on_batch, Init, QNetwork};
use crate::env::{decode_action, write_atomic, Env, Track};
use crate::error::{Error, Result};
use crate::replay::{ReplayMemory, Transition};

pub const METRICS_HEADER: &str = "episode,steps,total_reward,landmarks_passed,epsilon,lr,mean_loss,wall_ms";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    /// 1-based.
    pub episode: u64,
    pub steps: u64,
    pub total_reward: f64,
    pub landmarks_passed: usize,
    /// Schedule values at the first step of the episode.
    pub epsilon: f64,
    pub lr: f64,
    /// Mean training loss over this episode's updates; NaN when none ran.
    pub mean_loss: f64,
    pub updates: u64,
    pub finished: bool,
    pub wall_ms: u64,
}

impl EpisodeStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.episode,
            self.steps,
            self.total_reward,
            self.landmarks_passed,
            self.epsilon,
            self.lr,
            self.mean_loss,
            self.wall_ms
        )
    }
}

pub struct Trainer {
    config: TrainConfig,
    env: Env,
    state: Snapshot,
    /// Largest `|sum(A) - 1|` seen on any forward call.
    pub weighting_max_dev: f64,
    pub forward_calls: u64,
}

impl Trainer {
    pub fn new(config: TrainConfig, track: Track) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut net = QNetwork::new(config.network()?, Init::Uniform, &mut rng)?;
        net.round_to_f32();
        let target = net.clone();
        let memory = ReplayMemory::new(config.memory_capacity, config.dup_c, config.dup_r_scale);
        let state = Snapshot {
            net,
            target,
            counters: Counters::default(),
            rng,
            memory,
        };
        Ok(Self::from_snapshot(config, track, state))
    }

    pub fn from_snapshot(config: TrainConfig, track: Track, state: Snapshot) -> Self {
        let env = Env::new(track, config.env());
        Self {
            config,
            env,
            state,
            weighting_max_dev: 0.0,
            forward_calls: 0,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.state
    }

    pub fn into_snapshot(self) -> Snapshot {
        self.state
    }

    pub fn counters(&self) -> Counters {
        self.state.counters
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.state.memory
    }

    /// One training episode, followed by the target sync when due.
    pub fn run_episode(&mut self) -> Result<EpisodeStats> {
        let started = Instant::now();
        let eps_s = self.config.epsilon_schedule()?;
        let lr_s = self.config.lr_schedule()?;
        let episode_id = self.state.counters.episodes;
        let mut stats = EpisodeStats {
            episode: episode_id + 1,
            steps: 0,
            total_reward: 0.0,
            landmarks_passed: 0,
            epsilon: eps_s.value_at(self.state.counters.agent_steps),
            lr: lr_s.value_at(self.state.counters.agent_steps),
            mean_loss: f64::NAN,
            updates: 0,
            finished: false,
            wall_ms: 0,
        };
        let mut loss_sum = 0.0;
        let mut obs = self.env.reset();
        let mut lstm = self.state.net.zero_state();
        loop {
            let step = self.state.counters.agent_steps;
            let out = self.state.net.forward(&obs, &lstm)?;
            self.forward_calls += 1;
            self.weighting_max_dev = self.weighting_max_dev.max((out.a.iter().sum::<f64>() - 1.0).abs());
            lstm = out.state;
            let a = select_action(&out.q, eps_s.value_at(step), &mut self.state.rng);
            let res = self.env.step(&decode_action(a)?);
            self.state.memory.push(Transition {
                observation: obs,
                action_index: a,
                reward: res.reward,
                done: res.done,
                episode_id,
                step_index: stats.steps,
            });
            stats.steps += 1;
            stats.total_reward += res.reward;
            stats.landmarks_passed = res.info.landmarks_passed;
            stats.finished = res.info.finished;
            self.state.counters.agent_steps += 1;
            if self.state.memory.len() >= self.config.warmup {
                if let Some(loss) = self.update(lr_s.value_at(step))? {
                    loss_sum += loss;
                    stats.updates += 1;
                }
            }
            obs = res.observation;
            if res.done {
                break;
            }
        }
        if stats.updates > 0 {
            stats.mean_loss = loss_sum / stats.updates as f64;
        }
        self.state.counters.episodes += 1;
        if self.state.counters.episodes % self.config.target_sync_episodes == 0 {
            sync_target(&self.state.net, &mut self.state.target)?;
        }
        if self.config.record_wall_time {
            stats.wall_ms = started.elapsed().as_millis() as u64;
        }
        Ok(stats)
    }

    fn update(&mut self, lr: f64) -> Result<Option<f64>> {
        let windows = match self.state.memory.sample_windows(
            self.config.minibatch,
            self.config.window_len,
            self.config.burn_in,
            &mut self.state.rng,
        ) {
            Ok(w) => w,
            Err(Error::NoEligibleWindow { .. }) | Err(Error::EmptyMemory) => return Ok(None),
            Err(e) => return Err(e),
        };
        let loss = train_on_batch(
            &mut self.state.net,
            &self.state.target,
            &windows,
            &self.config.train_step(lr),
        )?;
        self.state.counters.updates += 1;
        Ok(Some(loss))
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        checkpoint::save(path, &self.config, &self.state)
    }
}

/// Files of a training run directory.
pub struct RunPaths {
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub config: PathBuf,
}

impl RunPaths {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            checkpoint: out_dir.join(CHECKPOINT_FILE),
            metrics: out_dir.join(METRICS_FILE),
            config: out_dir.join(CONFIG_FILE),
        }
    }
}

/// Keeps the header and the first `rows` data rows of a metrics log.
fn truncate_metrics(path: &Path, rows: u64) -> Result<()> {
    let file = File::open(path)?;
    let mut kept = String::new();
    let mut count = 0;
    for line in BufReader::new(file).lines() {
        let line = line?;
        if count > rows {
            break;
        }
        kept.push_str(&line);
        kept.push('\n');
        count += 1;
    }
    if count < rows + 1 || !kept.starts_with(METRICS_HEADER) {
        return Err(Error::Config(format!(
            "{} holds fewer than the {rows} episodes recorded in the checkpoint",
            path.display()
        )));
    }
    write_atomic(path, kept.as_bytes())?;
    Ok(())
}

/// Trains until `episodes` episodes have run in total, writing `config.txt`,
/// `metrics.csv` and `checkpoint.bin` under `out_dir`. With `resume`, an
/// existing checkpoint in `out_dir` is continued and the metrics log is cut
/// back to the checkpointed episode count first. On a training error the
/// last written checkpoint is left untouched.
pub fn train(
    config: &TrainConfig,
    track: Track,
    episodes: u64,
    out_dir: &Path,
    resume: bool,
    mut on_episode: impl FnMut(&EpisodeStats),
) -> Result<Trainer> {
    fs::create_dir_all(out_dir)?;
    let paths = RunPaths::new(out_dir);
    let mut trainer = if resume && paths.checkpoint.exists() {
        let snap = checkpoint::load(&paths.checkpoint, config)?;
        truncate_metrics(&paths.metrics, snap.counters.episodes)?;
        Trainer::from_snapshot(config.clone(), track, snap)
    } else {
        let t = Trainer::new(config.clone(), track)?;
        write_atomic(&paths.config, config.canonical_text().as_bytes())?;
        write_atomic(&paths.metrics, format!("{METRICS_HEADER}\n").as_bytes())?;
        t.save_checkpoint(&paths.checkpoint)?;
        t
    };
    let mut log = OpenOptions::new().append(true).open(&paths.metrics)?;
    while trainer.counters().episodes < episodes {
        let stats = trainer.run_episode()?;
        writeln!(log, "{}", stats.csv_row())?;
        log.flush()?;
        on_episode(&stats);
        let done = trainer.counters().episodes;
        if done % config.checkpoint_every == 0 || done == episodes {
            trainer.save_checkpoint(&paths.checkpoint)?;
        }
    }
    Ok(trainer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TrackSpec;

    fn quick() -> TrainConfig {
        TrainConfig {
            step_limit: 30,
            warmup: 20,
            minibatch: 2,
            memory_capacity: 200,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn warmup_blocks_updates() {
        let track = Track::new(TrackSpec::straight(400.0, 12.0, 4)).unwrap();
        let cfg = TrainConfig {
            warmup: 1000,
            ..quick()
        };
        let mut t = Trainer::new(cfg, track).unwrap();
        let s = t.run_episode().unwrap();
        assert_eq!(s.updates, 0);
        assert!(s.mean_loss.is_nan());
        assert_eq!(t.counters().agent_steps, s.steps);
    }

    #[test]
    fn updates_after_warmup() {
        let track = Track::new(TrackSpec::straight(400.0, 12.0, 4)).unwrap();
        let mut t = Trainer::new(quick(), track).unwrap();
        let s = t.run_episode().unwrap();
        assert_eq!(s.steps, 30);
        assert_eq!(s.updates, 30 - 19);
        assert!(s.mean_loss.is_finite());
        assert!(t.weighting_max_dev < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip_is_byte_identical() {
        let track = Track::new(TrackSpec::straight(400.0, 12.0, 4)).unwrap();
        let cfg = quick();
        let mut t = Trainer::new(cfg.clone(), track).unwrap();
        t.run_episode().unwrap();
        let bytes = checkpoint::encode(&cfg, t.snapshot());
        let back = checkpoint::decode(&cfg, &bytes).unwrap();
        assert_eq!(checkpoint::encode(&cfg, &back), bytes);
        assert_eq!(back.net.params().max_abs_diff(t.snapshot().net.params()), 0.0);
    }

    #[test]
    fn checkpoint_rejections() {
        let track = Track::new(TrackSpec::straight(400.0, 12.0, 4)).unwrap();
        let cfg = quick();
        let t = Trainer::new(cfg.clone(), track).unwrap();
        let bytes = checkpoint::encode(&cfg, t.snapshot());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(checkpoint::decode(&cfg, &bad), Err(Error::CheckpointVersion(_))));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(checkpoint::decode(&cfg, &v2), Err(Error::CheckpointVersion(_))));
        assert!(matches!(
            checkpoint::decode(&cfg, &bytes[..bytes.len() - 10]),
            Err(Error::CheckpointCorrupt(_))
        ));
        let mut flipped = bytes.clone();
        flipped[100] ^= 1;
        assert!(matches!(checkpoint::decode(&cfg, &flipped), Err(Error::CheckpointCorrupt(_))));
        let other = TrainConfig { gamma: 0.8, ..cfg };
        assert!(matches!(checkpoint::decode(&other, &bytes), Err(Error::DigestMismatch)));
    }

    #[test]
    fn csv_row_format() {
        let s = EpisodeStats {
            episode: 3,
            steps: 10,
            total_reward: -0.5,
            landmarks_passed: 1,
            epsilon: 0.9,
            lr: 0.001,
            mean_loss: f64::NAN,
            updates: 0,
            finished: false,
            wall_ms: 0,
        };
        assert_eq!(s.csv_row(), "3,10,-0.5,1,0.9,0.001,NaN,0");
    }
}
