//! Car kinematics, landmark rewards and the frame-skip wrapper.

use crate::env::action::ActionVector;
use crate::env::render::{render_observation, ObservationFrame, Preset};
use crate::env::track::{Surface, Track};
use crate::error::{Error, Result};

/// Simulator constants. All distances in world units, times in ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// Heading change per tick at full steer and full speed (radians).
    pub k_turn: f64,
    /// World units per tick per speed-selector unit.
    pub s_gain: f64,
    /// First-order lag coefficient toward the target speed.
    pub lag: f64,
    pub brake_factor: f64,
    pub off_track_friction: f64,
    pub forward_speed_sel: f64,
    pub backward_speed_sel: f64,
    /// Charged every tick. Dyadic so episode sums are exact in binary.
    pub step_penalty: f64,
    pub r_land: f64,
    pub r_finish: f64,
    /// Agent steps per episode.
    pub step_limit: u64,
    pub frame_skip: u32,
    pub preset: Preset,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            k_turn: 0.08,
            s_gain: 0.05,
            lag: 0.2,
            brake_factor: 0.5,
            off_track_friction: 0.4,
            forward_speed_sel: 40.0,
            backward_speed_sel: -20.0,
            step_penalty: -0.002_441_406_25,
            r_land: 10.0,
            r_finish: 100.0,
            step_limit: 2000,
            frame_skip: 3,
            preset: Preset::Desk64,
        }
    }
}

impl EnvConfig {
    pub fn v_max(&self) -> f64 {
        self.forward_speed_sel * self.s_gain
    }

    pub fn tick_limit(&self) -> u64 {
        self.step_limit * (self.frame_skip as u64 + 1)
    }
}

/// Full simulator state. The agent never sees this, only rendered frames.
#[derive(Debug, Clone, PartialEq)]
pub struct CarState {
    pub position: [f64; 2],
    pub heading: f64,
    pub speed: f64,
    pub progress: f64,
    pub landmarks_passed: usize,
    pub ticks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub landmarks_passed: usize,
    pub progress: f64,
    pub ticks: u64,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: ObservationFrame,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Phased bonus for landmarks `prev+1..=new` (1-based), `r_land * i / m` each,
/// plus `r_finish` when the last one is among them.
pub fn landmark_reward(prev: usize, new: usize, m: usize, r_land: f64, r_finish: f64) -> Result<f64> {
    if prev > new || new > m {
        return Err(Error::LandmarkOrder { prev, new, total: m });
    }
    let mut r = 0.0;
    for i in prev + 1..=new {
        r += r_land * i as f64 / m as f64;
    }
    if new == m && prev < m {
        r += r_finish;
    }
    Ok(r)
}

/// Car at the start of the centerline, at rest, facing along the track.
pub fn reset(track: &Track, config: &EnvConfig) -> (CarState, ObservationFrame) {
    let (position, heading) = track.start_pose();
    let state = CarState {
        position,
        heading,
        speed: 0.0,
        progress: 0.0,
        landmarks_passed: 0,
        ticks: 0,
    };
    let obs = render_observation(track, &state, config.preset);
    (state, obs)
}

/// Advances one tick in place and returns `(reward, done)`.
fn advance(state: &mut CarState, action: &ActionVector, track: &Track, cfg: &EnvConfig) -> (f64, bool) {
    let v_max = cfg.v_max();
    if action.brake {
        state.speed *= cfg.brake_factor;
    } else {
        let target = if action.forward {
            cfg.forward_speed_sel * cfg.s_gain
        } else if action.backward {
            cfg.backward_speed_sel * cfg.s_gain
        } else {
            0.0
        };
        state.speed += cfg.lag * (target - state.speed);
    }
    state.heading += cfg.k_turn * (action.steer / 40.0) * (state.speed.abs() / v_max);
    let friction = if track.surface_at(state.position) == Surface::Off {
        cfg.off_track_friction
    } else {
        1.0
    };
    let step = state.speed * friction;
    state.position[0] += step * state.heading.cos();
    state.position[1] += step * state.heading.sin();

    let window = 3.0 * track.half_width() + 4.0 * v_max + 5.0;
    let (arc, _) = track.project_near(state.position, state.progress, window);
    state.progress = arc.clamp(0.0, track.length());
    let prev = state.landmarks_passed;
    let marks = track.landmarks();
    while state.landmarks_passed < marks.len() && state.progress >= marks[state.landmarks_passed] - 1e-9 {
        state.landmarks_passed += 1;
    }
    state.ticks += 1;
    let m = marks.len();
    let reward = landmark_reward(prev, state.landmarks_passed, m, cfg.r_land, cfg.r_finish)
        .expect("landmarks only increase")
        + cfg.step_penalty;
    let done = state.landmarks_passed == m || state.ticks >= cfg.tick_limit();
    (reward, done)
}

fn info(state: &CarState, m: usize) -> StepInfo {
    StepInfo {
        landmarks_passed: state.landmarks_passed,
        progress: state.progress,
        ticks: state.ticks,
        finished: state.landmarks_passed == m,
    }
}

/// One simulator tick.
pub fn step(state: &mut CarState, action: &ActionVector, track: &Track, cfg: &EnvConfig) -> StepResult {
    let (reward, done) = advance(state, action, track, cfg);
    StepResult {
        observation: render_observation(track, state, cfg.preset),
        reward,
        done,
        info: info(state, track.landmark_count()),
    }
}

/// Repeats `action` for `k + 1` ticks, stopping early on `done`; rewards are summed
/// and only the final frame is rendered.
pub fn frame_skip_step(state: &mut CarState, action: &ActionVector, k: u32, track: &Track, cfg: &EnvConfig) -> StepResult {
    let mut total = 0.0;
    let mut done = false;
    for _ in 0..=k {
        let (r, d) = advance(state, action, track, cfg);
        total += r;
        if d {
            done = true;
            break;
        }
    }
    StepResult {
        observation: render_observation(track, state, cfg.preset),
        reward: total,
        done,
        info: info(state, track.landmark_count()),
    }
}

/// A track, its simulator constants and the current car state.
#[derive(Debug, Clone)]
pub struct Env {
    track: Track,
    config: EnvConfig,
    state: CarState,
}

impl Env {
    pub fn new(track: Track, config: EnvConfig) -> Self {
        let (state, _) = reset(&track, &config);
        Self { track, config, state }
    }

    pub fn reset(&mut self) -> ObservationFrame {
        let (state, obs) = reset(&self.track, &self.config);
        self.state = state;
        obs
    }

    /// One agent step: the action held for `frame_skip + 1` ticks.
    pub fn step(&mut self, action: &ActionVector) -> StepResult {
        frame_skip_step(&mut self.state, action, self.config.frame_skip, &self.track, &self.config)
    }

    pub fn state(&self) -> &CarState {
        &self.state
    }

    pub fn track(&self) -> &Track {
        &self.track
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn observation(&self) -> ObservationFrame {
        render_observation(&self.track, &self.state, self.config.preset)
    }
}
