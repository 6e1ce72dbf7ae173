//! Deterministic top-down track world observed only through rendered frames.

pub mod action;
pub mod render;
pub mod track;
pub mod world;

pub use action::{decode_action, ActionVector, ACTION_COUNT, ACTION_NAMES, SPEED_SET};
pub use render::{render_observation, write_atomic, ObservationFrame, Preset, GRAY_WEIGHTS};
pub use track::{Surface, Track, TrackSpec, BUNDLED_TRACKS};
pub use world::{frame_skip_step, landmark_reward, reset, step, CarState, Env, EnvConfig, StepInfo, StepResult};
