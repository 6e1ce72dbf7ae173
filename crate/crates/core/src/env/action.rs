use crate::error::{Error, Result};

pub const ACTION_COUNT: usize = 5;

/// Speed selector values a joystick throw can map to.
pub const SPEED_SET: [f64; 4] = [0.0, 20.0, 40.0, 80.0];

/// Five-slot control vector `[steer, speed_sel, forward, backward, brake]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVector {
    /// In `[-80, 80]`; canonical actions use -40, 0 or 40.
    pub steer: f64,
    pub speed_sel: f64,
    pub forward: bool,
    pub backward: bool,
    pub brake: bool,
}

impl ActionVector {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.steer,
            self.speed_sel,
            self.forward as u8 as f64,
            self.backward as u8 as f64,
            self.brake as u8 as f64,
        ]
    }

    const fn flags(steer: f64, forward: bool, backward: bool, brake: bool) -> Self {
        Self {
            steer,
            speed_sel: 0.0,
            forward,
            backward,
            brake,
        }
    }
}

pub const ACTION_NAMES: [&str; ACTION_COUNT] = ["left", "right", "straight", "backward", "brake"];

const CANONICAL: [ActionVector; ACTION_COUNT] = [
    ActionVector::flags(-40.0, true, false, false),
    ActionVector::flags(40.0, true, false, false),
    ActionVector::flags(0.0, true, false, false),
    ActionVector::flags(0.0, false, true, false),
    ActionVector::flags(0.0, false, false, true),
];

/// 0 left, 1 right, 2 straight, 3 backward, 4 brake.
pub fn decode_action(index: usize) -> Result<ActionVector> {
    CANONICAL.get(index).copied().ok_or(Error::ActionIndex(index))
}
