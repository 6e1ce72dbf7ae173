//! Egocentric grayscale rendering and PGM (P5) I/O.

use std::io::{self, Write};
use std::path::Path;

use crate::env::track::{Surface, Track};
use crate::env::world::CarState;
use crate::error::{Error, Result};

pub const TRACK_GRAY: u8 = 200;
pub const LANDMARK_GRAY: u8 = 0;

/// Luma weights for converting an RGB source to gray. The simulator draws
/// gray directly, so these only apply to externally supplied color frames.
pub const GRAY_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// World units covered from the bottom row to the top row of a frame.
pub const VIEW_DEPTH: f64 = 80.0;

pub fn rgb_to_gray(r: u8, g: u8, b: u8) -> u8 {
    let y = GRAY_WEIGHTS[0] * r as f64 + GRAY_WEIGHTS[1] * g as f64 + GRAY_WEIGHTS[2] * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk64,
    Low160x120,
    Full320x240,
}

impl Preset {
    pub fn dims(self) -> (usize, usize) {
        match self {
            Preset::Desk64 => (64, 64),
            Preset::Low160x120 => (160, 120),
            Preset::Full320x240 => (320, 240),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk64 => "64x64",
            Preset::Low160x120 => "160x120",
            Preset::Full320x240 => "320x240",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "64x64" => Some(Preset::Desk64),
            "160x120" => Some(Preset::Low160x120),
            "320x240" => Some(Preset::Full320x240),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationFrame {
    pub width: usize,
    pub height: usize,
    /// Row-major gray levels.
    pub pixels: Vec<u8>,
}

impl ObservationFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} frame given {} pixels",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    /// Pixels scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Shape("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(Error::Shape(format!("not an 8-bit P5 PGM: {} / {}", fields[0], fields[3])));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Shape(format!("bad PGM dim {s:?}")));
        let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
        if bytes.len() < pos + w * h {
            return Err(Error::Shape("PGM payload shorter than header claims".into()));
        }
        Self::new(w, h, bytes[pos..pos + w * h].to_vec())
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_pgm())?;
        Ok(())
    }
}

/// Writes via a sibling temp file and rename so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Forward-facing view: the car sits at the bottom-center of the frame and
/// only the half-plane ahead of it is drawn.
pub fn render_observation(track: &Track, car: &CarState, preset: Preset) -> ObservationFrame {
    let (w, h) = preset.dims();
    let scale = VIEW_DEPTH / h as f64;
    let (sin, cos) = car.heading.sin_cos();
    let fwd = [cos, sin];
    // y grows downward, so a clockwise quarter turn gives the car's right
    let right = [-sin, cos];
    let mut pixels = Vec::with_capacity(w * h);
    for row in 0..h {
        let ahead = (h as f64 - row as f64 - 0.5) * scale;
        for col in 0..w {
            let lateral = (col as f64 + 0.5 - w as f64 / 2.0) * scale;
            let p = [
                car.position[0] + ahead * fwd[0] + lateral * right[0],
                car.position[1] + ahead * fwd[1] + lateral * right[1],
            ];
            pixels.push(match track.surface_at(p) {
                Surface::Track => TRACK_GRAY,
                Surface::Landmark => LANDMARK_GRAY,
                Surface::Off => track.speckle_at(p),
            });
        }
    }
    ObservationFrame {
        width: w,
        height: h,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::track::TrackSpec;
    use crate::env::world::{reset, EnvConfig};

    #[test]
    fn bottom_center_is_track() {
        let track = Track::new(TrackSpec::straight(400.0, 12.0, 4)).unwrap();
        let (car, obs) = reset(&track, &EnvConfig::default());
        assert_eq!(car.heading, 0.0);
        for col in 28..36 {
            assert_eq!(obs.pixels[63 * 64 + col], TRACK_GRAY);
        }
    }

    #[test]
    fn rear_is_occluded() {
        let track = Track::new(TrackSpec::straight(400.0, 12.0, 4)).unwrap();
        let (mut car, obs) = reset(&track, &EnvConfig::default());
        let track_px = obs.pixels.iter().filter(|&&p| p == TRACK_GRAY).count();
        assert!(track_px > 64 * 64 / 4);
        car.heading = std::f64::consts::PI;
        let back = render_observation(&track, &car, Preset::Desk64);
        // facing backwards from the start of an open track: no road ahead
        assert_eq!(back.pixels.iter().filter(|&&p| p == TRACK_GRAY).count(), 0);
        assert_ne!(back.pixels, obs.pixels);
    }

    #[test]
    fn render_is_deterministic_and_sized() {
        let track = Track::new(TrackSpec::bundled("s-curve").unwrap()).unwrap();
        let (car, _) = reset(&track, &EnvConfig::default());
        for p in [Preset::Desk64, Preset::Low160x120, Preset::Full320x240] {
            let a = render_observation(&track, &car, p);
            let b = render_observation(&track, &car, p);
            assert_eq!(a, b);
            assert_eq!(a.pixels.len(), p.dims().0 * p.dims().1);
        }
    }

    #[test]
    fn pgm_round_trip() {
        let f = ObservationFrame::new(3, 2, vec![0, 50, 100, 150, 200, 255]).unwrap();
        let bytes = f.to_pgm();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(ObservationFrame::from_pgm(&bytes).unwrap(), f);
        assert!(ObservationFrame::from_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(ObservationFrame::from_pgm(b"P5\n4 4\n255\n\x00").is_err());
    }

    #[test]
    fn gray_weights() {
        assert_eq!(rgb_to_gray(255, 255, 255), 255);
        assert_eq!(rgb_to_gray(0, 0, 0), 0);
        assert_eq!(rgb_to_gray(0, 255, 0), 150);
    }
}
