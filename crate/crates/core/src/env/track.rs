//! Track geometry: the text format, validation, and the compiled form used by
//! the simulator (arc-length table plus a rasterized surface map).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub const BUNDLED_TRACKS: [&str; 3] = ["oval-small", "s-curve", "hairpin"];

const OVAL_SMALL: &str = include_str!("../../tracks/oval-small.track");
const S_CURVE: &str = include_str!("../../tracks/s-curve.track");
const HAIRPIN: &str = include_str!("../../tracks/hairpin.track");

/// Width of the dark landmark bars, in world units along the track.
const LANDMARK_BAR: f64 = 1.5;
const RASTER_MARGIN: f64 = 160.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    pub centerline: Vec<Point>,
    pub half_width: f64,
    /// Arc-length positions, strictly increasing; the last one is the finish.
    pub landmarks: Vec<f64>,
    pub texture_seed: u64,
}

impl TrackSpec {
    /// Parses `TRACK v1 <half_width> <M>`, then `P x y`, `L s` and an
    /// optional `S seed` line. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Track("empty track file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "TRACK" || h[1] != "v1" {
            return Err(Error::Track(format!("bad header line {header:?}")));
        }
        let half_width: f64 = parse_num(h[2], "half_width")?;
        let m: usize = h[3]
            .parse()
            .map_err(|_| Error::Track(format!("bad landmark count {:?}", h[3])))?;
        let mut spec = TrackSpec {
            centerline: Vec::new(),
            half_width,
            landmarks: Vec::new(),
            texture_seed: 0,
        };
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["P", x, y] => spec.centerline.push([parse_num(x, "x")?, parse_num(y, "y")?]),
                ["L", s] => spec.landmarks.push(parse_num(s, "landmark")?),
                ["S", seed] => {
                    spec.texture_seed = seed
                        .parse()
                        .map_err(|_| Error::Track(format!("bad texture seed {seed:?}")))?
                }
                _ => return Err(Error::Track(format!("unrecognized line {line:?}"))),
            }
        }
        if spec.landmarks.len() != m {
            return Err(Error::Track(format!(
                "header declares {m} landmarks, file lists {}",
                spec.landmarks.len()
            )));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("TRACK v1 {} {}\nS {}\n", self.half_width, self.landmarks.len(), self.texture_seed);
        for p in &self.centerline {
            let _ = writeln!(s, "P {} {}", p[0], p[1]);
        }
        for l in &self.landmarks {
            let _ = writeln!(s, "L {l}");
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn bundled(name: &str) -> Option<Self> {
        let text = match name {
            "oval-small" => OVAL_SMALL,
            "s-curve" => S_CURVE,
            "hairpin" => HAIRPIN,
            _ => return None,
        };
        Some(Self::parse(text).expect("bundled tracks are valid"))
    }

    /// A bundled track name, or otherwise a path to a track file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::bundled(name_or_path) {
            Some(t) => Ok(t),
            None => Self::load(Path::new(name_or_path)),
        }
    }

    /// Straight track along +x of the given length with `m` evenly spaced landmarks.
    pub fn straight(length: f64, half_width: f64, m: usize) -> Self {
        let segments = (length / 20.0).ceil().max(1.0) as usize;
        TrackSpec {
            centerline: (0..=segments)
                .map(|i| [length * i as f64 / segments as f64, 0.0])
                .collect(),
            half_width,
            landmarks: (1..=m).map(|i| length * i as f64 / m as f64).collect(),
            texture_seed: 7,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.centerline
            .windows(2)
            .map(|w| dist(w[0], w[1]))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centerline.len() < 2 {
            return Err(Error::Track("need at least 2 centerline points".into()));
        }
        if self.centerline.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Track("non-finite centerline coordinate".into()));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Track(format!("half_width must be > 0, got {}", self.half_width)));
        }
        if self.centerline.windows(2).any(|w| dist(w[0], w[1]) == 0.0) {
            return Err(Error::Track("repeated consecutive centerline point".into()));
        }
        if self.landmarks.is_empty() {
            return Err(Error::Track("at least one landmark (the finish) is required".into()));
        }
        let total = self.total_length();
        if self.landmarks[0] <= 0.0 || self.landmarks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Track("landmarks must be positive and strictly increasing".into()));
        }
        if *self.landmarks.last().unwrap() > total + 1e-3 {
            return Err(Error::Track(format!(
                "finish landmark {} beyond track length {total}",
                self.landmarks.last().unwrap()
            )));
        }
        Ok(())
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Track(format!("bad {what} value {s:?}")))
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Closest point on segment `a-b` to `p`: returns `(t in [0,1], distance)`.
fn project(p: Point, a: Point, b: Point) -> (f64, f64) {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    let q = [a[0] + t * dx, a[1] + t * dy];
    (t, dist(p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Off,
    Track,
    Landmark,
}

/// One-unit cell grid classifying the world around the track.
#[derive(Debug, Clone)]
struct Raster {
    origin: Point,
    width: usize,
    height: usize,
    cells: Vec<Surface>,
}

/// A validated track with precomputed lookup structures.
#[derive(Debug, Clone)]
pub struct Track {
    spec: TrackSpec,
    cum_len: Vec<f64>,
    raster: Raster,
}

impl Track {
    pub fn new(mut spec: TrackSpec) -> Result<Self> {
        spec.validate()?;
        let total = spec.total_length();
        if let Some(last) = spec.landmarks.last_mut() {
            // absorb rounding in stored finish positions
            *last = last.min(total);
        }
        let mut cum_len = vec![0.0];
        for w in spec.centerline.windows(2) {
            cum_len.push(cum_len.last().unwrap() + dist(w[0], w[1]));
        }
        let raster = rasterize(&spec, &cum_len);
        Ok(Self { spec, cum_len, raster })
    }

    pub fn spec(&self) -> &TrackSpec {
        &self.spec
    }

    pub fn length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    pub fn half_width(&self) -> f64 {
        self.spec.half_width
    }

    pub fn landmarks(&self) -> &[f64] {
        &self.spec.landmarks
    }

    pub fn landmark_count(&self) -> usize {
        self.spec.landmarks.len()
    }

    pub fn start_pose(&self) -> (Point, f64) {
        let a = self.spec.centerline[0];
        let b = self.spec.centerline[1];
        (a, (b[1] - a[1]).atan2(b[0] - a[0]))
    }

    /// Nearest centerline projection among segments whose arc range lies within
    /// `window` of `near_arc`. Returns `(arc_length, distance)`.
    pub fn project_near(&self, p: Point, near_arc: f64, window: f64) -> (f64, f64) {
        let mut best = (near_arc, f64::INFINITY);
        for (i, seg) in self.spec.centerline.windows(2).enumerate() {
            let (s0, s1) = (self.cum_len[i], self.cum_len[i + 1]);
            if s1 < near_arc - window || s0 > near_arc + window {
                continue;
            }
            let (t, d) = project(p, seg[0], seg[1]);
            if d < best.1 {
                best = (s0 + t * (s1 - s0), d);
            }
        }
        best
    }

    pub fn surface_at(&self, p: Point) -> Surface {
        let r = &self.raster;
        let cx = (p[0] - r.origin[0]).floor();
        let cy = (p[1] - r.origin[1]).floor();
        if cx < 0.0 || cy < 0.0 || cx >= r.width as f64 || cy >= r.height as f64 {
            return Surface::Off;
        }
        r.cells[cy as usize * r.width + cx as usize]
    }

    /// Deterministic off-track grey level in `40..=80` for the cell containing `p`.
    pub fn speckle_at(&self, p: Point) -> u8 {
        let cx = p[0].floor() as i64 as u64;
        let cy = p[1].floor() as i64 as u64;
        let mut h = self.spec.texture_seed ^ 0x9E37_79B9_7F4A_7C15;
        h = splitmix(h ^ cx.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        h = splitmix(h ^ cy.wrapping_mul(0x94D0_49BB_1331_11EB));
        40 + (h % 41) as u8
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rasterize(spec: &TrackSpec, cum_len: &[f64]) -> Raster {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &spec.centerline {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let origin = [(lo[0] - RASTER_MARGIN).floor(), (lo[1] - RASTER_MARGIN).floor()];
    let width = (hi[0] + RASTER_MARGIN - origin[0]).ceil() as usize + 1;
    let height = (hi[1] + RASTER_MARGIN - origin[1]).ceil() as usize + 1;
    let mut best_d = vec![f64::INFINITY; width * height];
    let mut best_s = vec![0.0; width * height];
    let hw = spec.half_width;
    let last_seg = spec.centerline.len() - 2;
    for (i, seg) in spec.centerline.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        let x0 = ((a[0].min(b[0]) - hw - origin[0]).floor().max(0.0)) as usize;
        let x1 = ((a[0].max(b[0]) + hw - origin[0]).ceil() as usize).min(width - 1);
        let y0 = ((a[1].min(b[1]) - hw - origin[1]).floor().max(0.0)) as usize;
        let y1 = ((a[1].max(b[1]) + hw - origin[1]).ceil() as usize).min(height - 1);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                let p = [origin[0] + cx as f64 + 0.5, origin[1] + cy as f64 + 0.5];
                let (t, d) = project(p, a, b);
                // open ends are cut flat rather than rounded
                if (i == 0 && t == 0.0) || (i == last_seg && t == 1.0) {
                    continue;
                }
                let idx = cy * width + cx;
                if d < best_d[idx] {
                    best_d[idx] = d;
                    best_s[idx] = cum_len[i] + t * (cum_len[i + 1] - cum_len[i]);
                }
            }
        }
    }
    let cells = best_d
        .iter()
        .zip(&best_s)
        .map(|(&d, &s)| {
            if d > hw {
                Surface::Off
            } else if spec.landmarks.iter().any(|&l| (s - l).abs() <= LANDMARK_BAR) {
                Surface::Landmark
            } else {
                Surface::Track
            }
        })
        .collect();
    Raster {
        origin,
        width,
        height,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tracks_parse() {
        for name in BUNDLED_TRACKS {
            let t = TrackSpec::bundled(name).unwrap();
            assert!(t.landmarks.len() >= 4, "{name}");
            assert!((t.landmarks.last().unwrap() - t.total_length()).abs() < 1e-3);
        }
        assert_eq!(TrackSpec::bundled("oval-small").unwrap().landmarks.len(), 4);
    }

    #[test]
    fn text_round_trip() {
        let t = TrackSpec::straight(200.0, 10.0, 4);
        assert_eq!(TrackSpec::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_tracks() {
        assert!(TrackSpec::parse("TRACK v2 10 1\nP 0 0\nP 1 0\nL 1\n").is_err());
        assert!(TrackSpec::parse("TRACK v1 10 1\nP 0 0\nL 1\n").is_err());
        assert!(TrackSpec::parse("TRACK v1 0 1\nP 0 0\nP 5 0\nL 1\n").is_err());
        assert!(TrackSpec::parse("TRACK v1 10 2\nP 0 0\nP 5 0\nL 3\nL 2\n").is_err());
        assert!(TrackSpec::parse("TRACK v1 10 1\nP 0 0\nP 5 0\nL 6\n").is_err());
        assert!(TrackSpec::parse("TRACK v1 10 2\nP 0 0\nP 5 0\nL 5\n").is_err());
        assert!(TrackSpec::parse("TRACK v1 10 1\nP 0 0\nP 5 0\nQ 1\nL 5\n").is_err());
    }

    #[test]
    fn surface_classification() {
        let t = Track::new(TrackSpec::straight(200.0, 10.0, 2)).unwrap();
        assert_eq!(t.surface_at([50.0, 0.0]), Surface::Track);
        assert_eq!(t.surface_at([50.0, 9.0]), Surface::Track);
        assert_eq!(t.surface_at([50.0, 12.0]), Surface::Off);
        assert_eq!(t.surface_at([100.2, 3.0]), Surface::Landmark);
        assert_eq!(t.surface_at([5000.0, 0.0]), Surface::Off);
    }

    #[test]
    fn windowed_projection() {
        let t = Track::new(TrackSpec::bundled("oval-small").unwrap()).unwrap();
        // start/finish point projects to the start when searched near 0 and to
        // the end when searched near the full length
        let (s0, d0) = t.project_near([0.0, 0.0], 0.0, 30.0);
        assert!(s0 < 1e-9 && d0 < 1e-9);
        let (s1, _) = t.project_near([0.0, 0.0], t.length(), 30.0);
        assert!((s1 - t.length()).abs() < 1e-6);
    }

    #[test]
    fn speckle_band_and_determinism() {
        let t = Track::new(TrackSpec::straight(100.0, 5.0, 1)).unwrap();
        for x in -50..50 {
            let v = t.speckle_at([x as f64 * 1.3, 40.0]);
            assert!((40..=80).contains(&v));
            assert_eq!(v, t.speckle_at([x as f64 * 1.3, 40.0]));
        }
    }
}
