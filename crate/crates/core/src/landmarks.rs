//! The 68-point facial landmark scheme and the geometry derived from it.
//!
//! Index layout (image orientation, subject facing the camera):
//!
//! | range  | feature                          |
//! |--------|----------------------------------|
//! | 0–16   | jaw line, image-left to image-right |
//! | 17–26  | brows                            |
//! | 27–35  | nose (27–30 bridge)              |
//! | 36–41  | eye on the image's left          |
//! | 42–47  | eye on the image's right         |
//! | 48–67  | mouth (outer 48–59, inner 60–67) |
//!
//! Coordinates are continuous pixel coordinates: pixel `(i, j)` covers
//! `[i, i + 1) × [j, j + 1)`, so mirroring a `W`-wide frame maps `x` to `W - x`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const LANDMARK_COUNT: usize = 68;

/// Points whose mean defines the eye on the image's left.
pub const RIGHT_EYE: std::ops::RangeInclusive<usize> = 36..=41;
/// Points whose mean defines the eye on the image's right.
pub const LEFT_EYE: std::ops::RangeInclusive<usize> = 42..=47;
/// Nose bridge plus chin: the points that lie on the facial midline.
pub const MIDLINE_POINTS: [usize; 5] = [27, 28, 29, 30, 8];

/// Index permutation that maps the scheme onto its own left-right mirror.
pub const MIRROR_PERMUTATION: [usize; LANDMARK_COUNT] = mirror_permutation();

const fn mirror_permutation() -> [usize; LANDMARK_COUNT] {
    let pairs: [(usize, usize); 29] = [
        // jaw
        (0, 16),
        (1, 15),
        (2, 14),
        (3, 13),
        (4, 12),
        (5, 11),
        (6, 10),
        (7, 9),
        // brows
        (17, 26),
        (18, 25),
        (19, 24),
        (20, 23),
        (21, 22),
        // nostrils
        (31, 35),
        (32, 34),
        // eyes
        (36, 45),
        (37, 44),
        (38, 43),
        (39, 42),
        (40, 47),
        (41, 46),
        // outer lip
        (48, 54),
        (49, 53),
        (50, 52),
        (55, 59),
        (56, 58),
        // inner lip
        (60, 64),
        (61, 63),
        (65, 67),
    ];
    let mut perm = [0usize; LANDMARK_COUNT];
    let mut i = 0;
    while i < LANDMARK_COUNT {
        perm[i] = i;
        i += 1;
    }
    let mut k = 0;
    while k < pairs.len() {
        let (a, b) = pairs[k];
        perm[a] = b;
        perm[b] = a;
        k += 1;
    }
    perm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn mean(points: impl Iterator<Item = Point>) -> Point {
    let (n, sx, sy) = points.fold((0usize, 0.0, 0.0), |(n, sx, sy), p| {
        (n + 1, sx + p.x, sy + p.y)
    });
    Point::new(sx / n as f64, sy / n as f64)
}

/// Exactly 68 finite points with a non-degenerate bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmarks68 {
    points: [Point; LANDMARK_COUNT],
}

impl Landmarks68 {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let points: [Point; LANDMARK_COUNT] = points.try_into().map_err(|v: Vec<Point>| {
            Error::InvalidLandmarks(format!("expected 68 points, found {}", v.len()))
        })?;
        if let Some(i) = points
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::InvalidLandmarks(format!("point {i} is not finite")));
        }
        let lm = Self { points };
        let (min, max) = lm.bounding_box();
        if max.x - min.x <= 0.0 || max.y - min.y <= 0.0 {
            return Err(Error::InvalidLandmarks(
                "bounding box has zero width or height".into(),
            ));
        }
        Ok(lm)
    }

    pub fn points(&self) -> &[Point; LANDMARK_COUNT] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// `(min corner, max corner)` of all points.
    pub fn bounding_box(&self) -> (Point, Point) {
        self.points.iter().fold(
            (
                Point::new(f64::INFINITY, f64::INFINITY),
                Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), p| {
                (
                    Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                    Point::new(hi.x.max(p.x), hi.y.max(p.y)),
                )
            },
        )
    }

    /// Applies `f` to every point. The result is re-validated.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        Self::new(self.points.iter().map(|&p| f(p)).collect())
    }

    /// Landmarks of the left-right mirrored face in a frame of width `frame_width`:
    /// coordinates reflect to `frame_width - x` and indices follow the scheme's pairing.
    pub fn mirror_horizontal(&self, frame_width: f64) -> Self {
        let mut points = self.points;
        for (i, p) in points.iter_mut().enumerate() {
            let src = self.points[MIRROR_PERMUTATION[i]];
            *p = Point::new(frame_width - src.x, src.y);
        }
        Self { points }
    }
}

/// Detector output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameFaceResult {
    Face(Landmarks68),
    NoFace,
}

/// Returns `(left_center, right_center)`: the means of points 42–47 and 36–41.
pub fn eye_centers(lm: &Landmarks68) -> (Point, Point) {
    let left = mean(LEFT_EYE.map(|i| lm.point(i)));
    let right = mean(RIGHT_EYE.map(|i| lm.point(i)));
    (left, right)
}

/// Signed in-plane rotation of the face in degrees, in `(-90, 90]`.
///
/// Measured as the angle of the segment from the 36–41 eye centre to the
/// 42–47 eye centre relative to the image x axis (y grows downwards).
pub fn roll_angle(lm: &Landmarks68) -> Result<f64> {
    let (left, right) = eye_centers(lm);
    let dx = left.x - right.x;
    let dy = left.y - right.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry("eye centres coincide".into()));
    }
    let mut deg = dy.atan2(dx).to_degrees();
    if deg > 90.0 {
        deg -= 180.0;
    } else if deg <= -90.0 {
        deg += 180.0;
    }
    Ok(deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TiltDecision {
    ProcessAsIs,
    AlignThenProcess(f64),
    Discard(f64),
}

/// Roll thresholds for the tilt gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    /// Faces rolled by more than this many degrees are discarded.
    pub threshold_deg: f64,
    /// Faces rolled by at most this many degrees are used without rotation.
    pub deadband_deg: f64,
}

impl Default for TiltParams {
    fn default() -> Self {
        Self {
            threshold_deg: 5.0,
            deadband_deg: 0.5,
        }
    }
}

impl TiltParams {
    pub fn with_threshold(threshold_deg: f64) -> Self {
        Self {
            threshold_deg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_deg >= 0.0 && self.threshold_deg < 90.0) {
            return Err(Error::Parameter(format!(
                "tilt threshold must be in [0, 90), got {}",
                self.threshold_deg
            )));
        }
        if !(self.deadband_deg >= 0.0 && self.deadband_deg <= self.threshold_deg) {
            return Err(Error::Parameter(format!(
                "alignment dead-band must be in [0, tilt threshold], got {}",
                self.deadband_deg
            )));
        }
        Ok(())
    }
}

pub fn tilt_gate(roll: f64, params: &TiltParams) -> TiltDecision {
    let mag = roll.abs();
    if mag <= params.deadband_deg {
        TiltDecision::ProcessAsIs
    } else if mag <= params.threshold_deg {
        TiltDecision::AlignThenProcess(roll)
    } else {
        TiltDecision::Discard(roll)
    }
}

/// Split column of an upright face: mean x of the nose bridge (27–30) and chin (8).
pub fn midline_x(lm: &Landmarks68) -> f64 {
    let sum: f64 = MIDLINE_POINTS.iter().map(|&i| lm.point(i).x).sum();
    sum / MIDLINE_POINTS.len() as f64
}

/// Parses one sidecar line: `{"index": n, "points": [[x, y], ...]}` or
/// `{"index": n, "no_face": true}`.
pub fn parse_landmark_sidecar(record: &str) -> Result<(u64, FrameFaceResult)> {
    let value: Value = serde_json::from_str(record).map_err(|e| Error::SidecarJson {
        index: None,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::SidecarJson {
        index: None,
        message: "record must be a JSON object".into(),
    })?;
    let index = obj
        .get("index")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::SidecarJson {
            index: None,
            message: "missing or invalid `index`".into(),
        })?;
    let json_err = |message: &str| Error::SidecarJson {
        index: Some(index),
        message: message.into(),
    };

    match obj.get("no_face") {
        Some(Value::Bool(true)) => return Ok((index, FrameFaceResult::NoFace)),
        Some(Value::Bool(false)) | None => {}
        Some(_) => return Err(json_err("`no_face` must be a boolean")),
    }

    let raw = obj
        .get("points")
        .ok_or_else(|| json_err("missing `points`"))?
        .as_array()
        .ok_or_else(|| json_err("`points` must be an array"))?;
    if raw.len() != LANDMARK_COUNT {
        return Err(Error::PointCount {
            index,
            found: raw.len(),
        });
    }
    let mut points = Vec::with_capacity(LANDMARK_COUNT);
    for (i, item) in raw.iter().enumerate() {
        let pair = item.as_array().filter(|a| a.len() == 2);
        let coords = pair.and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)));
        let (x, y) = coords.ok_or(Error::NonNumericCoordinate { index, point: i })?;
        points.push(Point::new(x, y));
    }
    let lm = Landmarks68::new(points).map_err(|e| json_err(&e.to_string()))?;
    Ok((index, FrameFaceResult::Face(lm)))
}

/// Serializes a frame result in the sidecar line format (no trailing newline).
pub fn to_sidecar_record(index: u64, result: &FrameFaceResult) -> String {
    let value = match result {
        FrameFaceResult::NoFace => serde_json::json!({ "index": index, "no_face": true }),
        FrameFaceResult::Face(lm) => {
            let pts: Vec<[f64; 2]> = lm.points().iter().map(|p| [p.x, p.y]).collect();
            serde_json::json!({ "index": index, "points": pts })
        }
    };
    value.to_string()
}
