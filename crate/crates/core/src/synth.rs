//! Synthetic faces and frame sequences with known geometry.
//!
//! Faces are drawn analytically from a left-right symmetric template, so an
//! upright face with no injected asymmetry yields identical composites. A
//! seeded noise texture on the image-left half of the face supplies
//! controllable asymmetry.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::rotate_point;
use crate::image::GrayImage;
use crate::ingest::{manifest_json, save_png, FrameEntry, FrameManifest};
use crate::landmarks::{
    eye_centers, to_sidecar_record, FrameFaceResult, Landmarks68, Point, LANDMARK_COUNT,
    MIRROR_PERMUTATION,
};

/// Template points on the image-left half and on the midline, in face units
/// (x right, y down, origin at the face centre, one unit = half face width).
const TEMPLATE: [(usize, f64, f64); 39] = [
    // jaw
    (0, -0.95, -0.10),
    (1, -0.94, 0.15),
    (2, -0.90, 0.40),
    (3, -0.83, 0.63),
    (4, -0.72, 0.83),
    (5, -0.57, 0.98),
    (6, -0.40, 1.08),
    (7, -0.20, 1.13),
    (8, 0.0, 1.15),
    // brow
    (17, -0.75, -0.52),
    (18, -0.62, -0.58),
    (19, -0.48, -0.61),
    (20, -0.33, -0.60),
    (21, -0.17, -0.56),
    // nose
    (27, 0.0, -0.25),
    (28, 0.0, -0.12),
    (29, 0.0, 0.01),
    (30, 0.0, 0.14),
    (31, -0.18, 0.25),
    (32, -0.09, 0.28),
    (33, 0.0, 0.30),
    // eye on the image's left
    (36, -0.55, -0.25),
    (37, -0.45, -0.31),
    (38, -0.35, -0.31),
    (39, -0.25, -0.25),
    (40, -0.35, -0.20),
    (41, -0.45, -0.20),
    // outer lip
    (48, -0.40, 0.60),
    (49, -0.27, 0.53),
    (50, -0.10, 0.50),
    (51, 0.0, 0.52),
    (57, 0.0, 0.72),
    (58, -0.12, 0.70),
    (59, -0.28, 0.66),
    // inner lip
    (60, -0.33, 0.60),
    (61, -0.10, 0.56),
    (62, 0.0, 0.57),
    (66, 0.0, 0.64),
    (67, -0.10, 0.63),
];

/// Placement of a synthetic face in the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePlacement {
    pub center_x: f64,
    pub center_y: f64,
    /// Pixels per face unit (half the face width).
    pub scale: f64,
}

/// Upright template landmarks, exactly mirror-symmetric about `center_x`.
pub fn template_landmarks(place: &FacePlacement) -> Landmarks68 {
    let mut pts = [None; LANDMARK_COUNT];
    for &(i, u, v) in &TEMPLATE {
        let y = place.center_y + place.scale * v;
        // store the left point as a reflection so mirroring reproduces it bit for bit
        let right = place.center_x + place.scale * u.abs();
        pts[i] = Some(Point::new(2.0 * place.center_x - right, y));
        let j = MIRROR_PERMUTATION[i];
        if j != i {
            pts[j] = Some(Point::new(right, y));
        }
    }
    let pts: Vec<Point> = pts
        .into_iter()
        .map(|p| p.expect("template covers every index"))
        .collect();
    Landmarks68::new(pts).expect("template is valid")
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Intensity of the symmetric face at face coordinates `(u, v)`, plus the
/// inside-face mask.
fn face_intensity(u: f64, v: f64) -> (f64, f64) {
    let au = u.abs();
    let background = 0.18 + 0.06 * (0.5 + 0.5 * (2.0 * au).cos()) + 0.03 * (1.5 * v).sin();
    let e = au * au + ((v - 0.2) / 1.35).powi(2);
    let mask = 1.0 - smoothstep(0.92, 1.0, e);
    let mut skin = 0.62 + 0.06 * (6.0 * au).cos() * (4.0 * v).cos() + 0.04 * v;

    let eye = ((au - 0.4) / 0.17).powi(2) + ((v + 0.255) / 0.08).powi(2);
    if eye < 1.0 {
        skin = 0.9;
        let pupil = ((au - 0.4) / 0.055).powi(2) + ((v + 0.255) / 0.055).powi(2);
        if pupil < 1.0 {
            skin = 0.08;
        }
    }
    let brow_y = -0.58 + 0.12 * (au - 0.45).powi(2);
    if (0.15..=0.77).contains(&au) && (v - brow_y).abs() < 0.035 {
        skin = 0.22;
    }
    if au < 0.1 && (-0.2..0.26).contains(&v) {
        skin += 0.08 * (1.0 - au / 0.1);
    }
    if ((au - 0.09) / 0.045).powi(2) + ((v - 0.28) / 0.03).powi(2) < 1.0 {
        skin = 0.25;
    }
    let mouth = (au / 0.40).powi(2) + ((v - 0.61) / 0.09).powi(2);
    if mouth < 1.0 {
        skin = if ((v - 0.605) / 0.02).abs() < 1.0 {
            0.15
        } else {
            0.45
        };
    }
    (background * (1.0 - mask) + skin * mask, mask)
}

/// One frame of a synthetic sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticFrame {
    /// False renders background only and records no face.
    pub face: bool,
    pub roll_deg: f64,
    /// Amplitude of the noise added to the image-left half of the face.
    pub asymmetry: f64,
    pub seed: u64,
}

impl SyntheticFrame {
    pub fn symmetric() -> Self {
        Self {
            face: true,
            roll_deg: 0.0,
            asymmetry: 0.0,
            seed: 0,
        }
    }

    pub fn no_face() -> Self {
        Self {
            face: false,
            ..Self::symmetric()
        }
    }
}

/// Frame size and face placement shared by a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub place: FacePlacement,
}

impl Default for Canvas {
    /// 192×176 frames with a face whose aligned chip is about 128 px across.
    fn default() -> Self {
        Self {
            width: 192,
            height: 176,
            place: FacePlacement {
                center_x: 96.0,
                center_y: 84.0,
                scale: 55.0,
            },
        }
    }
}

/// Renders one frame and its landmarks.
pub fn render_frame(canvas: &Canvas, frame: &SyntheticFrame) -> (GrayImage, FrameFaceResult) {
    let place = canvas.place;
    let upright = template_landmarks(&place);
    let (l, r) = eye_centers(&upright);
    let pivot = Point::new((l.x + r.x) / 2.0, (l.y + r.y) / 2.0);

    let noise: Vec<f64> = if frame.asymmetry != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(frame.seed);
        (0..canvas.width * canvas.height)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect()
    } else {
        Vec::new()
    };

    let image = GrayImage::from_fn(canvas.width, canvas.height, |x, y| {
        let q = Point::new(x as f64 + 0.5, y as f64 + 0.5);
        let p = if frame.roll_deg == 0.0 {
            q
        } else {
            rotate_point(q, pivot, -frame.roll_deg)
        };
        let u = (p.x - place.center_x) / place.scale;
        let v = (p.y - place.center_y) / place.scale;
        let (value, mask) = face_intensity(u, v);
        if !frame.face {
            let (bg, _) = face_intensity(u.abs() + 3.0, v);
            return bg;
        }
        if frame.asymmetry != 0.0 && u < 0.0 {
            value + frame.asymmetry * mask * noise[y * canvas.width + x]
        } else {
            value
        }
    });

    let result = if frame.face {
        let lm = if frame.roll_deg == 0.0 {
            upright
        } else {
            upright
                .map(|p| rotate_point(p, pivot, frame.roll_deg))
                .expect("rotation keeps landmarks valid")
        };
        FrameFaceResult::Face(lm)
    } else {
        FrameFaceResult::NoFace
    };
    (image, result)
}

/// Paths of a fixture written by [`write_fixture`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub manifest: PathBuf,
    pub landmarks: PathBuf,
}

/// Writes PNG frames, `manifest.json` and `landmarks.jsonl` into `dir`.
/// With `mirror`, every frame and its landmarks are flipped left-right.
pub fn write_fixture(
    dir: &Path,
    fps: f64,
    canvas: &Canvas,
    frames: &[SyntheticFrame],
    mirror: bool,
) -> Result<Fixture> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Output {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut entries = Vec::with_capacity(frames.len());
    let mut sidecar = String::new();
    for (i, f) in frames.iter().enumerate() {
        let (mut image, mut face) = render_frame(canvas, f);
        if mirror {
            image = image.flip_horizontal();
            if let FrameFaceResult::Face(lm) = &face {
                face = FrameFaceResult::Face(lm.mirror_horizontal(canvas.width as f64));
            }
        }
        let file = format!("frame_{i:05}.png");
        save_png(&image, &dir.join(&file))?;
        entries.push(FrameEntry {
            index: i as u64,
            file,
        });
        sidecar.push_str(&to_sidecar_record(i as u64, &face));
        sidecar.push('\n');
    }
    let manifest = FrameManifest::new(fps, entries, dir)?;
    let manifest_path = dir.join("manifest.json");
    let landmarks_path = dir.join("landmarks.jsonl");
    for (path, body) in [
        (&manifest_path, manifest_json(&manifest)),
        (&landmarks_path, sidecar),
    ] {
        std::fs::write(path, body).map_err(|e| Error::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(Fixture {
        manifest: manifest_path,
        landmarks: landmarks_path,
    })
}

/// `n` frames of a slightly asymmetric face with strong asymmetry on the
/// frames whose start time falls in `[start_pct, end_pct)` of the clip.
pub fn injected_dip_frames(n: usize, start_pct: f64, end_pct: f64) -> Vec<SyntheticFrame> {
    (0..n)
        .map(|i| {
            let t = 100.0 * i as f64 / n as f64;
            let strong = t >= start_pct && t < end_pct;
            SyntheticFrame {
                face: true,
                roll_deg: 0.0,
                asymmetry: if strong {
                    0.45
                } else {
                    0.02 + 0.01 * (i % 3) as f64
                },
                seed: 1000 + i as u64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::{midline_x, roll_angle};

    #[test]
    fn template_is_symmetric() {
        let canvas = Canvas::default();
        let lm = template_landmarks(&canvas.place);
        assert_eq!(midline_x(&lm), 96.0);
        assert_eq!(roll_angle(&lm).unwrap(), 0.0);
        assert_eq!(lm.mirror_horizontal(192.0), lm);
    }

    #[test]
    fn symmetric_frame_is_mirror_image_of_itself() {
        let canvas = Canvas::default();
        let (img, _) = render_frame(&canvas, &SyntheticFrame::symmetric());
        assert_eq!(img.flip_horizontal(), img);
    }

    #[test]
    fn rolled_frame_reports_its_roll() {
        let canvas = Canvas::default();
        let f = SyntheticFrame {
            roll_deg: 3.0,
            ..SyntheticFrame::symmetric()
        };
        match render_frame(&canvas, &f).1 {
            FrameFaceResult::Face(lm) => assert!((roll_angle(&lm).unwrap() - 3.0).abs() < 1e-9),
            FrameFaceResult::NoFace => panic!("expected a face"),
        }
    }
}
