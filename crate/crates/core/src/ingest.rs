//! Frame manifests and frame loading.
//!
//! A manifest is a JSON document listing already-extracted frame images:
//!
//! ```json
//! { "fps": 60, "frames": [ { "index": 0, "file": "f0000.png" }, ... ] }
//! ```
//!
//! File names resolve relative to the manifest's directory. Frame timing is
//! kept as an exact rational so that per-frame durations add up to the clip
//! duration without rounding drift.

use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::image::{to_gray, GrayImage};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameEntry {
    pub index: u64,
    pub file: String,
}

/// Validated, immutable description of an extracted frame sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameManifest {
    fps: Rational,
    frames: Vec<FrameEntry>,
    base_dir: PathBuf,
}

impl FrameManifest {
    /// Builds a manifest from parts, applying the same checks as [`load_manifest`].
    pub fn new(fps: f64, frames: Vec<FrameEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let base_dir = base_dir.into();
        let fps = parse_decimal(&format!("{fps}")).ok_or_else(|| Error::Manifest {
            path: base_dir.clone(),
            message: format!("field `fps`: {fps} is not a finite decimal"),
        })?;
        Self::validated(fps, frames, base_dir.clone(), &base_dir)
    }

    fn validated(
        fps: Rational,
        frames: Vec<FrameEntry>,
        base_dir: PathBuf,
        origin: &Path,
    ) -> Result<Self> {
        let fail = |message: String| Error::Manifest {
            path: origin.to_path_buf(),
            message,
        };
        if fps <= Rational::from_integer(0) {
            return Err(fail(format!("field `fps`: must be positive, got {fps}")));
        }
        if frames.is_empty() {
            return Err(fail("field `frames`: empty sequence".into()));
        }
        for (pos, entry) in frames.iter().enumerate() {
            if pos > 0 && entry.index <= frames[pos - 1].index {
                return Err(fail(format!(
                    "field `frames[{pos}].index`: non-monotonic indices ({} follows {})",
                    entry.index,
                    frames[pos - 1].index
                )));
            }
        }
        for (pos, entry) in frames.iter().enumerate() {
            if entry.index != pos as u64 {
                return Err(fail(format!(
                    "field `frames[{pos}].index`: expected {pos}, got {} (indices must be contiguous from 0)",
                    entry.index
                )));
            }
            if entry.file.is_empty() {
                return Err(fail(format!("field `frames[{pos}].file`: empty file name")));
            }
        }
        let manifest = Self {
            fps,
            frames,
            base_dir,
        };
        manifest
            .checked_duration()
            .ok_or_else(|| fail("field `fps`: duration overflows".into()))?;
        Ok(manifest)
    }

    pub fn fps(&self) -> Rational {
        self.fps
    }

    pub fn fps_f64(&self) -> f64 {
        ratio_to_f64(self.fps)
    }

    pub fn frames(&self) -> &[FrameEntry] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Duration of one frame, `1000 / fps` milliseconds.
    pub fn frame_ms(&self) -> Rational {
        Rational::from_integer(1000) / self.fps
    }

    fn checked_duration(&self) -> Option<Rational> {
        let n = i128::try_from(self.frames.len()).ok()?;
        let num = self.fps.denom().checked_mul(1000)?.checked_mul(n)?;
        Some(Rational::new(num, *self.fps.numer()))
    }

    /// Total duration, `frame_count × 1000 / fps` milliseconds.
    pub fn duration_ms(&self) -> Rational {
        self.checked_duration().expect("validated at construction")
    }

    pub fn duration_ms_f64(&self) -> f64 {
        ratio_to_f64(self.duration_ms())
    }

    /// Start time of frame `index` in milliseconds.
    pub fn time_ms(&self, index: u64) -> f64 {
        ratio_to_f64(self.frame_ms() * Rational::from_integer(index as i128))
    }

    /// Start time of frame `index` as a percentage of the clip duration.
    pub fn time_pct(&self, index: u64) -> f64 {
        ratio_to_f64(Rational::new(
            100 * index as i128,
            self.frames.len() as i128,
        ))
    }

    /// Absolute path of the image for frame `index`.
    pub fn frame_path(&self, index: u64) -> Result<PathBuf> {
        self.entry(index).map(|e| self.base_dir.join(&e.file))
    }

    fn entry(&self, index: u64) -> Result<&FrameEntry> {
        usize::try_from(index)
            .ok()
            .and_then(|i| self.frames.get(i))
            .filter(|e| e.index == index)
            .ok_or(Error::UnknownFrame { index })
    }
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    // i128 -> f64 is correctly rounded; the quotient adds one more rounding
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses a JSON-style decimal (`60`, `29.97`, `2.5e1`) into an exact rational.
fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: i128 = digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow = 10i128.checked_pow(scale.unsigned_abs())?;
    Some(if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow)?)
    } else {
        Rational::new(numer, pow)
    })
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<FrameManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fail = |message: String| Error::Manifest {
        path: path.to_path_buf(),
        message,
    };
    // serde_json's message already ends with the line and column
    let doc: Value = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| fail("top level must be a JSON object".into()))?;

    let fps = match obj.get("fps") {
        Some(Value::Number(n)) => parse_decimal(&n.to_string())
            .ok_or_else(|| fail(format!("field `fps`: cannot represent {n}")))?,
        Some(other) => return Err(fail(format!("field `fps`: expected a number, got {other}"))),
        None => return Err(fail("missing field `fps`".into())),
    };
    let raw_frames = match obj.get("frames") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(fail("field `frames`: expected an array".into())),
        None => return Err(fail("missing field `frames`".into())),
    };
    let mut frames = Vec::with_capacity(raw_frames.len());
    for (pos, item) in raw_frames.iter().enumerate() {
        let index = item.get("index").and_then(Value::as_u64).ok_or_else(|| {
            fail(format!(
                "field `frames[{pos}].index`: expected a non-negative integer"
            ))
        })?;
        let file = item
            .get("file")
            .and_then(Value::as_str)
            .ok_or_else(|| fail(format!("field `frames[{pos}].file`: expected a string")))?;
        frames.push(FrameEntry {
            index,
            file: file.to_owned(),
        });
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    FrameManifest::validated(fps, frames, base_dir, path)
}

/// Serializes a manifest back to its JSON form.
pub fn manifest_json(manifest: &FrameManifest) -> String {
    let fps = manifest.fps();
    let fps_value = if fps.is_integer() {
        Value::from(*fps.numer() as i64)
    } else {
        Value::from(manifest.fps_f64())
    };
    let frames: Vec<Value> = manifest
        .frames()
        .iter()
        .map(|e| serde_json::json!({ "index": e.index, "file": e.file }))
        .collect();
    let doc = serde_json::json!({ "fps": fps_value, "frames": frames });
    serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n"
}

/// Decodes an 8-bit PNG (grayscale or colour) into a [`GrayImage`].
pub fn decode_image(path: &Path, index: u64) -> Result<GrayImage> {
    let fail = |message: String| Error::Frame { index, message };
    let img = image::open(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        image::DynamicImage::ImageLuma8(buf) => GrayImage::from_luma8(w, h, buf.as_raw()),
        image::DynamicImage::ImageLumaA8(_)
        | image::DynamicImage::ImageRgb8(_)
        | image::DynamicImage::ImageRgba8(_) => {
            let rgb = img.to_rgb8();
            let data = rgb
                .pixels()
                .map(|p| {
                    to_gray(
                        f64::from(p[0]) / 255.0,
                        f64::from(p[1]) / 255.0,
                        f64::from(p[2]) / 255.0,
                    )
                })
                .collect();
            GrayImage::new(w, h, data)
        }
        other => Err(fail(format!(
            "{}: unsupported pixel format {:?} (8-bit PNG expected)",
            path.display(),
            other.color()
        ))),
    }
    .map_err(|e| match e {
        Error::Frame { .. } => e,
        other => fail(other.to_string()),
    })
}

/// Loads frame `index` of `manifest` as grayscale.
pub fn load_frame(manifest: &FrameManifest, index: u64) -> Result<GrayImage> {
    let path = manifest.frame_path(index)?;
    decode_image(&path, index)
}

/// Writes a grayscale image as an 8-bit PNG.
pub fn save_png(image: &GrayImage, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        image.width() as u32,
        image.height() as u32,
        image.to_luma8(),
    )
    .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.json");
        std::fs::write(&p, body).unwrap();
        p
    }

    fn frames_json(n: usize) -> String {
        let items: Vec<String> = (0..n)
            .map(|i| format!(r#"{{"index": {i}, "file": "f{i}.png"}}"#))
            .collect();
        format!("[{}]", items.join(","))
    }

    #[test]
    fn sixty_fps_six_hundred_frames() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            &format!(r#"{{"fps": 60, "frames": {}}}"#, frames_json(600)),
        );
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.duration_ms(), Rational::from_integer(10_000));
        assert_eq!(m.frame_ms(), Rational::new(50, 3));
        assert!((ratio_to_f64(m.frame_ms()) - 16.67).abs() < 0.01);
        assert_eq!(m.base_dir(), dir.path());
    }

    #[test]
    fn empty_sequence_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(dir.path(), r#"{"fps": 60, "frames": []}"#);
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("empty sequence"), "{err}");
    }

    #[test]
    fn non_monotonic_indices_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            r#"{"fps": 30, "frames": [{"index":0,"file":"a.png"},{"index":2,"file":"b.png"},{"index":1,"file":"c.png"}]}"#,
        );
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("non-monotonic"), "{err}");
        assert!(err.contains("frames[2].index"), "{err}");
    }

    #[test]
    fn gaps_and_bad_fps_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            r#"{"fps": 30, "frames": [{"index":0,"file":"a.png"},{"index":2,"file":"b.png"}]}"#,
        );
        assert!(load_manifest(&p)
            .unwrap_err()
            .to_string()
            .contains("contiguous"));
        for fps in ["0", "-5", "\"60\""] {
            let p = write_manifest(
                dir.path(),
                &format!(r#"{{"fps": {fps}, "frames": {}}}"#, frames_json(2)),
            );
            assert!(load_manifest(&p).unwrap_err().to_string().contains("fps"));
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            "{\n\"fps\": 60,\n\"frames\": [\n{\"index\": 0 \"file\": \"a\"}]}",
        );
        let err = load_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
        let missing = load_manifest(dir.path().join("nope.json")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
    }

    #[test]
    fn fractional_fps_is_exact() {
        assert_eq!(parse_decimal("29.97"), Some(Rational::new(2997, 100)));
        assert_eq!(parse_decimal("2.5e1"), Some(Rational::from_integer(25)));
        assert_eq!(parse_decimal("1E-2"), Some(Rational::new(1, 100)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn load_frame_gray_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        image::GrayImage::from_pixel(8, 8, image::Luma([255u8]))
            .save(dir.path().join("white.png"))
            .unwrap();
        image::RgbImage::from_pixel(4, 4, image::Rgb([0u8, 0, 0]))
            .save(dir.path().join("black.png"))
            .unwrap();
        image::RgbImage::from_pixel(2, 2, image::Rgb([255u8, 0, 0]))
            .save(dir.path().join("red.png"))
            .unwrap();
        let frames = ["white.png", "black.png", "red.png", "missing.png"]
            .iter()
            .enumerate()
            .map(|(i, f)| FrameEntry {
                index: i as u64,
                file: (*f).into(),
            })
            .collect();
        let m = FrameManifest::new(60.0, frames, dir.path()).unwrap();

        let white = load_frame(&m, 0).unwrap();
        assert_eq!(white.dimensions(), (8, 8));
        assert!(white.data().iter().all(|&v| v == 1.0));
        let black = load_frame(&m, 1).unwrap();
        assert_eq!(black.dimensions(), (4, 4));
        assert!(black.data().iter().all(|&v| v == 0.0));
        assert!(load_frame(&m, 2)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.299));

        match load_frame(&m, 3).unwrap_err() {
            Error::Frame { index, .. } => assert_eq!(index, 3),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(
            load_frame(&m, 9),
            Err(Error::UnknownFrame { index: 9 })
        ));
        // loading is pure
        assert_eq!(load_frame(&m, 0).unwrap(), white);
    }

    #[test]
    fn corrupt_png_is_a_frame_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.png"), b"not a png").unwrap();
        let m = FrameManifest::new(
            25.0,
            vec![FrameEntry {
                index: 0,
                file: "bad.png".into(),
            }],
            dir.path(),
        )
        .unwrap();
        assert!(matches!(
            load_frame(&m, 0),
            Err(Error::Frame { index: 0, .. })
        ));
    }

    #[test]
    fn manifest_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let frames = (0..3)
            .map(|i| FrameEntry {
                index: i,
                file: format!("f{i}.png"),
            })
            .collect();
        let m = FrameManifest::new(29.97, frames, dir.path()).unwrap();
        let p = write_manifest(dir.path(), &manifest_json(&m));
        assert_eq!(load_manifest(&p).unwrap(), m);
    }

    proptest! {
        #[test]
        fn frame_durations_sum_to_duration(
            whole in 1u32..240,
            frac in 0u32..1000,
            n in 1usize..400,
        ) {
            let fps = parse_decimal(&format!("{whole}.{frac:03}")).unwrap();
            let frames = (0..n)
                .map(|i| FrameEntry { index: i as u64, file: "x.png".into() })
                .collect();
            let m = FrameManifest::validated(fps, frames, PathBuf::new(), Path::new("m")).unwrap();
            let total = (0..n).fold(Rational::from_integer(0), |acc, _| acc + m.frame_ms());
            prop_assert_eq!(total, m.duration_ms());
        }
    }
}
