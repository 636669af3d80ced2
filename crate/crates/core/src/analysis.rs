//! Per-frame scoring, the normalized asymmetry time series, baseline
//! estimation and below-baseline dip detection.

use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::composite::{make_composites, CompositePair};
use crate::error::{Error, Result};
use crate::geometry::{align_and_crop, CropParams, FaceChip};
use crate::image::GrayImage;
use crate::ingest::{load_frame, save_png, FrameManifest};
use crate::landmarks::{roll_angle, tilt_gate, FrameFaceResult, TiltDecision, TiltParams};
use crate::par::{map_range, with_jobs, Execution};
use crate::source::LandmarkSource;
use crate::ssim::{ssid_with, SsimParams};

/// Score recorded for frames without a usable face.
pub const SENTINEL_RAW: f64 = -0.1;
/// [`SENTINEL_RAW`] on the percentage scale.
pub const SENTINEL_PCT: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameStatus {
    Scored,
    NoFace,
    DiscardedTilt,
}

impl FrameStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameStatus::Scored => "Scored",
            FrameStatus::NoFace => "NoFace",
            FrameStatus::DiscardedTilt => "DiscardedTilt",
        }
    }
}

/// Outcome of scoring one frame, before it is placed on the time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOutcome {
    pub status: FrameStatus,
    pub ssid_raw: f64,
}

impl FrameOutcome {
    pub fn scored(ssid: f64) -> Self {
        Self {
            status: FrameStatus::Scored,
            ssid_raw: ssid,
        }
    }

    pub fn sentinel(status: FrameStatus) -> Self {
        debug_assert_ne!(status, FrameStatus::Scored);
        Self {
            status,
            ssid_raw: SENTINEL_RAW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: u64,
    pub time_ms: f64,
    pub time_pct: f64,
    pub status: FrameStatus,
    pub ssid_raw: f64,
    pub ssid_pct: f64,
}

impl FrameScore {
    pub fn new(manifest: &FrameManifest, frame_index: u64, outcome: FrameOutcome) -> Self {
        let ssid_pct = match outcome.status {
            FrameStatus::Scored => outcome.ssid_raw * 100.0,
            _ => SENTINEL_PCT,
        };
        Self {
            frame_index,
            time_ms: manifest.time_ms(frame_index),
            time_pct: manifest.time_pct(frame_index),
            status: outcome.status,
            ssid_raw: outcome.ssid_raw,
            ssid_pct,
        }
    }

    pub fn is_scored(&self) -> bool {
        self.status == FrameStatus::Scored
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineEstimator {
    /// Halfway between the highest and lowest scored values.
    Midpoint,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineChoice {
    Estimate(BaselineEstimator),
    /// Percentage measured elsewhere, e.g. from a neutral still.
    External(f64),
}

impl Default for BaselineChoice {
    fn default() -> Self {
        BaselineChoice::Estimate(BaselineEstimator::Midpoint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineSource {
    External,
    Estimated,
    /// No external value and no scored frames to estimate from.
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipInterval {
    pub start_pct: f64,
    pub end_pct: f64,
    pub min_ssid_pct: f64,
    pub first_frame: u64,
    pub last_frame: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetrySeries {
    pub scores: Vec<FrameScore>,
    pub baseline_pct: Option<f64>,
    pub baseline_source: BaselineSource,
    pub dips: Vec<DipInterval>,
}

impl AsymmetrySeries {
    pub fn count(&self, status: FrameStatus) -> usize {
        self.scores.iter().filter(|s| s.status == status).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Congruence {
    Congruent,
    Incongruent,
}

/// Every tunable of the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub tilt: TiltParams,
    pub crop: CropParams,
    pub ssim: SsimParams,
    pub baseline: BaselineChoice,
    pub delta_pct: f64,
    pub min_frames: usize,
    pub congruence_threshold_pct: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tilt: TiltParams::default(),
            crop: CropParams::default(),
            ssim: SsimParams::default(),
            baseline: BaselineChoice::default(),
            delta_pct: 10.0,
            min_frames: 3,
            congruence_threshold_pct: 75.0,
        }
    }
}

fn in_pct_range(name: &str, v: f64) -> Result<()> {
    if (0.0..=100.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be in [0, 100], got {v}"
        )))
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.tilt.validate()?;
        self.crop.validate()?;
        self.ssim.validate()?;
        if let BaselineChoice::External(v) = self.baseline {
            in_pct_range("baseline", v)?;
        }
        in_pct_range("delta", self.delta_pct)?;
        in_pct_range("congruence threshold", self.congruence_threshold_pct)?;
        if self.min_frames == 0 {
            return Err(Error::Parameter("min frames must be at least 1".into()));
        }
        Ok(())
    }
}

/// Intermediate products of a scored frame, kept for debug rendering.
#[derive(Debug, Clone)]
pub struct FrameArtifacts {
    pub chip: FaceChip,
    pub composites: CompositePair,
}

/// Scores one frame: sentinel for a missing or over-tilted face, otherwise
/// the similarity of the aligned face's two composites.
///
/// Geometry failures downstream of the tilt gate are logged and recorded as
/// discarded frames; they never abort a run.
pub fn score_frame(
    frame: &GrayImage,
    face: &FrameFaceResult,
    config: &AnalysisConfig,
) -> FrameOutcome {
    score_frame_detailed(frame, face, config, Execution::Sequential).0
}

pub fn score_frame_detailed(
    frame: &GrayImage,
    face: &FrameFaceResult,
    config: &AnalysisConfig,
    exec: Execution,
) -> (FrameOutcome, Option<FrameArtifacts>) {
    let lm = match face {
        FrameFaceResult::NoFace => return (FrameOutcome::sentinel(FrameStatus::NoFace), None),
        FrameFaceResult::Face(lm) => lm,
    };
    let discarded = (FrameOutcome::sentinel(FrameStatus::DiscardedTilt), None);
    let roll = match roll_angle(lm) {
        Ok(r) => r,
        Err(e) => {
            warn!("discarding frame: {e}");
            return discarded;
        }
    };
    let decision = tilt_gate(roll, &config.tilt);
    if let TiltDecision::Discard(_) = decision {
        return discarded;
    }
    let scored = align_and_crop(frame, lm, decision, &config.crop).and_then(|chip| {
        let composites = make_composites(&chip)?;
        let s = ssid_with(&composites.ll, &composites.rr, &config.ssim, exec)?;
        Ok((s, FrameArtifacts { chip, composites }))
    });
    match scored {
        Ok((s, artifacts)) => (FrameOutcome::scored(s), Some(artifacts)),
        Err(e) => {
            warn!("discarding frame: {e}");
            discarded
        }
    }
}

/// Resolves the baseline percentage from the configured choice.
pub fn estimate_baseline(
    scores: &[FrameScore],
    choice: BaselineChoice,
) -> Result<(f64, BaselineSource)> {
    let estimator = match choice {
        BaselineChoice::External(v) => return Ok((v, BaselineSource::External)),
        BaselineChoice::Estimate(e) => e,
    };
    let mut values: Vec<f64> = scores
        .iter()
        .filter(|s| s.is_scored())
        .map(|s| s.ssid_pct)
        .collect();
    if values.is_empty() {
        return Err(Error::NoBaseline);
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let v = match estimator {
        BaselineEstimator::Midpoint => (values[0] + values[n - 1]) / 2.0,
        BaselineEstimator::Median if n % 2 == 1 => values[n / 2],
        BaselineEstimator::Median => (values[n / 2 - 1] + values[n / 2]) / 2.0,
    };
    Ok((v, BaselineSource::Estimated))
}

/// Maximal runs of at least `min_frames` consecutive scored frames whose
/// score is below `baseline_pct - delta_pct`. Sentinel frames end a run.
pub fn detect_dips(
    scores: &[FrameScore],
    baseline_pct: f64,
    delta_pct: f64,
    min_frames: usize,
) -> Vec<DipInterval> {
    let limit = baseline_pct - delta_pct;
    let mut dips = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    let close = |(start, end): (usize, usize), dips: &mut Vec<DipInterval>| {
        if end - start + 1 >= min_frames.max(1) {
            let span = &scores[start..=end];
            dips.push(DipInterval {
                start_pct: span[0].time_pct,
                end_pct: span[span.len() - 1].time_pct,
                min_ssid_pct: span
                    .iter()
                    .map(|s| s.ssid_pct)
                    .fold(f64::INFINITY, f64::min),
                first_frame: span[0].frame_index,
                last_frame: span[span.len() - 1].frame_index,
            });
        }
    };
    for (i, s) in scores.iter().enumerate() {
        if s.is_scored() && s.ssid_pct < limit {
            run = Some(match run {
                Some((start, _)) => (start, i),
                None => (i, i),
            });
        } else if let Some(r) = run.take() {
            close(r, &mut dips);
        }
    }
    if let Some(r) = run {
        close(r, &mut dips);
    }
    dips
}

/// Per-frame congruence: at or above `threshold_pct` is congruent.
pub fn classify_congruence(ssid_pct: f64, threshold_pct: f64) -> Result<Congruence> {
    if !(0.0..=100.0).contains(&ssid_pct) {
        return Err(Error::Contract(format!(
            "congruence is defined for scored frames only, got {ssid_pct}"
        )));
    }
    Ok(if ssid_pct >= threshold_pct {
        Congruence::Congruent
    } else {
        Congruence::Incongruent
    })
}

/// Builds the series (baseline and dips included) from per-frame outcomes.
pub fn assemble_series(
    manifest: &FrameManifest,
    outcomes: &[FrameOutcome],
    config: &AnalysisConfig,
) -> AsymmetrySeries {
    let scores: Vec<FrameScore> = manifest
        .frames()
        .iter()
        .zip(outcomes)
        .map(|(f, o)| FrameScore::new(manifest, f.index, *o))
        .collect();
    match estimate_baseline(&scores, config.baseline) {
        Ok((baseline, source)) => {
            let dips = detect_dips(&scores, baseline, config.delta_pct, config.min_frames);
            AsymmetrySeries {
                scores,
                baseline_pct: Some(baseline),
                baseline_source: source,
                dips,
            }
        }
        Err(_) => AsymmetrySeries {
            scores,
            baseline_pct: None,
            baseline_source: BaselineSource::Unavailable,
            dips: Vec::new(),
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core, `Some(1)` runs sequentially.
    pub jobs: Option<usize>,
    /// Directory for per-frame debug layouts.
    pub debug_dir: Option<PathBuf>,
}

/// Loads, scores and aggregates every manifest frame against in-memory landmarks.
pub fn analyze_frames(
    manifest: &FrameManifest,
    faces: &[FrameFaceResult],
    config: &AnalysisConfig,
    options: &RunOptions,
) -> Result<AsymmetrySeries> {
    config.validate()?;
    if faces.len() != manifest.len() {
        return Err(Error::IndexMismatch(format!(
            "{} landmark results for {} manifest frames",
            faces.len(),
            manifest.len()
        )));
    }
    if let Some(dir) = &options.debug_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Output {
            path: dir.clone(),
            message: e.to_string(),
        })?;
    }
    let frames = manifest.frames();
    let results = with_jobs(options.jobs, |exec| {
        map_range(frames.len(), exec, |i| -> Result<FrameOutcome> {
            let index = frames[i].index;
            let image = load_frame(manifest, index)?;
            let (outcome, artifacts) =
                score_frame_detailed(&image, &faces[i], config, Execution::Sequential);
            if let (Some(dir), Some(art)) = (&options.debug_dir, artifacts) {
                write_debug_view(dir, index, &image, &art)?;
            }
            Ok(outcome)
        })
    })?;
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(assemble_series(manifest, &outcomes, config))
}

/// Full pipeline: resolve landmarks, then [`analyze_frames`].
pub fn run_pipeline(
    manifest: &FrameManifest,
    source: &LandmarkSource,
    config: &AnalysisConfig,
    options: &RunOptions,
) -> Result<AsymmetrySeries> {
    config.validate()?;
    let faces = source.resolve(manifest)?;
    analyze_frames(manifest, &faces, config, options)
}

/// Debug layout: L-L composite top-left, R-R below it, the original frame
/// in the middle and the aligned chip on the right.
pub fn debug_view(frame: &GrayImage, artifacts: &FrameArtifacts) -> GrayImage {
    let (ll, rr) = (&artifacts.composites.ll, &artifacts.composites.rr);
    let chip = &artifacts.chip.image;
    let left_w = ll.width().max(rr.width());
    let width = left_w + frame.width() + chip.width();
    let height = (ll.height() + rr.height())
        .max(frame.height())
        .max(chip.height());
    let mut canvas = vec![0.0; width * height];
    let mut blit = |img: &GrayImage, ox: usize, oy: usize| {
        for y in 0..img.height() {
            let dst = (oy + y) * width + ox;
            canvas[dst..dst + img.width()].copy_from_slice(img.row(y));
        }
    };
    blit(ll, 0, 0);
    blit(rr, 0, ll.height());
    blit(frame, left_w, 0);
    blit(chip, left_w + frame.width(), 0);
    GrayImage::new(width, height, canvas).expect("canvas sized from its parts")
}

fn write_debug_view(
    dir: &Path,
    index: u64,
    frame: &GrayImage,
    artifacts: &FrameArtifacts,
) -> Result<()> {
    save_png(
        &debug_view(frame, artifacts),
        &dir.join(format!("frame_{index:06}.png")),
    )
}
