//! Frame-by-frame facial asymmetry scoring.
//!
//! Each frame's face is aligned and cropped from its 68 landmarks, split at
//! the facial midline into two hemifaces, and rebuilt into a left-left and a
//! right-right composite. The SSIM between the two composites is the frame's
//! symmetry score; a clip becomes a time series of those scores, with a
//! baseline and the intervals that dip below it.
//!
//! ```no_run
//! use hemiface::{load_manifest, run_pipeline, AnalysisConfig, LandmarkSource, RunOptions};
//!
//! let manifest = load_manifest("clip/manifest.json")?;
//! let source = LandmarkSource::Sidecar("clip/landmarks.jsonl".into());
//! let series = run_pipeline(&manifest, &source, &AnalysisConfig::default(), &RunOptions::default())?;
//! println!("{} dips", series.dips.len());
//! # Ok::<(), hemiface::Error>(())
//! ```

pub mod analysis;
pub mod composite;
pub mod error;
pub mod geometry;
pub mod image;
pub mod ingest;
pub mod landmarks;
pub mod par;
pub mod report;
pub mod source;
pub mod ssim;
pub mod synth;

pub use analysis::{
    analyze_frames, assemble_series, classify_congruence, detect_dips, estimate_baseline,
    run_pipeline, score_frame, AnalysisConfig, AsymmetrySeries, BaselineChoice, BaselineEstimator,
    BaselineSource, Congruence, DipInterval, FrameOutcome, FrameScore, FrameStatus, RunOptions,
    SENTINEL_PCT, SENTINEL_RAW,
};
pub use composite::{make_composites, CompositePair};
pub use error::{Error, Result};
pub use geometry::{align_and_crop, CropParams, FaceChip};
pub use image::GrayImage;
pub use ingest::{load_frame, load_manifest, FrameEntry, FrameManifest};
pub use landmarks::{
    roll_angle, tilt_gate, FrameFaceResult, Landmarks68, Point, TiltDecision, TiltParams,
};
pub use par::Execution;
pub use report::{AnalysisReport, ConfigEcho, Summary};
pub use source::LandmarkSource;
pub use ssim::{ssid, ssim_map, SsimParams};
