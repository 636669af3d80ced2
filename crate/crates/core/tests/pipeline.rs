use hemiface::analysis::{score_frame_detailed, SENTINEL_PCT};
use hemiface::report::{csv_string, svg_string};
use hemiface::synth::{injected_dip_frames, render_frame, write_fixture, Canvas, SyntheticFrame};
use hemiface::{
    load_manifest, roll_angle, run_pipeline, AnalysisConfig, AsymmetrySeries, Execution,
    FrameFaceResult, FrameStatus, LandmarkSource, RunOptions,
};

fn run(frames: &[SyntheticFrame], mirror: bool, options: &RunOptions) -> AsymmetrySeries {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), 60.0, &Canvas::default(), frames, mirror).unwrap();
    let manifest = load_manifest(&fx.manifest).unwrap();
    run_pipeline(
        &manifest,
        &LandmarkSource::Sidecar(fx.landmarks),
        &AnalysisConfig::default(),
        options,
    )
    .unwrap()
}

#[test]
fn symmetric_clip_scores_full_marks() {
    let series = run(
        &vec![SyntheticFrame::symmetric(); 12],
        false,
        &RunOptions::default(),
    );
    assert_eq!(series.scores.len(), 12);
    for s in &series.scores {
        assert_eq!(s.status, FrameStatus::Scored);
        assert!((s.ssid_pct - 100.0).abs() <= 1e-6, "{}", s.ssid_pct);
    }
    assert!(series.dips.is_empty());
}

#[test]
fn rolled_faces_are_aligned_or_discarded() {
    let canvas = Canvas::default();
    let config = AnalysisConfig::default();
    let tilted = |roll_deg| SyntheticFrame {
        roll_deg,
        ..SyntheticFrame::symmetric()
    };

    let (img, face) = render_frame(&canvas, &tilted(3.0));
    let (outcome, art) = score_frame_detailed(&img, &face, &config, Execution::Sequential);
    assert_eq!(outcome.status, FrameStatus::Scored);
    let chip = art.unwrap().chip;
    assert!(roll_angle(&chip.landmarks).unwrap().abs() <= 0.2);
    assert!(outcome.ssid_raw > 0.95);

    let (img, face) = render_frame(&canvas, &tilted(10.0));
    let (outcome, art) = score_frame_detailed(&img, &face, &config, Execution::Sequential);
    assert_eq!(outcome.status, FrameStatus::DiscardedTilt);
    assert!(art.is_none());
}

#[test]
fn sentinels_sit_below_zero_in_every_output() {
    let frames = [
        SyntheticFrame::symmetric(),
        SyntheticFrame::no_face(),
        SyntheticFrame {
            roll_deg: 12.0,
            ..SyntheticFrame::symmetric()
        },
    ];
    let series = run(&frames, false, &RunOptions::default());
    let status: Vec<_> = series.scores.iter().map(|s| s.status).collect();
    assert_eq!(
        status,
        [
            FrameStatus::Scored,
            FrameStatus::NoFace,
            FrameStatus::DiscardedTilt
        ]
    );
    assert_eq!(series.scores[1].ssid_pct, SENTINEL_PCT);
    assert_eq!(series.scores[2].ssid_raw, -0.1);
    assert!(csv_string(&series).contains(",NoFace,-0.100000,-10.000000"));
    assert!(svg_string(&series).contains("polyline"));
}

#[test]
fn injected_asymmetry_produces_one_dip() {
    let series = run(
        &injected_dip_frames(60, 40.0, 55.0),
        false,
        &RunOptions::default(),
    );
    assert_eq!(series.dips.len(), 1, "{:?}", series.dips);
    let dip = &series.dips[0];
    assert_eq!((dip.first_frame, dip.last_frame), (24, 32));
}

#[test]
fn mirrored_clip_scores_identically() {
    let frames = injected_dip_frames(8, 25.0, 50.0);
    let a = run(&frames, false, &RunOptions::default());
    let b = run(&frames, true, &RunOptions::default());
    for (x, y) in a.scores.iter().zip(&b.scores) {
        assert!(
            (x.ssid_raw - y.ssid_raw).abs() <= 1e-12,
            "{} vs {}",
            x.ssid_raw,
            y.ssid_raw
        );
    }
}

#[test]
fn job_count_does_not_change_results() {
    let frames = injected_dip_frames(10, 30.0, 60.0);
    let seq = run(
        &frames,
        false,
        &RunOptions {
            jobs: Some(1),
            debug_dir: None,
        },
    );
    let par = run(
        &frames,
        false,
        &RunOptions {
            jobs: Some(4),
            debug_dir: None,
        },
    );
    assert_eq!(seq, par);
}

#[test]
fn debug_frames_are_written_for_scored_frames() {
    let dir = tempfile::tempdir().unwrap();
    let debug = dir.path().join("debug");
    let frames = [SyntheticFrame::symmetric(), SyntheticFrame::no_face()];
    run(
        &frames,
        false,
        &RunOptions {
            jobs: None,
            debug_dir: Some(debug.clone()),
        },
    );
    assert!(debug.join("frame_000000.png").exists());
    assert!(!debug.join("frame_000001.png").exists());
}

#[test]
fn detector_process_supplies_landmarks() {
    let dir = tempfile::tempdir().unwrap();
    let frames = [SyntheticFrame::symmetric(), SyntheticFrame::no_face()];
    let fx = write_fixture(dir.path(), 30.0, &Canvas::default(), &frames, false).unwrap();
    let manifest = load_manifest(&fx.manifest).unwrap();
    // a stand-in detector that replays the sidecar, ignoring the paths it is sent
    let cmd = format!("cat > /dev/null; cat '{}'", fx.landmarks.display());
    let series = run_pipeline(
        &manifest,
        &LandmarkSource::Detector(cmd),
        &AnalysisConfig::default(),
        &RunOptions::default(),
    )
    .unwrap();
    assert_eq!(series.scores[0].ssid_raw, 1.0);
    assert_eq!(series.scores[1].status, FrameStatus::NoFace);
    assert!(matches!(
        LandmarkSource::Sidecar(fx.landmarks)
            .resolve(&manifest)
            .unwrap()[1],
        FrameFaceResult::NoFace
    ));
}
