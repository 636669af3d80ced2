//! CSV, JSON and SVG outputs. All three render the same [`AsymmetrySeries`]
//! and are byte-for-byte functions of it.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_congruence, AnalysisConfig, AsymmetrySeries, BaselineSource, Congruence, DipInterval,
    FrameStatus,
};
use crate::error::{Error, Result};
use crate::source::LandmarkSource;

pub const CSV_HEADER: &str = "frame_index,time_ms,time_pct,status,ssid_raw,ssid_pct";

/// Inputs and parameters that determine a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub manifest: String,
    pub landmarks: LandmarkSource,
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    pub scored: usize,
    pub no_face: usize,
    pub discarded_tilt: usize,
    pub baseline_pct: Option<f64>,
    pub baseline_source: BaselineSource,
    pub dips: Vec<DipInterval>,
    pub congruence_threshold_pct: f64,
    pub congruent: usize,
    pub incongruent: usize,
}

impl Summary {
    pub fn new(series: &AsymmetrySeries, congruence_threshold_pct: f64) -> Self {
        let (mut congruent, mut incongruent) = (0, 0);
        for s in series.scores.iter().filter(|s| s.is_scored()) {
            match classify_congruence(s.ssid_pct, congruence_threshold_pct) {
                Ok(Congruence::Congruent) => congruent += 1,
                Ok(Congruence::Incongruent) => incongruent += 1,
                Err(_) => unreachable!("scored frames are in [0, 100]"),
            }
        }
        Self {
            frames: series.scores.len(),
            scored: series.count(FrameStatus::Scored),
            no_face: series.count(FrameStatus::NoFace),
            discarded_tilt: series.count(FrameStatus::DiscardedTilt),
            baseline_pct: series.baseline_pct,
            baseline_source: series.baseline_source,
            dips: series.dips.clone(),
            congruence_threshold_pct,
            congruent,
            incongruent,
        }
    }

    /// `frames=.. scored=.. no_face=.. discarded=.. baseline=.. dips=..`
    pub fn one_line(&self) -> String {
        let baseline = match self.baseline_pct {
            Some(b) => format!("{b:.6}"),
            None => "none".into(),
        };
        format!(
            "frames={} scored={} no_face={} discarded={} baseline={} dips={}",
            self.frames,
            self.scored,
            self.no_face,
            self.discarded_tilt,
            baseline,
            self.dips.len()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: ConfigEcho,
    pub summary: Summary,
    pub series: AsymmetrySeries,
}

impl AnalysisReport {
    pub fn new(series: AsymmetrySeries, config: ConfigEcho) -> Self {
        let summary = Summary::new(&series, config.analysis.congruence_threshold_pct);
        Self {
            config,
            summary,
            series,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn csv_string(series: &AsymmetrySeries) -> String {
    let mut out = String::with_capacity(64 * (series.scores.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &series.scores {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{:.6},{:.6}",
            s.frame_index,
            s.time_ms,
            s.time_pct,
            s.status.as_str(),
            s.ssid_raw,
            s.ssid_pct
        );
    }
    out
}

pub fn write_csv(series: &AsymmetrySeries, path: &Path) -> Result<()> {
    write_file(path, &csv_string(series))
}

pub fn json_string(report: &AnalysisReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

pub fn write_json(report: &AnalysisReport, path: &Path) -> Result<()> {
    write_file(path, &json_string(report))
}

pub fn read_json(path: &Path) -> Result<AnalysisReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("{}: {e}", path.display())))
}

/// Plot geometry of the SVG chart.
#[derive(Debug, Clone, Copy)]
pub struct ChartLayout {
    pub width: f64,
    pub height: f64,
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

pub const Y_MIN_PCT: f64 = -15.0;
pub const Y_MAX_PCT: f64 = 100.0;

impl Default for ChartLayout {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 440.0,
            left: 60.0,
            right: 20.0,
            top: 20.0,
            bottom: 50.0,
        }
    }
}

impl ChartLayout {
    /// SVG x coordinate of a time percentage.
    pub fn x(&self, time_pct: f64) -> f64 {
        self.left + time_pct / 100.0 * (self.width - self.left - self.right)
    }

    /// SVG y coordinate of a similarity percentage (grows downwards).
    pub fn y(&self, ssid_pct: f64) -> f64 {
        let plot_h = self.height - self.top - self.bottom;
        self.top + (Y_MAX_PCT - ssid_pct) / (Y_MAX_PCT - Y_MIN_PCT) * plot_h
    }
}

pub fn svg_string(series: &AsymmetrySeries) -> String {
    let l = ChartLayout::default();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = l.width,
        h = l.height
    );
    let _ = writeln!(
        s,
        r##"<rect class="background" x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        l.width, l.height
    );

    let (y_top, y_bottom) = (l.y(Y_MAX_PCT), l.y(Y_MIN_PCT));
    for d in &series.dips {
        let x0 = l.x(d.start_pct);
        // single-frame dips still get a visible sliver
        let w = (l.x(d.end_pct) - x0).max(1.0);
        let _ = writeln!(
            s,
            r##"<rect class="dip" data-start-pct="{:.6}" data-end-pct="{:.6}" x="{:.6}" y="{:.6}" width="{:.6}" height="{:.6}" fill="#d6604d" fill-opacity="0.25"/>"##,
            d.start_pct,
            d.end_pct,
            x0,
            y_top,
            w,
            y_bottom - y_top
        );
    }

    // grid and tick labels
    for t in (0..=100).step_by(20) {
        let x = l.x(t as f64);
        let _ = writeln!(
            s,
            r##"<line class="grid" x1="{x:.6}" y1="{y_top:.6}" x2="{x:.6}" y2="{y_bottom:.6}" stroke="#e0e0e0"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.6}" y="{:.6}" text-anchor="middle">{t}</text>"#,
            y_bottom + 16.0
        );
    }
    for v in [-10, 0, 20, 40, 60, 80, 100] {
        let y = l.y(v as f64);
        let _ = writeln!(
            s,
            r##"<line class="grid" x1="{:.6}" y1="{y:.6}" x2="{:.6}" y2="{y:.6}" stroke="#e0e0e0"/>"##,
            l.x(0.0),
            l.x(100.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.6}" y="{:.6}" text-anchor="end">{v}</text>"#,
            l.x(0.0) - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{x0:.6}" y1="{y0:.6}" x2="{x1:.6}" y2="{y0:.6}" stroke="#000000"/>"##,
        x0 = l.x(0.0),
        x1 = l.x(100.0),
        y0 = l.y(0.0)
    );
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{x0:.6}" y1="{y_top:.6}" x2="{x0:.6}" y2="{y_bottom:.6}" stroke="#000000"/>"##,
        x0 = l.x(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.6}" y="{:.6}" text-anchor="middle">time (% of clip)</text>"#,
        l.x(50.0),
        l.height - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.6}" text-anchor="middle" transform="rotate(-90 14 {:.6})">SSID (%)</text>"#,
        l.y(42.5),
        l.y(42.5)
    );

    if let Some(b) = series.baseline_pct {
        let _ = writeln!(
            s,
            r##"<line class="baseline" data-pct="{b:.6}" x1="{:.6}" y1="{y:.6}" x2="{:.6}" y2="{y:.6}" stroke="#2166ac" stroke-dasharray="6 4"/>"##,
            l.x(0.0),
            l.x(100.0),
            y = l.y(b)
        );
    }

    if !series.scores.is_empty() {
        let points: Vec<String> = series
            .scores
            .iter()
            .map(|p| format!("{:.6},{:.6}", l.x(p.time_pct), l.y(p.ssid_pct)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="ssid" fill="none" stroke="#000000" stroke-width="1" points="{}"/>"##,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_svg(series: &AsymmetrySeries, path: &Path) -> Result<()> {
    write_file(path, &svg_string(series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{assemble_series, FrameOutcome};
    use crate::ingest::{FrameEntry, FrameManifest};

    fn manifest(n: u64) -> FrameManifest {
        let frames = (0..n)
            .map(|i| FrameEntry {
                index: i,
                file: format!("{i}.png"),
            })
            .collect();
        FrameManifest::new(60.0, frames, "/x").unwrap()
    }

    fn sample_series() -> AsymmetrySeries {
        let m = manifest(3);
        let outcomes = [
            FrameOutcome::scored(0.9),
            FrameOutcome::sentinel(FrameStatus::NoFace),
            FrameOutcome::scored(0.5),
        ];
        assemble_series(&m, &outcomes, &AnalysisConfig::default())
    }

    fn polyline_points(svg: &str) -> Vec<(f64, f64)> {
        let start = svg.find(r#"points=""#).unwrap() + 8;
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end]
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn csv_rows() {
        let csv = csv_string(&sample_series());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0.000000,0.000000,Scored,0.900000,90.000000");
        assert_eq!(
            lines[2],
            "1,16.666667,33.333333,NoFace,-0.100000,-10.000000"
        );
        assert!(!csv.contains('\r'));
        assert_eq!(csv, csv_string(&sample_series()));
    }

    #[test]
    fn empty_series_csv_is_header_only() {
        let s = AsymmetrySeries {
            scores: vec![],
            baseline_pct: None,
            baseline_source: BaselineSource::Unavailable,
            dips: vec![],
        };
        assert_eq!(csv_string(&s), format!("{CSV_HEADER}\n"));
        assert!(!svg_string(&s).contains("polyline"));
    }

    #[test]
    fn svg_structure() {
        let m = manifest(10);
        let outcomes: Vec<FrameOutcome> = (0..10)
            .map(|i| FrameOutcome::scored(if (4..7).contains(&i) { 0.3 } else { 0.95 }))
            .collect();
        let series = assemble_series(&m, &outcomes, &AnalysisConfig::default());
        assert_eq!(series.dips.len(), 1);
        let svg = svg_string(&series);
        assert_eq!(svg.matches(r#"class="dip""#).count(), 1);
        assert_eq!(svg.matches(r#"class="baseline""#).count(), 1);
        assert!(svg.contains(r#"data-start-pct="40.000000" data-end-pct="60.000000""#));
        assert_eq!(svg, svg_string(&series));
    }

    #[test]
    fn all_sentinel_series_plots_at_minus_ten() {
        let m = manifest(5);
        let outcomes = vec![FrameOutcome::sentinel(FrameStatus::DiscardedTilt); 5];
        let series = assemble_series(&m, &outcomes, &AnalysisConfig::default());
        let svg = svg_string(&series);
        let l = ChartLayout::default();
        let pts = polyline_points(&svg);
        assert_eq!(pts.len(), 5);
        for (_, y) in pts {
            assert!((y - l.y(-10.0)).abs() < 1e-6);
            assert!(y > l.y(0.0));
        }
        assert!(!svg.contains(r#"class="baseline""#));
    }

    #[test]
    fn json_round_trip_and_summary() {
        let series = sample_series();
        let report = AnalysisReport::new(
            series,
            ConfigEcho {
                manifest: "m.json".into(),
                landmarks: LandmarkSource::Sidecar("lm.jsonl".into()),
                analysis: AnalysisConfig::default(),
            },
        );
        assert_eq!(report.summary.scored, 2);
        assert_eq!(report.summary.no_face, 1);
        assert_eq!(report.summary.congruent, 1);
        assert_eq!(report.summary.incongruent, 1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_json(&report, &p).unwrap();
        assert_eq!(read_json(&p).unwrap(), report);
        assert_eq!(
            report.summary.one_line(),
            "frames=3 scored=2 no_face=1 discarded=0 baseline=70.000000 dips=0"
        );
    }

    #[test]
    fn unwritable_path_is_an_output_error() {
        let err = write_csv(&sample_series(), Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(matches!(err, Error::Output { .. }));
        assert!(!err.is_input_error());
    }
}
