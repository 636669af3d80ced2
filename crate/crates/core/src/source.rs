//! Where per-frame landmarks come from: a JSON-lines sidecar file or an
//! external detector process speaking the same line format.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FrameManifest;
use crate::landmarks::{parse_landmark_sidecar, FrameFaceResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkSource {
    /// JSON-lines file with one record per frame.
    Sidecar(PathBuf),
    /// Shell command run as a child process: frame paths in on stdin, one
    /// sidecar record per frame out on stdout.
    Detector(String),
}

impl LandmarkSource {
    /// Produces one result per manifest frame, in manifest order.
    pub fn resolve(&self, manifest: &FrameManifest) -> Result<Vec<FrameFaceResult>> {
        match self {
            LandmarkSource::Sidecar(path) => {
                let records = read_sidecar(path)?;
                match_to_manifest(records, manifest)
            }
            LandmarkSource::Detector(cmd) => {
                let paths = manifest
                    .frames()
                    .iter()
                    .map(|f| manifest.frame_path(f.index))
                    .collect::<Result<Vec<_>>>()?;
                let records = run_detector(cmd, &paths)?;
                for (pos, (index, _)) in records.iter().enumerate() {
                    let expected = manifest.frames()[pos].index;
                    if *index != expected {
                        return Err(Error::IndexMismatch(format!(
                            "detector line {} reports index {index}, expected {expected}",
                            pos + 1
                        )));
                    }
                }
                Ok(records.into_iter().map(|(_, r)| r).collect())
            }
        }
    }
}

/// Reads every non-blank line of a sidecar file.
pub fn read_sidecar(path: &Path) -> Result<Vec<(u64, FrameFaceResult)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_landmark_sidecar(line).map_err(|e| match e {
            Error::SidecarJson { index, message } => Error::SidecarJson {
                index,
                message: format!("{} line {}: {message}", path.display(), lineno + 1),
            },
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Orders records by manifest frame. Missing, duplicate, or unknown indices are errors.
pub fn match_to_manifest(
    records: Vec<(u64, FrameFaceResult)>,
    manifest: &FrameManifest,
) -> Result<Vec<FrameFaceResult>> {
    let mut by_index = BTreeMap::new();
    for (index, rec) in records {
        if by_index.insert(index, rec).is_some() {
            return Err(Error::IndexMismatch(format!(
                "duplicate landmark record for frame {index}"
            )));
        }
    }
    let mut out = Vec::with_capacity(manifest.len());
    for frame in manifest.frames() {
        match by_index.remove(&frame.index) {
            Some(rec) => out.push(rec),
            None => {
                return Err(Error::IndexMismatch(format!(
                    "no landmark record for frame {}",
                    frame.index
                )))
            }
        }
    }
    if let Some(extra) = by_index.keys().next() {
        return Err(Error::IndexMismatch(format!(
            "landmark record for frame {extra} which is not in the manifest"
        )));
    }
    Ok(out)
}

/// Runs `cmd` through `sh -c`, feeding one path per line and reading one
/// record per path. A nonzero exit status is fatal.
pub fn run_detector(cmd: &str, frames: &[PathBuf]) -> Result<Vec<(u64, FrameFaceResult)>> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| Error::Detector(format!("failed to start `{cmd}`: {e}")))?;

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input: Vec<String> = frames.iter().map(|p| p.display().to_string()).collect();
    // written from a separate thread so a chatty child cannot deadlock on a full pipe
    let writer = std::thread::spawn(move || -> std::io::Result<()> {
        for line in input {
            writeln!(stdin, "{line}")?;
        }
        stdin.flush()
    });

    let stdout = child.stdout.take().expect("stdout is piped");
    let mut records = Vec::with_capacity(frames.len());
    let mut parse_error = None;
    for line in BufReader::new(stdout).lines() {
        let line = line.map_err(|e| Error::Detector(format!("reading output: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        if records.len() == frames.len() {
            parse_error.get_or_insert(Error::Detector(format!(
                "more than {} output records",
                frames.len()
            )));
            continue;
        }
        match parse_landmark_sidecar(&line) {
            Ok(rec) => records.push(rec),
            Err(e) => {
                parse_error.get_or_insert(e);
            }
        }
    }

    let status = child
        .wait()
        .map_err(|e| Error::Detector(format!("waiting for `{cmd}`: {e}")))?;
    let write_result = writer.join().expect("writer thread panicked");
    if !status.success() {
        return Err(Error::Detector(format!("`{cmd}` exited with {status}")));
    }
    if let Some(e) = parse_error {
        return Err(e);
    }
    if let Err(e) = write_result {
        return Err(Error::Detector(format!("writing frame paths: {e}")));
    }
    if records.len() != frames.len() {
        return Err(Error::Detector(format!(
            "expected {} records, got {}",
            frames.len(),
            records.len()
        )));
    }
    Ok(records)
}
