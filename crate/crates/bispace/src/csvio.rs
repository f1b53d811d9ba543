//! Deterministic CSV writers: the per-epoch training log and the per-frame
//! score export. Floats are printed with Rust's shortest round-trip
//! formatting, so re-parsing a CSV reproduces the exact values.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use bispace_core::data::SNIPPET_FRAMES;
use bispace_core::train::EpochLog;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("`{path}` line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub const TRAIN_LOG_HEADER: &str = "epoch,bce,hvlgl,total,ap,auc";
pub const SCORE_HEADER: &str = "video_id,frame_index,score,label";

pub fn train_log_to_string(log: &[EpochLog]) -> String {
    let mut out = String::from(TRAIN_LOG_HEADER);
    out.push('\n');
    for e in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.epoch, e.bce, e.hvlgl, e.total, e.ap, e.auc
        );
    }
    out
}

pub fn write_train_log(path: &Path, log: &[EpochLog]) -> Result<(), CsvError> {
    fs::write(path, train_log_to_string(log)).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One frame-score row per frame; the label column is empty when the video
/// has no frame labels.
pub fn scores_to_string(per_video: &[(String, Vec<f64>, Option<Vec<u8>>)]) -> String {
    let mut out = String::from(SCORE_HEADER);
    out.push('\n');
    for (video_id, snippet_scores, labels) in per_video {
        let mut frame = 0usize;
        for &score in snippet_scores {
            for _ in 0..SNIPPET_FRAMES {
                match labels {
                    Some(l) => {
                        let _ = writeln!(out, "{video_id},{frame},{score},{}", l[frame]);
                    }
                    None => {
                        let _ = writeln!(out, "{video_id},{frame},{score},");
                    }
                }
                frame += 1;
            }
        }
    }
    out
}

pub fn write_scores(
    path: &Path,
    per_video: &[(String, Vec<f64>, Option<Vec<u8>>)],
) -> Result<(), CsvError> {
    fs::write(path, scores_to_string(per_video)).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a score CSV back into pooled (score, label) pairs; rows without a
/// label are rejected with their line number.
pub fn read_scores(path: &Path) -> Result<(Vec<f64>, Vec<u8>), CsvError> {
    let body = fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scores(&body).map_err(|(line, message)| CsvError::Parse {
        path: path.display().to_string(),
        line,
        message,
    })
}

pub fn parse_scores(body: &str) -> Result<(Vec<f64>, Vec<u8>), (usize, String)> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if i == 0 {
            if line != SCORE_HEADER {
                return Err((1, format!("unexpected header `{line}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err((i + 1, format!("expected 4 fields, got {}", fields.len())));
        }
        let score: f64 = fields[2]
            .parse()
            .map_err(|_| (i + 1, format!("bad score `{}`", fields[2])))?;
        let label: u8 = fields[3]
            .parse()
            .map_err(|_| (i + 1, format!("missing or bad label `{}`", fields[3])))?;
        scores.push(score);
        labels.push(label);
    }
    Ok((scores, labels))
}
