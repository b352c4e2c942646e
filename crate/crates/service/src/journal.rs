//! Append-only per-session event log (`<dir>/<session-id>.jsonl`).
//!
//! Each line is one [`JournalEvent`]. A torn final line (crash mid-write) is
//! ignored on replay; any other malformed line is an error.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use pivot_core::conversation::Utterance;
use pivot_core::measures::PivotalScore;
use serde::{Deserialize, Serialize};

use crate::store::SessionCalibration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEvent {
    Created {
        id: String,
        created_at_ms: u64,
        calibration: SessionCalibration,
    },
    Utterance {
        utterance: Utterance,
    },
    Scored {
        k: usize,
        revision: u32,
        score: PivotalScore,
    },
    Closed,
}

#[derive(Debug)]
pub struct Journal {
    file: File,
    path: PathBuf,
}

impl Journal {
    pub fn path_for(dir: &Path, session_id: &str) -> PathBuf {
        dir.join(format!("{session_id}.jsonl"))
    }

    /// Creates a new journal; fails if one already exists for the id.
    pub fn create(dir: &Path, session_id: &str) -> std::io::Result<Self> {
        let path = Self::path_for(dir, session_id);
        let file = OpenOptions::new().append(true).create_new(true).open(&path)?;
        Ok(Self { file, path })
    }

    pub fn reopen(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &JournalEvent) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(event).map_err(std::io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()
    }

    pub fn read(path: &Path) -> std::io::Result<Vec<JournalEvent>> {
        let reader = BufReader::new(File::open(path)?);
        let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
        let last = lines.len().saturating_sub(1);
        let mut events = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(event) => events.push(event),
                Err(e) if i == last => {
                    log::warn!("{}: ignoring torn final line: {e}", path.display());
                }
                Err(e) => {
                    return Err(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("{}:{}: {e}", path.display(), i + 1),
                    ))
                }
            }
        }
        Ok(events)
    }
}
