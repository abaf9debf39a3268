//! Files on disk: debate transcripts (JSON), article datasets (CSV), debate
//! scripts (JSON), and configs (TOML).
//!
//! Dataset rows look like
//!
//! ```text
//! # comment lines start with '#'
//! id,category,source,D,R,S,c,g,justification
//! D8,Civil Rights,BBC,Negative,Weak Positive,Neutral,Neutral,Neutral,
//! ```
//!
//! Ratings are scale labels (or their aliases, case-insensitive); an empty
//! cell means the role did not rate the article.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{AgentError, DebateScript};
use crate::analysis::{AnnotatedArticle, Role};
use crate::metrics::LabelScale;
use crate::protocol::{DebateConfig, DebateTranscript, ProtocolError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("line {line}, field {field}: {message}")]
    Dataset {
        line: u64,
        field: String,
        message: String,
    },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: u64, id: String },
    #[error("transcript schema version {found} is not supported (expected {expected}); migrate the file first")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),
    #[error("transcript {0:?} already exists")]
    Exists(String),
    #[error("no transcript {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Script(#[from] AgentError),
    #[error(transparent)]
    Config(#[from] ProtocolError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn subject_digest(subject: &str) -> String {
    Sha256::digest(subject.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub schema_version: u32,
    pub id: String,
    pub subject_digest: String,
    pub transcript: DebateTranscript,
}

impl TranscriptRecord {
    pub fn new(transcript: DebateTranscript) -> Self {
        Self::with_id(uuid::Uuid::new_v4().to_string(), transcript)
    }

    pub fn with_id(id: impl Into<String>, transcript: DebateTranscript) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            subject_digest: subject_digest(&transcript.subject),
            transcript,
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaMismatch {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let rounds = &self.transcript.rounds;
        if rounds.is_empty() {
            return Err(StoreError::InvalidTranscript("no rounds recorded".into()));
        }
        for (pos, r) in rounds.iter().enumerate() {
            if r.index != pos + 1 {
                return Err(StoreError::InvalidTranscript(format!(
                    "round indices are not contiguous from 1: position {} holds round {}",
                    pos + 1,
                    r.index
                )));
            }
        }
        if self.subject_digest != subject_digest(&self.transcript.subject) {
            return Err(StoreError::InvalidTranscript(
                "subject digest does not match subject".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, StoreError> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let parse = |e: serde_json::Error| StoreError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        // Check the version before the full schema so old files get a migration error.
        let v: Version = serde_json::from_str(text).map_err(parse)?;
        if v.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaMismatch {
                found: v.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let record: Self = serde_json::from_str(text).map_err(parse)?;
        record.validate()?;
        Ok(record)
    }
}

/// A directory of `<id>.json` transcript files.
#[derive(Debug, Clone)]
pub struct TranscriptStore {
    dir: PathBuf,
}

impl TranscriptStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Writes a new transcript. Existing ids are never overwritten.
    pub fn save(&self, record: &TranscriptRecord) -> Result<PathBuf, StoreError> {
        record.validate()?;
        if record.id.is_empty() || record.id.contains(['/', '\\']) || record.id.starts_with('.') {
            return Err(StoreError::InvalidTranscript(format!(
                "unusable id {:?}",
                record.id
            )));
        }
        let path = self.path_for(&record.id);
        let mut file = match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(StoreError::Exists(record.id.clone()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        file.write_all(record.to_json().as_bytes())
            .map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn load(&self, id: &str) -> Result<TranscriptRecord, StoreError> {
        let path = self.path_for(id);
        if !path.exists() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        load_transcript(&path)
    }

    /// Every transcript in the directory, sorted by file name.
    pub fn list(&self) -> Result<Vec<(PathBuf, TranscriptRecord)>, StoreError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(io_err(&self.dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| load_transcript(&p).map(|r| (p, r)))
            .collect()
    }
}

pub fn load_transcript(path: &Path) -> Result<TranscriptRecord, StoreError> {
    TranscriptRecord::from_json(&read(path)?, path)
}

pub const DATASET_COLUMNS: [&str; 9] = [
    "id",
    "category",
    "source",
    "D",
    "R",
    "S",
    "c",
    "g",
    "justification",
];

pub fn parse_dataset(text: &str, scale: &LabelScale) -> Result<Vec<AnnotatedArticle>, StoreError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_line = |r: &csv::Reader<&[u8]>| r.position().line();
    let headers = reader
        .headers()
        .map_err(|e| StoreError::Dataset {
            line: 1,
            field: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().ne(DATASET_COLUMNS) {
        return Err(StoreError::Dataset {
            line: header_line(&reader),
            field: "header".into(),
            message: format!("expected columns {}", DATASET_COLUMNS.join(",")),
        });
    }
    let mut seen = HashSet::new();
    let mut articles = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| StoreError::Dataset {
            line: e.position().map_or(0, |p| p.line()),
            field: "row".into(),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(StoreError::Dataset {
                line,
                field: "id".into(),
                message: "empty id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(StoreError::DuplicateId { line, id });
        }
        let mut ratings = BTreeMap::new();
        for (col, name) in DATASET_COLUMNS.iter().enumerate().take(8).skip(3) {
            let cell = &rec[col];
            if cell.is_empty() {
                continue;
            }
            let idx = scale.index_of(cell).ok_or_else(|| StoreError::Dataset {
                line,
                field: name.to_string(),
                message: format!("unknown rating label {cell:?}"),
            })?;
            let role = Role::parse(name).expect("dataset column is a role");
            ratings.insert(role, scale.labels()[idx].clone());
        }
        let justification = Some(rec[8].to_string()).filter(|j| !j.is_empty());
        articles.push(AnnotatedArticle {
            id,
            category: rec[1].to_string(),
            source: rec[2].to_string(),
            ratings,
            justification,
        });
    }
    Ok(articles)
}

pub fn load_dataset(path: &Path, scale: &LabelScale) -> Result<Vec<AnnotatedArticle>, StoreError> {
    parse_dataset(&read(path)?, scale)
}

pub fn load_debate_script(path: &Path) -> Result<DebateScript, StoreError> {
    let script: DebateScript =
        serde_json::from_str(&read(path)?).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    script.validate()?;
    Ok(script)
}

pub fn load_config(path: &Path) -> Result<DebateConfig, StoreError> {
    Ok(DebateConfig::from_toml(&read(path)?)?)
}
