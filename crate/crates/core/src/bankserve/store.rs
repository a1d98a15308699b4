//! Append-only JSON-lines question bank.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genai::{PromptMetadata, PromptSpec};
use crate::qmodel::{OptionBody, Question};
use crate::validator::{Disposition, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Candidate,
    Approved,
    Rejected,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Candidate => "candidate",
            RecordStatus::Approved => "approved",
            RecordStatus::Rejected => "rejected",
        }
    }
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "candidate" => Ok(RecordStatus::Candidate),
            "approved" => Ok(RecordStatus::Approved),
            "rejected" => Ok(RecordStatus::Rejected),
            _ => Err(format!("unknown status `{s}` (expected candidate, approved or rejected)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Reject,
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "approve" => Ok(Decision::Approve),
            "reject" => Ok(Decision::Reject),
            _ => Err(format!("unknown decision `{s}` (expected approve or reject)")),
        }
    }
}

/// How a generated record came about; enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    pub batch_id: String,
    pub backend: String,
    pub seed: u64,
    pub attempt: u32,
    pub spec: PromptSpec,
    pub prompt: PromptMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRecord {
    #[serde(flatten)]
    pub question: Question,
    pub status: RecordStatus,
    #[serde(default)]
    pub reviewer_note: Option<String>,
    pub validation_report: ValidationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationInfo>,
}

impl BankRecord {
    pub fn candidate(question: Question, report: ValidationReport) -> Self {
        BankRecord {
            question,
            status: RecordStatus::Candidate,
            reviewer_note: None,
            validation_report: report,
            generation: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.question.id
    }

    /// Applies a reviewer decision; only candidates can be decided and only
    /// accepted candidates can be approved.
    pub fn decide(&mut self, decision: Decision, note: Option<String>) -> Result<(), StoreError> {
        let to = match decision {
            Decision::Approve => RecordStatus::Approved,
            Decision::Reject => RecordStatus::Rejected,
        };
        if self.status != RecordStatus::Candidate {
            return Err(StoreError::IllegalTransition {
                id: self.id().to_string(),
                from: self.status,
                to,
            });
        }
        if to == RecordStatus::Approved && self.validation_report.disposition != Disposition::Accept {
            return Err(StoreError::NotAccepted(self.id().to_string()));
        }
        self.status = to;
        if note.is_some() {
            self.reviewer_note = note;
        }
        Ok(())
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("bank record serializes")
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no record with id `{0}`")]
    NotFound(String),
    #[error("record `{id}` is {from}; cannot become {to}")]
    IllegalTransition {
        id: String,
        from: RecordStatus,
        to: RecordStatus,
    },
    #[error("record `{0}` did not pass validation and cannot be approved")]
    NotAccepted(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } => "IoError",
            StoreError::NotFound(_) => "NotFound",
            StoreError::IllegalTransition { .. } => "IllegalTransition",
            StoreError::NotAccepted(_) => "NotAccepted",
        }
    }
}

/// Outcome of reading a bank file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub lines: usize,
    pub records: usize,
    /// 1-based line numbers that could not be read, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// In-memory view of a bank file; the last line for an id wins.
#[derive(Debug, Clone, Default)]
pub struct Bank {
    path: Option<PathBuf>,
    records: IndexMap<String, BankRecord>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Bank {
    pub fn in_memory() -> Self {
        Bank::default()
    }

    /// Loads `path`; a missing file is an empty bank. Unreadable lines are
    /// skipped and reported.
    pub fn open(path: impl AsRef<Path>) -> Result<(Bank, LoadStats), StoreError> {
        let path = path.as_ref();
        let mut bank = Bank {
            path: Some(path.to_path_buf()),
            records: IndexMap::new(),
        };
        let mut stats = LoadStats::default();
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok((bank, stats)),
            Err(e) => return Err(io_err(path)(e)),
        };
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            stats.lines += 1;
            match serde_json::from_str::<BankRecord>(&line) {
                Ok(r) => {
                    bank.records.insert(r.id().to_string(), r);
                }
                Err(e) => {
                    tracing::warn!(path = %path.display(), line = i + 1, "skipping unreadable bank line: {e}");
                    stats.skipped.push((i + 1, e.to_string()));
                }
            }
        }
        stats.records = bank.records.len();
        Ok((bank, stats))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&BankRecord> {
        self.records.get(id)
    }

    pub fn records(&self) -> impl Iterator<Item = &BankRecord> {
        self.records.values()
    }

    pub fn list(&self, status: Option<RecordStatus>) -> Vec<&BankRecord> {
        self.records
            .values()
            .filter(|r| status.is_none_or(|s| r.status == s))
            .collect()
    }

    fn append_line(&self, record: &BankRecord) -> Result<(), StoreError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(path))?;
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        let mut line = record.to_line();
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(io_err(path))
    }

    /// Appends a line for `record` and makes it current. Returns its id.
    pub fn put(&mut self, record: BankRecord) -> Result<String, StoreError> {
        self.append_line(&record)?;
        let id = record.id().to_string();
        self.records.insert(id.clone(), record);
        Ok(id)
    }

    pub fn decide(&mut self, id: &str, decision: Decision, note: Option<String>) -> Result<BankRecord, StoreError> {
        let mut record = self
            .records
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        record.decide(decision, note)?;
        self.put(record.clone())?;
        Ok(record)
    }

    /// One line per current record, in insertion order.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for r in self.records.values() {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }

    /// Writes the compacted bank to `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let path = path.as_ref();
        std::fs::write(path, self.canonical_text()).map_err(io_err(path))
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "id",
    "status",
    "topic",
    "difficulty",
    "stem",
    "correct_option_id",
    "key_latex",
    "options",
    "disposition",
    "reviewer_note",
    "created_at",
];

fn disposition_name(d: &Disposition) -> &'static str {
    match d {
        Disposition::Accept => "accept",
        Disposition::Regenerate(_) => "regenerate",
        Disposition::HumanReview(_) => "human_review",
    }
}

fn option_summary(q: &Question) -> String {
    q.options
        .iter()
        .map(|o| match &o.body_ast {
            OptionBody::Math(_) => format!("{}: {}", o.id, o.body_latex),
            OptionBody::Text(t) => format!("{}: {t}", o.id),
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

/// CSV export with the columns in [`CSV_HEADER`].
pub fn export_csv<'a>(records: impl IntoIterator<Item = &'a BankRecord>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        let q = &r.question;
        let key = q.key().map(|k| k.body_latex.as_str()).unwrap_or("");
        w.write_record([
            q.id.as_str(),
            r.status.as_str(),
            q.topic.as_str(),
            q.difficulty.as_str(),
            q.stem.as_str(),
            q.correct_option_id.as_str(),
            key,
            option_summary(q).as_str(),
            disposition_name(&r.validation_report.disposition),
            r.reviewer_note.as_deref().unwrap_or(""),
            timestamp(&q.created_at).as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
}
