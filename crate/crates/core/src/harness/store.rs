//! Append-only store of run records.
//!
//! Layout: the header line, one metadata line with the full configuration,
//! then one record per line in grid order (experiment, solver as listed in
//! the configuration, run).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::CaseStudyConfig;
use super::format::{self, header, parse_line, read_body, write_json_line};
use crate::bo::{RunRecord, SolverKind};
use crate::error::{Error, Result};

pub const KIND: &str = "store";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StoreMeta {
    pub case_study: String,
    pub config: CaseStudyConfig,
    /// FNV-1a digest of the designs used, in their file encoding.
    pub designs_digest: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub case_study: String,
    pub experiment: usize,
    pub solver: SolverKind,
    pub run: usize,
}

impl RecordKey {
    pub fn of(r: &RunRecord) -> Self {
        Self {
            case_study: r.case_study.clone(),
            experiment: r.experiment,
            solver: r.solver,
            run: r.run,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStore {
    pub meta: StoreMeta,
    pub records: Vec<RunRecord>,
}

impl RunStore {
    /// Parses a store. With `allow_partial_tail`, a final line cut short by
    /// an interruption is ignored.
    pub fn parse(text: &str, allow_partial_tail: bool) -> Result<Self> {
        let body = read_body(text, KIND, allow_partial_tail)?;
        let mut it = body.into_iter();
        let (line, meta_text) = it.next().ok_or(Error::Format {
            what: KIND,
            line: 2,
            message: "missing metadata line".into(),
        })?;
        let meta: StoreMeta = parse_line(KIND, line, &meta_text)?;
        let mut keys = BTreeSet::new();
        let mut records = Vec::new();
        for (line, text) in it {
            let r: RunRecord = parse_line(KIND, line, &text)?;
            if r.case_study != meta.case_study {
                return Err(Error::Format {
                    what: KIND,
                    line,
                    message: format!("record belongs to case study `{}`", r.case_study),
                });
            }
            if !keys.insert(RecordKey::of(&r)) {
                return Err(Error::Format {
                    what: KIND,
                    line,
                    message: format!(
                        "duplicate record for experiment {} solver {} run {}",
                        r.experiment, r.solver, r.run
                    ),
                });
            }
            records.push(r);
        }
        Ok(Self { meta, records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&format::read_to_string(path)?, false)
    }

    pub fn keys(&self) -> BTreeSet<RecordKey> {
        self.records.iter().map(RecordKey::of).collect()
    }

    /// Header and metadata lines of a new store.
    pub fn preamble(meta: &StoreMeta) -> Result<Vec<u8>> {
        let mut buf = header(KIND).into_bytes();
        buf.push(b'\n');
        write_json_line(&mut buf, meta)?;
        Ok(buf)
    }
}
