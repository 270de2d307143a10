use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::CtError;

/// Resume point for one log: the next entry index to fetch and the tree size
/// seen when it was written. Persisted as `log_name\tnext_index\tsth_size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IngestCheckpoint {
    pub log_name: String,
    pub next_index: u64,
    pub sth_size: u64,
}

impl IngestCheckpoint {
    pub fn fresh(log_name: impl Into<String>) -> Self {
        IngestCheckpoint {
            log_name: log_name.into(),
            next_index: 0,
            sth_size: 0,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\n",
            self.log_name, self.next_index, self.sth_size
        )
    }

    pub fn parse_line(line: &str) -> Result<Self, CtError> {
        let bad = || CtError::Checkpoint(format!("malformed checkpoint line {line:?}"));
        let mut fields = line.trim_end_matches(['\n', '\r']).split('\t');
        let log_name = fields.next().filter(|s| !s.is_empty()).ok_or_else(bad)?;
        let next_index = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let sth_size = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if fields.next().is_some() {
            return Err(bad());
        }
        let checkpoint = IngestCheckpoint {
            log_name: log_name.to_owned(),
            next_index,
            sth_size,
        };
        if checkpoint.next_index > checkpoint.sth_size {
            return Err(CtError::Checkpoint(format!(
                "next_index {next_index} beyond tree size {sth_size}"
            )));
        }
        Ok(checkpoint)
    }

    /// Reads a checkpoint file; a missing file means a fresh start.
    pub fn load(path: &Path, log_name: &str) -> Result<Self, CtError> {
        match fs::read_to_string(path) {
            Ok(text) => {
                let checkpoint = Self::parse_line(&text)?;
                if checkpoint.log_name != log_name {
                    return Err(CtError::Checkpoint(format!(
                        "{} belongs to log {:?}, not {log_name:?}",
                        path.display(),
                        checkpoint.log_name
                    )));
                }
                Ok(checkpoint)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Self::fresh(log_name)),
            Err(e) => Err(CtError::Checkpoint(format!("{}: {e}", path.display()))),
        }
    }

    /// Writes through a temporary file and rename so a crash leaves either the
    /// old or the new checkpoint.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_line().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }
}
