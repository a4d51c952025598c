use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Files a command produces, held in memory until every input has been validated.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn add_json<T: serde::Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("output values serialize");
        s.push('\n');
        self.add(name, s);
    }

    /// Write each file to a temporary sibling and rename it into place.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, bytes) in &self.files {
            let dest = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
            let write = || -> std::io::Result<()> {
                let mut f = fs::File::create(&tmp)?;
                f.write_all(bytes)?;
                f.sync_all()?;
                fs::rename(&tmp, &dest)
            };
            if let Err(e) = write() {
                let _ = fs::remove_file(&tmp);
                return Err(CliError::io(&dest, e));
            }
        }
        Ok(())
    }
}
