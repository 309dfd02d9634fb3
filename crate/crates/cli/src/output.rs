//! Atomic artifact writes and the run manifest.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Collects artifacts written into one output directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root.display().to_string(), e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through a temporary file and a rename.
    ///
    /// Names are plain file names; anything with a path separator is refused
    /// so nothing lands outside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(CliError::Config(format!("refusing to write `{name}` outside the output directory")));
        }
        let target = self.root.join(name);
        let display = target.display().to_string();
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(|e| CliError::io(&display, e))?;
        tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(&display, e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(&display, e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&display, e.error))?;
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// Writes `manifest.txt`, which must come after every other artifact.
    pub fn finish(mut self, entries: &[(String, String)], warnings: &[String]) -> CliResult<PathBuf> {
        let mut text = String::new();
        for (k, v) in entries {
            let _ = writeln!(text, "{k} = {v}");
        }
        for w in warnings {
            let _ = writeln!(text, "warning = {w}");
        }
        for (name, sum) in &self.files {
            let _ = writeln!(text, "output.{name}.sha256 = {sum}");
        }
        self.write("manifest.txt", &text)?;
        Ok(self.root.join("manifest.txt"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
