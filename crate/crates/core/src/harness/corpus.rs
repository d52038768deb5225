use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One image of a directory-per-class corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    /// Name of the class directory.
    pub label: String,
    pub stem: String,
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png" | "bmp")
    )
}

/// Lists `root/<label>/*.{png,bmp}`, sorted by label then file name.
/// Files directly under `root` are ignored.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let root = root.as_ref();
    let read = |dir: &Path| -> Result<Vec<PathBuf>> {
        let mut paths = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
            .collect::<Result<Vec<_>>>()?;
        paths.sort();
        Ok(paths)
    };
    let mut entries = Vec::new();
    for class_dir in read(root)?.into_iter().filter(|p| p.is_dir()) {
        let label = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        for path in read(&class_dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
        {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            entries.push(CorpusEntry {
                path,
                label: label.clone(),
                stem,
            });
        }
    }
    Ok(entries)
}
