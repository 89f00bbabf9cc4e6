use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{Corpus, Split, TreeReader, Treebank, TreebankError, Violation};

/// A document that could not be ingested.
#[derive(Debug)]
pub struct DocumentFailure {
    pub split: Split,
    pub path: PathBuf,
    pub error: TreebankError,
}

/// Result of scanning a corpus directory: every document that parsed, plus
/// the ones that did not.
#[derive(Debug)]
pub struct LoadReport {
    pub treebank: Treebank,
    pub failures: Vec<DocumentFailure>,
}

impl LoadReport {
    pub fn violations(&self) -> Vec<Violation> {
        self.failures.iter().flat_map(|f| f.error.violations()).collect()
    }
}

/// Strips `.dep`/`.json`/`.tsv` and the SciDTB `.edu.txt` infix.
fn doc_id_for(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    stem.strip_suffix(".edu.txt")
        .or_else(|| stem.strip_suffix(".txt"))
        .unwrap_or(stem)
        .to_string()
}

fn io_err(path: &Path, source: std::io::Error) -> TreebankError {
    TreebankError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn split_files(dir: &Path, reader: &dyn TreeReader) -> Result<Vec<PathBuf>, TreebankError> {
    // SciDTB keeps dev/test gold trees under `<split>/gold/`.
    let gold = dir.join("gold");
    let dir = if gold.is_dir() { gold } else { dir.to_path_buf() };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| io_err(&dir, e))? {
        let path = entry.map_err(|e| io_err(&dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        if path.is_file() && reader.extensions().contains(&ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Scans `<dir>/<split>/` for documents, parsing them in parallel.
///
/// Documents that fail to parse or validate are collected in
/// [`LoadReport::failures`]; only I/O problems and duplicate document ids
/// abort the load.
pub fn load_treebank(
    dir: &Path,
    name: &str,
    reader: &dyn TreeReader,
) -> Result<LoadReport, TreebankError> {
    let mut splits = BTreeMap::new();
    let mut failures = Vec::new();
    for split in Split::ALL {
        let split_dir = dir.join(split.as_str());
        if !split_dir.is_dir() {
            continue;
        }
        let files = split_files(&split_dir, reader)?;
        let parsed = crate::par::map(&files, |path| {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            reader.read(&bytes, &doc_id_for(path))
        });
        let mut trees = Vec::with_capacity(files.len());
        for (path, result) in files.into_iter().zip(parsed) {
            match result {
                Ok(tree) => trees.push(tree),
                Err(e @ TreebankError::Io { .. }) => return Err(e),
                Err(error) => failures.push(DocumentFailure { split, path, error }),
            }
        }
        splits.insert(split, Corpus::new(name, split, trees)?);
    }
    if splits.is_empty() {
        return Err(TreebankError::EmptyCorpus(name.to_string()));
    }
    Ok(LoadReport {
        treebank: Treebank {
            name: name.to_string(),
            splits,
        },
        failures,
    })
}
