//! Named benchmark datasets and where to find them on disk.

use std::path::{Path, PathBuf};

use vropt_core::{Dataset, DatasetKind, DatasetMeta};

use crate::error::{Result, VroptError};
use crate::libsvm::read_libsvm_file;

pub const DATA_DIR_ENV: &str = "VROPT_DATA_DIR";

/// A registered dataset: published size and the task it is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Registered {
    pub name: &'static str,
    pub n: usize,
    pub d: usize,
    pub kind: DatasetKind,
}

use DatasetKind::{BinaryLabels as Cls, RegressionTargets as Reg};

pub const REGISTRY: [Registered; 8] = [
    Registered { name: "a9a", n: 32561, d: 123, kind: Cls },
    Registered { name: "abalone", n: 4177, d: 8, kind: Reg },
    Registered { name: "mg", n: 1385, d: 6, kind: Reg },
    Registered { name: "mushrooms", n: 8124, d: 112, kind: Cls },
    Registered { name: "phishing", n: 11055, d: 68, kind: Cls },
    Registered { name: "pyrim", n: 74, d: 27, kind: Reg },
    Registered { name: "triazines", n: 186, d: 60, kind: Reg },
    Registered { name: "w8a", n: 49749, d: 300, kind: Cls },
];

pub fn lookup(name: &str) -> Option<&'static Registered> {
    REGISTRY.iter().find(|r| r.name == name)
}

pub fn metadata(name: &str) -> Option<DatasetMeta> {
    lookup(name).map(|r| DatasetMeta { name: r.name.to_string(), n: r.n, d: r.d })
}

/// `$VROPT_DATA_DIR`, or `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

/// Candidate file names for a dataset inside `dir`.
fn candidates(dir: &Path, name: &str) -> Vec<PathBuf> {
    ["", ".txt", ".libsvm", ".svm"].iter().map(|ext| dir.join(format!("{name}{ext}"))).collect()
}

/// Loads `name` from `dir`. Registered datasets use the published feature
/// count as dimension; a size mismatch is logged as a warning.
pub fn load_named(name: &str, dir: &Path) -> Result<Dataset> {
    let path = candidates(dir, name)
        .into_iter()
        .find(|p| p.is_file())
        .ok_or_else(|| VroptError::DatasetNotFound { name: name.to_string(), dir: dir.to_path_buf() })?;
    let reg = lookup(name);
    let ds = match reg {
        // files that omit trailing features still get the published width
        Some(r) => read_libsvm_file(&path, Some(r.d)).or_else(|_| read_libsvm_file(&path, None))?,
        None => read_libsvm_file(&path, None)?,
    };
    if let Some(r) = reg {
        let meta = ds.metadata();
        if meta.n != r.n || meta.d != r.d {
            log::warn!("{name}: loaded (n={}, d={}) but the registry lists (n={}, d={})", meta.n, meta.d, r.n, r.d);
        }
    }
    Ok(ds)
}

/// Download hints for the `fetch-instructions` subcommand.
pub fn fetch_instructions() -> String {
    let base = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets";
    let mut out = format!(
        "Datasets are read from ${DATA_DIR_ENV} (default ./data) as plain LIBSVM text.\n\
         Nothing is downloaded automatically. Fetch and decompress, e.g.:\n\n"
    );
    for r in &REGISTRY {
        let section = match r.kind {
            DatasetKind::BinaryLabels => "binary",
            DatasetKind::RegressionTargets => "regression",
        };
        out.push_str(&format!("  {:<10} n={:<6} d={:<4} {base}/{section}/{}\n", r.name, r.n, r.d, r.name));
    }
    out.push_str("\nSave each file as <data dir>/<name> (optionally with a .txt extension).\n");
    out
}
