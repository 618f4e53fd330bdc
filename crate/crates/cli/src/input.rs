//! Shared dataset loading for subcommands that accept a CSV file, the
//! built-in fixture, or a simulated dataset.

use std::path::{Path, PathBuf};

use sirkit::moments::{read_dataset_csv, Dataset, ResponseColumn};

use crate::errors::{CliError, CliResult};

/// A header name, unless the string is a plain non-negative integer, in
/// which case it is a 0-based column index.
pub fn parse_response(raw: &str) -> ResponseColumn {
    match raw.parse::<usize>() {
        Ok(index) => ResponseColumn::Index(index),
        Err(_) => ResponseColumn::Name(raw.to_string()),
    }
}

pub fn load_csv(path: &Path, response: Option<&str>) -> CliResult<Dataset> {
    let response = response
        .ok_or_else(|| CliError::Input("--response is required together with --input".into()))?;
    Ok(read_dataset_csv(path, &parse_response(response))?)
}

/// Resolved data source plus the file to digest in the manifest, if any.
pub struct LoadedData {
    pub dataset: Dataset,
    pub digest_path: Option<PathBuf>,
    pub default_slices: usize,
}

pub fn from_csv_or_builtin(
    input: Option<&PathBuf>,
    response: Option<&str>,
    builtin_2d: bool,
) -> CliResult<LoadedData> {
    match (input, builtin_2d) {
        (Some(path), false) => Ok(LoadedData {
            dataset: load_csv(path, response)?,
            digest_path: Some(path.clone()),
            default_slices: 5,
        }),
        (None, true) => Ok(LoadedData {
            dataset: sirkit::sim::builtin_2d_dataset(),
            digest_path: None,
            default_slices: 2,
        }),
        (None, false) => Err(CliError::Input(
            "choose a data source: --input <csv> or --builtin-2d".into(),
        )),
        (Some(_), true) => unreachable!("clap conflicts_with prevents this"),
    }
}
