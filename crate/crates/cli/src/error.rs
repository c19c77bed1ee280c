// Copyright 2026 The butterfly Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.


use std::path::Path;

use thiserror::Error;

/// Exit status for schema and validation failures.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures inside the toolkit.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}:{column}: {message}")]
    Schema {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// One or more validation errors, already formatted with their lines.
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(#[from] butterfly_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot compare: {0}")]
    Incompatible(String),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Invalid(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
