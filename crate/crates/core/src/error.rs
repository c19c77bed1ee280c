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

use thiserror::Error;

/// Errors produced by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: {left} sites vs {right} sites")]
    SizeMismatch { left: usize, right: usize },

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what}: {n} sites exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("Krylov propagation did not converge: residual {residual:.3e} at t = {time_reached} (target {target})")]
    KrylovNotConverged {
        residual: f64,
        time_reached: f64,
        target: f64,
    },

    #[error("gate probability {max_probability:.4} on pair ({i}, {j}) exceeds 1; use a smaller delta_t")]
    GateProbability {
        max_probability: f64,
        i: usize,
        j: usize,
    },

    #[error("sites {0} and {1} are closer than the allowed minimum")]
    CoincidentSites(usize, usize),

    #[error("position sampling failed after {0} attempts")]
    RejectionFailure(usize),

    #[error("state has zero norm after projection")]
    ZeroNorm,

    #[error("expectation value has imaginary part {0:.3e}; operator is not Hermitian")]
    NonHermitian(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_sites(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::SizeMismatch { left, right })
    }
}
