//! Convex feasibility over the probability simplex.

mod orbit;
mod simplex;

pub use orbit::{orbit_search, verify_orbit_witness, OrbitOptions, OrbitResult};
pub use simplex::{hull_membership, residual_of, simplex_solve, HullMembership};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    CertifiedYes,
    CertifiedNo,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::CertifiedYes => "certified-yes",
            Status::CertifiedNo => "certified-no",
            Status::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexFeasibility {
    pub status: Status,
    pub p: Option<Vec<f64>>,
    pub residual: f64,
}

impl SimplexFeasibility {
    pub(crate) fn no(residual: f64) -> Self {
        Self {
            status: Status::CertifiedNo,
            p: None,
            residual,
        }
    }

    pub fn is_yes(&self) -> bool {
        self.status == Status::CertifiedYes
    }
}
