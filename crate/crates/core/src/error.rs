use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Constraint labels used when a subproblem cannot be satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    /// eMBB minimum rate.
    EmbbRateFloor,
    /// Reliability floor from the arrival quantile.
    Reliability,
    /// End-to-end delay expressed as a rate floor.
    Delay,
    /// Beampattern gain toward a scheduled target.
    Beampattern,
    /// Shared transmit power budget.
    PowerBudget,
}

impl ConstraintKind {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::EmbbRateFloor => "C1",
            ConstraintKind::Reliability => "C2",
            ConstraintKind::Delay => "C3",
            ConstraintKind::Beampattern => "C5",
            ConstraintKind::PowerBudget => "C10",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A subproblem has no feasible point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Infeasible {
    #[error("eMBB rate floor unreachable for users {users:?} even with every resource block")]
    EmbbFloors { users: Vec<usize> },
    #[error("URLLC constraints {violated:?} cannot be met for users {users:?}")]
    Urllc {
        violated: Vec<ConstraintKind>,
        users: Vec<usize>,
    },
    #[error("power budget exceeded: {required:.6e} W required, {available:.6e} W available")]
    Budget { required: f64, available: f64 },
}

impl Infeasible {
    pub fn constraints(&self) -> Vec<ConstraintKind> {
        match self {
            Infeasible::EmbbFloors { .. } => vec![ConstraintKind::EmbbRateFloor],
            Infeasible::Urllc { violated, .. } => violated.clone(),
            Infeasible::Budget { .. } => vec![ConstraintKind::PowerBudget],
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("instance too large for exhaustive search: {0} binary variables")]
    TooLarge(usize),
    #[error(transparent)]
    Infeasible(#[from] Infeasible),
    #[error("nothing to export")]
    NothingToExport,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
