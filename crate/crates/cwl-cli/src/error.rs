use std::process::ExitCode;

use thiserror::Error;

use cwl_core::coset::CosetError;
use cwl_core::group::GroupError;
use cwl_core::growth::GrowthError;
use cwl_core::lattice::LatticeError;
use cwl_core::norms::NormError;
use cwl_core::stallings::StallingsError;
use cwl_core::walk::WalkError;

/// Command-level failure. The variants exist to carry the exit code: 2 for
/// a check that ran and failed, 3 for a blown element budget, 1 for
/// everything else.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::ChecksFailed(_) => ExitCode::from(2),
            CliError::Budget(_) => ExitCode::from(3),
            _ => ExitCode::from(1),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            e @ GroupError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<CosetError> for CliError {
    fn from(e: CosetError) -> Self {
        match e {
            CosetError::Group(g) => g.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::Group(g) => g.into(),
            WalkError::Coset(c) => c.into(),
            e @ WalkError::SupportBudget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<NormError> for CliError {
    fn from(e: NormError) -> Self {
        match e {
            NormError::Group(g) => g.into(),
            NormError::Coset(c) => c.into(),
            NormError::Walk(w) => w.into(),
            e @ NormError::SupportBudget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Group(g) => g.into(),
            GrowthError::Coset(c) => c.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::Group(g) => g.into(),
            LatticeError::Coset(c) => c.into(),
            LatticeError::Growth(g) => g.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<StallingsError> for CliError {
    fn from(e: StallingsError) -> Self {
        CliError::Run(e.to_string())
    }
}
