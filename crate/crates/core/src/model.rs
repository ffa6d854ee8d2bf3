//! Choice of loop semantics.

use std::fmt;
use std::str::FromStr;

use crate::channel::QChannel;
use crate::dctc::{dctc_apply, ElementaryMorphism};
use crate::error::{CtcError, Result};
use crate::pctc::pctc_apply;
use crate::state::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Maximal-entropy fixed point.
    Dctc,
    /// Post-selected teleportation.
    Pctc,
}

impl Model {
    pub const ALL: [Model; 2] = [Model::Dctc, Model::Pctc];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dctc => "dctc",
            Self::Pctc => "pctc",
        }
    }

    /// Closes the trailing `cv_dims` loop of `phi` on input `ρ` (trailing
    /// subsystems of `ρ` beyond `phi`'s input are an ancilla). `None` means
    /// the post-selected process cannot happen on this input.
    pub fn close_loop(self, phi: &QChannel, cv_dims: &[usize], rho: &DensityMatrix) -> Result<Option<DensityMatrix>> {
        match self {
            Self::Dctc => {
                let e = ElementaryMorphism::new(phi.clone(), cv_dims.to_vec())?;
                Ok(Some(dctc_apply(&e, rho)?))
            }
            Self::Pctc => Ok(pctc_apply(phi, cv_dims, rho)?.into_state()),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = CtcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dctc" => Ok(Self::Dctc),
            "pctc" => Ok(Self::Pctc),
            other => Err(CtcError::InvalidDiagram(format!("unknown model {other:?}; expected dctc or pctc"))),
        }
    }
}
