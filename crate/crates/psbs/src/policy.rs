//! Policy names and construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::baseline::{Dps, Fifo, LateService, Las, Ps, Srpte};
use crate::engine::Scheduler;
use crate::fsp::PriScheduler;
use crate::psbs::Psbs;

/// Every scheduling policy the crate implements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Policy {
    Fifo,
    Ps,
    Dps,
    Las,
    /// SRPTE run on exact sizes.
    Srpt,
    Srpte,
    SrptePs,
    SrpteLas,
    /// FSPE run on exact sizes.
    Fsp,
    Fspe,
    FspePs,
    FspeLas,
    Psbs,
    /// Serial service in the completion order of the wrapped policy, which
    /// is emulated on exact sizes.
    Pri(Box<Policy>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown scheduler `{0}`")]
pub struct UnknownPolicy(pub String);

impl Policy {
    /// All non-wrapped policies.
    pub const ALL: [Policy; 13] = [
        Policy::Fifo,
        Policy::Ps,
        Policy::Dps,
        Policy::Las,
        Policy::Srpt,
        Policy::Srpte,
        Policy::SrptePs,
        Policy::SrpteLas,
        Policy::Fsp,
        Policy::Fspe,
        Policy::FspePs,
        Policy::FspeLas,
        Policy::Psbs,
    ];

    pub fn build(&self) -> Box<dyn Scheduler> {
        match self {
            Policy::Fifo => Box::new(Fifo::default()),
            Policy::Ps => Box::new(Ps::default()),
            Policy::Dps => Box::new(Dps::default()),
            Policy::Las => Box::new(Las::default()),
            Policy::Srpt | Policy::Srpte => Box::new(Srpte::new(LateService::Exclusive)),
            Policy::SrptePs => Box::new(Srpte::new(LateService::Ps)),
            Policy::SrpteLas => Box::new(Srpte::new(LateService::Las)),
            Policy::Fsp | Policy::Fspe => Box::new(PriScheduler::fspe(LateService::Exclusive)),
            Policy::FspePs => Box::new(PriScheduler::fspe(LateService::Ps)),
            Policy::FspeLas => Box::new(PriScheduler::fspe(LateService::Las)),
            Policy::Psbs => Box::new(Psbs::new()),
            Policy::Pri(reference) => Box::new(PriScheduler::pri(reference.build())),
        }
    }

    /// Whether the policy must be fed exact sizes in place of estimates.
    pub fn exact_sizes(&self) -> bool {
        matches!(self, Policy::Srpt | Policy::Fsp | Policy::Pri(_))
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Policy::Fifo => "fifo",
            Policy::Ps => "ps",
            Policy::Dps => "dps",
            Policy::Las => "las",
            Policy::Srpt => "srpt",
            Policy::Srpte => "srpte",
            Policy::SrptePs => "srpte+ps",
            Policy::SrpteLas => "srpte+las",
            Policy::Fsp => "fsp",
            Policy::Fspe => "fspe",
            Policy::FspePs => "fspe+ps",
            Policy::FspeLas => "fspe+las",
            Policy::Psbs => "psbs",
            Policy::Pri(r) => return write!(f, "pri:{r}"),
        };
        f.write_str(s)
    }
}

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = s.trim().to_ascii_lowercase();
        if let Some(reference) = name.strip_prefix("pri:") {
            return Ok(Policy::Pri(Box::new(reference.parse()?)));
        }
        Policy::ALL
            .iter()
            .find(|p| p.to_string() == name)
            .cloned()
            .ok_or(UnknownPolicy(s.to_string()))
    }
}

impl Serialize for Policy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Policy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
