//! Size-based scheduling on a single preemptive server.
//!
//! The crate bundles a continuous-time simulator ([`engine`]), the classic
//! size-oblivious and SRPT-family policies ([`baseline`]), the FSP family
//! built on a virtual reference system together with PSBS ([`fsp`],
//! [`psbs`]), synthetic and trace-driven workloads ([`workload`]), evaluation
//! metrics ([`metrics`]) and an experiment runner ([`experiment`]).
//!
//! ```
//! use psbs::engine::{run_simulation, Job};
//! use psbs::policy::Policy;
//!
//! let jobs = vec![Job::new(0, 0.0, 10.0), Job::new(1, 3.0, 2.0)];
//! let mut srpt = Policy::Srpt.build();
//! let records = run_simulation(&jobs, srpt.as_mut()).unwrap();
//! assert_eq!(records[1].completion, 5.0);
//! assert_eq!(records[0].completion, 12.0);
//! ```

pub mod baseline;
pub mod engine;
pub mod experiment;
pub mod fsp;
pub mod las;
pub mod metrics;
pub mod policy;
pub mod psbs;
pub mod workload;

pub use engine::{run_simulation, Allocation, CompletionRecord, Job, JobId, JobView, Scheduler, SimError};
pub use policy::Policy;
pub use psbs::{Psbs, PsbsState};
