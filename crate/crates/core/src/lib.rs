//! Quality-diversity optimisation on sparse-reward tasks.
//!
//! [`serene`] alternates Novelty Search with local reward emitters;
//! [`baselines`] holds NS, MAP-Elites, NSGA-II and random search. All of
//! them evaluate neural policies ([`policy`]) in the deterministic 2-D
//! environments of [`env`] and report through the shared metric pipeline
//! in [`metrics`]. [`harness`] runs seeded experiments and writes results.

pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod novelty;
pub mod policy;
pub mod serene;

pub use env::{EnvKind, EnvSpec, EpisodeResult, Point, Rect, RewardArea, Task};
pub use error::{Error, Result};
pub use harness::{run_algorithm, run_experiment, summarize, Algo, Profile, RunConfig};
pub use metrics::{MetricsRow, Phase};
pub use novelty::{coverage, novelty, EvaluatedPolicy, NoveltyArchive};
pub use policy::{MlpSpec, ParameterVector};
pub use serene::{RunOutput, Serene, SereneConfig};
