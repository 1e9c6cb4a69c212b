//! Audit toolkit for reward functions expressed as declarative specifications.
//!
//! The crate models a reward function as a list of weighted per-step
//! attributes plus terminal rules (`model`), parses and renders a small
//! line-oriented text format for those specifications (`lang`), synthesizes
//! abstract constant-speed trajectories from scenario parameters
//! (`trajectory`), computes undiscounted returns over them (`evaluator`),
//! and runs a catalog of eight sanity checks (`checks`): shaping
//! identification, preference ordering, indifference-point risk tolerance,
//! loophole comparison, and four structural lints.
//!
//! A built-in corpus (`corpus`) encodes the reward functions of ten
//! published RL-for-autonomous-driving papers together with reference
//! return values, so the whole audit is reproducible end to end via
//! `corpus::run` or the `reward-audit` binary.

pub mod checks;
pub mod cli;
pub mod corpus;
pub mod evaluator;
pub mod expr;
pub mod lang;
pub mod model;
pub mod report;
pub mod trajectory;

pub use checks::{CheckId, CheckResult, CheckStatus, RiskBaseline};
pub use evaluator::{DiscountMode, ReturnBreakdown};
pub use expr::Expr;
pub use model::{AttributeDef, EpisodeConfig, OutcomeTag, RewardSpec, TerminalEvent, TerminalRule};
pub use report::AuditReport;
pub use trajectory::{ScenarioSpec, Trajectory, TrajectoryKind};
