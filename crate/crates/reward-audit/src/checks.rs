//! The eight sanity checks, as executable operations over specs, returns
//! and trajectories.
//!
//! Checks 1-4 (shaping, preference ordering, risk tolerance, loopholes) can
//! fail outright; checks 5-8 (missing attributes, redundancy, trial-and-error
//! design, incomplete specification) emit at most a warning. That split is a
//! structural invariant of [`CheckResult`].

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::evaluator::{eval_return, DiscountMode, EvaluatorError};
use crate::model::{AttributeKind, DesignProvenance, OutcomeTag, RewardSpec};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckId {
    UnsafeShaping,
    PreferenceOrdering,
    RiskTolerance,
    LearnableLoophole,
    MissingAttributes,
    RedundantAttributes,
    TrialAndErrorDesign,
    IncompleteSpecification,
}

impl CheckId {
    pub const ALL: [CheckId; 8] = [
        CheckId::UnsafeShaping,
        CheckId::PreferenceOrdering,
        CheckId::RiskTolerance,
        CheckId::LearnableLoophole,
        CheckId::MissingAttributes,
        CheckId::RedundantAttributes,
        CheckId::TrialAndErrorDesign,
        CheckId::IncompleteSpecification,
    ];

    pub fn number(self) -> u8 {
        match self {
            CheckId::UnsafeShaping => 1,
            CheckId::PreferenceOrdering => 2,
            CheckId::RiskTolerance => 3,
            CheckId::LearnableLoophole => 4,
            CheckId::MissingAttributes => 5,
            CheckId::RedundantAttributes => 6,
            CheckId::TrialAndErrorDesign => 7,
            CheckId::IncompleteSpecification => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CheckId::UnsafeShaping => "unsafe reward shaping",
            CheckId::PreferenceOrdering => "preference ordering",
            CheckId::RiskTolerance => "risk tolerance",
            CheckId::LearnableLoophole => "learnable loophole",
            CheckId::MissingAttributes => "missing attributes",
            CheckId::RedundantAttributes => "redundant attributes",
            CheckId::TrialAndErrorDesign => "trial-and-error design",
            CheckId::IncompleteSpecification => "incomplete specification",
        }
    }

    /// Only the first four checks may report a hard failure.
    pub fn can_fail(self) -> bool {
        self.number() <= 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Warning,
    NotEvaluable,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Warning => "warning",
            CheckStatus::NotEvaluable => "not_evaluable",
        }
    }
}

/// Structured payload describing what a check saw.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckDetails {
    None,
    Preference {
        g_a: f64,
        g_b: f64,
        margin: f64,
    },
    Risk {
        km_per_collision: f64,
        baseline_km: f64,
        baseline_label: String,
        ratio: f64,
    },
    Shaping {
        undeclared: Vec<String>,
        ambiguous: Vec<String>,
    },
    Loophole {
        g_undesirable: f64,
        g_clean: f64,
    },
    Coverage {
        missing: Vec<OutcomeTag>,
    },
    Redundancy {
        pairs: Vec<(String, String)>,
    },
    TrialAndError {
        provenance: DesignProvenance,
        declared_shaping_empty: bool,
    },
    Completeness {
        missing: Vec<String>,
    },
}

/// Outcome of one sanity check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: CheckId,
    pub status: CheckStatus,
    pub details: CheckDetails,
    pub message: String,
}

fn result(
    check: CheckId,
    status: CheckStatus,
    details: CheckDetails,
    message: String,
) -> CheckResult {
    debug_assert!(
        status != CheckStatus::Fail || check.can_fail(),
        "checks 5-8 emit at most a warning"
    );
    CheckResult {
        check,
        status,
        details,
        message,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChecksError {
    #[error("ordering violated: {0}")]
    OrderingViolated(String),
    #[error("indifference point is 1: certain success, km per collision diverges")]
    PAtUnity,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing potential for state index {0}")]
    MissingPotential(usize),
}

/// A human-derived reference point for acceptable risk.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskBaseline {
    pub label: String,
    pub km_per_collision: f64,
    pub provenance: String,
}

pub const DRUNK_TEEN_LABEL: &str = "drunk_teen_16_17";
pub const SOBER_TEEN_LABEL: &str = "sober_teen_16_17";

/// Built-in baselines, all overridable by config. The drunk-teen figure is
/// derived (the most risk-averse corpus function sits at 1.02 km/collision
/// and tolerates roughly 2000x that group's crash rate); the sober-teen
/// figure applies the 37x blood-alcohol risk multiplier from Peck et al.
/// (2007) to it. No 50-60-year-old baseline ships: the underlying Tefft
/// (2017) rate is not encoded here and must come from config.
pub fn default_baselines() -> Vec<RiskBaseline> {
    let drunk = 1.02 * 2000.0;
    vec![
        RiskBaseline {
            label: DRUNK_TEEN_LABEL.to_string(),
            km_per_collision: drunk,
            provenance: "derived: 1.02 km/collision x 2000 risk tolerance ratio".to_string(),
        },
        RiskBaseline {
            label: SOBER_TEEN_LABEL.to_string(),
            km_per_collision: drunk * 37.0,
            provenance: "derived: drunk-teen baseline x 37 (Peck et al. 2007 BAC >= 0.08 risk)"
                .to_string(),
        },
    ]
}

// ---------------------------------------------------------------------------
// Check 2: preference ordering
// ---------------------------------------------------------------------------

/// Tests the expected strict preference `A` less-preferred-than `B`, i.e.
/// `G(A) < G(B)`. Ties fail: strict preference is required.
pub fn preference_check(g_a: f64, g_b: f64) -> CheckResult {
    let margin = g_b - g_a;
    let status = if g_a < g_b {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let message = match status {
        CheckStatus::Pass => format!("G(A)={g_a} < G(B)={g_b} (margin {margin})"),
        _ => format!("G(A)={g_a} >= G(B)={g_b}: the function prefers A (margin {margin})"),
    };
    result(
        CheckId::PreferenceOrdering,
        status,
        CheckDetails::Preference { g_a, g_b, margin },
        message,
    )
}

// ---------------------------------------------------------------------------
// Check 3: indifference points and km per collision
// ---------------------------------------------------------------------------

/// Solves `G(B) = p G(C) + (1-p) G(A)` for `p`, requiring the strict
/// ordering `G(A) < G(B) < G(C)`. The result lies in (0, 1).
pub fn indifference_point(g_a: f64, g_b: f64, g_c: f64) -> Result<f64, ChecksError> {
    // NaN inputs fall through to the ordering errors too
    if g_a >= g_b || g_a.is_nan() || g_b.is_nan() {
        return Err(ChecksError::OrderingViolated(format!(
            "expected G(A) < G(B), got {g_a} vs {g_b}"
        )));
    }
    if g_b >= g_c || g_c.is_nan() {
        return Err(ChecksError::OrderingViolated(format!(
            "expected G(B) < G(C), got {g_b} vs {g_c}"
        )));
    }
    Ok((g_b - g_a) / (g_c - g_a))
}

/// The same ratio with no ordering precondition; `None` when A and C have
/// equal returns. Values outside (0, 1) mean the certain middle outcome is
/// not actually between the lottery arms (plot data for wrongly-ordered
/// reward functions).
pub fn indifference_ratio_raw(g_a: f64, g_b: f64, g_c: f64) -> Option<f64> {
    if g_c == g_a {
        None
    } else {
        Some((g_b - g_a) / (g_c - g_a))
    }
}

/// Converts an indifference point to kilometers driven per collision:
/// `(p/(1-p) + 0.5) * path_length_km`. `p/(1-p)` is the number of full
/// successful paths per half-length crash drive.
pub fn km_per_collision(p: f64, path_length_km: f64) -> Result<f64, ChecksError> {
    if path_length_km <= 0.0 || path_length_km.is_nan() {
        return Err(ChecksError::InvalidArgument(format!(
            "path length must be > 0, got {path_length_km}"
        )));
    }
    if p < 0.0 {
        return Err(ChecksError::InvalidArgument(format!(
            "p must lie in [0, 1), got {p}"
        )));
    }
    if p >= 1.0 {
        return Err(ChecksError::PAtUnity);
    }
    Ok((p / (1.0 - p) + 0.5) * path_length_km)
}

/// The same conversion with no range precondition; `None` only at `p = 1`.
pub fn km_per_collision_raw(p: f64, path_length_km: f64) -> Option<f64> {
    if p == 1.0 {
        None
    } else {
        Some((p / (1.0 - p) + 0.5) * path_length_km)
    }
}

/// Compares a km-per-collision figure against a baseline; the boundary is
/// inclusive. Non-finite km (the `p = 1` sentinel) is not evaluable.
pub fn risk_tolerance_check(km: f64, baseline: &RiskBaseline) -> CheckResult {
    if !km.is_finite() {
        return result(
            CheckId::RiskTolerance,
            CheckStatus::NotEvaluable,
            CheckDetails::None,
            "km per collision diverges (indifference point at 1)".to_string(),
        );
    }
    let ratio = km / baseline.km_per_collision;
    let status = if km >= baseline.km_per_collision {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let message = format!(
        "{:.2} km/collision vs baseline {} at {:.2} (ratio {:.6})",
        km, baseline.label, baseline.km_per_collision, ratio
    );
    result(
        CheckId::RiskTolerance,
        status,
        CheckDetails::Risk {
            km_per_collision: km,
            baseline_km: baseline.km_per_collision,
            baseline_label: baseline.label.clone(),
            ratio,
        },
        message,
    )
}

// ---------------------------------------------------------------------------
// Check 1: shaping identification
// ---------------------------------------------------------------------------

/// Flags shaping attributes that the spec author has not declared as
/// shaping (fail), and unclassifiable attributes (warning).
pub fn shaping_lint(spec: &RewardSpec) -> CheckResult {
    let undeclared: Vec<String> = spec
        .per_step_attributes
        .iter()
        .filter(|a| a.kind == AttributeKind::Shaping && !spec.declared_shaping_ids.contains(&a.id))
        .map(|a| a.id.clone())
        .collect();
    let ambiguous: Vec<String> = spec
        .per_step_attributes
        .iter()
        .filter(|a| a.kind == AttributeKind::Ambiguous)
        .map(|a| a.id.clone())
        .collect();

    let (status, message) = if !undeclared.is_empty() {
        (
            CheckStatus::Fail,
            format!("undeclared shaping attributes: {}", undeclared.join(", ")),
        )
    } else if !ambiguous.is_empty() {
        (
            CheckStatus::Warning,
            format!(
                "attributes defensible either way, review them: {}",
                ambiguous.join(", ")
            ),
        )
    } else {
        (
            CheckStatus::Pass,
            "no undeclared shaping attributes".to_string(),
        )
    };
    result(
        CheckId::UnsafeShaping,
        status,
        CheckDetails::Shaping {
            undeclared,
            ambiguous,
        },
        message,
    )
}

/// Verifies that sampled shaping rewards have the potential-based form
/// `F(s, s') = gamma * phi(s') - phi(s)` within `tol`, the structural shape
/// that guarantees policy invariance.
pub fn potential_shaping_verify(
    samples: &[(usize, usize, f64)],
    phi: &BTreeMap<usize, f64>,
    gamma: f64,
    tol: f64,
) -> Result<bool, ChecksError> {
    for (s, s_next, shaping_reward) in samples {
        let phi_s = phi.get(s).ok_or(ChecksError::MissingPotential(*s))?;
        let phi_next = phi
            .get(s_next)
            .ok_or(ChecksError::MissingPotential(*s_next))?;
        if (shaping_reward - (gamma * phi_next - phi_s)).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Check 4: learnable loopholes
// ---------------------------------------------------------------------------

/// Compares the return of a trajectory containing an undesirable behavior
/// against the same trajectory minimally edited to remove it. A strictly
/// higher return for the undesirable one is a loophole. Ties pass.
pub fn loophole_check(
    spec: &RewardSpec,
    traj_undesirable: &Trajectory,
    traj_clean: &Trajectory,
) -> Result<CheckResult, EvaluatorError> {
    let g_undesirable = eval_return(spec, traj_undesirable, DiscountMode::Undiscounted)?.total;
    let g_clean = eval_return(spec, traj_clean, DiscountMode::Undiscounted)?.total;
    let status = if g_undesirable > g_clean {
        CheckStatus::Fail
    } else {
        CheckStatus::Pass
    };
    let message = match status {
        CheckStatus::Fail => {
            format!("undesirable behavior earns more return ({g_undesirable} > {g_clean})")
        }
        _ => format!("no gain from the undesirable behavior ({g_undesirable} <= {g_clean})"),
    };
    Ok(result(
        CheckId::LearnableLoophole,
        status,
        CheckDetails::Loophole {
            g_undesirable,
            g_clean,
        },
        message,
    ))
}

// ---------------------------------------------------------------------------
// Check 5: missing attributes
// ---------------------------------------------------------------------------

/// Warns about required outcome tags not covered by any outcome attribute.
/// Omitting an outcome expresses indifference to it.
pub fn attribute_coverage_lint(spec: &RewardSpec, required: &BTreeSet<OutcomeTag>) -> CheckResult {
    let covered: BTreeSet<OutcomeTag> = spec
        .per_step_attributes
        .iter()
        .filter(|a| a.kind == AttributeKind::Outcome)
        .flat_map(|a| a.outcome_tags.iter().copied())
        .collect();
    let missing: Vec<OutcomeTag> = required.difference(&covered).copied().collect();
    let (status, message) = if missing.is_empty() {
        (
            CheckStatus::Pass,
            "all required outcomes are measured".to_string(),
        )
    } else {
        let names: Vec<&str> = missing.iter().map(|t| t.as_str()).collect();
        (
            CheckStatus::Warning,
            format!(
                "outcomes not measured by any attribute: {}",
                names.join(", ")
            ),
        )
    };
    result(
        CheckId::MissingAttributes,
        status,
        CheckDetails::Coverage { missing },
        message,
    )
}

// ---------------------------------------------------------------------------
// Check 6: redundant attributes
// ---------------------------------------------------------------------------

/// Warns about attribute pairs whose outcome tags intersect: both reward or
/// penalize (part of) the same outcome.
pub fn redundancy_lint(spec: &RewardSpec) -> CheckResult {
    let mut pairs = Vec::new();
    let attrs = &spec.per_step_attributes;
    for i in 0..attrs.len() {
        for j in (i + 1)..attrs.len() {
            if attrs[i]
                .outcome_tags
                .intersection(&attrs[j].outcome_tags)
                .next()
                .is_some()
            {
                pairs.push((attrs[i].id.clone(), attrs[j].id.clone()));
            }
        }
    }
    let (status, message) = if pairs.is_empty() {
        (
            CheckStatus::Pass,
            "no overlapping outcome measurements".to_string(),
        )
    } else {
        let listed: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}+{b}")).collect();
        (
            CheckStatus::Warning,
            format!(
                "attribute pairs measuring the same outcome: {}",
                listed.join(", ")
            ),
        )
    };
    result(
        CheckId::RedundantAttributes,
        status,
        CheckDetails::Redundancy { pairs },
        message,
    )
}

// ---------------------------------------------------------------------------
// Check 7: trial-and-error reward design
// ---------------------------------------------------------------------------

/// Warns when the reward function was tuned against agent behavior without
/// a separately declared shaping reward, or when the design process is not
/// described at all.
pub fn trial_and_error_lint(spec: &RewardSpec) -> CheckResult {
    let declared_shaping_empty = spec.declared_shaping_ids.is_empty();
    let (status, message) = match spec.design_provenance {
        DesignProvenance::TrialAndError if declared_shaping_empty => (
            CheckStatus::Warning,
            "reward tuned from observations of learning with no separately declared shaping reward"
                .to_string(),
        ),
        DesignProvenance::TrialAndError => (
            CheckStatus::Pass,
            "trial-and-error tuning confined to declared shaping attributes".to_string(),
        ),
        DesignProvenance::Unstated => (
            CheckStatus::Warning,
            "design process not described; trial-and-error design is the common default"
                .to_string(),
        ),
        DesignProvenance::Principled => (CheckStatus::Pass, "design process described".to_string()),
    };
    result(
        CheckId::TrialAndErrorDesign,
        status,
        CheckDetails::TrialAndError {
            provenance: spec.design_provenance,
            declared_shaping_empty,
        },
        message,
    )
}

// ---------------------------------------------------------------------------
// Check 8: incomplete problem specification
// ---------------------------------------------------------------------------

/// Warns about absent elements of the problem specification: discount,
/// reward step, termination criteria, time limit (for episodic tasks) and
/// design provenance. Also warns when the design provenance is
/// trial-and-error with no declared shaping attributes.
pub fn completeness_lint(spec: &RewardSpec) -> CheckResult {
    let mut missing = Vec::new();
    if spec.episode.discount.is_none() {
        missing.push("discount".to_string());
    }
    if spec.episode.reward_step_s.is_none() {
        missing.push("reward_step_s".to_string());
    }
    if spec.episode.episodic && spec.episode.termination_criteria.is_empty() {
        missing.push("termination_criteria".to_string());
    }
    if spec.episode.episodic && !spec.episode.time_limit.is_described() {
        missing.push("time_limit_s".to_string());
    }
    if spec.design_provenance == DesignProvenance::Unstated {
        missing.push("design_provenance".to_string());
    }
    if spec.design_provenance == DesignProvenance::TrialAndError
        && spec.declared_shaping_ids.is_empty()
    {
        missing.push("trial_and_error_without_declared_shaping".to_string());
    }
    let (status, message) = if missing.is_empty() {
        (
            CheckStatus::Pass,
            "problem specification fully described".to_string(),
        )
    } else {
        (
            CheckStatus::Warning,
            format!("specification gaps: {}", missing.join(", ")),
        )
    };
    result(
        CheckId::IncompleteSpecification,
        status,
        CheckDetails::Completeness { missing },
        message,
    )
}
