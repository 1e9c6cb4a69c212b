//! Domain model for reward-function specifications.
//!
//! A [`RewardSpec`] is the machine-readable form of one paper's reward
//! function and episode setup: an ordered list of weighted per-step
//! attributes, terminal rules keyed by terminal event kind, and the episode
//! configuration. All types are immutable after construction;
//! [`validate_spec`] is stateless.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::expr::Expr;

/// Closed vocabulary of driving outcomes an attribute can measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutcomeTag {
    Progress,
    Time,
    Collision,
    Law,
    Fuel,
    Wear,
    PassengerExperience,
    ExternalImpact,
}

impl OutcomeTag {
    pub const ALL: [OutcomeTag; 8] = [
        OutcomeTag::Progress,
        OutcomeTag::Time,
        OutcomeTag::Collision,
        OutcomeTag::Law,
        OutcomeTag::Fuel,
        OutcomeTag::Wear,
        OutcomeTag::PassengerExperience,
        OutcomeTag::ExternalImpact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeTag::Progress => "progress",
            OutcomeTag::Time => "time",
            OutcomeTag::Collision => "collision",
            OutcomeTag::Law => "law",
            OutcomeTag::Fuel => "fuel",
            OutcomeTag::Wear => "wear",
            OutcomeTag::PassengerExperience => "passenger_experience",
            OutcomeTag::ExternalImpact => "external_impact",
        }
    }

    pub fn parse(s: &str) -> Option<OutcomeTag> {
        OutcomeTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for OutcomeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Terminal event kinds an episode can end with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TerminalEvent {
    Collision,
    Goal,
    Timeout,
    LaneDeparture,
    RedLight,
    WrongLane,
    ZeroSpeed,
}

impl TerminalEvent {
    pub const ALL: [TerminalEvent; 7] = [
        TerminalEvent::Collision,
        TerminalEvent::Goal,
        TerminalEvent::Timeout,
        TerminalEvent::LaneDeparture,
        TerminalEvent::RedLight,
        TerminalEvent::WrongLane,
        TerminalEvent::ZeroSpeed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerminalEvent::Collision => "collision",
            TerminalEvent::Goal => "goal",
            TerminalEvent::Timeout => "timeout",
            TerminalEvent::LaneDeparture => "lane_departure",
            TerminalEvent::RedLight => "red_light",
            TerminalEvent::WrongLane => "wrong_lane",
            TerminalEvent::ZeroSpeed => "zero_speed",
        }
    }

    pub fn parse(s: &str) -> Option<TerminalEvent> {
        TerminalEvent::ALL.into_iter().find(|e| e.as_str() == s)
    }
}

impl fmt::Display for TerminalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether an attribute measures an outcome or steers behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Outcome,
    Shaping,
    Ambiguous,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Outcome => "outcome",
            AttributeKind::Shaping => "shaping",
            AttributeKind::Ambiguous => "ambiguous",
        }
    }

    pub fn parse(s: &str) -> Option<AttributeKind> {
        match s {
            "outcome" => Some(AttributeKind::Outcome),
            "shaping" => Some(AttributeKind::Shaping),
            "ambiguous" => Some(AttributeKind::Ambiguous),
            _ => None,
        }
    }
}

/// When an attribute's expression is accumulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Accrual {
    /// Once per reward step, the finest time granularity.
    PerRewardStep,
    /// Once per decision step (a decision step spans one or more reward
    /// steps; event and distance features are summed over the window).
    PerDecisionStep,
    /// Once per unit of event mass of the named kind.
    OnEvent(String),
}

impl fmt::Display for Accrual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accrual::PerRewardStep => f.write_str("per_reward_step"),
            Accrual::PerDecisionStep => f.write_str("per_decision_step"),
            Accrual::OnEvent(kind) => write!(f, "on_event({kind})"),
        }
    }
}

/// One weighted component of a reward function.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDef {
    pub id: String,
    pub weight: f64,
    pub expr: Expr,
    pub kind: AttributeKind,
    pub outcome_tags: BTreeSet<OutcomeTag>,
    pub accrual: Accrual,
}

/// Reward delivered once when the episode ends with the matching event.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalRule {
    pub on: TerminalEvent,
    pub expr: Expr,
}

/// How the author of a reward function arrived at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignProvenance {
    Principled,
    TrialAndError,
    Unstated,
}

impl DesignProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignProvenance::Principled => "principled",
            DesignProvenance::TrialAndError => "trial_and_error",
            DesignProvenance::Unstated => "unstated",
        }
    }

    pub fn parse(s: &str) -> Option<DesignProvenance> {
        match s {
            "principled" => Some(DesignProvenance::Principled),
            "trial_and_error" => Some(DesignProvenance::TrialAndError),
            "unstated" => Some(DesignProvenance::Unstated),
            _ => None,
        }
    }
}

/// Episode time limit as described by the source specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeLimit {
    /// Nothing said about a limit.
    Unstated,
    /// Fixed limit in seconds.
    Seconds(f64),
    /// A limit exists but depends on the route (resolved per scenario).
    RouteDependent,
    /// Explicitly stated that there is no time limit.
    StatedNone,
}

impl TimeLimit {
    /// True when the source specification says anything about the limit.
    pub fn is_described(self) -> bool {
        !matches!(self, TimeLimit::Unstated)
    }

    pub fn seconds(self) -> Option<f64> {
        match self {
            TimeLimit::Seconds(s) => Some(s),
            _ => None,
        }
    }
}

/// Timing, discounting and termination setup for episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub reward_step_s: Option<f64>,
    pub decision_step_s: Option<f64>,
    pub discount: Option<f64>,
    pub episodic: bool,
    pub time_limit: TimeLimit,
    pub termination_criteria: BTreeSet<TerminalEvent>,
}

impl EpisodeConfig {
    /// Decision step defaults to the reward step when not declared.
    pub fn decision_step(&self) -> Option<f64> {
        self.decision_step_s.or(self.reward_step_s)
    }
}

/// A feature the spec's expressions may reference: unit label plus an
/// optional default value used when neither synthesis nor the scenario
/// provides one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDecl {
    pub unit: String,
    pub default: Option<f64>,
}

/// A complete reward-function specification.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    pub id: String,
    pub source: Option<String>,
    pub per_step_attributes: Vec<AttributeDef>,
    pub terminal_rules: BTreeMap<TerminalEvent, Expr>,
    pub episode: EpisodeConfig,
    pub design_provenance: DesignProvenance,
    pub declared_shaping_ids: BTreeSet<String>,
    pub features: BTreeMap<String, FeatureDecl>,
}

impl RewardSpec {
    pub fn attribute(&self, id: &str) -> Option<&AttributeDef> {
        self.per_step_attributes.iter().find(|a| a.id == id)
    }

    /// Terminal rules as (event, expression) pairs, ordered by event kind.
    /// The map representation guarantees at most one rule per kind.
    pub fn terminal_rule_list(&self) -> Vec<TerminalRule> {
        self.terminal_rules
            .iter()
            .map(|(on, expr)| TerminalRule {
                on: *on,
                expr: expr.clone(),
            })
            .collect()
    }

    /// Every feature name referenced by any attribute or terminal expression.
    pub fn referenced_features(&self) -> Vec<String> {
        let mut out = Vec::new();
        for attr in &self.per_step_attributes {
            attr.expr.features(&mut out);
        }
        for expr in self.terminal_rules.values() {
            expr.features(&mut out);
        }
        out
    }
}

/// Severity of a validation finding. Errors break the contracts the rest of
/// the toolkit relies on; warnings do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingCode {
    DuplicateAttributeId,
    UndeclaredFeature,
    NonFiniteWeight,
    MissingOutcomeTags,
    OutcomeDeclaredAsShaping,
    UnknownShapingId,
    NonPositiveRewardStep,
    StepMisalignment,
    DiscountOutOfRange,
    ContinuingWithTermination,
    InvalidClipBounds,
    MissingEventFeature,
}

/// One structural problem found in a spec, with a human-readable locator.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFinding {
    pub severity: Severity,
    pub code: FindingCode,
    pub locator: String,
    pub message: String,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} at {}: {}", self.locator, self.message)
    }
}

fn finding(code: FindingCode, locator: String, message: String) -> ValidationFinding {
    ValidationFinding {
        severity: Severity::Error,
        code,
        locator,
        message,
    }
}

/// Collects `(lo, hi)` pairs of clip nodes whose constant bounds are
/// inverted. Bounds that reference features are left to runtime evaluation.
pub fn collect_invalid_clips(expr: &Expr, out: &mut Vec<(f64, f64)>) {
    match expr {
        Expr::Clip { x, lo, hi } => {
            if let (Some(l), Some(h)) = (lo.const_value(), hi.const_value()) {
                if l > h {
                    out.push((l, h));
                }
            }
            collect_invalid_clips(x, out);
            collect_invalid_clips(lo, out);
            collect_invalid_clips(hi, out);
        }
        Expr::Neg(e) | Expr::Abs(e) => collect_invalid_clips(e, out),
        Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => {
            collect_invalid_clips(a, out);
            collect_invalid_clips(b, out);
        }
        Expr::Cond {
            lhs,
            rhs,
            then,
            otherwise,
            ..
        } => {
            collect_invalid_clips(lhs, out);
            collect_invalid_clips(rhs, out);
            collect_invalid_clips(then, out);
            collect_invalid_clips(otherwise, out);
        }
        Expr::Const(_) | Expr::Feature(_) => {}
    }
}

fn check_clip_bounds(expr: &Expr, locator: &str, out: &mut Vec<ValidationFinding>) {
    let mut pairs = Vec::new();
    collect_invalid_clips(expr, &mut pairs);
    for (l, h) in pairs {
        out.push(finding(
            FindingCode::InvalidClipBounds,
            locator.to_string(),
            format!("clip bounds inverted: lo {l} > hi {h}"),
        ));
    }
}

/// Checks every structural invariant of a spec. Returns an empty list iff
/// the spec is well formed; findings never abort.
pub fn validate_spec(spec: &RewardSpec) -> Vec<ValidationFinding> {
    let mut findings = Vec::new();

    // Attribute identifiers unique within the spec.
    let mut seen = BTreeSet::new();
    for attr in &spec.per_step_attributes {
        if !seen.insert(attr.id.as_str()) {
            findings.push(finding(
                FindingCode::DuplicateAttributeId,
                format!("attribute {}", attr.id),
                format!("duplicate attribute id `{}`", attr.id),
            ));
        }
    }

    // Weights finite.
    for attr in &spec.per_step_attributes {
        if !attr.weight.is_finite() {
            findings.push(finding(
                FindingCode::NonFiniteWeight,
                format!("attribute {}.weight", attr.id),
                format!("weight {} is not finite", attr.weight),
            ));
        }
    }

    // Every referenced feature appears in the declared schema.
    for attr in &spec.per_step_attributes {
        let mut used = Vec::new();
        attr.expr.features(&mut used);
        for name in used {
            if !spec.features.contains_key(&name) {
                findings.push(finding(
                    FindingCode::UndeclaredFeature,
                    format!("attribute {}.expr", attr.id),
                    format!("expression references undeclared feature `{name}`"),
                ));
            }
        }
        if let Accrual::OnEvent(kind) = &attr.accrual {
            let mass_feature = format!("{kind}_events");
            if !spec.features.contains_key(&mass_feature) {
                findings.push(finding(
                    FindingCode::MissingEventFeature,
                    format!("attribute {}.accrual", attr.id),
                    format!("on_event({kind}) requires declared feature `{mass_feature}`"),
                ));
            }
        }
    }
    for (event, expr) in &spec.terminal_rules {
        let mut used = Vec::new();
        expr.features(&mut used);
        for name in used {
            if !spec.features.contains_key(&name) {
                findings.push(finding(
                    FindingCode::UndeclaredFeature,
                    format!("terminal {event}"),
                    format!("expression references undeclared feature `{name}`"),
                ));
            }
        }
    }

    // Kind / tag / declaration coherence.
    for attr in &spec.per_step_attributes {
        match attr.kind {
            AttributeKind::Outcome => {
                if attr.outcome_tags.is_empty() {
                    findings.push(finding(
                        FindingCode::MissingOutcomeTags,
                        format!("attribute {}", attr.id),
                        "outcome attribute carries no outcome tags".to_string(),
                    ));
                }
                if spec.declared_shaping_ids.contains(&attr.id) {
                    findings.push(finding(
                        FindingCode::OutcomeDeclaredAsShaping,
                        format!("attribute {}", attr.id),
                        "outcome attribute listed in declared_shaping".to_string(),
                    ));
                }
            }
            AttributeKind::Shaping | AttributeKind::Ambiguous => {}
        }
    }
    for id in &spec.declared_shaping_ids {
        if spec.attribute(id).is_none() {
            findings.push(finding(
                FindingCode::UnknownShapingId,
                "declared_shaping".to_string(),
                format!("declared_shaping names unknown attribute `{id}`"),
            ));
        }
    }

    // Episode timing.
    if let Some(step) = spec.episode.reward_step_s {
        if step <= 0.0 || step.is_nan() {
            findings.push(finding(
                FindingCode::NonPositiveRewardStep,
                "episode.reward_step_s".to_string(),
                format!("reward step must be > 0, got {step}"),
            ));
        } else if let Some(decision) = spec.episode.decision_step_s {
            let ratio = decision / step;
            let misfit = (decision - ratio.round() * step).abs();
            if decision < step || ratio.round() < 1.0 || misfit > 1e-9 {
                findings.push(finding(
                    FindingCode::StepMisalignment,
                    "episode.decision_step_s".to_string(),
                    format!(
                        "decision step {decision} is not an integer multiple of reward step {step}"
                    ),
                ));
            }
        }
    }
    if let Some(gamma) = spec.episode.discount {
        if !(gamma > 0.0 && gamma <= 1.0) {
            findings.push(finding(
                FindingCode::DiscountOutOfRange,
                "episode.discount".to_string(),
                format!("discount must lie in (0, 1], got {gamma}"),
            ));
        }
    }
    if !spec.episode.episodic && !spec.episode.termination_criteria.is_empty() {
        findings.push(finding(
            FindingCode::ContinuingWithTermination,
            "episode.termination".to_string(),
            "continuing task declares termination criteria".to_string(),
        ));
    }

    // Constant clip bounds must be ordered.
    for attr in &spec.per_step_attributes {
        check_clip_bounds(
            &attr.expr,
            &format!("attribute {}.expr", attr.id),
            &mut findings,
        );
    }
    for (event, expr) in &spec.terminal_rules {
        check_clip_bounds(expr, &format!("terminal {event}"), &mut findings);
    }

    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;

    fn minimal_spec() -> RewardSpec {
        let mut features = BTreeMap::new();
        features.insert(
            "speed_mps".to_string(),
            FeatureDecl {
                unit: "mps".to_string(),
                default: None,
            },
        );
        RewardSpec {
            id: "t".to_string(),
            source: None,
            per_step_attributes: vec![AttributeDef {
                id: "speed".to_string(),
                weight: 1.0,
                expr: Expr::feature("speed_mps"),
                kind: AttributeKind::Outcome,
                outcome_tags: [OutcomeTag::Progress].into_iter().collect(),
                accrual: Accrual::PerRewardStep,
            }],
            terminal_rules: BTreeMap::new(),
            episode: EpisodeConfig {
                reward_step_s: Some(0.1),
                decision_step_s: Some(0.1),
                discount: Some(0.99),
                episodic: true,
                time_limit: TimeLimit::Seconds(10.0),
                termination_criteria: [TerminalEvent::Collision, TerminalEvent::Goal]
                    .into_iter()
                    .collect(),
            },
            design_provenance: DesignProvenance::Principled,
            declared_shaping_ids: BTreeSet::new(),
            features,
        }
    }

    fn codes(spec: &RewardSpec) -> Vec<FindingCode> {
        validate_spec(spec).into_iter().map(|f| f.code).collect()
    }

    #[test]
    fn minimal_spec_is_clean() {
        assert!(validate_spec(&minimal_spec()).is_empty());
    }

    #[test]
    fn duplicate_attribute_id_detected() {
        let mut spec = minimal_spec();
        let dup = spec.per_step_attributes[0].clone();
        spec.per_step_attributes.push(dup);
        assert!(codes(&spec).contains(&FindingCode::DuplicateAttributeId));
    }

    #[test]
    fn undeclared_feature_detected() {
        let mut spec = minimal_spec();
        spec.per_step_attributes[0].expr = Expr::feature("nope");
        assert!(codes(&spec).contains(&FindingCode::UndeclaredFeature));
    }

    #[test]
    fn non_finite_weight_detected() {
        let mut spec = minimal_spec();
        spec.per_step_attributes[0].weight = f64::NAN;
        assert!(codes(&spec).contains(&FindingCode::NonFiniteWeight));
    }

    #[test]
    fn outcome_without_tags_detected() {
        let mut spec = minimal_spec();
        spec.per_step_attributes[0].outcome_tags.clear();
        assert!(codes(&spec).contains(&FindingCode::MissingOutcomeTags));
    }

    #[test]
    fn outcome_in_declared_shaping_detected() {
        let mut spec = minimal_spec();
        spec.declared_shaping_ids.insert("speed".to_string());
        assert!(codes(&spec).contains(&FindingCode::OutcomeDeclaredAsShaping));
    }

    #[test]
    fn unknown_shaping_id_detected() {
        let mut spec = minimal_spec();
        spec.declared_shaping_ids.insert("ghost".to_string());
        assert!(codes(&spec).contains(&FindingCode::UnknownShapingId));
    }

    #[test]
    fn step_misalignment_detected() {
        let mut spec = minimal_spec();
        spec.episode.reward_step_s = Some(0.3);
        spec.episode.decision_step_s = Some(0.4);
        assert!(codes(&spec).contains(&FindingCode::StepMisalignment));
    }

    #[test]
    fn aligned_steps_pass_within_float_noise() {
        let mut spec = minimal_spec();
        spec.episode.reward_step_s = Some(0.1);
        spec.episode.decision_step_s = Some(0.4);
        assert!(validate_spec(&spec).is_empty());
    }

    #[test]
    fn continuing_task_with_termination_detected() {
        let mut spec = minimal_spec();
        spec.episode.episodic = false;
        assert!(codes(&spec).contains(&FindingCode::ContinuingWithTermination));
    }

    #[test]
    fn discount_out_of_range_detected() {
        let mut spec = minimal_spec();
        spec.episode.discount = Some(1.5);
        assert!(codes(&spec).contains(&FindingCode::DiscountOutOfRange));
    }

    #[test]
    fn constant_clip_bound_inversion_detected() {
        let mut spec = minimal_spec();
        spec.per_step_attributes[0].expr = Expr::Clip {
            x: Box::new(Expr::feature("speed_mps")),
            lo: Box::new(Expr::Const(1.0)),
            hi: Box::new(Expr::Const(0.0)),
        };
        assert!(codes(&spec).contains(&FindingCode::InvalidClipBounds));
    }

    #[test]
    fn on_event_requires_mass_feature() {
        let mut spec = minimal_spec();
        spec.per_step_attributes[0].expr = Expr::Const(1.0);
        spec.per_step_attributes[0].accrual = Accrual::OnEvent("overtake".to_string());
        assert!(codes(&spec).contains(&FindingCode::MissingEventFeature));
    }

    #[test]
    fn non_positive_reward_step_detected() {
        let mut spec = minimal_spec();
        spec.episode.reward_step_s = Some(0.0);
        spec.episode.decision_step_s = None;
        assert!(codes(&spec).contains(&FindingCode::NonPositiveRewardStep));
    }

    #[test]
    fn referenced_features_collects_terminals_too() {
        let mut spec = minimal_spec();
        spec.terminal_rules.insert(
            TerminalEvent::Collision,
            Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Const(-10.0)),
                Box::new(Expr::feature("speed_mps")),
            ),
        );
        let refs = spec.referenced_features();
        assert_eq!(refs, vec!["speed_mps".to_string()]);
        let rules = spec.terminal_rule_list();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].on, TerminalEvent::Collision);
    }

    #[test]
    fn model_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<RewardSpec>();
        assert_send_sync::<AttributeDef>();
        assert_send_sync::<EpisodeConfig>();
        assert_send_sync::<ValidationFinding>();
    }
}
