//! Return computation: G of a trajectory under a reward spec.
//!
//! Totals are undiscounted by default. Per-step contributions accumulate
//! with compensated (Kahan) summation; comparisons against reference values
//! belong to the caller and always use explicit tolerances.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{eval_expr, EvalError, FeatureEnv};
use crate::model::{Accrual, RewardSpec};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscountMode {
    Undiscounted,
    Discounted(f64),
}

impl DiscountMode {
    /// Discounted mode using the spec's own factor, when it has one.
    pub fn from_spec(spec: &RewardSpec) -> Option<DiscountMode> {
        spec.episode.discount.map(DiscountMode::Discounted)
    }
}

/// Total return plus per-attribute contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnBreakdown {
    pub total: f64,
    pub per_attribute: BTreeMap<String, f64>,
    pub terminal_contribution: f64,
    pub step_count: usize,
    pub discount_mode: DiscountMode,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluatorError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("missing potential for state index {0}")]
    MissingPotential(usize),
}

/// Compensated accumulator.
#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Reward steps per decision step (>= 1).
fn decision_window(spec: &RewardSpec) -> usize {
    match (spec.episode.reward_step_s, spec.episode.decision_step()) {
        (Some(r), Some(d)) if r > 0.0 => (d / r).round().max(1.0) as usize,
        _ => 1,
    }
}

/// Features that aggregate by summation across a decision window; all
/// other features are constant within a window by construction.
fn summable(name: &str) -> bool {
    name.ends_with("_events") || name.starts_with("dist_delta")
}

fn aggregate_window(window: &[FeatureEnv]) -> FeatureEnv {
    let mut env = window[0].clone();
    for (name, value) in env.iter_mut() {
        if summable(name) {
            *value = window.iter().filter_map(|e| e.get(name)).sum();
        }
    }
    env
}

/// Computes the return of `traj` under `spec`, with per-attribute breakdown.
///
/// Attributes accrue at their declared granularity; terminal rules fire once
/// on the matching terminal event. Discounting, when requested, applies at
/// decision-step granularity and exists for diagnostics only.
pub fn eval_return(
    spec: &RewardSpec,
    traj: &Trajectory,
    mode: DiscountMode,
) -> Result<ReturnBreakdown, EvaluatorError> {
    let gamma = match mode {
        DiscountMode::Undiscounted => 1.0,
        DiscountMode::Discounted(g) => g,
    };
    let window = decision_window(spec);
    let discount_at = |step: usize| -> f64 {
        if gamma == 1.0 {
            1.0
        } else {
            gamma.powi((step / window) as i32)
        }
    };

    let mut per_attribute = BTreeMap::new();
    for attr in &spec.per_step_attributes {
        let mut acc = Kahan::default();
        match &attr.accrual {
            Accrual::PerRewardStep => {
                for (i, env) in traj.steps.iter().enumerate() {
                    acc.add(attr.weight * eval_expr(&attr.expr, env)? * discount_at(i));
                }
            }
            Accrual::PerDecisionStep => {
                for (d, chunk) in traj.steps.chunks(window).enumerate() {
                    let env = aggregate_window(chunk);
                    let factor = if gamma == 1.0 {
                        1.0
                    } else {
                        gamma.powi(d as i32)
                    };
                    acc.add(attr.weight * eval_expr(&attr.expr, &env)? * factor);
                }
            }
            Accrual::OnEvent(kind) => {
                let mass_feature = format!("{kind}_events");
                for (i, env) in traj.steps.iter().enumerate() {
                    let mass = env.get(&mass_feature).copied().unwrap_or(0.0);
                    if mass != 0.0 {
                        acc.add(attr.weight * eval_expr(&attr.expr, env)? * mass * discount_at(i));
                    }
                }
            }
        }
        per_attribute.insert(attr.id.clone(), acc.sum);
    }

    let mut terminal_contribution = 0.0;
    if let Some((event, env)) = &traj.terminal {
        if let Some(expr) = spec.terminal_rules.get(event) {
            let factor = if gamma == 1.0 || traj.steps.is_empty() {
                1.0
            } else {
                discount_at(traj.steps.len() - 1)
            };
            terminal_contribution = eval_expr(expr, env)? * factor;
        }
    }

    let mut total = Kahan::default();
    for v in per_attribute.values() {
        total.add(*v);
    }
    total.add(terminal_contribution);

    Ok(ReturnBreakdown {
        total: total.sum,
        per_attribute,
        terminal_contribution,
        step_count: traj.steps.len(),
        discount_mode: mode,
    })
}

/// Undiscounted total plus a potential-based shaping term.
///
/// The shaping term is the telescoping sum of `gamma * phi(t+1) - phi(t)`
/// over every transition, with index `steps.len()` standing for the terminal
/// state. The potential must cover indices `0..=steps.len()`.
pub fn eval_shaped_return(
    spec: &RewardSpec,
    traj: &Trajectory,
    potential: &BTreeMap<usize, f64>,
    gamma: f64,
) -> Result<f64, EvaluatorError> {
    let base = eval_return(spec, traj, DiscountMode::Undiscounted)?;
    let n = traj.steps.len();
    let phi = |idx: usize| -> Result<f64, EvaluatorError> {
        potential
            .get(&idx)
            .copied()
            .ok_or(EvaluatorError::MissingPotential(idx))
    };
    let mut shaping = Kahan::default();
    for t in 0..n {
        shaping.add(gamma * phi(t + 1)? - phi(t)?);
    }
    Ok(base.total + shaping.sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinOp, Expr};
    use crate::model::{
        AttributeDef, AttributeKind, DesignProvenance, EpisodeConfig, FeatureDecl, OutcomeTag,
        TerminalEvent, TimeLimit,
    };
    use crate::trajectory::TrajectoryKind;
    use std::collections::BTreeSet;

    fn flat_traj(n: usize, features: &[(&str, f64)]) -> Trajectory {
        let env: FeatureEnv = features.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Trajectory {
            kind: TrajectoryKind::Custom,
            steps: vec![env; n],
            terminal: None,
            path_length_km: 1.0,
            reward_step_s: 0.1,
        }
    }

    fn test_spec(attrs: Vec<AttributeDef>) -> RewardSpec {
        let mut features = BTreeMap::new();
        for attr in &attrs {
            let mut used = Vec::new();
            attr.expr.features(&mut used);
            for name in used {
                features.insert(
                    name,
                    FeatureDecl {
                        unit: "none".to_string(),
                        default: None,
                    },
                );
            }
            if let Accrual::OnEvent(kind) = &attr.accrual {
                features.insert(
                    format!("{kind}_events"),
                    FeatureDecl {
                        unit: "count".to_string(),
                        default: None,
                    },
                );
            }
        }
        RewardSpec {
            id: "t".to_string(),
            source: None,
            per_step_attributes: attrs,
            terminal_rules: BTreeMap::new(),
            episode: EpisodeConfig {
                reward_step_s: Some(0.1),
                decision_step_s: Some(0.1),
                discount: Some(0.99),
                episodic: true,
                time_limit: TimeLimit::Unstated,
                termination_criteria: BTreeSet::new(),
            },
            design_provenance: DesignProvenance::Unstated,
            declared_shaping_ids: BTreeSet::new(),
            features,
        }
    }

    fn attr(id: &str, weight: f64, expr: Expr) -> AttributeDef {
        AttributeDef {
            id: id.to_string(),
            weight,
            expr,
            kind: AttributeKind::Outcome,
            outcome_tags: [OutcomeTag::Time].into_iter().collect(),
            accrual: Accrual::PerRewardStep,
        }
    }

    #[test]
    fn zero_weights_give_zero_total() {
        let spec = test_spec(vec![attr("a", 0.0, Expr::feature("x"))]);
        let traj = flat_traj(50, &[("x", 3.0)]);
        let got = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        assert_eq!(got.total, 0.0);
    }

    #[test]
    fn total_equals_attribute_sum_plus_terminal() {
        let mut spec = test_spec(vec![
            attr("a", 2.0, Expr::feature("x")),
            attr("b", -0.5, Expr::Const(1.0)),
        ]);
        spec.terminal_rules
            .insert(TerminalEvent::Collision, Expr::Const(-10.0));
        let mut traj = flat_traj(10, &[("x", 1.5)]);
        traj.terminal = Some((TerminalEvent::Collision, FeatureEnv::new()));
        let got = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        let parts: f64 = got.per_attribute.values().sum();
        assert!((got.total - (parts + got.terminal_contribution)).abs() < 1e-9);
        assert_eq!(got.terminal_contribution, -10.0);
        assert_eq!(got.step_count, 10);
    }

    #[test]
    fn terminal_rule_ignored_without_matching_event() {
        let mut spec = test_spec(vec![attr("a", 1.0, Expr::Const(0.0))]);
        spec.terminal_rules
            .insert(TerminalEvent::Collision, Expr::Const(-10.0));
        let mut traj = flat_traj(5, &[]);
        traj.terminal = Some((TerminalEvent::Timeout, FeatureEnv::new()));
        let got = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        assert_eq!(got.terminal_contribution, 0.0);
    }

    #[test]
    fn on_event_accrual_multiplies_by_mass() {
        let mut a = attr("overtake", 0.5, Expr::Const(1.0));
        a.accrual = Accrual::OnEvent("overtake".to_string());
        let spec = test_spec(vec![a]);
        let mut traj = flat_traj(4, &[("overtake_events", 0.0)]);
        traj.steps[1].insert("overtake_events".to_string(), 2.0);
        traj.steps[3].insert("overtake_events".to_string(), 1.5);
        let got = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        assert!((got.total - 0.5 * 3.5).abs() < 1e-12);
    }

    #[test]
    fn decision_step_aggregation_sums_event_mass() {
        // Event mass accrued per decision step equals per reward step when
        // the expression is the mass itself (undiscounted split invariance).
        let per_step = attr("m", 1.0, Expr::feature("gain_events"));
        let mut per_decision = per_step.clone();
        per_decision.accrual = Accrual::PerDecisionStep;

        let spec_step = test_spec(vec![per_step]);
        let mut spec_decision = test_spec(vec![per_decision]);
        spec_decision.episode.decision_step_s = Some(0.4);

        let mut traj = flat_traj(8, &[("gain_events", 0.25)]);
        traj.steps[2].insert("gain_events".to_string(), 1.25);
        let a = eval_return(&spec_step, &traj, DiscountMode::Undiscounted).unwrap();
        let b = eval_return(&spec_decision, &traj, DiscountMode::Undiscounted).unwrap();
        assert!((a.total - b.total).abs() < 1e-12);
    }

    #[test]
    fn constant_rate_attribute_depends_on_granularity() {
        // A constant expression accrues once per step, so granularity is
        // semantic for it: 8 reward steps vs 2 decision windows.
        let per_step = attr("alive", 1.0, Expr::Const(1.0));
        let mut per_decision = per_step.clone();
        per_decision.accrual = Accrual::PerDecisionStep;
        let spec_step = test_spec(vec![per_step]);
        let mut spec_decision = test_spec(vec![per_decision]);
        spec_decision.episode.decision_step_s = Some(0.4);
        let traj = flat_traj(8, &[]);
        let a = eval_return(&spec_step, &traj, DiscountMode::Undiscounted).unwrap();
        let b = eval_return(&spec_decision, &traj, DiscountMode::Undiscounted).unwrap();
        assert_eq!(a.total, 8.0);
        assert_eq!(b.total, 2.0);
    }

    #[test]
    fn discounted_with_gamma_one_matches_undiscounted() {
        let spec = test_spec(vec![attr(
            "a",
            1.0,
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::feature("x")),
                Box::new(Expr::Const(0.5)),
            ),
        )]);
        let traj = flat_traj(17, &[("x", 0.3)]);
        let a = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        let b = eval_return(&spec, &traj, DiscountMode::Discounted(1.0)).unwrap();
        assert!((a.total - b.total).abs() < 1e-12);
    }

    #[test]
    fn discounting_shrinks_constant_positive_stream() {
        let spec = test_spec(vec![attr("a", 1.0, Expr::Const(1.0))]);
        let traj = flat_traj(40, &[]);
        let undiscounted = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        let discounted = eval_return(&spec, &traj, DiscountMode::Discounted(0.9)).unwrap();
        assert!(discounted.total < undiscounted.total);
    }

    #[test]
    fn zero_potential_leaves_return_unchanged() {
        let spec = test_spec(vec![attr("a", 1.0, Expr::Const(0.25))]);
        let traj = flat_traj(12, &[]);
        let base = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        let phi: BTreeMap<usize, f64> = (0..=12).map(|i| (i, 0.0)).collect();
        let shaped = eval_shaped_return(&spec, &traj, &phi, 0.99).unwrap();
        assert_eq!(shaped, base.total);
    }

    #[test]
    fn telescoping_at_gamma_one_with_zero_terminal_potential() {
        let spec = test_spec(vec![attr("a", 1.0, Expr::Const(-0.1))]);
        let traj = flat_traj(9, &[]);
        let base = eval_return(&spec, &traj, DiscountMode::Undiscounted).unwrap();
        let mut phi = BTreeMap::new();
        for i in 0..=9usize {
            phi.insert(i, if i == 9 { 0.0 } else { 3.0 + i as f64 });
        }
        let shaped = eval_shaped_return(&spec, &traj, &phi, 1.0).unwrap();
        assert!((shaped - (base.total - phi[&0])).abs() < 1e-12);
    }

    #[test]
    fn shaped_return_matches_brute_force_sum() {
        let spec = test_spec(vec![attr("a", 1.0, Expr::feature("x"))]);
        let traj = flat_traj(5, &[("x", 0.7)]);
        let phi: BTreeMap<usize, f64> = [0.4, -1.2, 2.0, 0.1, -0.9, 0.5]
            .into_iter()
            .enumerate()
            .collect();
        let gamma = 1.0;
        // independent oracle: plain loop over rewards plus shaping terms
        let mut expected = 0.0;
        for t in 0..5usize {
            expected += 0.7;
            expected += gamma * phi[&(t + 1)] - phi[&t];
        }
        let shaped = eval_shaped_return(&spec, &traj, &phi, gamma).unwrap();
        assert!((shaped - expected).abs() < 1e-12);
    }

    #[test]
    fn missing_potential_index_reported() {
        let spec = test_spec(vec![attr("a", 1.0, Expr::Const(1.0))]);
        let traj = flat_traj(3, &[]);
        let phi: BTreeMap<usize, f64> = [(0usize, 0.0), (1, 0.0), (2, 0.0)].into_iter().collect();
        assert_eq!(
            eval_shaped_return(&spec, &traj, &phi, 1.0),
            Err(EvaluatorError::MissingPotential(3))
        );
    }

    #[test]
    fn missing_feature_propagates() {
        let spec = test_spec(vec![attr("a", 1.0, Expr::feature("ghost"))]);
        let traj = flat_traj(3, &[]);
        assert!(matches!(
            eval_return(&spec, &traj, DiscountMode::Undiscounted),
            Err(EvaluatorError::Eval(EvalError::MissingFeature(_)))
        ));
    }
}
