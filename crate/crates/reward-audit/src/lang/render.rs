//! Canonical renderer for reward-spec documents.
//!
//! Rendering sorts keys within each block, keeps attribute declaration order
//! (it is semantic), orders terminal rules by event kind, and prints numbers
//! in their shortest form that parses back to the identical value, so that
//! `parse(render(spec))` is structurally equal to `spec`.

use std::fmt::Write;

use crate::model::{RewardSpec, TimeLimit};

fn num(v: f64) -> String {
    format!("{v}")
}

/// Renders a spec to canonical `.rspec` text (UTF-8, LF line endings).
pub fn render_spec(spec: &RewardSpec) -> String {
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "reward_spec {}", spec.id).unwrap();
    if !spec.declared_shaping_ids.is_empty() {
        let ids: Vec<&str> = spec
            .declared_shaping_ids
            .iter()
            .map(|s| s.as_str())
            .collect();
        writeln!(w, "declared_shaping = {}", ids.join(", ")).unwrap();
    }
    writeln!(w, "format_version = 1").unwrap();
    if spec.design_provenance != crate::model::DesignProvenance::Unstated {
        writeln!(w, "provenance = {}", spec.design_provenance.as_str()).unwrap();
    }
    if let Some(source) = &spec.source {
        writeln!(w, "source = \"{source}\"").unwrap();
    }

    // episode keys in alphabetical order
    writeln!(w).unwrap();
    writeln!(w, "episode {{").unwrap();
    if let Some(v) = spec.episode.decision_step_s {
        writeln!(w, "  decision_step_s = {}", num(v)).unwrap();
    }
    if let Some(v) = spec.episode.discount {
        writeln!(w, "  discount = {}", num(v)).unwrap();
    }
    writeln!(w, "  episodic = {}", spec.episode.episodic).unwrap();
    if let Some(v) = spec.episode.reward_step_s {
        writeln!(w, "  reward_step_s = {}", num(v)).unwrap();
    }
    if !spec.episode.termination_criteria.is_empty() {
        let kinds: Vec<&str> = spec
            .episode
            .termination_criteria
            .iter()
            .map(|e| e.as_str())
            .collect();
        writeln!(w, "  termination = {}", kinds.join(", ")).unwrap();
    }
    match spec.episode.time_limit {
        TimeLimit::Unstated => {}
        TimeLimit::Seconds(v) => writeln!(w, "  time_limit_s = {}", num(v)).unwrap(),
        TimeLimit::RouteDependent => writeln!(w, "  time_limit_s = route_dependent").unwrap(),
        TimeLimit::StatedNone => writeln!(w, "  time_limit_s = none").unwrap(),
    }
    writeln!(w, "}}").unwrap();

    if !spec.features.is_empty() {
        writeln!(w).unwrap();
        writeln!(w, "features {{").unwrap();
        for (name, decl) in &spec.features {
            match decl.default {
                Some(d) => writeln!(w, "  {name} = {} default {}", decl.unit, num(d)).unwrap(),
                None => writeln!(w, "  {name} = {}", decl.unit).unwrap(),
            }
        }
        writeln!(w, "}}").unwrap();
    }

    for attr in &spec.per_step_attributes {
        writeln!(w).unwrap();
        writeln!(w, "attribute {} {{", attr.id).unwrap();
        writeln!(w, "  accrual = {}", attr.accrual).unwrap();
        writeln!(w, "  expr = {}", attr.expr).unwrap();
        writeln!(w, "  kind = {}", attr.kind.as_str()).unwrap();
        if !attr.outcome_tags.is_empty() {
            let tags: Vec<&str> = attr.outcome_tags.iter().map(|t| t.as_str()).collect();
            writeln!(w, "  tags = {}", tags.join(", ")).unwrap();
        }
        writeln!(w, "  weight = {}", num(attr.weight)).unwrap();
        writeln!(w, "}}").unwrap();
    }

    for (event, expr) in &spec.terminal_rules {
        writeln!(w).unwrap();
        writeln!(w, "terminal {event} {{").unwrap();
        writeln!(w, "  expr = {expr}").unwrap();
        writeln!(w, "}}").unwrap();
    }

    out
}
