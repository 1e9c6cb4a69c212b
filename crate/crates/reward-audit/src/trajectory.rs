//! Synthesis of abstract trajectories from scenario parameters.
//!
//! Trajectories here are bookkeeping objects, not rollouts: a list of
//! per-step feature environments plus an optional terminal event. The three
//! canonical kinds are a drive that crashes halfway, a motionless vehicle,
//! and a successful arrival. Profiles are constant-speed; anything else is
//! expressed as edits on a synthesized base via [`synth_custom`].

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::FeatureEnv;
use crate::model::{RewardSpec, TerminalEvent};

/// Scenario speed as given, preserving the source unit so that unit
/// conversion never introduces rounding on the declared figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NominalSpeed {
    Mps(f64),
    Kmh(f64),
    Unspecified,
}

impl NominalSpeed {
    pub fn mps(self) -> f64 {
        match self {
            NominalSpeed::Mps(v) => v,
            NominalSpeed::Kmh(v) => v / 3.6,
            NominalSpeed::Unspecified => 0.0,
        }
    }

    pub fn kmh(self) -> f64 {
        match self {
            NominalSpeed::Mps(v) => v * 3.6,
            NominalSpeed::Kmh(v) => v,
            NominalSpeed::Unspecified => 0.0,
        }
    }
}

/// How an abstract event is placed along the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventPlacement {
    /// Total mass proportional to distance driven, spread uniformly.
    RatePerKm(f64),
    /// Total mass per full-path episode, scaled by the path fraction driven,
    /// spread uniformly.
    CountPerEpisode(f64),
    /// Fixed mass at the first step of any moving trajectory.
    Once(f64),
    /// Fixed mass at the last step before a collision; crash only.
    PreCollision(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub kind: String,
    pub placement: EventPlacement,
}

/// Abstract scenario parameters resolved from a `.scn` document.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: String,
    pub path_length_km: f64,
    pub speed: NominalSpeed,
    /// When the source reports the task time directly it overrides
    /// distance / speed for durations and the implied speed.
    pub success_time_s: Option<f64>,
    pub time_limit_s: Option<f64>,
    pub idle_cutoff_s: Option<f64>,
    /// Seconds of opposite-lane overlap immediately preceding a collision.
    pub overlap_s: f64,
    pub events: Vec<EventSpec>,
    /// Constant feature values assumed by the scenario.
    pub features: BTreeMap<String, f64>,
    /// Optional risk-baseline overrides carried by the document.
    pub baselines: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Crash,
    Idle,
    Succ,
    Custom,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::Crash => "crash",
            TrajectoryKind::Idle => "idle",
            TrajectoryKind::Succ => "succ",
            TrajectoryKind::Custom => "custom",
        }
    }
}

/// A synthesized per-step feature stream plus terminal event.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub steps: Vec<FeatureEnv>,
    pub terminal: Option<(TerminalEvent, FeatureEnv)>,
    pub path_length_km: f64,
    pub reward_step_s: f64,
}

impl Trajectory {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Total of a per-step feature across the trajectory.
    pub fn feature_sum(&self, name: &str) -> f64 {
        self.steps.iter().filter_map(|env| env.get(name)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory not evaluable: {0}")]
    NotEvaluable(String),
    #[error("missing scenario parameter `{0}`")]
    MissingScenarioParameter(String),
    #[error("edit out of range: {0}")]
    EditOutOfRange(String),
}

fn step_count(duration_s: f64, dt: f64) -> usize {
    // Nearest integer; durations within 1e-9 s of an exact multiple are
    // treated as exact so float dust cannot shift the count.
    let raw = duration_s / dt;
    let rounded = raw.round();
    if (duration_s - rounded * dt).abs() <= 1e-9 {
        rounded as usize
    } else {
        raw.round() as usize
    }
}

struct Resolved {
    speed_mps: f64,
    speed_kmh: f64,
    succ_duration_s: f64,
}

fn resolve_motion(scn: &ScenarioSpec) -> Result<Resolved, TrajectoryError> {
    if let Some(t) = scn.success_time_s {
        let mps = scn.path_length_km * 1000.0 / t;
        return Ok(Resolved {
            speed_mps: mps,
            speed_kmh: mps * 3.6,
            succ_duration_s: t,
        });
    }
    let mps = scn.speed.mps();
    if mps <= 0.0 {
        return Err(TrajectoryError::MissingScenarioParameter(
            "speed (or success_time_s) for a moving trajectory".to_string(),
        ));
    }
    Ok(Resolved {
        speed_mps: mps,
        speed_kmh: scn.speed.kmh(),
        succ_duration_s: scn.path_length_km * 1000.0 / mps,
    })
}

/// Per-step event masses for one event spec.
fn event_profile(
    placement: EventPlacement,
    kind: TrajectoryKind,
    path_km: f64,
    fraction: f64,
    n: usize,
) -> Vec<f64> {
    let mut masses = vec![0.0; n];
    if n == 0 {
        return masses;
    }
    match placement {
        EventPlacement::RatePerKm(rate) => {
            let total = rate * path_km * fraction;
            let per = total / n as f64;
            masses.iter_mut().for_each(|m| *m = per);
        }
        EventPlacement::CountPerEpisode(count) => {
            let total = count * fraction;
            let per = total / n as f64;
            masses.iter_mut().for_each(|m| *m = per);
        }
        EventPlacement::Once(v) => {
            if kind != TrajectoryKind::Idle {
                masses[0] = v;
            }
        }
        EventPlacement::PreCollision(v) => {
            if kind == TrajectoryKind::Crash {
                masses[n - 1] = v;
            }
        }
    }
    masses
}

/// Synthesizes one of the three canonical trajectories for `spec` from the
/// scenario parameters.
pub fn synth_canonical(
    scn: &ScenarioSpec,
    spec: &RewardSpec,
    kind: TrajectoryKind,
) -> Result<Trajectory, TrajectoryError> {
    let dt = spec
        .episode
        .reward_step_s
        .ok_or_else(|| TrajectoryError::MissingScenarioParameter("reward_step_s".to_string()))?;

    let (fraction, duration_s, terminal_event, moving) = match kind {
        TrajectoryKind::Succ => {
            if !spec.episode.episodic {
                return Err(TrajectoryError::NotEvaluable(
                    "continuing task defines no successful arrival".to_string(),
                ));
            }
            let motion = resolve_motion(scn)?;
            (1.0, motion.succ_duration_s, Some(TerminalEvent::Goal), true)
        }
        TrajectoryKind::Crash => {
            if !spec.episode.episodic {
                return Err(TrajectoryError::NotEvaluable(
                    "continuing task defines no collision outcome".to_string(),
                ));
            }
            let motion = resolve_motion(scn)?;
            (
                0.5,
                motion.succ_duration_s * 0.5,
                Some(TerminalEvent::Collision),
                true,
            )
        }
        TrajectoryKind::Idle => {
            let limit = scn.time_limit_s.or(spec.episode.time_limit.seconds());
            match (limit, scn.idle_cutoff_s) {
                (Some(d), _) => (0.0, d, Some(TerminalEvent::Timeout), false),
                (None, Some(d)) => {
                    let event = if d == 0.0 {
                        None
                    } else if spec
                        .episode
                        .termination_criteria
                        .contains(&TerminalEvent::ZeroSpeed)
                    {
                        Some(TerminalEvent::ZeroSpeed)
                    } else {
                        Some(TerminalEvent::Timeout)
                    };
                    (0.0, d, event, false)
                }
                (None, None) => {
                    let detail = if spec.episode.episodic {
                        "idle duration unbounded: no time limit or idle cutoff"
                    } else {
                        "idle duration unbounded for a continuing task with no cutoff"
                    };
                    return Err(TrajectoryError::NotEvaluable(detail.to_string()));
                }
            }
        }
        TrajectoryKind::Custom => {
            return Err(TrajectoryError::NotEvaluable(
                "custom trajectories are built from a canonical base via synth_custom".to_string(),
            ))
        }
    };

    let (speed_mps, speed_kmh) = if moving {
        let motion = resolve_motion(scn)?;
        (motion.speed_mps, motion.speed_kmh)
    } else {
        (0.0, 0.0)
    };

    let n = step_count(duration_s, dt);
    let dist_step_km = if n > 0 {
        (fraction * scn.path_length_km) / n as f64
    } else {
        0.0
    };

    // Per-kind event mass profiles for declared `<kind>_events` features.
    let mut profiles: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for event in &scn.events {
        let profile = event_profile(event.placement, kind, scn.path_length_km, fraction, n);
        profiles.insert(format!("{}_events", event.kind), profile);
    }

    let overlap_steps = if kind == TrajectoryKind::Crash && dt > 0.0 {
        (scn.overlap_s / dt).round() as usize
    } else {
        0
    };

    let mut steps = Vec::with_capacity(n);
    for t in 0..n {
        let mut env = FeatureEnv::new();
        for (name, decl) in &spec.features {
            let value = match name.as_str() {
                "speed_mps" => speed_mps,
                "speed_kmh" => speed_kmh,
                "dist_delta_km" => dist_step_km,
                "dist_delta_m" => dist_step_km * 1000.0,
                "opposite_lane_overlap" => {
                    if overlap_steps > 0 && t + overlap_steps >= n {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ if name.ends_with("_events") => profiles
                    .get(name)
                    .map(|p| p[t])
                    .or_else(|| scn.features.get(name).copied())
                    .unwrap_or(0.0),
                _ => scn
                    .features
                    .get(name)
                    .copied()
                    .or(decl.default)
                    .ok_or_else(|| TrajectoryError::MissingScenarioParameter(name.clone()))?,
            };
            env.insert(name.clone(), value);
        }
        steps.push(env);
    }

    let terminal = terminal_event.map(|event| {
        let mut env = FeatureEnv::new();
        for (name, decl) in &spec.features {
            let value = match name.as_str() {
                "speed_mps" => speed_mps,
                "speed_kmh" => speed_kmh,
                "dist_delta_km" | "dist_delta_m" | "opposite_lane_overlap" => 0.0,
                _ if name.ends_with("_events") => 0.0,
                _ => scn
                    .features
                    .get(name)
                    .copied()
                    .or(decl.default)
                    .unwrap_or(0.0),
            };
            env.insert(name.clone(), value);
        }
        (event, env)
    });

    Ok(Trajectory {
        kind,
        steps,
        terminal,
        path_length_km: scn.path_length_km,
        reward_step_s: dt,
    })
}

/// One minimal modification to a synthesized trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum EventEdit {
    /// Adds event mass of `kind` at `step`.
    AddEvent {
        kind: String,
        step: usize,
        amount: f64,
    },
    /// Removes `amount` of the total event mass of `kind`, scaling the
    /// existing profile down proportionally.
    RemoveEvent { kind: String, amount: f64 },
    /// Replaces the whole per-step mass profile of `kind`.
    ReplaceEventProfile { kind: String, masses: Vec<f64> },
    /// Sets feature `name` at `step` to `value`.
    SetFeature {
        step: usize,
        name: String,
        value: f64,
    },
    /// Shifts distance at `step` by `delta_km`, keeping both distance
    /// features coherent.
    AdjustDistance { step: usize, delta_km: f64 },
}

/// Returns a new trajectory differing from `base` only in the edited
/// events and features. `base` is left untouched.
pub fn synth_custom(base: &Trajectory, edits: &[EventEdit]) -> Result<Trajectory, TrajectoryError> {
    let mut out = base.clone();
    out.kind = TrajectoryKind::Custom;
    let len = out.steps.len();

    let check_step = |step: usize| {
        if step >= len {
            Err(TrajectoryError::EditOutOfRange(format!(
                "step {step} outside 0..{len}"
            )))
        } else {
            Ok(())
        }
    };

    for edit in edits {
        match edit {
            EventEdit::AddEvent { kind, step, amount } => {
                check_step(*step)?;
                let name = format!("{kind}_events");
                let slot = out.steps[*step].entry(name).or_insert(0.0);
                *slot += amount;
            }
            EventEdit::RemoveEvent { kind, amount } => {
                let name = format!("{kind}_events");
                let total: f64 = out.steps.iter().filter_map(|env| env.get(&name)).sum();
                if *amount > total + 1e-9 {
                    return Err(TrajectoryError::EditOutOfRange(format!(
                        "cannot remove {amount} of `{kind}`: only {total} present"
                    )));
                }
                if total > 0.0 {
                    let scale = (total - amount) / total;
                    for env in &mut out.steps {
                        if let Some(m) = env.get_mut(&name) {
                            *m *= scale;
                        }
                    }
                }
            }
            EventEdit::ReplaceEventProfile { kind, masses } => {
                if masses.len() != len {
                    return Err(TrajectoryError::EditOutOfRange(format!(
                        "profile length {} does not match step count {len}",
                        masses.len()
                    )));
                }
                let name = format!("{kind}_events");
                for (env, mass) in out.steps.iter_mut().zip(masses) {
                    env.insert(name.clone(), *mass);
                }
            }
            EventEdit::SetFeature { step, name, value } => {
                check_step(*step)?;
                out.steps[*step].insert(name.clone(), *value);
            }
            EventEdit::AdjustDistance { step, delta_km } => {
                check_step(*step)?;
                let env = &mut out.steps[*step];
                let km = env.entry("dist_delta_km".to_string()).or_insert(0.0);
                *km += delta_km;
                let m = env.entry("dist_delta_m".to_string()).or_insert(0.0);
                *m += delta_km * 1000.0;
            }
        }
    }
    Ok(out)
}
