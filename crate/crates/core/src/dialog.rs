//! Dialog engine: runs one episode between the user simulator and a
//! system actor, grounding delexicalized system acts against the entity
//! database and recording everything needed for training and evaluation.
//!
//! Turn order, per exchange: user acts -> belief update -> state vector
//! -> system decision -> grounding -> belief update -> record. The
//! user's bye still gets one system response; the exchange carrying it
//! is the terminal one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Bundle, DialogAct, Entity, Intent, UserGoal};
use crate::error::{GdplError, Result};
use crate::rng::Rng;
use crate::simulator::{SimulatorConfig, UserEnd, UserSim, REQUEST_VALUE, UNAVAILABLE};
use crate::tracker::{state_dim, vectorize, BeliefState};

/// Everything a system actor may look at when choosing its acts.
pub struct TurnView<'a> {
    pub bundle: &'a Bundle,
    pub belief: &'a BeliefState,
    /// Dense binary state vector (see docs/state-layout.md).
    pub state: &'a [f64],
    /// This turn's user acts, lexicalized.
    pub user_acts: &'a [DialogAct],
}

/// A system turn in policy space, with sampling metadata.
#[derive(Clone, Debug, Default)]
pub struct SystemDecision {
    /// Vocabulary indices of the chosen delexicalized acts.
    pub act_indices: Vec<usize>,
    /// Log probability of the chosen act set under the actor, 0 for
    /// deterministic actors.
    pub log_prob: f64,
    /// State-value estimate, 0 for actors without a critic.
    pub value: f64,
}

/// Anything that can drive the system side of a dialog.
pub trait SystemActor {
    fn act(&mut self, view: &TurnView<'_>, rng: &mut Rng) -> Result<SystemDecision>;
}

/// How an episode ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionOutcome {
    /// User goal fully serviced from the user's point of view.
    Satisfied,
    /// Turn cap reached first.
    MaxTurns,
    /// User ran out of patience.
    Abandoned,
}

/// One recorded exchange.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TurnRecord {
    /// Lexicalized user acts.
    pub user_acts: Vec<DialogAct>,
    /// Indices of the 1-entries of the (binary) state vector.
    pub state: Vec<u32>,
    /// System acts in policy space (vocabulary indices).
    pub act_indices: Vec<usize>,
    /// Grounded system acts as the user saw them.
    pub system_acts: Vec<DialogAct>,
    pub log_prob: f64,
    pub value: f64,
    pub terminal: bool,
}

/// A full recorded dialog.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Session {
    pub goal: UserGoal,
    pub turns: Vec<TurnRecord>,
    pub outcome: SessionOutcome,
    /// domain -> index of the entity the booking was grounded to.
    pub booked: BTreeMap<String, usize>,
    /// Grounding anomalies (acts that could not be bound to an entity).
    pub integrity_warnings: usize,
}

impl Session {
    pub fn exchanges(&self) -> usize {
        self.turns.len()
    }
}

/// Expand sparse 1-entry indices back into a dense state vector.
pub fn sparse_to_dense(sparse: &[u32], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for i in sparse {
        out[*i as usize] = 1.0;
    }
    out
}

fn dense_to_sparse(dense: &[f64]) -> Vec<u32> {
    dense
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i as u32)
        .collect()
}

pub struct DialogEngine<'a> {
    bundle: &'a Bundle,
    config: SimulatorConfig,
}

impl<'a> DialogEngine<'a> {
    pub fn new(bundle: &'a Bundle, config: SimulatorConfig) -> Result<DialogEngine<'a>> {
        config.validate()?;
        Ok(DialogEngine { bundle, config })
    }

    pub fn state_dim(&self) -> usize {
        state_dim(&self.bundle.ontology)
    }

    /// Run one full episode.
    pub fn run_episode(
        &self,
        goal: UserGoal,
        actor: &mut dyn SystemActor,
        rng: &mut Rng,
    ) -> Result<Session> {
        let mut sim = UserSim::new(goal, self.config)?;
        let mut belief = BeliefState::new();
        let mut turns: Vec<TurnRecord> = Vec::new();
        let mut booked = BTreeMap::new();
        let mut warnings = 0usize;
        let mut prev_system_acts: Vec<DialogAct> = Vec::new();

        let mut user_turn = sim.first_turn()?;
        loop {
            let ontology = &self.bundle.ontology;
            belief.observe_user(ontology, &user_turn.acts);
            let state = vectorize(
                ontology,
                &self.bundle.database,
                &belief,
                &user_turn.acts,
                &prev_system_acts,
            )?;

            let view = TurnView {
                bundle: self.bundle,
                belief: &belief,
                state: &state,
                user_acts: &user_turn.acts,
            };
            let decision = actor.act(&view, rng)?;

            let mut system_acts = Vec::with_capacity(decision.act_indices.len());
            for idx in &decision.act_indices {
                let delex = ontology.index_to_act(*idx)?.clone();
                let grounded = self.ground(&delex, &belief, &mut booked, &mut warnings)?;
                system_acts.push(grounded);
            }
            belief.observe_system(ontology, &system_acts);

            let exchange = turns.len() + 1;
            let ended = user_turn.end.is_some();
            let capped = !ended && exchange >= self.config.max_turns;
            turns.push(TurnRecord {
                user_acts: user_turn.acts.clone(),
                state: dense_to_sparse(&state),
                act_indices: decision.act_indices,
                system_acts: system_acts.clone(),
                log_prob: decision.log_prob,
                value: decision.value,
                terminal: ended || capped,
            });

            if ended || capped {
                let outcome = match user_turn.end {
                    Some(UserEnd::Satisfied) => SessionOutcome::Satisfied,
                    Some(UserEnd::Abandoned) => SessionOutcome::Abandoned,
                    None => SessionOutcome::MaxTurns,
                };
                warnings += belief.ignored_acts;
                return Ok(Session {
                    goal: sim.goal().clone(),
                    turns,
                    outcome,
                    booked,
                    integrity_warnings: warnings,
                });
            }

            prev_system_acts = system_acts;
            user_turn = sim.step(&prev_system_acts, rng)?;
        }
    }

    /// Ground a delexicalized system act against the database and the
    /// current belief.
    fn ground(
        &self,
        act: &DialogAct,
        belief: &BeliefState,
        booked: &mut BTreeMap<String, usize>,
        warnings: &mut usize,
    ) -> Result<DialogAct> {
        let ontology = &self.bundle.ontology;
        let mut grounded = act.clone();
        match act.intent {
            Intent::Request => {
                grounded.value = REQUEST_VALUE.to_string();
            }
            Intent::Inform => {
                let Some(spec) = ontology.domain(&act.domain) else {
                    return Ok(grounded);
                };
                if spec.book_slot(&act.slot).is_some() {
                    // Echo of user-provided booking info.
                    grounded.value = belief
                        .book_info
                        .get(&act.domain)
                        .and_then(|m| m.get(&act.slot).cloned())
                        .unwrap_or_else(|| {
                            *warnings += 1;
                            UNAVAILABLE.to_string()
                        });
                } else {
                    match self.first_match(&act.domain, belief)? {
                        Some((_, entity)) => {
                            grounded.value = entity
                                .get(&act.slot)
                                .cloned()
                                .unwrap_or_else(|| UNAVAILABLE.to_string());
                        }
                        None => {
                            *warnings += 1;
                            grounded.value = UNAVAILABLE.to_string();
                        }
                    }
                }
            }
            Intent::Offer => match self.first_match(&act.domain, belief)? {
                Some((idx, _)) => {
                    grounded.value = format!("entity-{idx}");
                }
                None => {
                    *warnings += 1;
                    grounded.value = UNAVAILABLE.to_string();
                }
            },
            Intent::Book => {
                // A booking grounds only when the belief carries every
                // booking slot and an entity matches; mirrors what the
                // user will accept.
                if belief.book_ready(ontology, &act.domain) {
                    match self.first_match(&act.domain, belief)? {
                        Some((idx, _)) => {
                            booked.insert(act.domain.clone(), idx);
                            grounded.value = format!("ref-{idx:04}");
                        }
                        None => {
                            *warnings += 1;
                            grounded.value = UNAVAILABLE.to_string();
                        }
                    }
                } else {
                    *warnings += 1;
                    grounded.value = UNAVAILABLE.to_string();
                }
            }
            Intent::Nooffer | Intent::Greet | Intent::Bye | Intent::Ack => {}
        }
        Ok(grounded)
    }

    /// First database entity matching the belief constraints for a
    /// domain, with its table index.
    fn first_match(
        &self,
        domain: &str,
        belief: &BeliefState,
    ) -> Result<Option<(usize, &Entity)>> {
        let constraints = belief.constraints_for(domain);
        let table = self
            .bundle
            .database
            .tables
            .get(domain)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let spec = self.bundle.ontology.require_domain(domain)?;
        for slot in constraints.keys() {
            if spec.slot(slot).map(|s| !s.informable).unwrap_or(true) {
                return Err(GdplError::Runtime(format!(
                    "belief holds non-informable constraint `{domain}.{slot}`"
                )));
            }
        }
        Ok(table.iter().enumerate().find(|(_, e)| {
            constraints
                .iter()
                .all(|(s, v)| e.get(s).map(|ev| ev == v).unwrap_or(false))
        }))
    }
}
