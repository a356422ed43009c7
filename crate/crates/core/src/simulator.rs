//! Agenda-based user simulator.
//!
//! The simulator compiles a user goal into an ordered agenda (per
//! domain: constraint informs, then requests, then booking informs),
//! emits a bounded number of same-domain acts per turn, re-asks
//! requests the system leaves unanswered, and swaps to the final
//! constraints when the system reports no match for an initially
//! unsatisfiable goal. It ends the dialog with `bye` exactly when its
//! agenda is exhausted, every issued request has been answered and every
//! wanted booking is confirmed.
//!
//! Patience: a user turn that only repeats itself (re-asked requests,
//! booking reminders, filler acks) while the system made no progress
//! costs one unit; once `patience` units are gone the user may abandon
//! the dialog. Any new material or any system progress resets the
//! count.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::{DialogAct, Intent, UserGoal, GENERAL_DOMAIN, NO_SLOT};
use crate::error::{GdplError, Result};
use crate::rng::Rng;

/// Value the engine substitutes when it must answer a request without a
/// matching entity; the simulator does not accept it as an answer.
pub const UNAVAILABLE: &str = "unavailable";
/// Value carried by request acts.
pub const REQUEST_VALUE: &str = "?";

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulatorConfig {
    /// Hard cap on user/system exchanges, enforced by the dialog engine.
    pub max_turns: usize,
    /// Maximum same-domain acts the user utters per turn.
    pub max_acts_per_turn: usize,
    /// Unhelpful system turns tolerated before the user may abandon.
    pub patience: usize,
    /// Probability of abandoning once patience is exhausted.
    pub abandon_prob: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            max_turns: 40,
            max_acts_per_turn: 3,
            patience: 3,
            abandon_prob: 1.0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_turns == 0 {
            return Err(GdplError::Validation("max_turns must be positive".into()));
        }
        if self.max_acts_per_turn == 0 {
            return Err(GdplError::Validation(
                "max_acts_per_turn must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.abandon_prob) {
            return Err(GdplError::Validation(format!(
                "abandon_prob must lie in [0,1], got {}",
                self.abandon_prob
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum AgendaItem {
    Inform {
        domain: String,
        slot: String,
        value: String,
    },
    Request {
        domain: String,
        slot: String,
        /// True when this is a repeat of an unanswered request.
        reask: bool,
    },
}

impl AgendaItem {
    fn domain(&self) -> &str {
        match self {
            AgendaItem::Inform { domain, .. } | AgendaItem::Request { domain, .. } => domain,
        }
    }

    /// Same kind, domain and slot. Slot names are unique within a
    /// domain across regular and booking slots, so this identifies an
    /// item regardless of value or repeat status.
    fn matches(&self, other: &AgendaItem) -> bool {
        match (self, other) {
            (
                AgendaItem::Inform { domain, slot, .. },
                AgendaItem::Inform {
                    domain: d2,
                    slot: s2,
                    ..
                },
            )
            | (
                AgendaItem::Request { domain, slot, .. },
                AgendaItem::Request {
                    domain: d2,
                    slot: s2,
                    ..
                },
            ) => domain == d2 && slot == s2,
            _ => false,
        }
    }

    /// A repeat carries no new information toward the goal.
    fn fresh(&self) -> bool {
        match self {
            AgendaItem::Inform { .. } => true,
            AgendaItem::Request { reask, .. } => !reask,
        }
    }

    fn to_act(&self) -> DialogAct {
        match self {
            AgendaItem::Inform {
                domain,
                slot,
                value,
            } => DialogAct::new(domain.clone(), Intent::Inform, slot.clone(), value.clone()),
            AgendaItem::Request { domain, slot, .. } => {
                DialogAct::new(domain.clone(), Intent::Request, slot.clone(), REQUEST_VALUE)
            }
        }
    }
}

/// Why the user ended the dialog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserEnd {
    /// Goal fully serviced; the user said bye content.
    Satisfied,
    /// Patience ran out.
    Abandoned,
}

/// One user turn.
#[derive(Clone, Debug)]
pub struct UserTurn {
    pub acts: Vec<DialogAct>,
    pub end: Option<UserEnd>,
}

pub struct UserSim {
    config: SimulatorConfig,
    goal: UserGoal,
    agenda: VecDeque<AgendaItem>,
    /// Requests issued and not yet answered.
    pending: BTreeSet<(String, String)>,
    /// Booking domains still awaiting confirmation.
    awaiting_book: BTreeSet<String>,
    /// Booking info conveyed so far, per domain.
    conveyed_book: BTreeMap<String, BTreeSet<String>>,
    /// True while the failed constraint set is being pursued.
    failed_active: bool,
    started: bool,
    terminal: bool,
    /// Whether the previous user turn said anything new (as opposed to
    /// only repeating unanswered requests or reminders).
    fresh_last_turn: bool,
    non_progress: usize,
    turns: usize,
}

impl UserSim {
    pub fn new(goal: UserGoal, config: SimulatorConfig) -> Result<UserSim> {
        config.validate()?;
        let mut sim = UserSim {
            config,
            failed_active: goal.failed.is_some(),
            goal,
            agenda: VecDeque::new(),
            pending: BTreeSet::new(),
            awaiting_book: BTreeSet::new(),
            conveyed_book: BTreeMap::new(),
            started: false,
            terminal: false,
            fresh_last_turn: true,
            non_progress: 0,
            turns: 0,
        };
        sim.build_agenda();
        Ok(sim)
    }

    pub fn goal(&self) -> &UserGoal {
        &self.goal
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn turns(&self) -> usize {
        self.turns
    }

    /// Constraints the user is pursuing right now for `domain`.
    pub fn active_constraints(&self, domain: &str) -> &BTreeMap<String, String> {
        if self.failed_active {
            if let Some(f) = &self.goal.failed {
                if f.domain == domain {
                    return &f.constraints;
                }
            }
        }
        &self.goal.domains[domain].constraints
    }

    fn build_agenda(&mut self) {
        for name in self.goal.domain_order.clone() {
            let constraints = self.active_constraints(&name).clone();
            for (slot, value) in constraints {
                self.agenda.push_back(AgendaItem::Inform {
                    domain: name.clone(),
                    slot,
                    value,
                });
            }
            let dg = &self.goal.domains[&name];
            for slot in &dg.requests {
                self.agenda.push_back(AgendaItem::Request {
                    domain: name.clone(),
                    slot: slot.clone(),
                    reask: false,
                });
            }
            for (slot, value) in &dg.book {
                self.agenda.push_back(AgendaItem::Inform {
                    domain: name.clone(),
                    slot: slot.clone(),
                    value: value.clone(),
                });
            }
            if !dg.book.is_empty() {
                self.awaiting_book.insert(name.clone());
            }
        }
    }

    /// Open the dialog: the user speaks first.
    pub fn first_turn(&mut self) -> Result<UserTurn> {
        if self.started {
            return Err(GdplError::Usage("first_turn called twice".into()));
        }
        self.started = true;
        self.turns = 1;
        Ok(UserTurn {
            acts: self.pop_turn(),
            end: None,
        })
    }

    /// React to a system turn.
    pub fn step(&mut self, system_acts: &[DialogAct], rng: &mut Rng) -> Result<UserTurn> {
        if !self.started {
            return Err(GdplError::Usage("step called before first_turn".into()));
        }
        if self.terminal {
            return Err(GdplError::Usage("step called on a finished dialog".into()));
        }
        self.turns += 1;

        let progress = self.absorb(system_acts);

        if self.satisfied() {
            self.terminal = true;
            return Ok(UserTurn {
                acts: vec![bye_act()],
                end: Some(UserEnd::Satisfied),
            });
        }

        // A turn that only repeated itself counts toward lost patience.
        let stalled = !self.fresh_last_turn;
        // Re-ask unanswered requests before drawing new agenda items.
        for (domain, slot) in self.pending.clone().into_iter().rev() {
            let item = AgendaItem::Request {
                domain,
                slot,
                reask: true,
            };
            if !self.agenda.iter().any(|i| i.matches(&item)) {
                self.agenda.push_front(item);
            }
        }

        if progress || !stalled {
            self.non_progress = 0;
        } else {
            self.non_progress += 1;
            if self.non_progress >= self.config.patience
                && rng.gen_bool(self.config.abandon_prob)
            {
                self.terminal = true;
                return Ok(UserTurn {
                    acts: vec![bye_act()],
                    end: Some(UserEnd::Abandoned),
                });
            }
        }

        let mut acts = self.pop_turn();
        if acts.is_empty() {
            // Agenda drained but a booking is still outstanding: remind
            // the system with one booking slot value.
            if let Some(domain) = self.awaiting_book.iter().next().cloned() {
                if let Some((slot, value)) = self.goal.domains[&domain].book.iter().next() {
                    acts.push(DialogAct::new(
                        domain.clone(),
                        Intent::Inform,
                        slot.clone(),
                        value.clone(),
                    ));
                }
            }
        }
        if acts.is_empty() {
            // Nothing left to add; nudge the system.
            acts.push(DialogAct::delex(GENERAL_DOMAIN, Intent::Ack, NO_SLOT));
        }
        Ok(UserTurn { acts, end: None })
    }

    /// Process system acts; returns true when anything moved the goal
    /// forward.
    fn absorb(&mut self, system_acts: &[DialogAct]) -> bool {
        let mut progress = false;
        for act in system_acts {
            match act.intent {
                Intent::Inform => {
                    let key = (act.domain.clone(), act.slot.clone());
                    if act.value != UNAVAILABLE && self.pending.remove(&key) {
                        progress = true;
                    }
                }
                Intent::Request => {
                    if let Some(value) = self.value_for(&act.domain, &act.slot) {
                        let item = AgendaItem::Inform {
                            domain: act.domain.clone(),
                            slot: act.slot.clone(),
                            value,
                        };
                        self.agenda.retain(|i| !i.matches(&item));
                        self.agenda.push_front(item);
                    }
                }
                Intent::Nooffer => {
                    if self.failed_active
                        && self.goal.failed.as_ref().map(|f| f.domain == act.domain) == Some(true)
                    {
                        self.swap_failed();
                        progress = true;
                    }
                }
                Intent::Book => {
                    // A booking only counts once the user has conveyed
                    // every booking slot; premature confirmations are
                    // ignored.
                    let complete = self
                        .goal
                        .domains
                        .get(&act.domain)
                        .map(|dg| {
                            let conveyed = self.conveyed_book.get(&act.domain);
                            dg.book.keys().all(|s| {
                                conveyed.map(|c| c.contains(s)).unwrap_or(false)
                            })
                        })
                        .unwrap_or(false);
                    if complete && self.awaiting_book.remove(&act.domain) {
                        progress = true;
                    }
                }
                Intent::Offer | Intent::Greet | Intent::Bye | Intent::Ack => {}
            }
        }
        progress
    }

    /// Goal value for a slot the system asked about, if the goal has one.
    fn value_for(&self, domain: &str, slot: &str) -> Option<String> {
        let dg = self.goal.domains.get(domain)?;
        if let Some(v) = self.active_constraints(domain).get(slot) {
            return Some(v.clone());
        }
        dg.book.get(slot).cloned()
    }

    /// Replace the failed constraint pursuit with the final one: queued
    /// informs for changed slots are swapped to final values, already
    /// stated ones are re-stated.
    fn swap_failed(&mut self) {
        let failed = self.goal.failed.clone().expect("failed goal present");
        self.failed_active = false;
        let final_constraints = &self.goal.domains[&failed.domain].constraints;
        for (slot, failed_value) in failed.constraints.iter().rev() {
            let final_value = &final_constraints[slot];
            if final_value == failed_value {
                continue;
            }
            let stale = AgendaItem::Inform {
                domain: failed.domain.clone(),
                slot: slot.clone(),
                value: failed_value.clone(),
            };
            self.agenda.retain(|i| !i.matches(&stale));
            self.agenda.push_front(AgendaItem::Inform {
                domain: failed.domain.clone(),
                slot: slot.clone(),
                value: final_value.clone(),
            });
        }
    }

    fn satisfied(&self) -> bool {
        self.agenda.is_empty() && self.pending.is_empty() && self.awaiting_book.is_empty()
    }

    /// Up to `max_acts_per_turn` same-domain items off the agenda front.
    /// Records whether anything popped was new material.
    fn pop_turn(&mut self) -> Vec<DialogAct> {
        let mut acts = Vec::new();
        self.fresh_last_turn = false;
        let Some(first) = self.agenda.pop_front() else {
            return acts;
        };
        let domain = first.domain().to_string();
        self.fresh_last_turn |= first.fresh();
        self.note_item(&first);
        acts.push(first.to_act());
        while acts.len() < self.config.max_acts_per_turn {
            let same = self
                .agenda
                .front()
                .map(|i| i.domain() == domain)
                .unwrap_or(false);
            if !same {
                break;
            }
            let item = self.agenda.pop_front().expect("front checked");
            self.fresh_last_turn |= item.fresh();
            self.note_item(&item);
            acts.push(item.to_act());
        }
        acts
    }

    fn note_item(&mut self, item: &AgendaItem) {
        match item {
            AgendaItem::Request { domain, slot, .. } => {
                self.pending.insert((domain.clone(), slot.clone()));
            }
            AgendaItem::Inform { domain, slot, .. } => {
                if self
                    .goal
                    .domains
                    .get(domain)
                    .map(|d| d.book.contains_key(slot))
                    .unwrap_or(false)
                {
                    self.conveyed_book
                        .entry(domain.clone())
                        .or_default()
                        .insert(slot.clone());
                }
            }
        }
    }
}

fn bye_act() -> DialogAct {
    DialogAct::delex(GENERAL_DOMAIN, Intent::Bye, NO_SLOT)
}
