//! Rule-based belief tracking and state vectorization.
//!
//! The tracker accumulates user constraints, open requests and booking
//! information from the act stream; the policy state vector stacks the
//! current user acts, the previous system acts, flattened belief flags
//! and bucketed database match counts. See docs/state-layout.md for the
//! exact layout.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{DialogAct, EntityDb, Intent, Ontology};
use crate::error::Result;

/// Match-count buckets: 0, 1, 2-3, >=4.
pub const QUERY_BUCKETS: usize = 4;

pub fn query_bucket(count: usize) -> usize {
    match count {
        0 => 0,
        1 => 1,
        2..=3 => 2,
        _ => 3,
    }
}

/// Accumulated dialog state from the system's point of view.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefState {
    /// domain -> informable slot -> latest user-stated value.
    pub constraints: BTreeMap<String, BTreeMap<String, String>>,
    /// domain -> requestable slots the user asked for and the system has
    /// not answered yet.
    pub pending: BTreeMap<String, BTreeSet<String>>,
    /// domain -> booking slot -> latest user-stated value.
    pub book_info: BTreeMap<String, BTreeMap<String, String>>,
    /// Domains with a confirmed booking.
    pub booked: BTreeSet<String>,
    /// Acts that referenced nothing trackable (unknown domain or slot).
    pub ignored_acts: usize,
}

impl BeliefState {
    pub fn new() -> Self {
        BeliefState::default()
    }

    /// Fold one user turn into the belief.
    pub fn observe_user(&mut self, ontology: &Ontology, acts: &[DialogAct]) {
        for act in acts {
            let Some(spec) = ontology.domain(&act.domain) else {
                if act.domain != crate::domain::GENERAL_DOMAIN {
                    self.ignored_acts += 1;
                }
                continue;
            };
            match act.intent {
                Intent::Inform => {
                    if spec.slot(&act.slot).map(|s| s.informable).unwrap_or(false) {
                        self.constraints
                            .entry(act.domain.clone())
                            .or_default()
                            .insert(act.slot.clone(), act.value.clone());
                    } else if spec.book_slot(&act.slot).is_some() {
                        self.book_info
                            .entry(act.domain.clone())
                            .or_default()
                            .insert(act.slot.clone(), act.value.clone());
                    } else {
                        self.ignored_acts += 1;
                    }
                }
                Intent::Request => {
                    if spec.slot(&act.slot).map(|s| s.requestable).unwrap_or(false) {
                        self.pending
                            .entry(act.domain.clone())
                            .or_default()
                            .insert(act.slot.clone());
                    } else {
                        self.ignored_acts += 1;
                    }
                }
                _ => {}
            }
        }
    }

    /// Fold one system turn into the belief.
    pub fn observe_system(&mut self, ontology: &Ontology, acts: &[DialogAct]) {
        for act in acts {
            let Some(spec) = ontology.domain(&act.domain) else {
                if act.domain != crate::domain::GENERAL_DOMAIN {
                    self.ignored_acts += 1;
                }
                continue;
            };
            match act.intent {
                Intent::Inform => {
                    if spec.slot(&act.slot).map(|s| s.requestable).unwrap_or(false) {
                        if let Some(p) = self.pending.get_mut(&act.domain) {
                            p.remove(&act.slot);
                        }
                    }
                }
                Intent::Book => {
                    self.booked.insert(act.domain.clone());
                }
                _ => {}
            }
        }
    }

    pub fn constraints_for(&self, domain: &str) -> BTreeMap<String, String> {
        self.constraints.get(domain).cloned().unwrap_or_default()
    }

    pub fn pending_for(&self, domain: &str) -> BTreeSet<String> {
        self.pending.get(domain).cloned().unwrap_or_default()
    }

    /// True when every booking slot of the domain has a value.
    pub fn book_ready(&self, ontology: &Ontology, domain: &str) -> bool {
        let Some(spec) = ontology.domain(domain) else {
            return false;
        };
        if !spec.bookable() {
            return false;
        }
        let info = self.book_info.get(domain);
        spec.book_slots
            .iter()
            .all(|bs| info.map(|m| m.contains_key(&bs.name)).unwrap_or(false))
    }
}

/// Dimensionality of the policy state vector for this ontology.
pub fn state_dim(ontology: &Ontology) -> usize {
    let v = ontology.vocab_size();
    let belief: usize = ontology
        .domains
        .iter()
        .map(|d| {
            d.informable().count() + d.book_slots.len() + d.requestable().count() + 1
        })
        .sum();
    2 * v + belief + QUERY_BUCKETS * ontology.domains.len()
}

/// Build the policy state vector for the current turn.
///
/// `user_acts` are this turn's user acts, `prev_system_acts` the acts the
/// system emitted on the previous turn (empty on the first turn). Both
/// may be lexicalized; indexing uses their delexicalized form.
pub fn vectorize(
    ontology: &Ontology,
    db: &EntityDb,
    belief: &BeliefState,
    user_acts: &[DialogAct],
    prev_system_acts: &[DialogAct],
) -> Result<Vec<f64>> {
    let v = ontology.vocab_size();
    let mut out = vec![0.0; state_dim(ontology)];

    for act in user_acts {
        if let Ok(i) = ontology.act_to_index(&act.delexicalized()) {
            out[i] = 1.0;
        }
    }
    for act in prev_system_acts {
        if let Ok(i) = ontology.act_to_index(&act.delexicalized()) {
            out[v + i] = 1.0;
        }
    }

    let mut k = 2 * v;
    for d in &ontology.domains {
        let constraints = belief.constraints.get(&d.name);
        for s in d.informable() {
            if constraints.map(|m| m.contains_key(&s.name)).unwrap_or(false) {
                out[k] = 1.0;
            }
            k += 1;
        }
        let book = belief.book_info.get(&d.name);
        for bs in &d.book_slots {
            if book.map(|m| m.contains_key(&bs.name)).unwrap_or(false) {
                out[k] = 1.0;
            }
            k += 1;
        }
        let pending = belief.pending.get(&d.name);
        for s in d.requestable() {
            if pending.map(|p| p.contains(&s.name)).unwrap_or(false) {
                out[k] = 1.0;
            }
            k += 1;
        }
        if belief.booked.contains(&d.name) {
            out[k] = 1.0;
        }
        k += 1;
    }

    for d in &ontology.domains {
        let constraints = belief.constraints_for(&d.name);
        let count = db.query_count(ontology, &d.name, &constraints)?;
        out[k + query_bucket(count)] = 1.0;
        k += QUERY_BUCKETS;
    }
    debug_assert_eq!(k, out.len());
    Ok(out)
}
