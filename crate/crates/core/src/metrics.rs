//! Session-level and corpus-level evaluation: requested-information
//! recall/precision/F1, booking match rate, task success, turn-count
//! distributions and their KL divergence.
//!
//! Success follows the standard task-oriented convention: every
//! requested slot answered (or nothing requested) and every wanted
//! booking grounded to an entity satisfying the final constraints (or
//! nothing to book). Precision does not enter success; it only measures
//! how much the system over-informs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dialog::Session;
use crate::domain::{Bundle, Intent};
use crate::error::{GdplError, Result};
use crate::simulator::UNAVAILABLE;

/// Per-session evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    /// Requested (domain, slot) pairs.
    pub requested: usize,
    /// Requested pairs the system answered with a usable value.
    pub answered: usize,
    /// Distinct usable requestable informs the system issued.
    pub informed: usize,
    /// Booking domains in the goal.
    pub bookings: usize,
    /// Bookings grounded to an entity matching the final constraints.
    pub matched: usize,
    pub success: bool,
    pub turns: usize,
}

impl SessionMetrics {
    pub fn recall(&self) -> f64 {
        if self.requested == 0 {
            1.0
        } else {
            self.answered as f64 / self.requested as f64
        }
    }

    pub fn precision(&self) -> f64 {
        if self.informed == 0 {
            1.0
        } else {
            self.answered as f64 / self.informed as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn match_rate(&self) -> Option<f64> {
        if self.bookings == 0 {
            None
        } else {
            Some(self.matched as f64 / self.bookings as f64)
        }
    }
}

/// Evaluate one session against its goal.
pub fn evaluate_session(bundle: &Bundle, session: &Session) -> Result<SessionMetrics> {
    let mut requested: BTreeSet<(String, String)> = BTreeSet::new();
    let mut answered_set: BTreeSet<(String, String)> = BTreeSet::new();
    let mut informed_set: BTreeSet<(String, String)> = BTreeSet::new();

    for turn in &session.turns {
        for act in &turn.user_acts {
            if act.intent == Intent::Request {
                if let Some(spec) = bundle.ontology.domain(&act.domain) {
                    if spec.slot(&act.slot).map(|s| s.requestable).unwrap_or(false) {
                        requested.insert((act.domain.clone(), act.slot.clone()));
                    }
                }
            }
        }
        for act in &turn.system_acts {
            if act.intent != Intent::Inform || act.value == UNAVAILABLE {
                continue;
            }
            if let Some(spec) = bundle.ontology.domain(&act.domain) {
                if spec.slot(&act.slot).map(|s| s.requestable).unwrap_or(false) {
                    let key = (act.domain.clone(), act.slot.clone());
                    informed_set.insert(key.clone());
                    if requested.contains(&key) {
                        answered_set.insert(key);
                    }
                }
            }
        }
    }
    // A request issued after its answer still counts once answered at
    // any later point; sweep once more for early informs.
    for key in &requested {
        if informed_set.contains(key) {
            answered_set.insert(key.clone());
        }
    }

    let booking_domains: Vec<&String> = session
        .goal
        .domains
        .iter()
        .filter(|(_, dg)| !dg.book.is_empty())
        .map(|(name, _)| name)
        .collect();
    let mut matched = 0usize;
    for domain in &booking_domains {
        let Some(entity_idx) = session.booked.get(*domain) else {
            continue;
        };
        // A booking that does not resolve to a database entity scores
        // zero rather than failing the whole evaluation.
        let Some(entity) = bundle
            .database
            .tables
            .get(*domain)
            .and_then(|t| t.get(*entity_idx))
        else {
            continue;
        };
        let constraints = &session.goal.domains[*domain].constraints;
        if constraints
            .iter()
            .all(|(s, v)| entity.get(s).map(|ev| ev == v).unwrap_or(false))
        {
            matched += 1;
        }
    }

    let requested_n = requested.len();
    let answered_n = answered_set.len();
    let bookings = booking_domains.len();
    let success =
        (requested_n == 0 || answered_n == requested_n) && (bookings == 0 || matched == bookings);

    Ok(SessionMetrics {
        requested: requested_n,
        answered: answered_n,
        informed: informed_set.len(),
        bookings,
        matched,
        success,
        turns: session.exchanges(),
    })
}

/// Corpus-level aggregation. Recall/precision/F1 are micro-averaged
/// over requested/informed pairs from sessions that request anything
/// (the inform metric is absent for sessions without requests); match
/// rate is averaged over goal booking domains.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub sessions: usize,
    pub success_rate: f64,
    pub inform_recall: f64,
    pub inform_precision: f64,
    pub inform_f1: f64,
    pub match_rate: f64,
    pub mean_turns: f64,
    /// exchange count -> number of sessions.
    pub turn_histogram: BTreeMap<usize, usize>,
}

pub fn aggregate(per_session: &[SessionMetrics]) -> Result<AggregateMetrics> {
    if per_session.is_empty() {
        return Err(GdplError::Validation("no sessions to aggregate".into()));
    }
    let n = per_session.len();
    let asked: Vec<&SessionMetrics> =
        per_session.iter().filter(|m| m.requested > 0).collect();
    let requested: usize = asked.iter().map(|m| m.requested).sum();
    let answered: usize = asked.iter().map(|m| m.answered).sum();
    let informed: usize = asked.iter().map(|m| m.informed).sum();
    let recall = if requested == 0 {
        1.0
    } else {
        answered as f64 / requested as f64
    };
    let precision = if informed == 0 {
        1.0
    } else {
        answered as f64 / informed as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    let bookings: usize = per_session.iter().map(|m| m.bookings).sum();
    let matched: usize = per_session.iter().map(|m| m.matched).sum();
    let match_rate = if bookings == 0 {
        1.0
    } else {
        matched as f64 / bookings as f64
    };

    let mut histogram = BTreeMap::new();
    for m in per_session {
        *histogram.entry(m.turns).or_insert(0usize) += 1;
    }

    Ok(AggregateMetrics {
        sessions: n,
        success_rate: per_session.iter().filter(|m| m.success).count() as f64 / n as f64,
        inform_recall: recall,
        inform_precision: precision,
        inform_f1: f1,
        match_rate,
        mean_turns: per_session.iter().map(|m| m.turns).sum::<usize>() as f64 / n as f64,
        turn_histogram: histogram,
    })
}

impl AggregateMetrics {
    /// Share of dialogs shorter than 3 exchanges.
    pub fn short_dialog_rate(&self) -> f64 {
        self.histogram_share(|t| t < 3)
    }

    /// Share of dialogs longer than 11 exchanges.
    pub fn long_dialog_rate(&self) -> f64 {
        self.histogram_share(|t| t > 11)
    }

    fn histogram_share(&self, pred: impl Fn(usize) -> bool) -> f64 {
        let hits: usize = self
            .turn_histogram
            .iter()
            .filter(|(t, _)| pred(**t))
            .map(|(_, c)| c)
            .sum();
        hits as f64 / self.sessions as f64
    }
}

/// Mean session return within one group.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean_return: f64,
}

fn group(pairs: impl Iterator<Item = f64>) -> GroupStats {
    let mut count = 0usize;
    let mut sum = 0.0;
    for r in pairs {
        count += 1;
        sum += r;
    }
    GroupStats {
        count,
        mean_return: if count == 0 { 0.0 } else { sum / count as f64 },
    }
}

/// Session returns split by whether each metric reached its full
/// score, skipping sessions where the metric is absent. Used to check
/// that the learned reward separates good sessions from bad ones.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReturnReport {
    pub inform_full: GroupStats,
    pub inform_other: GroupStats,
    pub match_full: GroupStats,
    pub match_other: GroupStats,
    pub success_full: GroupStats,
    pub success_other: GroupStats,
}

pub fn return_report(per_session: &[SessionMetrics], returns: &[f64]) -> Result<ReturnReport> {
    if per_session.len() != returns.len() {
        return Err(GdplError::Validation(format!(
            "return report misalignment: {} sessions vs {} returns",
            per_session.len(),
            returns.len()
        )));
    }
    let pick = |keep: &dyn Fn(&SessionMetrics) -> Option<bool>, want: bool| {
        group(
            per_session
                .iter()
                .zip(returns)
                .filter_map(|(m, r)| (keep(m)? == want).then_some(*r)),
        )
    };
    let inform = |m: &SessionMetrics| (m.requested > 0).then(|| m.answered == m.requested && m.informed == m.answered);
    let booked = |m: &SessionMetrics| (m.bookings > 0).then(|| m.matched == m.bookings);
    let success = |m: &SessionMetrics| Some(m.success);
    Ok(ReturnReport {
        inform_full: pick(&inform, true),
        inform_other: pick(&inform, false),
        match_full: pick(&booked, true),
        match_other: pick(&booked, false),
        success_full: pick(&success, true),
        success_other: pick(&success, false),
    })
}

/// KL divergence between two turn-count histograms over the support
/// 1..=max_turns, with add-one smoothing on both sides.
pub fn kl_turn_distribution(
    p_hist: &BTreeMap<usize, usize>,
    q_hist: &BTreeMap<usize, usize>,
    max_turns: usize,
) -> Result<f64> {
    for hist in [p_hist, q_hist] {
        if let Some(t) = hist.keys().find(|t| **t == 0 || **t > max_turns) {
            return Err(GdplError::Validation(format!(
                "turn histogram entry {t} outside 1..={max_turns}"
            )));
        }
    }
    let total = |h: &BTreeMap<usize, usize>| h.values().sum::<usize>() as f64;
    let (np, nq) = (total(p_hist), total(q_hist));
    let k = max_turns as f64;
    let mut kl = 0.0;
    for t in 1..=max_turns {
        let p = (p_hist.get(&t).copied().unwrap_or(0) as f64 + 1.0) / (np + k);
        let q = (q_hist.get(&t).copied().unwrap_or(0) as f64 + 1.0) / (nq + k);
        kl += p * (p / q).ln();
    }
    Ok(kl)
}
