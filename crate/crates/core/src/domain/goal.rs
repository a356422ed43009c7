//! User goals and their frequency-driven sampler.
//!
//! A goal lists, per involved domain, the constraints the user will insist
//! on, the slots they will ask about, and (optionally) a booking with
//! concrete booking-slot values. Goals are sampled entity-first so the
//! final constraint set is always satisfiable against the database; an
//! optional failed variant perturbs exactly one constraint value so that
//! its query returns no entity, which makes the user change their mind
//! mid-dialog when the system reports no match.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::{EntityDb, Ontology};
use crate::error::{GdplError, Result};
use crate::rng::Rng;

/// Frequency statistics steering the goal sampler.
///
/// Frequencies are inclusion probabilities in [0, 1]. Domain selection
/// weight is the sum of a domain's constraint frequencies, so a domain
/// whose slots never occur is never chosen.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoalStats {
    /// domain -> informable slot -> probability the goal constrains it.
    pub constraint_freq: BTreeMap<String, BTreeMap<String, f64>>,
    /// domain -> requestable slot -> probability the goal requests it.
    pub request_freq: BTreeMap<String, BTreeMap<String, f64>>,
    /// domain -> probability the goal includes a booking.
    pub book_rate: BTreeMap<String, f64>,
    /// Mixture weights for goals spanning 1, 2, ... domains.
    pub domain_count_weights: Vec<f64>,
    /// Probability of attaching a failed (initially unsatisfiable) variant.
    pub p_fail: f64,
}

impl GoalStats {
    pub fn validate(&self, ontology: &Ontology) -> Result<()> {
        for d in &ontology.domains {
            let cf = self.constraint_freq.get(&d.name).ok_or_else(|| {
                GdplError::Validation(format!("goal stats missing constraint_freq for `{}`", d.name))
            })?;
            for s in d.informable() {
                check_freq(cf.get(&s.name), &d.name, &s.name, "constraint_freq")?;
            }
            let rf = self.request_freq.get(&d.name).ok_or_else(|| {
                GdplError::Validation(format!("goal stats missing request_freq for `{}`", d.name))
            })?;
            for s in d.requestable() {
                check_freq(rf.get(&s.name), &d.name, &s.name, "request_freq")?;
            }
            if d.bookable() {
                let rate = self.book_rate.get(&d.name).copied().unwrap_or(0.0);
                if !(0.0..=1.0).contains(&rate) {
                    return Err(GdplError::Validation(format!(
                        "book_rate for `{}` must lie in [0,1], got {rate}",
                        d.name
                    )));
                }
            }
        }
        if self.domain_count_weights.is_empty()
            || self.domain_count_weights.iter().any(|w| *w < 0.0 || !w.is_finite())
            || self.domain_count_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(GdplError::Validation(
                "domain_count_weights must be nonnegative with a positive sum".into(),
            ));
        }
        if self.domain_count_weights.len() > ontology.domains.len() {
            return Err(GdplError::Validation(format!(
                "domain_count_weights has {} entries but only {} domains exist",
                self.domain_count_weights.len(),
                ontology.domains.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.p_fail) {
            return Err(GdplError::Validation(format!(
                "p_fail must lie in [0,1], got {}",
                self.p_fail
            )));
        }
        Ok(())
    }

    fn domain_weight(&self, domain: &str) -> f64 {
        self.constraint_freq
            .get(domain)
            .map(|m| m.values().sum())
            .unwrap_or(0.0)
    }
}

fn check_freq(freq: Option<&f64>, domain: &str, slot: &str, table: &str) -> Result<()> {
    match freq {
        Some(f) if (0.0..=1.0).contains(f) => Ok(()),
        Some(f) => Err(GdplError::Validation(format!(
            "{table} for `{domain}.{slot}` must lie in [0,1], got {f}"
        ))),
        None => Err(GdplError::Validation(format!(
            "{table} missing entry for `{domain}.{slot}`"
        ))),
    }
}

/// Per-domain part of a user goal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGoal {
    /// Final constraints (the ones the user really wants satisfied).
    pub constraints: BTreeMap<String, String>,
    /// Slots the user will request and expects answered.
    pub requests: BTreeSet<String>,
    /// Booking-slot values; empty when the goal has no booking.
    pub book: BTreeMap<String, String>,
}

/// Initially pursued constraints for one domain that match no entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedGoal {
    pub domain: String,
    pub constraints: BTreeMap<String, String>,
}

/// A complete multi-domain user goal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// Domains in pursuit order.
    pub domain_order: Vec<String>,
    pub domains: BTreeMap<String, DomainGoal>,
    /// When present, the user initially pursues these constraints in
    /// `failed.domain` and falls back to the final ones on a no-match
    /// report.
    pub failed: Option<FailedGoal>,
}

impl UserGoal {
    pub fn validate(&self, ontology: &Ontology, db: &EntityDb) -> Result<()> {
        if self.domain_order.is_empty() {
            return Err(GdplError::Validation("goal involves no domains".into()));
        }
        let order_set: BTreeSet<_> = self.domain_order.iter().collect();
        if order_set.len() != self.domain_order.len() {
            return Err(GdplError::Validation("goal repeats a domain".into()));
        }
        if order_set != self.domains.keys().collect() {
            return Err(GdplError::Validation(
                "goal domain_order and domain table disagree".into(),
            ));
        }
        for (name, dg) in &self.domains {
            let spec = ontology.require_domain(name)?;
            if dg.constraints.is_empty() {
                return Err(GdplError::Validation(format!(
                    "goal domain `{name}` has no constraints"
                )));
            }
            for (slot, value) in &dg.constraints {
                let s = spec.slot(slot).ok_or_else(|| {
                    GdplError::Validation(format!("goal constrains unknown slot `{name}.{slot}`"))
                })?;
                if !s.informable {
                    return Err(GdplError::Validation(format!(
                        "goal constrains non-informable slot `{name}.{slot}`"
                    )));
                }
                if !s.values.contains(value) {
                    return Err(GdplError::Validation(format!(
                        "goal value `{value}` not in declared set of `{name}.{slot}`"
                    )));
                }
            }
            for slot in &dg.requests {
                let s = spec.slot(slot).ok_or_else(|| {
                    GdplError::Validation(format!("goal requests unknown slot `{name}.{slot}`"))
                })?;
                if !s.requestable {
                    return Err(GdplError::Validation(format!(
                        "goal requests non-requestable slot `{name}.{slot}`"
                    )));
                }
            }
            if !dg.book.is_empty() {
                if !spec.bookable() {
                    return Err(GdplError::Validation(format!(
                        "goal books non-bookable domain `{name}`"
                    )));
                }
                for bs in &spec.book_slots {
                    let v = dg.book.get(&bs.name).ok_or_else(|| {
                        GdplError::Validation(format!(
                            "goal booking for `{name}` misses slot `{}`",
                            bs.name
                        ))
                    })?;
                    if !bs.values.contains(v) {
                        return Err(GdplError::Validation(format!(
                            "goal booking value `{v}` not in declared set of `{name}.{}`",
                            bs.name
                        )));
                    }
                }
            }
            // Final constraints must be satisfiable.
            if db.query_count(ontology, name, &dg.constraints)? == 0 {
                return Err(GdplError::Validation(format!(
                    "goal constraints for `{name}` match no entity"
                )));
            }
        }
        if let Some(failed) = &self.failed {
            let dg = self.domains.get(&failed.domain).ok_or_else(|| {
                GdplError::Validation(format!(
                    "failed goal targets `{}` which the goal does not involve",
                    failed.domain
                ))
            })?;
            if failed.constraints == dg.constraints {
                return Err(GdplError::Validation(
                    "failed goal does not differ from the final constraints".into(),
                ));
            }
            if db.query_count(ontology, &failed.domain, &failed.constraints)? != 0 {
                return Err(GdplError::Validation(
                    "failed goal constraints unexpectedly match an entity".into(),
                ));
            }
        }
        Ok(())
    }

    /// Slot count bound used by liveness checks: constraints + requests +
    /// booking slots over all domains.
    pub fn size(&self) -> usize {
        self.domains
            .values()
            .map(|d| d.constraints.len() + d.requests.len() + d.book.len())
            .sum()
    }
}

/// Sample a satisfiable user goal.
///
/// Domain count follows `domain_count_weights` (capped by the number of
/// domains with positive weight); domains are drawn without replacement
/// proportionally to their summed constraint frequencies; constraints are
/// copied from a uniformly chosen anchor entity so the final goal always
/// has a match.
pub fn sample_goal(
    ontology: &Ontology,
    db: &EntityDb,
    stats: &GoalStats,
    rng: &mut Rng,
) -> Result<UserGoal> {
    let mut candidates: Vec<(&str, f64)> = ontology
        .domains
        .iter()
        .map(|d| (d.name.as_str(), stats.domain_weight(&d.name)))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    if candidates.is_empty() {
        return Err(GdplError::Validation(
            "goal stats give every domain zero weight".into(),
        ));
    }

    let max_domains = candidates.len().min(stats.domain_count_weights.len());
    let n_domains = 1 + weighted_choice(&stats.domain_count_weights[..max_domains], rng);

    let mut domain_order = Vec::with_capacity(n_domains);
    for _ in 0..n_domains {
        let weights: Vec<f64> = candidates.iter().map(|(_, w)| *w).collect();
        let pick = weighted_choice(&weights, rng);
        domain_order.push(candidates.remove(pick).0.to_string());
    }

    let mut domains = BTreeMap::new();
    for name in &domain_order {
        let spec = ontology.require_domain(name)?;
        let table = db.tables.get(name).ok_or_else(|| {
            GdplError::Validation(format!("no entity table for domain `{name}`"))
        })?;
        let anchor = &table[rng.gen_range(0..table.len())];
        let cf = &stats.constraint_freq[name];

        let mut constraints = BTreeMap::new();
        for s in spec.informable() {
            if rng.gen_bool(cf[&s.name].min(1.0)) {
                constraints.insert(s.name.clone(), anchor[&s.name].clone());
            }
        }
        if constraints.is_empty() {
            let forced = spec
                .informable()
                .max_by(|a, b| {
                    cf[&a.name]
                        .total_cmp(&cf[&b.name])
                        .then_with(|| b.name.cmp(&a.name))
                })
                .ok_or_else(|| {
                    GdplError::Validation(format!("domain `{name}` has no informable slots"))
                })?;
            constraints.insert(forced.name.clone(), anchor[&forced.name].clone());
        }

        let rf = &stats.request_freq[name];
        let mut requests = BTreeSet::new();
        for s in spec.requestable() {
            if rng.gen_bool(rf[&s.name].min(1.0)) {
                requests.insert(s.name.clone());
            }
        }

        let mut book = BTreeMap::new();
        if spec.bookable() {
            let rate = stats.book_rate.get(name).copied().unwrap_or(0.0);
            if rng.gen_bool(rate) {
                for bs in &spec.book_slots {
                    let v = bs.values[rng.gen_range(0..bs.values.len())].clone();
                    book.insert(bs.name.clone(), v);
                }
            }
        }

        domains.insert(
            name.clone(),
            DomainGoal {
                constraints,
                requests,
                book,
            },
        );
    }

    let failed = if rng.gen_bool(stats.p_fail) {
        sample_failed(ontology, db, &domain_order, &domains, rng)?
    } else {
        None
    };

    let goal = UserGoal {
        domain_order,
        domains,
        failed,
    };
    goal.validate(ontology, db)?;
    Ok(goal)
}

/// Try to build a failed variant: pick a domain and perturb one
/// constraint value so the query comes back empty. Gives up (returns
/// None) when no single-value perturbation empties the query.
fn sample_failed(
    ontology: &Ontology,
    db: &EntityDb,
    domain_order: &[String],
    domains: &BTreeMap<String, DomainGoal>,
    rng: &mut Rng,
) -> Result<Option<FailedGoal>> {
    let mut order: Vec<&String> = domain_order.iter().collect();
    order.shuffle(rng);
    for name in order {
        let spec = ontology.require_domain(name)?;
        let final_constraints = &domains[name].constraints;
        let mut slots: Vec<&String> = final_constraints.keys().collect();
        slots.shuffle(rng);
        for slot in slots {
            let declared = &spec.slot(slot).expect("validated constraint slot").values;
            let current = &final_constraints[slot];
            let mut values: Vec<&String> =
                declared.iter().filter(|v| *v != current).collect();
            values.shuffle(rng);
            for value in values {
                let mut perturbed = final_constraints.clone();
                perturbed.insert(slot.clone(), value.clone());
                if db.query_count(ontology, name, &perturbed)? == 0 {
                    return Ok(Some(FailedGoal {
                        domain: name.clone(),
                        constraints: perturbed,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Index drawn proportionally to `weights` (all nonnegative, positive sum).
fn weighted_choice(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "weighted_choice needs a positive total");
    let mut x = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}
