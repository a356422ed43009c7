//! Scripted expert system policy and the demonstration corpus it
//! produces.
//!
//! The expert reads the belief state directly: it offers or reports
//! no-match when constraints change, answers open requests from the
//! matching entity, steers bookings by requesting missing booking slots
//! and confirming when everything is in place. A noise knob drops each
//! intended act independently and injects redundant informs, so noisy
//! demonstrations mislay answers, offers and booking moves alike and
//! carry realistic recall/precision rather than being perfectly clean.
//!
//! Corpus files are line-delimited JSON: one header object, then one
//! session per line.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dialog::{DialogEngine, Session, SystemActor, SystemDecision, TurnView};
use crate::domain::{sample_goal, Bundle, DialogAct, Intent, NO_SLOT};
use crate::error::{GdplError, Result};
use crate::metrics::{aggregate, evaluate_session, AggregateMetrics};
use crate::rng::{self, Rng};
use crate::simulator::SimulatorConfig;
use crate::tracker::state_dim;

/// Hand-written system policy used to produce demonstrations.
pub struct ExpertPolicy {
    /// Per-act drop probability; redundant informs are injected at the
    /// same rate. Dropped acts are usually retried a turn later because
    /// the belief state still calls for them, so noise mostly lengthens
    /// sessions, with the occasional abandonment when the user runs out
    /// of patience.
    pub epsilon: f64,
}

impl ExpertPolicy {
    pub fn new(epsilon: f64) -> Result<ExpertPolicy> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(GdplError::Validation(format!(
                "expert epsilon must lie in [0,1], got {epsilon}"
            )));
        }
        Ok(ExpertPolicy { epsilon })
    }
}

impl SystemActor for ExpertPolicy {
    fn act(&mut self, view: &TurnView<'_>, rng: &mut Rng) -> Result<SystemDecision> {
        let ontology = &view.bundle.ontology;
        let db = &view.bundle.database;
        let belief = view.belief;
        let mut acts: Vec<DialogAct> = Vec::new();

        // Domains the user touched this turn, in order of first mention.
        let mut touched: Vec<&str> = Vec::new();
        let mut constrained: BTreeSet<&str> = BTreeSet::new();
        let mut booking_touched: BTreeSet<&str> = BTreeSet::new();
        let mut user_bye = false;
        for act in view.user_acts {
            match act.intent {
                Intent::Bye => user_bye = true,
                Intent::Inform | Intent::Request => {
                    let Some(spec) = ontology.domain(&act.domain) else {
                        continue;
                    };
                    if !touched.contains(&act.domain.as_str()) {
                        touched.push(&act.domain);
                    }
                    if act.intent == Intent::Inform {
                        if spec.slot(&act.slot).map(|s| s.informable).unwrap_or(false) {
                            constrained.insert(&act.domain);
                        } else if spec.book_slot(&act.slot).is_some() {
                            booking_touched.insert(&act.domain);
                        }
                    }
                }
                _ => {}
            }
        }

        // React to constraint changes with an offer or a no-match report.
        for domain in &touched {
            if !constrained.contains(domain) {
                continue;
            }
            let count = db.query_count(ontology, domain, &belief.constraints_for(domain))?;
            let intent = if count == 0 { Intent::Nooffer } else { Intent::Offer };
            acts.push(DialogAct::delex(*domain, intent, NO_SLOT));
        }

        // Answer every open request backed by a matching entity.
        for (domain, slots) in &belief.pending {
            let count = db.query_count(ontology, domain, &belief.constraints_for(domain))?;
            if count == 0 {
                continue;
            }
            for slot in slots {
                acts.push(DialogAct::delex(domain.clone(), Intent::Inform, slot.clone()));
            }
        }

        // Drive bookings forward.
        for domain in &booking_touched {
            let spec = ontology.require_domain(domain)?;
            if belief.booked.contains(*domain) {
                continue;
            }
            if belief.book_ready(ontology, domain) {
                if db.query_count(ontology, domain, &belief.constraints_for(domain))? > 0 {
                    acts.push(DialogAct::delex(*domain, Intent::Book, NO_SLOT));
                }
            } else {
                let info = belief.book_info.get(*domain);
                if let Some(missing) = spec
                    .book_slots
                    .iter()
                    .find(|bs| info.map(|m| !m.contains_key(&bs.name)).unwrap_or(true))
                {
                    acts.push(DialogAct::delex(*domain, Intent::Request, missing.name.clone()));
                }
            }
        }

        if user_bye {
            acts.push(DialogAct::delex(
                crate::domain::GENERAL_DOMAIN,
                Intent::Bye,
                NO_SLOT,
            ));
        }

        if self.epsilon > 0.0 {
            acts.retain(|_| !rng.gen_bool(self.epsilon));
        }

        // Redundant informs: answer things nobody asked about, at a rate
        // tied to the noise knob.
        if !user_bye && self.epsilon > 0.0 && rng.gen_bool(self.epsilon) {
            let pool: Vec<DialogAct> = touched
                .iter()
                .filter_map(|d| ontology.domain(d))
                .flat_map(|spec| {
                    spec.requestable()
                        .map(|s| DialogAct::delex(spec.name.clone(), Intent::Inform, s.name.clone()))
                })
                .filter(|a| !acts.contains(a))
                .collect();
            if let Some(extra) = pool.choose(rng) {
                let count =
                    db.query_count(ontology, &extra.domain, &belief.constraints_for(&extra.domain))?;
                if count > 0 {
                    acts.push(extra.clone());
                }
            }
        }

        if acts.is_empty() {
            acts.push(DialogAct::delex(
                crate::domain::GENERAL_DOMAIN,
                Intent::Ack,
                NO_SLOT,
            ));
        }

        let act_indices = acts
            .iter()
            .map(|a| view.bundle.ontology.act_to_index(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(SystemDecision {
            act_indices,
            log_prob: 0.0,
            value: 0.0,
        })
    }
}

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

/// First line of a corpus file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub schema_version: u32,
    pub sessions: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Hash of the world bundle the corpus was generated against.
    pub bundle_hash: u64,
    pub stats: AggregateMetrics,
}

/// In-memory demonstration corpus.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub header: CorpusHeader,
    pub sessions: Vec<Session>,
}

/// Generate `n` expert demonstrations with fresh goals.
pub fn generate_corpus(
    bundle: &Bundle,
    sim_config: SimulatorConfig,
    n: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Corpus> {
    if n == 0 {
        return Err(GdplError::Validation("corpus size must be positive".into()));
    }
    let engine = DialogEngine::new(bundle, sim_config)?;
    let mut expert = ExpertPolicy::new(epsilon)?;
    let mut sessions = Vec::with_capacity(n);
    let mut per_session = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = rng::stream_indexed(seed, "corpus/session", i as u64);
        let goal = sample_goal(&bundle.ontology, &bundle.database, &bundle.goal_stats, &mut r)?;
        let session = engine.run_episode(goal, &mut expert, &mut r)?;
        per_session.push(evaluate_session(bundle, &session)?);
        sessions.push(session);
    }
    let stats = aggregate(&per_session)?;
    Ok(Corpus {
        header: CorpusHeader {
            schema_version: CORPUS_SCHEMA_VERSION,
            sessions: n,
            seed,
            epsilon,
            bundle_hash: bundle.content_hash(),
            stats,
        },
        sessions,
    })
}

impl Corpus {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| GdplError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut line = serde_json::to_string(&self.header)
            .map_err(|e| GdplError::Runtime(format!("corpus header serialization: {e}")))?;
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| GdplError::io(path, e))?;
        for s in &self.sessions {
            let mut line = serde_json::to_string(s)
                .map_err(|e| GdplError::Runtime(format!("session serialization: {e}")))?;
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(|e| GdplError::io(path, e))?;
        }
        w.flush().map_err(|e| GdplError::io(path, e))
    }

    /// Load and cross-check a corpus against the bundle it claims to
    /// belong to.
    pub fn load(path: &Path, bundle: &Bundle) -> Result<Corpus> {
        let file = std::fs::File::open(path).map_err(|e| GdplError::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| GdplError::Validation(format!("{}: empty corpus", path.display())))?
            .map_err(|e| GdplError::io(path, e))?;
        let header: CorpusHeader = serde_json::from_str(&header_line).map_err(|e| {
            GdplError::Validation(format!("{}: malformed corpus header: {e}", path.display()))
        })?;
        if header.schema_version != CORPUS_SCHEMA_VERSION {
            return Err(GdplError::Validation(format!(
                "unsupported corpus schema_version {} (expected {CORPUS_SCHEMA_VERSION})",
                header.schema_version
            )));
        }
        if header.bundle_hash != bundle.content_hash() {
            return Err(GdplError::Validation(
                "corpus was generated against a different world bundle".into(),
            ));
        }
        let mut sessions = Vec::with_capacity(header.sessions);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| GdplError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let session: Session = serde_json::from_str(&line).map_err(|e| {
                GdplError::Validation(format!(
                    "{}: malformed session on line {}: {e}",
                    path.display(),
                    i + 2
                ))
            })?;
            sessions.push(session);
        }
        if sessions.len() != header.sessions {
            return Err(GdplError::Validation(format!(
                "corpus header promises {} sessions, file holds {}",
                header.sessions,
                sessions.len()
            )));
        }
        let corpus = Corpus { header, sessions };
        corpus.verify(bundle)?;
        Ok(corpus)
    }

    /// Structural integrity: states decode, act indices are in range,
    /// goals validate.
    pub fn verify(&self, bundle: &Bundle) -> Result<()> {
        let dim = state_dim(&bundle.ontology) as u32;
        let vocab = bundle.ontology.vocab_size();
        for (i, s) in self.sessions.iter().enumerate() {
            s.goal.validate(&bundle.ontology, &bundle.database).map_err(|e| {
                GdplError::Validation(format!("corpus session {i}: {e}"))
            })?;
            if s.turns.is_empty() {
                return Err(GdplError::Validation(format!(
                    "corpus session {i} has no turns"
                )));
            }
            for (t, turn) in s.turns.iter().enumerate() {
                if turn.state.iter().any(|idx| *idx >= dim) {
                    return Err(GdplError::Validation(format!(
                        "corpus session {i} turn {t}: state index out of range"
                    )));
                }
                if turn.act_indices.iter().any(|idx| *idx >= vocab) {
                    return Err(GdplError::Validation(format!(
                        "corpus session {i} turn {t}: act index out of range"
                    )));
                }
                let is_last = t + 1 == s.turns.len();
                if turn.terminal != is_last {
                    return Err(GdplError::Validation(format!(
                        "corpus session {i} turn {t}: terminal flag out of place"
                    )));
                }
            }
        }
        Ok(())
    }

    /// All (state, act set) pairs, flattened; used by imitation
    /// pretraining and as the demonstration pool for reward estimation.
    pub fn state_action_pairs(&self) -> Vec<(&[u32], &[usize])> {
        self.sessions
            .iter()
            .flat_map(|s| {
                s.turns
                    .iter()
                    .map(|t| (t.state.as_slice(), t.act_indices.as_slice()))
            })
            .collect()
    }
}
