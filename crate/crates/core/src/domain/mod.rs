//! Multi-domain ontology: domains, slots, the delexicalized dialog-act
//! vocabulary, the entity database with constraint queries, and user-goal
//! sampling statistics.
//!
//! The ontology, database and goal statistics travel together in one
//! human-readable JSON bundle (see [`Bundle`]); the act vocabulary is part
//! of that file, so act indices are stable across runs by construction.

mod goal;
mod synth;

pub use goal::{sample_goal, DomainGoal, FailedGoal, GoalStats, UserGoal};
pub use synth::{synth_bundle, SynthParams};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GdplError, Result};

/// Placeholder standing in for concrete slot values in policy space.
pub const VALUE_PLACEHOLDER: &str = "<count>";
/// Slot name for acts that carry no slot (offer, nooffer, general acts).
pub const NO_SLOT: &str = "none";
/// Pseudo-domain for dialog-level acts (greet, bye, ack).
pub const GENERAL_DOMAIN: &str = "general";

pub const SCHEMA_VERSION: u32 = 1;

/// Communicative intention of a dialog act.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Intent {
    /// Convey a slot value (user constraints, system answers).
    Inform,
    /// Ask for a slot value.
    Request,
    /// No entity matches the current constraints.
    Nooffer,
    /// Present a matching entity.
    Offer,
    /// Confirm a booking.
    Book,
    Greet,
    Bye,
    /// Generic acknowledgement; also the fallback act when a sampled
    /// system action comes out empty.
    Ack,
}

impl Intent {
    pub const ALL: [Intent; 8] = [
        Intent::Inform,
        Intent::Request,
        Intent::Nooffer,
        Intent::Offer,
        Intent::Book,
        Intent::Greet,
        Intent::Bye,
        Intent::Ack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Inform => "inform",
            Intent::Request => "request",
            Intent::Nooffer => "nooffer",
            Intent::Offer => "offer",
            Intent::Book => "book",
            Intent::Greet => "greet",
            Intent::Bye => "bye",
            Intent::Ack => "ack",
        }
    }

    pub fn parse(s: &str) -> Option<Intent> {
        Intent::ALL.into_iter().find(|i| i.as_str() == s)
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A dialog act: (domain, intent, slot type, slot value).
///
/// In policy space the value is always [`VALUE_PLACEHOLDER`]; concrete
/// values appear only at the simulator/evaluator boundary.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DialogAct {
    pub domain: String,
    pub intent: Intent,
    pub slot: String,
    pub value: String,
}

impl DialogAct {
    pub fn new(
        domain: impl Into<String>,
        intent: Intent,
        slot: impl Into<String>,
        value: impl Into<String>,
    ) -> Self {
        DialogAct {
            domain: domain.into(),
            intent,
            slot: slot.into(),
            value: value.into(),
        }
    }

    /// Delexicalized act (value = placeholder).
    pub fn delex(domain: impl Into<String>, intent: Intent, slot: impl Into<String>) -> Self {
        DialogAct::new(domain, intent, slot, VALUE_PLACEHOLDER)
    }

    pub fn is_delex(&self) -> bool {
        self.value == VALUE_PLACEHOLDER
    }

    /// Copy of this act with the value replaced by the placeholder.
    pub fn delexicalized(&self) -> DialogAct {
        DialogAct::delex(self.domain.clone(), self.intent, self.slot.clone())
    }
}

impl fmt::Display for DialogAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{},{},{}]",
            self.domain, self.intent, self.slot, self.value
        )
    }
}

impl Serialize for DialogAct {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.domain, self.intent.as_str(), &self.slot, &self.value).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DialogAct {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (domain, intent, slot, value): (String, String, String, String) =
            Deserialize::deserialize(d)?;
        let intent = Intent::parse(&intent)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown intent `{intent}`")))?;
        Ok(DialogAct {
            domain,
            intent,
            slot,
            value,
        })
    }
}

/// A slot with its declared value set and informable/requestable flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: String,
    pub values: Vec<String>,
    pub informable: bool,
    pub requestable: bool,
}

/// One domain: entity slots plus booking slots (empty for non-bookable
/// domains).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub name: String,
    pub slots: Vec<SlotSpec>,
    #[serde(default)]
    pub book_slots: Vec<SlotSpec>,
}

impl DomainSpec {
    pub fn bookable(&self) -> bool {
        !self.book_slots.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<&SlotSpec> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn book_slot(&self, name: &str) -> Option<&SlotSpec> {
        self.book_slots.iter().find(|s| s.name == name)
    }

    pub fn informable(&self) -> impl Iterator<Item = &SlotSpec> {
        self.slots.iter().filter(|s| s.informable)
    }

    pub fn requestable(&self) -> impl Iterator<Item = &SlotSpec> {
        self.slots.iter().filter(|s| s.requestable)
    }
}

/// The ontology: domain specs plus the persisted, ordered act vocabulary.
#[derive(Debug, Serialize, Deserialize)]
pub struct Ontology {
    pub domains: Vec<DomainSpec>,
    /// Delexicalized vocabulary; position in this list is the act index
    /// used in every action vector. Persisted verbatim.
    pub acts: Vec<DialogAct>,
    #[serde(skip)]
    act_index: OnceLock<BTreeMap<(String, Intent, String), usize>>,
}

impl Ontology {
    /// Build an ontology from domain specs, deriving the act vocabulary.
    pub fn from_domains(domains: Vec<DomainSpec>) -> Result<Ontology> {
        let acts = derive_vocabulary(&domains);
        let ont = Ontology {
            domains,
            acts,
            act_index: OnceLock::new(),
        };
        ont.validate()?;
        Ok(ont)
    }

    pub fn domain(&self, name: &str) -> Option<&DomainSpec> {
        self.domains.iter().find(|d| d.name == name)
    }

    pub fn require_domain(&self, name: &str) -> Result<&DomainSpec> {
        self.domain(name)
            .ok_or_else(|| GdplError::Validation(format!("unknown domain `{name}`")))
    }

    pub fn vocab_size(&self) -> usize {
        self.acts.len()
    }

    fn index(&self) -> &BTreeMap<(String, Intent, String), usize> {
        self.act_index.get_or_init(|| {
            self.acts
                .iter()
                .enumerate()
                .map(|(i, a)| ((a.domain.clone(), a.intent, a.slot.clone()), i))
                .collect()
        })
    }

    /// Vocabulary index of a delexicalized act.
    pub fn act_to_index(&self, act: &DialogAct) -> Result<usize> {
        if !act.is_delex() {
            return Err(GdplError::Validation(format!(
                "act {act} is lexicalized; only delexicalized acts have indices"
            )));
        }
        self.index()
            .get(&(act.domain.clone(), act.intent, act.slot.clone()))
            .copied()
            .ok_or_else(|| GdplError::Validation(format!("act {act} not in vocabulary")))
    }

    pub fn index_to_act(&self, index: usize) -> Result<&DialogAct> {
        self.acts
            .get(index)
            .ok_or_else(|| GdplError::Validation(format!("act index {index} out of range")))
    }

    /// Index of the fallback acknowledge act.
    pub fn ack_index(&self) -> usize {
        let ack = DialogAct::delex(GENERAL_DOMAIN, Intent::Ack, NO_SLOT);
        self.act_to_index(&ack).expect("vocabulary has general ack")
    }

    pub fn bye_index(&self) -> usize {
        let bye = DialogAct::delex(GENERAL_DOMAIN, Intent::Bye, NO_SLOT);
        self.act_to_index(&bye).expect("vocabulary has general bye")
    }

    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() {
            return Err(GdplError::Validation("ontology has no domains".into()));
        }
        for d in &self.domains {
            if d.name == GENERAL_DOMAIN {
                return Err(GdplError::Validation(format!(
                    "`{GENERAL_DOMAIN}` is reserved and cannot be a domain name"
                )));
            }
            let mut seen = std::collections::BTreeSet::new();
            for s in d.slots.iter().chain(d.book_slots.iter()) {
                if !seen.insert(&s.name) {
                    return Err(GdplError::Validation(format!(
                        "duplicate slot `{}` in domain `{}`",
                        s.name, d.name
                    )));
                }
                if s.values.is_empty() {
                    return Err(GdplError::Validation(format!(
                        "slot `{}.{}` declares no values",
                        d.name, s.name
                    )));
                }
            }
            for s in &d.slots {
                if !s.informable && !s.requestable {
                    return Err(GdplError::Validation(format!(
                        "slot `{}.{}` is neither informable nor requestable",
                        d.name, s.name
                    )));
                }
            }
        }
        // Vocabulary discipline: no duplicates, every referenced slot exists.
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.acts {
            if !a.is_delex() {
                return Err(GdplError::Validation(format!(
                    "vocabulary act {a} is not delexicalized"
                )));
            }
            if !seen.insert((a.domain.clone(), a.intent, a.slot.clone())) {
                return Err(GdplError::Validation(format!("duplicate vocabulary act {a}")));
            }
            if a.domain == GENERAL_DOMAIN {
                if a.slot != NO_SLOT {
                    return Err(GdplError::Validation(format!(
                        "general act {a} must use slot `{NO_SLOT}`"
                    )));
                }
                continue;
            }
            let d = self.require_domain(&a.domain)?;
            if a.slot != NO_SLOT && d.slot(&a.slot).is_none() && d.book_slot(&a.slot).is_none() {
                return Err(GdplError::Validation(format!(
                    "vocabulary act {a} references unknown slot `{}`",
                    a.slot
                )));
            }
        }
        Ok(())
    }
}

impl Clone for Ontology {
    fn clone(&self) -> Self {
        Ontology {
            domains: self.domains.clone(),
            acts: self.acts.clone(),
            act_index: OnceLock::new(),
        }
    }
}

/// Derive the ordered act vocabulary from domain specs.
///
/// Per domain, in declaration order: inform acts over entity and book
/// slots, request acts over the same, then offer/nooffer and (for
/// bookable domains) the booking confirmation. General acts close the
/// vocabulary.
fn derive_vocabulary(domains: &[DomainSpec]) -> Vec<DialogAct> {
    let mut acts = Vec::new();
    for d in domains {
        for s in d.slots.iter().chain(d.book_slots.iter()) {
            acts.push(DialogAct::delex(d.name.clone(), Intent::Inform, s.name.clone()));
        }
        for s in d.slots.iter().chain(d.book_slots.iter()) {
            acts.push(DialogAct::delex(d.name.clone(), Intent::Request, s.name.clone()));
        }
        acts.push(DialogAct::delex(d.name.clone(), Intent::Offer, NO_SLOT));
        acts.push(DialogAct::delex(d.name.clone(), Intent::Nooffer, NO_SLOT));
        if d.bookable() {
            acts.push(DialogAct::delex(d.name.clone(), Intent::Book, NO_SLOT));
        }
    }
    for intent in [Intent::Greet, Intent::Bye, Intent::Ack] {
        acts.push(DialogAct::delex(GENERAL_DOMAIN, intent, NO_SLOT));
    }
    acts
}

/// One entity: slot -> value over the domain's entity slots.
pub type Entity = BTreeMap<String, String>;

/// Per-domain entity tables. Immutable after load; queries are
/// deterministic (table order).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EntityDb {
    pub tables: BTreeMap<String, Vec<Entity>>,
}

impl EntityDb {
    /// All entities of `domain` matching every constraint exactly.
    pub fn query<'a>(
        &'a self,
        ontology: &Ontology,
        domain: &str,
        constraints: &BTreeMap<String, String>,
    ) -> Result<Vec<&'a Entity>> {
        let spec = ontology.require_domain(domain)?;
        for slot in constraints.keys() {
            match spec.slot(slot) {
                Some(s) if s.informable => {}
                Some(_) => {
                    return Err(GdplError::Validation(format!(
                        "slot `{domain}.{slot}` is not informable and cannot be a constraint"
                    )))
                }
                None => {
                    return Err(GdplError::Validation(format!(
                        "unknown slot `{domain}.{slot}` in query"
                    )))
                }
            }
        }
        let table = self.tables.get(domain).map(Vec::as_slice).unwrap_or(&[]);
        Ok(table
            .iter()
            .filter(|e| {
                constraints
                    .iter()
                    .all(|(s, v)| e.get(s).map(|ev| ev == v).unwrap_or(false))
            })
            .collect())
    }

    pub fn query_count(
        &self,
        ontology: &Ontology,
        domain: &str,
        constraints: &BTreeMap<String, String>,
    ) -> Result<usize> {
        Ok(self.query(ontology, domain, constraints)?.len())
    }

    fn validate(&self, ontology: &Ontology) -> Result<()> {
        for (domain, table) in &self.tables {
            let spec = ontology.require_domain(domain)?;
            if table.is_empty() {
                return Err(GdplError::Validation(format!(
                    "domain `{domain}` has an empty entity table"
                )));
            }
            for (i, entity) in table.iter().enumerate() {
                for s in &spec.slots {
                    let v = entity.get(&s.name).ok_or_else(|| {
                        GdplError::Validation(format!(
                            "entity {i} of `{domain}` is missing slot `{}`",
                            s.name
                        ))
                    })?;
                    if !s.values.contains(v) {
                        return Err(GdplError::Validation(format!(
                            "entity {i} of `{domain}`: value `{v}` not in declared set of `{}`",
                            s.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Ontology + entity database + goal statistics, persisted as one
/// pretty-printed JSON file with a `schema_version` field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bundle {
    pub schema_version: u32,
    pub ontology: Ontology,
    pub database: EntityDb,
    pub goal_stats: GoalStats,
}

impl Bundle {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GdplError::Validation(format!(
                "unsupported bundle schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.ontology.validate()?;
        self.database.validate(&self.ontology)?;
        self.goal_stats.validate(&self.ontology)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Bundle> {
        let text =
            std::fs::read_to_string(path).map_err(|e| GdplError::io(path, e))?;
        let bundle: Bundle = serde_json::from_str(&text).map_err(|e| {
            GdplError::Validation(format!("malformed ontology bundle {}: {e}", path.display()))
        })?;
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| GdplError::Runtime(format!("bundle serialization failed: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| GdplError::io(path, e))
    }

    /// Stable content hash, embedded in corpora and checkpoints so that
    /// mismatched artifacts are caught early.
    pub fn content_hash(&self) -> u64 {
        let text = serde_json::to_string(self).expect("bundle serializes");
        let mut h = 0xcbf29ce484222325u64;
        for b in text.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}
