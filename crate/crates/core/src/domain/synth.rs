//! Synthetic three-domain world generator.
//!
//! Produces a restaurant/hotel/taxi ontology with seeded slot choices,
//! value pools, entity tables and default goal statistics. Two of the
//! three domains are bookable. All randomness flows through the provided
//! seed, so the same seed always yields byte-identical bundles.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::goal::GoalStats;
use crate::domain::{Bundle, DomainSpec, Entity, EntityDb, Ontology, SlotSpec, SCHEMA_VERSION};
use crate::error::Result;
use crate::rng;

/// Knobs for the synthetic generator. Ranges are inclusive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthParams {
    pub min_informable: usize,
    pub max_informable: usize,
    pub min_requestable: usize,
    pub max_requestable: usize,
    pub min_entities: usize,
    pub max_entities: usize,
    /// Default per-slot probability of entering the constraint set.
    pub constraint_freq: f64,
    /// Default per-slot probability of entering the request set.
    pub request_freq: f64,
    /// Default probability that a bookable domain's goal books.
    pub book_rate: f64,
    pub p_fail: f64,
    /// Mixture weights for single/double/triple-domain goals.
    pub domain_count_weights: Vec<f64>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            min_informable: 5,
            max_informable: 8,
            min_requestable: 3,
            max_requestable: 5,
            min_entities: 30,
            max_entities: 100,
            constraint_freq: 0.8,
            request_freq: 0.9,
            book_rate: 0.9,
            p_fail: 0.3,
            domain_count_weights: vec![310.0, 528.0, 162.0],
        }
    }
}

struct SlotPool {
    name: &'static str,
    values: &'static [&'static str],
}

const PRICES: &[&str] = &["cheap", "moderate", "expensive"];
const AREAS: &[&str] = &["north", "south", "east", "west", "centre"];
const YES_NO: &[&str] = &["yes", "no"];
const RATINGS: &[&str] = &["1", "2", "3", "4", "5"];
const DAYS: &[&str] = &[
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

const RESTAURANT_INFORMABLE: &[SlotPool] = &[
    SlotPool {
        name: "food",
        values: &[
            "italian", "chinese", "indian", "british", "french", "thai", "mexican", "japanese",
            "turkish", "spanish", "korean", "lebanese",
        ],
    },
    SlotPool { name: "pricerange", values: PRICES },
    SlotPool { name: "area", values: AREAS },
    SlotPool { name: "rating", values: RATINGS },
    SlotPool {
        name: "seating",
        values: &["indoor", "outdoor", "both"],
    },
    SlotPool { name: "music", values: YES_NO },
    SlotPool { name: "takeaway", values: YES_NO },
    SlotPool {
        name: "dietary",
        values: &["standard", "vegetarian", "vegan", "halal"],
    },
];

const HOTEL_INFORMABLE: &[SlotPool] = &[
    SlotPool { name: "pricerange", values: PRICES },
    SlotPool { name: "area", values: AREAS },
    SlotPool { name: "stars", values: RATINGS },
    SlotPool { name: "parking", values: YES_NO },
    SlotPool { name: "internet", values: YES_NO },
    SlotPool {
        name: "type",
        values: &["hotel", "guesthouse", "hostel", "apartment"],
    },
    SlotPool { name: "pets", values: YES_NO },
    SlotPool { name: "breakfast", values: YES_NO },
];

const TAXI_INFORMABLE: &[SlotPool] = &[
    SlotPool { name: "area", values: AREAS },
    SlotPool {
        name: "vehicle",
        values: &["sedan", "estate", "van", "minibus", "executive"],
    },
    SlotPool {
        name: "capacity",
        values: &["2", "4", "6", "8"],
    },
    SlotPool {
        name: "fuel",
        values: &["petrol", "diesel", "electric", "hybrid"],
    },
    SlotPool {
        name: "colour",
        values: &["black", "white", "silver", "blue", "red"],
    },
    SlotPool {
        name: "operator",
        values: &["cityline", "fastcab", "northstar", "ranker"],
    },
    SlotPool { name: "luggage", values: YES_NO },
    SlotPool { name: "accessible", values: YES_NO },
];

const RESTAURANT_REQUESTABLE: &[&str] = &["address", "phone", "postcode", "hours", "website"];
const HOTEL_REQUESTABLE: &[&str] = &["address", "phone", "postcode", "checkin", "website"];
const TAXI_REQUESTABLE: &[&str] = &["phone", "plate", "fare", "eta", "driver"];

struct DomainPlan {
    name: &'static str,
    informable: &'static [SlotPool],
    requestable: &'static [&'static str],
    bookable: bool,
}

const PLANS: &[DomainPlan] = &[
    DomainPlan {
        name: "restaurant",
        informable: RESTAURANT_INFORMABLE,
        requestable: RESTAURANT_REQUESTABLE,
        bookable: true,
    },
    DomainPlan {
        name: "hotel",
        informable: HOTEL_INFORMABLE,
        requestable: HOTEL_REQUESTABLE,
        bookable: true,
    },
    DomainPlan {
        name: "taxi",
        informable: TAXI_INFORMABLE,
        requestable: TAXI_REQUESTABLE,
        bookable: false,
    },
];

const STREETS: &[&str] = &[
    "mill road", "king street", "station lane", "bridge avenue", "park row", "castle hill",
    "orchard way", "harbour walk",
];

/// Generate the full bundle (ontology, database, goal stats) from a seed.
pub fn synth_bundle(seed: u64, params: &SynthParams) -> Result<Bundle> {
    let mut domains = Vec::new();
    let mut db = EntityDb::default();
    let mut constraint_freq = BTreeMap::new();
    let mut request_freq = BTreeMap::new();
    let mut book_rate = BTreeMap::new();

    for plan in PLANS {
        let mut r = rng::stream_indexed(seed, "synth/domain", domain_index(plan.name));
        let n_inf = r.gen_range(params.min_informable..=params.max_informable.min(plan.informable.len()));
        let n_req = r.gen_range(params.min_requestable..=params.max_requestable.min(plan.requestable.len()));

        let mut inf_idx: Vec<usize> = (0..plan.informable.len()).collect();
        inf_idx.shuffle(&mut r);
        inf_idx.truncate(n_inf);
        inf_idx.sort_unstable();
        let mut req_idx: Vec<usize> = (0..plan.requestable.len()).collect();
        req_idx.shuffle(&mut r);
        req_idx.truncate(n_req);
        req_idx.sort_unstable();

        let mut slots = Vec::new();
        for i in &inf_idx {
            let pool = &plan.informable[*i];
            slots.push(SlotSpec {
                name: pool.name.to_string(),
                values: pool.values.iter().map(|v| v.to_string()).collect(),
                informable: true,
                requestable: false,
            });
        }
        let n_entities = r.gen_range(params.min_entities..=params.max_entities);
        for i in &req_idx {
            let name = plan.requestable[*i];
            slots.push(SlotSpec {
                name: name.to_string(),
                values: requestable_values(name, n_entities, &mut r),
                informable: false,
                requestable: true,
            });
        }

        let book_slots = if plan.bookable {
            book_slot_specs(plan.name)
        } else {
            Vec::new()
        };

        let mut table = Vec::with_capacity(n_entities);
        for e in 0..n_entities {
            let mut entity = Entity::new();
            for s in &slots {
                let v = if s.requestable {
                    // Requestable values are identifying: entity e takes the
                    // e-th pooled value so lookups stay distinct.
                    s.values[e % s.values.len()].clone()
                } else {
                    s.values[r.gen_range(0..s.values.len())].clone()
                };
                entity.insert(s.name.clone(), v);
            }
            table.push(entity);
        }

        constraint_freq.insert(
            plan.name.to_string(),
            slots
                .iter()
                .filter(|s| s.informable)
                .map(|s| (s.name.clone(), params.constraint_freq))
                .collect::<BTreeMap<_, _>>(),
        );
        request_freq.insert(
            plan.name.to_string(),
            slots
                .iter()
                .filter(|s| s.requestable)
                .map(|s| (s.name.clone(), params.request_freq))
                .collect::<BTreeMap<_, _>>(),
        );
        if plan.bookable {
            book_rate.insert(plan.name.to_string(), params.book_rate);
        }

        domains.push(DomainSpec {
            name: plan.name.to_string(),
            slots,
            book_slots,
        });
        db.tables.insert(plan.name.to_string(), table);
    }

    let ontology = Ontology::from_domains(domains)?;
    let goal_stats = GoalStats {
        constraint_freq,
        request_freq,
        book_rate,
        domain_count_weights: params.domain_count_weights.clone(),
        p_fail: params.p_fail,
    };
    let bundle = Bundle {
        schema_version: SCHEMA_VERSION,
        ontology,
        database: db,
        goal_stats,
    };
    bundle.validate()?;
    Ok(bundle)
}

fn domain_index(name: &str) -> u64 {
    PLANS
        .iter()
        .position(|p| p.name == name)
        .expect("planned domain") as u64
}

fn book_slot_specs(domain: &str) -> Vec<SlotSpec> {
    let mut out = vec![
        SlotSpec {
            name: "people".to_string(),
            values: (1..=8).map(|n| n.to_string()).collect(),
            informable: false,
            requestable: false,
        },
        SlotSpec {
            name: "day".to_string(),
            values: DAYS.iter().map(|d| d.to_string()).collect(),
            informable: false,
            requestable: false,
        },
    ];
    match domain {
        "restaurant" => out.push(SlotSpec {
            name: "time".to_string(),
            values: (11..=21).map(|h| format!("{h}:00")).collect(),
            informable: false,
            requestable: false,
        }),
        "hotel" => out.push(SlotSpec {
            name: "stay".to_string(),
            values: (1..=7).map(|n| n.to_string()).collect(),
            informable: false,
            requestable: false,
        }),
        _ => {}
    }
    out
}

/// Pool of identifying values for a requestable slot, sized to the
/// entity table so every entity gets one. Collisions get a numeric
/// suffix, so the loop always terminates.
fn requestable_values(slot: &str, n: usize, r: &mut crate::rng::Rng) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut v = match slot {
            "address" => format!(
                "{} {}",
                r.gen_range(1..200),
                STREETS[r.gen_range(0..STREETS.len())]
            ),
            "phone" => format!("01223{:06}", r.gen_range(0..1_000_000u32)),
            "postcode" => format!(
                "cb{}{}{}",
                r.gen_range(1..30),
                (b'a' + r.gen_range(0..26u8)) as char,
                (b'a' + r.gen_range(0..26u8)) as char
            ),
            "hours" => format!(
                "{:02}:{:02}-{:02}:{:02}",
                r.gen_range(6..12),
                30 * r.gen_range(0..2u32),
                r.gen_range(17..24),
                30 * r.gen_range(0..2u32)
            ),
            "checkin" => format!("{:02}:{:02}", r.gen_range(11..20), r.gen_range(0..60u32)),
            "website" => format!("www.site{}.example", r.gen_range(0..10_000)),
            "plate" => format!(
                "{}{}{:02} {}{}{}",
                (b'a' + r.gen_range(0..26u8)) as char,
                (b'a' + r.gen_range(0..26u8)) as char,
                r.gen_range(0..100u32),
                (b'a' + r.gen_range(0..26u8)) as char,
                (b'a' + r.gen_range(0..26u8)) as char,
                (b'a' + r.gen_range(0..26u8)) as char
            ),
            "fare" => format!("{}.{:02} gbp", r.gen_range(4..40), r.gen_range(0..100u32)),
            "eta" => format!("{} minutes", r.gen_range(2..180)),
            "driver" => format!("driver-{:03}", r.gen_range(0..1000)),
            other => format!("{other}-{:04}", r.gen_range(0..10_000)),
        };
        if seen.contains(&v) {
            v = format!("{v} #{}", out.len());
        }
        if seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}
