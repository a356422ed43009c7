//! Shared fixtures for integration tests: a hand-countable two-domain
//! world and a corpus of fifty hand-scored transcripts exercising every
//! definitional corner of the session metrics.

use std::collections::BTreeMap;

use gdpl_core::dialog::{Session, SessionOutcome, TurnRecord};
use gdpl_core::domain::{
    Bundle, DialogAct, DomainGoal, DomainSpec, EntityDb, FailedGoal, GoalStats, Intent, Ontology,
    SlotSpec, UserGoal,
};

fn slot(name: &str, values: &[&str], informable: bool, requestable: bool) -> SlotSpec {
    SlotSpec {
        name: name.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
        informable,
        requestable,
    }
}

/// Two bookable domains with four requestable slots each (eight total,
/// so a greedy informer lands at precision 2/8 when two are requested).
///
/// cafe entities (drink, area, phone, address, postcode, hours):
///   0: coffee north cp0 ca0 cz0 ch0
///   1: tea    south cp1 ca1 cz1 ch1
///   2: coffee south cp2 ca2 cz2 ch2
/// gym entities (area, price, phone, address, website, fare):
///   0: north low  gp0 ga0 gw0 gf0
///   1: south high gp1 ga1 gw1 gf1
pub fn metric_world() -> Bundle {
    let cafe = DomainSpec {
        name: "cafe".into(),
        slots: vec![
            slot("drink", &["coffee", "tea", "juice"], true, false),
            slot("area", &["north", "south"], true, false),
            slot("phone", &["cp0", "cp1", "cp2"], false, true),
            slot("address", &["ca0", "ca1", "ca2"], false, true),
            slot("postcode", &["cz0", "cz1", "cz2"], false, true),
            slot("hours", &["ch0", "ch1", "ch2"], false, true),
        ],
        book_slots: vec![slot("people", &["1", "2", "3", "4"], false, false)],
    };
    let gym = DomainSpec {
        name: "gym".into(),
        slots: vec![
            slot("area", &["north", "south"], true, false),
            slot("price", &["low", "high"], true, false),
            slot("phone", &["gp0", "gp1"], false, true),
            slot("address", &["ga0", "ga1"], false, true),
            slot("website", &["gw0", "gw1"], false, true),
            slot("fare", &["gf0", "gf1"], false, true),
        ],
        book_slots: vec![slot("day", &["mon", "tue"], false, false)],
    };

    let mut db = EntityDb::default();
    let cafe_rows: Vec<BTreeMap<String, String>> = [
        ("coffee", "north", "cp0", "ca0", "cz0", "ch0"),
        ("tea", "south", "cp1", "ca1", "cz1", "ch1"),
        ("coffee", "south", "cp2", "ca2", "cz2", "ch2"),
    ]
    .iter()
    .map(|(d, a, p, ad, z, h)| {
        BTreeMap::from([
            ("drink".to_string(), d.to_string()),
            ("area".to_string(), a.to_string()),
            ("phone".to_string(), p.to_string()),
            ("address".to_string(), ad.to_string()),
            ("postcode".to_string(), z.to_string()),
            ("hours".to_string(), h.to_string()),
        ])
    })
    .collect();
    db.tables.insert("cafe".into(), cafe_rows);
    let gym_rows: Vec<BTreeMap<String, String>> = [
        ("north", "low", "gp0", "ga0", "gw0", "gf0"),
        ("south", "high", "gp1", "ga1", "gw1", "gf1"),
    ]
    .iter()
    .map(|(a, pr, p, ad, w, f)| {
        BTreeMap::from([
            ("area".to_string(), a.to_string()),
            ("price".to_string(), pr.to_string()),
            ("phone".to_string(), p.to_string()),
            ("address".to_string(), ad.to_string()),
            ("website".to_string(), w.to_string()),
            ("fare".to_string(), f.to_string()),
        ])
    })
    .collect();
    db.tables.insert("gym".into(), gym_rows);

    let ontology = Ontology::from_domains(vec![cafe, gym]).expect("metric world ontology");
    let goal_stats = GoalStats {
        constraint_freq: BTreeMap::from([
            (
                "cafe".to_string(),
                BTreeMap::from([("drink".to_string(), 0.6), ("area".to_string(), 0.6)]),
            ),
            (
                "gym".to_string(),
                BTreeMap::from([("area".to_string(), 0.6), ("price".to_string(), 0.6)]),
            ),
        ]),
        request_freq: BTreeMap::from([
            (
                "cafe".to_string(),
                BTreeMap::from([
                    ("phone".to_string(), 0.5),
                    ("address".to_string(), 0.5),
                    ("postcode".to_string(), 0.3),
                    ("hours".to_string(), 0.3),
                ]),
            ),
            (
                "gym".to_string(),
                BTreeMap::from([
                    ("phone".to_string(), 0.5),
                    ("address".to_string(), 0.3),
                    ("website".to_string(), 0.3),
                    ("fare".to_string(), 0.5),
                ]),
            ),
        ]),
        book_rate: BTreeMap::from([("cafe".to_string(), 0.5), ("gym".to_string(), 0.5)]),
        domain_count_weights: vec![1.0, 1.0],
        p_fail: 0.3,
    };
    let bundle = Bundle {
        schema_version: 1,
        ontology,
        database: db,
        goal_stats,
    };
    bundle.validate().expect("metric world validates");
    bundle
}

pub fn act(domain: &str, intent: Intent, s: &str, v: &str) -> DialogAct {
    DialogAct::new(domain, intent, s, v)
}

pub fn request(domain: &str, s: &str) -> DialogAct {
    act(domain, Intent::Request, s, "?")
}

pub fn inform(domain: &str, s: &str, v: &str) -> DialogAct {
    act(domain, Intent::Inform, s, v)
}

/// Goal from per-domain (name, constraints, requests, book) tuples.
pub fn goal(parts: &[(&str, &[(&str, &str)], &[&str], &[(&str, &str)])]) -> UserGoal {
    let mut domains = BTreeMap::new();
    let mut order = Vec::new();
    for (name, constraints, requests, book) in parts {
        order.push(name.to_string());
        domains.insert(
            name.to_string(),
            DomainGoal {
                constraints: constraints
                    .iter()
                    .map(|(s, v)| (s.to_string(), v.to_string()))
                    .collect(),
                requests: requests.iter().map(|s| s.to_string()).collect(),
                book: book
                    .iter()
                    .map(|(s, v)| (s.to_string(), v.to_string()))
                    .collect(),
            },
        );
    }
    UserGoal {
        domain_order: order,
        domains,
        failed: None,
    }
}

/// Assemble a session from (user acts, system acts) exchanges and the
/// booked-entity map; states and indices stay empty because the metric
/// engine never reads them.
pub fn session(
    goal: UserGoal,
    exchanges: Vec<(Vec<DialogAct>, Vec<DialogAct>)>,
    booked: &[(&str, usize)],
) -> Session {
    let n = exchanges.len();
    let turns = exchanges
        .into_iter()
        .enumerate()
        .map(|(i, (user_acts, system_acts))| TurnRecord {
            user_acts,
            state: Vec::new(),
            act_indices: Vec::new(),
            system_acts,
            log_prob: 0.0,
            value: 0.0,
            terminal: i + 1 == n,
        })
        .collect();
    Session {
        goal,
        turns,
        outcome: SessionOutcome::Satisfied,
        booked: booked.iter().map(|(d, i)| (d.to_string(), *i)).collect(),
        integrity_warnings: 0,
    }
}

/// Hand-computed metric answer for one transcript.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expected {
    pub requested: usize,
    pub answered: usize,
    pub informed: usize,
    pub bookings: usize,
    pub matched: usize,
    pub success: bool,
}

impl Expected {
    pub fn new(
        requested: usize,
        answered: usize,
        informed: usize,
        bookings: usize,
        matched: usize,
        success: bool,
    ) -> Expected {
        Expected {
            requested,
            answered,
            informed,
            bookings,
            matched,
            success,
        }
    }
}

fn cafe_request_goal() -> UserGoal {
    goal(&[(
        "cafe",
        &[("drink", "coffee"), ("area", "north")],
        &["phone", "address"],
        &[],
    )])
}

fn cafe_booking_goal() -> UserGoal {
    goal(&[(
        "cafe",
        &[("drink", "coffee"), ("area", "north")],
        &[],
        &[("people", "2")],
    )])
}

fn cafe_full_goal() -> UserGoal {
    goal(&[(
        "cafe",
        &[("drink", "coffee"), ("area", "north")],
        &["phone", "address"],
        &[("people", "2")],
    )])
}

fn two_domain_booking_goal() -> UserGoal {
    goal(&[
        (
            "cafe",
            &[("drink", "coffee"), ("area", "north")],
            &[],
            &[("people", "2")],
        ),
        ("gym", &[("area", "south")], &[], &[("day", "mon")]),
    ])
}

fn all_eight_informs() -> Vec<DialogAct> {
    vec![
        inform("cafe", "phone", "cp0"),
        inform("cafe", "address", "ca0"),
        inform("cafe", "postcode", "cz0"),
        inform("cafe", "hours", "ch0"),
        inform("gym", "phone", "gp1"),
        inform("gym", "address", "ga1"),
        inform("gym", "website", "gw1"),
        inform("gym", "fare", "gf1"),
    ]
}

/// Fifty transcripts with hand answers.
pub fn metric_cases() -> Vec<(&'static str, Session, Expected)> {
    let mut cases: Vec<(&'static str, Session, Expected)> = Vec::new();

    // Recall and precision fundamentals.
    cases.push((
        "perfect-two-requests",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![inform("cafe", "phone", "cp0"), inform("cafe", "address", "ca0")],
            )],
            &[],
        ),
        Expected::new(2, 2, 2, 0, 0, true),
    ));
    cases.push((
        "half-answered",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![inform("cafe", "phone", "cp0")],
            )],
            &[],
        ),
        Expected::new(2, 1, 1, 0, 0, false),
    ));
    cases.push((
        "none-answered",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![act("general", Intent::Ack, "none", "none")],
            )],
            &[],
        ),
        Expected::new(2, 0, 0, 0, 0, false),
    ));
    cases.push((
        "wrong-domain-inform",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![inform("gym", "phone", "gp0")],
            )],
            &[],
        ),
        Expected::new(2, 0, 1, 0, 0, false),
    ));
    cases.push((
        "cross-mix-half-precision",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![inform("cafe", "phone", "cp0"), inform("gym", "phone", "gp0")],
            )],
            &[],
        ),
        Expected::new(2, 1, 2, 0, 0, false),
    ));
    cases.push((
        "greedy-all-eight",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                all_eight_informs(),
            )],
            &[],
        ),
        Expected::new(2, 2, 8, 0, 0, true),
    ));
    cases.push((
        "unavailable-does-not-answer",
        session(
            cafe_request_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![
                    inform("cafe", "phone", "unavailable"),
                    inform("cafe", "address", "ca0"),
                ],
            )],
            &[],
        ),
        Expected::new(2, 1, 1, 0, 0, false),
    ));
    cases.push((
        "unavailable-then-real",
        session(
            cafe_request_goal(),
            vec![
                (
                    vec![request("cafe", "phone"), request("cafe", "address")],
                    vec![inform("cafe", "phone", "unavailable")],
                ),
                (Vec::new(), vec![inform("cafe", "phone", "cp0")]),
            ],
            &[],
        ),
        Expected::new(2, 1, 1, 0, 0, false),
    ));
    cases.push((
        "repeated-informs-deduplicate",
        session(
            cafe_request_goal(),
            vec![
                (
                    vec![request("cafe", "phone"), request("cafe", "address")],
                    vec![inform("cafe", "phone", "cp0")],
                ),
                (Vec::new(), vec![inform("cafe", "phone", "cp0")]),
                (
                    Vec::new(),
                    vec![inform("cafe", "phone", "cp0"), inform("cafe", "address", "ca0")],
                ),
            ],
            &[],
        ),
        Expected::new(2, 2, 2, 0, 0, true),
    ));
    cases.push((
        "repeated-requests-deduplicate",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![
                (vec![request("cafe", "phone")], Vec::new()),
                (vec![request("cafe", "phone")], Vec::new()),
                (
                    vec![request("cafe", "phone")],
                    vec![inform("cafe", "phone", "cp0")],
                ),
            ],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "early-inform-counts-after-request",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![
                (Vec::new(), vec![inform("cafe", "phone", "cp0")]),
                (
                    vec![request("cafe", "phone")],
                    vec![act("general", Intent::Ack, "none", "none")],
                ),
            ],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "late-answer-counts",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![
                (vec![request("cafe", "phone")], Vec::new()),
                (Vec::new(), Vec::new()),
                (Vec::new(), vec![inform("cafe", "phone", "cp0")]),
            ],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "request-of-informable-slot-ignored",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("cafe", "drink"), request("cafe", "phone")],
                vec![inform("cafe", "phone", "cp0")],
            )],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "request-of-unknown-slot-ignored",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("cafe", "wifi"), request("cafe", "phone")],
                vec![inform("cafe", "phone", "cp0")],
            )],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "request-of-unknown-domain-ignored",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("spa", "phone"), request("cafe", "phone")],
                vec![inform("cafe", "phone", "cp0")],
            )],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "informable-inform-not-counted-against-precision",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("cafe", "phone")],
                vec![
                    inform("cafe", "drink", "coffee"),
                    inform("cafe", "phone", "cp0"),
                ],
            )],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "no-requests-no-informs-no-booking",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &[], &[])]),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("cafe", Intent::Offer, "none", "entity-0")],
            )],
            &[],
        ),
        Expected::new(0, 0, 0, 0, 0, true),
    ));
    cases.push((
        "no-requests-with-informs",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &[], &[])]),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![inform("cafe", "phone", "cp0"), inform("cafe", "address", "ca0")],
            )],
            &[],
        ),
        Expected::new(0, 0, 2, 0, 0, true),
    ));
    cases.push((
        "empty-transcript-counts-uttered-requests-only",
        session(cafe_request_goal(), Vec::new(), &[]),
        Expected::new(0, 0, 0, 0, 0, true),
    ));
    cases.push((
        "only-unavailable-answer",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("cafe", "phone")],
                vec![inform("cafe", "phone", "unavailable")],
            )],
            &[],
        ),
        Expected::new(1, 0, 0, 0, 0, false),
    ));

    // Booking and match rate.
    cases.push((
        "booked-correct-entity",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("cafe", Intent::Book, "none", "ref-0000")],
            )],
            &[("cafe", 0)],
        ),
        Expected::new(0, 0, 0, 1, 1, true),
    ));
    cases.push((
        "booked-wrong-entity",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("cafe", Intent::Book, "none", "ref-0000")],
            )],
            &[("cafe", 1)],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "booked-partially-matching-entity",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("cafe", Intent::Book, "none", "ref-0000")],
            )],
            &[("cafe", 2)],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "required-booking-missing",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("general", Intent::Ack, "none", "none")],
            )],
            &[],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "booked-entity-outside-table",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("cafe", Intent::Book, "none", "ref-0099")],
            )],
            &[("cafe", 99)],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "booking-in-unrelated-domain-ignored",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("gym", Intent::Book, "none", "ref-0000")],
            )],
            &[("gym", 0)],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "two-domains-both-booked-correctly",
        session(
            two_domain_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![
                    act("cafe", Intent::Book, "none", "ref-0000"),
                    act("gym", Intent::Book, "none", "ref-0001"),
                ],
            )],
            &[("cafe", 0), ("gym", 1)],
        ),
        Expected::new(0, 0, 0, 2, 2, true),
    ));
    cases.push((
        "two-domains-one-booking-failed",
        session(
            two_domain_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![
                    act("cafe", Intent::Book, "none", "ref-0000"),
                    act("gym", Intent::Book, "none", "ref-0000"),
                ],
            )],
            &[("cafe", 0), ("gym", 0)],
        ),
        Expected::new(0, 0, 0, 2, 1, false),
    ));
    cases.push((
        "single-constraint-violated-by-booking",
        session(
            goal(&[("cafe", &[("drink", "juice")], &[], &[("people", "1")])]),
            vec![(
                vec![inform("cafe", "drink", "juice")],
                vec![act("cafe", Intent::Book, "none", "ref-0000")],
            )],
            &[("cafe", 0)],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "requests-answered-but-booking-missing",
        session(
            cafe_full_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![inform("cafe", "phone", "cp0"), inform("cafe", "address", "ca0")],
            )],
            &[],
        ),
        Expected::new(2, 2, 2, 1, 0, false),
    ));

    // Combined success logic.
    cases.push((
        "full-success-requests-and-booking",
        session(
            cafe_full_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![
                    inform("cafe", "phone", "cp0"),
                    inform("cafe", "address", "ca0"),
                    act("cafe", Intent::Book, "none", "ref-0000"),
                ],
            )],
            &[("cafe", 0)],
        ),
        Expected::new(2, 2, 2, 1, 1, true),
    ));
    cases.push((
        "partial-recall-with-good-booking",
        session(
            cafe_full_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![
                    inform("cafe", "phone", "cp0"),
                    act("cafe", Intent::Book, "none", "ref-0000"),
                ],
            )],
            &[("cafe", 0)],
        ),
        Expected::new(2, 1, 1, 1, 1, false),
    ));
    cases.push((
        "full-recall-with-bad-booking",
        session(
            cafe_full_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                vec![
                    inform("cafe", "phone", "cp0"),
                    inform("cafe", "address", "ca0"),
                    act("cafe", Intent::Book, "none", "ref-0000"),
                ],
            )],
            &[("cafe", 1)],
        ),
        Expected::new(2, 2, 2, 1, 0, false),
    ));
    cases.push((
        "greedy-informs-with-booking-still-succeed",
        session(
            cafe_full_goal(),
            vec![(
                vec![request("cafe", "phone"), request("cafe", "address")],
                {
                    let mut acts = all_eight_informs();
                    acts.push(act("cafe", Intent::Book, "none", "ref-0000"));
                    acts
                },
            )],
            &[("cafe", 0)],
        ),
        Expected::new(2, 2, 8, 1, 1, true),
    ));
    cases.push((
        "two-domain-requests-all-answered",
        session(
            goal(&[
                ("cafe", &[("drink", "coffee")], &["phone"], &[]),
                ("gym", &[("area", "south")], &["fare"], &[]),
            ]),
            vec![
                (
                    vec![request("cafe", "phone")],
                    vec![inform("cafe", "phone", "cp0")],
                ),
                (
                    vec![request("gym", "fare")],
                    vec![inform("gym", "fare", "gf1")],
                ),
            ],
            &[],
        ),
        Expected::new(2, 2, 2, 0, 0, true),
    ));
    cases.push((
        "two-domain-requests-one-unanswered",
        session(
            goal(&[
                ("cafe", &[("drink", "coffee")], &["phone"], &[]),
                ("gym", &[("area", "south")], &["fare"], &[]),
            ]),
            vec![
                (
                    vec![request("cafe", "phone")],
                    vec![inform("cafe", "phone", "cp0")],
                ),
                (
                    vec![request("gym", "fare")],
                    vec![act("general", Intent::Ack, "none", "none")],
                ),
            ],
            &[],
        ),
        Expected::new(2, 1, 1, 0, 0, false),
    ));
    cases.push((
        "over-informing-does-not-block-success",
        session(
            goal(&[("gym", &[("area", "south")], &["website"], &[])]),
            vec![(
                vec![request("gym", "website")],
                vec![
                    inform("gym", "website", "gw1"),
                    inform("cafe", "phone", "cp0"),
                ],
            )],
            &[],
        ),
        Expected::new(1, 1, 2, 0, 0, true),
    ));
    cases.push((
        "failed-goal-booking-judged-on-final-constraints",
        {
            let mut g = cafe_booking_goal();
            g.failed = Some(FailedGoal {
                domain: "cafe".into(),
                constraints: BTreeMap::from([
                    ("drink".to_string(), "tea".to_string()),
                    ("area".to_string(), "north".to_string()),
                ]),
            });
            session(
                g,
                vec![(
                    vec![inform("cafe", "drink", "tea")],
                    vec![act("cafe", Intent::Book, "none", "ref-0000")],
                )],
                &[("cafe", 0)],
            )
        },
        Expected::new(0, 0, 0, 1, 1, true),
    ));
    cases.push((
        "failed-goal-booking-of-initial-constraints-fails",
        {
            let mut g = cafe_booking_goal();
            g.failed = Some(FailedGoal {
                domain: "cafe".into(),
                constraints: BTreeMap::from([
                    ("drink".to_string(), "tea".to_string()),
                    ("area".to_string(), "south".to_string()),
                ]),
            });
            session(
                g,
                vec![(
                    vec![inform("cafe", "drink", "tea")],
                    vec![act("cafe", Intent::Book, "none", "ref-0001")],
                )],
                &[("cafe", 1)],
            )
        },
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "turn-count-reported",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![
                (vec![inform("cafe", "drink", "coffee")], Vec::new()),
                (Vec::new(), Vec::new()),
                (Vec::new(), Vec::new()),
                (Vec::new(), Vec::new()),
                (Vec::new(), Vec::new()),
                (Vec::new(), Vec::new()),
                (
                    vec![request("cafe", "phone")],
                    vec![inform("cafe", "phone", "cp0")],
                ),
            ],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));

    // Precision-only pathologies and act-kind filters.
    cases.push((
        "junk-informs-never-requested",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("cafe", "phone")],
                vec![
                    inform("cafe", "address", "ca0"),
                    inform("cafe", "postcode", "cz0"),
                ],
            )],
            &[],
        ),
        Expected::new(1, 0, 2, 0, 0, false),
    ));
    cases.push((
        "clean-precision-partial-recall",
        session(
            goal(&[(
                "cafe",
                &[("drink", "coffee")],
                &["phone", "address", "postcode"],
                &[],
            )]),
            vec![(
                vec![
                    request("cafe", "phone"),
                    request("cafe", "address"),
                    request("cafe", "postcode"),
                ],
                vec![inform("cafe", "phone", "cp0"), inform("cafe", "address", "ca0")],
            )],
            &[],
        ),
        Expected::new(3, 2, 2, 0, 0, false),
    ));
    cases.push((
        "second-request-never-answered",
        session(
            cafe_request_goal(),
            vec![
                (Vec::new(), vec![inform("cafe", "phone", "cp0")]),
                (vec![request("cafe", "phone")], Vec::new()),
                (vec![request("cafe", "address")], Vec::new()),
            ],
            &[],
        ),
        Expected::new(2, 1, 1, 0, 0, false),
    ));
    cases.push((
        "same-slot-across-domains-counted-separately",
        session(
            goal(&[
                ("cafe", &[("drink", "coffee")], &["phone"], &[]),
                ("gym", &[("area", "north")], &["phone"], &[]),
            ]),
            vec![(
                vec![request("cafe", "phone"), request("gym", "phone")],
                vec![inform("cafe", "phone", "cp0"), inform("gym", "phone", "gp0")],
            )],
            &[],
        ),
        Expected::new(2, 2, 2, 0, 0, true),
    ));
    cases.push((
        "offer-nooffer-book-are-not-informs",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            vec![(
                vec![request("cafe", "phone")],
                vec![
                    act("cafe", Intent::Offer, "none", "entity-0"),
                    act("cafe", Intent::Nooffer, "none", "none"),
                    act("cafe", Intent::Book, "none", "ref-0000"),
                    inform("cafe", "phone", "cp0"),
                ],
            )],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "user-informs-do-not-count-as-answers",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["address"], &[])]),
            vec![(
                vec![
                    inform("cafe", "phone", "cp0"),
                    request("cafe", "address"),
                ],
                vec![inform("cafe", "address", "ca0")],
            )],
            &[],
        ),
        Expected::new(1, 1, 1, 0, 0, true),
    ));
    cases.push((
        "book-act-without-grounded-booking",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("cafe", Intent::Book, "none", "ref-0000")],
            )],
            &[],
        ),
        Expected::new(0, 0, 0, 1, 0, false),
    ));
    cases.push((
        "grounded-booking-without-book-act",
        session(
            cafe_booking_goal(),
            vec![(
                vec![inform("cafe", "drink", "coffee")],
                vec![act("general", Intent::Ack, "none", "none")],
            )],
            &[("cafe", 0)],
        ),
        Expected::new(0, 0, 0, 1, 1, true),
    ));
    cases.push((
        "long-stalled-transcript",
        session(
            goal(&[("cafe", &[("drink", "coffee")], &["phone"], &[])]),
            {
                let mut turns = vec![(vec![request("cafe", "phone")], Vec::new())];
                for _ in 0..39 {
                    turns.push((
                        Vec::new(),
                        vec![act("general", Intent::Ack, "none", "none")],
                    ));
                }
                turns
            },
            &[],
        ),
        Expected::new(1, 0, 0, 0, 0, false),
    ));
    cases.push((
        "kitchen-sink-two-domains",
        session(
            goal(&[
                (
                    "cafe",
                    &[("drink", "coffee"), ("area", "north")],
                    &["phone", "address", "postcode", "hours"],
                    &[("people", "2")],
                ),
                (
                    "gym",
                    &[("area", "south")],
                    &["phone", "website"],
                    &[("day", "mon")],
                ),
            ]),
            vec![
                (
                    vec![request("cafe", "phone"), request("cafe", "address")],
                    vec![inform("cafe", "phone", "cp0"), inform("cafe", "address", "ca0")],
                ),
                (
                    vec![request("cafe", "postcode"), request("cafe", "hours")],
                    vec![
                        inform("cafe", "postcode", "cz0"),
                        inform("cafe", "hours", "unavailable"),
                        act("cafe", Intent::Book, "none", "ref-0000"),
                    ],
                ),
                (
                    vec![request("gym", "phone"), request("gym", "website")],
                    vec![
                        inform("gym", "phone", "gp1"),
                        inform("gym", "website", "gw1"),
                        inform("gym", "fare", "gf1"),
                        act("gym", Intent::Book, "none", "ref-0000"),
                    ],
                ),
            ],
            &[("cafe", 0), ("gym", 0)],
        ),
        // hours stays unanswered (unavailable); fare is junk; the gym
        // booking grounds entity 0 (north) against a south constraint.
        Expected::new(6, 5, 6, 2, 1, false),
    ));

    assert_eq!(cases.len(), 50, "the oracle corpus holds exactly 50 transcripts");
    cases
}
