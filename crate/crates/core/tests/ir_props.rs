use proptest::prelude::*;

use nlfw_core::ir::{
    canonicalize, decode_policy, encode_policy, validate_policy, Action, Direction, EndpointKind, EndpointRef, IrPolicy,
    IrRule, PortSpec, Protocol, TimeWindow, Weekday,
};

fn arb_endpoint() -> impl Strategy<Value = EndpointRef> {
    prop_oneof![
        Just(EndpointRef::any()),
        "[A-Za-z][A-Za-z0-9-]{0,8}".prop_map(EndpointRef::object),
        (any::<[u8; 4]>(), 0u8..=32).prop_map(|(o, p)| EndpointRef::cidr(format!("{}.{}.{}.{}/{p}", o[0], o[1], o[2], o[3]))),
    ]
}

fn arb_port() -> impl Strategy<Value = PortSpec> {
    (1u32..=65535, 0u32..100).prop_map(|(lo, w)| PortSpec { lo, hi: (lo + w).min(65535) })
}

fn arb_window() -> impl Strategy<Value = TimeWindow> {
    ("[a-z][a-z0-9-]{0,12}", proptest::sample::subsequence(Weekday::ALL.to_vec(), 1..=7), 0u32..1439)
        .prop_flat_map(|(name, days, start)| {
            (Just(name), Just(days), Just(start), start + 1..=1440)
        })
        .prop_map(|(name, days, start, end)| TimeWindow { name, days, start, end })
}

fn arb_protocol_ports() -> impl Strategy<Value = (Protocol, Option<Vec<PortSpec>>)> {
    prop_oneof![
        (prop_oneof![Just(Protocol::Tcp), Just(Protocol::Udp)], proptest::option::of(proptest::collection::vec(arb_port(), 1..4))),
        Just((Protocol::Icmp, None)),
        Just((Protocol::Any, None)),
    ]
}

prop_compose! {
    fn arb_rule()(
        name in ".{0,16}",
        action in prop_oneof![Just(Action::Allow), Just(Action::Deny)],
        (protocol, ports) in arb_protocol_ports(),
        sources in proptest::collection::vec(arb_endpoint(), 0..4),
        destinations in proptest::collection::vec(arb_endpoint(), 0..4),
        source_zones in proptest::collection::vec("[a-z]{1,6}", 0..3),
        destination_zones in proptest::collection::vec("[a-z]{1,6}", 0..3),
        application in proptest::option::of("[a-z-]{1,10}"),
        direction in prop_oneof![Just(Direction::Any), Just(Direction::Inbound), Just(Direction::Outbound)],
        priority in 1i64..=65535,
        logging in any::<bool>(),
        schedule in proptest::option::of(arb_window()),
        raw_policy in ".{0,24}",
        ambiguities in proptest::collection::vec(".{0,8}", 0..3),
    ) -> IrRule {
        IrRule {
            id: String::new(), name, action, protocol: Some(protocol), sources, destinations, source_zones,
            destination_zones, ports, application, direction, priority, logging, schedule, raw_policy, ambiguities,
        }
    }
}

fn arb_policy() -> impl Strategy<Value = IrPolicy> {
    ("[a-z][a-z0-9-]{0,10}", proptest::collection::vec(arb_rule(), 1..5)).prop_map(|(context_id, mut rules)| {
        for (i, r) in rules.iter_mut().enumerate() {
            r.id = format!("R{}", i + 1);
        }
        IrPolicy { context_id, rules }
    })
}

fn canon(p: &IrPolicy) -> IrPolicy {
    canonicalize(p).expect("valid policy canonicalizes")
}

/// Single-field edits that keep the policy valid but change its meaning.
fn mutate(p: &IrPolicy, which: usize) -> IrPolicy {
    let mut q = p.clone();
    let r = &mut q.rules[0];
    match which % 12 {
        0 => r.action = if r.action == Action::Allow { Action::Deny } else { Action::Allow },
        1 => {
            r.protocol = Some(match r.protocol.as_ref().unwrap() {
                Protocol::Tcp => Protocol::Udp,
                Protocol::Udp => Protocol::Tcp,
                Protocol::Icmp => Protocol::Any,
                _ => Protocol::Icmp,
            })
        }
        2 => r.sources.push(EndpointRef::object("Mutant-Source")),
        3 => r.destinations.push(EndpointRef::cidr("198.51.100.0/24")),
        4 => r.source_zones.push("mutantzone".into()),
        5 => r.destination_zones.push("mutantzone".into()),
        6 => r.priority = if r.priority == 65535 { 1 } else { r.priority + 1 },
        7 => r.logging = !r.logging,
        8 => r.direction = if r.direction == Direction::Inbound { Direction::Outbound } else { Direction::Inbound },
        9 => r.id = "MUTANT".into(),
        10 => r.application = Some(format!("{}x", r.application.clone().unwrap_or_default())),
        _ => {
            r.schedule = Some(match r.schedule.take() {
                Some(mut w) => {
                    w.name.push('x');
                    w
                }
                None => TimeWindow { name: "m".into(), days: vec![Weekday::Monday], start: 0, end: 60 },
            })
        }
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_policies_are_valid(p in arb_policy()) {
        prop_assert_eq!(validate_policy(&p), vec![]);
    }

    #[test]
    fn encode_decode_round_trip(p in arb_policy()) {
        prop_assert_eq!(decode_policy(encode_policy(&p).as_bytes()).unwrap(), p);
    }

    #[test]
    fn canonicalize_is_idempotent(p in arb_policy()) {
        let once = canon(&p);
        prop_assert_eq!(canon(&once), once);
    }

    #[test]
    fn canonical_form_ignores_order_and_metadata(p in arb_policy(), seed in any::<u64>()) {
        let mut q = p.clone();
        for r in &mut q.rules {
            let k = seed as usize;
            if !r.sources.is_empty() { let n = r.sources.len(); r.sources.rotate_left(k % n); }
            r.destinations.reverse();
            r.source_zones.reverse();
            if let Some(ps) = r.ports.as_mut() { ps.reverse(); }
            if let Some(w) = r.schedule.as_mut() { w.days.reverse(); }
            r.raw_policy = format!("rewritten {seed}");
            r.ambiguities = vec!["noise".into()];
        }
        prop_assert_eq!(canon(&q), canon(&p));
    }

    #[test]
    fn any_field_mutation_changes_canonical_form(p in arb_policy(), which in 0usize..12) {
        let q = mutate(&p, which);
        prop_assert!(validate_policy(&q).is_empty());
        prop_assert_ne!(encode_policy(&canon(&q)), encode_policy(&canon(&p)));
    }

    #[test]
    fn injected_violation_is_reported(p in arb_policy(), which in 0usize..12) {
        let mut q = p.clone();
        let expected = {
            let r = &mut q.rules[0];
            match which {
                0 => { r.id = "bad id!".into(); "SCHEMA_BAD_ID" }
                1 => { r.protocol = None; "SCHEMA_MISSING_PROTOCOL" }
                2 => { r.protocol = Some(Protocol::Other("gre".into())); r.ports = None; "SCHEMA_BAD_ENUM" }
                3 => { r.action = Action::Other("reject".into()); "SCHEMA_BAD_ENUM" }
                4 => { r.sources.push(EndpointRef::cidr("300.1.1.1/8")); "SCHEMA_BAD_CIDR" }
                5 => { r.destinations.push(EndpointRef::object("")); "SCHEMA_EMPTY_OBJECT" }
                6 => { r.protocol = Some(Protocol::Tcp); r.ports = Some(vec![PortSpec { lo: 0, hi: 10 }]); "SCHEMA_PORT_RANGE" }
                7 => { r.protocol = Some(Protocol::Icmp); r.ports = Some(vec![PortSpec { lo: 1, hi: 1 }]); "SCHEMA_PORTS_FORBIDDEN" }
                8 => { r.priority = 0; "SCHEMA_PRIORITY_RANGE" }
                9 => { r.schedule = Some(TimeWindow { name: "w".into(), days: vec![Weekday::Friday], start: 600, end: 600 }); "SCHEMA_BAD_SCHEDULE" }
                10 => { r.sources.push(EndpointRef { kind: EndpointKind::Other("group".into()), value: "g".into() }); "SCHEMA_BAD_ENUM" }
                _ => { r.direction = Direction::Other("sideways".into()); "SCHEMA_BAD_ENUM" }
            }
        };
        let found = validate_policy(&q);
        prop_assert!(found.iter().any(|f| f.code == expected), "expected {} in {:?}", expected, found);
        prop_assert!(canonicalize(&q).is_err());
    }

    #[test]
    fn duplicate_ids_are_reported(p in arb_policy()) {
        let mut q = p.clone();
        let mut extra = q.rules[0].clone();
        extra.name = "copy".into();
        q.rules.push(extra);
        prop_assert!(validate_policy(&q).iter().any(|f| f.code == "SCHEMA_DUP_ID"));
    }
}

#[test]
fn empty_policy_is_reported() {
    let p = IrPolicy { context_id: "x".into(), rules: vec![] };
    assert_eq!(validate_policy(&p)[0].code, "SCHEMA_EMPTY_POLICY");
}
