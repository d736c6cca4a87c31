use crate::apps::builtin_app;
use crate::context::{NetworkContext, TrustLevel};
use crate::findings::Finding;
use crate::ir::{Action, Direction, EndpointKind, IrPolicy, IrRule, Protocol};

const MAX_SCHEDULE_NAME: usize = 31;

fn max_rank(zones: &[String], ctx: &NetworkContext) -> Option<u8> {
    zones.iter().filter_map(|z| ctx.zone_trust(z)).map(TrustLevel::rank).max()
}

/// The rule's direction, or one inferred from zone trust levels when the rule
/// says `any`: traffic leaving a more trusted zone for a less trusted one is
/// outbound, the reverse is inbound, equal levels give no inference.
pub fn infer_direction(rule: &IrRule, ctx: &NetworkContext) -> Option<Direction> {
    match rule.direction {
        Direction::Inbound | Direction::Outbound => return Some(rule.direction.clone()),
        Direction::Any | Direction::Other(_) => {}
    }
    let src = max_rank(&rule.source_zones, ctx)?;
    let dst = max_rank(&rule.destination_zones, ctx)?;
    match src.cmp(&dst) {
        std::cmp::Ordering::Greater => Some(Direction::Outbound),
        std::cmp::Ordering::Less => Some(Direction::Inbound),
        std::cmp::Ordering::Equal => None,
    }
}

fn valid_schedule_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= MAX_SCHEDULE_NAME
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn in_trust_zone(zones: &[String], ctx: &NetworkContext) -> Option<String> {
    zones.iter().find(|z| ctx.zone_trust(z) == Some(TrustLevel::Trust)).cloned()
}

/// PAN-OS platform and hygiene warnings.
pub fn lint_panos(policy: &IrPolicy, ctx: &NetworkContext) -> Vec<Finding> {
    let mut out = Vec::new();
    for r in &policy.rules {
        let warn = |code: &str, msg: String| Finding::new(code, msg).for_rule(&r.id);

        if let Some(Protocol::Other(p)) = &r.protocol {
            out.push(warn("W-PAN-01", format!("protocol {p:?} is not one of tcp, udp, icmp, any")));
        }
        if r.source_zones.is_empty() || r.destination_zones.is_empty() {
            let side = match (r.source_zones.is_empty(), r.destination_zones.is_empty()) {
                (true, true) => "source and destination zones",
                (true, false) => "source zones",
                _ => "destination zones",
            };
            out.push(warn("W-PAN-02", format!("rule has no {side}")));
        }
        if let Some(w) = &r.schedule {
            if !valid_schedule_name(&w.name) {
                out.push(
                    warn("W-PAN-03", format!("schedule name {:?} must be 1-31 characters of [A-Za-z0-9_-]", w.name))
                        .with_subject(w.name.clone()),
                );
            }
            if r.action == Action::Deny {
                out.push(warn("W-PAN-04", format!("deny rule carries schedule {:?}", w.name)).with_subject(w.name.clone()));
            }
        }
        if let Some(proto) = r.protocol.as_ref().filter(|p| p.has_ports()) {
            let uncovered: Vec<String> =
                r.port_list().iter().filter(|p| builtin_app(proto, p).is_none()).map(|p| p.to_string()).collect();
            if !uncovered.is_empty() {
                out.push(warn(
                    "W-PAN-05",
                    format!("no built-in application covers {proto}/{}; a custom service object is required", uncovered.join(",")),
                ));
            }
        }
        match infer_direction(r, ctx) {
            Some(Direction::Inbound) => {
                if let Some(z) = in_trust_zone(&r.source_zones, ctx) {
                    out.push(warn("W-PAN-06", format!("inbound rule originates from trust zone {z}")).with_subject(z));
                }
            }
            Some(Direction::Outbound) => {
                if let Some(z) = in_trust_zone(&r.destination_zones, ctx) {
                    out.push(warn("W-PAN-06", format!("outbound rule targets trust zone {z}")).with_subject(z));
                }
            }
            _ => {}
        }
        for ep in r.sources.iter().filter(|e| e.kind != EndpointKind::Any) {
            if r.destinations.contains(ep) {
                out.push(warn("W-PAN-07", format!("{ep} appears in both sources and destinations")).with_subject(ep.to_string()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ecommerce;
    use crate::ir::{EndpointRef, PortSpec, TimeWindow, Weekday};

    fn rule(action: Action, src: &str, src_zone: &str, dst: &str, dst_zone: &str, port: u16) -> IrRule {
        let mut r = IrRule::new("R1", action, Protocol::Tcp);
        r.sources = vec![EndpointRef::object(src)];
        r.destinations = vec![EndpointRef::object(dst)];
        r.source_zones = vec![src_zone.into()];
        r.destination_zones = vec![dst_zone.into()];
        r.ports = Some(vec![PortSpec::single(port)]);
        r
    }

    fn codes(r: IrRule) -> Vec<String> {
        lint_panos(&IrPolicy::new("ecommerce", vec![r]), &ecommerce()).into_iter().map(|f| f.code).collect()
    }

    fn window(name: &str) -> TimeWindow {
        TimeWindow { name: name.into(), days: vec![Weekday::Monday], start: 60, end: 120 }
    }

    #[test]
    fn schedule_on_deny() {
        let mut r = rule(Action::Deny, "Guests", "guest", "Vendor-Invoices", "untrust", 25);
        r.schedule = Some(window("nightly"));
        assert_eq!(codes(r), ["W-PAN-04"]);
    }

    #[test]
    fn custom_service_needed() {
        assert_eq!(codes(rule(Action::Allow, "WebServer", "dmz", "DB", "trust", 5432)), ["W-PAN-05"]);
        assert!(codes(rule(Action::Allow, "WebServer", "dmz", "DB", "trust", 443)).is_empty());
    }

    #[test]
    fn same_endpoint_both_sides() {
        assert_eq!(codes(rule(Action::Allow, "WebServer", "dmz", "WebServer", "dmz", 443)), ["W-PAN-07"]);
    }

    #[test]
    fn any_on_both_sides_is_not_w_pan_07() {
        let mut r = rule(Action::Allow, "x", "dmz", "y", "dmz", 443);
        r.sources = vec![EndpointRef::any()];
        r.destinations = vec![EndpointRef::any()];
        assert!(codes(r).is_empty());
    }

    #[test]
    fn unsupported_protocol_and_missing_zones() {
        let mut r = rule(Action::Allow, "WebServer", "dmz", "DB", "trust", 443);
        r.protocol = Some(Protocol::Other("sctp".into()));
        r.ports = None;
        r.destination_zones.clear();
        assert_eq!(codes(r), ["W-PAN-01", "W-PAN-02"]);
    }

    #[test]
    fn schedule_name_hygiene() {
        let mut r = rule(Action::Allow, "WebServer", "dmz", "DB", "trust", 443);
        r.schedule = Some(window("office hours!"));
        assert_eq!(codes(r.clone()), ["W-PAN-03"]);
        r.schedule = Some(window(&"a".repeat(32)));
        assert_eq!(codes(r.clone()), ["W-PAN-03"]);
        r.schedule = Some(window(&"a".repeat(31)));
        assert!(codes(r).is_empty());
    }

    #[test]
    fn trust_direction_conflicts() {
        let mut r = rule(Action::Allow, "Finance", "trust", "Vendor-Invoices", "untrust", 443);
        r.direction = Direction::Inbound;
        assert_eq!(codes(r.clone()), ["W-PAN-06"]);
        r.direction = Direction::Outbound;
        assert!(codes(r).is_empty());
        let mut r = rule(Action::Allow, "Guests", "guest", "DB", "trust", 443);
        r.direction = Direction::Outbound;
        assert_eq!(codes(r), ["W-PAN-06"]);
    }

    #[test]
    fn direction_inference() {
        let ctx = ecommerce();
        let r = rule(Action::Allow, "Finance", "trust", "Vendor-Invoices", "untrust", 443);
        assert_eq!(infer_direction(&r, &ctx), Some(Direction::Outbound));
        let r = rule(Action::Allow, "WebServer", "dmz", "DB", "trust", 443);
        assert_eq!(infer_direction(&r, &ctx), Some(Direction::Inbound));
        let r = rule(Action::Allow, "WebServer", "dmz", "WebServer", "dmz", 443);
        assert_eq!(infer_direction(&r, &ctx), None);
    }
}
