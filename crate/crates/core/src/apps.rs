//! Built-in PAN-OS applications known to cover a protocol/port pair.
//!
//! Shared by the vendor linter (to decide when a custom service is needed)
//! and the compiler (to emit `application <app>` with `application-default`).

use crate::ir::{PortSpec, Protocol};

pub const BUILTIN_APPS: &[(Protocol, u32, &str)] = &[
    (Protocol::Tcp, 443, "ssl"),
    (Protocol::Tcp, 80, "web-browsing"),
    (Protocol::Udp, 53, "dns"),
    (Protocol::Tcp, 25, "smtp"),
    (Protocol::Tcp, 22, "ssh"),
];

pub const ICMP_APP: &str = "ping";

/// Application covering a single-port spec, if any.
pub fn builtin_app(protocol: &Protocol, spec: &PortSpec) -> Option<&'static str> {
    if !spec.is_single() {
        return None;
    }
    BUILTIN_APPS.iter().find(|(p, port, _)| p == protocol && *port == spec.lo).map(|(_, _, app)| *app)
}

/// Applications for every port spec, or `None` if any spec lacks one.
pub fn builtin_apps_for(protocol: &Protocol, ports: &[PortSpec]) -> Option<Vec<&'static str>> {
    if ports.is_empty() {
        return None;
    }
    let mut apps: Vec<&'static str> = ports.iter().map(|p| builtin_app(protocol, p)).collect::<Option<_>>()?;
    apps.sort_unstable();
    apps.dedup();
    Some(apps)
}

pub fn is_builtin_app_name(name: &str) -> bool {
    name == ICMP_APP || BUILTIN_APPS.iter().any(|(_, _, app)| *app == name)
}
