use std::fmt;

use serde::{Deserialize, Serialize};

use super::NetworkContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Object,
    Zone,
    Service,
    Schedule,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Object => "object",
            Category::Zone => "zone",
            Category::Service => "service",
            Category::Schedule => "schedule",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    pub category: Category,
    pub name: String,
}

/// Candidates from the lowest tier that matched anything.
///
/// Tier 1 is an exact case-insensitive name match, tier 2 an alias match,
/// tier 3 a match after stripping spaces, hyphens, and underscores.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchSet {
    pub tier: Option<u8>,
    pub candidates: Vec<Candidate>,
}

impl MatchSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The single candidate, when the match is unambiguous.
    pub fn unique(&self) -> Option<&Candidate> {
        match self.candidates.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }

    pub fn in_category(&self, category: Category) -> Vec<&Candidate> {
        self.candidates.iter().filter(|c| c.category == category).collect()
    }
}

pub fn normalize_phrase(text: &str) -> String {
    text.chars().filter(|c| !matches!(c, ' ' | '-' | '_') && !c.is_whitespace()).flat_map(char::to_lowercase).collect()
}

fn entries(ctx: &NetworkContext) -> Vec<(Category, &str, &[String])> {
    let none: &[String] = &[];
    let mut out: Vec<(Category, &str, &[String])> = Vec::new();
    out.extend(ctx.objects.values().map(|o| (Category::Object, o.name.as_str(), o.aliases.as_slice())));
    out.extend(ctx.zones.keys().map(|n| (Category::Zone, n.as_str(), none)));
    out.extend(ctx.services.values().map(|s| (Category::Service, s.name.as_str(), s.aliases.as_slice())));
    out.extend(ctx.schedules.keys().map(|n| (Category::Schedule, n.as_str(), none)));
    out
}

pub fn lookup(ctx: &NetworkContext, phrase: &str) -> MatchSet {
    let phrase = phrase.trim();
    if phrase.is_empty() {
        return MatchSet::default();
    }
    let all = entries(ctx);
    let folded = phrase.to_lowercase();
    let normalized = normalize_phrase(phrase);

    let tiers: [&dyn Fn(&str, &[String]) -> bool; 3] = [
        &|name, _| name.to_lowercase() == folded,
        &|_, aliases| aliases.iter().any(|a| a.to_lowercase() == folded),
        &|name, aliases| {
            !normalized.is_empty()
                && (normalize_phrase(name) == normalized || aliases.iter().any(|a| normalize_phrase(a) == normalized))
        },
    ];
    for (tier, matches) in tiers.iter().enumerate() {
        let mut candidates: Vec<Candidate> = all
            .iter()
            .filter(|(_, name, aliases)| matches(name, aliases))
            .map(|(category, name, _)| Candidate { category: *category, name: name.to_string() })
            .collect();
        if !candidates.is_empty() {
            candidates.sort();
            candidates.dedup();
            return MatchSet { tier: Some(tier as u8 + 1), candidates };
        }
    }
    MatchSet::default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ecommerce;

    #[test]
    fn case_insensitive_name() {
        let m = lookup(&ecommerce(), "webserver");
        assert_eq!(m.tier, Some(1));
        assert_eq!(m.unique().unwrap(), &Candidate { category: Category::Object, name: "WebServer".into() });
    }

    #[test]
    fn token_normalized() {
        let m = lookup(&ecommerce(), "Vendor Invoices");
        assert_eq!(m.tier, Some(3));
        assert_eq!(m.unique().unwrap().name, "Vendor-Invoices");
        assert_eq!(lookup(&ecommerce(), "business hours").unique().unwrap().category, Category::Schedule);
    }

    #[test]
    fn absent() {
        assert!(lookup(&ecommerce(), "Mainframe").is_empty());
        assert!(lookup(&ecommerce(), "  ").is_empty());
        assert!(lookup(&ecommerce(), "--").is_empty());
    }

    #[test]
    fn alias_tier() {
        let m = lookup(&ecommerce(), "web");
        assert_eq!(m.tier, Some(2));
        assert_eq!(m.unique().unwrap().name, "WebServer");
    }

    #[test]
    fn exact_name_beats_alias_of_other_entity() {
        let mut ctx = ecommerce();
        ctx.objects.get_mut("DB").unwrap().aliases.push("WebServer".into());
        let m = lookup(&ctx, "WEBSERVER");
        assert_eq!(m.tier, Some(1));
        assert_eq!(m.candidates.len(), 1);
    }
}
