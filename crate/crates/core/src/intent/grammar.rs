//! Recursive-descent parser for the controlled request grammar.
//!
//! ```text
//! request   := clause ("and" clause)*
//! allow     := "allow" NAME "to" ("reach"|"access") NAME [conn] [sched]
//! deny      := ("block"|"deny") [dir] (NAME | proto port) "from" NAME ["to" NAME]
//! conn      := ("over"|"on") (NAME | proto port)
//! sched     := "during" PHRASE | "on" dayset timerange
//! ```
//!
//! Keywords are case-insensitive. A NAME is a maximal run of words up to the
//! next keyword that may follow it. "and" separates clauses only when the
//! next word starts a clause.

use std::fmt;

use serde::Serialize;

use crate::ir::{parse_clock, Action, Direction, Weekday};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulePhrase {
    /// `during <phrase>`, resolved against context schedules.
    During { phrase: String },
    /// `on <days> HH:MM-HH:MM`.
    Window { days: Vec<Weekday>, start: u32, end: u32, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseAst {
    pub action: Action,
    pub subject_phrase: String,
    pub object_phrase: Option<String>,
    pub service_phrase: Option<String>,
    pub proto_port_phrase: Option<String>,
    pub direction_word: Option<Direction>,
    pub schedule_phrase: Option<SchedulePhrase>,
    /// The clause's slice of the request.
    pub text: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    /// Byte offset of the failing token (request length at end of input).
    pub offset: usize,
    pub token: Option<String>,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.token {
            Some(t) => write!(f, "expected {} at offset {}, found {t:?}", self.expected, self.offset),
            None => write!(f, "expected {} at end of request", self.expected),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    start: usize,
}

impl Tok<'_> {
    fn end(&self) -> usize {
        self.start + self.text.len()
    }

    fn is(&self, word: &str) -> bool {
        self.text.eq_ignore_ascii_case(word)
    }
}

fn tokenize(src: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in src.char_indices() {
        if c.is_whitespace() || c == ',' {
            if let Some(s) = start.take() {
                out.push(Tok { text: &src[s..i], start: s });
            }
            if c == ',' {
                out.push(Tok { text: ",", start: i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &src[s..], start: s });
    }
    // A sentence-final period is punctuation, not part of the last name.
    if let Some(last) = out.last_mut() {
        if last.text.len() > 1 && last.text.ends_with('.') {
            last.text = &last.text[..last.text.len() - 1];
        }
    }
    out
}

fn is_verb(t: &Tok) -> bool {
    t.is("allow") || t.is("block") || t.is("deny")
}

fn is_port_shape(text: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match text.split_once('-') {
        None => digits(text),
        Some((a, b)) => digits(a) && digits(b),
    }
}

fn is_proto_keyword(t: &Tok) -> bool {
    t.is("tcp") || t.is("udp") || t.is("icmp")
}

const DASHES: [&str; 4] = ["--", "-", "\u{2013}", "\u{2014}"];

fn split_span(text: &str) -> Option<(&str, &str)> {
    DASHES.iter().find_map(|d| text.split_once(d))
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<Tok<'a>> {
        self.toks.get(self.pos + k).copied()
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(t) => ParseError { offset: t.start, token: Some(t.text.to_string()), expected: expected.into() },
            None => ParseError { offset: self.src.len(), token: None, expected: expected.into() },
        }
    }

    fn at_clause_break(&self) -> bool {
        matches!((self.peek(), self.peek_at(1)), (Some(a), Some(v)) if a.is("and") && is_verb(&v))
    }

    fn at_end(&self) -> bool {
        self.peek().is_none() || self.at_clause_break()
    }

    fn accept(&mut self, word: &str) -> bool {
        if self.peek().is_some_and(|t| t.is(word)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, words: &[&str]) -> Result<Tok<'a>, ParseError> {
        match self.peek() {
            Some(t) if words.iter().any(|w| t.is(w)) => {
                self.pos += 1;
                Ok(t)
            }
            _ => {
                let quoted: Vec<String> = words.iter().map(|w| format!("{w:?}")).collect();
                Err(self.error(quoted.join(" or ")))
            }
        }
    }

    /// Maximal run of words up to a stop word, a clause break, or a comma.
    fn name(&mut self, what: &str, stops: &[&str]) -> Result<String, ParseError> {
        let first = self.pos;
        while let Some(t) = self.peek() {
            if self.at_clause_break() || t.text == "," || stops.iter().any(|s| t.is(s)) {
                break;
            }
            self.pos += 1;
        }
        if self.pos == first {
            return Err(self.error(what));
        }
        Ok(self.src[self.toks[first].start..self.toks[self.pos - 1].end()].to_string())
    }

    /// `proto port` if the next two tokens have that shape.
    fn proto_port(&mut self) -> Option<String> {
        let (p, n) = (self.peek()?, self.peek_at(1)?);
        if is_proto_keyword(&p) && is_port_shape(n.text) {
            self.pos += 2;
            return Some(self.src[p.start..n.end()].to_string());
        }
        None
    }

    fn starts_dayset(&self) -> bool {
        self.peek().is_some_and(|t| t.is("weekdays") || Weekday::parse(t.text).is_some())
    }

    fn dayset(&mut self) -> Result<Vec<Weekday>, ParseError> {
        if self.accept("weekdays") {
            return Ok(Weekday::WORKWEEK.to_vec());
        }
        let mut days = Vec::new();
        loop {
            let day = self.peek().and_then(|t| Weekday::parse(t.text)).ok_or_else(|| self.error("a day name"))?;
            days.push(day);
            self.pos += 1;
            if !self.accept(",") {
                return Ok(days);
            }
        }
    }

    fn clock(&self, text: &str, at: usize) -> Result<u32, ParseError> {
        parse_clock(text).ok_or_else(|| ParseError { offset: at, token: Some(text.to_string()), expected: "HH:MM".into() })
    }

    fn timerange(&mut self) -> Result<(u32, u32), ParseError> {
        let t = self.peek().ok_or_else(|| self.error("a time range HH:MM-HH:MM"))?;
        let (start, end) = if let Some((a, b)) = split_span(t.text) {
            self.pos += 1;
            (self.clock(a, t.start)?, self.clock(b, t.start)?)
        } else {
            let dash = self.peek_at(1).filter(|d| DASHES.contains(&d.text));
            let close = self.peek_at(2);
            match (dash, close) {
                (Some(_), Some(c)) => {
                    let start = self.clock(t.text, t.start)?;
                    let end = self.clock(c.text, c.start)?;
                    self.pos += 3;
                    (start, end)
                }
                _ => return Err(self.error("a time range HH:MM-HH:MM")),
            }
        };
        if start >= end {
            return Err(ParseError {
                offset: t.start,
                token: Some(t.text.to_string()),
                expected: "a time range whose start precedes its end".into(),
            });
        }
        Ok((start, end))
    }

    fn schedule(&mut self) -> Result<SchedulePhrase, ParseError> {
        let from = self.peek().map_or(self.src.len(), |t| t.start);
        let days = self.dayset()?;
        let (start, end) = self.timerange()?;
        let text = self.src[from..self.toks[self.pos - 1].end()].to_string();
        Ok(SchedulePhrase::Window { days, start, end, text })
    }

    fn allow(&mut self, c: &mut ClauseAst) -> Result<(), ParseError> {
        c.subject_phrase = self.name("a source name", &["to"])?;
        self.expect(&["to"])?;
        self.expect(&["reach", "access"])?;
        c.object_phrase = Some(self.name("a destination name", &["over", "on", "during"])?);
        if self.peek().is_some_and(|t| t.is("over") || t.is("on")) {
            let is_on = self.peek().unwrap().is("on");
            self.pos += 1;
            if is_on && self.starts_dayset() {
                c.schedule_phrase = Some(self.schedule()?);
                return Ok(());
            }
            match self.proto_port() {
                Some(pp) => c.proto_port_phrase = Some(pp),
                None => c.service_phrase = Some(self.name("a service name", &["during", "on"])?),
            }
        }
        if self.accept("during") {
            let phrase = self.name("a schedule name", &[])?;
            c.schedule_phrase = Some(SchedulePhrase::During { phrase });
        } else if self.accept("on") {
            c.schedule_phrase = Some(self.schedule()?);
        }
        Ok(())
    }

    fn deny(&mut self, c: &mut ClauseAst) -> Result<(), ParseError> {
        if self.accept("outbound") {
            c.direction_word = Some(Direction::Outbound);
        } else if self.accept("inbound") {
            c.direction_word = Some(Direction::Inbound);
        }
        match self.proto_port() {
            Some(pp) => c.proto_port_phrase = Some(pp),
            None => c.service_phrase = Some(self.name("a service name", &["from"])?),
        }
        self.expect(&["from"])?;
        c.subject_phrase = self.name("a source name", &["to"])?;
        if self.accept("to") {
            c.object_phrase = Some(self.name("a destination name", &[])?);
        }
        Ok(())
    }

    fn clause(&mut self) -> Result<ClauseAst, ParseError> {
        let verb = self.expect(&["allow", "block", "deny"])?;
        let mut c = ClauseAst {
            action: if verb.is("allow") { Action::Allow } else { Action::Deny },
            subject_phrase: String::new(),
            object_phrase: None,
            service_phrase: None,
            proto_port_phrase: None,
            direction_word: None,
            schedule_phrase: None,
            text: String::new(),
            offset: verb.start,
        };
        if c.action == Action::Allow {
            self.allow(&mut c)?;
        } else {
            self.deny(&mut c)?;
        }
        if !self.at_end() {
            return Err(self.error("\"and\" followed by a new clause, or end of request"));
        }
        c.text = self.src[verb.start..self.toks[self.pos - 1].end()].to_string();
        Ok(c)
    }
}

/// Parses a request into clauses in textual order.
pub fn parse_controlled(query: &str) -> Result<Vec<ClauseAst>, ParseError> {
    let mut p = Parser { src: query, toks: tokenize(query), pos: 0 };
    let mut clauses = vec![p.clause()?];
    while p.accept("and") {
        clauses.push(p.clause()?);
    }
    Ok(clauses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn webserver_to_db() {
        let c = parse_controlled("Allow WebServer to reach DB on TCP 5432 during business hours").unwrap();
        assert_eq!(c.len(), 1);
        let c = &c[0];
        assert_eq!(c.action, Action::Allow);
        assert_eq!(c.subject_phrase, "WebServer");
        assert_eq!(c.object_phrase.as_deref(), Some("DB"));
        assert_eq!(c.proto_port_phrase.as_deref(), Some("TCP 5432"));
        assert_eq!(c.service_phrase, None);
        assert_eq!(c.schedule_phrase, Some(SchedulePhrase::During { phrase: "business hours".into() }));
    }

    #[test]
    fn two_clause_walkthrough() {
        let q = "Allow Finance to reach Vendor-Invoices over HTTPS on weekdays 08:00--18:00 and block outbound SMTP from Guests";
        let c = parse_controlled(q).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].service_phrase.as_deref(), Some("HTTPS"));
        assert_eq!(
            c[0].schedule_phrase,
            Some(SchedulePhrase::Window {
                days: Weekday::WORKWEEK.to_vec(),
                start: 480,
                end: 1080,
                text: "weekdays 08:00--18:00".into()
            })
        );
        assert_eq!(c[0].text, "Allow Finance to reach Vendor-Invoices over HTTPS on weekdays 08:00--18:00");
        assert_eq!(c[1].action, Action::Deny);
        assert_eq!(c[1].direction_word, Some(Direction::Outbound));
        assert_eq!(c[1].service_phrase.as_deref(), Some("SMTP"));
        assert_eq!(c[1].subject_phrase, "Guests");
        assert_eq!(c[1].object_phrase, None);
        assert_eq!(c[1].text, "block outbound SMTP from Guests");
        assert_eq!(c[1].offset, q.find("block").unwrap());
    }

    #[test]
    fn outside_grammar() {
        let e = parse_controlled("make it fast").unwrap_err();
        assert_eq!((e.offset, e.token.as_deref()), (0, Some("make")));
        let e = parse_controlled("").unwrap_err();
        assert_eq!((e.offset, e.token), (0, None));
        let e = parse_controlled("Allow A to see B").unwrap_err();
        assert_eq!(e.token.as_deref(), Some("see"));
        let e = parse_controlled("Allow A to reach B on TCP 22 sometimes").unwrap_err();
        assert_eq!(e.token.as_deref(), Some("sometimes"));
    }

    #[test]
    fn multiword_names_and_inner_and() {
        let c = parse_controlled("Allow guest wifi to access orders db over web and deny UDP 53 from Guests to DB.").unwrap();
        assert_eq!(c[0].subject_phrase, "guest wifi");
        assert_eq!(c[0].object_phrase.as_deref(), Some("orders db"));
        assert_eq!(c[0].service_phrase.as_deref(), Some("web"));
        assert_eq!(c[1].proto_port_phrase.as_deref(), Some("UDP 53"));
        assert_eq!(c[1].object_phrase.as_deref(), Some("DB"));
        let c = parse_controlled("Allow R and D to reach DB").unwrap();
        assert_eq!(c[0].subject_phrase, "R and D");
    }

    #[test]
    fn day_lists_and_spaced_ranges() {
        let c = parse_controlled("allow A to reach B on Mon, wed 10:00 - 12:00").unwrap();
        match &c[0].schedule_phrase {
            Some(SchedulePhrase::Window { days, start, end, .. }) => {
                assert_eq!(days, &[Weekday::Monday, Weekday::Wednesday]);
                assert_eq!((*start, *end), (600, 720));
            }
            other => panic!("{other:?}"),
        }
        let e = parse_controlled("allow A to reach B on weekdays 18:00-08:00").unwrap_err();
        assert_eq!(e.token.as_deref(), Some("18:00-08:00"));
        let e = parse_controlled("allow A to reach B on weekdays 25:00-26:00").unwrap_err();
        assert_eq!(e.expected, "HH:MM");
    }

    #[test]
    fn service_then_schedule_and_bare_proto() {
        let c = parse_controlled("Allow A to reach B over ICMP").unwrap();
        assert_eq!(c[0].service_phrase.as_deref(), Some("ICMP"));
        let c = parse_controlled("Deny inbound tcp 1000-2000 from X").unwrap();
        assert_eq!(c[0].proto_port_phrase.as_deref(), Some("tcp 1000-2000"));
        assert_eq!(c[0].direction_word, Some(Direction::Inbound));
    }
}
