//! Line-oriented schedule files.
//!
//! ```text
//! round
//! xfer 0,0 -> 1,0 [root]
//! round
//! asm 1,1 d1.1
//! xfer 1,0 -> 0,0 [d1.0]
//! write 0,0 [d0.1,d1.0]
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use super::{Action, DatumId, Payload, RoundSchedule, Schedule};
use crate::topology::ProcessRef;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScheduleParseError {
    pub line: usize,
    pub message: String,
}

pub fn serialize_schedule(s: &Schedule) -> String {
    let mut out = String::new();
    for round in &s.rounds {
        out.push_str("round\n");
        for action in &round.actions {
            match action {
                Action::ExternalTransfer {
                    sender,
                    receiver,
                    payload,
                } => {
                    let _ = writeln!(out, "xfer {sender} -> {receiver} {}", payload_text(payload));
                }
                Action::Assemble { process, datum } => {
                    let _ = writeln!(out, "asm {process} {datum}");
                }
                Action::LocalWrite { writer, payload } => {
                    let _ = writeln!(out, "write {writer} {}", payload_text(payload));
                }
            }
        }
    }
    out
}

fn payload_text(payload: &Payload) -> String {
    let items: Vec<String> = payload.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(","))
}

pub fn parse_schedule(text: &str) -> Result<Schedule, ScheduleParseError> {
    let mut schedule = Schedule::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ScheduleParseError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, rest) = content
            .split_once(char::is_whitespace)
            .map(|(h, r)| (h, r.trim()))
            .unwrap_or((content, ""));
        if head == "round" {
            if !rest.is_empty() {
                return Err(err("`round` takes no arguments".into()));
            }
            schedule.rounds.push(RoundSchedule::default());
            continue;
        }
        let action = match head {
            "xfer" => {
                let (from, rest) = rest
                    .split_once("->")
                    .ok_or_else(|| err("expected `xfer <m,i> -> <m,i> [data]`".into()))?;
                let sender = parse_process(from.trim()).map_err(&err)?;
                let rest = rest.trim();
                let split = rest
                    .find('[')
                    .ok_or_else(|| err("missing `[` payload list".into()))?;
                let receiver = parse_process(rest[..split].trim()).map_err(&err)?;
                let payload = parse_payload(&rest[split..]).map_err(&err)?;
                Action::ExternalTransfer {
                    sender,
                    receiver,
                    payload,
                }
            }
            "asm" => {
                let mut parts = rest.split_whitespace();
                let (Some(p), Some(d), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err("expected `asm <m,i> <datum>`".into()));
                };
                Action::Assemble {
                    process: parse_process(p).map_err(&err)?,
                    datum: parse_datum(d).map_err(&err)?,
                }
            }
            "write" => {
                let split = rest
                    .find('[')
                    .ok_or_else(|| err("missing `[` payload list".into()))?;
                Action::LocalWrite {
                    writer: parse_process(rest[..split].trim()).map_err(&err)?,
                    payload: parse_payload(&rest[split..]).map_err(&err)?,
                }
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        };
        match schedule.rounds.last_mut() {
            Some(r) => r.actions.push(action),
            None => return Err(err("action before the first `round`".into())),
        }
    }
    Ok(schedule)
}

/// Parses `m,i`.
pub fn parse_process(text: &str) -> Result<ProcessRef, String> {
    let (m, i) = text
        .split_once(',')
        .ok_or_else(|| format!("expected `<machine>,<index>`, found `{text}`"))?;
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad process `{text}`"))
    };
    Ok(ProcessRef::new(num(m)?, num(i)?))
}

/// Parses `root` or `d<m>.<i>`.
pub fn parse_datum(text: &str) -> Result<DatumId, String> {
    if text == "root" {
        return Ok(DatumId::Root);
    }
    let body = text
        .strip_prefix('d')
        .ok_or_else(|| format!("bad datum `{text}`"))?;
    let (m, i) = body
        .split_once('.')
        .ok_or_else(|| format!("bad datum `{text}`"))?;
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("bad datum `{text}`"))
    };
    Ok(DatumId::Contribution(ProcessRef::new(num(m)?, num(i)?)))
}

fn parse_payload(text: &str) -> Result<Payload, String> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("bad payload list `{text}`"))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_datum)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(m: usize, i: usize) -> ProcessRef {
        ProcessRef::new(m, i)
    }

    #[test]
    fn parses_all_directives() {
        let text = "# demo\nround\nxfer 0,0 -> 1,0 [root]\nround\nasm 1,1 d1.1\nwrite 0,0 [d0.1, d1.0]\nround\n";
        let s = parse_schedule(text).unwrap();
        assert_eq!(s.rounds.len(), 3);
        assert_eq!(
            s.rounds[0].actions[0],
            Action::transfer(pr(0, 0), pr(1, 0), [DatumId::Root])
        );
        assert_eq!(s.rounds[1].actions[0], Action::assemble(pr(1, 1)));
        assert_eq!(
            s.rounds[1].actions[1],
            Action::LocalWrite {
                writer: pr(0, 0),
                payload: [
                    DatumId::Contribution(pr(0, 1)),
                    DatumId::Contribution(pr(1, 0))
                ]
                .into_iter()
                .collect()
            }
        );
        assert!(s.rounds[2].actions.is_empty());
        assert_eq!(parse_schedule(&serialize_schedule(&s)).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_schedule("xfer 0,0 -> 1,0 [root]").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_schedule("round\nxfer 0,0 1,0 [root]").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_schedule("round\n\nasm 0,x d0.0").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_schedule("round\nxfer 0,0 -> 1,0 [dx]").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
