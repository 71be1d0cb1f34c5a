//! Line-oriented session logs. See `docs/transcript-format.md`.

use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use super::{
    activate_quick_choice, start_with, step, Answer, Event, InputKind, VmError, VmOptions, VmState,
};
use crate::model::{Program, VertexId};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum TranscriptEntry {
    Offered {
        labels: Vec<String>,
    },
    Prompt {
        kind: InputKind,
        text: String,
    },
    Answer(Answer),
    QuickChoice(usize),
    Printed(String),
    Route {
        vertices: Vec<VertexId>,
        cost: f64,
        unit: Option<String>,
    },
    Failed(String),
}

impl TranscriptEntry {
    pub(super) fn from_event(event: &Event) -> Self {
        match event {
            Event::Printed { text } => TranscriptEntry::Printed(text.clone()),
            Event::RouteFound { route, unit, .. } => TranscriptEntry::Route {
                vertices: route.vertices.clone(),
                cost: route.total_cost,
                unit: unit.clone(),
            },
            Event::QuickChoicesOffered { choices } => TranscriptEntry::Offered {
                labels: choices.iter().map(|c| c.label.clone()).collect(),
            },
            Event::SearchFailed { message } => TranscriptEntry::Failed(message.clone()),
        }
    }
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn kind_word(kind: InputKind) -> &'static str {
    match kind {
        InputKind::Text => "text",
        InputKind::Number => "number",
    }
}

pub fn format_transcript(entries: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        let _ = match entry {
            TranscriptEntry::Offered { labels } => {
                out.push_str("offered");
                for l in labels {
                    out.push(' ');
                    out.push_str(&quote(l));
                }
                Ok(())
            }
            TranscriptEntry::Prompt { kind, text } => {
                write!(out, "prompt {} {}", kind_word(*kind), quote(text))
            }
            TranscriptEntry::Answer(Answer::Text(s)) => write!(out, "answer text {}", quote(s)),
            TranscriptEntry::Answer(Answer::Number(x)) => write!(out, "answer number {x:?}"),
            TranscriptEntry::QuickChoice(i) => write!(out, "quick {i}"),
            TranscriptEntry::Printed(s) => write!(out, "print {}", quote(s)),
            TranscriptEntry::Route {
                vertices,
                cost,
                unit,
            } => {
                out.push_str("route");
                for v in vertices {
                    let _ = write!(out, " {v}");
                }
                let _ = write!(out, " cost {cost:?}");
                if let Some(u) = unit {
                    let _ = write!(out, " {}", quote(u));
                }
                Ok(())
            }
            TranscriptEntry::Failed(s) => write!(out, "failed {}", quote(s)),
        };
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transcript line {line}: {message}")]
pub struct TranscriptError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Word {
    Bare(String),
    Quoted(String),
}

fn words(line: &str) -> Result<Vec<Word>, String> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => s.push('\n'),
                        Some(e @ ('"' | '\\')) => s.push(e),
                        other => return Err(format!("bad escape {other:?}")),
                    },
                    Some(c) => s.push(c),
                    None => return Err("unterminated string".into()),
                }
            }
            out.push(Word::Quoted(s));
        } else {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '"' {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push(Word::Bare(s));
        }
    }
    Ok(out)
}

fn parse_line(line: &str) -> Result<TranscriptEntry, String> {
    let words = words(line)?;
    let bare = |w: Option<&Word>| match w {
        Some(Word::Bare(s)) => Ok(s.clone()),
        other => Err(format!("expected a word, found {other:?}")),
    };
    let quoted = |w: Option<&Word>| match w {
        Some(Word::Quoted(s)) => Ok(s.clone()),
        other => Err(format!("expected a quoted string, found {other:?}")),
    };
    let number = |w: Option<&Word>| -> Result<f64, String> {
        let s = bare(w)?;
        s.parse().map_err(|_| format!("bad number {s:?}"))
    };
    let done = |n: usize| {
        if words.len() > n {
            Err(format!("unexpected {:?}", words[n]))
        } else {
            Ok(())
        }
    };
    let keyword = bare(words.first())?;
    let entry = match keyword.as_str() {
        "offered" => TranscriptEntry::Offered {
            labels: words[1..]
                .iter()
                .map(|w| quoted(Some(w)))
                .collect::<Result<_, _>>()?,
        },
        "prompt" | "answer" => {
            let kind = match bare(words.get(1))?.as_str() {
                "text" => InputKind::Text,
                "number" => InputKind::Number,
                other => return Err(format!("unknown input kind {other:?}")),
            };
            done(3)?;
            match (keyword.as_str(), kind) {
                ("prompt", kind) => TranscriptEntry::Prompt {
                    kind,
                    text: quoted(words.get(2))?,
                },
                (_, InputKind::Text) => {
                    TranscriptEntry::Answer(Answer::Text(quoted(words.get(2))?))
                }
                (_, InputKind::Number) => {
                    TranscriptEntry::Answer(Answer::Number(number(words.get(2))?))
                }
            }
        }
        "quick" => {
            done(2)?;
            let s = bare(words.get(1))?;
            TranscriptEntry::QuickChoice(s.parse().map_err(|_| format!("bad index {s:?}"))?)
        }
        "print" => {
            done(2)?;
            TranscriptEntry::Printed(quoted(words.get(1))?)
        }
        "failed" => {
            done(2)?;
            TranscriptEntry::Failed(quoted(words.get(1))?)
        }
        "route" => {
            let cost_at = words
                .iter()
                .position(|w| *w == Word::Bare("cost".into()))
                .ok_or("route without cost")?;
            let vertices = words[1..cost_at]
                .iter()
                .map(|w| {
                    let s = bare(Some(w))?;
                    s.parse::<u64>()
                        .ok()
                        .and_then(VertexId::from_one_based)
                        .ok_or(format!("bad vertex {s:?}"))
                })
                .collect::<Result<Vec<_>, String>>()?;
            if vertices.is_empty() {
                return Err("route without vertices".into());
            }
            let cost = number(words.get(cost_at + 1))?;
            let unit = match words.get(cost_at + 2) {
                None => None,
                w => Some(quoted(w)?),
            };
            done(cost_at + 3)?;
            TranscriptEntry::Route {
                vertices,
                cost,
                unit,
            }
        }
        other => return Err(format!("unknown entry {other:?}")),
    };
    Ok(entry)
}

/// Parses the output of [`format_transcript`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptEntry>, TranscriptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            parse_line(l).map_err(|message| TranscriptError {
                line: i + 1,
                message,
            })
        })
        .collect()
}

/// One scripted user action.
#[derive(Clone, Debug, PartialEq)]
pub enum ScriptInput {
    /// Raw text, read as whatever kind the machine is waiting for.
    Answer(String),
    QuickChoice(usize),
}

/// Starts a session and feeds it `inputs` in order.
pub fn run_script(
    program: &Program,
    options: VmOptions,
    inputs: &[ScriptInput],
) -> Result<VmState, VmError> {
    let mut state = start_with(program, options)?;
    for input in inputs {
        match input {
            ScriptInput::QuickChoice(i) => activate_quick_choice(program, &mut state, *i)?,
            ScriptInput::Answer(raw) => {
                let Some(kind) = state.awaiting() else {
                    return Err(VmError::WrongInputKind {
                        expected: None,
                        got: Some(InputKind::Text),
                    });
                };
                let answer = Answer::parse_as(kind, raw).ok_or(VmError::WrongInputKind {
                    expected: Some(kind),
                    got: Some(InputKind::Text),
                })?;
                step(program, &mut state, Some(answer))?;
            }
        }
    }
    Ok(state)
}

/// Re-runs the user actions recorded in `entries`.
pub fn replay(
    program: &Program,
    options: VmOptions,
    entries: &[TranscriptEntry],
) -> Result<VmState, VmError> {
    let mut state = start_with(program, options)?;
    for entry in entries {
        match entry {
            TranscriptEntry::Answer(a) => step(program, &mut state, Some(a.clone()))?,
            TranscriptEntry::QuickChoice(i) => activate_quick_choice(program, &mut state, *i)?,
            _ => {}
        }
    }
    Ok(state)
}
