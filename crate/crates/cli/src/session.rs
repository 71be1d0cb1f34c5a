//! Terminal sessions: scripted or interactive runs of the VM with
//! human-readable output.

use std::io::{self, BufRead, Write};

use qrmap::model::Program;
use qrmap::routing::RouteStep;
use qrmap::vm::{
    activate_quick_choice, start_with, step, Answer, Event, InputKind, Status, VmError, VmOptions,
    VmState,
};
use thiserror::Error;

/// One line of an answers file.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Answer(String),
    QuickChoice(usize),
}

pub const QUICK_DIRECTIVE: &str = "@quick";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Vm(#[from] VmError),
    #[error("answers ran out while the program was asking {0:?}")]
    OutOfAnswers(String),
    #[error("answers line {line}: {text:?} is not \"{QUICK_DIRECTIVE} <index>\"")]
    BadDirective { line: usize, text: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_line(line: &str, number: usize) -> Result<Action, SessionError> {
    match line.strip_prefix(QUICK_DIRECTIVE) {
        Some(rest) if rest.is_empty() || rest.starts_with(' ') => rest
            .trim()
            .parse()
            .map(Action::QuickChoice)
            .map_err(|_| SessionError::BadDirective {
                line: number,
                text: line.to_string(),
            }),
        _ => Ok(Action::Answer(line.to_string())),
    }
}

/// One action per line. `@quick N` presses quick choice N; any other line,
/// including an empty one, is an answer taken verbatim.
pub fn parse_answers(text: &str) -> Result<Vec<Action>, SessionError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| parse_line(l.strip_suffix('\r').unwrap_or(l), i + 1))
        .collect()
}

pub fn format_cost(cost: f64, unit: Option<&str>) -> String {
    match unit {
        Some(u) => format!("{cost:?} {u}"),
        None => format!("{cost:?}"),
    }
}

pub fn render_steps(steps: &[RouteStep], out: &mut impl Write) -> io::Result<()> {
    for (i, s) in steps.iter().enumerate() {
        writeln!(out, "  {}. {}", i + 1, s.sentence())?;
    }
    Ok(())
}

pub fn render_event(event: &Event, out: &mut impl Write) -> io::Result<()> {
    match event {
        Event::Printed { text } => writeln!(out, "{text}"),
        Event::QuickChoicesOffered { choices } => {
            for c in choices {
                writeln!(out, "quick choice [{}]: {}", c.index, c.label)?;
            }
            Ok(())
        }
        Event::RouteFound { route, steps, unit } => {
            if steps.is_empty() {
                return writeln!(out, "you are already at the destination");
            }
            let dest = steps
                .last()
                .and_then(|s| s.to_name.clone())
                .unwrap_or_else(|| format!("vertex {}", route.destination()));
            writeln!(
                out,
                "route to {dest}, {} in {} step{}:",
                format_cost(route.total_cost, unit.as_deref()),
                steps.len(),
                if steps.len() == 1 { "" } else { "s" }
            )?;
            render_steps(steps, out)
        }
        Event::SearchFailed { message } => writeln!(out, "no route: {message}"),
    }
}

/// Drives one VM session, printing events as they appear.
pub struct Session<'p, W: Write> {
    program: &'p Program,
    state: VmState,
    shown: usize,
    out: W,
}

impl<'p, W: Write> Session<'p, W> {
    pub fn start(program: &'p Program, options: VmOptions, out: W) -> Result<Self, SessionError> {
        let state = start_with(program, options)?;
        let mut s = Session {
            program,
            state,
            shown: 0,
            out,
        };
        s.show()?;
        Ok(s)
    }

    pub fn state(&self) -> &VmState {
        &self.state
    }

    pub fn into_state(self) -> VmState {
        self.state
    }

    fn show(&mut self) -> io::Result<()> {
        for e in &self.state.events[self.shown..] {
            render_event(e, &mut self.out)?;
        }
        self.shown = self.state.events.len();
        if let Status::AwaitingInput { prompt, kind } = &self.state.status {
            match kind {
                InputKind::Text => writeln!(self.out, "? {prompt}")?,
                InputKind::Number => writeln!(self.out, "? {prompt} [number]")?,
            }
        }
        self.out.flush()
    }

    /// Applies `action`, reading an answer as the kind currently asked for.
    pub fn apply(&mut self, action: &Action) -> Result<(), SessionError> {
        match action {
            Action::QuickChoice(i) => activate_quick_choice(self.program, &mut self.state, *i)?,
            Action::Answer(raw) => {
                let expected = self.state.awaiting();
                let answer = expected.and_then(|k| Answer::parse_as(k, raw)).ok_or(
                    VmError::WrongInputKind {
                        expected,
                        got: Some(InputKind::Text),
                    },
                )?;
                step(self.program, &mut self.state, Some(answer))?;
            }
        }
        self.show()?;
        Ok(())
    }

    /// Feeds `actions` in order, echoing each; every action must be accepted
    /// and the program must halt.
    pub fn run_scripted(&mut self, actions: &[Action]) -> Result<(), SessionError> {
        for action in actions {
            match action {
                Action::Answer(a) => writeln!(self.out, "> {a}")?,
                Action::QuickChoice(i) => writeln!(self.out, "> {QUICK_DIRECTIVE} {i}")?,
            }
            self.apply(action)?;
        }
        self.require_halted()
    }

    /// Reads actions from `input` until the program halts. Rejected answers
    /// are reported and asked again.
    pub fn run_interactive(&mut self, input: &mut impl BufRead) -> Result<(), SessionError> {
        let mut line = String::new();
        let mut number = 0;
        while !self.state.is_halted() {
            write!(self.out, "> ")?;
            self.out.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                writeln!(self.out)?;
                return self.require_halted();
            }
            number += 1;
            let text = line.trim_end_matches(['\n', '\r']);
            let result = parse_line(text, number).and_then(|a| self.apply(&a));
            match result {
                Ok(()) => {}
                Err(SessionError::Io(e)) => return Err(e.into()),
                Err(e) => writeln!(self.out, "error: {e}")?,
            }
        }
        Ok(())
    }

    fn require_halted(&self) -> Result<(), SessionError> {
        match &self.state.status {
            Status::AwaitingInput { prompt, .. } => Err(SessionError::OutOfAnswers(prompt.clone())),
            _ => Ok(()),
        }
    }
}
