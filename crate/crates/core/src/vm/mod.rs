//! Decision-tree interpreter for the code section.
//!
//! The machine does no I/O. It runs until it needs an answer or reaches the
//! end of the code, and reports what happened as a list of [`Event`]s.

mod transcript;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AttributeValue, Condition, Instruction, Program, VertexId};
use crate::routing::{describe_route, Network, Route, RouteStep, SearchRequest};

pub use transcript::{
    format_transcript, parse_transcript, replay, run_script, ScriptInput, TranscriptEntry,
    TranscriptError,
};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Text,
    Number,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Answer {
    Text(String),
    Number(f64),
}

impl Answer {
    pub fn kind(&self) -> InputKind {
        match self {
            Answer::Text(_) => InputKind::Text,
            Answer::Number(_) => InputKind::Number,
        }
    }

    /// Reads a typed-in answer as the kind the machine is waiting for.
    pub fn parse_as(kind: InputKind, raw: &str) -> Option<Answer> {
        match kind {
            InputKind::Text => Some(Answer::Text(raw.to_string())),
            InputKind::Number => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Answer::Number),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Register {
    #[default]
    Empty,
    Text(String),
    Number(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    Running,
    AwaitingInput { prompt: String, kind: InputKind },
    Halted,
}

/// A quick choice as presented to the user.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuickChoiceOffer {
    pub index: usize,
    pub weight_attr: String,
    /// Names of the vertices the choice can lead to.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Printed {
        text: String,
    },
    RouteFound {
        route: Route,
        steps: Vec<RouteStep>,
        /// Symbol of `route.unit`.
        unit: Option<String>,
    },
    QuickChoicesOffered {
        choices: Vec<QuickChoiceOffer>,
    },
    SearchFailed {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VmError {
    #[error("no origin vertex: the program does not define one and none was given")]
    NoOrigin,
    #[error("origin vertex {0} does not exist")]
    UnknownOrigin(VertexId),
    #[error("expected {}, got {}", describe_kind(*.expected), describe_kind(*.got))]
    WrongInputKind {
        expected: Option<InputKind>,
        got: Option<InputKind>,
    },
    #[error("jump to {target} is outside the code section")]
    JumpOutOfRange { target: usize },
    #[error("quick choice {0} does not exist")]
    UnknownQuickChoice(usize),
    #[error("quick choices are only available before the first answer")]
    QuickChoiceUnavailable,
    #[error("step budget of {0} instructions exhausted")]
    StepBudgetExceeded(u64),
}

fn describe_kind(kind: Option<InputKind>) -> &'static str {
    match kind {
        Some(InputKind::Text) => "a text answer",
        Some(InputKind::Number) => "a numeric answer",
        None => "no answer",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VmOptions {
    /// Overrides the header's origin.
    pub origin: Option<VertexId>,
    pub default_weight: Option<f64>,
    pub step_budget: u64,
}

impl Default for VmOptions {
    fn default() -> Self {
        VmOptions {
            origin: None,
            default_weight: None,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VmState {
    pub pc: usize,
    pub register: Register,
    pub criteria: Vec<Condition>,
    pub events: Vec<Event>,
    pub status: Status,
    pub origin: VertexId,
    pub answers_given: usize,
    #[serde(skip)]
    log: Vec<TranscriptEntry>,
    #[serde(skip)]
    options: VmOptions,
}

impl VmState {
    pub fn is_halted(&self) -> bool {
        self.status == Status::Halted
    }

    pub fn awaiting(&self) -> Option<InputKind> {
        match self.status {
            Status::AwaitingInput { kind, .. } => Some(kind),
            _ => None,
        }
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.log
    }

    /// Routes found so far, oldest first.
    pub fn routes(&self) -> impl Iterator<Item = &Route> {
        self.events.iter().filter_map(|e| match e {
            Event::RouteFound { route, .. } => Some(route),
            _ => None,
        })
    }

    fn emit(&mut self, event: Event) {
        self.log.push(TranscriptEntry::from_event(&event));
        self.events.push(event);
    }
}

pub fn start(program: &Program, origin: Option<VertexId>) -> Result<VmState, VmError> {
    start_with(
        program,
        VmOptions {
            origin,
            ..VmOptions::default()
        },
    )
}

pub fn start_with(program: &Program, options: VmOptions) -> Result<VmState, VmError> {
    let origin = options
        .origin
        .or(program.header.origin)
        .ok_or(VmError::NoOrigin)?;
    if origin.index() >= program.graph.len() {
        return Err(VmError::UnknownOrigin(origin));
    }
    let mut state = VmState {
        pc: 0,
        register: Register::Empty,
        criteria: Vec::new(),
        events: Vec::new(),
        status: Status::Running,
        origin,
        answers_given: 0,
        log: Vec::new(),
        options,
    };
    if !program.quick_choices.is_empty() {
        let choices = quick_choice_offers(program);
        state.emit(Event::QuickChoicesOffered { choices });
    }
    run(program, &mut state)?;
    Ok(state)
}

/// The program's quick choices, labelled by the vertices they lead to.
pub fn quick_choice_offers(program: &Program) -> Vec<QuickChoiceOffer> {
    let network = Network::new(program).ok();
    program
        .quick_choices
        .iter()
        .enumerate()
        .map(|(index, qc)| {
            let names: Vec<String> = network
                .as_ref()
                .and_then(|n| n.candidates(&qc.condition).ok())
                .unwrap_or_default()
                .into_iter()
                .map(
                    |v| match network.as_ref().and_then(|n| n.vertex_value(v, "name")) {
                        Some(AttributeValue::Str(s)) => s.clone(),
                        _ => format!("vertex {v}"),
                    },
                )
                .collect();
            QuickChoiceOffer {
                index,
                weight_attr: qc.weight_attr.clone(),
                label: if names.is_empty() {
                    format!("quick choice {index}")
                } else {
                    names.join(" / ")
                },
            }
        })
        .collect()
}

/// Feeds `answer` to a machine waiting for input and runs to the next
/// prompt or the end. A rejected answer leaves the state untouched.
pub fn step(program: &Program, state: &mut VmState, answer: Option<Answer>) -> Result<(), VmError> {
    let expected = state.awaiting();
    let got = answer.as_ref().map(Answer::kind);
    if expected != got {
        return Err(VmError::WrongInputKind { expected, got });
    }
    if let Some(answer) = answer {
        state.log.push(TranscriptEntry::Answer(answer.clone()));
        state.register = match answer {
            Answer::Text(s) => Register::Text(s),
            Answer::Number(x) => Register::Number(x),
        };
        state.answers_given += 1;
        state.pc += 1;
        state.status = Status::Running;
    }
    run(program, state)
}

/// Runs one of the program's quick choices from the origin and halts.
pub fn activate_quick_choice(
    program: &Program,
    state: &mut VmState,
    index: usize,
) -> Result<(), VmError> {
    let qc = program
        .quick_choices
        .get(index)
        .ok_or(VmError::UnknownQuickChoice(index))?;
    if state.answers_given > 0 || state.is_halted() {
        return Err(VmError::QuickChoiceUnavailable);
    }
    state.log.push(TranscriptEntry::QuickChoice(index));
    search(program, state, &qc.weight_attr, qc.condition.clone());
    state.pc = program.code.len();
    state.status = Status::Halted;
    Ok(())
}

fn search(program: &Program, state: &mut VmState, weight_attr: &str, condition: Condition) {
    let result = Network::new(program).and_then(|network| {
        let request = SearchRequest {
            default_weight: state.options.default_weight,
            ..SearchRequest::new(state.origin, weight_attr, condition)
        };
        let route = network.shortest_path(&request)?;
        let steps = describe_route(&network, &route, weight_attr);
        Ok((route, steps))
    });
    state.emit(match result {
        Ok((route, steps)) => Event::RouteFound {
            unit: route
                .unit
                .and_then(|u| program.unit_symbol(u))
                .map(str::to_string),
            route,
            steps,
        },
        Err(e) => Event::SearchFailed {
            message: e.to_string(),
        },
    });
}

fn jump(program: &Program, target: usize) -> Result<usize, VmError> {
    if target > program.code.len() {
        return Err(VmError::JumpOutOfRange { target });
    }
    Ok(target)
}

fn run(program: &Program, state: &mut VmState) -> Result<(), VmError> {
    let mut budget = state.options.step_budget;
    loop {
        let Some(ins) = program.code.get(state.pc) else {
            state.pc = program.code.len();
            state.status = Status::Halted;
            return Ok(());
        };
        if budget == 0 {
            return Err(VmError::StepBudgetExceeded(state.options.step_budget));
        }
        budget -= 1;
        match ins {
            Instruction::Input { prompt } | Instruction::InputNumeric { prompt } => {
                let kind = if matches!(ins, Instruction::Input { .. }) {
                    InputKind::Text
                } else {
                    InputKind::Number
                };
                state.log.push(TranscriptEntry::Prompt {
                    kind,
                    text: prompt.clone(),
                });
                state.status = Status::AwaitingInput {
                    prompt: prompt.clone(),
                    kind,
                };
                return Ok(());
            }
            Instruction::If { pattern, target } => {
                let hit = match &state.register {
                    Register::Text(answer) => answer.trim().eq_ignore_ascii_case(pattern.trim()),
                    _ => false,
                };
                state.pc = if hit {
                    jump(program, *target)?
                } else {
                    state.pc + 1
                };
            }
            Instruction::IfCmp {
                op,
                literal,
                target,
                ..
            } => {
                let Register::Number(x) = state.register else {
                    let got = match state.register {
                        Register::Text(_) => Some(InputKind::Text),
                        _ => None,
                    };
                    return Err(VmError::WrongInputKind {
                        expected: Some(InputKind::Number),
                        got,
                    });
                };
                let rhs = literal.as_f64().unwrap_or(f64::NAN);
                state.pc = if op.compare(&x, &rhs) {
                    jump(program, *target)?
                } else {
                    state.pc + 1
                };
            }
            Instruction::Goto { target } => state.pc = jump(program, *target)?,
            Instruction::Push(cond) => {
                state.criteria.push(cond.clone());
                state.pc += 1;
            }
            Instruction::Print(text) => {
                state.emit(Event::Printed { text: text.clone() });
                state.pc += 1;
            }
            Instruction::SearchQuick(index) => {
                let qc = program
                    .quick_choices
                    .get(*index)
                    .ok_or(VmError::UnknownQuickChoice(*index))?;
                search(program, state, &qc.weight_attr, qc.condition.clone());
                state.pc += 1;
            }
            Instruction::SearchGuided { weight_attr, .. } => {
                let criteria = std::mem::take(&mut state.criteria);
                match Condition::any_of(criteria) {
                    Some(cond) => search(program, state, weight_attr, cond),
                    None => state.emit(Event::SearchFailed {
                        message: "no search criteria were pushed".into(),
                    }),
                }
                state.pc += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v(n: u64) -> VertexId {
        VertexId::from_one_based(n).unwrap()
    }

    #[test]
    fn starts_at_first_prompt() {
        let p = corpus::plant();
        let s = start(&p, Some(v(2))).unwrap();
        assert_eq!(
            s.status,
            Status::AwaitingInput {
                prompt: "What is your destination?".into(),
                kind: InputKind::Text
            }
        );
        assert!(matches!(s.events[0], Event::QuickChoicesOffered { .. }));
    }

    #[test]
    fn missing_origin() {
        let p = corpus::plant();
        assert_eq!(start(&p, None).unwrap_err(), VmError::NoOrigin);
        assert_eq!(
            start(&p, Some(VertexId(6))).unwrap_err(),
            VmError::UnknownOrigin(VertexId(6))
        );
    }

    #[test]
    fn empty_code_halts_immediately() {
        let mut p = corpus::plant();
        p.code.clear();
        p.quick_choices.clear();
        let s = start(&p, Some(v(1))).unwrap();
        assert!(s.is_halted());
        assert!(s.transcript().is_empty());
    }

    #[test]
    fn wrong_kind_is_rejected_without_side_effects() {
        let p = corpus::plant();
        let mut s = start(&p, Some(v(2))).unwrap();
        let before = s.clone();
        let err = step(&p, &mut s, Some(Answer::Number(3.0))).unwrap_err();
        assert!(matches!(err, VmError::WrongInputKind { .. }));
        assert_eq!(s, before);
        let err = step(&p, &mut s, None).unwrap_err();
        assert!(matches!(err, VmError::WrongInputKind { got: None, .. }));
    }

    #[test]
    fn unmatched_answer_halts() {
        let p = corpus::plant();
        let mut s = start(&p, Some(v(2))).unwrap();
        step(&p, &mut s, Some(Answer::Text("Cafeteria".into()))).unwrap();
        assert!(s.is_halted());
        assert_eq!(s.pc, p.code.len());
    }

    #[test]
    fn if_is_case_insensitive_and_trimmed() {
        let p = corpus::plant();
        let mut s = start(&p, Some(v(2))).unwrap();
        step(&p, &mut s, Some(Answer::Text("  emergency ".into()))).unwrap();
        assert_eq!(s.routes().count(), 1);
        let mut s = start(&p, Some(v(2))).unwrap();
        step(&p, &mut s, Some(Answer::Text("no emergency".into()))).unwrap();
        assert_eq!(s.routes().count(), 0);
    }

    #[test]
    fn quick_choice_rules() {
        let p = corpus::plant();
        let mut s = start(&p, Some(v(6))).unwrap();
        assert_eq!(
            activate_quick_choice(&p, &mut s, 5).unwrap_err(),
            VmError::UnknownQuickChoice(5)
        );
        activate_quick_choice(&p, &mut s, 0).unwrap();
        assert!(s.is_halted());
        let route = s.routes().next().unwrap();
        assert_eq!(route.vertices, vec![v(6), v(5), v(4), v(2), v(1)]);
        assert_eq!(route.total_cost, 21.9);

        let mut s = start(&p, Some(v(2))).unwrap();
        step(&p, &mut s, Some(Answer::Text("Assembly line".into()))).unwrap();
        assert_eq!(
            activate_quick_choice(&p, &mut s, 0).unwrap_err(),
            VmError::QuickChoiceUnavailable
        );
    }

    #[test]
    fn input_free_loop_hits_budget() {
        let mut p = corpus::plant();
        p.code = vec![Instruction::Goto { target: 0 }];
        let err = start_with(
            &p,
            VmOptions {
                origin: Some(v(1)),
                step_budget: 1000,
                ..VmOptions::default()
            },
        )
        .unwrap_err();
        assert_eq!(err, VmError::StepBudgetExceeded(1000));
    }

    #[test]
    fn guided_search_empties_the_stack() {
        let p = corpus::plant();
        let mut s = start(&p, Some(v(2))).unwrap();
        step(&p, &mut s, Some(Answer::Text("Assembly line".into()))).unwrap();
        step(&p, &mut s, Some(Answer::Number(8.0))).unwrap();
        assert!(s.criteria.is_empty());
        assert_eq!(s.routes().next().unwrap().destination(), v(5));
    }
}
