//! The finite trajectory space `X^T`, events as bitsets over it, and the
//! event-expression language used on the command line.
//!
//! Trajectory indices use a mixed-radix encoding with time 0 as the most
//! significant digit: `index = Σ_t λ(t)·m^(n−1−t)`.

use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::quantum::{check_trajectory_cap, QuantumError, QuantumSystem, Region, SSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("event length {found} does not match trajectory space size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("s-set does not fit the trajectory space: {0}")]
    Dimension(#[from] QuantumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectorySpace {
    m: usize,
    n: usize,
    size: usize,
}

impl TrajectorySpace {
    pub fn new(m: usize, n: usize, cap: usize) -> Result<Self, QuantumError> {
        if m == 0 {
            return Err(QuantumError::NoLabels);
        }
        if n == 0 {
            return Err(QuantumError::NoTimes);
        }
        let size = check_trajectory_cap(m, n, cap)?;
        Ok(TrajectorySpace { m, n, size })
    }

    /// The space of a constructed system. Its size already passed the cap
    /// check at system construction.
    pub fn of(sys: &QuantumSystem) -> Self {
        let (m, n) = (sys.m(), sys.n_times());
        TrajectorySpace {
            m,
            n,
            size: m.pow(n as u32),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `λ(t)` for the trajectory with the given index.
    pub fn label_at(&self, index: usize, time: usize) -> usize {
        let place = self.m.pow((self.n - 1 - time) as u32);
        (index / place) % self.m
    }

    pub fn trajectory(&self, index: usize) -> Vec<usize> {
        (0..self.n).map(|t| self.label_at(index, t)).collect()
    }

    pub fn index_of(&self, labels: &[usize]) -> usize {
        labels.iter().fold(0, |acc, &l| acc * self.m + l)
    }

    fn check_sset(&self, s: &SSet) -> Result<(), QuantumError> {
        if s.time >= self.n {
            return Err(QuantumError::TimeOutOfRange {
                time: s.time,
                n: self.n,
            });
        }
        if s.region.width() != self.m {
            return Err(QuantumError::RegionSize {
                expected: self.m,
                found: s.region.width(),
            });
        }
        Ok(())
    }
}

/// A set of trajectories.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    bits: FixedBitSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOp {
    And,
    Or,
    Not,
}

impl Event {
    pub fn empty(space: &TrajectorySpace) -> Self {
        Event {
            bits: FixedBitSet::with_capacity(space.size()),
        }
    }

    pub fn full(space: &TrajectorySpace) -> Self {
        let mut bits = FixedBitSet::with_capacity(space.size());
        bits.insert_range(..);
        Event { bits }
    }

    pub fn from_indices(space: &TrajectorySpace, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut e = Self::empty(space);
        for i in indices {
            e.bits.insert(i);
        }
        e
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn cardinality(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn complement(&self) -> Event {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Event { bits }
    }

    pub fn intersection(&self, other: &Event) -> Result<Event, EventError> {
        combine(self, other, EventOp::And)
    }

    pub fn union(&self, other: &Event) -> Result<Event, EventError> {
        combine(self, other, EventOp::Or)
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn is_disjoint(&self, other: &Event) -> bool {
        self.bits.is_disjoint(&other.bits)
    }
}

/// `{λ : λ(t) ∈ Δ}`.
pub fn sset_event(space: &TrajectorySpace, s: &SSet) -> Result<Event, EventError> {
    space.check_sset(s)?;
    let mut e = Event::empty(space);
    let place = space.m.pow((space.n - 1 - s.time) as u32);
    // Indices with digit d at position t form runs of length `place`.
    let period = place * space.m;
    for label in s.region.labels() {
        let mut start = label * place;
        while start < space.size {
            e.bits.insert_range(start..start + place);
            start += period;
        }
    }
    Ok(e)
}

/// Bitwise combination; `Not` ignores `b`.
pub fn combine(a: &Event, b: &Event, op: EventOp) -> Result<Event, EventError> {
    if op == EventOp::Not {
        return Ok(a.complement());
    }
    if a.len() != b.len() {
        return Err(EventError::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let mut bits = a.bits.clone();
    match op {
        EventOp::And => bits.intersect_with(&b.bits),
        EventOp::Or => bits.union_with(&b.bits),
        EventOp::Not => unreachable!(),
    }
    Ok(Event { bits })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("time index {time} out of range 0..{n} in `{token}`")]
    TimeOutOfRange { time: usize, n: usize, token: String },
    #[error("label {label} out of range 0..{m} in `{token}`")]
    LabelOutOfRange {
        label: usize,
        m: usize,
        token: String,
    },
}

/// Event expression syntax tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventExpr {
    Atom { time: usize, labels: Vec<usize> },
    Not(Box<EventExpr>),
    And(Box<EventExpr>, Box<EventExpr>),
    Or(Box<EventExpr>, Box<EventExpr>),
}

impl EventExpr {
    pub fn atom(s: &SSet) -> EventExpr {
        EventExpr::Atom {
            time: s.time,
            labels: s.region.labels().collect(),
        }
    }

    pub fn and(a: EventExpr, b: EventExpr) -> EventExpr {
        EventExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: EventExpr, b: EventExpr) -> EventExpr {
        EventExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: EventExpr) -> EventExpr {
        EventExpr::Not(Box::new(a))
    }

    pub fn evaluate(&self, space: &TrajectorySpace) -> Result<Event, ExprError> {
        match self {
            EventExpr::Atom { time, labels } => {
                let token = || self.to_string();
                if *time >= space.n() {
                    return Err(ExprError::TimeOutOfRange {
                        time: *time,
                        n: space.n(),
                        token: token(),
                    });
                }
                let region = Region::from_labels(space.m(), labels).map_err(|e| match e {
                    QuantumError::LabelOutOfRange { label, m } => ExprError::LabelOutOfRange {
                        label,
                        m,
                        token: token(),
                    },
                    other => unreachable!("{other}"),
                })?;
                Ok(sset_event(space, &SSet::new(*time, region)).expect("checked above"))
            }
            EventExpr::Not(a) => Ok(a.evaluate(space)?.complement()),
            EventExpr::And(a, b) => Ok(a
                .evaluate(space)?
                .intersection(&b.evaluate(space)?)
                .expect("same space")),
            EventExpr::Or(a, b) => Ok(a
                .evaluate(space)?
                .union(&b.evaluate(space)?)
                .expect("same space")),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // precedence: | = 1, & = 2, unary/atom = 3
        match self {
            EventExpr::Atom { time, labels } => {
                write!(f, "(t={time},{{")?;
                for (k, l) in labels.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{l}")?;
                }
                write!(f, "}})")
            }
            EventExpr::Not(a) => {
                write!(f, "!")?;
                a.fmt_prec(f, 3)
            }
            EventExpr::And(a, b) => {
                let paren = parent > 2;
                if paren {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                // right operand at higher precedence keeps the tree shape under
                // left-associative parsing
                b.fmt_prec(f, 3)?;
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
            EventExpr::Or(a, b) => {
                let paren = parent > 1;
                if paren {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 2)?;
                if paren {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for EventExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => self.error(format!("expected '{}', found '{}'", c as char, x as char)),
            None => self.error(format!("expected '{}', found end of input", c as char)),
        }
    }

    fn int(&mut self) -> Result<usize, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.error("expected integer");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| {
                self.pos = start;
                self.error("integer too large")
            })
    }

    // expr := and_term ('|' and_term)*
    fn expr(&mut self) -> Result<EventExpr, ExprError> {
        let mut lhs = self.and_term()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let rhs = self.and_term()?;
            lhs = EventExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    // and_term := term ('&' term)*
    fn and_term(&mut self) -> Result<EventExpr, ExprError> {
        let mut lhs = self.term()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = EventExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    // term := '!' term | '(' expr ')' | atom
    fn term(&mut self) -> Result<EventExpr, ExprError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(EventExpr::not(self.term()?))
            }
            Some(b'(') => {
                // An atom starts with "(t=" ; anything else is a group.
                let save = self.pos;
                self.pos += 1;
                if self.peek() == Some(b't') {
                    self.pos = save;
                    return self.atom();
                }
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) => self.error(format!("unexpected '{}'", c as char)),
            None => self.error("unexpected end of input"),
        }
    }

    // atom := '(' 't=' INT ',' '{' INT (',' INT)* '}' ')'
    fn atom(&mut self) -> Result<EventExpr, ExprError> {
        self.expect(b'(')?;
        self.expect(b't')?;
        self.expect(b'=')?;
        let time = self.int()?;
        self.expect(b',')?;
        self.expect(b'{')?;
        let mut labels = Vec::new();
        if self.peek() != Some(b'}') {
            labels.push(self.int()?);
            while self.peek() == Some(b',') {
                self.pos += 1;
                labels.push(self.int()?);
            }
        }
        self.expect(b'}')?;
        self.expect(b')')?;
        Ok(EventExpr::Atom { time, labels })
    }
}

/// Parse an event expression without range checks.
pub fn parse_expr(src: &str) -> Result<EventExpr, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return p.error(format!("unexpected trailing '{}'", c as char));
    }
    Ok(e)
}

pub fn parse_event(src: &str, space: &TrajectorySpace) -> Result<Event, ExprError> {
    parse_expr(src)?.evaluate(space)
}

/// Parse a comma-separated pair of atoms, `(t=1,{0}),(t=2,{0})`.
pub fn parse_sset_pair(src: &str, m: usize) -> Result<(SSet, SSet), ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let a = p.atom()?;
    p.expect(b',')?;
    let b = p.atom()?;
    if let Some(c) = p.peek() {
        return p.error(format!("unexpected trailing '{}'", c as char));
    }
    Ok((atom_to_sset(&a, m)?, atom_to_sset(&b, m)?))
}

pub fn parse_sset(src: &str, m: usize) -> Result<SSet, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let a = p.atom()?;
    if let Some(c) = p.peek() {
        return p.error(format!("unexpected trailing '{}'", c as char));
    }
    atom_to_sset(&a, m)
}

fn atom_to_sset(atom: &EventExpr, m: usize) -> Result<SSet, ExprError> {
    let EventExpr::Atom { time, labels } = atom else {
        unreachable!()
    };
    let region = Region::from_labels(m, labels).map_err(|_| ExprError::LabelOutOfRange {
        label: labels.iter().copied().find(|&l| l >= m).unwrap_or(0),
        m,
        token: atom.to_string(),
    })?;
    Ok(SSet::new(*time, region))
}
