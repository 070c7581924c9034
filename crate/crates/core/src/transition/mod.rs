//! Parser configurations and the arc-standard, arc-hybrid, and arc-eager
//! transition systems, with static and dynamic oracles.
//!
//! A configuration is (stack, buffer, arcs). The buffer initially holds
//! `[ROOT | w1..wn]`; the end-of-sentence marker at index n+1 is
//! addressable but never shifted. Terminal configurations have an empty
//! buffer and the stack `[ROOT]`.

mod dynamic_oracle;
mod static_oracle;

pub use dynamic_oracle::dynamic_oracle_cost;
pub use static_oracle::static_oracle;

use serde::{Deserialize, Serialize};

use crate::corpus::ParseTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    ArcStandard,
    ArcHybrid,
    ArcEager,
}

impl SystemKind {
    /// Transition inventory, in the fixed scoring order.
    pub fn transitions(self) -> &'static [Transition] {
        match self {
            SystemKind::ArcStandard | SystemKind::ArcHybrid => {
                &[Transition::Shift, Transition::RightReduce, Transition::LeftReduce]
            }
            SystemKind::ArcEager => &[
                Transition::Shift,
                Transition::RightAttach,
                Transition::LeftReduce,
                Transition::Reduce,
            ],
        }
    }

    pub fn transition_index(self, t: Transition) -> Option<usize> {
        self.transitions().iter().position(|&x| x == t)
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SystemKind::ArcStandard => "arc-standard",
            SystemKind::ArcHybrid => "arc-hybrid",
            SystemKind::ArcEager => "arc-eager",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    /// Move the buffer front onto the stack.
    Shift,
    /// Pop s0, attaching it under s1 (arc-standard, arc-hybrid).
    RightReduce,
    /// Arc-standard: pop s1, attaching it under s0. Arc-hybrid/arc-eager:
    /// pop s0, attaching it under the buffer front.
    LeftReduce,
    /// Arc-eager: attach the buffer front under s0 and push it.
    RightAttach,
    /// Arc-eager: pop an already-attached s0.
    Reduce,
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Transition::Shift => "sh",
            Transition::RightReduce => "rr",
            Transition::LeftReduce => "lr",
            Transition::RightAttach => "ra",
            Transition::Reduce => "re",
        };
        f.write_str(s)
    }
}

/// Immutable parser state; `apply` returns a fresh configuration.
///
/// `heads[m]` doubles as the arc set (each modifier has at most one head)
/// and, for arc-eager, as the attached flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    stack: Vec<usize>,
    front: usize,
    heads: Vec<Option<usize>>,
    n: usize,
}

impl Config {
    /// Initial configuration: empty stack, buffer `[ROOT | w1..wn]`.
    pub fn initial(n: usize) -> Config {
        Config {
            stack: Vec::new(),
            front: 0,
            heads: vec![None; n + 1],
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    /// Buffer front index; `n + 1` means the buffer holds only the end
    /// marker, i.e. it is empty.
    pub fn front(&self) -> usize {
        self.front
    }

    pub fn buffer_empty(&self) -> bool {
        self.front > self.n
    }

    pub fn s0(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    pub fn head_of(&self, m: usize) -> Option<usize> {
        self.heads[m]
    }

    pub fn is_attached(&self, m: usize) -> bool {
        self.heads[m].is_some()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads
            .iter()
            .enumerate()
            .filter_map(|(m, h)| h.map(|h| (h, m)))
    }

    pub fn num_arcs(&self) -> usize {
        self.heads.iter().filter(|h| h.is_some()).count()
    }

    pub fn is_terminal(&self) -> bool {
        self.buffer_empty() && self.stack == [0]
    }

    /// Transitions whose preconditions hold in this configuration.
    pub fn legal(&self, system: SystemKind) -> Vec<Transition> {
        system
            .transitions()
            .iter()
            .copied()
            .filter(|&t| self.check(t, system).is_ok())
            .collect()
    }

    fn check(&self, t: Transition, system: SystemKind) -> Result<()> {
        let fail = |violated: &str| {
            Err(Error::IllegalTransition {
                system,
                transition: t,
                violated: violated.into(),
            })
        };
        match (system, t) {
            (_, Transition::Shift) => {
                if self.front > self.n {
                    return fail("the end marker is never shifted");
                }
            }
            (SystemKind::ArcStandard | SystemKind::ArcHybrid, Transition::RightReduce) => {
                if self.stack.len() < 2 {
                    return fail("needs stack depth >= 2");
                }
            }
            (SystemKind::ArcStandard, Transition::LeftReduce) => {
                if self.stack.len() < 2 {
                    return fail("needs stack depth >= 2");
                }
                if self.stack[self.stack.len() - 2] == 0 {
                    return fail("ROOT may not become a modifier");
                }
            }
            (SystemKind::ArcHybrid | SystemKind::ArcEager, Transition::LeftReduce) => {
                match self.s0() {
                    None => return fail("needs a stack item"),
                    Some(0) => return fail("ROOT may not become a modifier"),
                    Some(s0) => {
                        if self.front > self.n {
                            return fail("needs a buffer token");
                        }
                        if system == SystemKind::ArcEager && self.is_attached(s0) {
                            return fail("s0 already attached");
                        }
                    }
                }
            }
            (SystemKind::ArcEager, Transition::RightAttach) => {
                if self.s0().is_none() {
                    return fail("needs a stack item");
                }
                if self.front > self.n {
                    return fail("needs a buffer token");
                }
            }
            (SystemKind::ArcEager, Transition::Reduce) => match self.s0() {
                None => return fail("needs a stack item"),
                Some(s0) => {
                    if !self.is_attached(s0) {
                        return fail("s0 has not been attached");
                    }
                }
            },
            _ => return fail("transition not in this system"),
        }
        Ok(())
    }

    /// Applies a transition, returning the successor configuration.
    pub fn apply(&self, t: Transition, system: SystemKind) -> Result<Config> {
        self.check(t, system)?;
        let mut next = self.clone();
        match (system, t) {
            (_, Transition::Shift) => {
                next.stack.push(next.front);
                next.front += 1;
            }
            (_, Transition::RightReduce) => {
                let s0 = next.stack.pop().unwrap();
                let s1 = *next.stack.last().unwrap();
                next.heads[s0] = Some(s1);
            }
            (SystemKind::ArcStandard, Transition::LeftReduce) => {
                let s0 = next.stack.pop().unwrap();
                let s1 = next.stack.pop().unwrap();
                next.heads[s1] = Some(s0);
                next.stack.push(s0);
            }
            (_, Transition::LeftReduce) => {
                let s0 = next.stack.pop().unwrap();
                next.heads[s0] = Some(next.front);
            }
            (_, Transition::RightAttach) => {
                let s0 = *next.stack.last().unwrap();
                next.heads[next.front] = Some(s0);
                next.stack.push(next.front);
                next.front += 1;
            }
            (_, Transition::Reduce) => {
                next.stack.pop();
            }
        }
        Ok(next)
    }

    /// True when a terminal configuration is still reachable after `t`.
    ///
    /// Only arc-eager can strand itself: once the buffer is empty, an
    /// unattached non-ROOT stack token can never be popped. Shifting the
    /// last token is therefore always fatal, and right-attaching it is
    /// fatal while unattached tokens remain on the stack.
    pub fn keeps_completable(&self, t: Transition, system: SystemKind) -> bool {
        if system != SystemKind::ArcEager {
            return true;
        }
        match t {
            Transition::Shift => self.front < self.n,
            Transition::RightAttach => {
                self.front < self.n
                    || self
                        .stack
                        .iter()
                        .all(|&s| s == 0 || self.is_attached(s))
            }
            _ => true,
        }
    }

    /// Legal transitions that keep a terminal configuration reachable.
    pub fn viable(&self, system: SystemKind) -> Vec<Transition> {
        self.legal(system)
            .into_iter()
            .filter(|&t| self.keeps_completable(t, system))
            .collect()
    }

    /// Arcs as a head array; errors unless exactly the n tokens are attached.
    pub fn to_tree(&self) -> Result<ParseTree> {
        let heads = (1..=self.n)
            .map(|m| {
                self.heads[m]
                    .ok_or_else(|| Error::InvalidTree(format!("token {m} was never attached")))
            })
            .collect::<Result<Vec<_>>>()?;
        ParseTree::new(heads)
    }
}

/// Replays `sequence` from the initial configuration for a length-`n`
/// sentence and extracts the derived tree.
pub fn sequence_to_tree(sequence: &[Transition], n: usize, system: SystemKind) -> Result<ParseTree> {
    let config = replay(sequence, n, system)?;
    if !config.is_terminal() {
        return Err(Error::BadSequence {
            step: sequence.len(),
            msg: "sequence does not reach a terminal configuration".into(),
        });
    }
    config.to_tree()
}

/// Replays a sequence, returning the final configuration.
pub fn replay(sequence: &[Transition], n: usize, system: SystemKind) -> Result<Config> {
    let mut config = Config::initial(n);
    for (step, &t) in sequence.iter().enumerate() {
        config = config
            .apply(t, system)
            .map_err(|e| Error::BadSequence { step, msg: e.to_string() })?;
    }
    Ok(config)
}
