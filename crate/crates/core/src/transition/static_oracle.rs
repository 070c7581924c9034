use super::{Config, SystemKind, Transition};
use crate::corpus::{is_projective, ParseTree};
use crate::error::{Error, Result};

/// Canonical gold transition sequence for a projective tree: attachments
/// and reductions are taken as early as legally possible, with a node
/// reduced only once all of its dependents are attached.
pub fn static_oracle(gold: &ParseTree, system: SystemKind) -> Result<Vec<Transition>> {
    if !is_projective(gold) {
        return Err(Error::NonProjectiveGold);
    }
    let n = gold.len();
    let mut deps_left = vec![0usize; n + 1]; // unattached gold dependents per head
    for (h, _m) in gold.arcs() {
        deps_left[h] += 1;
    }
    let mut config = Config::initial(n);
    let mut sequence = Vec::with_capacity(2 * n + 1);

    while !config.is_terminal() {
        let t = choose(&config, gold, &deps_left, system).ok_or_else(|| Error::BadSequence {
            step: sequence.len(),
            msg: "static oracle is stuck (tree not derivable)".into(),
        })?;
        if matches!(
            t,
            Transition::RightReduce | Transition::LeftReduce | Transition::RightAttach
        ) {
            // the modifier this transition attaches
            let modifier = match (system, t) {
                (SystemKind::ArcStandard, Transition::LeftReduce) => config.stack()[config.stack().len() - 2],
                (_, Transition::RightAttach) => config.front(),
                (SystemKind::ArcHybrid | SystemKind::ArcEager, Transition::LeftReduce) => config.s0().unwrap(),
                (_, _) => config.s0().unwrap(),
            };
            deps_left[gold.head(modifier)] -= 1;
        }
        config = config.apply(t, system)?;
        sequence.push(t);
    }
    Ok(sequence)
}

fn choose(
    config: &Config,
    gold: &ParseTree,
    deps_left: &[usize],
    system: SystemKind,
) -> Option<Transition> {
    let stack = config.stack();
    let b0 = config.front();
    let buffer_ok = !config.buffer_empty();
    match system {
        SystemKind::ArcStandard => {
            if stack.len() >= 2 {
                let s0 = stack[stack.len() - 1];
                let s1 = stack[stack.len() - 2];
                if s1 != 0 && gold.head(s1) == s0 && deps_left[s1] == 0 {
                    return Some(Transition::LeftReduce);
                }
                if gold.head(s0) == s1 && deps_left[s0] == 0 {
                    return Some(Transition::RightReduce);
                }
            }
            buffer_ok.then_some(Transition::Shift)
        }
        SystemKind::ArcHybrid => {
            if let Some(s0) = config.s0() {
                if s0 != 0 && buffer_ok && gold.head(s0) == b0 && deps_left[s0] == 0 {
                    return Some(Transition::LeftReduce);
                }
                if stack.len() >= 2 && gold.head(s0) == stack[stack.len() - 2] && deps_left[s0] == 0 {
                    return Some(Transition::RightReduce);
                }
            }
            buffer_ok.then_some(Transition::Shift)
        }
        SystemKind::ArcEager => {
            if let Some(s0) = config.s0() {
                if buffer_ok && gold.head(b0) == s0 {
                    return Some(Transition::RightAttach);
                }
                if s0 != 0 && buffer_ok && !config.is_attached(s0) && gold.head(s0) == b0 {
                    return Some(Transition::LeftReduce);
                }
                if config.is_attached(s0) && deps_left[s0] == 0 {
                    return Some(Transition::Reduce);
                }
            }
            buffer_ok.then_some(Transition::Shift)
        }
    }
}
