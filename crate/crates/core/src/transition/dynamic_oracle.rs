use super::{Config, SystemKind, Transition};
use crate::corpus::ParseTree;
use crate::error::{Error, Result};

/// Number of gold arcs a transition renders unreachable, following the
/// arc-decomposition oracles for arc-hybrid and arc-eager.
///
/// When the transition makes termination itself unreachable (arc-eager
/// stranding, see [`Config::keeps_completable`]), every reachable gold arc
/// is lost, including any the transition itself just built.
pub fn dynamic_oracle_cost(
    config: &Config,
    transition: Transition,
    gold: &ParseTree,
    system: SystemKind,
) -> Result<usize> {
    if system == SystemKind::ArcStandard {
        return Err(Error::UnsupportedSystem {
            system,
            msg: "no dynamic oracle; train arc-standard from the static oracle".into(),
        });
    }
    let next = config.apply(transition, system)?;
    let before = Reachability::new(config, gold, system);
    let fatal = !config.keeps_completable(transition, system);
    let after = Reachability::new(&next, gold, system);
    let mut lost = 0usize;
    for m in 1..=gold.len() {
        if before.arc_reachable(m) && !(if fatal { false } else { after.arc_reachable(m) }) {
            lost += 1;
        }
    }
    Ok(lost)
}

/// Per-arc reachability of the gold tree from a configuration.
///
/// Arc-hybrid: a stack token can only take its direct stack predecessor or
/// a buffer token as head; a buffer token can take anything still present.
/// Arc-eager: a stack token's head must come from the buffer; a buffer
/// token's head may sit in the stack or buffer — except that the *last*
/// token can only be right-attached, which strands every unattached stack
/// token at or below its head, so that arc additionally demands an
/// attached stack prefix.
struct Reachability<'a> {
    config: &'a Config,
    gold: &'a ParseTree,
    system: SystemKind,
    stack_pos: Vec<usize>,
}

impl<'a> Reachability<'a> {
    fn new(config: &'a Config, gold: &'a ParseTree, system: SystemKind) -> Self {
        let mut stack_pos = vec![usize::MAX; gold.len() + 1];
        for (depth, &s) in config.stack().iter().enumerate() {
            stack_pos[s] = depth;
        }
        Reachability { config, gold, system, stack_pos }
    }

    fn in_buffer(&self, i: usize) -> bool {
        i >= self.config.front() && i <= self.gold.len()
    }

    fn on_stack(&self, i: usize) -> bool {
        self.stack_pos.get(i).is_some_and(|&d| d != usize::MAX)
    }

    fn in_config(&self, i: usize) -> bool {
        i == 0 || self.on_stack(i) || self.in_buffer(i)
    }

    /// Whether some completion attaches token `m` to its gold head.
    fn arc_reachable(&self, m: usize) -> bool {
        let h = self.gold.head(m);
        let n = self.gold.len();
        if let Some(built) = self.config.head_of(m) {
            return built == h;
        }
        if self.in_buffer(m) {
            match self.system {
                SystemKind::ArcHybrid => self.in_config(h),
                SystemKind::ArcEager => {
                    if m < n || self.in_buffer(h) {
                        self.in_config(h)
                    } else if h == 0 || self.on_stack(h) {
                        // h == 0 with ROOT still in the buffer is caught above
                        (h == 0 || self.config.is_attached(h))
                            && self.config.stack()[..self.stack_pos[h]]
                                .iter()
                                .all(|&s| s == 0 || self.config.is_attached(s))
                    } else {
                        false
                    }
                }
                SystemKind::ArcStandard => unreachable!(),
            }
        } else if self.on_stack(m) {
            match self.system {
                SystemKind::ArcHybrid => {
                    self.in_buffer(h)
                        || (self.stack_pos[m] > 0 && self.config.stack()[self.stack_pos[m] - 1] == h)
                }
                SystemKind::ArcEager => self.in_buffer(h),
                SystemKind::ArcStandard => unreachable!(),
            }
        } else {
            false // consumed without its gold head
        }
    }
}
