//! Enumeration-backed equivalence suites, callable from the CLI. Each
//! suite reruns the checks that certify a build: exact decoders against
//! brute force, the reductions, and a gradient check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bruteforce::{brute_best_over, enumerate_projective_trees, enumerate_sequences};
use crate::chart::{decode_cost_augmented, decode_eager, decode_hybrid, sequence_score, ScoreTables};
use crate::graph::{eisner_decode, lemma1_reduction, lemma2_reduction, EdgeScores};
use crate::neural::gradcheck;
use crate::neural::Dims;
use crate::transition::SystemKind;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct SelftestOptions {
    pub max_n: usize,
    pub draws: usize,
    pub seed: u64,
    /// Test hook: corrupt a score table after the reference answer is
    /// computed, to prove the harness catches disagreement.
    pub inject_corruption: bool,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { max_n: 6, draws: 20, seed: 1, inject_corruption: false }
    }
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<SuiteResult> {
    vec![
        decode_suite(opts, SystemKind::ArcHybrid),
        decode_suite(opts, SystemKind::ArcEager),
        cost_augmented_suite(opts),
        eisner_suite(opts),
        lemma1_suite(opts),
        lemma2_suite(opts),
        gradcheck_suite(opts),
    ]
}

fn decode_suite(opts: &SelftestOptions, system: SystemKind) -> SuiteResult {
    let name = match system {
        SystemKind::ArcHybrid => "decode-hybrid-vs-bruteforce",
        _ => "decode-eager-vs-bruteforce",
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checked = 0usize;
    for n in 1..=opts.max_n {
        let sequences = match enumerate_sequences(system, n) {
            Ok(s) => s,
            Err(e) => return fail(name, format!("enumeration failed: {e}")),
        };
        for draw in 0..opts.draws {
            let mut tables = ScoreTables::random(system, n, &mut rng, -1.0, 1.0);
            let reference = match brute_best_over(&sequences, &tables, None) {
                Ok(r) => r,
                Err(e) => return fail(name, format!("brute force failed: {e}")),
            };
            if opts.inject_corruption {
                tables.set(crate::transition::Transition::Shift, 0, 1, 50.0);
            }
            let result = match system {
                SystemKind::ArcHybrid => decode_hybrid(&tables),
                _ => decode_eager(&tables),
            };
            let result = match result {
                Ok(r) => r,
                Err(e) => return fail(name, format!("decode failed: {e}")),
            };
            if (result.score - reference.1).abs() > 1e-9 {
                return fail(
                    name,
                    format!(
                        "n={n} draw={draw}: decode score {} vs brute force {}",
                        result.score, reference.1
                    ),
                );
            }
            let replayed = match sequence_score(&tables, &result.sequence) {
                Ok(s) => s,
                Err(e) => return fail(name, format!("replay failed: {e}")),
            };
            if (replayed - result.score).abs() > 1e-9 {
                return fail(name, format!("n={n}: sequence rescores to {replayed}, decode said {}", result.score));
            }
            checked += 1;
        }
    }
    pass(name, format!("{checked} random table draws matched"))
}

fn cost_augmented_suite(opts: &SelftestOptions) -> SuiteResult {
    let name = "cost-augmented-vs-bruteforce";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed + 1);
    let mut checked = 0usize;
    for system in [SystemKind::ArcHybrid, SystemKind::ArcEager] {
        for n in 1..=opts.max_n {
            let sequences = match enumerate_sequences(system, n) {
                Ok(s) => s,
                Err(e) => return fail(name, format!("enumeration failed: {e}")),
            };
            let trees = match enumerate_projective_trees(n) {
                Ok(t) => t,
                Err(e) => return fail(name, format!("tree enumeration failed: {e}")),
            };
            for draw in 0..opts.draws.min(10) {
                let tables = ScoreTables::random(system, n, &mut rng, -1.0, 1.0);
                let gold = &trees[rng.random_range(0..trees.len())];
                let reference = match brute_best_over(&sequences, &tables, Some(gold)) {
                    Ok(r) => r,
                    Err(e) => return fail(name, format!("brute force failed: {e}")),
                };
                let result = match decode_cost_augmented(&tables, gold) {
                    Ok(r) => r,
                    Err(e) => return fail(name, format!("decode failed: {e}")),
                };
                if (result.score - reference.1).abs() > 1e-9 {
                    return fail(
                        name,
                        format!("{system} n={n} draw={draw}: {} vs {}", result.score, reference.1),
                    );
                }
                checked += 1;
            }
        }
    }
    pass(name, format!("{checked} augmented decodes matched"))
}

fn eisner_suite(opts: &SelftestOptions) -> SuiteResult {
    let name = "eisner-vs-bruteforce";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed + 2);
    let mut checked = 0usize;
    for n in 1..=opts.max_n {
        let trees = match enumerate_projective_trees(n) {
            Ok(t) => t,
            Err(e) => return fail(name, format!("tree enumeration failed: {e}")),
        };
        for draw in 0..opts.draws {
            let g = EdgeScores::random(n, &mut rng, -1.0, 1.0);
            let best = trees.iter().map(|t| g.tree_score(t)).fold(f64::NEG_INFINITY, f64::max);
            let (tree, score) = match eisner_decode(&g) {
                Ok(r) => r,
                Err(e) => return fail(name, format!("decode failed: {e}")),
            };
            if (score - best).abs() > 1e-9 || (g.tree_score(&tree) - score).abs() > 1e-9 {
                return fail(name, format!("n={n} draw={draw}: {score} vs brute {best}"));
            }
            checked += 1;
        }
    }
    pass(name, format!("{checked} random edge draws matched"))
}

fn lemma1_suite(opts: &SelftestOptions) -> SuiteResult {
    let name = "lemma1-edge-factored-containment";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed + 3);
    let mut checked = 0usize;
    for n in 1..=opts.max_n {
        for draw in 0..opts.draws {
            let g = EdgeScores::random(n, &mut rng, -1.0, 1.0);
            let (_, eisner_score) = match eisner_decode(&g) {
                Ok(r) => r,
                Err(e) => return fail(name, format!("eisner failed: {e}")),
            };
            let eager = match decode_eager(&lemma1_reduction(&g)) {
                Ok(r) => r,
                Err(e) => return fail(name, format!("eager decode failed: {e}")),
            };
            if (eager.score - eisner_score).abs() > 1e-9 {
                return fail(name, format!("n={n} draw={draw}: {} vs {}", eager.score, eisner_score));
            }
            checked += 1;
        }
    }
    pass(name, format!("{checked} reductions matched the edge-factored optimum"))
}

fn lemma2_suite(opts: &SelftestOptions) -> SuiteResult {
    let name = "lemma2-hybrid-containment";
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed + 4);
    let mut checked = 0usize;
    for n in 1..=opts.max_n {
        for draw in 0..opts.draws {
            let hybrid = ScoreTables::random(SystemKind::ArcHybrid, n, &mut rng, -1.0, 1.0);
            let h = match decode_hybrid(&hybrid) {
                Ok(r) => r,
                Err(e) => return fail(name, format!("hybrid decode failed: {e}")),
            };
            let eager_tables = match lemma2_reduction(&hybrid) {
                Ok(t) => t,
                Err(e) => return fail(name, format!("reduction failed: {e}")),
            };
            let e = match decode_eager(&eager_tables) {
                Ok(r) => r,
                Err(e) => return fail(name, format!("eager decode failed: {e}")),
            };
            if (h.score - e.score).abs() > 1e-9 {
                return fail(name, format!("n={n} draw={draw}: {} vs {}", h.score, e.score));
            }
            checked += 1;
        }
    }
    pass(name, format!("{checked} constrained optima matched"))
}

fn gradcheck_suite(opts: &SelftestOptions) -> SuiteResult {
    let name = "gradient-finite-differences";
    let mut worst = 0.0f64;
    for (label, report) in [
        (
            "hybrid",
            gradcheck::check_transition_tables(Dims::tiny(), SystemKind::ArcHybrid, 3, opts.seed, 4),
        ),
        (
            "eager",
            gradcheck::check_transition_tables(Dims::tiny(), SystemKind::ArcEager, 3, opts.seed, 4),
        ),
        ("biaffine", gradcheck::check_biaffine(Dims::tiny(), 3, opts.seed, 4)),
    ] {
        match report {
            Ok(r) => {
                if r.max_rel_err >= 1e-4 {
                    return fail(
                        name,
                        format!("{label}: rel err {} at {}", r.max_rel_err, r.worst_tensor),
                    );
                }
                worst = worst.max(r.max_rel_err);
            }
            Err(e) => return fail(name, format!("{label} failed to run: {e}")),
        }
    }
    pass(name, format!("max relative error {worst:.2e}"))
}

fn pass(name: &'static str, detail: String) -> SuiteResult {
    SuiteResult { name, passed: true, detail }
}

fn fail(name: &'static str, detail: String) -> SuiteResult {
    SuiteResult { name, passed: false, detail }
}
