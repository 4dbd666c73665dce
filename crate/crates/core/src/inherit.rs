//! Lossless incremental re-evaluation.
//!
//! A genetic operator leaves the root-to-node path of the node it touched
//! intact, so the instance set reaching that node is unchanged. Only those
//! instances are re-routed, and only through the changed subtree. The
//! instance set is recovered from the leaf lists of the pre-change subtree,
//! which operators leave in the arena when they splice in new material.
//!
//! Several operators may hit one offspring before it is re-evaluated (a
//! crossover followed by a mutation). [`plan`] merges them: stale nodes
//! that lie below another stale node are subsumed, and gathering follows
//! the `stale -> replaced` links back to the content each splice
//! displaced, so every instance is re-routed at most once.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::data::{Dataset, InstanceId};
use crate::evolve::{score, AccuracyUnit, Individual, OperatorKind, OperatorOutcome};
use crate::scalar::Scalar;
use crate::tree::{DecisionTree, EvalCounters, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InheritError {
    #[error("stale node {0} is missing from the offspring")]
    StaleNodeMissing(NodeId),
    #[error("counter bug: actual {actual} exceeds full-equivalent {full}")]
    CounterOverrun { actual: u64, full: u64 },
}

/// How re-routing is charged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Accounting {
    /// Instances are routed from the stale node down (what the engine does).
    #[default]
    Refined,
    /// Instances are routed from the root, paying for the unchanged path
    /// above the stale node as well. Used for instrumentation only.
    Pessimistic,
}

/// One stale subtree to rebuild and the instances that reach it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReevalPlan {
    pub outcome: OperatorOutcome,
    pub gathered: Vec<InstanceId>,
}

/// Resolves the outcomes applied to `tree` into disjoint stale subtrees.
pub fn plan(tree: &DecisionTree, outcomes: &[OperatorOutcome]) -> Result<Vec<ReevalPlan>, InheritError> {
    let displaced: HashMap<NodeId, NodeId> = outcomes
        .iter()
        .filter_map(|o| Some((o.stale?, o.replaced?)))
        .collect();

    // stale nodes still in the tree, in application order
    let mut live: Vec<&OperatorOutcome> = Vec::new();
    for o in outcomes {
        let Some(s) = o.stale else { continue };
        if s.index() >= tree.arena_len() {
            return Err(InheritError::StaleNodeMissing(s));
        }
        if tree.contains(s) {
            live.push(o);
        }
    }
    if live.is_empty() && outcomes.iter().any(|o| o.kind != OperatorKind::RootRootCrossover) {
        // every stale node was discarded by a later operator, which must itself be live
        let s = outcomes.iter().find_map(|o| o.stale).expect("non root-root outcome has a stale node");
        return Err(InheritError::StaleNodeMissing(s));
    }

    let mut plans: Vec<ReevalPlan> = Vec::new();
    for (i, o) in live.iter().enumerate() {
        let s = o.stale.expect("filtered above");
        let subsumed = live
            .iter()
            .enumerate()
            .any(|(j, p)| {
                let t = p.stale.unwrap();
                (t != s && tree.is_ancestor_or_self(t, s)) || (t == s && j < i)
            });
        if subsumed {
            continue;
        }
        plans.push(ReevalPlan {
            outcome: **o,
            gathered: gather_displaced(tree, s, &displaced),
        });
    }
    Ok(plans)
}

/// `I(from)` as it was before any of the splices recorded in `displaced`.
fn gather_displaced(tree: &DecisionTree, from: NodeId, displaced: &HashMap<NodeId, NodeId>) -> Vec<InstanceId> {
    let mut out = Vec::new();
    let mut stack = vec![from];
    while let Some(mut id) = stack.pop() {
        while let Some(&old) = displaced.get(&id) {
            id = old;
        }
        match tree.children(id) {
            Some((l, r)) => {
                stack.push(r);
                stack.push(l);
            }
            None => out.extend_from_slice(&tree.leaf_data(id).expect("leaf").instances),
        }
    }
    out
}

/// Rebuilds the leaf data below each planned stale node.
pub fn execute(
    tree: &mut DecisionTree,
    plans: &[ReevalPlan],
    dataset: &Dataset,
    accounting: Accounting,
    counters: &mut EvalCounters,
) {
    for p in plans {
        let stale = p.outcome.stale.expect("planned outcomes carry a stale node");
        tree.clear_leaves_from(stale);
        let start = match accounting {
            Accounting::Refined => stale,
            Accounting::Pessimistic => tree.root(),
        };
        for &id in &p.gathered {
            let placed = tree.place_from(start, dataset.instance(id), counters);
            debug_assert!(tree.is_ancestor_or_self(stale, placed), "instance escaped the stale subtree");
        }
        counters.instances_reclassified += p.gathered.len() as u64;
    }
}

/// Incrementally re-evaluates an offspring after `outcomes` were applied
/// to it and rescores it with `x`. Returns the new payoff.
pub fn reevaluate<T: Scalar>(
    offspring: &mut Individual<T>,
    outcomes: &[OperatorOutcome],
    dataset: &Dataset,
    x: &T,
    unit: AccuracyUnit,
    counters: &mut EvalCounters,
) -> Result<T, InheritError> {
    reevaluate_with(offspring, outcomes, dataset, x, unit, Accounting::Refined, counters)
}

pub fn reevaluate_with<T: Scalar>(
    offspring: &mut Individual<T>,
    outcomes: &[OperatorOutcome],
    dataset: &Dataset,
    x: &T,
    unit: AccuracyUnit,
    accounting: Accounting,
    counters: &mut EvalCounters,
) -> Result<T, InheritError> {
    let plans = plan(&offspring.tree, outcomes)?;
    let mut spent = EvalCounters::default();
    execute(&mut offspring.tree, &plans, dataset, accounting, &mut spent);
    *counters += spent;
    offspring.counters = spent;
    offspring.payoff = score(&offspring.tree, dataset.len(), x, unit);
    Ok(offspring.payoff.clone())
}

/// What a from-root evaluation of `tree` would cost, read off the leaf
/// lists: every stored instance pays `depth + 1` checks.
pub fn full_equivalent_cost(tree: &DecisionTree) -> EvalCounters {
    let mut c = EvalCounters::default();
    let mut stack = vec![(tree.root(), 0u64)];
    while let Some((id, depth)) = stack.pop() {
        match tree.children(id) {
            Some((l, r)) => {
                stack.push((l, depth + 1));
                stack.push((r, depth + 1));
            }
            None => {
                let k = tree.leaf_data(id).expect("leaf").instances.len() as u64;
                c.node_instance_checks += k * (depth + 1);
                c.instances_reclassified += k;
            }
        }
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SavingsReport {
    pub reclassified_actual: u64,
    pub reclassified_full_equiv: u64,
    pub checks_actual: u64,
    pub checks_full_equiv: u64,
    pub instance_savings: f64,
    pub check_savings: f64,
}

fn saved(actual: u64, full: u64) -> f64 {
    if full == 0 {
        0.0
    } else {
        1.0 - actual as f64 / full as f64
    }
}

pub fn savings(actual: EvalCounters, full_equiv: EvalCounters) -> Result<SavingsReport, InheritError> {
    for (a, f) in [
        (actual.instances_reclassified, full_equiv.instances_reclassified),
        (actual.node_instance_checks, full_equiv.node_instance_checks),
    ] {
        if a > f {
            return Err(InheritError::CounterOverrun { actual: a, full: f });
        }
    }
    Ok(SavingsReport {
        reclassified_actual: actual.instances_reclassified,
        reclassified_full_equiv: full_equiv.instances_reclassified,
        checks_actual: actual.node_instance_checks,
        checks_full_equiv: full_equiv.node_instance_checks,
        instance_savings: saved(actual.instances_reclassified, full_equiv.instances_reclassified),
        check_savings: saved(actual.node_instance_checks, full_equiv.node_instance_checks),
    })
}

/// Test oracle: re-evaluates a clone from scratch and compares leaf
/// contents, correct counters and payoff for exact equality.
pub fn verify_lossless<T: Scalar>(offspring: &Individual<T>, dataset: &Dataset, x: &T, unit: AccuracyUnit) -> bool {
    let mut fresh = offspring.tree.clone();
    fresh.evaluate_full(dataset, &mut EvalCounters::default());
    offspring.tree.same_evaluation(&fresh)
        && offspring.payoff == score(&fresh, dataset.len(), x, unit)
        && offspring.tree.aggregate_root() == fresh.aggregate_root()
}
