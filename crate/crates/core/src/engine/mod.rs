//! The structuring loop: rewrite the instance one operation at a time
//! until its extracted grammar validates or the cycle budget runs out.

pub mod metrics;
pub mod ops;
mod registry;

use std::collections::BTreeSet;
use std::fmt;

pub use metrics::{csv_string, measure, write_csv, IterationMetrics, CSV_HEADER};
pub use ops::{
    find_collections, find_groups, find_relations, find_subgroups, merge_combinations, merge_groups, reduce_bottom,
    reduce_top, scope, subgroup_candidates, CollectionKind, SupportCtx,
};
pub use registry::{group_shape, NameRegistry};

use crate::grammar::{extract_grammar, CondensedGrammar};
use crate::meta::{frontier_from_report, validate};
use crate::similarity::{equivalence_classes, Partition, SimParams};
use crate::tree::{Position, Tree};

/// Rewriting operations, numbered in the order they are tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    FindGroups = 0,
    FindSubgroups = 1,
    MergeGroups = 2,
    FindCollectionsOfGroups = 3,
    FindRelations = 4,
    FindCollectionsOfRelations = 5,
    ReduceBottom = 6,
    ReduceTop = 7,
}

impl Operation {
    pub const ALL: [Operation; 8] = [
        Operation::FindGroups,
        Operation::FindSubgroups,
        Operation::MergeGroups,
        Operation::FindCollectionsOfGroups,
        Operation::FindRelations,
        Operation::FindCollectionsOfRelations,
        Operation::ReduceBottom,
        Operation::ReduceTop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operation::FindGroups => "findGroups",
            Operation::FindSubgroups => "findSubgroups",
            Operation::MergeGroups => "mergeGroups",
            Operation::FindCollectionsOfGroups => "findCollectionsOfGroups",
            Operation::FindRelations => "findRelationships",
            Operation::FindCollectionsOfRelations => "findCollectionsOfRelationships",
            Operation::ReduceBottom => "reduceBottom",
            Operation::ReduceTop => "reduceTop",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("max cycles must be at least 1")]
    NoCycles,
    #[error("min support must be at least 1")]
    NoSupport,
    #[error("similarity threshold {0} is outside [0, 1]")]
    Tau(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuringConfig {
    pub sim: SimParams,
    pub min_support: usize,
    pub max_cycles: usize,
}

impl Default for StructuringConfig {
    fn default() -> Self {
        StructuringConfig { sim: SimParams::default(), min_support: 2, max_cycles: 50 }
    }
}

impl StructuringConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.max_cycles == 0 {
            return Err(ConfigError::NoCycles);
        }
        if self.min_support == 0 {
            return Err(ConfigError::NoSupport);
        }
        if !(0.0..=1.0).contains(&self.sim.tau) {
            return Err(ConfigError::Tau(self.sim.tau));
        }
        Ok(())
    }
}

/// One logged state: the instance after `op` (row 0 is the input).
#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub op: Option<Operation>,
    pub metrics: IterationMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// The grammar validates.
    Valid,
    /// Nothing to structure: the instance holds no entity.
    Empty,
    /// `max_cycles` iterations ran without reaching validity.
    BudgetExhausted,
    /// No operation applies any more, and the grammar is still invalid.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct StructureOutcome {
    /// The valid instance, or the best one seen (fewest frontier positions).
    pub instance: Tree,
    pub grammar: CondensedGrammar,
    pub log: Vec<IterationLog>,
    pub status: Status,
    /// Iteration that produced `instance`.
    pub best_iteration: usize,
    /// Positions of `instance` still in the way of validity.
    pub frontier: BTreeSet<Position>,
}

impl StructureOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self.status, Status::Valid | Status::Empty)
    }

    /// Number of rewriting iterations performed.
    pub fn iterations(&self) -> usize {
        self.log.len() - 1
    }
}

pub fn structure(instance: &Tree, config: &StructuringConfig) -> Result<StructureOutcome, ConfigError> {
    structure_with(instance, config, |_, _| {})
}

#[derive(Clone)]
struct State {
    tree: Tree,
    grammar: CondensedGrammar,
    partition: Partition,
    frontier: BTreeSet<Position>,
}

impl State {
    fn new(tree: Tree, params: &SimParams) -> Self {
        let grammar = extract_grammar(&tree);
        let frontier = frontier_from_report(&validate(&grammar), &tree);
        let partition = equivalence_classes(&tree, &scope(&tree), params);
        State { tree, grammar, partition, frontier }
    }
}

/// Runs the structuring loop, calling `observer` with every logged state.
pub fn structure_with(
    instance: &Tree,
    config: &StructuringConfig,
    mut observer: impl FnMut(&IterationLog, &Tree),
) -> Result<StructureOutcome, ConfigError> {
    config.check()?;
    let mut registry = NameRegistry::for_instance(instance);
    let mut state = State::new(instance.clone(), &config.sim);
    let row = IterationLog {
        iteration: 0,
        op: None,
        metrics: measure(&state.tree, &state.grammar, &state.partition),
    };
    observer(&row, &state.tree);
    let mut log = vec![row];

    if !instance.has_entity() {
        return Ok(finish(state, log, Status::Empty, 0));
    }
    let mut best = (0, state.clone());
    let mut status = Status::BudgetExhausted;
    for iteration in 1..=config.max_cycles {
        if state.frontier.is_empty() {
            break;
        }
        let Some((op, next)) = step(&state, config, &mut registry) else {
            status = Status::Stalled;
            break;
        };
        state = State::new(next, &config.sim);
        let row = IterationLog {
            iteration,
            op: Some(op),
            metrics: measure(&state.tree, &state.grammar, &state.partition),
        };
        log::debug!("iteration {iteration}: {op}, {} rules", row.metrics.nb_prod);
        observer(&row, &state.tree);
        log.push(row);
        if state.frontier.len() <= best.1.frontier.len() {
            best = (iteration, state.clone());
        }
    }
    if state.frontier.is_empty() {
        let last = log.len() - 1;
        return Ok(finish(state, log, Status::Valid, last));
    }
    Ok(finish(best.1, log, status, best.0))
}

fn finish(state: State, log: Vec<IterationLog>, status: Status, best_iteration: usize) -> StructureOutcome {
    StructureOutcome {
        instance: state.tree,
        grammar: state.grammar,
        log,
        status,
        best_iteration,
        frontier: state.frontier,
    }
}

/// Tries the operations in order and returns the first modification.
fn step(state: &State, config: &StructuringConfig, registry: &mut NameRegistry) -> Option<(Operation, Tree)> {
    let tree = &state.tree;
    let partition = &state.partition;
    let ctx = SupportCtx { partition, params: config.sim };
    for op in Operation::ALL {
        let out = match op {
            Operation::FindGroups => find_groups(tree, partition, config.min_support, registry),
            Operation::FindSubgroups => find_subgroups(tree, &ctx, registry),
            Operation::MergeGroups => merge_groups(tree, &ctx, registry),
            Operation::FindCollectionsOfGroups => find_collections(tree, partition, CollectionKind::Groups, registry),
            Operation::FindRelations => find_relations(tree, registry),
            Operation::FindCollectionsOfRelations => {
                find_collections(tree, partition, CollectionKind::Relations, registry)
            }
            Operation::ReduceBottom => reduce_bottom(tree),
            Operation::ReduceTop => reduce_top(tree),
        };
        if let Some(t) = out {
            return Some((op, t));
        }
    }
    None
}
