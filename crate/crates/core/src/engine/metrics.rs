use std::collections::BTreeSet;
use std::io;

use super::ops::{is_open, scope};
use super::IterationLog;
use crate::grammar::CondensedGrammar;
use crate::similarity::Partition;
use crate::tree::{NodeLabel, Tree};

pub const CSV_HEADER: [&str; 11] = [
    "iteration",
    "op",
    "nb_prod",
    "nb_unlabelled",
    "nb_group",
    "nb_rel",
    "nb_coll",
    "nb_equiv",
    "mean_group_inst",
    "mean_rel_inst",
    "mean_coll_inst",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationMetrics {
    pub nb_prod: usize,
    pub nb_unlabelled: usize,
    pub nb_group: usize,
    pub nb_rel: usize,
    pub nb_coll: usize,
    pub nb_equiv: usize,
    pub mean_group_inst: f64,
    pub mean_rel_inst: f64,
    pub mean_coll_inst: f64,
}

fn kinds(tree: &Tree, pick: fn(&NodeLabel) -> bool) -> (usize, f64) {
    let mut labels = BTreeSet::new();
    let mut count = 0usize;
    for (_, n) in tree.preorder() {
        if pick(n.label()) {
            labels.insert(n.label().clone());
            count += 1;
        }
    }
    let mean = if labels.is_empty() { 0.0 } else { count as f64 / labels.len() as f64 };
    (labels.len(), mean)
}

pub fn measure(tree: &Tree, grammar: &CondensedGrammar, partition: &Partition) -> IterationMetrics {
    let (nb_group, mean_group_inst) = kinds(tree, NodeLabel::is_group);
    let (nb_rel, mean_rel_inst) = kinds(tree, NodeLabel::is_rel);
    let (nb_coll, mean_coll_inst) = kinds(tree, NodeLabel::is_coll);
    IterationMetrics {
        nb_prod: grammar.len(),
        nb_unlabelled: scope(tree).iter().filter(|p| is_open(tree.get(p).unwrap())).count(),
        nb_group,
        nb_rel,
        nb_coll,
        nb_equiv: partition.len(),
        mean_group_inst,
        mean_rel_inst,
        mean_coll_inst,
    }
}

/// Writes the iteration log as CSV, one row per logged state.
pub fn write_csv<W: io::Write>(log: &[IterationLog], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in log {
        let m = &row.metrics;
        w.write_record([
            row.iteration.to_string(),
            row.op.map_or(-1, |o| o as i32).to_string(),
            m.nb_prod.to_string(),
            m.nb_unlabelled.to_string(),
            m.nb_group.to_string(),
            m.nb_rel.to_string(),
            m.nb_coll.to_string(),
            m.nb_equiv.to_string(),
            format!("{:.4}", m.mean_group_inst),
            format!("{:.4}", m.mean_rel_inst),
            format!("{:.4}", m.mean_coll_inst),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(log: &[IterationLog]) -> String {
    let mut buf = Vec::new();
    write_csv(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}
