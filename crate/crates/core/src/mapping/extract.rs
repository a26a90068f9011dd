//! Path enumeration over the cross-language graph.

use std::collections::BTreeSet;

use super::{Condition, Origin, ProtectionEntry, ProtectionMap};
use crate::cfg::{CrossCfg, NodeRole};
use crate::config::AnalysisConfig;
use crate::diag::Diagnostic;
use crate::frontend::{Language, MethodRef};

#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    pub per_path: bool,
}

/// One maximal simple path that passes at least one check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedPath {
    pub nodes: Vec<usize>,
    pub condition: Condition,
    pub origin: Origin,
}

pub enum PathEnumeration {
    Complete(Vec<CheckedPath>),
    OverBudget,
}

fn origin_of(lang: Language) -> Origin {
    match lang {
        Language::Java => Origin::Java,
        Language::Cpp => Origin::Native,
    }
}

/// All maximal simple paths from `start`, keeping those that cross a
/// CHECK node. Gives up once more than `budget` maximal paths are seen.
pub fn checked_paths(g: &CrossCfg, start: usize, budget: usize) -> PathEnumeration {
    let mut out = Vec::new();
    let mut seen = 0usize;
    let mut on_path = vec![false; g.nodes.len()];
    let mut path = vec![start];
    // Per frame: index of the next successor to try.
    let mut cursor = vec![0usize];
    let mut extended = vec![false];
    on_path[start] = true;
    while let Some(&top) = path.last() {
        let depth = path.len() - 1;
        let succ = g.successors(top);
        let mut next = None;
        while cursor[depth] < succ.len() {
            let s = succ[cursor[depth]];
            cursor[depth] += 1;
            if !on_path[s] {
                next = Some(s);
                break;
            }
        }
        match next {
            Some(s) => {
                extended[depth] = true;
                on_path[s] = true;
                path.push(s);
                cursor.push(0);
                extended.push(false);
            }
            None => {
                if !extended[depth] {
                    seen += 1;
                    if seen > budget {
                        return PathEnumeration::OverBudget;
                    }
                    if let Some(p) = summarize(g, &path) {
                        out.push(p);
                    }
                }
                on_path[top] = false;
                path.pop();
                cursor.pop();
                extended.pop();
            }
        }
    }
    PathEnumeration::Complete(out)
}

fn summarize(g: &CrossCfg, path: &[usize]) -> Option<CheckedPath> {
    let checks: Vec<usize> = path.iter().copied().filter(|&n| g.nodes[n].role == NodeRole::Check).collect();
    if checks.is_empty() {
        return None;
    }
    let condition = Condition::and(checks.iter().filter_map(|&n| g.nodes[n].condition.clone()).collect());
    let origin = checks.iter().map(|&n| origin_of(g.nodes[n].language)).reduce(Origin::merge)?;
    Some(CheckedPath { nodes: path.to_vec(), condition, origin })
}

/// Fallback when paths explode: OR of every check reachable from `start`.
fn reachable_checks(g: &CrossCfg, start: usize) -> Option<(Condition, Origin)> {
    let mut seen = BTreeSet::from([start]);
    let mut work = vec![start];
    let mut conds = Vec::new();
    let mut origin: Option<Origin> = None;
    while let Some(n) = work.pop() {
        let node = &g.nodes[n];
        if node.role == NodeRole::Check {
            conds.extend(node.condition.clone());
            let o = origin_of(node.language);
            origin = Some(origin.map_or(o, |x| x.merge(o)));
        }
        for &s in g.successors(n) {
            if seen.insert(s) {
                work.push(s);
            }
        }
    }
    Some((Condition::or(conds), origin?))
}

/// Build the protection map for every API candidate in `g`.
pub fn extract_mappings(
    g: &CrossCfg,
    config: &AnalysisConfig,
    opts: &ExtractOptions,
    diags: &mut Vec<Diagnostic>,
) -> ProtectionMap {
    let mut map = ProtectionMap::default();
    for api in &g.api_candidates {
        if !api.owner.as_deref().is_some_and(|o| config.is_api_package(o)) {
            continue;
        }
        let Some(start) = g.entry_of(api) else { continue };
        match checked_paths(g, start, config.path_budget) {
            PathEnumeration::Complete(paths) => {
                if opts.per_path {
                    for p in paths {
                        if p.condition != Condition::True {
                            map.entries.push(entry(api, p.condition, p.origin, false, Some(p.nodes)));
                        }
                    }
                } else if let Some(origin) = paths.iter().map(|p| p.origin).reduce(Origin::merge) {
                    let cond = Condition::or(paths.into_iter().map(|p| p.condition).collect());
                    if cond != Condition::True {
                        map.entries.push(entry(api, cond, origin, false, None));
                    }
                }
            }
            PathEnumeration::OverBudget => {
                diags.push(Diagnostic::new(
                    "PATH_EXPLOSION",
                    format!("PATH_EXPLOSION {api}: more than {} paths, condition approximated", config.path_budget),
                ));
                if let Some((cond, origin)) = reachable_checks(g, start) {
                    if cond != Condition::True {
                        map.entries.push(entry(api, cond, origin, true, None));
                    }
                }
            }
        }
    }
    map.sort();
    map
}

fn entry(api: &MethodRef, condition: Condition, origin: Origin, approximate: bool, path: Option<Vec<usize>>) -> ProtectionEntry {
    ProtectionEntry { api: api.clone(), origin, condition, approximate, path }
}
