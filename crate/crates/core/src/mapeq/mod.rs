//! Hierarchical map-equation evaluation and partition search.
//!
//! A random walk on the word network is summarized by its per-node visit
//! rates; a hierarchy of modules over the nodes is scored by the average
//! per-step description length: every internal module contributes its
//! switch rate times the entropy of its index codebook (child entry rates
//! plus the module's own exit rate), every final module contributes its
//! usage rate times the entropy of node visits plus exit. The optimizer
//! searches for the hierarchy minimizing the total.

mod optimize;

pub use optimize::{optimize_partition, optimize_partition_with};

use crate::error::{Error, Result};
use crate::format;
use crate::graph::WordGraph;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

pub const TREE_HEADER: &str = "HLSM-TREE v1";

/// x·log2(x) with the 0·log0 = 0 convention.
#[inline]
pub fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Index-codebook contribution of an internal module: rate of codebook use
/// (exit word plus child entries) times the entropy of the relative rates.
pub fn index_codebook_bits(exit_rate: f64, child_enter_rates: &[f64]) -> f64 {
    let total = exit_rate + child_enter_rates.iter().sum::<f64>();
    plogp(total) - plogp(exit_rate) - child_enter_rates.iter().map(|&r| plogp(r)).sum::<f64>()
}

/// Codebook contribution of a final module: usage rate (node visits plus
/// exit) times the entropy of visit and exit rates.
pub fn leaf_codebook_bits(exit_rate: f64, node_visit_rates: &[f64]) -> f64 {
    let total = exit_rate + node_visit_rates.iter().sum::<f64>();
    plogp(total) - plogp(exit_rate) - node_visit_rates.iter().map(|&r| plogp(r)).sum::<f64>()
}

/// Stationary random-walk rates on an undirected weighted graph: node visit
/// rates proportional to strength, per-step edge traversal flow w/(2W) in
/// each direction. For unit weights this reproduces count-and-normalize
/// arithmetic (2W directed moves in total).
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    /// Original graph node id per dense index.
    pub(crate) node_ids: Vec<u32>,
    pub(crate) id_to_index: HashMap<u32, u32>,
    /// p_α per dense index; sums to 1.
    pub(crate) visit_rate: Vec<f64>,
    // CSR adjacency over dense indices; flow is one direction per entry.
    pub(crate) adj_ptr: Vec<usize>,
    pub(crate) adj_node: Vec<u32>,
    pub(crate) adj_flow: Vec<f64>,
}

impl FlowNetwork {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[u32] {
        &self.node_ids
    }

    pub fn visit_rates(&self) -> &[f64] {
        &self.visit_rate
    }

    pub fn index_of(&self, node_id: u32) -> Option<u32> {
        self.id_to_index.get(&node_id).copied()
    }

    pub(crate) fn neighbors(&self, dense: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let range = self.adj_ptr[dense as usize]..self.adj_ptr[dense as usize + 1];
        range.map(move |k| (self.adj_node[k], self.adj_flow[k]))
    }
}

/// Builds the flow network for a word graph; errors when the graph has no
/// edges. Isolated words are not part of the walk.
pub fn compute_flow(graph: &WordGraph) -> Result<FlowNetwork> {
    if graph.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let node_ids = graph.node_ids.clone();
    let id_to_index: HashMap<u32, u32> = node_ids
        .iter()
        .enumerate()
        .map(|(idx, &id)| (id, idx as u32))
        .collect();
    let n = node_ids.len();
    let total_weight: f64 = graph.edges.iter().map(|&(_, _, w)| w).sum();
    let two_w = 2.0 * total_weight;

    let mut degree = vec![0usize; n];
    let mut strength = vec![0.0; n];
    for &(i, j, w) in &graph.edges {
        let (di, dj) = (id_to_index[&i] as usize, id_to_index[&j] as usize);
        degree[di] += 1;
        degree[dj] += 1;
        strength[di] += w;
        strength[dj] += w;
    }
    let mut adj_ptr = vec![0usize; n + 1];
    for i in 0..n {
        adj_ptr[i + 1] = adj_ptr[i] + degree[i];
    }
    let mut fill = adj_ptr.clone();
    let mut adj_node = vec![0u32; graph.edges.len() * 2];
    let mut adj_flow = vec![0.0; graph.edges.len() * 2];
    for &(i, j, w) in &graph.edges {
        let (di, dj) = (id_to_index[&i] as usize, id_to_index[&j] as usize);
        adj_node[fill[di]] = dj as u32;
        adj_flow[fill[di]] = w / two_w;
        fill[di] += 1;
        adj_node[fill[dj]] = di as u32;
        adj_flow[fill[dj]] = w / two_w;
        fill[dj] += 1;
    }
    let visit_rate: Vec<f64> = strength.iter().map(|&s| s / two_w).collect();
    Ok(FlowNetwork {
        node_ids,
        id_to_index,
        visit_rate,
        adj_ptr,
        adj_node,
        adj_flow,
    })
}

/// A module's children: either nested submodules or graph nodes. Final
/// modules hold nodes; mixing the two in one module is unrepresentable.
#[derive(Debug, Clone, PartialEq)]
pub enum ModuleChildren {
    Submodules(Vec<Module>),
    Nodes(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub children: ModuleChildren,
}

impl Module {
    pub fn of_nodes(mut nodes: Vec<u32>) -> Self {
        nodes.sort_unstable();
        Module {
            children: ModuleChildren::Nodes(nodes),
        }
    }

    pub fn of_submodules(submodules: Vec<Module>) -> Self {
        Module {
            children: ModuleChildren::Submodules(submodules),
        }
    }
}

/// Rooted hierarchy over graph nodes. The root's children are the
/// first-level modules; leaves are graph node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyPartition {
    pub root: Module,
}

impl HierarchyPartition {
    /// Depth-2 hierarchy from flat node-id sets.
    pub fn from_flat(modules: Vec<Vec<u32>>) -> Self {
        HierarchyPartition {
            root: Module::of_submodules(modules.into_iter().map(Module::of_nodes).collect()),
        }
    }

    /// Everything in one module.
    pub fn one_module(node_ids: &[u32]) -> Self {
        HierarchyPartition::from_flat(vec![node_ids.to_vec()])
    }

    /// First-level node sets (the root's children, each flattened).
    pub fn first_level(&self) -> Vec<Vec<u32>> {
        match &self.root.children {
            ModuleChildren::Nodes(nodes) => vec![nodes.clone()],
            ModuleChildren::Submodules(subs) => subs
                .iter()
                .map(|m| {
                    let mut nodes = Vec::new();
                    collect_nodes(m, &mut nodes);
                    nodes.sort_unstable();
                    nodes
                })
                .collect(),
        }
    }

    /// Maximum module nesting depth (a flat two-level hierarchy has depth 1).
    pub fn depth(&self) -> usize {
        fn walk(m: &Module) -> usize {
            match &m.children {
                ModuleChildren::Nodes(_) => 1,
                ModuleChildren::Submodules(subs) => {
                    1 + subs.iter().map(walk).max().unwrap_or(0)
                }
            }
        }
        match &self.root.children {
            ModuleChildren::Nodes(_) => 1,
            ModuleChildren::Submodules(subs) => subs.iter().map(walk).max().unwrap_or(1),
        }
    }
}

fn collect_nodes(module: &Module, out: &mut Vec<u32>) {
    match &module.children {
        ModuleChildren::Nodes(nodes) => out.extend_from_slice(nodes),
        ModuleChildren::Submodules(subs) => {
            for sub in subs {
                collect_nodes(sub, out);
            }
        }
    }
}

/// The deepest-level modules in deterministic order (by smallest contained
/// node id). These seed the topics.
pub fn leaf_modules(h: &HierarchyPartition) -> Vec<Vec<u32>> {
    fn walk(m: &Module, out: &mut Vec<Vec<u32>>) {
        match &m.children {
            ModuleChildren::Nodes(nodes) => {
                let mut nodes = nodes.clone();
                nodes.sort_unstable();
                out.push(nodes);
            }
            ModuleChildren::Submodules(subs) => {
                for sub in subs {
                    walk(sub, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(&h.root, &mut out);
    out.sort_by_key(|set| set.first().copied().unwrap_or(u32::MAX));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    /// q_switch·H(Q) of an internal module.
    Index,
    /// p_in·H(P) of a final module.
    Leaf,
}

/// One codebook's contribution to the total description length.
#[derive(Debug, Clone)]
pub struct ModuleTerm {
    /// 1-based child indices from the root; empty for the root itself.
    pub path: Vec<usize>,
    pub kind: TermKind,
    /// q_switch for index terms, p_in for leaf terms.
    pub rate: f64,
    pub bits: f64,
}

/// Per-codebook decomposition of the description length.
#[derive(Debug, Clone)]
pub struct CodelengthReport {
    pub total_bits: f64,
    pub terms: Vec<ModuleTerm>,
}

// Flattened tree used during evaluation.
struct Arena {
    parent: Vec<usize>,
    path: Vec<Vec<usize>>,
    child_modules: Vec<Vec<usize>>,
    leaf_nodes: Vec<Vec<u32>>,
    // flows filled in a second pass
    exit: Vec<f64>,
    enter: Vec<f64>,
    p_sum: Vec<f64>,
}

fn build_arena(
    f: &FlowNetwork,
    h: &HierarchyPartition,
) -> Result<(Arena, Vec<usize> /* dense node -> final module arena id */)> {
    let mut arena = Arena {
        parent: Vec::new(),
        path: Vec::new(),
        child_modules: Vec::new(),
        leaf_nodes: Vec::new(),
        exit: Vec::new(),
        enter: Vec::new(),
        p_sum: Vec::new(),
    };
    let mut node_module = vec![usize::MAX; f.node_count()];

    fn add(
        arena: &mut Arena,
        node_module: &mut [usize],
        f: &FlowNetwork,
        module: &Module,
        parent: usize,
        path: Vec<usize>,
    ) -> Result<usize> {
        let id = arena.parent.len();
        arena.parent.push(parent);
        arena.path.push(path.clone());
        arena.child_modules.push(Vec::new());
        arena.leaf_nodes.push(Vec::new());
        arena.exit.push(0.0);
        arena.enter.push(0.0);
        arena.p_sum.push(0.0);
        match &module.children {
            ModuleChildren::Nodes(nodes) => {
                if nodes.is_empty() {
                    return Err(Error::PartitionMismatch {
                        reason: "empty module".to_string(),
                    });
                }
                for &node_id in nodes {
                    let dense = f.index_of(node_id).ok_or_else(|| Error::PartitionMismatch {
                        reason: format!("node {node_id} not in the flow network"),
                    })? as usize;
                    if node_module[dense] != usize::MAX {
                        return Err(Error::PartitionMismatch {
                            reason: format!("node {node_id} appears in two modules"),
                        });
                    }
                    node_module[dense] = id;
                    arena.leaf_nodes[id].push(node_id);
                }
            }
            ModuleChildren::Submodules(subs) => {
                if subs.is_empty() {
                    return Err(Error::PartitionMismatch {
                        reason: "module with no children".to_string(),
                    });
                }
                for (pos, sub) in subs.iter().enumerate() {
                    let mut sub_path = path.clone();
                    sub_path.push(pos + 1);
                    let child = add(arena, node_module, f, sub, id, sub_path)?;
                    arena.child_modules[id].push(child);
                }
            }
        }
        Ok(id)
    }

    add(&mut arena, &mut node_module, f, &h.root, usize::MAX, Vec::new())?;
    if let Some(missing) = node_module.iter().position(|&m| m == usize::MAX) {
        return Err(Error::PartitionMismatch {
            reason: format!("node {} not covered by the partition", f.node_ids[missing]),
        });
    }
    Ok((arena, node_module))
}

/// Evaluates the hierarchical description length of `h` on flow `f`.
pub fn codelength(f: &FlowNetwork, h: &HierarchyPartition) -> Result<CodelengthReport> {
    let (mut arena, node_module) = build_arena(f, h)?;

    // visit mass per module, accumulated up the parent chain
    for (dense, &leaf_module) in node_module.iter().enumerate() {
        let mut m = leaf_module;
        loop {
            arena.p_sum[m] += f.visit_rate[dense];
            if arena.parent[m] == usize::MAX {
                break;
            }
            m = arena.parent[m];
        }
    }

    // exit/enter per module: each directed edge contributes to every module
    // containing exactly one endpoint. Climb both leaf paths to the fork.
    let depth_of = |mut m: usize, arena: &Arena| -> usize {
        let mut d = 0;
        while arena.parent[m] != usize::MAX {
            d += 1;
            m = arena.parent[m];
        }
        d
    };
    for dense in 0..f.node_count() as u32 {
        let mu0 = node_module[dense as usize];
        for (nbr, flow) in f.neighbors(dense) {
            let mv0 = node_module[nbr as usize];
            if mu0 == mv0 {
                continue;
            }
            let (mut mu, mut mv) = (mu0, mv0);
            let (mut du, mut dv) = (depth_of(mu, &arena), depth_of(mv, &arena));
            while du > dv {
                arena.exit[mu] += flow;
                mu = arena.parent[mu];
                du -= 1;
            }
            while dv > du {
                arena.enter[mv] += flow;
                mv = arena.parent[mv];
                dv -= 1;
            }
            while mu != mv {
                arena.exit[mu] += flow;
                arena.enter[mv] += flow;
                mu = arena.parent[mu];
                mv = arena.parent[mv];
            }
        }
    }

    let mut terms = Vec::new();
    let mut total = 0.0;
    for id in 0..arena.parent.len() {
        let term = if arena.child_modules[id].is_empty() {
            let rates: Vec<f64> = arena.leaf_nodes[id]
                .iter()
                .map(|&node_id| f.visit_rate[f.id_to_index[&node_id] as usize])
                .collect();
            let bits = leaf_codebook_bits(arena.exit[id], &rates);
            ModuleTerm {
                path: arena.path[id].clone(),
                kind: TermKind::Leaf,
                rate: arena.exit[id] + arena.p_sum[id],
                bits,
            }
        } else {
            let enters: Vec<f64> = arena.child_modules[id]
                .iter()
                .map(|&c| arena.enter[c])
                .collect();
            let bits = index_codebook_bits(arena.exit[id], &enters);
            ModuleTerm {
                path: arena.path[id].clone(),
                kind: TermKind::Index,
                rate: arena.exit[id] + enters.iter().sum::<f64>(),
                bits,
            }
        };
        total += term.bits;
        terms.push(term);
    }
    Ok(CodelengthReport {
        total_bits: total,
        terms,
    })
}

/// Two-level description length of a flat partition given as node-id sets.
/// Matches [`codelength`] on the equivalent depth-2 hierarchy.
pub fn two_level_codelength(f: &FlowNetwork, modules: &[Vec<u32>]) -> Result<f64> {
    let mut assignment = vec![u32::MAX; f.node_count()];
    for (m, nodes) in modules.iter().enumerate() {
        for &node_id in nodes {
            let dense = f.index_of(node_id).ok_or_else(|| Error::PartitionMismatch {
                reason: format!("node {node_id} not in the flow network"),
            })? as usize;
            if assignment[dense] != u32::MAX {
                return Err(Error::PartitionMismatch {
                    reason: format!("node {node_id} appears in two modules"),
                });
            }
            assignment[dense] = m as u32;
        }
    }
    if assignment.contains(&u32::MAX) {
        return Err(Error::PartitionMismatch {
            reason: "partition does not cover every node".to_string(),
        });
    }
    Ok(flat_codelength_dense(f, &assignment, modules.len()))
}

/// Closed-form two-level codelength over a dense assignment:
///   L = plogp(Σq) − 2Σplogp(q_m) + Σplogp(q_m + p_m) − Σplogp(p_α)
pub(crate) fn flat_codelength_dense(f: &FlowNetwork, assignment: &[u32], n_modules: usize) -> f64 {
    let mut q = vec![0.0; n_modules];
    let mut p = vec![0.0; n_modules];
    for dense in 0..f.node_count() as u32 {
        let m = assignment[dense as usize] as usize;
        p[m] += f.visit_rate[dense as usize];
        for (nbr, flow) in f.neighbors(dense) {
            if assignment[nbr as usize] != m as u32 {
                q[m] += flow;
            }
        }
    }
    let sum_q: f64 = q.iter().sum();
    let node_term: f64 = f.visit_rate.iter().map(|&r| plogp(r)).sum();
    plogp(sum_q) - 2.0 * q.iter().map(|&x| plogp(x)).sum::<f64>()
        + q.iter().zip(&p).map(|(&qi, &pi)| plogp(qi + pi)).sum::<f64>()
        - node_term
}

/// Serializes the `HLSM-TREE v1` dump: one line per leaf as
/// `path<TAB>name`, path being the colon-joined 1-based child indices of
/// the leaf's module.
pub fn write_tree(
    h: &HierarchyPartition,
    names: impl Fn(u32) -> String,
    comments: &[String],
) -> String {
    let mut out = String::new();
    out.push_str(TREE_HEADER);
    out.push('\n');
    for comment in comments {
        let _ = writeln!(out, "# {comment}");
    }
    fn walk(
        module: &Module,
        path: &mut Vec<usize>,
        out: &mut String,
        names: &impl Fn(u32) -> String,
    ) {
        match &module.children {
            ModuleChildren::Nodes(nodes) => {
                let mut nodes = nodes.clone();
                nodes.sort_unstable();
                let path_str: Vec<String> = path.iter().map(usize::to_string).collect();
                let path_str = path_str.join(":");
                for node in nodes {
                    let _ = writeln!(out, "{path_str}\t{}", names(node));
                }
            }
            ModuleChildren::Submodules(subs) => {
                for (pos, sub) in subs.iter().enumerate() {
                    path.push(pos + 1);
                    walk(sub, path, out, names);
                    path.pop();
                }
            }
        }
    }
    let mut path = Vec::new();
    walk(&h.root, &mut path, &mut out, &names);
    out
}

pub fn write_tree_file(
    h: &HierarchyPartition,
    names: impl Fn(u32) -> String,
    path: &Path,
    comments: &[String],
) -> Result<()> {
    format::write_file(path, &write_tree(h, names, comments))
}

/// Parses an `HLSM-TREE v1` dump back into a hierarchy. Leaf names are
/// resolved through `resolve`; unknown names are an error.
pub fn read_tree(
    text: &str,
    resolve: impl Fn(&str) -> Option<u32>,
) -> Result<HierarchyPartition> {
    let lines = format::body_lines(text, TREE_HEADER, None)?;

    #[derive(Default)]
    struct Node {
        children: Vec<usize>,
        by_pos: HashMap<usize, usize>,
        leaves: Vec<u32>,
    }
    let mut nodes: Vec<Node> = vec![Node::default()];
    for (line_no, line) in lines {
        let (path, name) = line.split_once('\t').ok_or_else(|| Error::Format {
            format: TREE_HEADER,
            line: line_no,
            reason: "expected path<TAB>word".to_string(),
        })?;
        let node_id = resolve(name).ok_or_else(|| Error::Format {
            format: TREE_HEADER,
            line: line_no,
            reason: format!("unknown leaf name {name:?}"),
        })?;
        let mut at = 0usize;
        for step in path.split(':') {
            let pos: usize = step.parse().map_err(|_| Error::Format {
                format: TREE_HEADER,
                line: line_no,
                reason: format!("bad path component {step:?}"),
            })?;
            at = match nodes[at].by_pos.get(&pos) {
                Some(&next) => next,
                None => {
                    let next = nodes.len();
                    nodes.push(Node::default());
                    nodes[at].by_pos.insert(pos, next);
                    nodes[at].children.push(next);
                    next
                }
            };
        }
        nodes[at].leaves.push(node_id);
    }

    fn assemble(nodes: &[Node], at: usize) -> Module {
        if nodes[at].children.is_empty() {
            Module::of_nodes(nodes[at].leaves.clone())
        } else {
            Module::of_submodules(
                nodes[at]
                    .children
                    .iter()
                    .map(|&c| assemble(nodes, c))
                    .collect(),
            )
        }
    }
    Ok(HierarchyPartition {
        root: assemble(&nodes, 0),
    })
}
