//! Partition search: greedy single-node moves with module aggregation and
//! leaf-level fine-tuning, restarted over seeded trials, then recursive
//! module splits and added index levels accepted on exact codelength deltas.

use super::{
    codelength, index_codebook_bits, plogp, FlowNetwork,
    HierarchyPartition, Module, ModuleChildren,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A structural change must win at least this many bits to be accepted.
const MIN_IMPROVEMENT: f64 = 1e-10;
/// Gains closer than this tie-break to the smallest destination module id.
const TIE_TOL: f64 = 1e-12;
const MAX_OUTER_ITERS: usize = 100;
const MAX_PASSES_PER_LEVEL: usize = 30;
/// Independent restarts of the flat search; the best result is kept.
const FLAT_TRIALS: u64 = 12;
/// Restarts when proposing splits of a single module.
const SPLIT_TRIALS: u64 = 4;

fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Working view of the network at some aggregation level. A unit is an
/// original node or a collapsed module; `members` tracks the dense leaf
/// indices each unit carries. Adjacency holds inter-unit flow only, one
/// direction per entry.
#[derive(Debug, Clone)]
struct WorkNetwork {
    visit: Vec<f64>,
    adj_ptr: Vec<usize>,
    adj_node: Vec<u32>,
    adj_flow: Vec<f64>,
    members: Vec<Vec<u32>>,
}

impl WorkNetwork {
    fn len(&self) -> usize {
        self.visit.len()
    }

    fn neighbors(&self, u: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        (self.adj_ptr[u]..self.adj_ptr[u + 1]).map(move |k| (self.adj_node[k], self.adj_flow[k]))
    }

    fn from_flow(f: &FlowNetwork) -> Self {
        WorkNetwork {
            visit: f.visit_rate.clone(),
            adj_ptr: f.adj_ptr.clone(),
            adj_node: f.adj_node.clone(),
            adj_flow: f.adj_flow.clone(),
            members: (0..f.node_count() as u32).map(|i| vec![i]).collect(),
        }
    }

    /// Subnetwork induced by a set of dense node indices; flows leaving the
    /// set are dropped (they are constants under any internal split).
    fn from_induced(f: &FlowNetwork, dense_nodes: &[u32]) -> Self {
        let mut local = vec![u32::MAX; f.node_count()];
        for (pos, &d) in dense_nodes.iter().enumerate() {
            local[d as usize] = pos as u32;
        }
        let mut adj_ptr = vec![0usize; dense_nodes.len() + 1];
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for (pos, &d) in dense_nodes.iter().enumerate() {
            for (nbr, flow) in f.neighbors(d) {
                if local[nbr as usize] != u32::MAX {
                    entries.push((local[nbr as usize], flow));
                }
            }
            adj_ptr[pos + 1] = entries.len();
        }
        WorkNetwork {
            visit: dense_nodes
                .iter()
                .map(|&d| f.visit_rate[d as usize])
                .collect(),
            adj_ptr,
            adj_node: entries.iter().map(|&(n, _)| n).collect(),
            adj_flow: entries.iter().map(|&(_, f)| f).collect(),
            members: dense_nodes.iter().map(|&d| vec![d]).collect(),
        }
    }

    /// Collapses modules into units; `assignment` must use compact ids.
    fn aggregate(&self, assignment: &[u32], n_modules: usize) -> WorkNetwork {
        let mut visit = vec![0.0; n_modules];
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); n_modules];
        for (u, &m) in assignment.iter().enumerate() {
            visit[m as usize] += self.visit[u];
            members[m as usize].extend_from_slice(&self.members[u]);
        }
        for list in &mut members {
            list.sort_unstable();
        }
        // accumulate inter-module flow with a stamped scatter buffer
        let mut units_of: Vec<Vec<u32>> = vec![Vec::new(); n_modules];
        for (u, &m) in assignment.iter().enumerate() {
            units_of[m as usize].push(u as u32);
        }
        let mut stamp = vec![u32::MAX; n_modules];
        let mut acc = vec![0.0; n_modules];
        let mut adj_ptr = vec![0usize; n_modules + 1];
        let mut adj_node = Vec::new();
        let mut adj_flow = Vec::new();
        for m in 0..n_modules {
            let mut touched: Vec<u32> = Vec::new();
            for &u in &units_of[m] {
                for (nbr, flow) in self.neighbors(u as usize) {
                    let target = assignment[nbr as usize];
                    if target as usize == m {
                        continue;
                    }
                    if stamp[target as usize] != m as u32 {
                        stamp[target as usize] = m as u32;
                        acc[target as usize] = flow;
                        touched.push(target);
                    } else {
                        acc[target as usize] += flow;
                    }
                }
            }
            touched.sort_unstable();
            for &t in &touched {
                adj_node.push(t);
                adj_flow.push(acc[t as usize]);
            }
            adj_ptr[m + 1] = adj_node.len();
        }
        WorkNetwork {
            visit,
            adj_ptr,
            adj_node,
            adj_flow,
            members,
        }
    }
}

/// Renumbers assignment ids to 0..m in first-appearance order.
fn compact_assignment(assignment: &mut [u32]) -> usize {
    let mut remap: Vec<u32> = vec![u32::MAX; assignment.len()];
    let mut next = 0u32;
    for a in assignment.iter_mut() {
        if remap[*a as usize] == u32::MAX {
            remap[*a as usize] = next;
            next += 1;
        }
        *a = remap[*a as usize];
    }
    next as usize
}

/// Greedy single-unit moves until a full pass makes no move. Mutates
/// `assignment` (compacted on entry and exit); returns the move count.
fn optimize_level(work: &WorkNetwork, assignment: &mut [u32], rng: &mut ChaCha8Rng) -> usize {
    let n = work.len();
    let mut n_modules = compact_assignment(assignment);

    let mut exit = vec![0.0; n];
    let mut visit = vec![0.0; n];
    let mut size = vec![0u32; n];
    let rebuild = |assignment: &[u32], exit: &mut [f64], visit: &mut [f64], size: &mut [u32]| {
        exit.fill(0.0);
        visit.fill(0.0);
        size.fill(0);
        for u in 0..n {
            let m = assignment[u] as usize;
            visit[m] += work.visit[u];
            size[m] += 1;
            for (nbr, flow) in work.neighbors(u) {
                if assignment[nbr as usize] != assignment[u] {
                    exit[m] += flow;
                }
            }
        }
    };

    let mut order: Vec<u32> = (0..n as u32).collect();
    // ids above the in-use range serve as reusable empty modules
    let mut free_modules: Vec<u32> = ((n_modules as u32)..(n as u32)).rev().collect();

    // scatter buffers for flows into neighboring modules
    let mut cand_flow = vec![0.0; n];
    let mut stamp = vec![u32::MAX; n];
    let mut total_moves = 0usize;

    for _pass in 0..MAX_PASSES_PER_LEVEL {
        rebuild(assignment, &mut exit, &mut visit, &mut size);
        let mut sum_exit: f64 = exit.iter().sum();

        order.shuffle(rng);
        let mut moves = 0usize;
        for &u32_u in &order {
            let u = u32_u as usize;
            let current = assignment[u];
            let mut touched: Vec<u32> = Vec::new();
            let mut degree_flow = 0.0;
            for (nbr, flow) in work.neighbors(u) {
                let m = assignment[nbr as usize];
                degree_flow += flow;
                if stamp[m as usize] != u32_u {
                    stamp[m as usize] = u32_u;
                    cand_flow[m as usize] = flow;
                    touched.push(m);
                } else {
                    cand_flow[m as usize] += flow;
                }
            }
            if stamp[current as usize] != u32_u {
                stamp[current as usize] = u32_u;
                cand_flow[current as usize] = 0.0;
                touched.push(current);
            }
            // singleton escape: an empty module is always a candidate when
            // the unit shares its module with others
            let empty_candidate = if size[current as usize] > 1 {
                free_modules.last().copied()
            } else {
                None
            };

            let f_cur = cand_flow[current as usize];
            let v_u = work.visit[u];
            let q_a = exit[current as usize];
            let p_a = visit[current as usize];
            let q_a_new = q_a - degree_flow + 2.0 * f_cur;

            let mut best_module = current;
            let mut best_delta = 0.0f64;
            let consider = |m: u32,
                                f_um: f64,
                                exit: &[f64],
                                visit: &[f64],
                                best_module: &mut u32,
                                best_delta: &mut f64| {
                if m == current {
                    return;
                }
                let q_b = exit[m as usize];
                let p_b = visit[m as usize];
                let q_b_new = q_b + degree_flow - 2.0 * f_um;
                let new_sum = sum_exit + (q_a_new - q_a) + (q_b_new - q_b);
                let delta = plogp(new_sum) - plogp(sum_exit)
                    - 2.0 * (plogp(q_a_new) - plogp(q_a) + plogp(q_b_new) - plogp(q_b))
                    + plogp(q_a_new + p_a - v_u) - plogp(q_a + p_a)
                    + plogp(q_b_new + p_b + v_u) - plogp(q_b + p_b);
                if delta < *best_delta - TIE_TOL
                    || (delta < *best_delta + TIE_TOL && m < *best_module)
                {
                    if delta < *best_delta {
                        *best_delta = delta;
                    }
                    *best_module = m;
                }
            };
            for &m in &touched {
                consider(m, cand_flow[m as usize], &exit, &visit, &mut best_module, &mut best_delta);
            }
            if let Some(empty) = empty_candidate {
                consider(empty, 0.0, &exit, &visit, &mut best_module, &mut best_delta);
            }

            if best_module != current && best_delta < -1e-15 {
                let b = best_module as usize;
                let f_ub = if stamp[b] == u32_u { cand_flow[b] } else { 0.0 };
                let q_b = exit[b];
                let q_b_new = q_b + degree_flow - 2.0 * f_ub;
                sum_exit += (q_a_new - q_a) + (q_b_new - q_b);
                exit[current as usize] = q_a_new;
                exit[b] = q_b_new;
                visit[current as usize] -= v_u;
                visit[b] += v_u;
                size[current as usize] -= 1;
                size[b] += 1;
                if size[current as usize] == 0 {
                    free_modules.push(current);
                }
                if Some(best_module) == empty_candidate {
                    free_modules.pop();
                    n_modules = n_modules.max(best_module as usize + 1);
                }
                assignment[u] = best_module;
                moves += 1;
            }
        }
        total_moves += moves;
        if moves == 0 {
            break;
        }
    }
    compact_assignment(assignment);
    total_moves
}

/// One full flat-search trial: leaf moves, aggregation cascade, fine-tune,
/// repeated until the two-level codelength stops improving. Returns the
/// leaf assignment (compact ids) and its codelength without the constant
/// node-entropy term.
fn flat_trial(work: &WorkNetwork, rng: &mut ChaCha8Rng, max_outer_iters: usize) -> (Vec<u32>, f64) {
    let n = work.len();
    let partial = |assignment: &[u32]| -> f64 {
        let m = assignment.iter().map(|&a| a as usize).max().unwrap_or(0) + 1;
        let mut q = vec![0.0; m];
        let mut p = vec![0.0; m];
        for u in 0..n {
            let a = assignment[u] as usize;
            p[a] += work.visit[u];
            for (nbr, flow) in work.neighbors(u) {
                if assignment[nbr as usize] != assignment[u] {
                    q[a] += flow;
                }
            }
        }
        let sum_q: f64 = q.iter().sum();
        plogp(sum_q) - 2.0 * q.iter().map(|&x| plogp(x)).sum::<f64>()
            + q.iter().zip(&p).map(|(&qi, &pi)| plogp(qi + pi)).sum::<f64>()
    };

    // base units own exactly one member each; map member values back to
    // unit positions for the aggregation readback
    let mut unit_of_member: std::collections::HashMap<u32, u32> =
        std::collections::HashMap::with_capacity(n);
    for (u, members) in work.members.iter().enumerate() {
        debug_assert_eq!(members.len(), 1);
        unit_of_member.insert(members[0], u as u32);
    }

    let mut best_assign: Vec<u32> = (0..n as u32).collect();
    let mut best_cl = partial(&best_assign);

    for _ in 0..max_outer_iters {
        // fine-tune at leaf level starting from the current modules
        let mut assign = best_assign.clone();
        optimize_level(work, &mut assign, rng);
        // aggregation cascade: collapse and re-optimize until stable
        let n_modules = compact_assignment(&mut assign);
        let mut agg = work.aggregate(&assign, n_modules);
        loop {
            let mut sub: Vec<u32> = (0..agg.len() as u32).collect();
            let moves = optimize_level(&agg, &mut sub, rng);
            if moves == 0 {
                break;
            }
            let m = compact_assignment(&mut sub);
            agg = agg.aggregate(&sub, m);
        }
        // read the leaf assignment back from the aggregate members
        let mut flattened = vec![0u32; n];
        for (module, members) in agg.members.iter().enumerate() {
            for leaf in members {
                flattened[unit_of_member[leaf] as usize] = module as u32;
            }
        }
        compact_assignment(&mut flattened);
        let cl = partial(&flattened);
        if cl < best_cl - MIN_IMPROVEMENT {
            best_cl = cl;
            best_assign = flattened;
        } else {
            break;
        }
    }
    (best_assign, best_cl)
}

/// Best flat assignment over seeded restarts.
fn best_flat_assignment(
    work: &WorkNetwork,
    seed: u64,
    trials: u64,
    max_outer_iters: usize,
) -> Vec<u32> {
    let mut best: Option<(f64, Vec<u32>)> = None;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, trial));
        let (assign, cl) = flat_trial(work, &mut rng, max_outer_iters);
        match &best {
            Some((best_cl, _)) if cl >= best_cl - MIN_IMPROVEMENT => {}
            _ => best = Some((cl, assign)),
        }
    }
    best.expect("at least one trial").1
}

/// One-direction flow leaving a set of dense nodes.
fn cut_flow(f: &FlowNetwork, in_set: &[bool], members: &[u32]) -> f64 {
    let mut total = 0.0;
    for &u in members {
        for (nbr, flow) in f.neighbors(u) {
            if !in_set[nbr as usize] {
                total += flow;
            }
        }
    }
    total
}

fn leaf_term_bits(f: &FlowNetwork, members: &[u32], exit: f64) -> f64 {
    let p_sum: f64 = members.iter().map(|&u| f.visit_rate[u as usize]).sum();
    plogp(exit + p_sum)
        - plogp(exit)
        - members
            .iter()
            .map(|&u| plogp(f.visit_rate[u as usize]))
            .sum::<f64>()
}

/// Groups dense node lists out of a flat assignment, ordered by smallest
/// contained node for determinism.
fn modules_from_assignment(assignment: &[u32], units_members: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n_modules = assignment.iter().map(|&a| a as usize).max().unwrap_or(0) + 1;
    let mut sets: Vec<Vec<u32>> = vec![Vec::new(); n_modules];
    for (u, &m) in assignment.iter().enumerate() {
        sets[m as usize].extend_from_slice(&units_members[u]);
    }
    for set in &mut sets {
        set.sort_unstable();
    }
    sets.retain(|s| !s.is_empty());
    sets.sort_by_key(|s| s[0]);
    sets
}

/// Recursively splits a final module into submodules when the exact
/// hierarchical delta strictly improves.
fn try_split(
    f: &FlowNetwork,
    module: &mut Module,
    in_set: &mut [bool],
    seed: u64,
    max_outer_iters: usize,
) {
    let nodes: Vec<u32> = match &module.children {
        ModuleChildren::Nodes(nodes) => nodes.clone(),
        ModuleChildren::Submodules(_) => {
            let subs = match &mut module.children {
                ModuleChildren::Submodules(subs) => subs,
                _ => unreachable!(),
            };
            for (pos, sub) in subs.iter_mut().enumerate() {
                try_split(f, sub, in_set, mix_seed(seed, 101 + pos as u64), max_outer_iters);
            }
            return;
        }
    };
    if nodes.len() < 4 {
        return;
    }
    let dense: Vec<u32> = nodes
        .iter()
        .map(|&id| f.index_of(id).expect("tree nodes are in the network"))
        .collect();
    let sub_work = WorkNetwork::from_induced(f, &dense);
    let assignment =
        best_flat_assignment(&sub_work, mix_seed(seed, 7), SPLIT_TRIALS, max_outer_iters);
    let child_sets = modules_from_assignment(&assignment, &sub_work.members);
    if child_sets.len() < 2 {
        return;
    }

    for &d in &dense {
        in_set[d as usize] = true;
    }
    let exit_m = cut_flow(f, in_set, &dense);
    let old_bits = leaf_term_bits(f, &dense, exit_m);
    let mut enters = Vec::with_capacity(child_sets.len());
    let mut new_bits = 0.0;
    for set in &child_sets {
        for &d in &dense {
            in_set[d as usize] = false;
        }
        for &d in set {
            in_set[d as usize] = true;
        }
        let enter = cut_flow(f, in_set, set);
        new_bits += leaf_term_bits(f, set, enter);
        enters.push(enter);
    }
    new_bits += index_codebook_bits(exit_m, &enters);
    for &d in &dense {
        in_set[d as usize] = false;
    }

    if new_bits < old_bits - MIN_IMPROVEMENT {
        let submodules: Vec<Module> = child_sets
            .iter()
            .map(|set| {
                Module::of_nodes(set.iter().map(|&d| f.node_ids[d as usize]).collect())
            })
            .collect();
        module.children = ModuleChildren::Submodules(submodules);
        if let ModuleChildren::Submodules(subs) = &mut module.children {
            for (pos, sub) in subs.iter_mut().enumerate() {
                try_split(f, sub, in_set, mix_seed(seed, 211 + pos as u64), max_outer_iters);
            }
        }
    }
}

fn dense_nodes_of(f: &FlowNetwork, module: &Module) -> Vec<u32> {
    let mut ids = Vec::new();
    super::collect_nodes(module, &mut ids);
    ids.iter()
        .map(|&id| f.index_of(id).expect("tree nodes are in the network"))
        .collect()
}

/// Tries to insert index levels by clustering sibling modules under new
/// super-modules; accepted on exact deltas, applied recursively.
fn try_group_children(
    f: &FlowNetwork,
    parent_exit: f64,
    children: &mut Vec<Module>,
    in_set: &mut [bool],
    seed: u64,
    max_outer_iters: usize,
) {
    let mut round = 0u64;
    loop {
        if children.len() < 3 {
            break;
        }
        // module graph over the children: at an index level the walk being
        // encoded is the stream of module entries, so each child carries its
        // enter rate as flow and the adjacency holds inter-child flows
        let child_dense: Vec<Vec<u32>> = children.iter().map(|c| dense_nodes_of(f, c)).collect();
        let mut child_of = vec![u32::MAX; f.node_count()];
        for (k, set) in child_dense.iter().enumerate() {
            for &d in set {
                child_of[d as usize] = k as u32;
            }
        }
        let child_enters: Vec<f64> = child_dense
            .iter()
            .map(|set| {
                for &d in set {
                    in_set[d as usize] = true;
                }
                let e = cut_flow(f, in_set, set);
                for &d in set {
                    in_set[d as usize] = false;
                }
                e
            })
            .collect();
        let n_children = children.len();
        let mut flows: Vec<std::collections::BTreeMap<u32, f64>> =
            vec![std::collections::BTreeMap::new(); n_children];
        for (k, set) in child_dense.iter().enumerate() {
            for &d in set {
                for (nbr, flow) in f.neighbors(d) {
                    let other = child_of[nbr as usize];
                    if other != u32::MAX && other as usize != k {
                        *flows[k].entry(other).or_insert(0.0) += flow;
                    }
                }
            }
        }
        let mut adj_ptr = vec![0usize; n_children + 1];
        let mut adj_node = Vec::new();
        let mut adj_flow = Vec::new();
        for (k, row) in flows.iter().enumerate() {
            for (&other, &flow) in row {
                adj_node.push(other);
                adj_flow.push(flow);
            }
            adj_ptr[k + 1] = adj_node.len();
        }
        let module_graph = WorkNetwork {
            visit: child_enters.clone(),
            adj_ptr,
            adj_node,
            adj_flow,
            members: (0..n_children as u32).map(|k| vec![k]).collect(),
        };
        let assignment = best_flat_assignment(
            &module_graph,
            mix_seed(seed, 900 + round),
            SPLIT_TRIALS,
            max_outer_iters,
        );
        let groups = modules_from_assignment(&assignment, &module_graph.members);
        if groups.len() < 2 || groups.len() >= n_children {
            break;
        }
        let old_bits = index_codebook_bits(parent_exit, &child_enters);
        let mut new_bits = 0.0;
        let mut group_enters = Vec::with_capacity(groups.len());
        for group in &groups {
            let union: Vec<u32> = group
                .iter()
                .flat_map(|&k| child_dense[k as usize].iter().copied())
                .collect();
            for &d in &union {
                in_set[d as usize] = true;
            }
            let enter = cut_flow(f, in_set, &union);
            for &d in &union {
                in_set[d as usize] = false;
            }
            let member_enters: Vec<f64> =
                group.iter().map(|&k| child_enters[k as usize]).collect();
            if group.len() > 1 {
                new_bits += index_codebook_bits(enter, &member_enters);
            }
            group_enters.push(enter);
        }
        new_bits += index_codebook_bits(parent_exit, &group_enters);

        if new_bits < old_bits - MIN_IMPROVEMENT {
            let mut taken: Vec<Option<Module>> = children.drain(..).map(Some).collect();
            let mut regrouped: Vec<Module> = Vec::with_capacity(groups.len());
            for group in &groups {
                if group.len() == 1 {
                    regrouped.push(taken[group[0] as usize].take().expect("child taken once"));
                } else {
                    let members: Vec<Module> = group
                        .iter()
                        .map(|&k| taken[k as usize].take().expect("child taken once"))
                        .collect();
                    regrouped.push(Module::of_submodules(members));
                }
            }
            *children = regrouped;
            round += 1;
        } else {
            break;
        }
    }

    // recurse into composite children
    for (pos, child) in children.iter_mut().enumerate() {
        if let ModuleChildren::Submodules(_) = child.children {
            let dense = dense_nodes_of(f, child);
            for &d in &dense {
                in_set[d as usize] = true;
            }
            let exit = cut_flow(f, in_set, &dense);
            for &d in &dense {
                in_set[d as usize] = false;
            }
            if let ModuleChildren::Submodules(subs) = &mut child.children {
                try_group_children(
                    f,
                    exit,
                    subs,
                    in_set,
                    mix_seed(seed, 3000 + pos as u64),
                    max_outer_iters,
                );
            }
        }
    }
}

/// Searches for a hierarchy with locally minimal description length:
/// seeded-restart greedy moves and aggregation for the flat level, then
/// recursive splits and index levels accepted only on strict improvement.
/// Deterministic for a fixed seed; never worse than the one-module
/// hierarchy.
pub fn optimize_partition(f: &FlowNetwork, seed: u64) -> HierarchyPartition {
    optimize_partition_with(f, seed, MAX_OUTER_ITERS)
}

/// [`optimize_partition`] with an explicit cap on the outer
/// move-and-aggregate iterations (the `--max-iters` CLI flag).
pub fn optimize_partition_with(
    f: &FlowNetwork,
    seed: u64,
    max_outer_iters: usize,
) -> HierarchyPartition {
    let max_outer_iters = max_outer_iters.max(1);
    let work = WorkNetwork::from_flow(f);
    let assignment = best_flat_assignment(&work, mix_seed(seed, 1), FLAT_TRIALS, max_outer_iters);
    let flat_modules = modules_from_assignment(&assignment, &work.members);

    let mut root_children: Vec<Module> = flat_modules
        .iter()
        .map(|set| Module::of_nodes(set.iter().map(|&d| f.node_ids[d as usize]).collect()))
        .collect();

    let mut in_set = vec![false; f.node_count()];
    for (pos, module) in root_children.iter_mut().enumerate() {
        try_split(f, module, &mut in_set, mix_seed(seed, 5000 + pos as u64), max_outer_iters);
    }
    try_group_children(
        f,
        0.0,
        &mut root_children,
        &mut in_set,
        mix_seed(seed, 77),
        max_outer_iters,
    );

    sort_modules(&mut root_children);
    let tree = HierarchyPartition {
        root: Module::of_submodules(root_children),
    };

    let one_module = HierarchyPartition::one_module(&f.node_ids);
    let tree_bits = codelength(f, &tree).expect("search tree is valid").total_bits;
    let one_bits = codelength(f, &one_module)
        .expect("one-module tree is valid")
        .total_bits;
    if tree_bits <= one_bits + MIN_IMPROVEMENT {
        tree
    } else {
        one_module
    }
}

fn smallest_node(module: &Module) -> u32 {
    match &module.children {
        ModuleChildren::Nodes(nodes) => nodes.iter().copied().min().unwrap_or(u32::MAX),
        ModuleChildren::Submodules(subs) => {
            subs.iter().map(smallest_node).min().unwrap_or(u32::MAX)
        }
    }
}

fn sort_modules(modules: &mut [Module]) {
    for module in modules.iter_mut() {
        if let ModuleChildren::Submodules(subs) = &mut module.children {
            sort_modules(subs);
        }
    }
    modules.sort_by_key(smallest_node);
}
