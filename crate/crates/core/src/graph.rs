//! Strongly connected components and reachability on adjacency lists.

/// Tarjan's algorithm, iterative so deep graphs cannot overflow the stack.
///
/// Returns the component id of every vertex. Components are numbered in the
/// order Tarjan completes them, i.e. reverse topological order of the
/// condensation.
pub fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // (vertex, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge == 0 && index[v] == UNSEEN {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*edge) {
                *edge += 1;
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// For each vertex: does it lie on a cycle (an SCC with an internal edge)?
pub fn on_cycle(adj: &[Vec<usize>], comp: &[usize]) -> Vec<bool> {
    let mut cyclic_comp = vec![false; comp.iter().map(|c| c + 1).max().unwrap_or(0)];
    for (v, succs) in adj.iter().enumerate() {
        for &w in succs {
            if comp[v] == comp[w] {
                cyclic_comp[comp[v]] = true;
            }
        }
    }
    comp.iter().map(|&c| cyclic_comp[c]).collect()
}

/// Vertices that can reach some vertex in `targets` (targets included).
pub fn backward_reachable(adj: &[Vec<usize>], targets: &[bool]) -> Vec<bool> {
    let n = adj.len();
    let mut rev = vec![Vec::new(); n];
    for (v, succs) in adj.iter().enumerate() {
        for &w in succs {
            rev[w].push(v);
        }
    }
    let mut seen = targets.to_vec();
    let mut work: Vec<usize> = (0..n).filter(|&v| targets[v]).collect();
    while let Some(w) = work.pop() {
        for &v in &rev[w] {
            if !seen[v] {
                seen[v] = true;
                work.push(v);
            }
        }
    }
    seen
}

/// Shortest path (by edge count) from `from` to any vertex satisfying
/// `is_target`, using at least `min_edges` edges (0 or 1). Returns the vertex
/// sequence including both endpoints.
pub fn shortest_path(
    adj: &[Vec<usize>],
    from: usize,
    min_edges: usize,
    is_target: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    if min_edges == 0 && is_target(from) {
        return Some(vec![from]);
    }
    let n = adj.len();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    // Seed with successors so a path of at least one edge is found even when
    // `from` is itself a target.
    for &w in &adj[from] {
        if !seen[w] {
            seen[w] = true;
            parent[w] = from;
            queue.push_back(w);
        }
    }
    while let Some(v) = queue.pop_front() {
        if is_target(v) {
            let mut path = vec![v];
            let mut cur = v;
            loop {
                cur = parent[cur];
                path.push(cur);
                if cur == from {
                    break;
                }
            }
            path.reverse();
            return Some(path);
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}
