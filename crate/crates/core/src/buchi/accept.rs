use super::BuchiAutomaton;
use crate::graph::{on_cycle, tarjan_scc};
use crate::ltl::LassoWord;

/// Whether some run of `a` over `w` visits an accepting state infinitely
/// often.
///
/// Builds the synchronous product of the automaton with the lasso graph of
/// `w` (node `(q, i)`: automaton in `q` about to read position `i`) and looks
/// for a reachable accepting node on a cycle. Such cycles necessarily lie in
/// the periodic part of the word.
pub fn accepts_lasso(a: &BuchiAutomaton, w: &LassoWord) -> bool {
    let n = w.len();
    let letters: Vec<u64> = (0..n).map(|i| a.letter(w.letter(i))).collect();
    let node = |q: usize, i: usize| q * n + i;

    let total = a.num_states() * n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut reached = vec![false; total];
    let mut stack: Vec<usize> = a.initial().iter().map(|&q| node(q, 0)).collect();
    for &v in &stack {
        reached[v] = true;
    }
    while let Some(v) = stack.pop() {
        let (q, i) = (v / n, v % n);
        let j = w.succ(i);
        for t in a.outgoing(q) {
            if t.guard.satisfied_by(letters[i]) {
                let u = node(t.dst, j);
                adj[v].push(u);
                if !reached[u] {
                    reached[u] = true;
                    stack.push(u);
                }
            }
        }
    }

    let comp = tarjan_scc(&adj);
    let cyclic = on_cycle(&adj, &comp);
    (0..total).any(|v| reached[v] && cyclic[v] && a.is_accepting(v / n))
}
