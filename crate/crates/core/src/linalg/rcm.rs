//! Reverse Cuthill-McKee fill-reducing ordering.

use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;

/// Compute a reverse Cuthill-McKee ordering of the symmetrized pattern of
/// `a`. Returns `perm` with `perm[new] = old`. Deterministic: ties are broken
/// by vertex index.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n_rows;
    // adjacency of A + A'
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k];
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    loop {
        // lowest-degree unvisited vertex starts the next component
        let start = match (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
            Some(s) => s,
            None => break,
        };
        let start = pseudo_peripheral(start, &adj, &degree);
        // Cuthill-McKee BFS, neighbors in increasing degree
        let mut queue = vec![start];
        visited[start] = true;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_unstable_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// George-Liu style pseudo-peripheral vertex: repeat BFS from the far end of
/// the previous level structure until the eccentricity stops growing.
fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let mut last_depth = 0usize;
    for _ in 0..8 {
        let (depth, far) = bfs_depth(root, adj, degree);
        if depth <= last_depth {
            break;
        }
        last_depth = depth;
        root = far;
    }
    root
}

fn bfs_depth(root: usize, adj: &[Vec<usize>], degree: &[usize]) -> (usize, usize) {
    let n = adj.len();
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = vec![root];
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push(w);
            }
        }
    }
    let depth = queue.iter().map(|&v| level[v]).max().unwrap_or(0);
    // lowest-degree vertex in the deepest level
    let far = queue
        .iter()
        .copied()
        .filter(|&v| level[v] == depth)
        .min_by_key(|&v| (degree[v], v))
        .unwrap_or(root);
    (depth, far)
}
