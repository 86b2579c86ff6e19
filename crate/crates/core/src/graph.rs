//! Strongly connected components of small dense digraphs.

use alloc::vec;
use alloc::vec::Vec;

/// Component label for every node (iterative Tarjan). `edge(i, j)` reports
/// whether the arc `i -> j` exists.
pub(crate) fn scc_labels(n: usize, edge: impl Fn(usize, usize) -> bool) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut label = vec![UNSEEN; n];
    let mut next_index = 0;
    let mut components = 0;
    // (node, next successor to inspect)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            let mut descended = false;
            while *cursor < n {
                let w = *cursor;
                *cursor += 1;
                if !edge(v, w) {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                    descended = true;
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            if descended {
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    label[w] = components;
                    if w == v {
                        break;
                    }
                }
                components += 1;
            }
        }
    }
    (label, components)
}

pub(crate) fn is_strongly_connected(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    n == 0 || scc_labels(n, edge).1 == 1
}

/// Number of closed (recurrent) classes: components with no arc leaving them.
pub(crate) fn closed_class_count(n: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    let (label, count) = scc_labels(n, &edge);
    let mut leaks = vec![false; count];
    for i in 0..n {
        for j in 0..n {
            if label[i] != label[j] && edge(i, j) {
                leaks[label[i]] = true;
            }
        }
    }
    leaks.iter().filter(|l| !**l).count()
}
