use serde::Serialize;

use super::kernel::{SubKernel, WeightedKernel, Window};
use crate::error::Result;

/// Irreducible classes of a windowed kernel and the reachability order between them.
#[derive(Debug, Clone, Serialize)]
pub struct ClassStructure {
    /// Sites of each class, sorted ascending.
    pub classes: Vec<Vec<usize>>,
    /// Class index of every window site.
    pub class_of: Vec<usize>,
    /// Direct edges of the condensation: `successors[c]` lists classes entered
    /// by a single edge out of `c`.
    pub successors: Vec<Vec<usize>>,
    /// Whether the class carries a cycle (more than one site, or a self-loop).
    pub cyclic: Vec<bool>,
}

impl ClassStructure {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Classes reachable from class `c`, including `c` itself, in ascending order.
    pub fn reachable_from(&self, c: usize) -> Vec<usize> {
        let mut seen = vec![false; self.classes.len()];
        let mut stack = vec![c];
        seen[c] = true;
        while let Some(d) = stack.pop() {
            for &e in &self.successors[d] {
                if !seen[e] {
                    seen[e] = true;
                    stack.push(e);
                }
            }
        }
        (0..seen.len()).filter(|&d| seen[d]).collect()
    }

    /// `x → y` within the window (`x → x` always holds, paths of length 0).
    pub fn reaches(&self, x: usize, y: usize) -> bool {
        self.reachable_from(self.class_of[x])
            .contains(&self.class_of[y])
    }
}

/// Strongly connected components of the edge set restricted to `w`.
pub fn irreducible_classes(k: &WeightedKernel, w: Window) -> Result<ClassStructure> {
    Ok(classes_of(&k.restrict(w)?))
}

/// Tarjan's algorithm, iterative.
pub fn classes_of(sub: &SubKernel) -> ClassStructure {
    let n = sub.size();
    let adj: Vec<Vec<usize>> = (0..n).map(|x| sub.edges(x).map(|(y, _)| y).collect()).collect();

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut class_of = vec![UNSEEN; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, position in its adjacency list)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let c = classes.len();
                    let mut members = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        class_of[w] = c;
                        members.push(w);
                        if w == v {
                            break;
                        }
                    }
                    members.sort_unstable();
                    classes.push(members);
                }
            }
        }
    }

    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    let mut cyclic = vec![false; classes.len()];
    for x in 0..n {
        let cx = class_of[x];
        for &y in &adj[x] {
            let cy = class_of[y];
            if cx != cy {
                successors[cx].push(cy);
            } else if x == y || classes[cx].len() > 1 {
                cyclic[cx] = true;
            }
        }
    }
    for s in &mut successors {
        s.sort_unstable();
        s.dedup();
    }

    ClassStructure {
        classes,
        class_of,
        successors,
        cyclic,
    }
}
