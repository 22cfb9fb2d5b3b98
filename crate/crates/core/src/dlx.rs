//! Dancing-links exact cover with primary and secondary items.
//!
//! Primary items must be covered exactly once, secondary items at most once.
//! Branching uses the primary item with the fewest remaining options, ties
//! going to the lowest item index, and options are tried in insertion order,
//! so the sequence of solutions is deterministic.

use std::ops::ControlFlow;

#[derive(Clone, Copy, Debug)]
struct Node {
    left: usize,
    right: usize,
    up: usize,
    down: usize,
    item: usize,
    option: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: u64,
    pub solutions: u64,
    /// True when the callback or the node limit ended the search early.
    pub stopped: bool,
}

#[derive(Debug, Clone)]
pub struct ExactCover {
    primary: usize,
    items: usize,
    nodes: Vec<Node>,
    len: Vec<usize>,
    option_span: Vec<(usize, usize)>,
}

const ROOT: usize = 0;

impl ExactCover {
    /// Items `0..primary` are primary, `primary..primary + secondary` secondary.
    pub fn new(primary: usize, secondary: usize) -> Self {
        let items = primary + secondary;
        let mut nodes = Vec::with_capacity(items + 1);
        for i in 0..=items {
            nodes.push(Node {
                left: i,
                right: i,
                up: i,
                down: i,
                item: i,
                option: usize::MAX,
            });
        }
        // link root and primary headers horizontally; headers are 1-based
        for (i, node) in nodes.iter_mut().enumerate().take(primary + 1) {
            node.right = if i == primary { ROOT } else { i + 1 };
            node.left = if i == 0 { primary } else { i - 1 };
        }
        ExactCover {
            primary,
            items,
            nodes,
            len: vec![0; items + 1],
            option_span: Vec::new(),
        }
    }

    pub fn option_count(&self) -> usize {
        self.option_span.len()
    }

    /// Adds an option over the given (0-based, distinct) items; returns its index.
    pub fn add_option(&mut self, items: &[usize]) -> usize {
        let option = self.option_span.len();
        let start = self.nodes.len();
        for (k, &it) in items.iter().enumerate() {
            assert!(it < self.items, "item {it} out of range");
            let header = it + 1;
            let idx = self.nodes.len();
            let up = self.nodes[header].up;
            let left = if k == 0 { idx } else { idx - 1 };
            self.nodes.push(Node {
                left,
                right: start,
                up,
                down: header,
                item: header,
                option,
            });
            self.nodes[up].down = idx;
            self.nodes[header].up = idx;
            if k > 0 {
                self.nodes[idx - 1].right = idx;
                self.nodes[start].left = idx;
            }
            self.len[header] += 1;
        }
        self.option_span.push((start, self.nodes.len()));
        option
    }

    fn cover(&mut self, c: usize) {
        let Node { left, right, .. } = self.nodes[c];
        self.nodes[left].right = right;
        self.nodes[right].left = left;
        let mut i = self.nodes[c].down;
        while i != c {
            let mut j = self.nodes[i].right;
            while j != i {
                let Node { up, down, item, .. } = self.nodes[j];
                self.nodes[up].down = down;
                self.nodes[down].up = up;
                self.len[item] -= 1;
                j = self.nodes[j].right;
            }
            i = self.nodes[i].down;
        }
    }

    fn uncover(&mut self, c: usize) {
        let mut i = self.nodes[c].up;
        while i != c {
            let mut j = self.nodes[i].left;
            while j != i {
                let Node { up, down, item, .. } = self.nodes[j];
                self.nodes[up].down = j;
                self.nodes[down].up = j;
                self.len[item] += 1;
                j = self.nodes[j].left;
            }
            i = self.nodes[i].up;
        }
        let Node { left, right, .. } = self.nodes[c];
        self.nodes[left].right = c;
        self.nodes[right].left = c;
    }

    fn select(&mut self, r: usize) {
        let mut j = self.nodes[r].right;
        while j != r {
            self.cover(self.nodes[j].item);
            j = self.nodes[j].right;
        }
    }

    fn unselect(&mut self, r: usize) {
        let mut j = self.nodes[r].left;
        while j != r {
            self.uncover(self.nodes[j].item);
            j = self.nodes[j].left;
        }
    }

    /// Pre-selects an option before searching. Returns false if one of its
    /// items is already covered.
    pub fn force(&mut self, option: usize) -> bool {
        let (start, end) = self.option_span[option];
        let blocked =
            (start..end).any(|n| self.nodes[self.nodes[n].up].down != n || self.is_covered(self.nodes[n].item));
        if blocked || start == end {
            return false;
        }
        let first = start;
        self.cover(self.nodes[first].item);
        self.select(first);
        true
    }

    fn is_covered(&self, header: usize) -> bool {
        // a covered header's neighbours no longer point to it
        if header <= self.primary {
            self.nodes[self.nodes[header].left].right != header
        } else {
            false
        }
    }

    /// Enumerates exact covers. `on_solution` receives option indices in
    /// selection order (excluding forced options).
    pub fn solve<F>(&mut self, node_limit: Option<u64>, mut on_solution: F) -> SolveStats
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
    {
        let mut stats = SolveStats::default();
        let mut chosen = Vec::new();
        let _ = self.search(&mut chosen, &mut stats, node_limit, &mut on_solution);
        stats
    }

    fn search<F>(
        &mut self,
        chosen: &mut Vec<usize>,
        stats: &mut SolveStats,
        limit: Option<u64>,
        on_solution: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
    {
        if self.nodes[ROOT].right == ROOT {
            stats.solutions += 1;
            if on_solution(chosen).is_break() {
                stats.stopped = true;
                return ControlFlow::Break(());
            }
            return ControlFlow::Continue(());
        }
        let mut best = usize::MAX;
        let mut col = ROOT;
        let mut c = self.nodes[ROOT].right;
        while c != ROOT {
            if self.len[c] < best {
                best = self.len[c];
                col = c;
                if best == 0 {
                    break;
                }
            }
            c = self.nodes[c].right;
        }
        if best == 0 {
            return ControlFlow::Continue(());
        }
        self.cover(col);
        let mut r = self.nodes[col].down;
        let mut flow = ControlFlow::Continue(());
        while r != col {
            stats.nodes += 1;
            if limit.is_some_and(|l| stats.nodes > l) {
                stats.stopped = true;
                flow = ControlFlow::Break(());
                break;
            }
            chosen.push(self.nodes[r].option);
            self.select(r);
            flow = self.search(chosen, stats, limit, on_solution);
            self.unselect(r);
            chosen.pop();
            if flow.is_break() {
                break;
            }
            r = self.nodes[r].down;
        }
        self.uncover(col);
        flow
    }
}
