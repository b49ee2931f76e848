//! Depth-first branch-and-bound over fixed-size subsets of `0..n`.
//!
//! Subsets are explored include-first in increasing index order, so within
//! one subtree they are visited lexicographically. The top two levels are
//! split into independent rayon tasks sharing a monotone incumbent.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

/// Values closer than this are treated as ties.
pub(crate) const TIE_TOL: f64 = 1e-12;

const PROGRESS_EVERY: u64 = 1 << 20;
const FLUSH_EVERY: u64 = 1 << 12;

/// An objective over subsets, maximized by [`maximize`].
///
/// Values must be nonnegative: the shared incumbent orders them by bit pattern.
pub(crate) trait Objective: Sync {
    fn value(&self, sel: &[usize]) -> f64;

    /// Upper bound on the value of any subset `sel + T` where `T` has
    /// `remaining` elements, all `>= next`. Must be nonincreasing in `next`.
    fn bound(&self, sel: &[usize], value: f64, next: usize, remaining: usize) -> f64;
}

#[derive(Clone, Debug)]
pub(crate) struct Space {
    pub n: usize,
    pub picks: usize,
    /// When set, the smallest chosen index must be a multiple of this.
    pub first_stride: Option<usize>,
    pub label: &'static str,
}

/// Best pair by value, then repeated best single extension.
pub(crate) fn greedy<O: Objective>(obj: &O, space: &Space) -> f64 {
    let (n, picks) = (space.n, space.picks);
    if picks == 1 {
        return obj.value(&[0]);
    }
    let mut sel = vec![0, 1];
    let mut best = f64::NEG_INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let v = obj.value(&[a, b]);
            if v > best {
                best = v;
                sel = vec![a, b];
            }
        }
    }
    while sel.len() < picks {
        let mut choice = None;
        let mut best_v = f64::NEG_INFINITY;
        for c in (0..n).filter(|c| !sel.contains(c)) {
            let mut trial = sel.clone();
            trial.push(c);
            trial.sort_unstable();
            let v = obj.value(&trial);
            if v > best_v {
                best_v = v;
                choice = Some(trial);
            }
        }
        sel = choice.expect("picks <= n");
        best = best_v;
    }
    best
}

pub(crate) fn maximize<O: Objective>(obj: &O, space: &Space, seed: f64) -> (f64, Vec<usize>) {
    assert!(space.picks >= 1 && space.picks <= space.n);
    let shared = AtomicU64::new(seed.max(0.0).to_bits());
    let nodes = AtomicU64::new(0);
    let tasks = root_tasks(space);
    let found: Vec<Option<(f64, Vec<usize>)>> = tasks
        .par_iter()
        .map(|prefix| {
            let mut w = Worker {
                obj,
                space,
                shared: &shared,
                nodes: &nodes,
                pending: 0,
                best: f64::NEG_INFINITY,
                best_sel: Vec::new(),
            };
            let mut sel = prefix.clone();
            let v = obj.value(&sel);
            w.visit(&mut sel, v);
            w.flush();
            (!w.best_sel.is_empty()).then_some((w.best, w.best_sel))
        })
        .collect();
    log::debug!(
        "{}: {} tasks, {} nodes",
        space.label,
        tasks.len(),
        nodes.load(Ordering::Relaxed)
    );
    merge(found.into_iter().flatten())
}

/// Maximum value; among values within [`TIE_TOL`] of it, the lexicographically smallest subset.
pub(crate) fn merge(items: impl Iterator<Item = (f64, Vec<usize>)>) -> (f64, Vec<usize>) {
    let items: Vec<_> = items.collect();
    let top = items.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    items
        .into_iter()
        .filter(|x| x.0 >= top - TIE_TOL)
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("the optimum is never pruned")
}

fn root_tasks(space: &Space) -> Vec<Vec<usize>> {
    let (n, picks) = (space.n, space.picks);
    let allowed = |a: usize| space.first_stride.is_none_or(|s| a.is_multiple_of(s));
    let firsts = (0..=n - picks).filter(|&a| allowed(a));
    if picks == 1 {
        return firsts.map(|a| vec![a]).collect();
    }
    firsts
        .flat_map(|a| (a + 1..=n - picks + 1).map(move |b| vec![a, b]))
        .collect()
}

struct Worker<'a, O> {
    obj: &'a O,
    space: &'a Space,
    shared: &'a AtomicU64,
    nodes: &'a AtomicU64,
    pending: u64,
    best: f64,
    best_sel: Vec<usize>,
}

impl<O: Objective> Worker<'_, O> {
    fn pruned(&self, bound: f64) -> bool {
        // Local ties are pruned (earlier subsets win); shared ties are not, so
        // every task still reports its own lexicographically first optimum.
        let shared = f64::from_bits(self.shared.load(Ordering::Relaxed));
        bound <= self.best + TIE_TOL || bound < shared - TIE_TOL
    }

    fn visit(&mut self, sel: &mut Vec<usize>, value: f64) {
        let picks = self.space.picks;
        if sel.len() == picks {
            if value > self.best + TIE_TOL {
                self.best = value;
                self.best_sel.clone_from(sel);
                self.shared.fetch_max(value.max(0.0).to_bits(), Ordering::Relaxed);
            }
            return;
        }
        let r = picks - sel.len();
        let start = sel.last().map_or(0, |&c| c + 1);
        for c in start..=self.space.n - r {
            if self.pruned(self.obj.bound(sel, value, c, r)) {
                break;
            }
            sel.push(c);
            let v = self.obj.value(sel);
            self.tick();
            self.visit(sel, v);
            sel.pop();
        }
    }

    fn tick(&mut self) {
        self.pending += 1;
        if self.pending == FLUSH_EVERY {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let before = self.nodes.fetch_add(self.pending, Ordering::Relaxed);
        let after = before + self.pending;
        if before / PROGRESS_EVERY != after / PROGRESS_EVERY {
            log::info!(
                "{}: {} nodes explored, incumbent {:.12}",
                self.space.label,
                after,
                f64::from_bits(self.shared.load(Ordering::Relaxed))
            );
        }
        self.pending = 0;
    }
}
