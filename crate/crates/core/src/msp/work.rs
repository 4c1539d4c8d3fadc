//! Mutable partitioning state shared by the MSP steps.
//!
//! Vertices use joint ids: first-kernel iteration `v` is `v`, second-kernel
//! iteration `i` is `n1 + i`. W-partitions have stable ids; s-partitions
//! are ordered lists of those ids.

use crate::dag::DepDag;

pub(crate) struct Work<'a> {
    pub joint: &'a DepDag,
    pub n1: usize,
    pub wparts: Vec<Vec<usize>>,
    pub cost: Vec<u64>,
    pub sparts: Vec<Vec<usize>>,
    pub spart_of: Vec<usize>,
    /// W-partitions holding a copy of each joint vertex.
    pub copies: Vec<Vec<usize>>,
    /// Home w-partition of a vertex taken out for slack assignment.
    pub home: Vec<Option<usize>>,
    pub pairs: Vec<(usize, usize)>,
}

impl<'a> Work<'a> {
    pub fn new(joint: &'a DepDag, n1: usize, nspart: usize) -> Self {
        Self {
            joint,
            n1,
            wparts: Vec::new(),
            cost: Vec::new(),
            sparts: vec![Vec::new(); nspart],
            spart_of: Vec::new(),
            copies: vec![Vec::new(); joint.nvert()],
            home: vec![None; joint.nvert()],
            pairs: Vec::new(),
        }
    }

    pub fn add_wpart(&mut self, s: usize, members: impl IntoIterator<Item = usize>) -> usize {
        let id = self.wparts.len();
        self.wparts.push(Vec::new());
        self.cost.push(0);
        self.spart_of.push(s);
        if s >= self.sparts.len() {
            self.sparts.resize(s + 1, Vec::new());
        }
        self.sparts[s].push(id);
        for v in members {
            self.insert(v, id);
        }
        id
    }

    pub fn insert(&mut self, v: usize, w: usize) {
        debug_assert!(!self.copies[v].contains(&w));
        self.wparts[w].push(v);
        self.cost[w] += self.joint.cost(v);
        self.copies[v].push(w);
    }

    pub fn remove(&mut self, v: usize, w: usize) {
        let pos = self.wparts[w]
            .iter()
            .position(|&x| x == v)
            .expect("vertex is in the w-partition");
        self.wparts[w].swap_remove(pos);
        self.cost[w] -= self.joint.cost(v);
        self.copies[v].retain(|&x| x != w);
    }

    pub fn total_entries(&self) -> usize {
        self.wparts.iter().map(Vec::len).sum()
    }

    pub fn s(&self, w: usize) -> usize {
        self.spart_of[w]
    }

    /// Whether some copy of `u` (or its home, if `u` is out for slack
    /// assignment) runs before the entries of `w`.
    pub fn satisfied(&self, u: usize, w: usize) -> bool {
        let ok = |p: usize| p == w || self.s(p) < self.s(w);
        match self.home[u] {
            Some(h) => ok(h),
            None => self.copies[u].iter().any(|&p| ok(p)),
        }
    }

    /// Where `x` runs: its copies, or its home while it is unplaced.
    fn locations(&self, x: usize) -> Vec<usize> {
        match self.home[x] {
            Some(h) => vec![h],
            None => self.copies[x].clone(),
        }
    }

    /// Checks every dependence touching `verts` (which must currently be
    /// placed): predecessors resolve, and every location of a successor
    /// still has a copy of the vertex in time.
    pub fn consistent(&self, verts: &[usize]) -> bool {
        for &v in verts {
            for &w in &self.copies[v] {
                if !self
                    .joint
                    .predecessors(v)
                    .iter()
                    .all(|&u| self.satisfied(u, w))
                {
                    return false;
                }
            }
            for &x in self.joint.successors(v) {
                if !self.locations(x).into_iter().all(|q| self.satisfied(v, q)) {
                    return false;
                }
            }
        }
        true
    }

    /// Moves all entries of `src` into `dst` if the result is consistent.
    /// Entries already present in `dst` are dropped from `src`.
    pub fn try_merge(&mut self, src: usize, dst: usize) -> bool {
        let moved: Vec<usize> = self.wparts[src].clone();
        let mut added = Vec::new();
        for &v in &moved {
            self.remove(v, src);
            if !self.copies[v].contains(&dst) {
                self.insert(v, dst);
                added.push(v);
            }
        }
        if self.consistent(&moved) {
            return true;
        }
        for &v in &added {
            self.remove(v, dst);
        }
        for &v in &moved {
            self.insert(v, src);
        }
        false
    }

    /// Places unplaced `verts` into `w` if consistent; otherwise leaves
    /// them unplaced.
    pub fn try_place(&mut self, verts: &[usize], w: usize) -> bool {
        let homes: Vec<Option<usize>> = verts.iter().map(|&v| self.home[v].take()).collect();
        for &v in verts {
            self.insert(v, w);
        }
        if self.consistent(verts) {
            return true;
        }
        for (&v, h) in verts.iter().zip(homes) {
            self.remove(v, w);
            self.home[v] = h;
        }
        false
    }

    /// Takes a vertex out of its single w-partition, remembering it as home.
    pub fn unplace(&mut self, v: usize) {
        let w = self.copies[v][0];
        self.remove(v, w);
        self.home[v] = Some(w);
    }

    /// Deletes s-partitions whose w-partitions are all empty (or that have
    /// none) and renumbers.
    pub fn drop_empty_spartitions(&mut self) {
        let wparts = &self.wparts;
        self.sparts
            .retain(|s| s.iter().any(|&w| !wparts[w].is_empty()));
        self.renumber();
    }

    /// Removes empty w-partitions from their s-partitions.
    pub fn drop_empty_wpartitions(&mut self) {
        let wparts = &self.wparts;
        for s in &mut self.sparts {
            s.retain(|&w| !wparts[w].is_empty());
        }
        self.drop_empty_spartitions();
    }

    fn renumber(&mut self) {
        for (s, ws) in self.sparts.iter().enumerate() {
            for &w in ws {
                self.spart_of[w] = s;
            }
        }
    }

    pub fn max_cost(&self, s: usize) -> u64 {
        self.sparts[s]
            .iter()
            .map(|&w| self.cost[w])
            .max()
            .unwrap_or(0)
    }
}
