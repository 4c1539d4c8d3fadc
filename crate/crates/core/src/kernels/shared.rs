use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

/// Read access to a dense array of doubles, shared or plain.
pub trait ValueSource: Sync {
    fn value(&self, i: usize) -> f64;
}

impl ValueSource for [f64] {
    #[inline]
    fn value(&self, i: usize) -> f64 {
        self[i]
    }
}

impl ValueSource for Vec<f64> {
    #[inline]
    fn value(&self, i: usize) -> f64 {
        self[i]
    }
}

static NEXT_ID: AtomicUsize = AtomicUsize::new(0);

/// Dense array of doubles that several executor threads may write.
///
/// Cells are single-word atomics accessed with relaxed ordering; barriers
/// between s-partitions provide the happens-before edges. Concurrent
/// writers to one cell only ever store identical bits (replicated
/// iterations), except `add`, which is a CAS loop.
#[derive(Debug)]
pub struct SharedVec {
    cells: Vec<AtomicU64>,
    #[cfg_attr(not(test), allow(dead_code))]
    id: usize,
}

impl SharedVec {
    pub fn zeros(n: usize) -> Self {
        Self {
            cells: (0..n).map(|_| AtomicU64::new(0f64.to_bits())).collect(),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let s = Self::zeros(v.len());
        for (c, x) in s.cells.iter().zip(v) {
            c.store(x.to_bits(), Ordering::Relaxed);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        #[cfg(test)]
        trace::record(self.id, i, false);
        f64::from_bits(self.cells[i].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, i: usize, v: f64) {
        #[cfg(test)]
        trace::record(self.id, i, true);
        self.cells[i].store(v.to_bits(), Ordering::Relaxed);
    }

    /// Atomic `cell += v`.
    #[inline]
    pub fn add(&self, i: usize, v: f64) {
        #[cfg(test)]
        {
            trace::record(self.id, i, false);
            trace::record(self.id, i, true);
        }
        let cell = &self.cells[i];
        let mut cur = cell.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(cur) + v).to_bits();
            match cell.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => cur = seen,
            }
        }
    }

    pub fn fill(&self, v: f64) {
        for c in &self.cells {
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| f64::from_bits(c.load(Ordering::Relaxed)))
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn id(&self) -> usize {
        self.id
    }
}

impl ValueSource for SharedVec {
    #[inline]
    fn value(&self, i: usize) -> f64 {
        self.get(i)
    }
}
