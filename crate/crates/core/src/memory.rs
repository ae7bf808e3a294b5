//! Short-term tabu list and long-term elite memory.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::objective::{Candidate, DecisionSpace, Direction};

/// Hashable bin-index representation of a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateKey(pub Vec<i64>);

/// Bins each coordinate as `floor((x_i - lower_i) / bin_width)`.
pub fn represent(x: &Candidate, space: &DecisionSpace, bin_width: f64) -> CandidateKey {
    debug_assert!(bin_width > 0.0);
    CandidateKey(
        x.coords()
            .iter()
            .zip(space.bounds())
            .map(|(&v, &(lo, _))| ((v - lo) / bin_width).floor() as i64)
            .collect(),
    )
}

/// FIFO tabu list. Tenure equals capacity; re-inserting a key refreshes its age.
/// Capacity zero disables the list.
#[derive(Debug, Clone)]
pub struct TabuList {
    entries: VecDeque<CandidateKey>,
    capacity: usize,
}

impl TabuList {
    pub fn new(capacity: usize) -> Self {
        TabuList {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, key: CandidateKey) {
        if self.capacity == 0 {
            return;
        }
        if let Some(pos) = self.entries.iter().position(|k| *k == key) {
            self.entries.remove(pos);
        }
        self.entries.push_back(key);
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn contains(&self, key: &CandidateKey) -> bool {
        self.entries.contains(key)
    }

    /// Keys from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &CandidateKey> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliteEntry {
    pub candidate: Candidate,
    pub mean: f64,
    seq: u64,
}

/// Bounded archive of the best `(candidate, mean)` pairs ever inserted.
/// On equal means the newer entry wins.
#[derive(Debug, Clone)]
pub struct EliteMemory {
    entries: Vec<EliteEntry>,
    capacity: usize,
    direction: Direction,
    next_seq: u64,
}

impl EliteMemory {
    pub fn new(capacity: usize, direction: Direction) -> Self {
        EliteMemory {
            entries: Vec::with_capacity(capacity),
            capacity,
            direction,
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EliteEntry] {
        &self.entries
    }

    /// Returns whether the pair was admitted.
    pub fn insert(&mut self, candidate: Candidate, mean: f64) -> bool {
        if self.capacity == 0 || mean.is_nan() {
            return false;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let entry = EliteEntry {
            candidate,
            mean,
            seq,
        };
        if self.entries.len() < self.capacity {
            self.entries.push(entry);
            return true;
        }
        // Worst = worst mean, oldest among equals.
        let dir = self.direction;
        let (worst, worst_entry) = self
            .entries
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                if dir.improves(a.mean, b.mean) {
                    std::cmp::Ordering::Less
                } else if dir.improves(b.mean, a.mean) {
                    std::cmp::Ordering::Greater
                } else {
                    b.seq.cmp(&a.seq)
                }
            })
            .expect("full memory with positive capacity is non-empty");
        if dir.improves(worst_entry.mean, mean) {
            return false;
        }
        self.entries[worst] = entry;
        true
    }

    /// Uniformly chosen stored candidate.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Candidate> {
        if self.entries.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let i = rng.random_range(0..self.entries.len());
        Ok(&self.entries[i].candidate)
    }

    /// Best stored entry, if any.
    pub fn best(&self) -> Option<&EliteEntry> {
        let dir = self.direction;
        self.entries.iter().reduce(|a, b| {
            if dir.improves(b.mean, a.mean) || (b.mean == a.mean && b.seq > a.seq) {
                b
            } else {
                a
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Stream;

    fn space() -> DecisionSpace {
        DecisionSpace::interval(1.0, 4.0).unwrap()
    }

    fn key(i: i64) -> CandidateKey {
        CandidateKey(vec![i])
    }

    fn contents(m: &EliteMemory) -> Vec<(f64, f64)> {
        let mut v: Vec<_> = m.entries().iter().map(|e| (e.candidate.first(), e.mean)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn represent_examples() {
        let s = space();
        assert_eq!(represent(&Candidate::scalar(1.0), &s, 0.01), key(0));
        assert_eq!(represent(&Candidate::scalar(1.005), &s, 0.01), key(0));
        assert_eq!(represent(&Candidate::scalar(1.009), &s, 0.01), key(0));
        assert_eq!(represent(&Candidate::scalar(4.0), &s, 0.01), key(300));
    }

    #[test]
    fn tabu_fifo_eviction() {
        let mut t = TabuList::new(2);
        assert!(!t.contains(&key(1)));
        for k in 1..=3 {
            t.insert(key(k));
        }
        assert!(!t.contains(&key(1)));
        assert!(t.contains(&key(2)) && t.contains(&key(3)));
    }

    #[test]
    fn tabu_refresh_on_reinsert() {
        let mut t = TabuList::new(2);
        t.insert(key(1));
        t.insert(key(1));
        assert_eq!(t.len(), 1);
        t.insert(key(2));
        t.insert(key(3));
        assert_eq!(t.iter().cloned().collect::<Vec<_>>(), vec![key(2), key(3)]);

        // Refresh moves a key to the back of the queue.
        let mut t = TabuList::new(2);
        t.insert(key(1));
        t.insert(key(2));
        t.insert(key(1));
        t.insert(key(3));
        assert!(t.contains(&key(1)) && !t.contains(&key(2)));
    }

    #[test]
    fn disabled_tabu_never_contains() {
        let mut t = TabuList::new(0);
        t.insert(key(5));
        assert!(!t.contains(&key(5)));
        assert!(t.is_empty());
    }

    #[test]
    fn tenure_equals_capacity() {
        let mut t = TabuList::new(15);
        t.insert(key(-1));
        for k in 0..14 {
            t.insert(key(k));
            assert!(t.contains(&key(-1)));
        }
        t.insert(key(14));
        assert!(!t.contains(&key(-1)));
    }

    #[test]
    fn elite_keeps_best() {
        let mut m = EliteMemory::new(2, Direction::Minimize);
        m.insert(Candidate::scalar(1.0), 5.0);
        m.insert(Candidate::scalar(2.0), 3.0);
        m.insert(Candidate::scalar(3.0), 4.0);
        assert_eq!(contents(&m), vec![(2.0, 3.0), (3.0, 4.0)]);

        let mut m = EliteMemory::new(2, Direction::Minimize);
        m.insert(Candidate::scalar(1.0), 5.0);
        m.insert(Candidate::scalar(2.0), 3.0);
        assert!(!m.insert(Candidate::scalar(3.0), 9.0));
        assert_eq!(contents(&m), vec![(1.0, 5.0), (2.0, 3.0)]);
    }

    #[test]
    fn elite_is_direction_aware() {
        let mut m = EliteMemory::new(1, Direction::Maximize);
        m.insert(Candidate::scalar(1.0), 1.0);
        m.insert(Candidate::scalar(2.0), 2.0);
        assert_eq!(contents(&m), vec![(2.0, 2.0)]);
    }

    #[test]
    fn elite_ties_keep_newer() {
        let mut m = EliteMemory::new(1, Direction::Minimize);
        m.insert(Candidate::scalar(1.0), 2.0);
        assert!(m.insert(Candidate::scalar(2.0), 2.0));
        assert_eq!(contents(&m), vec![(2.0, 2.0)]);
        assert_eq!(m.best().unwrap().candidate.first(), 2.0);
    }

    #[test]
    fn elite_select_behaviour() {
        let mut rng = Stream::new(3).rng();
        let m = EliteMemory::new(3, Direction::Minimize);
        assert!(matches!(m.select(&mut rng), Err(Error::EmptyMemory)));

        let mut m = EliteMemory::new(3, Direction::Minimize);
        m.insert(Candidate::scalar(1.5), 0.0);
        assert_eq!(m.select(&mut rng).unwrap().first(), 1.5);
    }

    #[test]
    fn elite_select_is_uniform() {
        // Binomial(10000, 0.5) has sd 0.005 in frequency; 0.02 is a 4-sigma band.
        let mut m = EliteMemory::new(2, Direction::Minimize);
        m.insert(Candidate::scalar(1.0), 1.0);
        m.insert(Candidate::scalar(2.0), 2.0);
        let mut rng = Stream::new(17).rng();
        let hits = (0..10_000)
            .filter(|_| m.select(&mut rng).unwrap().first() == 1.0)
            .count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }
}
