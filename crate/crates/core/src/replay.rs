//! Bounded FIFO experience memory.
//!
//! High-reward transitions are stored several times so that uniform sampling
//! recalls them more often. Copies share one record but count separately
//! toward capacity and are evicted independently, oldest first.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::Rng;

use crate::env::ObservationFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: ObservationFrame,
    pub action_index: usize,
    pub reward: f64,
    pub done: bool,
    pub episode_id: u64,
    pub step_index: u64,
}

/// Consecutive transitions of one episode, oldest first.
#[derive(Debug, Clone)]
pub struct TransitionWindow {
    pub transitions: Vec<Arc<Transition>>,
}

impl TransitionWindow {
    pub fn new(transitions: Vec<Arc<Transition>>) -> Self {
        Self { transitions }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Zero-based positions that receive a loss term: everything after the
    /// burn-in prefix, except a non-terminal last step, which only bootstraps.
    pub fn trainable_positions(&self, burn_in: usize) -> Vec<usize> {
        let n = self.transitions.len();
        (burn_in..n)
            .filter(|&j| j + 1 < n || self.transitions[j].done)
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Entry {
    seq: u64,
    record: Arc<Transition>,
}

#[derive(Debug, Clone)]
struct EpisodeRun {
    first_step: u64,
    /// Live records with their remaining copy counts.
    steps: VecDeque<(Arc<Transition>, usize)>,
    terminal: bool,
}

impl EpisodeRun {
    fn eligible(&self, len: usize, burn_in: usize) -> bool {
        self.steps.len() >= len || (self.terminal && self.steps.len() >= burn_in + 2)
    }
}

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    dup_c: f64,
    dup_r_scale: f64,
    ring: VecDeque<Entry>,
    episodes: BTreeMap<u64, EpisodeRun>,
    next_seq: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize, dup_c: f64, dup_r_scale: f64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        assert!(dup_r_scale > 0.0, "duplication reward scale must be positive");
        Self {
            capacity,
            dup_c,
            dup_r_scale,
            ring: VecDeque::with_capacity(capacity),
            episodes: BTreeMap::new(),
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn clear(&mut self) {
        self.ring.clear();
        self.episodes.clear();
    }

    /// `1 + floor(c * max(0, r) / r_scale)`.
    pub fn copies_for(&self, reward: f64) -> usize {
        1 + (self.dup_c * reward.max(0.0) / self.dup_r_scale).floor() as usize
    }

    /// Sequence numbers of stored entries, oldest first.
    pub fn sequence_numbers(&self) -> impl Iterator<Item = u64> + '_ {
        self.ring.iter().map(|e| e.seq)
    }

    /// Stores a transition, duplicated according to its reward, and returns the
    /// number of copies. Steps of an episode must arrive in order.
    pub fn push(&mut self, t: Transition) -> usize {
        let copies = self.copies_for(t.reward);
        let record = Arc::new(t);
        let run = self
            .episodes
            .entry(record.episode_id)
            .or_insert_with(|| EpisodeRun {
                first_step: record.step_index,
                steps: VecDeque::new(),
                terminal: false,
            });
        assert!(!run.terminal, "episode {} already ended", record.episode_id);
        assert_eq!(
            record.step_index,
            run.first_step + run.steps.len() as u64,
            "episode {} steps must be pushed in order",
            record.episode_id
        );
        run.steps.push_back((Arc::clone(&record), copies));
        run.terminal = record.done;
        for _ in 0..copies {
            self.ring.push_back(Entry {
                seq: self.next_seq,
                record: Arc::clone(&record),
            });
            self.next_seq += 1;
        }
        while self.ring.len() > self.capacity {
            self.evict_oldest();
        }
        copies
    }

    fn evict_oldest(&mut self) {
        let Some(entry) = self.ring.pop_front() else { return };
        let id = entry.record.episode_id;
        let run = self.episodes.get_mut(&id).expect("ring entry has an episode");
        let front = run.steps.front_mut().expect("episode run holds the evicted step");
        debug_assert_eq!(front.0.step_index, entry.record.step_index);
        front.1 -= 1;
        if front.1 == 0 {
            run.steps.pop_front();
            run.first_step += 1;
        }
        if run.steps.is_empty() {
            self.episodes.remove(&id);
        }
    }

    fn window_for(&self, anchor: &Transition, len: usize, burn_in: usize) -> Option<TransitionWindow> {
        let run = &self.episodes[&anchor.episode_id];
        if !run.eligible(len, burn_in) {
            return None;
        }
        let last = run.first_step + run.steps.len() as u64 - 1;
        let start = anchor
            .step_index
            .min((last + 1).saturating_sub(len as u64))
            .max(run.first_step);
        let from = (start - run.first_step) as usize;
        let to = (from + len).min(run.steps.len());
        Some(TransitionWindow::new(
            run.steps.range(from..to).map(|(r, _)| Arc::clone(r)).collect(),
        ))
    }

    /// Draws `batch` windows. Each draw picks a stored entry uniformly (so copies
    /// weight their episodes) and returns up to `len` consecutive steps of its
    /// episode containing it. Shorter windows only occur at terminal episode ends
    /// and are at least `burn_in + 2` long.
    pub fn sample_windows<R: Rng + ?Sized>(
        &self,
        batch: usize,
        len: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<Vec<TransitionWindow>> {
        if self.ring.is_empty() {
            return Err(Error::EmptyMemory);
        }
        if !self.episodes.values().any(|r| r.eligible(len, burn_in)) {
            return Err(Error::NoEligibleWindow { len, burn_in });
        }
        let mut out = Vec::with_capacity(batch);
        while out.len() < batch {
            let anchor = self.sample_entry(rng).expect("memory is non-empty");
            if let Some(w) = self.window_for(anchor, len, burn_in) {
                out.push(w);
            }
        }
        Ok(out)
    }

    /// One stored entry, uniformly over entries (so a record with `n` copies is
    /// `n` times as likely as a single copy).
    pub fn sample_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&Transition> {
        if self.ring.is_empty() {
            return None;
        }
        Some(&self.ring[rng.gen_range(0..self.ring.len())].record)
    }

    /// Every stored entry in ring order, for checkpointing.
    pub fn entries(&self) -> impl Iterator<Item = (&Transition, u64)> {
        self.ring.iter().map(|e| (e.record.as_ref(), e.seq))
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn dup_params(&self) -> (f64, f64) {
        (self.dup_c, self.dup_r_scale)
    }

    /// Rebuilds a memory from checkpointed records: each record with the sequence
    /// numbers of its live copies, oldest record first.
    pub fn restore(
        capacity: usize,
        dup_c: f64,
        dup_r_scale: f64,
        records: Vec<(Transition, Vec<u64>)>,
        next_seq: u64,
    ) -> Result<Self> {
        let mut mem = Self::new(capacity, dup_c, dup_r_scale);
        let mut ring: Vec<Entry> = Vec::new();
        for (t, seqs) in records {
            if seqs.is_empty() {
                return Err(Error::CheckpointCorrupt("replay record without copies".into()));
            }
            let record = Arc::new(t);
            let run = mem
                .episodes
                .entry(record.episode_id)
                .or_insert_with(|| EpisodeRun {
                    first_step: record.step_index,
                    steps: VecDeque::new(),
                    terminal: false,
                });
            if record.step_index != run.first_step + run.steps.len() as u64 {
                return Err(Error::CheckpointCorrupt("replay steps out of order".into()));
            }
            run.steps.push_back((Arc::clone(&record), seqs.len()));
            run.terminal = record.done;
            ring.extend(seqs.into_iter().map(|seq| Entry {
                seq,
                record: Arc::clone(&record),
            }));
        }
        ring.sort_by_key(|e| e.seq);
        if ring.len() > capacity || ring.last().is_some_and(|e| e.seq >= next_seq) {
            return Err(Error::CheckpointCorrupt("replay ring inconsistent".into()));
        }
        mem.ring = ring.into();
        mem.next_seq = next_seq;
        Ok(mem)
    }

    /// Distinct records, oldest first, each with its live copy sequence numbers.
    pub fn records(&self) -> Vec<(&Transition, Vec<u64>)> {
        let mut out: Vec<(&Transition, Vec<u64>)> = Vec::new();
        for e in &self.ring {
            match out.last_mut() {
                Some((t, seqs)) if std::ptr::eq(*t, e.record.as_ref()) => seqs.push(e.seq),
                _ => out.push((e.record.as_ref(), vec![e.seq])),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(episode: u64, step: u64, reward: f64, done: bool) -> Transition {
        Transition {
            observation: ObservationFrame::blank(2, 2),
            action_index: (step % 5) as usize,
            reward,
            done,
            episode_id: episode,
            step_index: step,
        }
    }

    #[test]
    fn duplication_counts() {
        let mut m = ReplayMemory::new(100, 3.0, 10.0);
        assert_eq!(m.push(tr(0, 0, 0.0, false)), 1);
        assert_eq!(m.push(tr(0, 1, 10.0, false)), 4);
        assert_eq!(m.push(tr(0, 2, -0.01, false)), 1);
        assert_eq!(m.push(tr(0, 3, 5.0, false)), 2);
        assert_eq!(m.len(), 8);
    }

    #[test]
    fn clear_empties() {
        let mut m = ReplayMemory::new(10, 3.0, 10.0);
        m.push(tr(0, 0, 0.0, false));
        m.clear();
        assert_eq!(m.len(), 0);
        assert!(matches!(
            m.sample_windows(1, 8, 4, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::EmptyMemory)
        ));
    }

    #[test]
    fn overflow_evicts_oldest() {
        let mut m = ReplayMemory::new(2, 3.0, 10.0);
        assert_eq!(m.push(tr(0, 0, 10.0, false)), 4);
        assert_eq!(m.len(), 2);
        assert_eq!(m.sequence_numbers().collect::<Vec<_>>(), vec![2, 3]);
        m.push(tr(0, 1, 0.0, false));
        assert_eq!(m.sequence_numbers().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn windows_stay_in_episode() {
        let mut m = ReplayMemory::new(100, 3.0, 10.0);
        for s in 0..10 {
            m.push(tr(7, s, 0.0, s == 9));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in m.sample_windows(200, 8, 4, &mut rng).unwrap() {
            assert_eq!(w.len(), 8);
            assert!(w.transitions.iter().all(|t| t.episode_id == 7));
            assert!(w.transitions.windows(2).all(|p| p[1].step_index == p[0].step_index + 1));
        }
    }

    #[test]
    fn short_terminal_episode_is_eligible() {
        let mut m = ReplayMemory::new(100, 3.0, 10.0);
        for s in 0..6 {
            m.push(tr(0, s, 0.0, s == 5));
        }
        let w = m.sample_windows(5, 8, 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(w.iter().all(|w| w.len() == 6));
        assert_eq!(w[0].trainable_positions(4), vec![4, 5]);
    }

    #[test]
    fn ineligible_memory_errors() {
        let mut m = ReplayMemory::new(100, 3.0, 10.0);
        for s in 0..5 {
            m.push(tr(0, s, 0.0, s == 4));
        }
        m.push(tr(1, 0, 0.0, false));
        assert!(matches!(
            m.sample_windows(1, 8, 4, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::NoEligibleWindow { .. })
        ));
    }

    #[test]
    fn trainable_positions_of_full_window() {
        let w = TransitionWindow::new((0..8).map(|s| Arc::new(tr(0, s, 0.0, false))).collect());
        assert_eq!(w.trainable_positions(4), vec![4, 5, 6]);
        let w = TransitionWindow::new((0..8).map(|s| Arc::new(tr(0, s, 0.0, s == 7))).collect());
        assert_eq!(w.trainable_positions(4), vec![4, 5, 6, 7]);
    }

    #[test]
    fn batch_size_honoured() {
        let mut m = ReplayMemory::new(1000, 3.0, 10.0);
        for e in 0..3 {
            for s in 0..20 {
                m.push(tr(e, s, 0.0, s == 19));
            }
        }
        let w = m.sample_windows(40, 8, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(w.len(), 40);
    }

    #[test]
    fn restore_round_trip() {
        let mut m = ReplayMemory::new(30, 3.0, 10.0);
        for e in 0..3 {
            for s in 0..8 {
                m.push(tr(e, s, if s == 3 { 10.0 } else { 0.0 }, s == 7));
            }
        }
        let records: Vec<(Transition, Vec<u64>)> =
            m.records().into_iter().map(|(t, s)| (t.clone(), s)).collect();
        let r = ReplayMemory::restore(30, 3.0, 10.0, records, m.next_seq()).unwrap();
        assert_eq!(
            r.sequence_numbers().collect::<Vec<_>>(),
            m.sequence_numbers().collect::<Vec<_>>()
        );
        let mut a = ChaCha8Rng::seed_from_u64(4);
        let mut b = a.clone();
        let wa = m.sample_windows(10, 8, 4, &mut a).unwrap();
        let wb = r.sample_windows(10, 8, 4, &mut b).unwrap();
        for (x, y) in wa.iter().zip(&wb) {
            let sx: Vec<_> = x.transitions.iter().map(|t| (t.episode_id, t.step_index)).collect();
            let sy: Vec<_> = y.transitions.iter().map(|t| (t.episode_id, t.step_index)).collect();
            assert_eq!(sx, sy);
        }
    }
}
