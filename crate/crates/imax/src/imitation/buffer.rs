//! Replay storage for expert transitions.

use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Fixed-capacity ring buffer with overwrite-oldest semantics and uniform
/// sampling over the filled region. Single writer; elements are only handed
/// out once fully written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingBuffer<T> {
    data: Vec<T>,
    capacity: usize,
    cursor: usize,
}

impl<T> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        RingBuffer { data: Vec::with_capacity(capacity.min(1 << 20)), capacity, cursor: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, value: T) {
        if self.data.len() < self.capacity {
            self.data.push(value);
        } else {
            self.data[self.cursor] = value;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// `k` independent uniform draws (with replacement) from the filled part.
    pub fn sample<'a>(&'a self, k: usize, rng: &mut Rng) -> Vec<&'a T> {
        assert!(!self.is_empty(), "sampling from an empty buffer");
        (0..k).map(|_| &self.data[rng.gen_range(0..self.data.len())]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
}

/// One stored expert tuple from an ally's point of view: local observation,
/// executed action, per-enemy-slot next-state atom targets, and the follow-up
/// observation needed by the discounted value term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalTuple {
    pub agent: usize,
    pub obs: Vec<f64>,
    pub action: usize,
    /// Atom class per enemy slot; absent slots carry the vanish sentinel.
    pub targets: Vec<usize>,
    /// Presence flag per enemy slot at the pre-step observation.
    pub present: Vec<bool>,
    pub next_obs: Vec<f64>,
    /// Valid-action mask at the follow-up observation.
    pub next_mask: Vec<bool>,
    /// Step index within the episode; occupancy expectations weight the
    /// sample by `gamma^step`.
    pub step: u32,
    pub episode_start: bool,
    pub terminal: bool,
}

/// An observation with the data needed to evaluate the soft value there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObsEntry {
    pub agent: usize,
    pub obs: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Expert storage for the local-observation imitator: transition tuples,
/// episode-start observations for the initial-state term, and horizon-end
/// observations for its finite-window correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalExpertBuffer {
    pub tuples: RingBuffer<LocalTuple>,
    /// Episode-start observations.
    pub starts: RingBuffer<ObsEntry>,
    /// Observations after each episode's final step.
    pub ends: RingBuffer<ObsEntry>,
    /// Episode length of the collecting game.
    pub horizon: u32,
}

impl LocalExpertBuffer {
    pub fn new(capacity: usize, horizon: u32) -> Self {
        let side = (capacity / 16).max(64);
        LocalExpertBuffer {
            tuples: RingBuffer::new(capacity),
            starts: RingBuffer::new(side),
            ends: RingBuffer::new(side),
            horizon,
        }
    }

    /// `start_mask` is the valid-action mask at the tuple's observation,
    /// needed when the tuple opens an episode.
    pub fn push(&mut self, tuple: LocalTuple, start_mask: &[bool]) {
        if tuple.episode_start {
            self.starts.push(ObsEntry {
                agent: tuple.agent,
                obs: tuple.obs.clone(),
                mask: start_mask.to_vec(),
            });
        }
        if tuple.terminal {
            self.ends.push(ObsEntry {
                agent: tuple.agent,
                obs: tuple.next_obs.clone(),
                mask: tuple.next_mask.clone(),
            });
        }
        self.tuples.push(tuple);
    }

    /// Uniform batch of tuples plus start/end observation samples.
    pub fn sample_batch(&self, k: usize, side: usize, rng: &mut Rng) -> LocalBatch<'_> {
        LocalBatch {
            tuples: self.tuples.sample(k, rng),
            starts: self.starts.sample(side.min(self.starts.len().max(1)), rng),
            ends: if self.ends.is_empty() {
                Vec::new()
            } else {
                self.ends.sample(side.min(self.ends.len()), rng)
            },
            horizon: self.horizon,
        }
    }

    /// Everything in the buffer, as one batch.
    pub fn full_batch(&self) -> LocalBatch<'_> {
        LocalBatch {
            tuples: self.tuples.iter().collect(),
            starts: self.starts.iter().collect(),
            ends: self.ends.iter().collect(),
            horizon: self.horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// A sampled view into the buffer for one objective evaluation.
pub struct LocalBatch<'a> {
    pub tuples: Vec<&'a LocalTuple>,
    pub starts: Vec<&'a ObsEntry>,
    pub ends: Vec<&'a ObsEntry>,
    pub horizon: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn overwrites_oldest_when_full() {
        let mut buf = RingBuffer::new(3);
        for i in 0..5 {
            buf.push(i);
        }
        let mut contents: Vec<i32> = buf.iter().copied().collect();
        contents.sort_unstable();
        assert_eq!(contents, vec![2, 3, 4]);
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn sampling_stays_in_filled_region() {
        let mut buf = RingBuffer::new(10);
        buf.push(7u8);
        buf.push(9u8);
        let mut rng = rng::stream(1, "buf", 0);
        for v in buf.sample(100, &mut rng) {
            assert!(*v == 7 || *v == 9);
        }
    }
}
