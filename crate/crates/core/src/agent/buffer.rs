//! Experience buffers: an unbounded rollout buffer drained once per
//! collection round, and a FIFO replay buffer sampled with replacement.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::core::Transition;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// On-policy buffer: append during collection, drain fully before the next
/// round begins.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutBuffer {
    items: Vec<Transition>,
}

impl RolloutBuffer {
    pub fn new() -> RolloutBuffer {
        RolloutBuffer::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.items.push(t);
    }

    /// Returns all transitions in insertion order and leaves the buffer empty.
    pub fn drain(&mut self) -> Vec<Transition> {
        std::mem::take(&mut self.items)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Off-policy pool with bounded capacity and first-in-first-out eviction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    insert_count: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<ReplayBuffer> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be >= 1".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity),
            insert_count: 0,
        })
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        self.insert_count += 1;
    }

    /// Draws `n` transitions uniformly with replacement; the buffer is
    /// unchanged.
    pub fn sample(&self, n: usize, rng: &mut SplitMix64) -> Result<Vec<Transition>> {
        if self.items.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        let len = self.items.len() as u64;
        Ok((0..n)
            .map(|_| self.items[rng.gen_range(len) as usize].clone())
            .collect())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn insert_count(&self) -> u64 {
        self.insert_count
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

pub fn buffer_push_rollout(buffer: &mut RolloutBuffer, t: Transition) {
    buffer.push(t);
}

pub fn buffer_push_replay(buffer: &mut ReplayBuffer, t: Transition) {
    buffer.push(t);
}

pub fn buffer_sample(buffer: &ReplayBuffer, n: usize, rng: &mut SplitMix64) -> Result<Vec<Transition>> {
    buffer.sample(n, rng)
}

pub fn buffer_drain(buffer: &mut RolloutBuffer) -> Vec<Transition> {
    buffer.drain()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(tag: u64) -> Transition {
        Transition {
            obs: tag,
            action: 0,
            reward: 0.0,
            next_obs: tag,
            terminated: false,
            truncated: false,
            agent_id: None,
        }
    }

    #[test]
    fn replay_evicts_fifo() {
        let mut buf = ReplayBuffer::new(2).unwrap();
        buf.push(t(1));
        buf.push(t(2));
        buf.push(t(3));
        let contents: Vec<u64> = buf.iter().map(|x| x.obs).collect();
        assert_eq!(contents, vec![2, 3]);
        assert_eq!(buf.insert_count(), 3);
    }

    #[test]
    fn replay_capacity_one() {
        let mut buf = ReplayBuffer::new(1).unwrap();
        buf.push(t(1));
        buf.push(t(2));
        let contents: Vec<u64> = buf.iter().map(|x| x.obs).collect();
        assert_eq!(contents, vec![2]);
    }

    #[test]
    fn rollout_preserves_order_and_drains() {
        let mut buf = RolloutBuffer::new();
        buf.push(t(1));
        buf.push(t(2));
        let out = buf.drain();
        assert_eq!(out.iter().map(|x| x.obs).collect::<Vec<_>>(), vec![1, 2]);
        assert!(buf.is_empty());
        assert!(buf.drain().is_empty());
    }

    #[test]
    fn sample_from_singleton() {
        let mut buf = ReplayBuffer::new(8).unwrap();
        buf.push(t(7));
        let mut rng = SplitMix64::new(0);
        let got = buf.sample(3, &mut rng).unwrap();
        assert!(got.iter().all(|x| x.obs == 7));
        assert_eq!(buf.len(), 1);
    }

    #[test]
    fn sample_from_empty_is_an_error() {
        let buf = ReplayBuffer::new(8).unwrap();
        let mut rng = SplitMix64::new(0);
        assert!(matches!(buf.sample(1, &mut rng), Err(crate::Error::EmptyBuffer)));
    }

    proptest! {
        #[test]
        fn replay_never_exceeds_capacity(
            capacity in 1usize..32,
            ops in proptest::collection::vec(0u8..3, 0..200),
        ) {
            let mut buf = ReplayBuffer::new(capacity).unwrap();
            let mut rng = SplitMix64::new(11);
            let mut pushed = 0u64;
            for op in ops {
                match op {
                    0 | 1 => {
                        buf.push(t(pushed));
                        pushed += 1;
                    }
                    _ => {
                        let _ = buf.sample(4, &mut rng);
                    }
                }
                prop_assert!(buf.len() <= capacity);
            }
            // FIFO: surviving items are the most recent pushes in order.
            let expect_len = (pushed as usize).min(capacity);
            let contents: Vec<u64> = buf.iter().map(|x| x.obs).collect();
            let expected: Vec<u64> = (pushed - expect_len as u64..pushed).collect();
            prop_assert_eq!(contents, expected);
        }
    }
}
