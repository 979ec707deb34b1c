//! Deterministic discrete-event engine.
//!
//! Events are ordered by fire time and then by the sequence number assigned at
//! scheduling, so ties are dispatched in submission order. Cancellation is
//! lazy: the payload is dropped and its heap entry is skipped when popped.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

/// Simulated time in whole seconds since the simulation epoch.
pub type SimTime = u64;

pub const HOUR: SimTime = 3600;

/// Opaque handle returned by [`EventQueue::schedule`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn sequence_id(self) -> u64 {
        self.0
    }
}

#[derive(Debug)]
pub struct EventQueue<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<(SimTime, u64)>>,
    pending: HashMap<u64, E>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::starting_at(0)
    }

    pub fn starting_at(now: SimTime) -> Self {
        EventQueue {
            now,
            next_seq: 0,
            heap: BinaryHeap::new(),
            pending: HashMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn schedule(&mut self, at: SimTime, event: E) -> Result<EventHandle> {
        if at < self.now {
            return Err(Error::EventInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse((at, seq)));
        self.pending.insert(seq, event);
        Ok(EventHandle(seq))
    }

    /// Schedules `event` `delay` seconds from now. Never fails.
    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> EventHandle {
        self.schedule(self.now + delay, event)
            .expect("relative schedule cannot be in the past")
    }

    /// Returns the payload if the event had not fired or been cancelled yet.
    pub fn cancel(&mut self, handle: EventHandle) -> Option<E> {
        self.pending.remove(&handle.0)
    }

    pub fn is_scheduled(&self, handle: EventHandle) -> bool {
        self.pending.contains_key(&handle.0)
    }

    /// Pops the next live event with fire time `<= end`, advancing the clock.
    pub fn pop_until(&mut self, end: SimTime) -> Option<(SimTime, EventHandle, E)> {
        while let Some(&Reverse((at, seq))) = self.heap.peek() {
            if at > end {
                return None;
            }
            self.heap.pop();
            if let Some(event) = self.pending.remove(&seq) {
                debug_assert!(at >= self.now);
                self.now = at;
                return Some((at, EventHandle(seq), event));
            }
        }
        None
    }

    /// Dispatches every event with fire time `<= end`, including events the
    /// handler schedules along the way, then sets the clock to `end`.
    pub fn run_until<F>(&mut self, end: SimTime, mut handler: F) -> usize
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let mut count = 0;
        while let Some((at, _, event)) = self.pop_until(end) {
            handler(self, at, event);
            count += 1;
        }
        if end > self.now {
            self.now = end;
        }
        count
    }
}
